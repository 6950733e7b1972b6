use super::Grid;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        p.borrow_mut()
            .entry((n, forward))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if forward {
                    planner.plan_fft_forward(n)
                } else {
                    planner.plan_fft_inverse(n)
                }
            })
            .clone()
    })
}

fn transform_axes(grid: &Grid, data: &mut [Complex64], forward: bool) {
    let n = grid.n();
    let d = grid.dims();
    let fft = plan(n, forward);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // last axis is contiguous
    fft.process_with_scratch(data, &mut scratch);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..d - 1 {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = stride * n;
        for base in (0..data.len()).step_by(block) {
            for off in 0..stride {
                let start = base + off;
                for (j, l) in line.iter_mut().enumerate() {
                    *l = data[start + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, l) in line.iter().enumerate() {
                    data[start + j * stride] = *l;
                }
            }
        }
    }
}

/// Sign `(-1)^(sum of axis indices)`; shifts the DFT origin from `x = -L` to `x = 0`.
fn apply_phase(grid: &Grid, data: &mut [Complex64]) {
    for (i, z) in data.iter_mut().enumerate() {
        let m = grid.multi_index(i);
        if (m[0] + m[1] + m[2]) % 2 == 1 {
            *z = -*z;
        }
    }
}

pub(super) fn forward(grid: &Grid, data: &mut [Complex64]) {
    transform_axes(grid, data, true);
    let norm = 1.0 / grid.len() as f64;
    data.iter_mut().for_each(|z| *z *= norm);
    apply_phase(grid, data);
}

pub(super) fn inverse(grid: &Grid, data: &mut [Complex64]) {
    apply_phase(grid, data);
    transform_axes(grid, data, false);
}
