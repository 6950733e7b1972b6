//! Pressure from `R (x) R : (u (x) u)`. For a Beltrami field it is `-|w|^2 / 2` up to a constant.

use nslab::fields::{make_abc_flow, random_solenoidal, BeltramiSpec};
use nslab::solver::pressure_from_velocity;
use nslab::Grid;

fn main() -> nslab::Result<()> {
    let grid = Grid::cube(32)?;
    let w = make_abc_flow(&BeltramiSpec::abc(1.0, 0.7, 0.3), &grid)?;
    let p = pressure_from_velocity(&w)?;
    let half_sq: Vec<f64> = (0..grid.len()).map(|i| -0.5 * (0..3).map(|c| w.component(c)[i].powi(2)).sum::<f64>()).collect();
    let (pm, qm) = (p.mean()[0], half_sq.iter().sum::<f64>() / grid.len() as f64);
    let err = p.data().iter().zip(&half_sq).map(|(a, b)| (a - pm - (b - qm)).abs()).fold(0.0, f64::max);
    println!("Beltrami: max |P + |w|^2/2| after removing means = {err:.3e}");

    // generic data: the pressure solves -lap P = div div (u (x) u)
    let u = random_solenoidal(&grid, 7, 4, 1.0)?;
    let p = pressure_from_velocity(&u)?;
    println!("random field: |P|_inf = {:.4e}, mean = {:.1e}", p.max_abs(), p.mean()[0]);
    Ok(())
}
