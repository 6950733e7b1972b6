//! Planar Taylor-Green flow and its extension to three dimensions stay in lockstep.

use nslab::fields::{extend_2d_to_3d, taylor_green_2d};
use nslab::solver::{solve_2d_nse, solve_nse, SolverConfig};
use nslab::Grid;

fn main() -> nslab::Result<()> {
    let (g2, g3) = (Grid::square(32)?, Grid::cube(32)?);
    let w0 = taylor_green_2d(&g2, 1.0)?;
    let cfg = SolverConfig::new(1e-3, 0.5, 100);
    let planar = solve_2d_nse(&w0, &cfg)?;
    let spatial = solve_nse(&extend_2d_to_3d(&w0, &g3)?, &cfg)?;
    println!("{:>6} {:>12} {:>12} {:>12}", "t", "|w|", "|u - ext w|", "|u3|_inf");
    for i in 0..planar.len() {
        let t = planar.times()[i];
        let ext = extend_2d_to_3d(&planar.snapshots()[i], &g3)?;
        let u = &spatial.snapshots()[i];
        let gap = u.sub(&ext)?.l2_norm();
        let u3 = u.component(2).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!("{t:>6.3} {:>12.5e} {gap:>12.3e} {u3:>12.3e}", planar.snapshots()[i].l2_norm());
    }
    println!("exact decay factor at t = 0.5: {:.6}", (-1.0f64).exp());
    Ok(())
}
