//! Axisymmetric data without swirl stays swirl-free under the solver.

use nslab::fields::{make_axisym_zero_swirl, swirl_component, AxisymSpec};
use nslab::solver::{solve_nse, SolverConfig};
use nslab::Grid;
use std::f64::consts::PI;

fn main() -> nslab::Result<()> {
    let grid = Grid::new(3, 32, 2.0 * PI)?;
    let ring = make_axisym_zero_swirl(&AxisymSpec::gaussian_ring(1.0, 1.5), &grid)?;
    println!("taper truncation: {}", ring.truncated);
    let traj = solve_nse(&ring.field, &SolverConfig::new(0.01, 0.5, 10))?;
    println!("{:>6} {:>12} {:>12}", "t", "|u|", "|u_theta|_inf");
    for (t, u) in traj.times().iter().zip(traj.snapshots()) {
        let swirl = swirl_component(u)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!("{t:>6.2} {:>12.5e} {swirl:>12.3e}", u.l2_norm());
    }
    Ok(())
}
