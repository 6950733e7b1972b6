//! A bump translated a distance `K` from the weight centre has `|x|^-1/2` norm of order `K^-1/2`.

use nslab::fields::{make_bump, BumpSpec, Profile};
use nslab::norms::{weighted_lp_norm, Weight};
use nslab::Grid;

fn main() -> nslab::Result<()> {
    let grid = Grid::cube(64)?;
    let base = BumpSpec::new(Profile::Compact { radius: 0.4 }, 1.0);
    let weight = Weight::new([0.0; 3], 0.0, -0.5);
    let mut prev: Option<(f64, f64)> = None;
    println!("{:>6} {:>12} {:>10}", "K", "norm", "slope");
    for k in [0.8, 1.2, 1.8, 2.6] {
        let n = weighted_lp_norm(&make_bump(&base.shifted([1.0, 1.0, 1.0], k), &grid)?, 2.0, &weight)?;
        let slope = prev.map_or(String::new(), |(k0, n0)| format!("{:.4}", (n / n0).ln() / (k / k0).ln()));
        println!("{k:>6} {n:>12.5e} {slope:>10}");
        prev = Some((k, n));
    }
    Ok(())
}
