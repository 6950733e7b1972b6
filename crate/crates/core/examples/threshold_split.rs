//! Pointwise threshold split of rough data and the gap split with its ratios.

use nslab::decompose::{gap_split, kato_check, threshold_split};
use nslab::fields::random_solenoidal;
use nslab::Grid;

fn main() -> nslab::Result<()> {
    let grid = Grid::cube(32)?;
    let u0 = random_solenoidal(&grid, 11, 4, 100.0)?;
    println!("{:>6} {:>8} {:>12} {:>12}", "s", "low", "|low|_3", "|x|^-1/2 high");
    for s in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let r = threshold_split(&u0, s, [0.0; 3])?;
        let kept = r.mask.iter().filter(|&&m| m).count();
        println!("{s:>6} {kept:>8} {:>12.4e} {:>12.4e}", r.norms.low_l3, r.norms.high_weighted);
    }
    let gap = gap_split(&u0, 2.5, [0.0; 3])?;
    println!("{}", gap.report());
    let kato = kato_check(&gap.w0, 0.1, None)?;
    println!("small-data gate on w0: |w0|_3 = {:.4e}, pass = {}", kato.l3, kato.pass);
    Ok(())
}
