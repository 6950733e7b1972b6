//! Mollified perturbed solves on a ladder of scales converging to the unmollified one.

use nslab::experiments::{preset, simulate};

fn main() -> nslab::Result<()> {
    let cfg = preset("mollified-ladder")?;
    let sim = simulate(&cfg)?;
    println!("{:>6} {:>14} {:>14}", "eps", "|v(T)|", "to next rung");
    for rung in &sim.ladder {
        let last = rung.run.v.last().expect("non-empty run");
        let step = rung.step.map_or("-".to_string(), |s| format!("{s:.4e}"));
        println!("{:>6} {:>14.6e} {step:>14}", rung.eps, last.l2_norm());
    }
    Ok(())
}
