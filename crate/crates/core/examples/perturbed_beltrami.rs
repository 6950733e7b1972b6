//! Small compactly supported perturbation of a weak ABC flow, with the smallness gates and
//! the runtime energy bound `|v(t)|^2 <= |v0|^2 exp(int |w|_inf^2)`.

use nslab::experiments::{preset, simulate};

fn main() -> nslab::Result<()> {
    let cfg = preset("beltrami-perturbation")?;
    let sim = simulate(&cfg)?;
    if let Some(s) = &sim.smallness {
        println!("|x|^-1/2 v0 in L^2 : {:.4e}", s.norm);
        println!("reference size K    : {:.4e}", s.size);
        println!("general threshold   : {:.4e}", s.general);
        println!("Beltrami threshold  : {:.4e}", s.beltrami);
        println!("below both          : {}", s.below());
    }
    if let Some(m) = &sim.monitor {
        println!("max |v|^2 / (A e^K) : {:.6} over {} steps", m.max_ratio, m.rows.len());
    }
    println!("energy identity residual of w + v: {:.3e} E0", sim.audit.relative());
    Ok(())
}
