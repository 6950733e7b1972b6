//! Weighted interpolation and Riesz-transform bounds over a seeded ensemble.

use nslab::inequalities::{ckn_params_valid, verify_ckn_inequality, verify_stein_inequality, CknParams, Ensemble};
use nslab::Grid;
use num_rational::Rational64;

fn main() -> nslab::Result<()> {
    let ens = Ensemble::new(Grid::cube(32)?, 12, 1);
    let mus = [1e-4, 1e-2, 1.0];
    let mut sets = vec![CknParams::cubic()];
    sets.extend([7, 12, 24].map(|n| CknParams::gradient_family(Rational64::new(n, 2))));
    for p in &sets {
        let valid = ckn_params_valid(p);
        let v = verify_ckn_inequality(p, &ens, &mus)?;
        println!("{:<32} valid {} max ratio {:.4} mu spread {:.3}", p.label(), valid.valid, v.max_ratio(), v.mu_variation());
    }
    for v in verify_stein_inequality(2.0, 0.5, &[(0, 0), (0, 1), (1, 2)], &ens, &mus)? {
        println!("{:<32} max ratio {:.4}", v.label, v.max_ratio());
    }
    Ok(())
}
