//! Pseudo-spectral laboratory for weighted partial-regularity diagnostics of the
//! three-dimensional incompressible Navier-Stokes equation on a periodic box.
//!
//! The crate is organised bottom-up:
//! [`grid`] holds the box, fields and Fourier multipliers, [`fields`] builds initial
//! data, [`norms`] evaluates weighted and mixed norms, [`solver`] integrates the
//! direct, perturbed and mollified systems and audits energy, [`regularity`],
//! [`decompose`] and [`inequalities`] implement the diagnostics, and [`io`] /
//! [`config`] / [`experiments`] drive reproducible runs.

pub mod cli;
pub mod config;
pub mod decompose;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod grid;
pub mod inequalities;
pub mod io;
pub mod norms;
pub mod regularity;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Field, Grid, Spectrum};

/// Configure the global rayon pool from `NSLAB_THREADS`, if set. Safe to call repeatedly.
pub fn init_threads() {
    if let Ok(v) = std::env::var("NSLAB_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
