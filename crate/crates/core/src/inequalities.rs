//! Weighted interpolation (Caffarelli-Kohn-Nirenberg type) and weighted Riesz-transform
//! inequalities: exact parameter validation and seeded ensemble harnesses.

use crate::error::{invalid, Result};
use crate::fields::GaussianSuperposition;
use crate::grid::{ops, Field, Grid};
use crate::norms::{weighted_lp_norm, Weight};
use num_rational::Rational64;
use rayon::prelude::*;

/// Exponents of `|sigma^gamma f|_{L^r} <= C |sigma^alpha grad f|_{L^2}^theta |sigma^beta f|_{L^2}^(1-theta)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CknParams {
    pub r: Rational64,
    pub theta: Rational64,
    pub gamma: Rational64,
    pub alpha: Rational64,
    pub beta: Rational64,
}

fn q(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

impl CknParams {
    pub fn new(r: Rational64, theta: Rational64, gamma: Rational64, alpha: Rational64, beta: Rational64) -> Self {
        CknParams { r, theta, gamma, alpha, beta }
    }

    /// Converts through the nearest small rational; exact for dyadic and short decimal inputs.
    pub fn from_f64(r: f64, theta: f64, gamma: f64, alpha: f64, beta: f64) -> Result<Self> {
        let c = |x: f64| {
            Rational64::approximate_float(x).ok_or_else(|| crate::Error::InvalidArgument(format!("{x} is not representable")))
        };
        Ok(CknParams::new(c(r)?, c(theta)?, c(gamma)?, c(alpha)?, c(beta)?))
    }

    /// `r = 2q/(q - 1)`, `theta = (1 + 3/q)/2`, `gamma = 1`, `alpha = beta = 1/2`.
    pub fn gradient_family(qv: Rational64) -> Self {
        let one = q(1, 1);
        CknParams::new(
            q(2, 1) * qv / (qv - one),
            (one + q(3, 1) / qv) / q(2, 1),
            one,
            q(1, 2),
            q(1, 2),
        )
    }

    /// `(3, 2/3, 2/3, 1/2, 1/2)`, the weighted cubic term.
    pub fn cubic() -> Self {
        CknParams::new(q(3, 1), q(2, 3), q(2, 3), q(1, 2), q(1, 2))
    }

    /// `r = 2q/(q - 2)`, `theta = 3/q`, `gamma = alpha = beta = 1/2`.
    pub fn lebesgue_family(qv: Rational64) -> Self {
        CknParams::new(q(2, 1) * qv / (qv - q(2, 1)), q(3, 1) / qv, q(1, 2), q(1, 2), q(1, 2))
    }

    pub fn to_f64(&self) -> [f64; 5] {
        let f = |x: Rational64| *x.numer() as f64 / *x.denom() as f64;
        [f(self.r), f(self.theta), f(self.gamma), f(self.alpha), f(self.beta)]
    }

    pub fn label(&self) -> String {
        format!("r={} theta={} gamma={} alpha={} beta={}", self.r, self.theta, self.gamma, self.alpha, self.beta)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Validity {
    pub valid: bool,
    /// Numbers (1 to 4) of the failed conditions.
    pub failed: Vec<u8>,
}

/// Conditions (1)-(4) in exact rational arithmetic:
/// (1) `r > 0`, `0 < theta <= 1`, `gamma < 3/r`, `alpha < 3/2`, `beta < 3/2`;
/// (2) `-gamma + 3/r = theta (-alpha + 1/2) + (1 - theta)(-beta + 3/2)`;
/// (3) `theta alpha + (1 - theta) beta <= gamma`;
/// (4) when `-gamma + 3/r = -alpha + 1/2`, also `gamma <= theta (alpha + 1) + (1 - theta) beta`.
pub fn ckn_params_valid(p: &CknParams) -> Validity {
    let zero = q(0, 1);
    let one = q(1, 1);
    let half = q(1, 2);
    let three_halves = q(3, 2);
    let mut failed = Vec::new();
    let c1 = p.r > zero && p.theta > zero && p.theta <= one && p.alpha < three_halves && p.beta < three_halves && {
        p.gamma < q(3, 1) / p.r
    };
    if !c1 {
        failed.push(1);
    }
    // the remaining conditions need 3/r to exist
    if p.r == zero {
        return Validity { valid: false, failed: vec![1, 2, 3, 4] };
    }
    let lhs = -p.gamma + q(3, 1) / p.r;
    let rhs = p.theta * (-p.alpha + half) + (one - p.theta) * (-p.beta + three_halves);
    if lhs != rhs {
        failed.push(2);
    }
    if p.theta * p.alpha + (one - p.theta) * p.beta > p.gamma {
        failed.push(3);
    }
    if lhs == -p.alpha + half && p.gamma > p.theta * (p.alpha + one) + (one - p.theta) * p.beta {
        failed.push(4);
    }
    Validity { valid: failed.is_empty(), failed }
}

/// Seeded family of band-limited smooth fields built from Gaussian superpositions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ensemble {
    pub grid: Grid,
    pub size: usize,
    pub seed: u64,
    pub terms: usize,
    pub spread: f64,
    pub widths: (f64, f64),
    /// Keep `|k|_inf <= band`; `None` keeps every mode.
    pub band: Option<i64>,
}

impl Ensemble {
    /// `size` members on `grid`, band-limited to `N/4`.
    pub fn new(grid: Grid, size: usize, seed: u64) -> Self {
        let l = grid.half_width();
        Ensemble {
            grid,
            size,
            seed,
            terms: 3,
            spread: 0.3 * l,
            widths: (0.1 * l, 0.16 * l),
            band: Some(grid.n() as i64 / 4),
        }
    }

    pub fn member_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64)
    }

    pub fn superposition(&self, i: usize) -> GaussianSuperposition {
        GaussianSuperposition::random(self.member_seed(i), self.terms, self.spread, self.widths)
    }

    fn finish(&self, f: Field) -> Field {
        match self.band {
            Some(b) => ops::band_limit(&f, b),
            None => f,
        }
    }

    /// Curl of the member's vector potential.
    pub fn vector_member(&self, i: usize) -> Field {
        let s = self.superposition(i);
        self.finish(Field::vector(self.grid, |x| s.curl_at(x)))
    }

    /// `d_1` of the member's scalar potential (mean zero).
    pub fn scalar_member(&self, i: usize) -> Field {
        let s = self.superposition(i);
        self.finish(Field::scalar(self.grid, |x| s.derivative_at(0, x)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub seed: u64,
    pub mu: f64,
    pub ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuRow {
    pub mu: f64,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub argmax_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub label: String,
    pub samples: Vec<Sample>,
    pub per_mu: Vec<MuRow>,
}

impl Verification {
    pub fn max_ratio(&self) -> f64 {
        self.per_mu.iter().map(|r| r.max_ratio).fold(0.0, f64::max)
    }

    /// Largest over smallest of the per-`mu` maxima.
    pub fn mu_variation(&self) -> f64 {
        let lo = self.per_mu.iter().map(|r| r.max_ratio).fold(f64::INFINITY, f64::min);
        self.max_ratio() / lo
    }
}

fn summarise(label: String, samples: Vec<Sample>, mus: &[f64]) -> Verification {
    let per_mu = mus
        .iter()
        .map(|&mu| {
            let mut row = MuRow { mu, max_ratio: 0.0, min_ratio: f64::INFINITY, argmax_seed: 0 };
            for s in samples.iter().filter(|s| s.mu == mu) {
                if s.ratio > row.max_ratio {
                    row.max_ratio = s.ratio;
                    row.argmax_seed = s.seed;
                }
                row.min_ratio = row.min_ratio.min(s.ratio);
            }
            row
        })
        .collect();
    Verification { label, samples, per_mu }
}

/// `|sigma_mu^gamma f|_{L^r} / (|sigma_mu^alpha grad f|_{L^2}^theta |sigma_mu^beta f|_{L^2}^(1-theta))`
/// with `sigma_mu = (mu + |x - c|^2)^(-1/2)`; `None` for the zero field.
pub fn ckn_ratio(f: &Field, p: &CknParams, mu: f64, center: [f64; 3]) -> Result<Option<f64>> {
    let [r, theta, gamma, alpha, beta] = p.to_f64();
    let lhs = weighted_lp_norm(f, r, &Weight::new(center, mu, -gamma))?;
    let grad = ops::gradient(f);
    let a = weighted_lp_norm(&grad, 2.0, &Weight::new(center, mu, -alpha))?;
    let b = weighted_lp_norm(f, 2.0, &Weight::new(center, mu, -beta))?;
    let rhs = a.powf(theta) * b.powf(1.0 - theta);
    if rhs == 0.0 || lhs == 0.0 {
        return Ok(None);
    }
    Ok(Some(lhs / rhs))
}

pub fn verify_ckn_inequality(p: &CknParams, ensemble: &Ensemble, mus: &[f64]) -> Result<Verification> {
    let v = ckn_params_valid(p);
    if !v.valid {
        return invalid(format!("invalid parameters ({}), failed conditions {:?}", p.label(), v.failed));
    }
    let rows: Vec<Vec<Sample>> = (0..ensemble.size)
        .into_par_iter()
        .map(|i| {
            let f = ensemble.vector_member(i);
            let seed = ensemble.member_seed(i);
            mus.iter()
                .filter_map(|&mu| match ckn_ratio(&f, p, mu, [0.0; 3]) {
                    Ok(Some(ratio)) => Some(Ok(Sample { seed, mu, ratio })),
                    Ok(None) => None,
                    Err(e) => Some(Err(e)),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarise(p.label(), rows.into_iter().flatten().collect(), mus))
}

/// `|sigma_mu^a R_i R_j f|_{L^p} / |sigma_mu^a f|_{L^p}`.
pub fn stein_ratio(f: &Field, p: f64, a: f64, i: usize, j: usize, mu: f64, center: [f64; 3]) -> Result<Option<f64>> {
    let tf = ops::riesz(i, &ops::riesz(j, f)?)?;
    let w = Weight::new(center, mu, -a);
    let den = weighted_lp_norm(f, p, &w)?;
    if den == 0.0 {
        return Ok(None);
    }
    Ok(Some(weighted_lp_norm(&tf, p, &w)? / den))
}

fn check_stein(p: f64, a: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return invalid(format!("p must lie in (1, infinity), got {p}"));
    }
    if !(a > -3.0 + 3.0 / p && a < 3.0 / p) {
        return invalid(format!("weight exponent {a} outside ({}, {})", -3.0 + 3.0 / p, 3.0 / p));
    }
    Ok(())
}

/// One [`Verification`] per index pair.
pub fn verify_stein_inequality(
    p: f64,
    a: f64,
    pairs: &[(usize, usize)],
    ensemble: &Ensemble,
    mus: &[f64],
) -> Result<Vec<Verification>> {
    check_stein(p, a)?;
    let members: Vec<(u64, Field)> = (0..ensemble.size).map(|i| (ensemble.member_seed(i), ensemble.scalar_member(i))).collect();
    pairs
        .iter()
        .map(|&(i, j)| {
            let rows: Vec<Vec<Sample>> = members
                .par_iter()
                .map(|(seed, f)| {
                    mus.iter()
                        .filter_map(|&mu| match stein_ratio(f, p, a, i, j, mu, [0.0; 3]) {
                            Ok(Some(ratio)) => Some(Ok(Sample { seed: *seed, mu, ratio })),
                            Ok(None) => None,
                            Err(e) => Some(Err(e)),
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(summarise(format!("p={p} a={a} R{}R{}", i + 1, j + 1), rows.into_iter().flatten().collect(), mus))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proof_parameter_sets_are_valid() {
        for qv in [q(7, 2), q(6, 1), q(12, 1)] {
            let p = CknParams::gradient_family(qv);
            assert!(ckn_params_valid(&p).valid, "{}", p.label());
        }
        let c = CknParams::cubic();
        assert!(ckn_params_valid(&c).valid);
        assert!(ckn_params_valid(&CknParams::lebesgue_family(q(6, 1))).valid);
        assert!(ckn_params_valid(&CknParams::new(q(4, 1), q(3, 4), q(1, 2), q(1, 2), q(1, 2))).valid);
        assert!(ckn_params_valid(&CknParams::new(q(2, 1), q(1, 2), q(1, 1), q(1, 2), q(1, 2))).valid);
    }

    #[test]
    fn boundaries_are_strict() {
        let mut p = CknParams::cubic();
        p.theta = q(0, 1);
        assert!(ckn_params_valid(&p).failed.contains(&1));
        let mut p = CknParams::cubic();
        p.gamma = q(1, 1); // 3/r
        assert!(ckn_params_valid(&p).failed.contains(&1));
        let mut p = CknParams::cubic();
        p.alpha = q(3, 2);
        assert!(ckn_params_valid(&p).failed.contains(&1));
        let mut p = CknParams::cubic();
        p.gamma = q(1, 2);
        assert!(ckn_params_valid(&p).failed.contains(&2));
    }

    #[test]
    fn stein_single_mode_ratio_is_the_multiplier() {
        let g = Grid::cube(16).unwrap();
        let f = Field::scalar(g, |x| (x[0] + 2.0 * x[1]).cos());
        let r = stein_ratio(&f, 2.0, 0.0, 0, 1, 1.0, [0.0; 3]).unwrap().unwrap();
        assert!((r - 2.0 / 5.0).abs() < 1e-12);
        assert!(check_stein(2.0, 1.5).is_err());
        assert!(check_stein(2.0, -1.5).is_err());
        assert!(check_stein(2.0, -0.5).is_ok());
    }

    #[test]
    fn zero_field_is_skipped() {
        let g = Grid::cube(16).unwrap();
        assert_eq!(ckn_ratio(&Field::zeros(g, 3), &CknParams::cubic(), 1.0, [0.0; 3]).unwrap(), None);
    }
}
