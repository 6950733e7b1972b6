//! Threshold decomposition `u_0 = P u_{0,<=s} + P u_{0,>s}` of initial data by the size of
//! `|x - c| |u_0(x)|`, and the Kato smallness gate.

use crate::error::{invalid, Result};
use crate::grid::{ops, Field};
use crate::norms::{gap_threshold, lp_norm, mixed_norm, theta1, theta2, weighted_lp_norm, MixedNormSpec, Weight};
use crate::solver::Trajectory;
use std::fmt::Write;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SplitNorms {
    /// `|w_0|_{L^3}`.
    pub w0_l3: f64,
    /// `| |x - c|^{-1/2} v_0 |_{L^2}`.
    pub v0_weighted: f64,
    /// `|u_{0,<=s}|_{L^3}`.
    pub low_l3: f64,
    /// `| |x - c|^{-1/2} u_{0,>s} |_{L^2}`.
    pub high_weighted: f64,
}

/// Ratios of the measured norms to the scale-invariant right-hand sides.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GapRatios {
    pub p: f64,
    pub theta1: f64,
    pub theta2: f64,
    /// `| |x - c|^{1 - 3/p} u_0 |_{L^p}`.
    pub data_norm: f64,
    /// `|w_0|_{L^3} / (theta_1 N^{p/3})`.
    pub rho1: f64,
    /// `| |x - c|^{-1/2} v_0 |_{L^2} / (theta_2 N^{p/2})`.
    pub rho2: f64,
    /// `|u_{0,<=s}|_{L^3} / (s^{1 - p/3} N^{p/3})`.
    pub elementary1: f64,
    /// `| |x - c|^{-1/2} u_{0,>s} |_{L^2} / (s^{1 - p/2} N^{p/2})`.
    pub elementary2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitResult {
    pub s: f64,
    pub center: [f64; 3],
    /// Leray projection of the small part.
    pub w0: Field,
    /// Leray projection of the tail.
    pub v0: Field,
    /// Unprojected small part `u_{0,<=s}`.
    pub low: Field,
    /// Unprojected tail `u_{0,>s}`.
    pub high: Field,
    /// Cells assigned to the small part.
    pub mask: Vec<bool>,
    pub norms: SplitNorms,
    pub gap: Option<GapRatios>,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

fn half_weight(center: [f64; 3]) -> Weight {
    Weight::new(center, 0.0, -0.5)
}

/// Partition by `|x - c| |u_0(x)| <= s` (minimum-image distance), then project each part.
pub fn threshold_split(u0: &Field, s: f64, center: [f64; 3]) -> Result<SplitResult> {
    u0.expect_vector("threshold split")?;
    if !(s >= 0.0) {
        return invalid(format!("threshold must be >= 0, got {s}"));
    }
    let g = *u0.grid();
    let mag = u0.magnitude();
    let mask: Vec<bool> = (0..g.len())
        .map(|i| {
            let d = g.displacement(g.point(i), center);
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() * mag[i] <= s
        })
        .collect();
    let mut low = u0.clone();
    let mut high = u0.clone();
    for c in 0..u0.components() {
        for (i, &m) in mask.iter().enumerate() {
            if m {
                high.component_mut(c)[i] = 0.0;
            } else {
                low.component_mut(c)[i] = 0.0;
            }
        }
    }
    let w0 = ops::leray(&low)?;
    let v0 = ops::leray(&high)?;
    let norms = SplitNorms {
        w0_l3: lp_norm(&w0, 3.0)?,
        v0_weighted: weighted_lp_norm(&v0, 2.0, &half_weight(center))?,
        low_l3: lp_norm(&low, 3.0)?,
        high_weighted: weighted_lp_norm(&high, 2.0, &half_weight(center))?,
    };
    Ok(SplitResult { s, center, w0, v0, low, high, mask, norms, gap: None })
}

/// [`threshold_split`] at `s = (p - 2)/(3 - p)` with the measured estimate ratios attached.
pub fn gap_split(u0: &Field, p: f64, center: [f64; 3]) -> Result<SplitResult> {
    let s = gap_threshold(p)?;
    let mut out = threshold_split(u0, s, center)?;
    let (t1, t2) = (theta1(p)?, theta2(p)?);
    let n = weighted_lp_norm(u0, p, &Weight::new(center, 0.0, 1.0 - 3.0 / p))?;
    let (n3, n2) = (n.powf(p / 3.0), n.powf(p / 2.0));
    out.gap = Some(GapRatios {
        p,
        theta1: t1,
        theta2: t2,
        data_norm: n,
        rho1: ratio(out.norms.w0_l3, t1 * n3),
        rho2: ratio(out.norms.v0_weighted, t2 * n2),
        elementary1: ratio(out.norms.low_l3, s.powf(1.0 - p / 3.0) * n3),
        elementary2: ratio(out.norms.high_weighted, s.powf(1.0 - p / 2.0) * n2),
    });
    Ok(out)
}

impl SplitResult {
    /// Plain-text `key = value` report of every measured quantity.
    pub fn report(&self) -> String {
        let mut r = String::new();
        let _ = writeln!(r, "threshold = {:.17e}", self.s);
        let _ = writeln!(r, "center = {:?}", self.center);
        let _ = writeln!(r, "small_cells = {}", self.mask.iter().filter(|&&m| m).count());
        let _ = writeln!(r, "w0_l3 = {:.17e}", self.norms.w0_l3);
        let _ = writeln!(r, "v0_weighted_l2 = {:.17e}", self.norms.v0_weighted);
        let _ = writeln!(r, "low_l3 = {:.17e}", self.norms.low_l3);
        let _ = writeln!(r, "high_weighted_l2 = {:.17e}", self.norms.high_weighted);
        if let Some(g) = &self.gap {
            let _ = writeln!(r, "p = {:.17e}", g.p);
            let _ = writeln!(r, "theta1 = {:.17e}", g.theta1);
            let _ = writeln!(r, "theta2 = {:.17e}", g.theta2);
            let _ = writeln!(r, "data_weighted_lp = {:.17e}", g.data_norm);
            let _ = writeln!(r, "rho1 = {:.17e}", g.rho1);
            let _ = writeln!(r, "rho2 = {:.17e}", g.rho2);
            let _ = writeln!(r, "elementary1 = {:.17e}", g.elementary1);
            let _ = writeln!(r, "elementary2 = {:.17e}", g.elementary2);
        }
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KatoReport {
    pub pass: bool,
    pub l3: f64,
    /// `|w|_{L^5_t L^5_x}` when a trajectory is supplied.
    pub l5l5: Option<f64>,
    /// `|w|_{L^5_t L^5_x} / |w_0|_{L^3}`.
    pub ratio: Option<f64>,
}

/// Gate `|w_0|_{L^3} < eps_1`.
pub fn kato_check(w0: &Field, eps1: f64, traj: Option<&Trajectory>) -> Result<KatoReport> {
    let l3 = lp_norm(w0, 3.0)?;
    let l5l5 = match traj {
        Some(t) => Some(mixed_norm(t, MixedNormSpec { r: 5.0, q: 5.0 })?.value),
        None => None,
    };
    Ok(KatoReport { pass: l3 < eps1, l3, l5l5, ratio: l5l5.map(|v| ratio(v, l3)) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_bump, BumpSpec, Profile};
    use crate::grid::Grid;

    fn bump(g: &Grid, amp: f64) -> Field {
        make_bump(&BumpSpec::new(Profile::Compact { radius: 1.5 }, amp).centered([0.4, -0.2, 0.1]), g).unwrap()
    }

    #[test]
    fn partition_and_reassembly() {
        let g = Grid::cube(16).unwrap();
        let u = bump(&g, 2.0);
        let r = threshold_split(&u, 0.3, [0.0; 3]).unwrap();
        let pu = ops::leray(&u).unwrap();
        assert!(r.w0.add(&r.v0).unwrap().sub(&pu).unwrap().max_abs() < 1e-12);
        for c in 0..3 {
            for i in 0..g.len() {
                assert!(r.low.component(c)[i] == 0.0 || r.high.component(c)[i] == 0.0);
                assert_eq!(r.low.component(c)[i] + r.high.component(c)[i], u.component(c)[i]);
            }
        }
        assert!(threshold_split(&u, -1.0, [0.0; 3]).is_err());
    }

    #[test]
    fn degenerate_thresholds() {
        let g = Grid::cube(16).unwrap();
        let u = bump(&g, 1.0);
        let big = threshold_split(&u, 1e9, [0.0; 3]).unwrap();
        assert_eq!(big.high.max_abs(), 0.0);
        let zero = gap_split(&Field::zeros(g, 3), 2.5, [0.0; 3]).unwrap();
        let gr = zero.gap.unwrap();
        assert_eq!((gr.rho1, gr.rho2, gr.elementary1, gr.elementary2), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(zero.s, 1.0);
        assert!(gap_split(&u, 3.0, [0.0; 3]).is_err());
    }

    #[test]
    fn kato_gate_flips_with_amplitude() {
        let g = Grid::cube(16).unwrap();
        let small = kato_check(&bump(&g, 0.01), 0.1, None).unwrap();
        let large = kato_check(&bump(&g, 10.0), 0.1, None).unwrap();
        assert!(small.pass && !large.pass);
        let z = kato_check(&Field::zeros(g, 3), 0.1, None).unwrap();
        assert!(z.pass && z.l3 == 0.0);
    }
}
