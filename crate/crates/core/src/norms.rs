//! Weighted, mixed and Sobolev norms, the `sigma_mu` functionals, the theta functions of the
//! threshold split and the smallness thresholds.

use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid};
use crate::solver::Trajectory;
use serde::{Deserialize, Serialize};

/// Deterministic pairwise (tree) summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if v.len() <= BLOCK {
        let mut s = 0.0;
        for x in v {
            s += x;
        }
        return s;
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Pairwise sum of `f(i)` for `i` in `0..n`.
pub fn pairwise_sum_by(n: usize, f: impl Fn(usize) -> f64 + Copy) -> f64 {
    fn rec(lo: usize, hi: usize, f: impl Fn(usize) -> f64 + Copy) -> f64 {
        if hi - lo <= 64 {
            let mut s = 0.0;
            for i in lo..hi {
                s += f(i);
            }
            return s;
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, n, f)
}

/// Radial weight `(mu + |x - c - xi t|^2)^(a/2)` with periodic (minimum-image) distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pub center: [f64; 3],
    pub mu: f64,
    pub velocity: [f64; 3],
    pub exponent: f64,
}

impl Weight {
    pub fn new(center: [f64; 3], mu: f64, exponent: f64) -> Self {
        Weight { center, mu, velocity: [0.0; 3], exponent }
    }

    /// `sigma_mu = (mu + |y|^2)^(-1/2)`.
    pub fn sigma(center: [f64; 3], mu: f64) -> Self {
        Weight::new(center, mu, -1.0)
    }

    /// Unit weight.
    pub fn unit() -> Self {
        Weight::new([0.0; 3], 0.0, 0.0)
    }

    pub fn moving(mut self, velocity: [f64; 3]) -> Self {
        self.velocity = velocity;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn center_at(&self, t: f64) -> [f64; 3] {
        [
            self.center[0] + self.velocity[0] * t,
            self.center[1] + self.velocity[1] * t,
            self.center[2] + self.velocity[2] * t,
        ]
    }

    /// Quadrature samples of `weight^power` at time `t`, one per cell.
    ///
    /// For a negative total exponent, a cell whose sample point coincides with the centre
    /// receives the mean of the weight over the ball of equal volume instead of the point
    /// value, which is infinite when `mu = 0`.
    pub fn samples(&self, grid: &Grid, t: f64, power: f64) -> Result<Vec<f64>> {
        let e = self.exponent * power;
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return invalid(format!("regulariser must be >= 0, got {}", self.mu));
        }
        if self.mu == 0.0 && e <= -3.0 {
            return invalid(format!("weight power {e} is not integrable at the centre"));
        }
        let c = self.center_at(t);
        let mu = self.mu;
        let mut out: Vec<f64> = (0..grid.len())
            .map(|i| {
                if e == 0.0 {
                    return 1.0;
                }
                let d = grid.displacement(grid.point(i), c);
                let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                (mu + r2).powf(0.5 * e)
            })
            .collect();
        if e < 0.0 {
            if let Some(idx) = grid_point_at(grid, c) {
                out[idx] = ball_mean(grid, mu, e);
            }
        }
        Ok(out)
    }
}

/// Flat index of the sample point coinciding with `c`, if any.
pub fn grid_point_at(grid: &Grid, c: [f64; 3]) -> Option<usize> {
    let h = grid.spacing();
    let n = grid.n() as i64;
    let mut idx = [0usize; 3];
    for a in 0..grid.dims() {
        let s = (c[a] + grid.half_width()) / h;
        let r = s.round();
        if (s - r).abs() > 1e-9 {
            return None;
        }
        idx[a] = (r as i64).rem_euclid(n) as usize;
    }
    Some(grid.flat_index(idx))
}

/// Mean of `(mu + |y|^2)^(e/2)` over the ball (disc in 2D) with the cell's volume.
fn ball_mean(grid: &Grid, mu: f64, e: f64) -> f64 {
    let d = grid.dims() as f64;
    let vol = grid.cell_volume();
    let rho = if grid.dims() == 3 {
        (3.0 * vol / (4.0 * std::f64::consts::PI)).cbrt()
    } else {
        (vol / std::f64::consts::PI).sqrt()
    };
    if mu == 0.0 {
        // d * rho^e / (e + d)
        return d * rho.powf(e) / (e + d);
    }
    // d / rho^d * int_0^rho (mu + r^2)^(e/2) r^(d-1) dr, substituting r = rho * s^m
    let m = 4.0 / (e + d).max(0.5);
    let f = |s: f64| {
        if s == 0.0 {
            return 0.0;
        }
        let r = rho * s.powf(m);
        (mu + r * r).powf(0.5 * e) * r.powf(d - 1.0) * rho * m * s.powf(m - 1.0)
    };
    let integral = adaptive_simpson(&f, 0.0, 1.0, 1e-14, 40);
    d * integral / rho.powf(d)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    rec(f, a, b, fa, fm, fb, whole, tol, depth)
}

/// `(sum cellvol * weight^p |u|^p)^(1/p)`; `p = infinity` gives the grid maximum of `weight * |u|`.
pub fn weighted_lp_norm(u: &Field, p: f64, weight: &Weight) -> Result<f64> {
    weighted_lp_norm_at(u, p, weight, 0.0)
}

/// As [`weighted_lp_norm`] with the weight centre advanced to time `t`.
pub fn weighted_lp_norm_at(u: &Field, p: f64, weight: &Weight, t: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return invalid(format!("norm exponent must be >= 1, got {p}"));
    }
    let g = u.grid();
    let mag2 = u.magnitude_squared();
    if p.is_infinite() {
        let w = weight.samples(g, t, 1.0)?;
        return Ok(mag2.iter().zip(&w).fold(0.0, |m, (a, b)| m.max(a.sqrt() * b)));
    }
    let w = weight.samples(g, t, p)?;
    let s = pairwise_sum_by(mag2.len(), |i| {
        let a = mag2[i];
        if a == 0.0 {
            0.0
        } else {
            w[i] * a.powf(0.5 * p)
        }
    });
    Ok((s * g.cell_volume()).powf(1.0 / p))
}

pub fn lp_norm(u: &Field, p: f64) -> Result<f64> {
    weighted_lp_norm(u, p, &Weight::unit())
}

/// `(2L)^d sum w(kappa) |u_hat|^2` with `w = (1 + |kappa|^2)^s`, or `|kappa|^(2s)` if homogeneous.
pub fn sobolev_norm(u: &Field, s: f64, homogeneous: bool) -> Result<f64> {
    if !(s >= 0.0) {
        return invalid(format!("Sobolev index must be >= 0, got {s}"));
    }
    let g = *u.grid();
    let spec = u.to_spectral();
    let len = g.len();
    let total = pairwise_sum_by(len, |i| {
        let k = g.wavevector(i);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let w = if homogeneous {
            if k2 == 0.0 {
                if s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                k2.powf(s)
            }
        } else {
            (1.0 + k2).powf(s)
        };
        let mut a = 0.0;
        for c in 0..spec.components() {
            a += spec.component(c)[i].norm_sqr();
        }
        w * a
    });
    Ok((total * g.volume()).sqrt())
}

/// Time exponent `r` and space exponent `q`, both in `[1, infinity]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    pub r: f64,
    pub q: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixedNorm {
    pub value: f64,
    /// `value^r`, the size of a reference solution in this norm.
    pub size: f64,
    pub admissible: bool,
}

/// `2 <= r < infinity` and `2/r + 3/q = 1`.
pub fn is_admissible(r: f64, q: f64) -> bool {
    if !(r >= 2.0 && r.is_finite()) || !(q >= 1.0) {
        return false;
    }
    let lhs = 2.0 / r + if q.is_infinite() { 0.0 } else { 3.0 / q };
    (lhs - 1.0).abs() <= 1e-12
}

/// Trapezoid integral of piecewise-linear data restricted to `[t0, t1]`.
pub fn integrate_clipped(times: &[f64], values: &[f64], t0: f64, t1: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..times.len().saturating_sub(1) {
        let (a, b) = (times[i], times[i + 1]);
        let lo = a.max(t0);
        let hi = b.min(t1);
        if hi <= lo {
            continue;
        }
        let lerp = |t: f64| values[i] + (values[i + 1] - values[i]) * (t - a) / (b - a);
        acc += 0.5 * (hi - lo) * (lerp(lo) + lerp(hi));
    }
    acc
}

/// Cumulative trapezoid integral, starting at 0.
pub fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for i in 0..times.len() {
        if i > 0 {
            acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
        }
        out.push(acc);
    }
    out
}

pub fn mixed_norm(traj: &Trajectory, spec: MixedNormSpec) -> Result<MixedNorm> {
    if traj.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    if !(spec.r >= 1.0) || !(spec.q >= 1.0) {
        return invalid("mixed norm exponents must be >= 1");
    }
    let spatial: Vec<f64> =
        traj.snapshots().iter().map(|u| lp_norm(u, spec.q)).collect::<Result<_>>()?;
    let admissible = is_admissible(spec.r, spec.q);
    if spec.r.is_infinite() {
        let v = spatial.iter().cloned().fold(0.0, f64::max);
        return Ok(MixedNorm { value: v, size: f64::INFINITY, admissible });
    }
    let powered: Vec<f64> = spatial.iter().map(|x| x.powf(spec.r)).collect();
    let times = traj.times();
    let size = integrate_clipped(times, &powered, times[0], *times.last().unwrap());
    Ok(MixedNorm { value: size.powf(1.0 / spec.r), size, admissible })
}

/// `int sigma_mu(x - c - xi t) |v|^2`. The weight exponent must be -1.
pub fn a_mu(v: &Field, weight: &Weight, t: f64) -> Result<f64> {
    if weight.exponent != -1.0 {
        return invalid("a_mu uses the sigma_mu weight (exponent -1)");
    }
    let w = weight.samples(v.grid(), t, 1.0)?;
    let m = v.magnitude_squared();
    Ok(pairwise_sum_by(m.len(), |i| w[i] * m[i]) * v.grid().cell_volume())
}

/// `sum sigma_mu(x - c - xi t) * density` for a scalar density.
pub fn weighted_integral(density: &[f64], grid: &Grid, weight: &Weight, t: f64) -> Result<f64> {
    let w = weight.samples(grid, t, 1.0)?;
    Ok(pairwise_sum_by(density.len(), |i| w[i] * density[i]) * grid.cell_volume())
}

/// Per-snapshot `int sigma_mu(x - c - xi t_i) |grad v(t_i)|^2`.
pub fn weighted_dissipation_series(traj: &Trajectory, weight: &Weight) -> Result<Vec<f64>> {
    if weight.exponent != -1.0 {
        return invalid("B_mu uses the sigma_mu weight (exponent -1)");
    }
    let g = *traj.grid();
    let dens = traj.gradient_densities();
    traj.times()
        .iter()
        .zip(dens.iter())
        .map(|(&t, d)| weighted_integral(d.data(), &g, weight, t))
        .collect()
}

/// `int_t0^t1 int sigma_mu(x - c - xi tau) |grad v|^2` by trapezoid on the snapshots.
pub fn b_mu(traj: &Trajectory, weight: &Weight, t0: f64, t1: f64) -> Result<f64> {
    check_interval(traj, t0, t1)?;
    let series = weighted_dissipation_series(traj, weight)?;
    Ok(integrate_clipped(traj.times(), &series, t0, t1))
}

pub(crate) fn check_interval(traj: &Trajectory, t0: f64, t1: f64) -> Result<()> {
    if traj.is_empty() {
        return invalid("empty trajectory");
    }
    let (a, b) = (traj.times()[0], *traj.times().last().unwrap());
    let slack = 1e-12 * (1.0 + b.abs());
    if !(t0 <= t1) || t0 < a - slack || t1 > b + slack {
        return invalid(format!("interval [{t0}, {t1}] outside trajectory span [{a}, {b}]"));
    }
    Ok(())
}

fn check_gap_exponent(p: f64) -> Result<f64> {
    if !(p > 2.0 && p < 3.0) {
        return invalid(format!("p must lie in (2, 3), got {p}"));
    }
    Ok((p - 2.0) / (3.0 - p))
}

/// Canonical threshold `s = (p - 2) / (3 - p)`.
pub fn gap_threshold(p: f64) -> Result<f64> {
    check_gap_exponent(p)
}

/// `theta_1(p) = s^(1 - p/3)`.
pub fn theta1(p: f64) -> Result<f64> {
    Ok(check_gap_exponent(p)?.powf(1.0 - p / 3.0))
}

/// `theta_2(p) = s^(1 - p/2)`.
pub fn theta2(p: f64) -> Result<f64> {
    Ok(check_gap_exponent(p)?.powf(1.0 - p / 2.0))
}

/// Configuration constants that the analysis proves exist but never quantifies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Constants {
    pub delta0: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: f64,
    pub eps_star: f64,
    pub eps1: f64,
    pub k: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            delta0: 0.01,
            delta1: 0.01,
            delta2: 0.01,
            delta3: 0.01,
            delta4: 0.01,
            eps_star: 0.05,
            eps1: 0.1,
            k: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    /// `delta_0 exp(-K / delta_0)` for a reference solution of size `K`.
    ReferenceSize { size: f64 },
    /// `delta_4 exp(-M^2 / delta_4)`.
    SmallData { m: f64 },
    /// `delta_2 exp(-(1 + |w_0|_{H^2}^{16/3}) / delta_2)` for axisymmetric references.
    Axisymmetric { h2_norm: f64 },
    /// `delta_3 exp(-lambda^-2 |w_0|_inf^2 / delta_3)` for Beltrami references.
    Beltrami { lambda: f64, sup_norm: f64 },
}

pub fn smallness_threshold(kind: Threshold, c: &Constants) -> Result<f64> {
    let check = |d: f64| {
        if d > 0.0 && d.is_finite() {
            Ok(d)
        } else {
            invalid(format!("delta constant must be positive, got {d}"))
        }
    };
    Ok(match kind {
        Threshold::ReferenceSize { size } => {
            let d = check(c.delta0)?;
            d * (-size / d).exp()
        }
        Threshold::SmallData { m } => {
            let d = check(c.delta4)?;
            d * (-m * m / d).exp()
        }
        Threshold::Axisymmetric { h2_norm } => {
            let d = check(c.delta2)?;
            d * (-(1.0 + h2_norm.powf(16.0 / 3.0)) / d).exp()
        }
        Threshold::Beltrami { lambda, sup_norm } => {
            let d = check(c.delta3)?;
            if lambda == 0.0 {
                return invalid("Beltrami eigenvalue must be nonzero");
            }
            d * (-(sup_norm * sup_norm) / (lambda * lambda) / d).exp()
        }
    })
}
