//! CKN diagnostics on parabolic cylinders, paraboloid regular-set maps, dissipation along
//! Galilean segments and the changeover time `t*`.

use crate::error::{invalid, Error, Result};
use crate::norms::{
    cumulative_trapezoid, integrate_clipped, is_admissible, lp_norm, pairwise_sum_by, weighted_dissipation_series,
    MixedNormSpec, Weight,
};
use crate::solver::{check_same_lattice, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CylinderKind {
    /// `(t - r^2, t) x B(x, r)`.
    Q,
    /// `(t - 7 r^2 / 8, t + r^2 / 8) x B(x, r)`.
    QStar,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParabolicCylinder {
    pub t: f64,
    pub x: [f64; 3],
    pub r: f64,
    pub kind: CylinderKind,
}

impl ParabolicCylinder {
    pub fn star(t: f64, x: [f64; 3], r: f64) -> Self {
        ParabolicCylinder { t, x, r, kind: CylinderKind::QStar }
    }

    pub fn time_interval(&self) -> (f64, f64) {
        let r2 = self.r * self.r;
        match self.kind {
            CylinderKind::Q => (self.t - r2, self.t),
            CylinderKind::QStar => (self.t - 7.0 * r2 / 8.0, self.t + r2 / 8.0),
        }
    }
}

/// `{(t, x) : t > |x - vertex|^2 / aperture}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Paraboloid {
    pub aperture: f64,
    pub vertex: [f64; 3],
}

impl Paraboloid {
    pub fn contains(&self, t: f64, x: [f64; 3]) -> bool {
        let d2: f64 = (0..3).map(|a| (x[a] - self.vertex[a]).powi(2)).sum();
        t > d2 / self.aperture
    }
}

/// Default aperture sweep `2^k`, `k = -8..=4`.
pub fn default_apertures() -> Vec<f64> {
    (-8..=4).map(|k| 2f64.powi(k)).collect()
}

/// `(1/r) int int_{cylinder} |grad u|^2` with cell-centre ball membership and trapezoid time
/// quadrature on the snapshots.
pub fn cylinder_integral(traj: &Trajectory, cyl: &ParabolicCylinder) -> Result<f64> {
    let g = *traj.grid();
    if traj.is_empty() {
        return invalid("empty trajectory");
    }
    if cyl.r < 2.0 * g.spacing() * (1.0 - 1e-12) {
        return invalid(format!("radius {} is below two grid cells ({})", cyl.r, 2.0 * g.spacing()));
    }
    if cyl.r >= g.half_width() {
        return invalid("radius must be smaller than the box half-width");
    }
    let (a, b) = cyl.time_interval();
    let (t0, t1) = (traj.times()[0], traj.t_end());
    let slack = 1e-12 * (1.0 + t1.abs());
    if a < t0 - slack || b > t1 + slack {
        return invalid(format!("cylinder time span [{a}, {b}] leaves trajectory span [{t0}, {t1}]"));
    }
    let r2 = cyl.r * cyl.r;
    let inside: Vec<usize> = (0..g.len())
        .filter(|&i| {
            let d = g.displacement(g.point(i), cyl.x);
            d[0] * d[0] + d[1] * d[1] + d[2] * d[2] < r2
        })
        .collect();
    let dens = traj.gradient_densities();
    let times = traj.times();
    // only snapshots whose neighbouring intervals touch the window contribute
    let series: Vec<f64> = (0..traj.len())
        .map(|k| {
            let lo = times[k.saturating_sub(1)];
            let hi = times[(k + 1).min(traj.len() - 1)];
            if hi < a || lo > b {
                return 0.0;
            }
            let d = dens[k].data();
            pairwise_sum_by(inside.len(), |j| d[inside[j]]) * g.cell_volume()
        })
        .collect();
    Ok(integrate_clipped(times, &series, a.max(t0), b.min(t1)) / cyl.r)
}

/// CKN quantity on `Q*_r(t, x)`.
pub fn ckn_quantity(traj: &Trajectory, t: f64, x: [f64; 3], r: f64) -> Result<f64> {
    cylinder_integral(traj, &ParabolicCylinder::star(t, x, r))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CknScan {
    pub radii: Vec<f64>,
    pub scores: Vec<f64>,
    /// Smallest-radius score below the threshold; a surrogate for the `limsup` as `r -> 0`.
    pub pass: bool,
}

pub fn ckn_scan(traj: &Trajectory, t: f64, x: [f64; 3], radii: &[f64], eps_star: f64) -> Result<CknScan> {
    if radii.is_empty() {
        return invalid("empty radius ladder");
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) {
        return invalid("radii must be strictly decreasing");
    }
    let scores = radii.iter().map(|&r| ckn_quantity(traj, t, x, r)).collect::<Result<Vec<_>>>()?;
    let pass = *scores.last().unwrap() < eps_star;
    Ok(CknScan { radii: radii.to_vec(), scores, pass })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointVerdict {
    pub t: f64,
    pub x: [f64; 3],
    pub scan: CknScan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularityMap {
    pub vertex: [f64; 3],
    pub eps_star: f64,
    pub points: Vec<PointVerdict>,
    pub apertures: Vec<f64>,
    /// Largest swept aperture whose paraboloid contains only passing lattice points.
    pub alpha_hat: Option<f64>,
}

impl RegularityMap {
    /// Re-threshold the stored scores.
    pub fn with_threshold(&self, eps_star: f64) -> RegularityMap {
        let points = self
            .points
            .iter()
            .map(|p| {
                let mut q = p.clone();
                q.scan.pass = *q.scan.scores.last().unwrap() < eps_star;
                q
            })
            .collect();
        let mut m = RegularityMap { eps_star, points, ..self.clone() };
        m.alpha_hat = fit_aperture(&m.points, &m.apertures, m.vertex);
        m
    }

    pub fn all_pass(&self) -> bool {
        self.points.iter().all(|p| p.scan.pass)
    }
}

fn fit_aperture(points: &[PointVerdict], apertures: &[f64], vertex: [f64; 3]) -> Option<f64> {
    apertures
        .iter()
        .copied()
        .filter(|&a| {
            let par = Paraboloid { aperture: a, vertex };
            points.iter().filter(|p| par.contains(p.t, p.x)).all(|p| p.scan.pass)
        })
        .fold(None, |m: Option<f64>, a| Some(m.map_or(a, |v| v.max(a))))
}

pub fn map_regular_set(
    traj: &Trajectory,
    vertex: [f64; 3],
    lattice: &[(f64, [f64; 3])],
    radii: &[f64],
    eps_star: f64,
    apertures: &[f64],
) -> Result<RegularityMap> {
    if lattice.is_empty() {
        return invalid("empty sample lattice");
    }
    if apertures.iter().any(|&a| !(a > 0.0)) {
        return invalid("apertures must be positive");
    }
    let points = lattice
        .iter()
        .map(|&(t, x)| Ok(PointVerdict { t, x, scan: ckn_scan(traj, t, x, radii, eps_star)? }))
        .collect::<Result<Vec<_>>>()?;
    let alpha_hat = fit_aperture(&points, apertures, vertex);
    Ok(RegularityMap { vertex, eps_star, points, apertures: apertures.to_vec(), alpha_hat })
}

fn check_segment(traj: &Trajectory, center: [f64; 3], xi: [f64; 3], t_end: f64) -> Result<()> {
    let g = traj.grid();
    for t in [0.0, t_end] {
        let c = [center[0] + xi[0] * t, center[1] + xi[1] * t, center[2] + xi[2] * t];
        if !g.contains(c) {
            return invalid(format!("moving centre {c:?} leaves the box at t = {t}"));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentReport {
    pub mus: Vec<f64>,
    /// `int_0^T int sigma_mu(x - c - xi tau) |grad v|^2` for each `mu`.
    pub values: Vec<f64>,
    /// The same with the unregularised weight `|x - c - xi tau|^-1`.
    pub limit: f64,
    /// Aitken estimate of the `mu -> 0` limit from the last three values, kept within
    /// `[last value, limit]`.
    pub extrapolated: f64,
}

pub fn segment_diagnostic(traj: &Trajectory, center: [f64; 3], xi: [f64; 3], t_end: f64, mus: &[f64]) -> Result<SegmentReport> {
    if traj.is_empty() {
        return invalid("empty trajectory");
    }
    crate::norms::check_interval(traj, traj.times()[0], t_end)?;
    check_segment(traj, center, xi, t_end)?;
    let t0 = traj.times()[0];
    let eval = |mu: f64| -> Result<f64> {
        let w = Weight::sigma(center, mu).moving(xi);
        Ok(integrate_clipped(traj.times(), &weighted_dissipation_series(traj, &w)?, t0, t_end))
    };
    let values = mus.iter().map(|&m| eval(m)).collect::<Result<Vec<_>>>()?;
    let limit = eval(0.0)?;
    let last = values.last().copied().unwrap_or(limit);
    let mut extrapolated = last;
    if values.len() >= 3 {
        let n = values.len();
        let (a, b, c) = (values[n - 3], values[n - 2], values[n - 1]);
        let denom = (c - b) - (b - a);
        if denom != 0.0 && (c - b) * (b - a) > 0.0 {
            extrapolated = c - (c - b) * (c - b) / denom;
        }
    }
    let extrapolated = extrapolated.max(last).min(limit.max(last));
    Ok(SegmentReport { mus: mus.to_vec(), values, limit, extrapolated })
}

/// Both sides of `(1/r) int int_{Q*_r(s, c + xi s)} |grad v|^2
/// <= 2 int_{s - 7r^2/8}^{s + r^2/8} int |grad v|^2 / |x - c - xi tau|`.
pub fn cylinder_segment_bound(traj: &Trajectory, center: [f64; 3], xi: [f64; 3], s: f64, r: f64) -> Result<(f64, f64)> {
    let x = [center[0] + xi[0] * s, center[1] + xi[1] * s, center[2] + xi[2] * s];
    let cyl = ParabolicCylinder::star(s, x, r);
    let lhs = cylinder_integral(traj, &cyl)?;
    let (a, b) = cyl.time_interval();
    let w = Weight::sigma(center, 0.0).moving(xi);
    let rhs = 2.0 * integrate_clipped(traj.times(), &weighted_dissipation_series(traj, &w)?, a, b);
    Ok((lhs, rhs))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TStar {
    pub time: f64,
    pub index: usize,
    /// Cumulative weighted dissipation of `v` at each snapshot.
    pub dissipation: Vec<f64>,
    /// Cumulative `int_0^t |w|_{L^q}^r` at each snapshot.
    pub reference: Vec<f64>,
}

impl TStar {
    /// Dissipation at `t*` does not exceed the reference integral, and exceeds it at the next
    /// snapshot unless `t*` is the final time.
    pub fn bracket_holds(&self) -> bool {
        let i = self.index;
        let here = self.dissipation[i] <= self.reference[i];
        let next = i + 1 >= self.dissipation.len() || self.dissipation[i + 1] > self.reference[i + 1];
        here && next
    }
}

/// Last snapshot at which `int_0^t int sigma_mu |grad v|^2 <= int_0^t |w|_{L^q}^r`, the discrete
/// form of the supremum of such times.
pub fn t_star(v: &Trajectory, w: &Trajectory, weight: &Weight, spec: MixedNormSpec) -> Result<TStar> {
    check_same_lattice(v, w)?;
    if v.is_empty() {
        return invalid("empty trajectory");
    }
    if !is_admissible(spec.r, spec.q) {
        return invalid(format!("({}, {}) is not an admissible couple", spec.r, spec.q));
    }
    let rate = weighted_dissipation_series(v, weight)?;
    let dissipation = cumulative_trapezoid(v.times(), &rate);
    let norms: Vec<f64> =
        w.snapshots().iter().map(|f| lp_norm(f, spec.q).map(|x| x.powf(spec.r))).collect::<Result<_>>()?;
    let reference = cumulative_trapezoid(w.times(), &norms);
    let index = (0..v.len())
        .rev()
        .find(|&i| dissipation[i] <= reference[i])
        .ok_or_else(|| Error::InvalidArgument("no admissible time".into()))?;
    Ok(TStar { time: v.times()[index], index, dissipation, reference })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowedTStar {
    pub time: f64,
    /// `int_0^{t*} int sigma_mu |grad v|^2`.
    pub dissipation: f64,
    /// `M (M + 1)`.
    pub bound: f64,
}

/// Infimum over snapshot times `s` in `(0, T]` with `int_s^{s + T/M} int sigma_mu |grad v|^2 > M`,
/// or `T` when there is none. Windows are clipped to the trajectory end.
pub fn t_star_windowed(v: &Trajectory, weight: &Weight, m: f64, t_horizon: f64) -> Result<WindowedTStar> {
    if !(m > 0.0) {
        return invalid("window level M must be positive");
    }
    if v.is_empty() {
        return invalid("empty trajectory");
    }
    crate::norms::check_interval(v, v.times()[0], t_horizon)?;
    let rate = weighted_dissipation_series(v, weight)?;
    let end = v.t_end();
    let time = v
        .times()
        .iter()
        .copied()
        .filter(|&s| s > 0.0 && s <= t_horizon)
        .find(|&s| integrate_clipped(v.times(), &rate, s, (s + t_horizon / m).min(end)) > m)
        .unwrap_or(t_horizon);
    let dissipation = integrate_clipped(v.times(), &rate, v.times()[0], time);
    Ok(WindowedTStar { time, dissipation, bound: m * (m + 1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Field, Grid};
    use std::f64::consts::PI;

    fn steady(g: Grid, f: &Field, n: usize, dt: f64) -> Trajectory {
        let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        Trajectory::from_parts(g, times, vec![f.clone(); n]).unwrap()
    }

    #[test]
    fn uniform_enstrophy_gives_r4_law() {
        let g = Grid::cube(32).unwrap();
        let u = Field::vector(g, |x| [x[2].sin(), x[2].cos(), 0.0]);
        let traj = steady(g, &u, 101, 0.05);
        let mut prev = 0.0;
        for cells in [6.1, 8.15, 10.2] {
            let r = cells * g.spacing();
            let q = ckn_quantity(&traj, 4.0, [0.0; 3], r).unwrap();
            let exact = 4.0 * PI / 3.0 * r.powi(4);
            assert!((q / exact - 1.0).abs() < 0.02, "r = {r}: {q} vs {exact}");
            assert!(q >= prev);
            prev = q;
        }
    }

    #[test]
    fn cylinder_preconditions() {
        let g = Grid::cube(16).unwrap();
        let traj = steady(g, &Field::zeros(g, 3), 31, 0.1);
        assert!(ckn_quantity(&traj, 0.5, [0.0; 3], 1.0).is_err());
        assert!(ckn_quantity(&traj, 2.9, [0.0; 3], 1.0).is_err());
        assert!(ckn_quantity(&traj, 1.5, [0.0; 3], 1.5 * g.spacing()).is_err());
        assert_eq!(ckn_quantity(&traj, 1.5, [0.0; 3], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn paraboloid_membership() {
        let p = Paraboloid { aperture: 0.25, vertex: [0.1, 0.0, 0.0] };
        assert!(p.contains(1.0, [0.1, 0.0, 0.0]));
        assert!(!p.contains(0.0, [0.1, 0.0, 0.0]));
        assert!(!p.contains(1.0, [1.2, 0.0, 0.0]));
    }
}
