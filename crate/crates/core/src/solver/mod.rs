//! Integrating-factor RK2 (Heun) time stepping with exact heat semigroup and two-thirds
//! dealiasing, for the Navier-Stokes equation, the system perturbed around a reference flow,
//! and its mollified variant. Unit viscosity throughout.

mod audit;

pub use audit::{
    energy_audit, local_energy_audit, AuditRow, EnergyAudit, LocalAudit, LocalTerms, Spatial, Temporal,
    TestFunction,
};

use crate::error::{invalid, Error, Result};
use crate::fields::BeltramiFlow;
use crate::grid::ops::{self, dealias_mask};
use crate::grid::{Field, Grid, Spectrum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Store every `snapshot_stride`-th step (the initial and final states are always stored).
    pub snapshot_stride: usize,
    /// Two-thirds truncation of products.
    pub dealias: bool,
    /// Abort once `|u|_inf` exceeds this multiple of its initial value.
    pub blowup_factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { dt: 1e-3, t_end: 0.5, snapshot_stride: 10, dealias: true, blowup_factor: 1e6 }
    }
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64, snapshot_stride: usize) -> Self {
        SolverConfig { dt, t_end, snapshot_stride, ..Default::default() }
    }

    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return invalid(format!("time step must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return invalid(format!("end time must be >= 0, got {}", self.t_end));
        }
        if self.snapshot_stride == 0 {
            return invalid("snapshot stride must be >= 1");
        }
        if !(self.blowup_factor > 1.0) {
            return invalid(format!("blow-up factor must exceed 1, got {}", self.blowup_factor));
        }
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.dt.max(self.t_end) {
            return invalid("end time must be a whole number of steps");
        }
        Ok(n as usize)
    }

    /// `dt * max|kappa|^2` over resolved modes, a stiffness indicator for the explicit part.
    pub fn stability_proxy(&self, grid: &Grid) -> f64 {
        let kmax = std::f64::consts::PI * (grid.n() / 3) as f64 / grid.half_width();
        self.dt * grid.dims() as f64 * kmax * kmax
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub label: String,
    pub config_hash: String,
    pub seed: Option<u64>,
}

/// Velocity snapshots on a shared grid at strictly increasing times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: Grid,
    times: Vec<f64>,
    snapshots: Vec<Field>,
    densities: OnceLock<Vec<Field>>,
    pub provenance: Provenance,
}

impl Trajectory {
    pub fn new(grid: Grid) -> Self {
        Trajectory { grid, times: Vec::new(), snapshots: Vec::new(), densities: OnceLock::new(), provenance: Provenance::default() }
    }

    pub fn from_parts(grid: Grid, times: Vec<f64>, snapshots: Vec<Field>) -> Result<Self> {
        let mut t = Trajectory::new(grid);
        if times.len() != snapshots.len() {
            return Err(Error::ShapeMismatch("times and snapshots differ in length".into()));
        }
        for (time, s) in times.into_iter().zip(snapshots) {
            t.push(time, s)?;
        }
        Ok(t)
    }

    pub fn push(&mut self, t: f64, u: Field) -> Result<()> {
        u.grid().same_as(&self.grid)?;
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return invalid(format!("snapshot times must increase strictly ({t} after {last})"));
            }
        }
        self.times.push(t);
        self.snapshots.push(u);
        self.densities = OnceLock::new();
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn snapshots(&self) -> &[Field] {
        &self.snapshots
    }
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
    pub fn last(&self) -> Option<&Field> {
        self.snapshots.last()
    }
    pub fn t_end(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Pointwise `|grad u|^2` for every snapshot, computed once.
    pub fn gradient_densities(&self) -> &[Field] {
        self.densities.get_or_init(|| self.snapshots.iter().map(ops::gradient_density).collect())
    }

    /// Index of the snapshot stored at time `t`, if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * (1.0 + t.abs());
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }

    /// Pointwise sum with another trajectory on the same time lattice.
    pub fn sum(&self, other: &Trajectory) -> Result<Trajectory> {
        check_same_lattice(self, other)?;
        let snaps = self.snapshots.iter().zip(&other.snapshots).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;
        Trajectory::from_parts(self.grid, self.times.clone(), snaps)
    }
}

pub(crate) fn check_same_lattice(a: &Trajectory, b: &Trajectory) -> Result<()> {
    a.grid.same_as(&b.grid)?;
    if a.times.len() != b.times.len() || a.times.iter().zip(&b.times).any(|(x, y)| (x - y).abs() > 1e-12 * (1.0 + x.abs())) {
        return Err(Error::ShapeMismatch("trajectories have different time lattices".into()));
    }
    Ok(())
}

/// Smooth radial cutoff: 1 on `|s| <= 1/2`, 0 on `|s| >= 1`, blended with the standard
/// `exp(-1/x)` transition so that every derivative is continuous.
pub fn mollifier_symbol(s: f64) -> f64 {
    let a = s.abs();
    if a <= 0.5 {
        return 1.0;
    }
    if a >= 1.0 {
        return 0.0;
    }
    let phi = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() };
    let t = (a - 0.5) / 0.5;
    1.0 - phi(t) / (phi(t) + phi(1.0 - t))
}

/// Spectral state plus the precomputed factors of one time step.
pub struct Stepper {
    grid: Grid,
    dt: f64,
    decay: Vec<f64>,
    mask: Vec<bool>,
}

impl Stepper {
    pub fn new(grid: Grid, dt: f64, dealias: bool) -> Self {
        let mask = if dealias { dealias_mask(&grid) } else { vec![true; grid.len()] };
        let mask = mask.iter().enumerate().map(|(i, &m)| m && !grid.is_nyquist(i)).collect();
        let decay = (0..grid.len())
            .map(|i| {
                let k = grid.wavevector(i);
                (-(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * dt).exp()
            })
            .collect();
        Stepper { grid, dt, decay, mask }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Physical field of the dealiased part of a spectrum.
    pub fn physical(&self, s: &Spectrum) -> Field {
        let mut m = s.clone();
        self.apply_mask(&mut m);
        m.to_physical()
    }

    fn apply_mask(&self, s: &mut Spectrum) {
        let zero = Complex64::new(0.0, 0.0);
        for c in 0..s.components() {
            for (z, &keep) in s.component_mut(c).iter_mut().zip(&self.mask) {
                if !keep {
                    *z = zero;
                }
            }
        }
    }

    fn apply_filter(&self, s: &mut Spectrum, symbol: impl Fn(f64) -> f64) {
        let g = self.grid;
        for i in 0..g.len() {
            let k = g.wavevector(i);
            let f = symbol((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt());
            for c in 0..s.components() {
                s.component_mut(c)[i] *= f;
            }
        }
    }

    /// `-P div(sum_terms a (x) b)`, where `(a (x) b)_ji = a_j b_i`, truncated to the dealiased
    /// modes. With `symmetric`, the summed tensor must be symmetric and only half is transformed.
    pub fn advection(&self, terms: &[(&Field, &Field)], symmetric: bool) -> Result<Spectrum> {
        let g = self.grid;
        let d = g.dims();
        let len = g.len();
        for (a, b) in terms {
            a.expect_vector("advection")?;
            b.expect_vector("advection")?;
        }
        let mut tensor_hat: Vec<Option<Vec<Complex64>>> = vec![None; d * d];
        for j in 0..d {
            for i in 0..d {
                if symmetric && i < j {
                    continue;
                }
                let mut t = vec![0.0; len];
                for (a, b) in terms {
                    let (aj, bi) = (a.component(j), b.component(i));
                    for ((o, x), y) in t.iter_mut().zip(aj).zip(bi) {
                        *o += x * y;
                    }
                }
                let f = Field::from_vec(g, 1, t)?;
                tensor_hat[j * d + i] = Some(f.to_spectral().component(0).to_vec());
            }
        }
        let get = |j: usize, i: usize| -> &Vec<Complex64> {
            if symmetric && i < j {
                tensor_hat[i * d + j].as_ref().unwrap()
            } else {
                tensor_hat[j * d + i].as_ref().unwrap()
            }
        };
        let mut out = Spectrum::zeros(g, d);
        let iu = Complex64::new(0.0, 1.0);
        for i in 0..d {
            let dst = out.component_mut(i);
            for (m, z) in dst.iter_mut().enumerate() {
                if !self.mask[m] {
                    continue;
                }
                let k = g.wavevector(m);
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..d {
                    acc += iu * k[j] * get(j, i)[m];
                }
                *z = -acc;
            }
        }
        ops::leray_in_place(&mut out);
        Ok(out)
    }

    fn heat(&self, s: &mut Spectrum) {
        for c in 0..s.components() {
            for (z, e) in s.component_mut(c).iter_mut().zip(&self.decay) {
                *z *= *e;
            }
        }
    }

    /// One Heun step in integrating-factor form. `rhs(state, stage)` evaluates the nonlinear
    /// term at the stage's state, stage 0 at `t_n` and stage 1 at `t_n + dt`.
    pub fn step(&self, u: &Spectrum, mut rhs: impl FnMut(&Spectrum, usize) -> Result<Spectrum>) -> Result<Spectrum> {
        let k1 = rhs(u, 0)?;
        let mut stage = u.clone();
        stage.axpy(self.dt, &k1);
        self.heat(&mut stage);
        let k2 = rhs(&stage, 1)?;
        // E (u + dt/2 k1) + dt/2 k2
        let mut out = u.clone();
        out.axpy(0.5 * self.dt, &k1);
        self.heat(&mut out);
        out.axpy(0.5 * self.dt, &k2);
        if !out.is_finite() {
            return Err(Error::NonFinite("time step".into()));
        }
        Ok(out)
    }

    /// Navier-Stokes nonlinear term `-P div(u (x) u)`.
    pub fn nse_rhs(&self, u: &Spectrum) -> Result<Spectrum> {
        let up = self.physical(u);
        self.advection(&[(&up, &up)], true)
    }

    /// `-P div(v (x) v + v (x) w + w (x) v)`, with the advecting copy of `v` filtered by
    /// `rho(eps |kappa|)` when `eps > 0`.
    pub fn perturbed_rhs(&self, v: &Spectrum, w: &Field, eps: f64) -> Result<Spectrum> {
        let vp = self.physical(v);
        if eps > 0.0 {
            let mut adv = v.clone();
            self.apply_filter(&mut adv, |k| mollifier_symbol(eps * k));
            let ap = self.physical(&adv);
            self.advection(&[(&ap, &vp), (&vp, w), (w, &vp)], false)
        } else {
            self.advection(&[(&vp, &vp), (&vp, w), (w, &vp)], true)
        }
    }
}

/// One step of the Navier-Stokes equation.
pub fn step_nse(u: &Field, dt: f64) -> Result<Field> {
    u.expect_vector("step_nse")?;
    let st = Stepper::new(*u.grid(), dt, true);
    let out = st.step(&u.to_spectral(), |s, _| st.nse_rhs(s))?;
    Ok(out.to_physical())
}

/// One step of the system perturbed around a reference taking values `w_now` at `t_n` and
/// `w_next` at `t_n + dt`.
pub fn step_perturbed(v: &Field, w_now: &Field, w_next: &Field, dt: f64) -> Result<Field> {
    step_mollified(v, w_now, w_next, 0.0, dt)
}

/// As [`step_perturbed`] with the advecting velocity mollified at scale `eps`.
pub fn step_mollified(v: &Field, w_now: &Field, w_next: &Field, eps: f64, dt: f64) -> Result<Field> {
    v.expect_vector("step_perturbed")?;
    v.expect_compatible(w_now)?;
    v.expect_compatible(w_next)?;
    if !(eps >= 0.0) {
        return invalid(format!("mollification scale must be >= 0, got {eps}"));
    }
    let st = Stepper::new(*v.grid(), dt, true);
    let ws = [w_now, w_next];
    let out = st.step(&v.to_spectral(), |s, stage| st.perturbed_rhs(s, ws[stage], eps))?;
    Ok(out.to_physical())
}

/// Reference flow `w` around which the perturbed and mollified systems are posed.
#[derive(Clone, Debug)]
pub enum Reference {
    Zero,
    /// Exact decaying Beltrami flow.
    Beltrami(BeltramiFlow),
    /// Navier-Stokes solution from this datum, integrated alongside with the same scheme.
    Evolving(Field),
}

struct ReferenceState<'a> {
    kind: &'a Reference,
    spectral: Option<Spectrum>,
    grid: Grid,
}

impl<'a> ReferenceState<'a> {
    fn new(kind: &'a Reference, grid: Grid) -> Result<Self> {
        let spectral = match kind {
            Reference::Evolving(w0) => {
                w0.expect_vector("reference")?;
                w0.grid().same_as(&grid)?;
                Some(w0.to_spectral())
            }
            Reference::Beltrami(b) => {
                b.initial().grid().same_as(&grid)?;
                None
            }
            Reference::Zero => None,
        };
        Ok(ReferenceState { kind, spectral, grid })
    }

    fn value(&self, t: f64, st: &Stepper) -> Field {
        match self.kind {
            Reference::Zero => Field::zeros(self.grid, self.grid.dims()),
            Reference::Beltrami(b) => b.at(t),
            Reference::Evolving(_) => st.physical(self.spectral.as_ref().unwrap()),
        }
    }

    fn advance(&mut self, st: &Stepper) -> Result<()> {
        if let Some(s) = self.spectral.take() {
            self.spectral = Some(st.step(&s, |x, _| st.nse_rhs(x))?);
        }
        Ok(())
    }
}

/// Result of a perturbed or mollified run.
#[derive(Clone, Debug)]
pub struct PerturbedRun {
    pub v: Trajectory,
    pub w: Trajectory,
    pub monitor: EnergyMonitor,
}

impl PerturbedRun {
    /// `w + v` on the shared time lattice.
    pub fn reconstruction(&self) -> Result<Trajectory> {
        self.w.sum(&self.v)
    }
}

/// Runtime check of `int |v(t)|^2 <= A exp(K(t))` with `A = |v_0|^2` and
/// `K(t) = int_0^t |w|_inf^2`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyMonitor {
    pub initial_energy: f64,
    /// Per step: time, energy, cumulative `K`.
    pub rows: Vec<(f64, f64, f64)>,
    /// Largest `energy / (A exp(K))`.
    pub max_ratio: f64,
}

impl EnergyMonitor {
    pub fn within(&self, tol: f64) -> bool {
        self.max_ratio <= 1.0 + tol
    }
}

fn spectral_energy(s: &Spectrum) -> f64 {
    s.energy()
}

fn as_blowup(e: Error, time: f64) -> Error {
    match e {
        Error::NonFinite(what) => Error::BlowUp { time, what: format!("non-finite {what}") },
        e => e,
    }
}

struct BlowupGuard {
    limit: f64,
}

impl BlowupGuard {
    fn new(u0: &Field, factor: f64) -> Self {
        BlowupGuard { limit: factor * u0.max_abs().max(1e-300) }
    }

    fn check(&self, u: &Field, t: f64) -> Result<()> {
        if !u.is_finite() {
            return Err(Error::BlowUp { time: t, what: "non-finite velocity".into() });
        }
        let m = u.max_abs();
        if m > self.limit {
            return Err(Error::BlowUp { time: t, what: format!("|u|_inf = {m:.3e} exceeds guard {:.3e}", self.limit) });
        }
        Ok(())
    }
}

/// Integrate the Navier-Stokes equation (2D or 3D) from `u0`.
pub fn solve_nse(u0: &Field, config: &SolverConfig) -> Result<Trajectory> {
    u0.expect_vector("solve_nse")?;
    let steps = config.steps()?;
    let grid = *u0.grid();
    let st = Stepper::new(grid, config.dt, config.dealias);
    let guard = BlowupGuard::new(u0, config.blowup_factor);
    let mut traj = Trajectory::new(grid);
    let mut state = u0.to_spectral();
    traj.push(0.0, u0.clone())?;
    for n in 1..=steps {
        let t = n as f64 * config.dt;
        state = st.step(&state, |s, _| st.nse_rhs(s)).map_err(|e| as_blowup(e, t))?;
        if n % config.snapshot_stride == 0 || n == steps {
            let u = state.to_physical();
            guard.check(&u, t)?;
            traj.push(t, u)?;
        }
    }
    Ok(traj)
}

/// [`solve_nse`] restricted to planar data.
pub fn solve_2d_nse(w0: &Field, config: &SolverConfig) -> Result<Trajectory> {
    if w0.grid().dims() != 2 {
        return invalid("solve_2d_nse expects a planar field");
    }
    solve_nse(w0, config)
}

/// Integrate the perturbed system around `reference`.
pub fn solve_perturbed(v0: &Field, reference: &Reference, config: &SolverConfig) -> Result<PerturbedRun> {
    solve_mollified(v0, reference, 0.0, config)
}

/// Integrate the mollified perturbed system; `eps = 0` is the perturbed system itself.
pub fn solve_mollified(v0: &Field, reference: &Reference, eps: f64, config: &SolverConfig) -> Result<PerturbedRun> {
    v0.expect_vector("solve_perturbed")?;
    if !(eps >= 0.0) {
        return invalid(format!("mollification scale must be >= 0, got {eps}"));
    }
    let steps = config.steps()?;
    let grid = *v0.grid();
    let st = Stepper::new(grid, config.dt, config.dealias);
    let mut reference = ReferenceState::new(reference, grid)?;
    let guard = BlowupGuard::new(v0, config.blowup_factor);

    let mut v_traj = Trajectory::new(grid);
    let mut w_traj = Trajectory::new(grid);
    let mut state = v0.to_spectral();
    let mut w_now = reference.value(0.0, &st);
    v_traj.push(0.0, v0.clone())?;
    w_traj.push(0.0, w_now.clone())?;

    let a = v0.energy();
    let mut k_cum = 0.0;
    let mut w_sup_prev = w_now.max_magnitude();
    let mut monitor = EnergyMonitor { initial_energy: a, rows: vec![(0.0, a, 0.0)], max_ratio: if a > 0.0 { 1.0 } else { 0.0 } };

    for n in 1..=steps {
        let t = n as f64 * config.dt;
        reference.advance(&st)?;
        let w_next = reference.value(t, &st);
        let pair = [&w_now, &w_next];
        state = st.step(&state, |s, stage| st.perturbed_rhs(s, pair[stage], eps)).map_err(|e| as_blowup(e, t))?;

        let w_sup = w_next.max_magnitude();
        k_cum += 0.5 * config.dt * (w_sup_prev * w_sup_prev + w_sup * w_sup);
        w_sup_prev = w_sup;
        let e = spectral_energy(&state);
        if a > 0.0 {
            monitor.max_ratio = monitor.max_ratio.max(e / (a * k_cum.exp()));
        }
        monitor.rows.push((t, e, k_cum));

        if n % config.snapshot_stride == 0 || n == steps {
            let v = state.to_physical();
            guard.check(&v, t)?;
            v_traj.push(t, v)?;
            w_traj.push(t, w_next.clone())?;
        }
        w_now = w_next;
    }
    Ok(PerturbedRun { v: v_traj, w: w_traj, monitor })
}

/// Mean-zero pressure `R (x) R : (u (x) u)`.
pub fn pressure_from_velocity(u: &Field) -> Result<Field> {
    ops::riesz_contraction(&ops::outer(u, u)?)
}

/// Pressure of the perturbed system, `R (x) R : (v (x) v + 2 v (x) w)`.
pub fn perturbed_pressure(v: &Field, w: &Field) -> Result<Field> {
    let mut t = ops::outer(v, v)?;
    t.axpy(2.0, &ops::outer(v, w)?)?;
    ops::riesz_contraction(&t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_abc_flow, BeltramiSpec};

    #[test]
    fn mollifier_symbol_shape() {
        assert_eq!(mollifier_symbol(0.0), 1.0);
        assert_eq!(mollifier_symbol(0.5), 1.0);
        assert_eq!(mollifier_symbol(1.0), 0.0);
        assert!((mollifier_symbol(0.75) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = mollifier_symbol(0.5 + 0.005 * i as f64);
            assert!(v <= prev && v >= 0.0);
            prev = v;
        }
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let g = Grid::cube(8).unwrap();
        let z = Field::zeros(g, 3);
        assert_eq!(step_nse(&z, 1e-2).unwrap().max_abs(), 0.0);
        assert_eq!(step_perturbed(&z, &z, &z, 1e-2).unwrap().max_abs(), 0.0);
        let w = make_abc_flow(&BeltramiSpec::abc(1.0, 1.0, 1.0), &g).unwrap();
        assert!(step_perturbed(&z, &w, &w, 1e-2).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(0.0, 1.0, 1).steps().is_err());
        assert!(SolverConfig::new(0.3, 1.0, 1).steps().is_err());
        assert!(SolverConfig::new(0.1, 1.0, 0).steps().is_err());
        assert_eq!(SolverConfig::new(1e-3, 0.5, 10).steps().unwrap(), 500);
    }

    #[test]
    fn beltrami_steps_are_exact() {
        let g = Grid::cube(16).unwrap();
        let w = make_abc_flow(&BeltramiSpec::abc(1.0, 0.7, 0.3), &g).unwrap();
        let mut u = w.clone();
        for _ in 0..10 {
            u = step_nse(&u, 0.01).unwrap();
        }
        let e = w.scaled((-0.1f64).exp());
        assert!(u.sub(&e).unwrap().l2_norm() / e.l2_norm() < 1e-12);
    }

    #[test]
    fn abc_pressure_is_minus_half_speed_squared() {
        let g = Grid::cube(16).unwrap();
        let w = make_abc_flow(&BeltramiSpec::abc(1.0, 1.0, 1.0), &g).unwrap();
        let p = pressure_from_velocity(&w).unwrap();
        let mut q = Field::from_vec(g, 1, w.magnitude_squared()).unwrap();
        q.scale(-0.5);
        let m = q.mean()[0];
        q.data_mut().iter_mut().for_each(|v| *v -= m);
        assert!(p.sub(&q).unwrap().max_abs() < 1e-12);
    }
}
