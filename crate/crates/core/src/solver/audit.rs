//! Global and local energy balance audits evaluated by quadrature on stored snapshots.

use super::{check_same_lattice, perturbed_pressure, pressure_from_velocity, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::grid::{ops, Field};
use crate::norms::{cumulative_trapezoid, pairwise_sum_by, weighted_dissipation_series, Weight};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditRow {
    pub time: f64,
    pub energy: f64,
    /// `int_0^t int |grad u|^2`.
    pub dissipation: f64,
    /// `energy + 2 dissipation - E_0`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyAudit {
    pub initial_energy: f64,
    pub rows: Vec<AuditRow>,
    /// Largest signed residual; positive values violate the energy inequality.
    pub max_violation: f64,
    pub max_abs_residual: f64,
}

impl EnergyAudit {
    /// `max_abs_residual / E_0`, or the absolute residual when `E_0 = 0`.
    pub fn relative(&self) -> f64 {
        if self.initial_energy > 0.0 {
            self.max_abs_residual / self.initial_energy
        } else {
            self.max_abs_residual
        }
    }
}

/// Ledger of `int |u(t)|^2 + 2 int_0^t int |grad u|^2 - int |u(0)|^2`, which vanishes for
/// smooth solutions; the classical inequality with factor 1 on the dissipation follows from it.
pub fn energy_audit(traj: &Trajectory) -> Result<EnergyAudit> {
    if traj.is_empty() {
        return invalid("empty trajectory");
    }
    let cell = traj.grid().cell_volume();
    let energy: Vec<f64> = traj.snapshots().iter().map(Field::energy).collect();
    let dis: Vec<f64> = traj
        .gradient_densities()
        .iter()
        .map(|d| pairwise_sum_by(d.data().len(), |i| d.data()[i]) * cell)
        .collect();
    let cum = cumulative_trapezoid(traj.times(), &dis);
    let e0 = energy[0];
    let rows: Vec<AuditRow> = (0..traj.len())
        .map(|i| AuditRow {
            time: traj.times()[i],
            energy: energy[i],
            dissipation: cum[i],
            residual: energy[i] + 2.0 * cum[i] - e0,
        })
        .collect();
    let max_violation = rows.iter().map(|r| r.residual).fold(f64::NEG_INFINITY, f64::max);
    let max_abs_residual = rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
    Ok(EnergyAudit { initial_energy: e0, rows, max_violation, max_abs_residual })
}

/// Spatial factor of a separable test function.
#[derive(Clone, Debug)]
pub enum Spatial {
    Constant(f64),
    /// `amplitude * exp(-|x - center|^2 / (2 width^2))`, periodised by minimum image.
    Gaussian { center: [f64; 3], width: f64, amplitude: f64 },
    /// Arbitrary nonnegative samples; derivatives are taken spectrally.
    Samples(Field),
}

/// Temporal factor of a separable test function.
#[derive(Clone, Copy, Debug)]
pub enum Temporal {
    One,
    /// `exp(-k B(t))` with `B(t) = int_t0^t int sigma_mu |grad v|^2` for the given weight.
    ExpDissipation { k: f64, weight: Weight },
}

/// `phi(t, x) = psi(t) phi_1(x)`.
#[derive(Clone, Debug)]
pub struct TestFunction {
    pub spatial: Spatial,
    pub temporal: Temporal,
}

impl TestFunction {
    pub fn constant() -> Self {
        TestFunction { spatial: Spatial::Constant(1.0), temporal: Temporal::One }
    }

    pub fn gaussian(center: [f64; 3], width: f64) -> Self {
        TestFunction { spatial: Spatial::Gaussian { center, width, amplitude: 1.0 }, temporal: Temporal::One }
    }

    pub fn with_temporal(mut self, temporal: Temporal) -> Self {
        self.temporal = temporal;
        self
    }
}

/// Every term of the localized balance, integrated over `[t0, t1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LocalTerms {
    /// `int |u(t1)|^2 phi(t1)`.
    pub final_energy: f64,
    /// `2 int int |grad u|^2 phi`.
    pub dissipation: f64,
    /// `int |u(t0)|^2 phi(t0)`.
    pub initial_energy: f64,
    /// `int int |u|^2 (phi_t + lap phi)`.
    pub heat: f64,
    /// `int int (|u|^2 + 2P) u . grad phi`.
    pub flux: f64,
    /// Reference-coupling terms of the perturbed form.
    pub coupling: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalAudit {
    pub terms: LocalTerms,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; at most a quadrature error for smooth resolved runs.
    pub residual: f64,
}

struct SpatialSamples {
    phi: Vec<f64>,
    grad: Field,
    lap: Vec<f64>,
}

fn spatial_samples(s: &Spatial, traj: &Trajectory) -> Result<SpatialSamples> {
    let g = *traj.grid();
    let phi = match s {
        Spatial::Constant(c) => Field::scalar(g, |_| *c),
        Spatial::Gaussian { center, width, amplitude } => {
            if !(*width > 0.0) {
                return invalid("Gaussian width must be positive");
            }
            Field::scalar(g, |x| {
                let d = g.displacement(x, *center);
                amplitude * (-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (2.0 * width * width)).exp()
            })
        }
        Spatial::Samples(f) => {
            f.grid().same_as(&g)?;
            if f.components() != 1 {
                return Err(Error::ShapeMismatch("test function must be scalar".into()));
            }
            f.clone()
        }
    };
    if phi.data().iter().any(|&v| v < 0.0) {
        return invalid("test function must be nonnegative");
    }
    let grad = ops::gradient(&phi);
    let lap = ops::laplacian(&phi).into_data();
    Ok(SpatialSamples { phi: phi.into_data(), grad, lap })
}

fn integrate(cell: f64, n: usize, f: impl Fn(usize) -> f64 + Copy) -> f64 {
    pairwise_sum_by(n, f) * cell
}

/// `int psi f dt` with `psi` exponential and `f` linear on each interval. The time factor
/// `exp(-k B)` varies much faster than the energy densities, so a plain trapezoid on the
/// product would dominate the audit residual.
fn exp_trapezoid(times: &[f64], psi: &[f64], f: &dyn Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for k in 1..times.len() {
        let (pa, pb) = (psi[k - 1], psi[k]);
        if pa == 0.0 {
            continue;
        }
        let h = times[k] - times[k - 1];
        let x = (pa / pb.max(f64::MIN_POSITIVE)).ln();
        let (i0, i1) = if x.abs() < 1e-3 {
            (h * (1.0 - x / 2.0 + x * x / 6.0), h * h * (0.5 - x / 3.0 + x * x / 8.0))
        } else {
            let e = (-x).exp();
            (h * (1.0 - e) / x, h * h * (1.0 - e * (1.0 + x)) / (x * x))
        };
        let (fa, fb) = (f(k - 1), f(k));
        acc += pa * (fa * i0 + (fb - fa) / h * i1);
    }
    acc
}

/// Localized energy balance for `phi = psi(t) phi_1(x)` between the snapshots at `t0` and `t1`.
///
/// Without a reference this audits the Navier-Stokes form with flux `(|u|^2 + 2P) u . grad phi`.
/// With `reference = Some(w)`, `traj` holds the perturbation `v`, the pressure is that of the
/// perturbed system, and the coupling terms
/// `|v|^2 w . grad phi + 2 (v . w) v . grad phi + 2 ((v . grad) v . w) phi` are added.
/// `pressure` overrides the reconstructed pressure snapshots.
pub fn local_energy_audit(
    traj: &Trajectory,
    reference: Option<&Trajectory>,
    pressure: Option<&[Field]>,
    phi: &TestFunction,
    t0: f64,
    t1: f64,
) -> Result<LocalAudit> {
    let i0 = traj.index_of(t0).ok_or_else(|| Error::InvalidArgument(format!("t0 = {t0} is not a snapshot time")))?;
    let i1 = traj.index_of(t1).ok_or_else(|| Error::InvalidArgument(format!("t1 = {t1} is not a snapshot time")))?;
    if i1 < i0 {
        return invalid("t1 must not precede t0");
    }
    if let Some(w) = reference {
        check_same_lattice(traj, w)?;
    }
    if let Some(p) = pressure {
        if p.len() != traj.len() {
            return Err(Error::ShapeMismatch("pressure snapshots do not match trajectory".into()));
        }
    }
    let g = *traj.grid();
    let d = g.dims();
    let len = g.len();
    let cell = g.cell_volume();
    let sp = spatial_samples(&phi.spatial, traj)?;
    let times = &traj.times()[i0..=i1];

    // temporal factor and its logarithmic derivative on the snapshots
    let (psi, log_rate): (Vec<f64>, Vec<f64>) = match phi.temporal {
        Temporal::One => (vec![1.0; times.len()], vec![0.0; times.len()]),
        Temporal::ExpDissipation { k, weight } => {
            let rate = weighted_dissipation_series(traj, &weight)?[i0..=i1].to_vec();
            let b = cumulative_trapezoid(times, &rate);
            (b.iter().map(|x| (-k * x).exp()).collect(), rate.iter().map(|r| -k * r).collect())
        }
    };

    let mut e = Vec::new();
    let mut dis = Vec::new();
    let mut lap = Vec::new();
    let mut flux = Vec::new();
    let mut coup = Vec::new();
    for i in i0..=i1 {
        let u = &traj.snapshots()[i];
        let m2 = u.magnitude_squared();
        let dens = &traj.gradient_densities()[i];
        let p = match (pressure, reference) {
            (Some(ps), _) => ps[i].clone(),
            (None, Some(w)) => perturbed_pressure(u, &w.snapshots()[i])?,
            (None, None) => pressure_from_velocity(u)?,
        };
        let pd = p.data();
        let udotgrad = |m: usize| (0..d).map(|c| u.component(c)[m] * sp.grad.component(c)[m]).sum::<f64>();
        e.push(integrate(cell, len, |m| m2[m] * sp.phi[m]));
        dis.push(integrate(cell, len, |m| dens.data()[m] * sp.phi[m]));
        lap.push(integrate(cell, len, |m| m2[m] * sp.lap[m]));
        flux.push(integrate(cell, len, |m| (m2[m] + 2.0 * pd[m]) * udotgrad(m)));
        if let Some(wt) = reference {
            let w = &wt.snapshots()[i];
            let gu = ops::gradient(u);
            let c = integrate(cell, len, |m| {
                let wgrad: f64 = (0..d).map(|c| w.component(c)[m] * sp.grad.component(c)[m]).sum();
                let vw: f64 = (0..d).map(|c| u.component(c)[m] * w.component(c)[m]).sum();
                let mut adv_w = 0.0;
                for a in 0..d {
                    let mut adv = 0.0;
                    for b in 0..d {
                        adv += u.component(b)[m] * gu.component(a * d + b)[m];
                    }
                    adv_w += adv * w.component(a)[m];
                }
                m2[m] * wgrad + 2.0 * vw * udotgrad(m) + 2.0 * adv_w * sp.phi[m]
            });
            coup.push(c);
        } else {
            coup.push(0.0);
        }
    }

    let n = times.len();
    let trap = |f: &dyn Fn(usize) -> f64| exp_trapezoid(times, &psi, f);
    let terms = LocalTerms {
        final_energy: psi[n - 1] * e[n - 1],
        dissipation: 2.0 * trap(&|k| dis[k]),
        initial_energy: psi[0] * e[0],
        heat: trap(&|k| log_rate[k] * e[k] + lap[k]),
        flux: trap(&|k| flux[k]),
        coupling: trap(&|k| coup[k]),
    };
    let lhs = terms.final_energy + terms.dissipation;
    let rhs = terms.initial_energy + terms.heat + terms.flux + terms.coupling;
    Ok(LocalAudit { terms, lhs, rhs, residual: lhs - rhs })
}
