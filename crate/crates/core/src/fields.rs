//! Initial-data and reference-flow generators. Every generator returns a solenoidal field:
//! bumps and axisymmetric fields are spectral curls of explicit potentials.

use crate::error::{invalid, Error, Result};
use crate::grid::{ops, Field, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// ABC flow `(A sin(s x3) + C cos(s x2), B sin(s x1) + A cos(s x3), C sin(s x2) + B cos(s x1))`
/// with `s = pi * mode / L`, a curl eigenfield with eigenvalue `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeltramiSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(default = "one")]
    pub mode: u32,
}

fn one() -> u32 {
    1
}

impl BeltramiSpec {
    pub fn abc(a: f64, b: f64, c: f64) -> Self {
        BeltramiSpec { a, b, c, mode: 1 }
    }

    pub fn eigenvalue(&self, grid: &Grid) -> f64 {
        PI * self.mode as f64 / grid.half_width()
    }

    /// Value at `x` for wavenumber `s`.
    pub fn eval(&self, s: f64, x: [f64; 3]) -> [f64; 3] {
        [
            self.a * (s * x[2]).sin() + self.c * (s * x[1]).cos(),
            self.b * (s * x[0]).sin() + self.a * (s * x[2]).cos(),
            self.c * (s * x[1]).sin() + self.b * (s * x[0]).cos(),
        ]
    }

    /// Largest `|w|` over an `n^3` sampling of one period (a lower bound for the supremum).
    pub fn sup_norm_search(&self, n: usize) -> f64 {
        let h = 2.0 * PI / n as f64;
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = self.eval(1.0, [i as f64 * h, j as f64 * h, k as f64 * h]);
                    m = m.max(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
                }
            }
        }
        m.sqrt()
    }
}

pub fn make_abc_flow(spec: &BeltramiSpec, grid: &Grid) -> Result<Field> {
    if grid.dims() != 3 {
        return invalid("ABC flows are three-dimensional");
    }
    if spec.mode == 0 || 3 * spec.mode as usize > grid.n() {
        return invalid(format!("mode {} not resolved on N = {}", spec.mode, grid.n()));
    }
    let s = spec.eigenvalue(grid);
    Ok(Field::vector(*grid, |x| spec.eval(s, x)))
}

/// The exact solution `exp(-lambda^2 t) w_0` issued from a curl eigenfield.
#[derive(Clone, Debug)]
pub struct BeltramiFlow {
    w0: Field,
    lambda: f64,
}

impl BeltramiFlow {
    /// Checks `curl w_0 = lambda w_0` to relative `1e-8` in L2.
    pub fn new(w0: Field, lambda: f64) -> Result<Self> {
        if lambda == 0.0 || !lambda.is_finite() {
            return invalid("Beltrami eigenvalue must be nonzero");
        }
        if w0.grid().dims() != 3 {
            return invalid("Beltrami fields are three-dimensional");
        }
        let c = ops::curl(&w0)?;
        let err = c.sub(&w0.scaled(lambda))?.l2_norm();
        let scale = w0.l2_norm();
        if err > 1e-8 * scale.max(f64::MIN_POSITIVE) && err > 1e-14 {
            return invalid(format!("not a curl eigenfield: relative residual {:.3e}", err / scale));
        }
        Ok(BeltramiFlow { w0, lambda })
    }

    pub fn from_spec(spec: &BeltramiSpec, grid: &Grid) -> Result<Self> {
        BeltramiFlow::new(make_abc_flow(spec, grid)?, spec.eigenvalue(grid))
    }

    pub fn initial(&self) -> &Field {
        &self.w0
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn at(&self, t: f64) -> Field {
        self.w0.scaled((-self.lambda * self.lambda * t).exp())
    }

    /// `|w|^2_{L^2_t L^inf}` over `[0, infinity)`: `|w_0|_inf^2 / (2 lambda^2)`.
    pub fn size(&self) -> f64 {
        let m = self.w0.max_magnitude();
        0.5 * m * m / (self.lambda * self.lambda)
    }

    /// `|w|^2_{L^2_t L^inf}` over `[0, T]`.
    pub fn size_until(&self, t: f64) -> f64 {
        self.size() * (1.0 - (-2.0 * self.lambda * self.lambda * t).exp())
    }
}

/// `exp(-lambda^2 t) w_0`, validating the eigen-relation.
pub fn beltrami_reference(w0: &Field, lambda: f64, t: f64) -> Result<Field> {
    Ok(BeltramiFlow::new(w0.clone(), lambda)?.at(t))
}

/// Radial profile of a bump potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `exp(1 - 1/(1 - (r/R)^2))` inside `r < R`, zero outside.
    Compact { radius: f64 },
    /// `exp(-r^2 / (2 w^2))`, treated as supported in `r < 6 w`.
    Gaussian { width: f64 },
}

impl Profile {
    pub fn support_radius(&self) -> f64 {
        match *self {
            Profile::Compact { radius } => radius,
            Profile::Gaussian { width } => 6.0 * width,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Profile::Compact { radius } => {
                let q = r / radius;
                if q >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - q * q)).exp()
                }
            }
            Profile::Gaussian { width } => (-r * r / (2.0 * width * width)).exp(),
        }
    }
}

/// Curl of `amplitude * profile(|x - center - K xi|) * polarization`, or in 2D the
/// perpendicular gradient of the scalar potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub profile: Profile,
    pub center: [f64; 3],
    pub direction: [f64; 3],
    pub shift: f64,
    pub amplitude: f64,
    pub polarization: [f64; 3],
}

impl BumpSpec {
    pub fn new(profile: Profile, amplitude: f64) -> Self {
        BumpSpec {
            profile,
            center: [0.0; 3],
            direction: [1.0, 0.0, 0.0],
            shift: 0.0,
            amplitude,
            polarization: [0.0, 0.0, 1.0],
        }
    }

    pub fn shifted(mut self, direction: [f64; 3], shift: f64) -> Self {
        self.direction = direction;
        self.shift = shift;
        self
    }

    pub fn centered(mut self, center: [f64; 3]) -> Self {
        self.center = center;
        self
    }

    pub fn translated_center(&self) -> Result<[f64; 3]> {
        let n = (self.direction.iter().map(|v| v * v).sum::<f64>()).sqrt();
        if !(n > 0.0) {
            return invalid("bump direction must be nonzero");
        }
        if !(self.shift >= 0.0) {
            return invalid("bump shift must be >= 0");
        }
        Ok([
            self.center[0] + self.shift * self.direction[0] / n,
            self.center[1] + self.shift * self.direction[1] / n,
            self.center[2] + self.shift * self.direction[2] / n,
        ])
    }
}

pub fn make_bump(spec: &BumpSpec, grid: &Grid) -> Result<Field> {
    let c = spec.translated_center()?;
    let r = spec.profile.support_radius();
    if !(r > 0.0) {
        return invalid("bump radius must be positive");
    }
    for a in 0..grid.dims() {
        if c[a].abs() + r > grid.half_width() {
            return invalid(format!(
                "bump support (centre {:.4}, radius {r:.4}) leaves the box along axis {a}",
                c[a]
            ));
        }
    }
    let radial = |x: [f64; 3]| {
        let d = grid.displacement(x, c);
        spec.profile.eval((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt())
    };
    if grid.dims() == 2 {
        let psi = Field::scalar(*grid, |x| spec.amplitude * radial(x));
        let gr = ops::gradient(&psi);
        return Field::stack(&[
            &Field::from_vec(*grid, 1, gr.component(1).to_vec())?,
            &Field::from_vec(*grid, 1, gr.component(0).iter().map(|v| -v).collect())?,
        ]);
    }
    let p = spec.polarization;
    let pot = Field::vector(*grid, |x| {
        let b = spec.amplitude * radial(x);
        [b * p[0], b * p[1], b * p[2]]
    });
    ops::curl(&pot)
}

/// Azimuthal potential `A_theta(r, x3)` about the `x3` axis.
#[derive(Clone)]
pub struct AxisymSpec {
    profile: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for AxisymSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("AxisymSpec")
    }
}

impl AxisymSpec {
    pub fn from_fn(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        AxisymSpec { profile: Arc::new(f) }
    }

    /// `A_theta = amplitude * r * exp(-(r^2 + x3^2) / width^2)`.
    pub fn gaussian_ring(amplitude: f64, width: f64) -> Self {
        AxisymSpec::from_fn(move |r, z| amplitude * r * (-(r * r + z * z) / (width * width)).exp())
    }

    pub fn eval(&self, r: f64, z: f64) -> f64 {
        (self.profile)(r, z)
    }
}

#[derive(Clone, Debug)]
pub struct AxisymField {
    pub field: Field,
    /// Set when the potential is not negligible where the taper acts.
    pub truncated: bool,
}

/// `C^2` taper: 1 below `0.8 L`, 0 beyond `0.9 L`.
fn taper(rho: f64, l: f64) -> f64 {
    let (a, b) = (0.8 * l, 0.9 * l);
    if rho <= a {
        1.0
    } else if rho >= b {
        0.0
    } else {
        let t = (rho - a) / (b - a);
        1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

/// `curl(A_theta(r, x3) e_theta)` about the axis through the box centre.
pub fn make_axisym_zero_swirl(spec: &AxisymSpec, grid: &Grid) -> Result<AxisymField> {
    if grid.dims() != 3 {
        return invalid("axisymmetric fields are three-dimensional");
    }
    let l = grid.half_width();
    let mut peak: f64 = 0.0;
    let mut edge: f64 = 0.0;
    let pot = Field::vector(*grid, |x| {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if r == 0.0 {
            return [0.0; 3];
        }
        let rho = (r * r + x[2] * x[2]).sqrt();
        let a = spec.eval(r, x[2]) * taper(rho, l);
        [-a * x[1] / r, a * x[0] / r, 0.0]
    });
    for i in 0..grid.len() {
        let x = grid.point(i);
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let rho = (r * r + x[2] * x[2]).sqrt();
        let a = spec.eval(r, x[2]).abs();
        peak = peak.max(a);
        if rho >= 0.8 * l {
            edge = edge.max(a);
        }
    }
    let field = ops::curl(&pot)?;
    Ok(AxisymField { field, truncated: edge > 1e-6 * peak.max(f64::MIN_POSITIVE) })
}

/// Azimuthal component `(-x2 u1 + x1 u2) / r` about the `x3` axis (zero on the axis).
pub fn swirl_component(u: &Field) -> Result<Vec<f64>> {
    u.expect_vector("swirl")?;
    if u.grid().dims() != 3 {
        return invalid("swirl is defined in 3D");
    }
    let g = u.grid();
    Ok((0..g.len())
        .map(|i| {
            let x = g.point(i);
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if r < 1e-12 {
                0.0
            } else {
                (-x[1] * u.component(0)[i] + x[0] * u.component(1)[i]) / r
            }
        })
        .collect())
}

/// Planar Taylor-Green vortex `A (sin(s x1) cos(s x2), -cos(s x1) sin(s x2))`, `s = pi / L`;
/// under the Navier-Stokes flow it decays like `exp(-2 s^2 t)`.
pub fn taylor_green_2d(grid: &Grid, amplitude: f64) -> Result<Field> {
    if grid.dims() != 2 {
        return invalid("Taylor-Green vortex is planar");
    }
    let s = PI / grid.half_width();
    Ok(Field::vector(*grid, |x| {
        let (s1, c1) = (s * x[0]).sin_cos();
        let (s2, c2) = (s * x[1]).sin_cos();
        [amplitude * s1 * c2, -amplitude * c1 * s2, 0.0]
    }))
}

/// `(W_1(x1, x2), W_2(x1, x2), 0)`, or the constant-in-`x3` extension of a planar scalar.
pub fn extend_2d_to_3d(w: &Field, grid3: &Grid) -> Result<Field> {
    let g2 = w.grid();
    if g2.dims() != 2 || grid3.dims() != 3 {
        return invalid("extension maps a planar field to a 3D grid");
    }
    if g2.n() != grid3.n() || g2.half_width() != grid3.half_width() {
        return Err(Error::ShapeMismatch("planar and spatial grids differ along x1, x2".into()));
    }
    let comps = match w.components() {
        1 => 1,
        2 => 3,
        c => return Err(Error::ShapeMismatch(format!("cannot extend a field with {c} components"))),
    };
    let n = g2.n();
    let len = grid3.len();
    let mut data = vec![0.0; comps * len];
    for c in 0..w.components() {
        let src = w.component(c);
        let dst = &mut data[c * len..(c + 1) * len];
        for (i, v) in dst.iter_mut().enumerate() {
            *v = src[i / n];
        }
    }
    Field::from_vec(*grid3, comps, data)
}

/// Seeded band-limited solenoidal field with `|k|_inf <= kmax`, scaled to the given energy.
pub fn random_solenoidal(grid: &Grid, seed: u64, kmax: i64, energy: f64) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = grid.len();
    let data: Vec<f64> = (0..grid.dims() * len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let noise = Field::from_vec(*grid, grid.dims(), data)?;
    let mut u = ops::leray(&ops::band_limit(&noise, kmax))?;
    let e = u.energy();
    if e == 0.0 {
        return Ok(u);
    }
    u.scale((energy / e).sqrt());
    Ok(u)
}

/// Seeded superposition of Gaussian potentials `sum a_i exp(-|x - c_i|^2 / (2 s_i^2)) e_i`,
/// evaluated analytically in the plane (not periodised).
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSuperposition {
    pub terms: Vec<GaussianTerm>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianTerm {
    pub amplitude: f64,
    pub center: [f64; 3],
    pub width: f64,
    pub polarization: [f64; 3],
}

impl GaussianSuperposition {
    /// `count` terms with centres in the ball of radius `spread`, widths in `widths`.
    pub fn random(seed: u64, count: usize, spread: f64, widths: (f64, f64)) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms = (0..count)
            .map(|_| {
                let center = loop {
                    let c: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                    if c.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                        break [c[0] * spread, c[1] * spread, c[2] * spread];
                    }
                };
                let p: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                GaussianTerm {
                    amplitude: rng.gen_range(0.5..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
                    center,
                    width: rng.gen_range(widths.0..widths.1),
                    polarization: p,
                }
            })
            .collect();
        GaussianSuperposition { terms }
    }

    pub fn potential_scalar(&self, x: [f64; 3]) -> f64 {
        self.terms.iter().map(|t| t.amplitude * gauss(t, x)).sum()
    }

    /// `curl` of the vector potential at `x`.
    pub fn curl_at(&self, x: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for t in &self.terms {
            let g = t.amplitude * gauss(t, x);
            let s2 = t.width * t.width;
            let gr = [-(x[0] - t.center[0]) / s2 * g, -(x[1] - t.center[1]) / s2 * g, -(x[2] - t.center[2]) / s2 * g];
            let p = t.polarization;
            out[0] += gr[1] * p[2] - gr[2] * p[1];
            out[1] += gr[2] * p[0] - gr[0] * p[2];
            out[2] += gr[0] * p[1] - gr[1] * p[0];
        }
        out
    }

    /// `d_j` of the scalar potential at `x`.
    pub fn derivative_at(&self, j: usize, x: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|t| -t.amplitude * (x[j] - t.center[j]) / (t.width * t.width) * gauss(t, x))
            .sum()
    }
}

fn gauss(t: &GaussianTerm, x: [f64; 3]) -> f64 {
    let d2: f64 = (0..3).map(|a| (x[a] - t.center[a]).powi(2)).sum();
    (-d2 / (2.0 * t.width * t.width)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_abc_component_is_its_own_curl() {
        let g = Grid::cube(16).unwrap();
        let w = make_abc_flow(&BeltramiSpec::abc(1.0, 0.0, 0.0), &g).unwrap();
        let e = Field::vector(g, |x| [x[2].sin(), x[2].cos(), 0.0]);
        assert!(w.sub(&e).unwrap().max_abs() < 1e-15);
        assert!(ops::curl(&w).unwrap().sub(&w).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn rescaled_box_keeps_eigen_relation() {
        let g = Grid::new(3, 16, 2.0 * PI).unwrap();
        let spec = BeltramiSpec { a: 0.3, b: 1.0, c: -0.5, mode: 2 };
        let w = make_abc_flow(&spec, &g).unwrap();
        let lam = spec.eigenvalue(&g);
        assert_eq!(lam, 1.0);
        let r = ops::curl(&w).unwrap().sub(&w.scaled(lam)).unwrap().l2_norm() / w.l2_norm();
        assert!(r < 1e-12);
        assert!(make_abc_flow(&spec, &Grid::square(16).unwrap()).is_err());
    }

    #[test]
    fn beltrami_flow_checks_eigenfield() {
        let g = Grid::cube(16).unwrap();
        let w = make_abc_flow(&BeltramiSpec::abc(1.0, 1.0, 1.0), &g).unwrap();
        assert!(BeltramiFlow::new(w.clone(), 0.0).is_err());
        assert!(BeltramiFlow::new(w.clone(), 2.0).is_err());
        let f = BeltramiFlow::new(w.clone(), 1.0).unwrap();
        assert_eq!(f.at(0.0), w);
        let ratio = f.at(0.3).l2_norm() / w.l2_norm();
        assert!((ratio - (-0.3f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn bump_is_solenoidal_and_translates_by_whole_cells() {
        let g = Grid::cube(32).unwrap();
        let h = g.spacing();
        let base = BumpSpec::new(Profile::Compact { radius: 1.2 }, 0.7);
        let b0 = make_bump(&base, &g).unwrap();
        assert!(ops::divergence_residual(&b0).unwrap() < 1e-12);
        let b3 = make_bump(&base.shifted([0.0, 1.0, 0.0], 3.0 * h), &g).unwrap();
        assert!(b3.sub(&b0.roll([0, 3, 0])).unwrap().max_abs() < 1e-12);
        assert!(make_bump(&base.shifted([1.0, 0.0, 0.0], 2.5), &g).is_err());
    }

    #[test]
    fn extension_is_constant_along_x3() {
        let g2 = Grid::square(16).unwrap();
        let g3 = Grid::cube(16).unwrap();
        let w = Field::vector(g2, |x| [-(x[0]).cos() * x[1].sin(), x[0].sin() * x[1].cos(), 0.0]);
        let e = extend_2d_to_3d(&w, &g3).unwrap();
        assert!(e.component(2).iter().all(|&v| v == 0.0));
        let s = e.to_spectral();
        for i in 0..g3.len() {
            if g3.wavenumbers(i)[2] != 0 {
                assert!((0..3).all(|c| s.component(c)[i].norm() < 1e-14));
            }
        }
        assert!(ops::divergence_residual(&e).unwrap() < 1e-12);
        assert!(extend_2d_to_3d(&w, &Grid::cube(8).unwrap()).is_err());
    }

    #[test]
    fn random_solenoidal_is_seeded() {
        let g = Grid::cube(16).unwrap();
        let a = random_solenoidal(&g, 7, 4, 1.0).unwrap();
        let b = random_solenoidal(&g, 7, 4, 1.0).unwrap();
        assert_eq!(a, b);
        assert!((a.energy() - 1.0).abs() < 1e-12);
        assert!(ops::divergence_residual(&a).unwrap() < 1e-12);
    }
}
