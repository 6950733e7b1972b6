//! Fourier multipliers. Every multiplier zeroes the Nyquist modes of its output, since
//! `i * kappa` has no real-valued meaning there.

use super::{Field, Grid, Spectrum};
use crate::error::{Error, Result};
use num_complex::Complex64;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Spectral gradient. For a field with `c` components the result has `c * d` components,
/// slot `c * d + j` holding `d_j f_c`.
pub fn gradient_spectral(s: &Spectrum) -> Spectrum {
    let g = *s.grid();
    let d = g.dims();
    let len = g.len();
    let mut out = Spectrum::zeros(g, s.components() * d);
    for c in 0..s.components() {
        let src = s.component(c);
        for j in 0..d {
            let dst = out.component_mut(c * d + j);
            for i in 0..len {
                if !g.is_nyquist(i) {
                    dst[i] = I * g.wavevector(i)[j] * src[i];
                }
            }
        }
    }
    out
}

pub fn gradient(f: &Field) -> Field {
    gradient_spectral(&f.to_spectral()).to_physical()
}

/// Pointwise `|grad f|^2` summed over all components and directions.
pub fn gradient_density(f: &Field) -> Field {
    let gr = gradient(f);
    Field::from_vec(*f.grid(), 1, gr.magnitude_squared()).expect("shape")
}

pub fn divergence_spectral(u: &Spectrum) -> Result<Spectrum> {
    let g = *u.grid();
    if u.components() != g.dims() {
        return Err(Error::ShapeMismatch("divergence expects a vector field".into()));
    }
    let len = g.len();
    let mut out = Spectrum::zeros(g, 1);
    let dst = out.component_mut(0);
    for i in 0..len {
        if g.is_nyquist(i) {
            continue;
        }
        let k = g.wavevector(i);
        let mut acc = ZERO;
        for j in 0..g.dims() {
            acc += I * k[j] * u.component(j)[i];
        }
        dst[i] = acc;
    }
    Ok(out)
}

pub fn divergence(u: &Field) -> Result<Field> {
    Ok(divergence_spectral(&u.to_spectral())?.to_physical())
}

/// Largest modulus of `kappa . u_hat` over all modes, a resolution-independent measure of
/// how far a vector field is from solenoidal.
pub fn divergence_residual(u: &Field) -> Result<f64> {
    u.expect_vector("divergence residual")?;
    let s = u.to_spectral();
    let g = *u.grid();
    let mut m: f64 = 0.0;
    for i in 0..g.len() {
        if g.is_nyquist(i) {
            continue;
        }
        let k = g.wavevector(i);
        let mut acc = ZERO;
        for j in 0..g.dims() {
            acc += k[j] * s.component(j)[i];
        }
        m = m.max(acc.norm());
    }
    Ok(m)
}

/// Curl of a 3D vector field, or the scalar vorticity `d_1 u_2 - d_2 u_1` in 2D.
pub fn curl(u: &Field) -> Result<Field> {
    u.expect_vector("curl")?;
    let g = *u.grid();
    let gr = gradient(u);
    let d = g.dims();
    let len = g.len();
    let at = |c: usize, j: usize| gr.component(c * d + j);
    if d == 2 {
        let data = (0..len).map(|i| at(1, 0)[i] - at(0, 1)[i]).collect();
        return Field::from_vec(g, 1, data);
    }
    let mut data = vec![0.0; 3 * len];
    for i in 0..len {
        data[i] = at(2, 1)[i] - at(1, 2)[i];
        data[len + i] = at(0, 2)[i] - at(2, 0)[i];
        data[2 * len + i] = at(1, 0)[i] - at(0, 1)[i];
    }
    Field::from_vec(g, 3, data)
}

fn map_modes(s: &Spectrum, m: impl Fn(&Grid, usize) -> Complex64) -> Spectrum {
    let g = *s.grid();
    let len = g.len();
    let mut out = s.clone();
    for i in 0..len {
        let f = if g.is_nyquist(i) { ZERO } else { m(&g, i) };
        for c in 0..s.components() {
            out.component_mut(c)[i] *= f;
        }
    }
    out
}

pub fn laplacian_spectral(s: &Spectrum) -> Spectrum {
    map_modes(s, |g, i| {
        let k = g.wavevector(i);
        Complex64::new(-dot(k, k), 0.0)
    })
}

pub fn laplacian(f: &Field) -> Field {
    laplacian_spectral(&f.to_spectral()).to_physical()
}

/// Inverse Laplacian on mean-zero data; the mean mode is annihilated.
pub fn inverse_laplacian(f: &Field) -> Field {
    map_modes(&f.to_spectral(), |g, i| {
        let k = g.wavevector(i);
        let k2 = dot(k, k);
        if k2 == 0.0 {
            ZERO
        } else {
            Complex64::new(-1.0 / k2, 0.0)
        }
    })
    .to_physical()
}

/// Riesz transform `R_j`, multiplier `-i kappa_j / |kappa|`, zero at the mean mode.
pub fn riesz_spectral(j: usize, s: &Spectrum) -> Result<Spectrum> {
    if j >= s.grid().dims() {
        return Err(Error::InvalidArgument(format!("Riesz index {j} out of range")));
    }
    Ok(map_modes(s, |g, i| {
        let k = g.wavevector(i);
        let n = dot(k, k).sqrt();
        if n == 0.0 {
            ZERO
        } else {
            -I * (k[j] / n)
        }
    }))
}

pub fn riesz(j: usize, f: &Field) -> Result<Field> {
    Ok(riesz_spectral(j, &f.to_spectral())?.to_physical())
}

/// Leray projection `u - kappa (kappa . u) / |kappa|^2`; the mean mode passes through.
pub fn leray_spectral(u: &Spectrum) -> Result<Spectrum> {
    let g = *u.grid();
    let d = g.dims();
    if u.components() != d {
        return Err(Error::ShapeMismatch("Leray projection expects a vector field".into()));
    }
    let mut out = u.clone();
    leray_in_place(&mut out);
    Ok(out)
}

pub(crate) fn leray_in_place(u: &mut Spectrum) {
    let g = *u.grid();
    let d = g.dims();
    let len = g.len();
    for i in 0..len {
        if g.is_nyquist(i) {
            for c in 0..d {
                u.component_mut(c)[i] = ZERO;
            }
            continue;
        }
        let k = g.wavevector(i);
        let k2 = dot(k, k);
        if k2 == 0.0 {
            continue;
        }
        let mut kd = ZERO;
        for c in 0..d {
            kd += k[c] * u.component(c)[i];
        }
        for c in 0..d {
            let v = u.component(c)[i] - kd * (k[c] / k2);
            u.component_mut(c)[i] = v;
        }
    }
}

pub fn leray(u: &Field) -> Result<Field> {
    Ok(leray_spectral(&u.to_spectral())?.to_physical())
}

/// `sum_jk R_j R_k T_jk` for a tensor given in the layout of [`gradient`]:
/// multiplier `-kappa_j kappa_k / |kappa|^2`.
pub fn riesz_contraction(t: &Field) -> Result<Field> {
    let g = *t.grid();
    let d = g.dims();
    if t.components() != d * d {
        return Err(Error::ShapeMismatch("expected a rank-2 tensor field".into()));
    }
    let s = t.to_spectral();
    let len = g.len();
    let mut out = Spectrum::zeros(g, 1);
    for i in 0..len {
        if g.is_nyquist(i) {
            continue;
        }
        let k = g.wavevector(i);
        let k2 = dot(k, k);
        if k2 == 0.0 {
            continue;
        }
        let mut acc = ZERO;
        for a in 0..d {
            for b in 0..d {
                acc -= s.component(a * d + b)[i] * (k[a] * k[b] / k2);
            }
        }
        out.component_mut(0)[i] = acc;
    }
    Ok(out.to_physical())
}

/// Pointwise outer product `a_j b_k` in tensor layout.
pub fn outer(a: &Field, b: &Field) -> Result<Field> {
    a.expect_vector("outer")?;
    b.expect_vector("outer")?;
    a.grid().same_as(b.grid())?;
    let g = *a.grid();
    let d = g.dims();
    let len = g.len();
    let mut data = vec![0.0; d * d * len];
    for j in 0..d {
        for k in 0..d {
            let dst = &mut data[(j * d + k) * len..(j * d + k + 1) * len];
            for ((o, x), y) in dst.iter_mut().zip(a.component(j)).zip(b.component(k)) {
                *o = x * y;
            }
        }
    }
    Field::from_vec(g, d * d, data)
}

/// Zero every mode with some `|k_j| > N/3`.
pub fn dealias_mask(g: &Grid) -> Vec<bool> {
    let cut = g.n() as i64 / 3;
    (0..g.len())
        .map(|i| {
            let k = g.wavenumbers(i);
            (0..g.dims()).all(|a| k[a].abs() <= cut)
        })
        .collect()
}

/// Keep only modes with `|k|_inf <= kmax`.
pub fn band_limit(f: &Field, kmax: i64) -> Field {
    let g = *f.grid();
    let mut s = f.to_spectral();
    let len = g.len();
    for i in 0..len {
        let k = g.wavenumbers(i);
        if (0..g.dims()).any(|a| k[a].abs() > kmax) || g.is_nyquist(i) {
            for c in 0..s.components() {
                s.component_mut(c)[i] = ZERO;
            }
        }
    }
    s.to_physical()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g3() -> Grid {
        Grid::new(3, 16, 2.0).unwrap()
    }

    #[test]
    fn derivative_of_sine() {
        let g = g3();
        let s = PI / 2.0;
        let f = Field::scalar(g, |x| (s * x[1]).sin() * (2.0 * s * x[2]).cos());
        let gr = gradient(&f);
        let e1 = Field::scalar(g, |x| s * (s * x[1]).cos() * (2.0 * s * x[2]).cos());
        let e2 = Field::scalar(g, |x| -2.0 * s * (s * x[1]).sin() * (2.0 * s * x[2]).sin());
        assert!(Field::from_vec(g, 1, gr.component(1).to_vec()).unwrap().sub(&e1).unwrap().max_abs() < 1e-12);
        assert!(Field::from_vec(g, 1, gr.component(2).to_vec()).unwrap().sub(&e2).unwrap().max_abs() < 1e-12);
        assert!(gr.component(0).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn riesz_of_cosine() {
        let g = g3();
        let s = PI / 2.0;
        let k = [1.0 * s, 2.0 * s, -1.0 * s];
        let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        let f = Field::scalar(g, |x| (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]).cos());
        for j in 0..3 {
            let r = riesz(j, &f).unwrap();
            let e = Field::scalar(g, |x| k[j] / kn * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]).sin());
            assert!(r.sub(&e).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn riesz_squares_sum_to_minus_identity_on_mean_zero() {
        let g = g3();
        let s = PI / 2.0;
        let f = Field::scalar(g, |x| 1.5 + (s * x[0]).sin() * (s * x[1]).cos() + (2.0 * s * x[2]).sin());
        let mut acc = Field::zeros(g, 1);
        for j in 0..3 {
            acc.axpy(1.0, &riesz(j, &riesz(j, &f).unwrap()).unwrap()).unwrap();
        }
        let mut mz = f.clone();
        mz.data_mut().iter_mut().for_each(|v| *v -= 1.5);
        assert!(acc.add(&mz).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn leray_kills_gradients_and_keeps_curls() {
        let g = g3();
        let s = PI / 2.0;
        let grad = Field::vector(g, |x| {
            [s * (s * x[0]).cos() * (s * x[1]).sin(), s * (s * x[0]).sin() * (s * x[1]).cos(), 0.0]
        });
        assert!(leray(&grad).unwrap().max_abs() < 1e-12);
        let sol = Field::vector(g, |x| [(s * x[2]).sin(), (s * x[2]).cos(), (s * x[0]).sin()]);
        assert!(leray(&sol).unwrap().sub(&sol).unwrap().max_abs() < 1e-12);
        let p = leray(&grad.add(&sol).unwrap()).unwrap();
        assert!(divergence_residual(&p).unwrap() < 1e-12);
    }

    #[test]
    fn laplacian_inverse_roundtrip() {
        let g = g3();
        let f = Field::scalar(g, |x| x[0].sin() + (x[1] * PI).cos() * x[2].sin());
        let lf = laplacian(&f);
        let back = inverse_laplacian(&lf);
        let f0 = Field::scalar(g, |x| x[0].sin() + (x[1] * PI).cos() * x[2].sin());
        // sin(x) is not periodic on [-2,2); compare via spectral filter of f instead
        let mut ff = f0.to_spectral();
        ff.zero_nyquist();
        ff.data_mut()[0] = Complex64::new(0.0, 0.0);
        assert!(back.sub(&ff.to_physical()).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn curl_of_abc_is_itself() {
        let g = Grid::cube(16).unwrap();
        let u = Field::vector(g, |x| {
            [x[2].sin() + x[1].cos(), x[0].sin() + x[2].cos(), x[1].sin() + x[0].cos()]
        });
        assert!(curl(&u).unwrap().sub(&u).unwrap().max_abs() < 1e-12);
    }
}
