//! Periodic box `[-L, L)^d`, real fields sampled on it, and their Fourier coefficients.
//!
//! Sample points are `x_i = -L + i * 2L / N`. Wavenumbers are taken in `(-N/2, N/2]` and the
//! physical wavevector is `kappa = pi * k / L`. Coefficients are normalised so that the
//! constant function `1` has coefficient `1` at `k = 0`; consequently
//! `sum(cellvol * |f|^2) = (2L)^d * sum(|c_k|^2)`.

mod fft;
pub mod ops;

use crate::error::{invalid, Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dims: usize,
    n: usize,
    half_width: f64,
}

impl Grid {
    /// `dims` must be 2 or 3, `n` even and at least 8, `half_width` positive and finite.
    pub fn new(dims: usize, n: usize, half_width: f64) -> Result<Self> {
        if dims != 2 && dims != 3 {
            return invalid(format!("dimension must be 2 or 3, got {dims}"));
        }
        if n < 8 || n % 2 != 0 {
            return invalid(format!("resolution must be even and >= 8, got {n}"));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return invalid(format!("half-width must be positive, got {half_width}"));
        }
        Ok(Grid { dims, n, half_width })
    }

    /// The `[-pi, pi)^3` box.
    pub fn cube(n: usize) -> Result<Self> {
        Grid::new(3, n, PI)
    }

    /// The `[-pi, pi)^2` box.
    pub fn square(n: usize) -> Result<Self> {
        Grid::new(2, n, PI)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dims as i32)
    }
    /// Box volume `(2L)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dims as i32)
    }
    /// Number of sample points `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dims as u32)
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Axis indices of a flat index, padded with zeros in 2D.
    #[inline]
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let n = self.n;
        if self.dims == 3 {
            [flat / (n * n), (flat / n) % n, flat % n]
        } else {
            [flat / n, flat % n, 0]
        }
    }

    #[inline]
    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        let n = self.n;
        if self.dims == 3 {
            (idx[0] * n + idx[1]) * n + idx[2]
        } else {
            idx[0] * n + idx[1]
        }
    }

    /// Physical position of a sample point (third coordinate 0 in 2D).
    #[inline]
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let m = self.multi_index(flat);
        let mut p = [0.0; 3];
        for a in 0..self.dims {
            p[a] = self.coord(m[a]);
        }
        p
    }

    /// Signed integer wavenumber of an axis index, in `(-N/2, N/2]`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn kappa(&self, i: usize) -> f64 {
        PI * self.wavenumber(i) as f64 / self.half_width
    }

    /// Physical wavevector of a flat spectral index.
    #[inline]
    pub fn wavevector(&self, flat: usize) -> [f64; 3] {
        let m = self.multi_index(flat);
        let mut k = [0.0; 3];
        for a in 0..self.dims {
            k[a] = self.kappa(m[a]);
        }
        k
    }

    /// Integer wavevector of a flat spectral index.
    #[inline]
    pub fn wavenumbers(&self, flat: usize) -> [i64; 3] {
        let m = self.multi_index(flat);
        let mut k = [0i64; 3];
        for a in 0..self.dims {
            k[a] = self.wavenumber(m[a]);
        }
        k
    }

    /// True if any axis sits on the Nyquist index `N/2`.
    #[inline]
    pub fn is_nyquist(&self, flat: usize) -> bool {
        let m = self.multi_index(flat);
        (0..self.dims).any(|a| m[a] == self.n / 2)
    }

    /// Minimum-image displacement `x - c` on the torus.
    #[inline]
    pub fn displacement(&self, x: [f64; 3], c: [f64; 3]) -> [f64; 3] {
        let period = 2.0 * self.half_width;
        let mut d = [0.0; 3];
        for a in 0..self.dims {
            let mut v = x[a] - c[a];
            v -= period * (v / period).round();
            d[a] = v;
        }
        d
    }

    /// Whether `p` lies in the fundamental box `[-L, L)^d`.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..self.dims).all(|a| p[a] >= -self.half_width && p[a] < self.half_width)
    }

    pub(crate) fn same_as(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::ShapeMismatch(format!("grids differ: {self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Real field with `components` scalar slots stored component-major, each row-major with the
/// last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    components: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid, components: usize) -> Self {
        Field { grid, components, data: vec![0.0; components * grid.len()] }
    }

    pub fn from_vec(grid: Grid, components: usize, data: Vec<f64>) -> Result<Self> {
        if components == 0 || data.len() != components * grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values for {} components, got {}",
                components * grid.len(),
                components,
                data.len()
            )));
        }
        Ok(Field { grid, components, data })
    }

    /// Sample a scalar function of position.
    pub fn scalar(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Field { grid, components: 1, data }
    }

    /// Sample a vector function of position; only the first `dims` entries are used.
    pub fn vector(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let d = grid.dims();
        let len = grid.len();
        let mut data = vec![0.0; d * len];
        for i in 0..len {
            let v = f(grid.point(i));
            for c in 0..d {
                data[c * len + i] = v[c];
            }
        }
        Field { grid, components: d, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn components(&self) -> usize {
        self.components
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let len = self.grid.len();
        &self.data[c * len..(c + 1) * len]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let len = self.grid.len();
        &mut self.data[c * len..(c + 1) * len]
    }

    pub fn is_vector(&self) -> bool {
        self.components == self.grid.dims()
    }

    pub(crate) fn expect_vector(&self, what: &str) -> Result<()> {
        if !self.is_vector() {
            return Err(Error::ShapeMismatch(format!(
                "{what}: expected {} components, got {}",
                self.grid.dims(),
                self.components
            )));
        }
        Ok(())
    }

    pub(crate) fn expect_compatible(&self, other: &Field) -> Result<()> {
        self.grid.same_as(&other.grid)?;
        if self.components != other.components {
            return Err(Error::ShapeMismatch(format!(
                "component counts differ: {} vs {}",
                self.components, other.components
            )));
        }
        Ok(())
    }

    /// Vector value at a flat index (zero-padded to three entries).
    #[inline]
    pub fn value(&self, flat: usize) -> [f64; 3] {
        let len = self.grid.len();
        let mut v = [0.0; 3];
        for c in 0..self.components.min(3) {
            v[c] = self.data[c * len + flat];
        }
        v
    }

    /// Pointwise squared Euclidean magnitude across components.
    pub fn magnitude_squared(&self) -> Vec<f64> {
        let len = self.grid.len();
        let mut out = vec![0.0; len];
        for c in 0..self.components {
            for (o, v) in out.iter_mut().zip(&self.data[c * len..(c + 1) * len]) {
                *o += v * v;
            }
        }
        out
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.magnitude_squared().into_iter().map(f64::sqrt).collect()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude_squared().into_iter().fold(0.0, f64::max).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }

    pub fn scaled(&self, a: f64) -> Field {
        let mut f = self.clone();
        f.scale(a);
        f
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Field) -> Result<()> {
        self.expect_compatible(other)?;
        self.data.iter_mut().zip(&other.data).for_each(|(x, y)| *x += a * y);
        Ok(())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        let mut f = self.clone();
        f.axpy(1.0, other)?;
        Ok(f)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        let mut f = self.clone();
        f.axpy(-1.0, other)?;
        Ok(f)
    }

    /// `sum(cellvol * f . g)`.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.expect_compatible(other)?;
        let prod: Vec<f64> = self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect();
        Ok(crate::norms::pairwise_sum(&prod) * self.grid.cell_volume())
    }

    /// `sum(cellvol * |f|^2)`.
    pub fn energy(&self) -> f64 {
        crate::norms::pairwise_sum(&self.magnitude_squared()) * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// Mean value of each component.
    pub fn mean(&self) -> Vec<f64> {
        let len = self.grid.len() as f64;
        (0..self.components)
            .map(|c| crate::norms::pairwise_sum(self.component(c)) / len)
            .collect()
    }

    /// Periodic shift by whole cells: the result `g` satisfies `g(x) = f(x - shift * h)`.
    pub fn roll(&self, shift: [i64; 3]) -> Field {
        let g = self.grid;
        let n = g.n() as i64;
        let len = g.len();
        let mut out = Field::zeros(g, self.components);
        for i in 0..len {
            let m = g.multi_index(i);
            let mut src = [0usize; 3];
            for a in 0..g.dims() {
                src[a] = (m[a] as i64 - shift[a]).rem_euclid(n) as usize;
            }
            let j = g.flat_index(src);
            for c in 0..self.components {
                out.data[c * len + i] = self.data[c * len + j];
            }
        }
        out
    }

    /// Stack fields component-wise.
    pub fn stack(parts: &[&Field]) -> Result<Field> {
        let first = parts.first().ok_or_else(|| Error::InvalidArgument("empty stack".into()))?;
        let mut data = Vec::new();
        let mut components = 0;
        for p in parts {
            p.grid.same_as(&first.grid)?;
            data.extend_from_slice(&p.data);
            components += p.components;
        }
        Field::from_vec(first.grid, components, data)
    }

    pub fn to_spectral(&self) -> Spectrum {
        let len = self.grid.len();
        let mut data: Vec<Complex64> = self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for c in 0..self.components {
            fft::forward(&self.grid, &mut data[c * len..(c + 1) * len]);
        }
        Spectrum { grid: self.grid, components: self.components, data }
    }
}

/// Fourier coefficients of a field, same layout as [`Field`].
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    components: usize,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: Grid, components: usize) -> Self {
        Spectrum { grid, components, data: vec![Complex64::new(0.0, 0.0); components * grid.len()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn components(&self) -> usize {
        self.components
    }
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let len = self.grid.len();
        &self.data[c * len..(c + 1) * len]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let len = self.grid.len();
        &mut self.data[c * len..(c + 1) * len]
    }

    pub fn from_components(grid: Grid, parts: Vec<Vec<Complex64>>) -> Result<Self> {
        let components = parts.len();
        let mut data = Vec::with_capacity(components * grid.len());
        for p in parts {
            if p.len() != grid.len() {
                return Err(Error::ShapeMismatch("spectral component length".into()));
            }
            data.extend(p);
        }
        Ok(Spectrum { grid, components, data })
    }

    /// Back to physical space, discarding the imaginary part.
    pub fn to_physical(&self) -> Field {
        let len = self.grid.len();
        let mut buf = self.data.clone();
        for c in 0..self.components {
            fft::inverse(&self.grid, &mut buf[c * len..(c + 1) * len]);
        }
        Field { grid: self.grid, components: self.components, data: buf.into_iter().map(|z| z.re).collect() }
    }

    /// `(2L)^d * sum(|c_k|^2)`, equal to the physical energy by Parseval.
    pub fn energy(&self) -> f64 {
        let sq: Vec<f64> = self.data.iter().map(|z| z.norm_sqr()).collect();
        crate::norms::pairwise_sum(&sq) * self.grid.volume()
    }

    pub fn zero_nyquist(&mut self) {
        let len = self.grid.len();
        for i in 0..len {
            if self.grid.is_nyquist(i) {
                for c in 0..self.components {
                    self.data[c * len + i] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    pub fn axpy(&mut self, a: f64, other: &Spectrum) {
        self.data.iter_mut().zip(&other.data).for_each(|(x, y)| *x += y * a);
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|x| *x *= a);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(3, 7, 1.0).is_err());
        assert!(Grid::new(3, 6, 1.0).is_err());
        assert!(Grid::new(4, 8, 1.0).is_err());
        assert!(Grid::new(3, 8, 0.0).is_err());
        assert!(Grid::new(2, 8, 2.0).is_ok());
    }

    #[test]
    fn wavenumbers_cover_half_open_range() {
        let g = Grid::cube(8).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.wavenumber(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        assert_eq!(g.coord(0), -PI);
        assert!((g.coord(4)).abs() < 1e-15);
    }

    #[test]
    fn constant_maps_to_unit_mean_mode() {
        let g = Grid::cube(8).unwrap();
        let s = Field::scalar(g, |_| 1.0).to_spectral();
        assert!((s.data()[0].re - 1.0).abs() < 1e-14);
        assert!(s.data()[1..].iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn single_mode_lands_on_its_wavevector() {
        // exp(i kappa x) with k = (1, -2, 3) on a non-standard box
        let g = Grid::new(3, 8, 2.0).unwrap();
        let k = [1i64, -2, 3];
        let f = Field::scalar(g, |x| {
            let ph: f64 = (0..3).map(|a| PI * k[a] as f64 / 2.0 * x[a]).sum();
            ph.cos()
        });
        let s = f.to_spectral();
        for i in 0..g.len() {
            let w = g.wavenumbers(i);
            let expect = if w == k || w == [-k[0], -k[1], -k[2]] { 0.5 } else { 0.0 };
            assert!((s.data()[i].re - expect).abs() < 1e-13, "{w:?}");
            assert!(s.data()[i].im.abs() < 1e-13);
        }
    }

    #[test]
    fn roll_matches_translation() {
        let g = Grid::cube(8).unwrap();
        let h = g.spacing();
        let f = Field::scalar(g, |x| (x[0] + 2.0 * x[1]).sin() + x[2].cos());
        let r = f.roll([1, 0, -2]);
        let e = Field::scalar(g, |x| (x[0] - h + 2.0 * x[1]).sin() + (x[2] + 2.0 * h).cos());
        assert!(r.sub(&e).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn minimum_image_wraps() {
        let g = Grid::cube(8).unwrap();
        let d = g.displacement([3.0, 0.0, 0.0], [-3.0, 0.0, 0.0]);
        assert!((d[0] - (6.0 - 2.0 * PI)).abs() < 1e-14);
    }
}
