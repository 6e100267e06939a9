//! Periodic uniform grids on the torus `[0, 2π)^d` and the Fourier
//! pseudospectral operators built on them.
//!
//! Fields are stored row-major with axis 0 varying slowest. Spectral
//! coefficients are normalised so that `f(x) = Σ_ξ c_ξ exp(i ξ·x)`, i.e. the
//! forward transform divides by the point count and the inverse does not.
//!
//! First-derivative multipliers drop the Nyquist mode (it has no real-valued
//! derivative); second-derivative multipliers on the diagonal keep it. With this
//! convention `grad` and `div` are exactly skew-adjoint under the trapezoidal
//! quadrature and `trace(hessian) == laplacian` holds mode by mode.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest number of spatial dimensions supported.
pub const MAX_DIM: usize = 3;

/// Default dealiasing fraction (the two-thirds rule).
pub const TWO_THIRDS: f64 = 2.0 / 3.0;

/// Periodic uniform grid with `n` points per axis on `[0, 2π)^dim`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    dim: usize,
    n: usize,
    dealias_fraction: f64,
}

/// Build a grid with the default two-thirds dealiasing rule.
pub fn make_grid(dim: usize, n: usize) -> Result<GridSpec> {
    GridSpec::new(dim, n)
}

impl GridSpec {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dim must be 1, 2 or 3 (got {dim})"
            )));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n must be even ≥ 8 (got {n})")));
        }
        Ok(Self {
            dim,
            n,
            dealias_fraction: TWO_THIRDS,
        })
    }

    pub fn with_dealias_fraction(mut self, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias_fraction must lie in (0, 1] (got {fraction})"
            )));
        }
        self.dealias_fraction = fraction;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Total number of grid points, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Axis period, fixed at 2π.
    pub fn length(&self) -> f64 {
        2.0 * PI
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Volume of the torus, `(2π)^dim`.
    pub fn volume(&self) -> f64 {
        self.length().powi(self.dim as i32)
    }

    /// Per-axis indices of a flat (row-major) index.
    pub fn unravel(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for axis in (0..self.dim).rev() {
            idx[axis] = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    /// Physical coordinates `x_j = 2π j / n` of a flat index.
    pub fn coords(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.unravel(flat);
        let h = self.spacing();
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            x[axis] = idx[axis] as f64 * h;
        }
        x
    }

    /// Signed integer wavenumber for a per-axis spectral index. The Nyquist
    /// index maps to `+n/2`.
    pub fn mode(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j <= n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Multiplier used for a first derivative (zero at Nyquist).
    pub fn derivative_wavenumber(&self, j: usize) -> f64 {
        if j == self.n / 2 {
            0.0
        } else {
            self.mode(j) as f64
        }
    }

    /// Squared wavenumber used on the diagonal of second derivatives.
    pub fn wavenumber_sq(&self, j: usize) -> f64 {
        let k = self.mode(j) as f64;
        k * k
    }

    /// `|ξ|²` of a flat spectral index.
    pub fn mode_norm_sq(&self, flat: usize) -> f64 {
        let idx = self.unravel(flat);
        (0..self.dim).map(|a| self.wavenumber_sq(idx[a])).sum()
    }

    /// True when any axis wavenumber exceeds the dealiasing cutoff.
    pub fn is_dealiased_mode(&self, flat: usize) -> bool {
        let cutoff = self.dealias_fraction * (self.n as f64) / 2.0;
        let idx = self.unravel(flat);
        (0..self.dim).any(|a| (self.mode(idx[a]).unsigned_abs() as f64) > cutoff)
    }
}

/// Real scalar field sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch(format!("non-finite value {bad}")));
        }
        Ok(Self { grid, values })
    }

    /// Sample `f(x)` at every grid point; `x` has `dim` entries.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.coords(i);
                f(&x[..grid.dim()])
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &Self) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn to_spectrum(&self) -> Spectrum {
        Spectrum::forward(self)
    }
}

/// Vector field with `dim` scalar components on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            components: vec![ScalarField::zeros(grid); grid.dim()],
        }
    }

    pub fn from_components(grid: GridSpec, components: Vec<ScalarField>) -> Result<Self> {
        if components.len() != grid.dim() {
            return Err(Error::ShapeMismatch(format!(
                "vector field needs {} components, got {}",
                grid.dim(),
                components.len()
            )));
        }
        if components.iter().any(|c| *c.grid() != grid) {
            return Err(Error::ShapeMismatch(
                "vector components live on different grids".into(),
            ));
        }
        Ok(Self { grid, components })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [ScalarField] {
        &mut self.components
    }

    pub fn component(&self, axis: usize) -> &ScalarField {
        &self.components[axis]
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            grid: self.grid,
            components: self.components.iter().map(f).collect(),
        }
    }

    pub fn zip_components(
        &self,
        other: &Self,
        f: impl Fn(&ScalarField, &ScalarField) -> ScalarField,
    ) -> Self {
        Self {
            grid: self.grid,
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    /// Pointwise product with a scalar field.
    pub fn scaled_by(&self, s: &ScalarField) -> Self {
        self.map_components(|c| c.mul(s))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_components(other, ScalarField::sub)
    }

    /// Pointwise dot product.
    pub fn dot(&self, other: &Self) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid);
        for (a, b) in self.components.iter().zip(&other.components) {
            for ((o, x), y) in out.values.iter_mut().zip(&a.values).zip(&b.values) {
                *o += x * y;
            }
        }
        out
    }

    /// Pointwise `|v|²`.
    pub fn norm_sq(&self) -> ScalarField {
        self.dot(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(ScalarField::max_abs).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }
}

/// Rank-two tensor field, `dim × dim` components stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    grid: GridSpec,
    components: Vec<ScalarField>,
}

impl TensorField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn get(&self, row: usize, col: usize) -> &ScalarField {
        &self.components[row * self.grid.dim() + col]
    }

    pub fn trace(&self) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid);
        for a in 0..self.grid.dim() {
            out.axpy(1.0, self.get(a, a));
        }
        out
    }

    /// Pointwise squared Frobenius norm.
    pub fn frobenius_sq(&self) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid);
        for c in &self.components {
            for (o, v) in out.values.iter_mut().zip(&c.values) {
                *o += v * v;
            }
        }
        out
    }
}

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<usize, PlanPair>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        if let Some(p) = cache.get(&n) {
            return p.clone();
        }
        let p = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
        cache.insert(n, p.clone());
        p
    })
}

/// Apply a 1-D transform along every axis of a row-major `n^dim` array.
fn transform_all_axes(grid: &GridSpec, data: &mut [Complex64], fft: &dyn Fft<f64>) {
    let n = grid.n();
    let dim = grid.dim();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // Last axis is contiguous.
    for line in data.chunks_exact_mut(n) {
        fft.process_with_scratch(line, &mut scratch);
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..dim.saturating_sub(1) {
        let stride = n.pow((dim - 1 - axis) as u32);
        let outer = n.pow(axis as u32);
        for o in 0..outer {
            let base = o * n * stride;
            for inner in 0..stride {
                for (j, b) in buf.iter_mut().enumerate() {
                    *b = data[base + j * stride + inner];
                }
                fft.process_with_scratch(&mut buf, &mut scratch);
                for (j, b) in buf.iter().enumerate() {
                    data[base + j * stride + inner] = *b;
                }
            }
        }
    }
}

/// Normalised Fourier coefficients of a real field.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn forward(field: &ScalarField) -> Self {
        let grid = field.grid;
        let mut coeffs: Vec<Complex64> = field
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        let (fwd, _) = plans(grid.n());
        transform_all_axes(&grid, &mut coeffs, fwd.as_ref());
        let scale = 1.0 / grid.len() as f64;
        for c in &mut coeffs {
            *c *= scale;
        }
        Self { grid, coeffs }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Back to grid values; the imaginary residue of the inverse is dropped.
    pub fn to_field(&self) -> ScalarField {
        let mut data = self.coeffs.clone();
        let (_, inv) = plans(self.grid.n());
        transform_all_axes(&self.grid, &mut data, inv.as_ref());
        ScalarField {
            grid: self.grid,
            values: data.into_iter().map(|c| c.re).collect(),
        }
    }

    /// Multiply every coefficient by a real multiplier depending on the
    /// per-axis spectral indices.
    fn apply(&self, mult: impl Fn(&[usize; MAX_DIM]) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(flat, c)| c * mult(&self.grid.unravel(flat)))
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn partial(&self, axis: usize) -> Self {
        let g = self.grid;
        self.apply(|idx| Complex64::new(0.0, g.derivative_wavenumber(idx[axis])))
    }

    pub fn laplacian(&self) -> Self {
        let g = self.grid;
        self.apply(|idx| {
            let k2: f64 = (0..g.dim()).map(|a| g.wavenumber_sq(idx[a])).sum();
            Complex64::new(-k2, 0.0)
        })
    }

    pub fn second_partial(&self, a: usize, b: usize) -> Self {
        let g = self.grid;
        if a == b {
            self.apply(|idx| Complex64::new(-g.wavenumber_sq(idx[a]), 0.0))
        } else {
            self.apply(|idx| {
                Complex64::new(
                    -g.derivative_wavenumber(idx[a]) * g.derivative_wavenumber(idx[b]),
                    0.0,
                )
            })
        }
    }

    pub fn dealias_in_place(&mut self) {
        let g = self.grid;
        for (flat, c) in self.coeffs.iter_mut().enumerate() {
            if g.is_dealiased_mode(flat) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    /// `sqrt((2π)^d Σ_ξ |c_ξ|² / (1 + |ξ|²))`, the periodic `H^{-1}` norm.
    pub fn negative_sobolev_norm(&self) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(flat, c)| c.norm_sqr() / (1.0 + self.grid.mode_norm_sq(flat)))
            .sum();
        (self.grid.volume() * sum).sqrt()
    }
}

/// Spectral gradient.
pub fn grad(f: &ScalarField) -> VectorField {
    let spec = f.to_spectrum();
    let grid = f.grid;
    VectorField {
        grid,
        components: (0..grid.dim())
            .map(|a| spec.partial(a).to_field())
            .collect(),
    }
}

/// Spectral derivative along one axis.
pub fn partial(f: &ScalarField, axis: usize) -> ScalarField {
    f.to_spectrum().partial(axis).to_field()
}

/// Spectral divergence.
pub fn div(v: &VectorField) -> ScalarField {
    let mut acc = Spectrum::zeros(v.grid);
    for (a, c) in v.components.iter().enumerate() {
        acc.add_assign(&c.to_spectrum().partial(a));
    }
    acc.to_field()
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    f.to_spectrum().laplacian().to_field()
}

/// Spectral Hessian; symmetric by construction.
pub fn hessian(f: &ScalarField) -> TensorField {
    let grid = f.grid;
    let d = grid.dim();
    let spec = f.to_spectrum();
    let mut components = vec![ScalarField::zeros(grid); d * d];
    for a in 0..d {
        for b in a..d {
            let c = spec.second_partial(a, b).to_field();
            if a != b {
                components[b * d + a] = c.clone();
            }
            components[a * d + b] = c;
        }
    }
    TensorField { grid, components }
}

/// Trapezoidal (= spectral) quadrature over the torus.
pub fn integrate(f: &ScalarField) -> f64 {
    f.mean() * f.grid.volume()
}

/// Zero all modes above the dealiasing cutoff.
pub fn dealias(f: &ScalarField) -> ScalarField {
    let mut spec = f.to_spectrum();
    spec.dealias_in_place();
    spec.to_field()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let g = make_grid(1, 32).unwrap();
        assert_eq!(g.len(), 32);
        assert!((g.spacing() - PI / 16.0).abs() < 1e-15);
        let g2 = make_grid(2, 16).unwrap();
        assert_eq!(g2.len(), 256);
        assert!((g2.cell_volume() - (PI / 8.0).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        let err = make_grid(1, 7).unwrap_err().to_string();
        assert!(err.contains("n must be even ≥ 8"), "{err}");
        assert!(make_grid(1, 6).is_err());
        assert!(make_grid(0, 16).is_err());
        assert!(make_grid(4, 16).is_err());
        assert!(make_grid(1, 16).unwrap().with_dealias_fraction(0.0).is_err());
    }

    #[test]
    fn round_trip_transform() {
        let g = make_grid(2, 16).unwrap();
        let f = ScalarField::from_fn(g, |x| (x[0] + 2.0 * x[1]).sin().exp());
        let back = f.to_spectrum().to_field();
        let err = f.sub(&back).max_abs() / f.max_abs();
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn derivative_of_sine() {
        let g = make_grid(1, 32).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0].sin());
        let d = grad(&f);
        let exact = ScalarField::from_fn(g, |x| x[0].cos());
        assert!(d.component(0).sub(&exact).max_abs() <= 1e-12);
        let c = ScalarField::constant(g, 3.7);
        assert!(grad(&c).max_abs() < 1e-14);
    }

    #[test]
    fn derivative_2d_mixed_modes() {
        let g = make_grid(2, 32).unwrap();
        let f = ScalarField::from_fn(g, |x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos());
        let d = grad(&f);
        let ex = ScalarField::from_fn(g, |x| 3.0 * (3.0 * x[0]).cos() * (2.0 * x[1]).cos());
        let ey = ScalarField::from_fn(g, |x| -2.0 * (3.0 * x[0]).sin() * (2.0 * x[1]).sin());
        assert!(d.component(0).sub(&ex).max_abs() <= 1e-11);
        assert!(d.component(1).sub(&ey).max_abs() <= 1e-11);
    }

    #[test]
    fn divergence_cases() {
        let g = make_grid(1, 32).unwrap();
        let v = VectorField::from_components(g, vec![ScalarField::from_fn(g, |x| x[0].cos())])
            .unwrap();
        let exact = ScalarField::from_fn(g, |x| -x[0].sin());
        assert!(div(&v).sub(&exact).max_abs() <= 1e-12);

        let g2 = make_grid(2, 32).unwrap();
        let c = VectorField::from_components(
            g2,
            vec![ScalarField::constant(g2, 1.5), ScalarField::constant(g2, -2.0)],
        )
        .unwrap();
        assert!(div(&c).max_abs() < 1e-14);
        let f = ScalarField::from_fn(g2, |x| x[0].sin() * x[1].sin());
        let lap = div(&grad(&f));
        assert!(lap.sub(&f.scale(-2.0)).max_abs() < 1e-12);
    }

    #[test]
    fn laplacian_cases() {
        let g = make_grid(1, 32).unwrap();
        let f = ScalarField::from_fn(g, |x| (2.0 * x[0]).sin());
        assert!(laplacian(&f).sub(&f.scale(-4.0)).max_abs() < 1e-12);
        assert!(laplacian(&ScalarField::constant(g, 2.0)).max_abs() < 1e-14);

        let g64 = make_grid(1, 64).unwrap();
        let f = ScalarField::from_fn(g64, |x| x[0].cos().exp());
        let exact =
            ScalarField::from_fn(g64, |x| (x[0].sin().powi(2) - x[0].cos()) * x[0].cos().exp());
        assert!(laplacian(&f).sub(&exact).max_abs() <= 1e-9);
    }

    #[test]
    fn hessian_cases() {
        let g = make_grid(2, 16).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0].sin());
        let h = hessian(&f);
        assert!(h.get(0, 0).add(&f).max_abs() < 1e-13);
        assert!(h.get(0, 1).max_abs() < 1e-14);
        assert!(h.get(1, 1).max_abs() < 1e-14);

        let f = ScalarField::from_fn(g, |x| x[0].sin() * x[1].sin());
        let h = hessian(&f);
        let off = ScalarField::from_fn(g, |x| x[0].cos() * x[1].cos());
        assert!(h.get(0, 1).sub(&off).max_abs() < 1e-13);
        assert_eq!(h.get(0, 1), h.get(1, 0));
    }

    #[test]
    fn integrate_cases() {
        let g = make_grid(1, 32).unwrap();
        assert!((integrate(&ScalarField::constant(g, 1.0)) - 2.0 * PI).abs() < 1e-14);
        assert!(integrate(&ScalarField::from_fn(g, |x| x[0].sin())).abs() < 1e-14);
        let f = ScalarField::from_fn(g, |x| (1.0 + 0.5 * x[0].sin()).powi(2));
        assert!((integrate(&f) - 2.25 * PI).abs() < 1e-13);
    }

    #[test]
    fn dealias_cases() {
        let g = make_grid(1, 32).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0].sin());
        assert!(dealias(&f).sub(&f).max_abs() < 1e-15);
        let high = ScalarField::from_fn(g, |x| (15.0 * x[0]).sin());
        assert!(dealias(&high).max_abs() < 1e-14);
        let edge = ScalarField::from_fn(g, |x| (10.0 * x[0]).sin());
        assert!(dealias(&edge).sub(&edge).max_abs() < 1e-13);
    }

    #[test]
    fn negative_norm_of_constant_and_mode() {
        let g = make_grid(1, 32).unwrap();
        let c = ScalarField::constant(g, 2.0).to_spectrum();
        assert!((c.negative_sobolev_norm() - (4.0 * 2.0 * PI).sqrt()).abs() < 1e-12);
        // ∫cos² = π, split over ±1 with weight 1/2
        let m = ScalarField::from_fn(g, |x| x[0].cos()).to_spectrum();
        assert!((m.negative_sobolev_norm() - (PI / 2.0).sqrt()).abs() < 1e-12);
    }
}
