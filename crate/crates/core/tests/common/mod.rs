//! Independent reference evaluations for the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use btrelax::{GridSpec, ScalarField, SpeciesState, SystemState, VectorField};

pub fn sample(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..n).map(|j| f(2.0 * PI * j as f64 / n as f64)).collect()
}

/// Second-order central first difference on a periodic grid.
pub fn d1(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let h = 2.0 * PI / n as f64;
    (0..n).map(|j| (v[(j + 1) % n] - v[(j + n - 1) % n]) / (2.0 * h)).collect()
}

/// Second-order central second difference on a periodic grid.
pub fn d2(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let h = 2.0 * PI / n as f64;
    (0..n)
        .map(|j| (v[(j + 1) % n] - 2.0 * v[j] + v[(j + n - 1) % n]) / (h * h))
        .collect()
}

/// Conservative `∂_x(a ∂_x p)` with face averages of `a`.
pub fn flux_div(a: &[f64], p: &[f64]) -> Vec<f64> {
    let n = a.len();
    let h = 2.0 * PI / n as f64;
    let face = |j: usize| 0.5 * (a[j] + a[(j + 1) % n]) * (p[(j + 1) % n] - p[j]) / h;
    (0..n).map(|j| (face(j) - face((j + n - 1) % n)) / h).collect()
}

/// Richardson combination of second-order results on `n` and `2n` points,
/// restricted to the coarse grid.
pub fn richardson(coarse: &[f64], fine: &[f64]) -> Vec<f64> {
    coarse
        .iter()
        .enumerate()
        .map(|(j, c)| (4.0 * fine[2 * j] - c) / 3.0)
        .collect()
}

/// Derivative by a direct O(n²) discrete Fourier sum over `|k| ≤ 16`; the
/// inputs are trigonometric polynomials of low degree.
pub fn dft_derivative(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let x = |j: usize| 2.0 * PI * j as f64 / n as f64;
    let mut out = vec![0.0; n];
    for k in 1..=16.min(n / 2 - 1) {
        let (mut c, mut s) = (0.0, 0.0);
        for (j, &vj) in v.iter().enumerate() {
            c += vj * (k as f64 * x(j)).cos();
            s += vj * (k as f64 * x(j)).sin();
        }
        c *= 2.0 / n as f64;
        s *= 2.0 / n as f64;
        for (j, o) in out.iter_mut().enumerate() {
            let ph = k as f64 * x(j);
            *o += k as f64 * (-c * ph.sin() + s * ph.cos());
        }
    }
    out
}

/// Trapezoidal rule on the periodic grid.
pub fn quad(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() * 2.0 * PI / v.len() as f64
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// 1-D state from density and velocity arrays.
pub fn state_1d(g: GridSpec, time: f64, rho: &[Vec<f64>], u: &[Vec<f64>]) -> SystemState {
    let species = rho
        .iter()
        .zip(u)
        .map(|(r, v)| SpeciesState {
            rho: ScalarField::from_values(g, r.clone()).unwrap(),
            u: VectorField::from_components(g, vec![ScalarField::from_values(g, v.clone()).unwrap()]).unwrap(),
        })
        .collect();
    SystemState::new(time, species).unwrap()
}
