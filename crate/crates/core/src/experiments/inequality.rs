//! Random-field study of the ratio
//! `∫ρ|D² log ρ|² / ∫(|Δ√ρ|² + |∇ρ^{1/4}|⁴)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functionals::ineq_1ineq_ratio;
use crate::grid::GridSpec;
use crate::state::random_smooth_density;

/// Highest wavevector component of the random fields; together with the
/// exponential amplitude decay this keeps them well resolved from `n = 16`.
pub const STRESS_MAX_MODE: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityReport {
    pub n_samples: usize,
    pub seed: u64,
    pub dim: usize,
    pub n: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    /// Ratios in sample order.
    pub ratios: Vec<f64>,
}

/// Ratio statistics over `n_samples` random smooth positive fields drawn
/// from `seed`.
pub fn inequality_stress(n_samples: usize, seed: u64, grid: &GridSpec) -> Result<InequalityReport> {
    if n_samples == 0 {
        return Err(Error::InvalidParams("n_samples must be ≥ 1".into()));
    }
    if 4 * STRESS_MAX_MODE > grid.n() {
        return Err(Error::InvalidGrid(format!(
            "stress fields use modes up to {STRESS_MAX_MODE}, need n ≥ {}",
            4 * STRESS_MAX_MODE
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratios = (0..n_samples)
        .map(|_| ineq_1ineq_ratio(&random_smooth_density(grid, &mut rng, STRESS_MAX_MODE)))
        .collect::<Result<Vec<f64>>>()?;
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 0 {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    };
    Ok(InequalityReport {
        n_samples,
        seed,
        dim: grid.dim(),
        n: grid.n(),
        min: sorted[0],
        median,
        max: sorted[sorted.len() - 1],
        ratios,
    })
}
