//! Scripted studies: ε-sweep of the relative energy, limit defect,
//! manufactured-solution convergence and the functional-inequality stress test.

pub mod defect;
pub mod inequality;
pub mod mms;
pub mod sweep;

pub use defect::limit_defect;
pub use inequality::{inequality_stress, InequalityReport};
pub use mms::{
    mms_convergence, ConvergenceResult, ManufacturedSolution, MmsSolver, MmsStudy, Profile,
    Refinement,
};
pub use sweep::{eps_sweep, SweepResult};

/// Least-squares line through `(log x, log y)`: `(slope, intercept, r²)`.
pub fn fit_log_log(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::fit_log_log;

    #[test]
    fn exact_power_law() {
        let x = [0.2, 0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(0.25)).collect();
        let (s, c, r2) = fit_log_log(&x, &y);
        assert!((s - 0.25).abs() < 1e-12);
        assert!((c - 3f64.ln()).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }
}
