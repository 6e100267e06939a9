//! Relative energy between relaxed and limit solutions across a range of ε.

use rayon::prelude::*;

use crate::bt::{run_bt, BtConfig, BtMode};
use crate::error::{Error, Result};
use crate::experiments::fit_log_log;
use crate::functionals::{relative_energy, DiagnosticsRecord};
use crate::grid::{grad, integrate};
use crate::nsk::{run_nsk, NskConfig};
use crate::state::{default_delta, total_density, InitialConditionSpec, Params, VelocityPolicy};
use crate::trajectory::Trajectory;

/// Largest fraction of degraded members a sweep tolerates.
pub const MAX_DEGRADED_FRACTION: f64 = 0.25;

#[derive(Clone, Debug)]
pub struct SweepResult {
    /// Strictly decreasing.
    pub eps_values: Vec<f64>,
    /// `E_R(t_end; ε)`.
    pub er_final: Vec<f64>,
    /// Slope of `log E_R(t_end)` against `log ε` over non-degraded members.
    pub fitted_exponent: f64,
    pub fit_r2: f64,
    /// `true` for members that needed positivity clipping.
    pub run_flags: Vec<bool>,
    /// `∫₀^{t_end} Σ_i ∫ρ_i|u_i − ū|²` per member (trapezoidal in time).
    pub velocity_defect: Vec<f64>,
    /// Per-member diagnostics with the relative energy filled in.
    pub diagnostics: Vec<Vec<DiagnosticsRecord>>,
}

impl SweepResult {
    /// Largest relative increase of `E_R(t_end)` as ε decreases (0 when
    /// monotone).
    pub fn worst_monotonicity_violation(&self) -> f64 {
        self.er_final
            .windows(2)
            .map(|w| ((w[1] - w[0]) / w[0]).max(0.0))
            .fold(0.0, f64::max)
    }
}

fn member(
    ic: &InitialConditionSpec,
    base: &NskConfig,
    eps: f64,
    limit: &Trajectory,
) -> Result<(Vec<DiagnosticsRecord>, bool, f64)> {
    let params = Params {
        eps,
        delta: default_delta(eps),
        ..base.params.clone()
    };
    let cfg = NskConfig {
        params: params.clone(),
        ..base.clone()
    };
    let traj = run_nsk(ic, &cfg)?;
    let mut records = traj.diagnostics.clone();
    let mut defect = Vec::with_capacity(records.len());
    for (rec, state) in records.iter_mut().zip(&traj.states) {
        let lim = limit.state_at(state.time).ok_or_else(|| {
            Error::Experiment(format!("limit trajectory does not cover t = {}", state.time))
        })?;
        let rho_bar = total_density(&lim);
        let u_bar = grad(&rho_bar).map_components(|c| c.scale(-1.0));
        rec.relative_energy = Some(relative_energy(state, &rho_bar, &u_bar, &params)?);
        let d: f64 = state
            .species
            .iter()
            .map(|s| integrate(&s.u.sub(&u_bar).norm_sq().mul(&s.rho)))
            .sum();
        defect.push((state.time, d));
    }
    let integral = defect
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum();
    Ok((records, traj.is_degraded(), integral))
}

/// Run the relaxed system for each ε in `eps_list` with `k = (1, 1)` and
/// well-prepared data, compare against the limit solution and fit the decay
/// of `E_R(t_end)` in ε. Members run in parallel; the result is independent
/// of scheduling.
pub fn eps_sweep(
    ic: &InitialConditionSpec,
    base: &NskConfig,
    eps_list: &[f64],
    t_end: f64,
) -> Result<SweepResult> {
    if eps_list.len() < 2 {
        return Err(Error::InvalidParams("sweep needs at least two eps values".into()));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) || eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidParams(
            "sweep.eps must be positive and strictly decreasing".into(),
        ));
    }
    if base.params.k.iter().any(|&k| k != 1.0) {
        return Err(Error::InvalidParams("eps sweep requires k_i = 1 for all species".into()));
    }
    if ic.velocity != VelocityPolicy::WellPrepared {
        return Err(Error::InvalidInitialCondition(
            "eps sweep requires well-prepared velocities".into(),
        ));
    }
    let base = NskConfig {
        t_end,
        ..base.clone()
    };
    base.validate()?;

    let limit_cfg = BtConfig {
        mode: BtMode::RankOne,
        diag_every: 1,
        ..BtConfig::new(base.grid, base.params.clone(), base.dt / 4.0, t_end)
    };
    let limit = run_bt(ic, &limit_cfg)?;

    let members: Vec<Result<(Vec<DiagnosticsRecord>, bool, f64)>> = eps_list
        .par_iter()
        .map(|&eps| member(ic, &base, eps, &limit))
        .collect();
    let mut diagnostics = Vec::new();
    let mut run_flags = Vec::new();
    let mut velocity_defect = Vec::new();
    let mut er_final = Vec::new();
    for m in members {
        let (records, degraded, defect) = m?;
        let last = records
            .last()
            .and_then(|r| r.relative_energy)
            .ok_or_else(|| Error::Experiment("member produced no diagnostics".into()))?;
        er_final.push(last);
        run_flags.push(degraded);
        velocity_defect.push(defect);
        diagnostics.push(records);
    }
    let n_degraded = run_flags.iter().filter(|&&f| f).count();
    if n_degraded as f64 > MAX_DEGRADED_FRACTION * eps_list.len() as f64 {
        return Err(Error::Experiment(format!(
            "{n_degraded} of {} sweep members needed positivity clipping",
            eps_list.len()
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = eps_list
        .iter()
        .zip(&er_final)
        .zip(&run_flags)
        .filter(|(_, &deg)| !deg)
        .map(|((&e, &r), _)| (e, r))
        .unzip();
    if xs.len() < 2 {
        return Err(Error::Experiment("fewer than two usable sweep members".into()));
    }
    let (fitted_exponent, _, fit_r2) = fit_log_log(&xs, &ys);
    Ok(SweepResult {
        eps_values: eps_list.to_vec(),
        er_final,
        fitted_exponent,
        fit_r2,
        run_flags,
        velocity_defect,
        diagnostics,
    })
}
