//! Limit systems: the Busenberg–Travis system `∂_t ρ_i = div(k_i ρ_i ∇ρ̄)` and
//! its generalization `∂_t ρ_i = div(ρ_i ∇ Σ_j a_ij ρ_j)`.
//!
//! The semi-implicit step freezes each `ρ_i` at its spatial mean, so the
//! implicit part is `ρ_i⁰ Σ_j a_ij Δρ_j`, a small dense system per Fourier
//! mode. The remainder is explicit and dealiased.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::{collect_diagnostics, entropy};
use crate::grid::{grad, integrate, GridSpec, ScalarField, Spectrum, VectorField};
use crate::nsk::{step_plan, Forcing, BLOW_UP_THRESHOLD};
use crate::state::{
    build_initial_state, total_density, CoefficientMatrix, InitialConditionSpec, Params,
    SpeciesState, SystemState,
};
use crate::trajectory::{clip_densities, ClipEvents, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BtMode {
    /// `a_ij = k_i`
    RankOne,
    /// `a_ij` from `Params::a_matrix`, symmetric positive definite.
    GeneralMatrix,
}

#[derive(Clone, Debug)]
pub struct BtConfig {
    pub grid: GridSpec,
    pub params: Params,
    pub dt: f64,
    pub t_end: f64,
    pub mode: BtMode,
    pub diag_every: usize,
    pub clip_count_limit: u64,
    pub forcing: Option<Arc<dyn Forcing>>,
}

impl BtConfig {
    pub fn new(grid: GridSpec, params: Params, dt: f64, t_end: f64) -> Self {
        Self {
            grid,
            params,
            dt,
            t_end,
            mode: BtMode::RankOne,
            diag_every: 1,
            clip_count_limit: 1000,
            forcing: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt must be > 0 (got {})", self.dt)));
        }
        if !(self.t_end >= self.dt) {
            return Err(Error::InvalidParams(format!(
                "t_end must be ≥ dt (got t_end = {}, dt = {})",
                self.t_end, self.dt
            )));
        }
        if self.diag_every == 0 {
            return Err(Error::InvalidParams("diag_every must be ≥ 1".into()));
        }
        if self.mode == BtMode::GeneralMatrix {
            match &self.params.a_matrix {
                None => {
                    return Err(Error::InvalidParams(
                        "general_matrix mode needs params.a_matrix".into(),
                    ))
                }
                Some(a) if !a.is_positive_definite() => {
                    return Err(Error::InvalidParams(
                        "a_matrix must be positive definite".into(),
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// The coefficient matrix in effect.
    pub fn matrix(&self) -> Result<CoefficientMatrix> {
        match self.mode {
            BtMode::RankOne => Ok(CoefficientMatrix::rank_one(&self.params.k)),
            BtMode::GeneralMatrix => self
                .params
                .a_matrix
                .clone()
                .ok_or_else(|| Error::InvalidParams("general_matrix mode needs params.a_matrix".into())),
        }
    }
}

fn require_positive(rho: &[ScalarField]) -> Result<()> {
    for (i, r) in rho.iter().enumerate() {
        let min = r.min();
        if !(min > 0.0) {
            return Err(Error::Positivity(format!(
                "species {} density min {min} is not positive",
                i + 1
            )));
        }
    }
    Ok(())
}

/// `div(ρ ∇p)` with the flux product dealiased.
fn transport_divergence(rho: &ScalarField, grad_p: &[ScalarField]) -> ScalarField {
    let grid = *rho.grid();
    let mut acc = Spectrum::zeros(grid);
    for (a, g) in grad_p.iter().enumerate() {
        acc.add_assign(&rho.mul(g).to_spectrum().partial(a));
    }
    acc.dealias_in_place();
    acc.to_field()
}

/// Gradients of the pressures `p_i = Σ_j a_ij ρ_j`. Constant rows reuse
/// `a_i ∇ρ̄`, so the rank-one matrix reproduces the Busenberg–Travis
/// right-hand side exactly.
fn pressure_gradients(rho: &[ScalarField], a: &CoefficientMatrix) -> Vec<Vec<ScalarField>> {
    let grid = *rho[0].grid();
    let dim = grid.dim();
    let mut rho_bar = rho[0].clone();
    for r in &rho[1..] {
        rho_bar.axpy(1.0, r);
    }
    let grad_bar = grad(&rho_bar);
    (0..rho.len())
        .map(|i| match a.constant_row(i) {
            Some(c) => grad_bar.components().iter().map(|g| g.scale(c)).collect(),
            None => {
                let mut p = ScalarField::zeros(grid);
                for (j, r) in rho.iter().enumerate() {
                    p.axpy(a.get(i, j), r);
                }
                let s = p.to_spectrum();
                (0..dim).map(|ax| s.partial(ax).to_field()).collect()
            }
        })
        .collect()
}

fn matrix_rhs(rho: &[ScalarField], a: &CoefficientMatrix) -> Vec<ScalarField> {
    pressure_gradients(rho, a)
        .iter()
        .zip(rho)
        .map(|(gp, r)| transport_divergence(r, gp))
        .collect()
}

fn check_species(state: &SystemState, n: usize) -> Result<()> {
    if state.n_species() != n {
        return Err(Error::InvalidParams(format!(
            "state has {} species, coefficients describe {n}",
            state.n_species()
        )));
    }
    Ok(())
}

/// `∂_t ρ_i = div(k_i ρ_i ∇ρ̄)`.
pub fn bt_rhs(state: &SystemState, params: &Params) -> Result<Vec<ScalarField>> {
    check_species(state, params.n_species())?;
    let rho: Vec<ScalarField> = state.species.iter().map(|s| s.rho.clone()).collect();
    require_positive(&rho)?;
    Ok(matrix_rhs(&rho, &CoefficientMatrix::rank_one(&params.k)))
}

/// `∂_t ρ_i = div(ρ_i ∇ Σ_j a_ij ρ_j)` with `a = params.a_matrix`.
pub fn gbt_rhs(state: &SystemState, params: &Params) -> Result<Vec<ScalarField>> {
    let a = params
        .a_matrix
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("gbt_rhs needs params.a_matrix".into()))?;
    check_species(state, a.size())?;
    let rho: Vec<ScalarField> = state.species.iter().map(|s| s.rho.clone()).collect();
    require_positive(&rho)?;
    Ok(matrix_rhs(&rho, a))
}

/// Solve the real `n×n` system `m x = b` with complex right-hand side by
/// Gaussian elimination with partial pivoting. `m` is overwritten.
fn solve_dense(m: &mut [f64], b: &mut [Complex64], n: usize) {
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| m[p * n + col].abs().total_cmp(&m[q * n + col].abs()))
            .unwrap_or(col);
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        let d = m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / d;
            if f != 0.0 {
                for j in col..n {
                    m[row * n + j] -= f * m[col * n + j];
                }
                let bc = b[col];
                b[row] -= f * bc;
            }
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for j in col + 1..n {
            s -= m[col * n + j] * b[j];
        }
        b[col] = s / m[col * n + col];
    }
}

/// Velocities `u_i = −∇p_i` attached to a BT density set.
fn with_velocities(time: f64, rho: Vec<ScalarField>, a: &CoefficientMatrix) -> Result<SystemState> {
    let grid = *rho[0].grid();
    let grads = pressure_gradients(&rho, a);
    let species = rho
        .into_iter()
        .zip(grads)
        .map(|(r, g)| {
            let u = VectorField::from_components(grid, g.iter().map(|c| c.scale(-1.0)).collect())?;
            Ok(SpeciesState { rho: r, u })
        })
        .collect::<Result<_>>()?;
    SystemState::new(time, species)
}

#[derive(Debug)]
struct BtStepper<'a> {
    config: &'a BtConfig,
    a: CoefficientMatrix,
    time: f64,
    rho: Vec<ScalarField>,
    clips: ClipEvents,
}

impl<'a> BtStepper<'a> {
    fn new(state: &SystemState, config: &'a BtConfig) -> Result<Self> {
        config.validate()?;
        let a = config.matrix()?;
        check_species(state, a.size())?;
        if *state.grid() != config.grid {
            return Err(Error::ShapeMismatch("state grid differs from config grid".into()));
        }
        Ok(Self {
            config,
            a,
            time: state.time,
            rho: state.species.iter().map(|s| s.rho.clone()).collect(),
            clips: ClipEvents::default(),
        })
    }

    fn state(&self) -> Result<SystemState> {
        with_velocities(self.time, self.rho.clone(), &self.a)
    }

    fn step(&mut self, h: f64) -> Result<()> {
        let grid = self.config.grid;
        let ns = self.rho.len();
        require_positive(&self.rho)?;
        let rho0: Vec<f64> = self.rho.iter().map(ScalarField::mean).collect();
        let mut f = matrix_rhs(&self.rho, &self.a);
        if let Some(src) = &self.config.forcing {
            for (i, fi) in f.iter_mut().enumerate() {
                fi.axpy(1.0, &src.mass_source(&grid, i, self.time));
            }
        }
        let x: Vec<Spectrum> = self.rho.iter().map(ScalarField::to_spectrum).collect();
        let mut fs: Vec<Spectrum> = f.iter().map(ScalarField::to_spectrum).collect();
        // explicit remainder N = F − L x, with (L x)_i = −|ξ|² ρ_i⁰ Σ_j a_ij x_j
        for flat in 0..grid.len() {
            let ksq = grid.mode_norm_sq(flat);
            for i in 0..ns {
                let mut lx = Complex64::new(0.0, 0.0);
                for (j, xj) in x.iter().enumerate() {
                    lx += self.a.get(i, j) * xj.coeffs()[flat];
                }
                fs[i].coeffs_mut()[flat] += ksq * rho0[i] * lx;
            }
        }
        for s in &mut fs {
            s.dealias_in_place();
        }
        let mut out: Vec<Spectrum> = x.clone();
        let mut m = vec![0.0; ns * ns];
        let mut b = vec![Complex64::new(0.0, 0.0); ns];
        for flat in 0..grid.len() {
            let ksq = grid.mode_norm_sq(flat);
            for i in 0..ns {
                b[i] = x[i].coeffs()[flat] + h * fs[i].coeffs()[flat];
                for j in 0..ns {
                    let id = if i == j { 1.0 } else { 0.0 };
                    m[i * ns + j] = id + h * ksq * rho0[i] * self.a.get(i, j);
                }
            }
            if ksq > 0.0 {
                solve_dense(&mut m, &mut b, ns);
            }
            for i in 0..ns {
                out[i].coeffs_mut()[flat] = b[i];
            }
        }
        let mut rho: Vec<ScalarField> = out.iter().map(Spectrum::to_field).collect();
        let t1 = self.time + h;
        let worst = rho
            .iter()
            .map(|r| if r.is_finite() { r.max_abs() } else { f64::INFINITY })
            .fold(0.0, f64::max);
        if worst > BLOW_UP_THRESHOLD {
            return Err(Error::BlowUp {
                time: t1,
                detail: format!("density norm {worst:e} exceeds {BLOW_UP_THRESHOLD:e}"),
            });
        }
        let ev = clip_densities(&mut rho, self.config.params.rho_floor);
        self.clips.merge(ev);
        if self.clips.count > self.config.clip_count_limit {
            return Err(Error::ClipBudget {
                time: t1,
                count: self.clips.count,
                limit: self.config.clip_count_limit,
            });
        }
        if ev.count > 0 {
            log::warn!("t = {t1:.6}: clipped {} density values (worst {:e})", ev.count, ev.worst);
        }
        self.rho = rho;
        self.time = t1;
        Ok(())
    }
}

/// One semi-implicit step of size `config.dt`. The returned velocities are
/// the limit velocities `u_i = −∇p_i`.
pub fn bt_step(state: &SystemState, config: &BtConfig) -> Result<SystemState> {
    let mut s = BtStepper::new(state, config)?;
    s.step(config.dt)?;
    s.state()
}

pub fn run_bt_from_state(initial: &SystemState, config: &BtConfig) -> Result<Trajectory> {
    let mut stepper = BtStepper::new(initial, config)?;
    let mut traj = Trajectory::default();
    let params = &config.params;
    let record = |stepper: &BtStepper, traj: &mut Trajectory| -> Result<()> {
        let s = stepper.state()?;
        let mut d = collect_diagnostics(&s, params, None)?;
        d.clips = stepper.clips.count;
        traj.diagnostics.push(d);
        traj.states.push(s);
        Ok(())
    };
    record(&stepper, &mut traj)?;
    let (n_steps, last) = step_plan(config.dt, config.t_end);
    let t_start = initial.time;
    for step in 1..=n_steps {
        let h = if step == n_steps { last } else { config.dt };
        stepper.step(h)?;
        stepper.time = if step == n_steps {
            t_start + config.t_end
        } else {
            t_start + step as f64 * config.dt
        };
        if step % config.diag_every == 0 || step == n_steps {
            record(&stepper, &mut traj)?;
        }
    }
    traj.clip_events = stepper.clips;
    Ok(traj)
}

/// Build the initial densities from `ic` (velocities are replaced by the limit
/// velocities) and integrate to `config.t_end`.
pub fn run_bt(ic: &InitialConditionSpec, config: &BtConfig) -> Result<Trajectory> {
    config.validate()?;
    let s = build_initial_state(ic, &config.grid, &config.params)?;
    let rho = s.species.into_iter().map(|sp| sp.rho).collect();
    let initial = with_velocities(0.0, rho, &config.matrix()?)?;
    run_bt_from_state(&initial, config)
}

/// Residuals of the two entropy identities along consecutive stored states:
/// `r1 = ΔH₁/Δt + ∫|∇ρ̄|²` and `r2 = ΔH₂/Δt + ∫(Σk_iρ_i)|∇ρ̄|²`, with the
/// dissipation taken at the left end of each interval.
pub fn double_entropy_residuals(traj: &Trajectory, params: &Params) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut h1 = Vec::with_capacity(traj.states.len());
    let mut h2 = Vec::with_capacity(traj.states.len());
    let mut d1 = Vec::with_capacity(traj.states.len());
    let mut d2 = Vec::with_capacity(traj.states.len());
    for s in &traj.states {
        let rho_bar = total_density(s);
        h1.push(entropy(s, params)?);
        h2.push(0.5 * integrate(&rho_bar.mul(&rho_bar)));
        let g2 = grad(&rho_bar).norm_sq();
        let mut weight = ScalarField::zeros(*s.grid());
        for (sp, &k) in s.species.iter().zip(&params.k) {
            weight.axpy(k, &sp.rho);
        }
        d1.push(integrate(&g2));
        d2.push(integrate(&weight.mul(&g2)));
    }
    let mut r1 = Vec::new();
    let mut r2 = Vec::new();
    for n in 0..traj.states.len().saturating_sub(1) {
        let dt = traj.states[n + 1].time - traj.states[n].time;
        r1.push((h1[n + 1] - h1[n]) / dt + d1[n]);
        r2.push((h2[n + 1] - h2[n]) / dt + d2[n]);
    }
    Ok((r1, r2))
}
