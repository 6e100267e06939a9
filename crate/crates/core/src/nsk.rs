//! Time integration of the δ-regularized Navier–Stokes–Korteweg relaxation
//! system in conservative variables `(ρ_i, m_i = ρ_i u_i)`:
//!
//! ```text
//! ∂_t ρ_i = −div m_i + δ Δρ_i
//! ∂_t m_i = −div(ρ_i u_i⊗u_i) + ρ_i ∇(Δ√ρ_i/√ρ_i) + div(ρ_i ∇u_i)
//!           − u_i − ρ_i|u_i|² u_i − (ε k_i)^{-1} m_i − ε^{-1} ρ_i ∇ρ̄
//!           + δ div(u_i ⊗ ∇ρ_i)
//! ```
//!
//! The IMEX splitting treats, per Fourier mode and exactly, the operator
//! obtained by freezing every density coefficient at its spatial mean `ρ_i⁰`:
//! the mass flux and `δΔρ_i`, the leading Bohm part `½∇Δρ_i`, the viscous part
//! `Δm_i`, relaxation and linear drag `−((ε k_i)^{-1} + 1/ρ_i⁰) m_i`, and the
//! cross force `−(ρ_i⁰/ε)∇ρ̄`. Everything else is explicit and dealiased.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::collect_diagnostics;
use crate::grid::{GridSpec, ScalarField, Spectrum, VectorField, MAX_DIM};
use crate::state::{build_initial_state, InitialConditionSpec, Params, SpeciesState, SystemState};
use crate::trajectory::{clip_densities, ClipEvents, Trajectory};

/// Any field value above this magnitude aborts the run.
pub const BLOW_UP_THRESHOLD: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// IMEX Euler, first order.
    Imex1,
    /// ARS(2,2,2), second order, L-stable implicit part.
    Imex2,
}

impl Scheme {
    pub fn order(&self) -> usize {
        match self {
            Scheme::Imex1 => 1,
            Scheme::Imex2 => 2,
        }
    }
}

/// Additive source terms for the mass and momentum equations, used to
/// manufacture exact solutions. The limit solver reads only the mass source.
pub trait Forcing: Send + Sync + fmt::Debug {
    fn mass_source(&self, grid: &GridSpec, species: usize, t: f64) -> ScalarField;

    fn momentum_source(&self, grid: &GridSpec, _species: usize, _t: f64) -> VectorField {
        VectorField::zeros(*grid)
    }
}

#[derive(Clone, Debug)]
pub struct NskConfig {
    pub grid: GridSpec,
    pub params: Params,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub diag_every: usize,
    /// Abort once more than this many values have been clipped.
    pub clip_count_limit: u64,
    pub forcing: Option<Arc<dyn Forcing>>,
}

impl NskConfig {
    pub fn new(grid: GridSpec, params: Params, dt: f64, t_end: f64) -> Self {
        Self {
            grid,
            params,
            dt,
            t_end,
            scheme: Scheme::Imex1,
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
        Ok(())
    }
}

/// Time derivatives `(∂_t ρ_i, ∂_t m_i)` of a state given in primitive form.
pub fn nsk_rhs(
    state: &SystemState,
    params: &Params,
) -> Result<(Vec<ScalarField>, Vec<VectorField>)> {
    let rho: Vec<ScalarField> = state.species.iter().map(|s| s.rho.clone()).collect();
    let m: Vec<VectorField> = state.species.iter().map(SpeciesState::momentum).collect();
    conserved_rhs(&rho, &m, params)
}

/// Divergence of the rows of a tensor given pointwise, with the tensor
/// dealiased first: `out_j = Σ_k ∂_k T_jk`.
fn dealiased_row_divergence(grid: &GridSpec, rows: &[Vec<ScalarField>]) -> Vec<ScalarField> {
    rows.iter()
        .map(|row| {
            let mut acc = Spectrum::zeros(*grid);
            for (k, t) in row.iter().enumerate() {
                acc.add_assign(&t.to_spectrum().partial(k));
            }
            acc.dealias_in_place();
            acc.to_field()
        })
        .collect()
}

fn dealiased(f: &ScalarField) -> ScalarField {
    let mut s = f.to_spectrum();
    s.dealias_in_place();
    s.to_field()
}

pub(crate) fn conserved_rhs(
    rho: &[ScalarField],
    m: &[VectorField],
    params: &Params,
) -> Result<(Vec<ScalarField>, Vec<VectorField>)> {
    let grid = *rho[0].grid();
    let dim = grid.dim();
    for (i, r) in rho.iter().enumerate() {
        let min = r.min();
        if !(min > 0.0) {
            return Err(Error::Positivity(format!(
                "species {} density min {min} is not positive",
                i + 1
            )));
        }
    }
    let mut rho_bar = rho[0].clone();
    for r in &rho[1..] {
        rho_bar.axpy(1.0, r);
    }
    let rho_bar_spec = rho_bar.to_spectrum();
    let grad_rho_bar: Vec<ScalarField> =
        (0..dim).map(|a| rho_bar_spec.partial(a).to_field()).collect();

    let eps = params.eps;
    let delta = params.delta;
    let mut drho = Vec::with_capacity(rho.len());
    let mut dm = Vec::with_capacity(rho.len());
    for ((r, mi), &k) in rho.iter().zip(m).zip(&params.k) {
        let rs = r.to_spectrum();
        // mass: −div m + δΔρ
        let mut mass = rs.laplacian();
        for c in mass.coeffs_mut() {
            *c *= delta;
        }
        for (a, comp) in mi.components().iter().enumerate() {
            let d = comp.to_spectrum().partial(a);
            for (o, v) in mass.coeffs_mut().iter_mut().zip(d.coeffs()) {
                *o -= v;
            }
        }
        drho.push(mass.to_field());

        let u: Vec<ScalarField> = mi.components().iter().map(|c| c.zip_map(r, |x, y| x / y)).collect();
        let grad_rho: Vec<ScalarField> = (0..dim).map(|a| rs.partial(a).to_field()).collect();
        let grad_u: Vec<Vec<ScalarField>> = u
            .iter()
            .map(|uj| {
                let s = uj.to_spectrum();
                (0..dim).map(|a| s.partial(a).to_field()).collect()
            })
            .collect();

        // Tensor T_jk = −m_j u_k + ρ ∂_k u_j + δ u_j ∂_k ρ
        let rows: Vec<Vec<ScalarField>> = (0..dim)
            .map(|j| {
                (0..dim)
                    .map(|kx| {
                        let mut t = mi.component(j).mul(&u[kx]).scale(-1.0);
                        t.axpy(1.0, &r.mul(&grad_u[j][kx]));
                        if delta != 0.0 {
                            t.axpy(delta, &u[j].mul(&grad_rho[kx]));
                        }
                        t
                    })
                    .collect()
            })
            .collect();
        let flux_div = dealiased_row_divergence(&grid, &rows);

        // Bohm potential Q = Δ√ρ/√ρ
        let sqrt_rho = r.map(f64::sqrt);
        let q = sqrt_rho.to_spectrum().laplacian().to_field().zip_map(&sqrt_rho, |l, s| l / s);
        let qs = q.to_spectrum();
        let mut u2 = ScalarField::zeros(grid);
        for uj in &u {
            u2.axpy(1.0, &uj.mul(uj));
        }
        let rho_u2 = r.mul(&u2);

        let comps = (0..dim)
            .map(|j| {
                // pointwise products: ρ∂_jQ − ρ|u|²u_j − ε^{-1}ρ∂_jρ̄
                let mut p = r.mul(&qs.partial(j).to_field());
                p.axpy(-1.0, &rho_u2.mul(&u[j]));
                p.axpy(-1.0 / eps, &r.mul(&grad_rho_bar[j]));
                let mut out = dealiased(&p);
                out.axpy(1.0, &flux_div[j]);
                out.axpy(-1.0, &u[j]);
                out.axpy(-1.0 / (eps * k), mi.component(j));
                out
            })
            .collect();
        dm.push(VectorField::from_components(grid, comps)?);
    }
    Ok((drho, dm))
}

/// Spectra of all conserved variables.
#[derive(Clone, Debug)]
struct Spectral {
    rho: Vec<Spectrum>,
    m: Vec<Vec<Spectrum>>,
}

impl Spectral {
    fn forward(rho: &[ScalarField], m: &[VectorField]) -> Self {
        Self {
            rho: rho.iter().map(ScalarField::to_spectrum).collect(),
            m: m
                .iter()
                .map(|v| v.components().iter().map(ScalarField::to_spectrum).collect())
                .collect(),
        }
    }

    fn inverse(&self, grid: GridSpec) -> Result<(Vec<ScalarField>, Vec<VectorField>)> {
        let rho = self.rho.iter().map(Spectrum::to_field).collect();
        let m = self
            .m
            .iter()
            .map(|c| VectorField::from_components(grid, c.iter().map(Spectrum::to_field).collect()))
            .collect::<Result<_>>()?;
        Ok((rho, m))
    }

    fn all(&self) -> impl Iterator<Item = &Spectrum> {
        self.rho.iter().chain(self.m.iter().flatten())
    }

    fn all_mut(&mut self) -> impl Iterator<Item = &mut Spectrum> {
        self.rho.iter_mut().chain(self.m.iter_mut().flatten())
    }

    /// `self += c * other`
    fn axpy(&mut self, c: f64, other: &Self) {
        for (a, b) in self.all_mut().zip(other.all()) {
            for (x, y) in a.coeffs_mut().iter_mut().zip(b.coeffs()) {
                *x += c * y;
            }
        }
    }

    fn dealias(&mut self) {
        for s in self.all_mut() {
            s.dealias_in_place();
        }
    }
}

/// Constant-coefficient part of the right-hand side, diagonal in Fourier space
/// up to a small per-mode coupling between species.
#[derive(Clone, Debug)]
struct LinearPart {
    grid: GridSpec,
    eps: f64,
    delta: f64,
    k: Vec<f64>,
    rho0: Vec<f64>,
}

impl LinearPart {
    fn new(grid: GridSpec, params: &Params, rho: &[ScalarField]) -> Self {
        Self {
            grid,
            eps: params.eps,
            delta: params.delta,
            k: params.k.clone(),
            rho0: rho.iter().map(ScalarField::mean).collect(),
        }
    }

    fn damping(&self, i: usize, ksq: f64) -> f64 {
        ksq + 1.0 / (self.eps * self.k[i]) + 1.0 / self.rho0[i]
    }

    fn mode(&self, flat: usize) -> ([f64; MAX_DIM], f64, f64) {
        let idx = self.grid.unravel(flat);
        let mut kd = [0.0; MAX_DIM];
        for a in 0..self.grid.dim() {
            kd[a] = self.grid.derivative_wavenumber(idx[a]);
        }
        let kdsq = kd.iter().map(|v| v * v).sum();
        (kd, kdsq, self.grid.mode_norm_sq(flat))
    }

    fn apply(&self, x: &Spectral) -> Spectral {
        let dim = self.grid.dim();
        let ns = x.rho.len();
        let mut out = x.clone();
        let i_unit = Complex64::new(0.0, 1.0);
        for flat in 0..self.grid.len() {
            let (kd, _, ksq) = self.mode(flat);
            let total: Complex64 = x.rho.iter().map(|r| r.coeffs()[flat]).sum();
            for i in 0..ns {
                let rho = x.rho[i].coeffs()[flat];
                let mut div_m = Complex64::new(0.0, 0.0);
                for a in 0..dim {
                    div_m += i_unit * kd[a] * x.m[i][a].coeffs()[flat];
                }
                out.rho[i].coeffs_mut()[flat] = -div_m - self.delta * ksq * rho;
                let g = 0.5 * ksq * rho + self.rho0[i] / self.eps * total;
                let damp = self.damping(i, ksq);
                for a in 0..dim {
                    let m = x.m[i][a].coeffs()[flat];
                    out.m[i][a].coeffs_mut()[flat] = -i_unit * kd[a] * g - damp * m;
                }
            }
        }
        out
    }

    /// Solve `(I − h L) X = R` mode by mode; the species coupling is rank one
    /// and handled with the Sherman–Morrison formula.
    fn solve(&self, h: f64, r: &Spectral) -> Spectral {
        let dim = self.grid.dim();
        let ns = r.rho.len();
        let mut out = r.clone();
        let i_unit = Complex64::new(0.0, 1.0);
        let mut diag = vec![0.0; ns];
        let mut coup = vec![0.0; ns];
        let mut denom = vec![0.0; ns];
        let mut b = vec![Complex64::new(0.0, 0.0); ns];
        for flat in 0..self.grid.len() {
            let (kd, kdsq, ksq) = self.mode(flat);
            let mut sum_b = Complex64::new(0.0, 0.0);
            let mut sum_c = 0.0;
            for i in 0..ns {
                denom[i] = 1.0 + h * self.damping(i, ksq);
                diag[i] = 1.0 + h * self.delta * ksq + h * h * kdsq * 0.5 * ksq / denom[i];
                coup[i] = h * h * kdsq * self.rho0[i] / (self.eps * denom[i]);
                let mut kr = Complex64::new(0.0, 0.0);
                for a in 0..dim {
                    kr += kd[a] * r.m[i][a].coeffs()[flat];
                }
                b[i] = r.rho[i].coeffs()[flat] - h * i_unit * kr / denom[i];
                sum_b += b[i] / diag[i];
                sum_c += coup[i] / diag[i];
            }
            let total = sum_b / (1.0 + sum_c);
            for i in 0..ns {
                let rho = (b[i] - coup[i] * total) / diag[i];
                out.rho[i].coeffs_mut()[flat] = rho;
                let g = 0.5 * ksq * rho + self.rho0[i] / self.eps * total;
                for a in 0..dim {
                    let rm = r.m[i][a].coeffs()[flat];
                    out.m[i][a].coeffs_mut()[flat] = (rm - h * i_unit * kd[a] * g) / denom[i];
                }
            }
        }
        out
    }
}

fn check_finite(rho: &[ScalarField], m: &[VectorField], time: f64) -> Result<()> {
    let worst = rho
        .iter()
        .map(|r| if r.is_finite() { r.max_abs() } else { f64::INFINITY })
        .chain(m.iter().map(|v| if v.is_finite() { v.max_abs() } else { f64::INFINITY }))
        .fold(0.0, f64::max);
    if worst > BLOW_UP_THRESHOLD {
        return Err(Error::BlowUp {
            time,
            detail: format!("field norm {worst:e} exceeds {BLOW_UP_THRESHOLD:e}"),
        });
    }
    Ok(())
}

/// Advances one trajectory, tracking cumulative positivity clips.
#[derive(Debug)]
pub struct NskStepper<'a> {
    config: &'a NskConfig,
    time: f64,
    rho: Vec<ScalarField>,
    m: Vec<VectorField>,
    clips: ClipEvents,
}

impl<'a> NskStepper<'a> {
    pub fn new(state: &SystemState, config: &'a NskConfig) -> Result<Self> {
        config.validate()?;
        if state.n_species() != config.params.n_species() {
            return Err(Error::InvalidParams(format!(
                "state has {} species, params have {}",
                state.n_species(),
                config.params.n_species()
            )));
        }
        if *state.grid() != config.grid {
            return Err(Error::ShapeMismatch("state grid differs from config grid".into()));
        }
        Ok(Self {
            config,
            time: state.time,
            rho: state.species.iter().map(|s| s.rho.clone()).collect(),
            m: state.species.iter().map(SpeciesState::momentum).collect(),
            clips: ClipEvents::default(),
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn clips(&self) -> ClipEvents {
        self.clips
    }

    /// Current state in primitive variables, `u = m / max(ρ, floor)`.
    pub fn state(&self) -> SystemState {
        let floor = self.config.params.rho_floor;
        let species = self
            .rho
            .iter()
            .zip(&self.m)
            .map(|(r, m)| SpeciesState {
                rho: r.clone(),
                u: m.map_components(|c| c.zip_map(r, |mv, rv| mv / rv.max(floor))),
            })
            .collect();
        SystemState {
            time: self.time,
            species,
        }
    }

    fn cfl_check(&self, h: f64) -> Result<()> {
        let floor = self.config.params.rho_floor;
        let mut umax: f64 = 0.0;
        for (r, m) in self.rho.iter().zip(&self.m) {
            for c in m.components() {
                for (mv, rv) in c.values().iter().zip(r.values()) {
                    umax = umax.max((mv / rv.max(floor)).abs());
                }
            }
        }
        if umax > 0.0 {
            let bound = 0.25 * self.config.grid.spacing() / umax;
            if h > bound {
                return Err(Error::StepTooLarge {
                    time: self.time,
                    dt: h,
                    bound,
                });
            }
        }
        Ok(())
    }

    /// Explicit remainder `F(X) + f(t) − L X`, dealiased, in spectral form.
    fn explicit_part(
        &mut self,
        lin: &LinearPart,
        rho: &mut [ScalarField],
        m: &[VectorField],
        x: &Spectral,
        t: f64,
    ) -> Result<Spectral> {
        let ev = clip_densities(rho, self.config.params.rho_floor);
        self.clips.merge(ev);
        let (mut drho, mut dm) = conserved_rhs(rho, m, &self.config.params)?;
        if let Some(f) = &self.config.forcing {
            let grid = self.config.grid;
            for (i, (dr, dmi)) in drho.iter_mut().zip(dm.iter_mut()).enumerate() {
                dr.axpy(1.0, &f.mass_source(&grid, i, t));
                let src = f.momentum_source(&grid, i, t);
                for (c, s) in dmi.components_mut().iter_mut().zip(src.components()) {
                    c.axpy(1.0, s);
                }
            }
        }
        let mut n = Spectral::forward(&drho, &dm);
        n.axpy(-1.0, &lin.apply(x));
        n.dealias();
        Ok(n)
    }

    /// Advance by `h`.
    pub fn step(&mut self, h: f64) -> Result<()> {
        self.cfl_check(h)?;
        let grid = self.config.grid;
        let t0 = self.time;
        let lin = LinearPart::new(grid, &self.config.params, &self.rho);
        let x0 = Spectral::forward(&self.rho, &self.m);
        let mut rho0 = self.rho.clone();
        let m0 = self.m.clone();
        let n0 = self.explicit_part(&lin, &mut rho0, &m0, &x0, t0)?;

        let x1 = match self.config.scheme {
            Scheme::Imex1 => {
                let mut rhs = x0.clone();
                rhs.axpy(h, &n0);
                lin.solve(h, &rhs)
            }
            Scheme::Imex2 => {
                let gamma = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
                let d = 1.0 - 1.0 / (2.0 * gamma);
                let mut rhs = x0.clone();
                rhs.axpy(gamma * h, &n0);
                let stage = lin.solve(gamma * h, &rhs);
                let (mut srho, sm) = stage.inverse(grid)?;
                check_finite(&srho, &sm, t0 + gamma * h)?;
                let n1 = self.explicit_part(&lin, &mut srho, &sm, &stage, t0 + gamma * h)?;
                let l1 = lin.apply(&stage);
                let mut rhs = x0.clone();
                rhs.axpy(h * d, &n0);
                rhs.axpy(h * (1.0 - d), &n1);
                rhs.axpy(h * (1.0 - gamma), &l1);
                lin.solve(gamma * h, &rhs)
            }
        };
        let (mut rho, m) = x1.inverse(grid)?;
        let t1 = t0 + h;
        check_finite(&rho, &m, t1)?;
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
            log::warn!(
                "t = {t1:.6}: clipped {} density values (worst {:e})",
                ev.count,
                ev.worst
            );
        }
        self.rho = rho;
        self.m = m;
        self.time = t1;
        Ok(())
    }
}

/// One step of size `config.dt`.
pub fn nsk_step(state: &SystemState, config: &NskConfig) -> Result<SystemState> {
    let mut stepper = NskStepper::new(state, config)?;
    stepper.step(config.dt)?;
    Ok(stepper.state())
}

/// Step sizes covering `[0, t_end]` with `dt`, the last one shortened if
/// `t_end` is not a multiple of `dt`.
pub(crate) fn step_plan(dt: f64, t_end: f64) -> (usize, f64) {
    let ratio = t_end / dt;
    let n = (ratio - 1e-9).ceil().max(1.0) as usize;
    let last = t_end - (n - 1) as f64 * dt;
    (n, last)
}

/// Integrate from an explicit initial state.
pub fn run_nsk_from_state(initial: &SystemState, config: &NskConfig) -> Result<Trajectory> {
    let mut stepper = NskStepper::new(initial, config)?;
    let params = &config.params;
    let mut traj = Trajectory::default();
    let record = |s: &SystemState, clips: ClipEvents, traj: &mut Trajectory| -> Result<()> {
        let mut d = collect_diagnostics(s, params, None)?;
        d.clips = clips.count;
        traj.diagnostics.push(d);
        traj.states.push(s.clone());
        Ok(())
    };
    record(&stepper.state(), stepper.clips(), &mut traj)?;
    let (n_steps, last) = step_plan(config.dt, config.t_end);
    let t_start = initial.time;
    for step in 1..=n_steps {
        let h = if step == n_steps { last } else { config.dt };
        stepper.step(h)?;
        // re-anchor to avoid drift from repeated addition
        stepper.time = if step == n_steps {
            t_start + config.t_end
        } else {
            t_start + step as f64 * config.dt
        };
        if step % config.diag_every == 0 || step == n_steps {
            record(&stepper.state(), stepper.clips(), &mut traj)?;
        }
    }
    traj.clip_events = stepper.clips();
    Ok(traj)
}

/// Build the initial state from `ic` and integrate to `config.t_end`.
pub fn run_nsk(ic: &InitialConditionSpec, config: &NskConfig) -> Result<Trajectory> {
    config.validate()?;
    let initial = build_initial_state(ic, &config.grid, &config.params)?;
    run_nsk_from_state(&initial, config)
}
