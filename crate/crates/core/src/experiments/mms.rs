//! Manufactured-solution convergence studies.
//!
//! The exact fields are `ρ_i = c_i + b_i e^{−t} φ(x_1)` and
//! `u_i = v_i e^{−t} ψ(x_1) e_1`, with `(φ, ψ) = (cos, sin)` or the sharper
//! pair `φ = exp(β(cos x − 1))`, `ψ = sin x · φ`. Source terms are evaluated pointwise from
//! truncated Taylor expansions in `x_1`, so they never touch the spectral
//! operators under test.

use std::ops::{Add, Div, Mul, Sub};
use std::sync::Arc;

use crate::bt::{run_bt_from_state, BtConfig};
use crate::error::{Error, Result};
use crate::experiments::fit_log_log;
use crate::grid::{integrate, GridSpec, ScalarField, VectorField};
use crate::nsk::{run_nsk_from_state, Forcing, NskConfig, Scheme};
use crate::state::{Params, SpeciesState, SystemState};

const JET: usize = 6;

/// Truncated Taylor series `Σ c_j h^j` about a point.
#[derive(Clone, Copy, Debug)]
struct Jet([f64; JET]);

impl Jet {
    fn constant(c: f64) -> Self {
        let mut j = [0.0; JET];
        j[0] = c;
        Jet(j)
    }

    /// `amp·cos(x0 + h)` if `sine` is false, else `amp·sin(x0 + h)`.
    fn trig(x0: f64, amp: f64, sine: bool) -> Self {
        let mut j = [0.0; JET];
        let mut fact = 1.0;
        for (n, c) in j.iter_mut().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let phase = x0 + n as f64 * std::f64::consts::FRAC_PI_2;
            *c = amp * if sine { phase.sin() } else { phase.cos() } / fact;
        }
        Jet(j)
    }

    fn value(&self) -> f64 {
        self.0[0]
    }

    fn exp(&self) -> Self {
        let mut e = [0.0; JET];
        e[0] = self.0[0].exp();
        for n in 1..JET {
            let acc: f64 = (1..=n).map(|j| j as f64 * self.0[j] * e[n - j]).sum();
            e[n] = acc / n as f64;
        }
        Jet(e)
    }

    fn d(&self) -> Self {
        let mut j = [0.0; JET];
        for n in 0..JET - 1 {
            j[n] = (n + 1) as f64 * self.0[n + 1];
        }
        Jet(j)
    }

    fn sqrt(&self) -> Self {
        let mut s = [0.0; JET];
        s[0] = self.0[0].sqrt();
        for n in 1..JET {
            let cross: f64 = (1..n).map(|j| s[j] * s[n - j]).sum();
            s[n] = (self.0[n] - cross) / (2.0 * s[0]);
        }
        Jet(s)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet(std::array::from_fn(|n| self.0[n] + o.0[n]))
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet(std::array::from_fn(|n| self.0[n] - o.0[n]))
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet(std::array::from_fn(|n| (0..=n).map(|j| self.0[j] * o.0[n - j]).sum()))
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        Jet(self.0.map(|v| v * c))
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let mut q = [0.0; JET];
        for n in 0..JET {
            let acc: f64 = (1..=n).map(|j| o.0[j] * q[n - j]).sum();
            q[n] = (self.0[n] - acc) / o.0[0];
        }
        Jet(q)
    }
}

/// Spatial shape of a manufactured solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    /// `φ = cos x`, `ψ = sin x`.
    Cosine,
    /// `φ = exp(β(cos x − 1))`, `ψ = sin x · φ`; its spectrum decays like
    /// `I_k(β)`, so coarse grids visibly under-resolve it.
    ExpCosine(f64),
}

impl Profile {
    fn phi(&self, x: f64) -> f64 {
        match *self {
            Profile::Cosine => x.cos(),
            Profile::ExpCosine(b) => (b * (x.cos() - 1.0)).exp(),
        }
    }

    fn psi(&self, x: f64) -> f64 {
        x.sin() * match self {
            Profile::Cosine => 1.0,
            Profile::ExpCosine(_) => self.phi(x),
        }
    }

    fn phi_jet(&self, x0: f64) -> Jet {
        match *self {
            Profile::Cosine => Jet::trig(x0, 1.0, false),
            Profile::ExpCosine(b) => (Jet::trig(x0, b, false) + Jet::constant(-b)).exp(),
        }
    }

    fn psi_jet(&self, x0: f64) -> Jet {
        match self {
            Profile::Cosine => Jet::trig(x0, 1.0, true),
            Profile::ExpCosine(_) => Jet::trig(x0, 1.0, true) * self.phi_jet(x0),
        }
    }
}

/// `ρ_i = rho_mean_i + rho_amp_i e^{−t} φ(x_1)`, `u_i = u_amp_i e^{−t} ψ(x_1) e_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ManufacturedSolution {
    pub rho_mean: Vec<f64>,
    pub rho_amp: Vec<f64>,
    pub u_amp: Vec<f64>,
    pub profile: Profile,
}

impl ManufacturedSolution {
    /// Two species `2 + 0.5 e^{−t} cos x` moving in opposite directions.
    pub fn nsk_default() -> Self {
        Self {
            rho_mean: vec![2.0, 2.0],
            rho_amp: vec![0.5, 0.5],
            u_amp: vec![0.5, -0.25],
            profile: Profile::Cosine,
        }
    }

    /// Two species whose total density is `2 + 0.5 e^{−t} cos x`.
    pub fn bt_default() -> Self {
        Self {
            rho_mean: vec![1.0, 1.0],
            rho_amp: vec![0.25, 0.25],
            u_amp: vec![0.0, 0.0],
            profile: Profile::Cosine,
        }
    }

    pub fn n_species(&self) -> usize {
        self.rho_mean.len()
    }

    fn rho_jet(&self, i: usize, x0: f64, t: f64) -> Jet {
        Jet::constant(self.rho_mean[i]) + self.profile.phi_jet(x0) * (self.rho_amp[i] * (-t).exp())
    }

    fn u_jet(&self, i: usize, x0: f64, t: f64) -> Jet {
        self.profile.psi_jet(x0) * (self.u_amp[i] * (-t).exp())
    }

    pub fn density(&self, grid: &GridSpec, i: usize, t: f64) -> ScalarField {
        let a = self.rho_amp[i] * (-t).exp();
        ScalarField::from_fn(*grid, |x| self.rho_mean[i] + a * self.profile.phi(x[0]))
    }

    pub fn velocity(&self, grid: &GridSpec, i: usize, t: f64) -> VectorField {
        let a = self.u_amp[i] * (-t).exp();
        let mut v = VectorField::zeros(*grid);
        v.components_mut()[0] = ScalarField::from_fn(*grid, |x| a * self.profile.psi(x[0]));
        v
    }

    pub fn state(&self, grid: &GridSpec, t: f64) -> Result<SystemState> {
        let species = (0..self.n_species())
            .map(|i| SpeciesState {
                rho: self.density(grid, i, t),
                u: self.velocity(grid, i, t),
            })
            .collect();
        SystemState::new(t, species)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rho_mean.len();
        if n == 0 || self.rho_amp.len() != n || self.u_amp.len() != n {
            return Err(Error::InvalidParams(
                "manufactured solution needs equal-length rho_mean, rho_amp, u_amp".into(),
            ));
        }
        for i in 0..n {
            // |φ| ≤ 1 for both profiles
            if self.rho_mean[i] - self.rho_amp[i].abs() <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "manufactured density of species {} is not positive",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// Sources that make a [`ManufacturedSolution`] exact for the regularized
/// relaxation system.
#[derive(Clone, Debug)]
pub struct NskManufacturedForcing {
    pub solution: ManufacturedSolution,
    pub params: Params,
}

impl NskManufacturedForcing {
    fn pointwise(&self, i: usize, x0: f64, t: f64) -> (f64, f64) {
        let sol = &self.solution;
        let eps = self.params.eps;
        let delta = self.params.delta;
        let k = self.params.k[i];
        let rho = sol.rho_jet(i, x0, t);
        let u = sol.u_jet(i, x0, t);
        let rho_bar = (0..sol.n_species())
            .map(|j| sol.rho_jet(j, x0, t))
            .fold(Jet::constant(0.0), |a, b| a + b);
        let m = rho * u;
        // e^{−t} dependence: ∂_t ρ = −(ρ − c), ∂_t u = −u
        let rho_t = -(rho.value() - sol.rho_mean[i]);
        let m_t = rho_t * u.value() - rho.value() * u.value();

        let mass_rhs = delta * rho.d().d().value() - m.d().value();
        let s = rho.sqrt();
        let q = s.d().d() / s;
        let mom_rhs = -(m * u).d().value() + (rho * q.d()).value() + (rho * u.d()).d().value()
            - u.value()
            - (rho * u * u * u).value()
            - m.value() / (eps * k)
            - (rho * rho_bar.d()).value() / eps
            + delta * (u * rho.d()).d().value();
        (rho_t - mass_rhs, m_t - mom_rhs)
    }
}

impl Forcing for NskManufacturedForcing {
    fn mass_source(&self, grid: &GridSpec, species: usize, t: f64) -> ScalarField {
        ScalarField::from_fn(*grid, |x| self.pointwise(species, x[0], t).0)
    }

    fn momentum_source(&self, grid: &GridSpec, species: usize, t: f64) -> VectorField {
        let mut v = VectorField::zeros(*grid);
        v.components_mut()[0] = ScalarField::from_fn(*grid, |x| self.pointwise(species, x[0], t).1);
        v
    }
}

/// Sources that make the densities of a [`ManufacturedSolution`] exact for
/// `∂_t ρ_i = div(k_i ρ_i ∇ρ̄)`.
#[derive(Clone, Debug)]
pub struct BtManufacturedForcing {
    pub solution: ManufacturedSolution,
    pub k: Vec<f64>,
}

impl Forcing for BtManufacturedForcing {
    fn mass_source(&self, grid: &GridSpec, species: usize, t: f64) -> ScalarField {
        let sol = &self.solution;
        let k = self.k[species];
        ScalarField::from_fn(*grid, |x| {
            let rho = sol.rho_jet(species, x[0], t);
            let rho_bar = (0..sol.n_species())
                .map(|j| sol.rho_jet(j, x[0], t))
                .fold(Jet::constant(0.0), |a, b| a + b);
            let rho_t = -(rho.value() - sol.rho_mean[species]);
            rho_t - k * (rho * rho_bar.d()).d().value()
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmsSolver {
    Nsk(Scheme),
    Bt,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Refinement {
    /// Fixed resolution, decreasing time steps.
    Temporal { n: usize, dts: Vec<f64> },
    /// Fixed time step, increasing resolution.
    Spatial { dt: f64, ns: Vec<usize> },
}

#[derive(Clone, Debug)]
pub struct MmsStudy {
    pub solver: MmsSolver,
    pub solution: ManufacturedSolution,
    pub params: Params,
    pub dim: usize,
    pub t_end: f64,
    pub refinement: Refinement,
}

impl MmsStudy {
    /// `ε = 1`, `δ = 10⁻³`, `n = 64`, `dt ∈ {4, 2, 1}·10⁻³` up to `t = 0.2`.
    pub fn nsk_temporal(scheme: Scheme) -> Self {
        Self {
            solver: MmsSolver::Nsk(scheme),
            solution: ManufacturedSolution::nsk_default(),
            params: Params::new(1.0, vec![1.0, 2.0]).expect("valid constants"),
            dim: 1,
            t_end: 0.2,
            refinement: Refinement::Temporal {
                n: 64,
                dts: vec![4e-3, 2e-3, 1e-3],
            },
        }
    }

    /// Second-order stepping with a small step on `n ∈ {16, 32, 64}`, using
    /// the sharper profile with `β = 3`.
    pub fn nsk_spatial() -> Self {
        Self {
            solver: MmsSolver::Nsk(Scheme::Imex2),
            solution: ManufacturedSolution {
                profile: Profile::ExpCosine(3.0),
                ..ManufacturedSolution::nsk_default()
            },
            params: Params::new(1.0, vec![1.0, 2.0]).expect("valid constants"),
            dim: 1,
            t_end: 0.05,
            refinement: Refinement::Spatial {
                dt: 2.5e-4,
                ns: vec![16, 32, 64],
            },
        }
    }

    /// Limit solver, `k = (1, 2)`, `n = 64`, `dt ∈ {4, 2, 1}·10⁻³` up to `t = 0.2`.
    pub fn bt_temporal() -> Self {
        Self {
            solver: MmsSolver::Bt,
            solution: ManufacturedSolution::bt_default(),
            params: Params::new(1.0, vec![1.0, 2.0]).expect("valid constants"),
            dim: 1,
            t_end: 0.2,
            refinement: Refinement::Temporal {
                n: 64,
                dts: vec![4e-3, 2e-3, 1e-3],
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceResult {
    /// Time steps or resolutions, in study order.
    pub parameters: Vec<f64>,
    pub errors_max: Vec<f64>,
    pub errors_l2: Vec<f64>,
    /// Slope of log error against log parameter (negated for resolutions).
    pub order_max: f64,
    pub order_l2: f64,
}

impl ConvergenceResult {
    /// `log10(first error / last error)` in the max norm.
    pub fn orders_of_magnitude(&self) -> f64 {
        (self.errors_max[0] / self.errors_max[self.errors_max.len() - 1]).log10()
    }
}

fn run_once(study: &MmsStudy, n: usize, dt: f64) -> Result<(f64, f64)> {
    let grid = GridSpec::new(study.dim, n)?;
    let sol = &study.solution;
    let initial = sol.state(&grid, 0.0)?;
    let (final_state, degraded) = match study.solver {
        MmsSolver::Nsk(scheme) => {
            let mut cfg = NskConfig::new(grid, study.params.clone(), dt, study.t_end);
            cfg.scheme = scheme;
            cfg.diag_every = usize::MAX;
            cfg.forcing = Some(Arc::new(NskManufacturedForcing {
                solution: sol.clone(),
                params: study.params.clone(),
            }));
            let tr = run_nsk_from_state(&initial, &cfg)?;
            let deg = tr.is_degraded();
            (tr.states.into_iter().last(), deg)
        }
        MmsSolver::Bt => {
            let mut cfg = BtConfig::new(grid, study.params.clone(), dt, study.t_end);
            cfg.diag_every = usize::MAX;
            cfg.forcing = Some(Arc::new(BtManufacturedForcing {
                solution: sol.clone(),
                k: study.params.k.clone(),
            }));
            let tr = run_bt_from_state(&initial, &cfg)?;
            let deg = tr.is_degraded();
            (tr.states.into_iter().last(), deg)
        }
    };
    if degraded {
        return Err(Error::Experiment(format!(
            "manufactured run with n = {n}, dt = {dt} needed positivity clipping"
        )));
    }
    let s = final_state.ok_or_else(|| Error::Experiment("empty trajectory".into()))?;
    let exact = sol.state(&grid, s.time)?;
    let mut emax: f64 = 0.0;
    let mut sq = 0.0;
    for (a, b) in s.species.iter().zip(&exact.species) {
        let d = a.rho.sub(&b.rho);
        emax = emax.max(d.max_abs());
        sq += integrate(&d.mul(&d));
        if matches!(study.solver, MmsSolver::Nsk(_)) {
            let du = a.u.sub(&b.u);
            emax = emax.max(du.max_abs());
            sq += integrate(&du.norm_sq());
        }
    }
    Ok((emax, sq.sqrt()))
}

/// Run the study and fit convergence orders.
pub fn mms_convergence(study: &MmsStudy) -> Result<ConvergenceResult> {
    study.solution.validate()?;
    study.params.validate()?;
    if study.solution.n_species() != study.params.n_species() {
        return Err(Error::InvalidParams(
            "manufactured solution and params.k disagree on species count".into(),
        ));
    }
    let (parameters, runs): (Vec<f64>, Vec<(usize, f64)>) = match &study.refinement {
        Refinement::Temporal { n, dts } => (dts.clone(), dts.iter().map(|&dt| (*n, dt)).collect()),
        Refinement::Spatial { dt, ns } => (
            ns.iter().map(|&n| n as f64).collect(),
            ns.iter().map(|&n| (n, *dt)).collect(),
        ),
    };
    if runs.len() < 2 {
        return Err(Error::InvalidParams("convergence study needs ≥ 2 levels".into()));
    }
    let mut errors_max = Vec::new();
    let mut errors_l2 = Vec::new();
    for (n, dt) in runs {
        let (emax, el2) = run_once(study, n, dt)?;
        errors_max.push(emax);
        errors_l2.push(el2);
    }
    let sign = match study.refinement {
        Refinement::Temporal { .. } => 1.0,
        Refinement::Spatial { .. } => -1.0,
    };
    let order_max = sign * fit_log_log(&parameters, &errors_max).0;
    let order_l2 = sign * fit_log_log(&parameters, &errors_l2).0;
    Ok(ConvergenceResult {
        parameters,
        errors_max,
        errors_l2,
        order_max,
        order_l2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_arithmetic() {
        // (1 + h)^{1/2} and 1/(1 + h) coefficients
        let mut a = [0.0; JET];
        a[0] = 1.0;
        a[1] = 1.0;
        let x = Jet(a);
        let s = x.sqrt();
        assert!((s.0[2] + 0.125).abs() < 1e-15);
        let r = Jet::constant(1.0) / x;
        for n in 0..JET {
            assert_eq!(r.0[n], if n % 2 == 0 { 1.0 } else { -1.0 });
        }
        let c = Jet::trig(0.3, 2.0, false);
        assert!((c.d().d().value() + 2.0 * 0.3f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn bt_forcing_closed_form() {
        let g = GridSpec::new(1, 32).unwrap();
        let f = BtManufacturedForcing {
            solution: ManufacturedSolution::bt_default(),
            k: vec![1.0, 2.0],
        };
        let t: f64 = 0.4;
        let a = 0.5 * (-t).exp();
        for (i, &k) in [1.0, 2.0].iter().enumerate() {
            let src = f.mass_source(&g, i, t);
            let exact = ScalarField::from_fn(g, |x| {
                -0.5 * a * x[0].cos() + k * a * (x[0].cos() + 0.5 * a * (2.0 * x[0]).cos())
            });
            assert!(src.sub(&exact).max_abs() < 1e-14);
        }
    }

    #[test]
    fn steady_constant_has_zero_error() {
        let study = MmsStudy {
            solver: MmsSolver::Nsk(Scheme::Imex1),
            solution: ManufacturedSolution {
                rho_mean: vec![1.0, 2.0],
                rho_amp: vec![0.0, 0.0],
                u_amp: vec![0.0, 0.0],
                profile: Profile::Cosine,
            },
            params: Params::new(0.5, vec![1.0, 1.0]).unwrap(),
            dim: 1,
            t_end: 0.02,
            refinement: Refinement::Temporal {
                n: 16,
                dts: vec![1e-2, 5e-3],
            },
        };
        let r = mms_convergence(&study).unwrap();
        assert!(r.errors_max.iter().all(|&e| e < 1e-13));
    }
}
