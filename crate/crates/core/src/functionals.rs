//! Energy, entropies, relative energy, Bohm potential and the dissipation
//! integrands reported in every diagnostics row.
//!
//! `√ρ`, `ρ^{1/4}` and `log ρ` are formed pointwise and then differentiated
//! spectrally.

use crate::error::{Error, Result};
use crate::grid::{grad, hessian, integrate, laplacian, ScalarField, VectorField};
use crate::state::{total_density, Params, SystemState};

fn require_positive(rho: &ScalarField, what: &str) -> Result<()> {
    let min = rho.min();
    if !(min > 0.0) {
        return Err(Error::Positivity(format!(
            "{what}: density must be positive (min {min})"
        )));
    }
    Ok(())
}

fn require_positive_state(state: &SystemState) -> Result<()> {
    for (i, s) in state.species.iter().enumerate() {
        require_positive(&s.rho, &format!("species {}", i + 1))?;
    }
    Ok(())
}

/// `∫|∇√ρ|²`.
pub fn sqrt_gradient_energy(rho: &ScalarField) -> f64 {
    integrate(&grad(&rho.map(f64::sqrt)).norm_sq())
}

/// `½∫ρ̄² + (ε/2)Σ∫ρ_i|u_i|² + εΣ∫|∇√ρ_i|²`.
pub fn energy(state: &SystemState, params: &Params) -> Result<f64> {
    require_positive_state(state)?;
    let rho_bar = total_density(state);
    let potential = 0.5 * integrate(&rho_bar.mul(&rho_bar));
    let mut kinetic = 0.0;
    let mut korteweg = 0.0;
    for s in &state.species {
        kinetic += integrate(&s.u.norm_sq().mul(&s.rho));
        korteweg += sqrt_gradient_energy(&s.rho);
    }
    Ok(potential + 0.5 * params.eps * kinetic + params.eps * korteweg)
}

/// Boltzmann–Shannon entropy `Σ k_i^{-1}∫ρ_i(log ρ_i − 1)`.
pub fn entropy(state: &SystemState, params: &Params) -> Result<f64> {
    require_positive_state(state)?;
    Ok(state
        .species
        .iter()
        .zip(&params.k)
        .map(|(s, &k)| integrate(&s.rho.map(|r| r * (r.ln() - 1.0))) / k)
        .sum())
}

/// `(H1, H2)`: Boltzmann–Shannon and Rao entropy `½∫ρ̄²`.
pub fn rao_entropies(state: &SystemState, params: &Params) -> Result<(f64, f64)> {
    let h1 = entropy(state, params)?;
    let rho_bar = total_density(state);
    Ok((h1, 0.5 * integrate(&rho_bar.mul(&rho_bar))))
}

/// Bohm potential `Δ√ρ / √ρ`.
pub fn bohm_potential(rho: &ScalarField) -> Result<ScalarField> {
    require_positive(rho, "bohm_potential")?;
    let s = rho.map(f64::sqrt);
    Ok(laplacian(&s).zip_map(&s, |l, r| l / r))
}

/// Pointwise `ρ |D² log ρ|²`.
fn bohm_production_density(rho: &ScalarField) -> ScalarField {
    hessian(&rho.map(f64::ln)).frobenius_sq().mul(rho)
}

/// `∫ ρ |D² log ρ|²`.
pub fn bohm_production(rho: &ScalarField) -> Result<f64> {
    require_positive(rho, "bohm_production")?;
    Ok(integrate(&bohm_production_density(rho)))
}

/// Residual of `∫Δρ · Δ√ρ/√ρ = ½∫ρ|D² log ρ|²`, as `|LHS − RHS| / (1 + |RHS|)`.
pub fn identity_2second_residual(rho: &ScalarField) -> Result<f64> {
    let q = bohm_potential(rho)?;
    let lhs = integrate(&laplacian(rho).mul(&q));
    let rhs = 0.5 * bohm_production(rho)?;
    Ok((lhs - rhs).abs() / (1.0 + rhs.abs()))
}

/// `∫ρ|D² log ρ|² / ∫(|Δ√ρ|² + |∇ρ^{1/4}|⁴)`.
pub fn ineq_1ineq_ratio(rho: &ScalarField) -> Result<f64> {
    let num = bohm_production(rho)?;
    let lap_sqrt = laplacian(&rho.map(f64::sqrt));
    let g4 = grad(&rho.map(|r| r.sqrt().sqrt())).norm_sq();
    let den = integrate(&lap_sqrt.mul(&lap_sqrt)) + integrate(&g4.mul(&g4));
    if den < 1e-14 {
        return Err(Error::Degenerate(
            "constant density (right-hand side vanishes)".into(),
        ));
    }
    Ok(num / den)
}

/// Relative energy of an ε-state with respect to a limit pair `(ρ̄, ū)`:
/// `½∫(ρ̄^ε − ρ̄)² + ε Σ_i [½∫ρ_i|u_i − ū|² + ∫|∇√ρ_i|²]`.
pub fn relative_energy(
    state: &SystemState,
    limit_rho: &ScalarField,
    limit_u: &VectorField,
    params: &Params,
) -> Result<f64> {
    require_positive_state(state)?;
    let diff = total_density(state).sub(limit_rho);
    let mut er = 0.5 * integrate(&diff.mul(&diff));
    for s in &state.species {
        let rel = s.u.sub(limit_u).norm_sq().mul(&s.rho);
        er += params.eps * (0.5 * integrate(&rel) + sqrt_gradient_energy(&s.rho));
    }
    Ok(er)
}

/// Every scalar functional at one time instant.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub energy: f64,
    pub entropy: f64,
    pub h1: f64,
    pub h2: f64,
    pub relative_energy: Option<f64>,
    pub masses: Vec<f64>,
    /// `Σ k_i^{-1}∫ρ_i|u_i|²`
    pub d_relax: f64,
    /// `ε Σ ∫ρ_i|∇u_i|²`
    pub d_visc: f64,
    /// `ε Σ ∫|u_i|²`
    pub d_lin: f64,
    /// `ε Σ ∫ρ_i|u_i|⁴`
    pub d_quartic: f64,
    /// `∫|∇ρ̄|²`
    pub d_grad: f64,
    /// `∫ρ_i|D² log ρ_i|²` per species
    pub d_bohm: Vec<f64>,
    /// Cumulative positivity clip events.
    pub clips: u64,
}

impl DiagnosticsRecord {
    pub fn n_species(&self) -> usize {
        self.masses.len()
    }

    /// Total energy dissipation rate of the regularized system:
    /// `D_relax + D_visc + D_lin + D_quartic + δ D_grad + (δε/2) Σ D_bohm_i`.
    pub fn dissipation_rate(&self, params: &Params) -> f64 {
        self.d_relax
            + self.d_visc
            + self.d_lin
            + self.d_quartic
            + params.delta * self.d_grad
            + 0.5 * params.delta * params.eps * self.d_bohm.iter().sum::<f64>()
    }
}

/// Evaluate all diagnostics; `limit` supplies `(ρ̄, ū)` for the relative energy.
pub fn collect_diagnostics(
    state: &SystemState,
    params: &Params,
    limit: Option<(&ScalarField, &VectorField)>,
) -> Result<DiagnosticsRecord> {
    require_positive_state(state)?;
    let (h1, h2) = rao_entropies(state, params)?;
    let rho_bar = total_density(state);
    let mut d_relax = 0.0;
    let mut d_visc = 0.0;
    let mut d_lin = 0.0;
    let mut d_quartic = 0.0;
    let mut masses = Vec::with_capacity(state.n_species());
    let mut d_bohm = Vec::with_capacity(state.n_species());
    for (s, &k) in state.species.iter().zip(&params.k) {
        let u2 = s.u.norm_sq();
        d_relax += integrate(&u2.mul(&s.rho)) / k;
        let mut grad_u_sq = ScalarField::zeros(*state.grid());
        for c in s.u.components() {
            grad_u_sq.axpy(1.0, &grad(c).norm_sq());
        }
        d_visc += integrate(&grad_u_sq.mul(&s.rho));
        d_lin += integrate(&u2);
        d_quartic += integrate(&u2.mul(&u2).mul(&s.rho));
        masses.push(integrate(&s.rho));
        d_bohm.push(integrate(&bohm_production_density(&s.rho)));
    }
    let relative_energy = match limit {
        Some((lr, lu)) => Some(relative_energy(state, lr, lu, params)?),
        None => None,
    };
    Ok(DiagnosticsRecord {
        time: state.time,
        energy: energy(state, params)?,
        entropy: h1,
        h1,
        h2,
        relative_energy,
        masses,
        d_relax,
        d_visc: params.eps * d_visc,
        d_lin: params.eps * d_lin,
        d_quartic: params.eps * d_quartic,
        d_grad: integrate(&grad(&rho_bar).norm_sq()),
        d_bohm,
        clips: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::state::SpeciesState;
    use std::f64::consts::PI;

    fn state_of(rhos: Vec<ScalarField>) -> SystemState {
        SystemState::new(0.0, rhos.into_iter().map(SpeciesState::at_rest).collect()).unwrap()
    }

    /// Composite Simpson on a fine periodic grid, independent of the spectral
    /// machinery.
    fn simpson(f: impl Fn(f64) -> f64, m: usize) -> f64 {
        let h = 2.0 * PI / m as f64;
        let mut s = f(0.0) + f(2.0 * PI);
        for j in 1..m {
            s += if j % 2 == 1 { 4.0 } else { 2.0 } * f(j as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn energy_closed_forms() {
        let g = make_grid(1, 16).unwrap();
        let p = Params::new(0.1, vec![1.0, 1.0]).unwrap();
        let s = state_of(vec![ScalarField::constant(g, 1.0), ScalarField::constant(g, 1.0)]);
        assert!((energy(&s, &p).unwrap() - 4.0 * PI).abs() < 1e-13);

        let mut moving = s.clone();
        for sp in &mut moving.species {
            sp.u.components_mut()[0] = ScalarField::constant(g, 1.0);
        }
        // (ε/2)·Σ∫1·1 = 0.05·2·2π
        assert!((energy(&moving, &p).unwrap() - (4.0 * PI + 0.1 * 2.0 * PI)).abs() < 1e-13);
    }

    #[test]
    fn energy_tends_to_potential_as_eps_vanishes() {
        let g = make_grid(1, 32).unwrap();
        let mut s = state_of(vec![
            ScalarField::from_fn(g, |x| 1.0 + 0.3 * x[0].cos()),
            ScalarField::constant(g, 1.0),
        ]);
        s.species[0].u.components_mut()[0] = ScalarField::from_fn(g, |x| x[0].sin());
        let pot = 0.5 * integrate(&s.total_density().mul(&s.total_density()));
        let p = Params::new(1e-9, vec![1.0, 1.0]).unwrap();
        assert!((energy(&s, &p).unwrap() - pot).abs() < 1e-7);
    }

    #[test]
    fn entropy_closed_forms() {
        let g = make_grid(1, 16).unwrap();
        let p = Params::new(0.1, vec![1.0, 1.0]).unwrap();
        let ones = state_of(vec![ScalarField::constant(g, 1.0), ScalarField::constant(g, 1.0)]);
        assert!((entropy(&ones, &p).unwrap() + 4.0 * PI).abs() < 1e-13);
        let e = std::f64::consts::E;
        let es = state_of(vec![ScalarField::constant(g, e), ScalarField::constant(g, e)]);
        assert!(entropy(&es, &p).unwrap().abs() < 1e-13);

        let (h1, h2) = rao_entropies(&ones, &p).unwrap();
        assert!((h1 + 4.0 * PI).abs() < 1e-13 && (h2 - 4.0 * PI).abs() < 1e-13);

        let g64 = make_grid(1, 64).unwrap();
        let s = state_of(vec![
            ScalarField::from_fn(g64, |x| 1.0 + 0.5 * x[0].cos()),
            ScalarField::constant(g64, 1.0),
        ]);
        let oracle = simpson(
            |x| {
                let r = 1.0 + 0.5 * x.cos();
                r * (r.ln() - 1.0)
            },
            20000,
        ) - 2.0 * PI;
        assert!((entropy(&s, &p).unwrap() - oracle).abs() < 1e-10);

        let p2 = Params::new(0.1, vec![2.0, 2.0]).unwrap();
        let ratio = rao_entropies(&s, &p2).unwrap().0 / rao_entropies(&s, &p).unwrap().0;
        assert!((ratio - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rao_entropy_of_complementary_pair() {
        let g = make_grid(1, 32).unwrap();
        let p = Params::new(0.1, vec![1.0, 1.0]).unwrap();
        let s = state_of(vec![
            ScalarField::from_fn(g, |x| 1.0 + 0.5 * x[0].sin()),
            ScalarField::from_fn(g, |x| 1.0 - 0.5 * x[0].sin()),
        ]);
        assert!((rao_entropies(&s, &p).unwrap().1 - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn bohm_potential_cases() {
        let g = make_grid(1, 64).unwrap();
        assert!(bohm_potential(&ScalarField::constant(g, 2.0)).unwrap().max_abs() < 1e-14);
        let rho = ScalarField::from_fn(g, |x| (2.0 * x[0].sin()).exp());
        let exact = ScalarField::from_fn(g, |x| x[0].cos().powi(2) - x[0].sin());
        assert!(bohm_potential(&rho).unwrap().sub(&exact).max_abs() < 1e-9);

        let g128 = make_grid(1, 128).unwrap();
        let a = bohm_potential(&ScalarField::from_fn(g, |x| 1.0 + 0.3 * x[0].cos())).unwrap();
        let b = bohm_potential(&ScalarField::from_fn(g128, |x| 1.0 + 0.3 * x[0].cos())).unwrap();
        let worst = (0..64)
            .map(|j| (a.values()[j] - b.values()[2 * j]).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "{worst}");
        assert!(bohm_potential(&ScalarField::constant(g, 0.0)).is_err());
    }

    #[test]
    fn bohm_production_cases() {
        let g = make_grid(1, 64).unwrap();
        assert!(bohm_production(&ScalarField::constant(g, 1.3)).unwrap().abs() < 1e-20);
        let rho = ScalarField::from_fn(g, |x| 1.0 + 0.3 * x[0].cos());
        // (log ρ)'' = −(0.3 cos x)/ρ − (0.3 sin x)²/ρ²
        let oracle = simpson(
            |x| {
                let r = 1.0 + 0.3 * x.cos();
                let d2 = -0.3 * x.cos() / r - (0.3 * x.sin()).powi(2) / (r * r);
                r * d2 * d2
            },
            20000,
        );
        let v = bohm_production(&rho).unwrap();
        assert!((v - oracle).abs() < 1e-10 * oracle.max(1.0), "{v} vs {oracle}");
        let scaled = bohm_production(&rho.scale(3.0)).unwrap();
        assert!((scaled - 3.0 * v).abs() < 1e-12 * v.max(1.0));
    }

    #[test]
    fn identity_residual_cases() {
        let g = make_grid(1, 128).unwrap();
        assert_eq!(identity_2second_residual(&ScalarField::constant(g, 1.0)).unwrap(), 0.0);
        let rho = ScalarField::from_fn(g, |x| 1.0 + 0.5 * x[0].cos());
        assert!(identity_2second_residual(&rho).unwrap() <= 1e-9);
        let g2 = make_grid(2, 64).unwrap();
        let rho2 =
            ScalarField::from_fn(g2, |x| 1.0 + 0.2 * x[0].cos() + 0.1 * (2.0 * x[1]).sin());
        assert!(identity_2second_residual(&rho2).unwrap() <= 1e-8);
    }

    #[test]
    fn ineq_ratio_cases() {
        let g = make_grid(1, 128).unwrap();
        let err = ineq_1ineq_ratio(&ScalarField::constant(g, 1.0)).unwrap_err();
        assert!(err.to_string().contains("degenerate"));
        let rho = ScalarField::from_fn(g, |x| 1.0 + 0.5 * x[0].cos());
        let r = ineq_1ineq_ratio(&rho).unwrap();
        assert!(r > 0.0);
        let r2 = ineq_1ineq_ratio(&rho.scale(4.0)).unwrap();
        assert!((r - r2).abs() < 1e-12 * r);
    }

    #[test]
    fn relative_energy_cases() {
        let g = make_grid(1, 32).unwrap();
        let p = Params::new(0.1, vec![1.0, 1.0]).unwrap();
        let s = state_of(vec![ScalarField::constant(g, 1.0), ScalarField::constant(g, 1.0)]);
        let er = relative_energy(&s, &s.total_density(), &VectorField::zeros(g), &p).unwrap();
        assert_eq!(er, 0.0);

        // ρ̄^ε − ρ̄ = 0.1 sin x, velocities matched, constant species densities
        let limit = ScalarField::from_fn(g, |x| 2.0 - 0.1 * x[0].sin());
        let er = relative_energy(&s, &limit, &VectorField::zeros(g), &p).unwrap();
        assert!((er - 0.005 * PI).abs() < 1e-14);
    }

    #[test]
    fn diagnostics_of_constant_state() {
        let g = make_grid(1, 32).unwrap();
        let p = Params::new(0.1, vec![1.0, 2.0]).unwrap();
        let s = state_of(vec![ScalarField::constant(g, 1.0), ScalarField::constant(g, 3.0)]);
        let d = collect_diagnostics(&s, &p, None).unwrap();
        assert_eq!(
            [d.d_relax, d.d_visc, d.d_lin, d.d_quartic],
            [0.0, 0.0, 0.0, 0.0]
        );
        assert!(d.d_grad < 1e-25 && d.d_bohm.iter().all(|&b| b < 1e-25));
        assert_eq!(d.masses[0], s.species_mass(0));
        assert_eq!(d.masses[1], s.species_mass(1));
        assert!(d.relative_energy.is_none());
    }

    #[test]
    fn diagnostics_relaxation_term_matches_direct_sum() {
        let g = make_grid(1, 64).unwrap();
        let p = Params::new(0.2, vec![1.0, 2.0]).unwrap();
        let mut s = state_of(vec![
            ScalarField::from_fn(g, |x| 1.0 + 0.4 * x[0].sin()),
            ScalarField::from_fn(g, |x| 2.0 + 0.1 * (3.0 * x[0]).cos()),
        ]);
        s.species[0].u.components_mut()[0] = ScalarField::from_fn(g, |x| (2.0 * x[0]).cos());
        s.species[1].u.components_mut()[0] = ScalarField::from_fn(g, |x| 0.5 + x[0].sin());
        let d = collect_diagnostics(&s, &p, None).unwrap();
        let h = g.spacing();
        let mut direct = 0.0;
        for (sp, k) in s.species.iter().zip(&p.k) {
            for j in 0..64 {
                let u = sp.u.component(0).values()[j];
                direct += sp.rho.values()[j] * u * u * h / k;
            }
        }
        assert!((d.d_relax - direct).abs() < 1e-12 * direct);
        assert!(d.d_visc >= 0.0 && d.d_lin >= 0.0 && d.d_quartic >= 0.0);
    }
}
