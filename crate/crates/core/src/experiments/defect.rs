//! Distance of the relaxed total density from the limit equation.

use crate::error::Result;
use crate::grid::{grad, Spectrum};
use crate::nsk::{nsk_rhs, run_nsk, NskConfig};
use crate::state::{default_delta, total_density, InitialConditionSpec, Params};

/// `‖∂_t ρ̄^ε − div((Σ_i k_i ρ_i^ε) ∇ρ̄^ε)‖` in the weighted norm
/// `(Σ_ξ |ĉ_ξ|² / (1 + |ξ|²))^{1/2}`, at every stored time. `∂_t ρ̄^ε` is the
/// exact time derivative of the semi-discrete system.
pub fn limit_defect(
    ic: &InitialConditionSpec,
    base: &NskConfig,
    eps: f64,
    k: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let params = Params {
        eps,
        delta: default_delta(eps),
        k: k.to_vec(),
        ..base.params.clone()
    };
    params.validate()?;
    let cfg = NskConfig {
        params: params.clone(),
        ..base.clone()
    };
    let traj = run_nsk(ic, &cfg)?;
    traj.states
        .iter()
        .map(|s| {
            let (drho, _) = nsk_rhs(s, &params)?;
            let rho_bar = total_density(s);
            let g = grad(&rho_bar);
            let mut weight = s.species[0].rho.scale(k[0]);
            for (sp, &ki) in s.species.iter().zip(k).skip(1) {
                weight.axpy(ki, &sp.rho);
            }
            let mut d = Spectrum::zeros(*s.grid());
            for dr in &drho {
                d.add_assign(&dr.to_spectrum());
            }
            for (a, c) in g.components().iter().enumerate() {
                let mut flux = weight.mul(c).to_spectrum().partial(a);
                for v in flux.coeffs_mut() {
                    *v = -*v;
                }
                d.add_assign(&flux);
            }
            Ok((s.time, d.negative_sobolev_norm()))
        })
        .collect()
}
