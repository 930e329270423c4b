//! Finite-difference check that the entropy variables are the energy gradient.

use crate::error::Result;
use crate::model::{self, ConservedState, PrimitiveState};

/// Default relative step: `δ_k = 1e-6 · max(1, |U_k|)`.
pub const DEFAULT_RELATIVE_STEP: f64 = 1e-6;

/// Largest deviation between the entropy variables at `w` and a central
/// difference of the conserved-variable energy density, each component
/// measured relative to `max(|exact|, 1)`.
pub fn gradient_check_entropy(w: &PrimitiveState, b: f64, g: f64) -> Result<f64> {
    gradient_check_entropy_with_step(w, b, g, DEFAULT_RELATIVE_STEP)
}

pub fn gradient_check_entropy_with_step(
    w: &PrimitiveState,
    b: f64,
    g: f64,
    relative_step: f64,
) -> Result<f64> {
    let u = model::to_conserved(w)?.to_vec();
    let vars = model::entropy_vars(w, b, g);
    let mut exact = vec![vars.q1, vars.q2];
    exact.extend(vars.q_u);

    let mut worst = 0.0f64;
    for k in 0..u.len() {
        let delta = relative_step * u[k].abs().max(1.0);
        let mut plus = u.clone();
        let mut minus = u.clone();
        plus[k] += delta;
        minus[k] -= delta;
        let e_plus = model::energy_density_conserved(&ConservedState::from_slice(&plus), b, g);
        let e_minus = model::energy_density_conserved(&ConservedState::from_slice(&minus), b, g);
        let fd = (e_plus - e_minus) / (plus[k] - minus[k]);
        worst = worst.max((fd - exact[k]).abs() / exact[k].abs().max(1.0));
    }
    Ok(worst)
}
