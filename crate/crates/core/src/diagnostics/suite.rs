//! Batched pointwise checks over seeded random samples.

use std::fmt;

use rand::Rng;

use super::gradient::gradient_check_entropy;
use super::identities::{
    check_skew_forms, check_total_energy_identity_with, chunk_rng, DerivationStep, EnergyFluxForm,
    FreeSample,
};
use crate::basis;
use crate::error::{Error, Result};
use crate::model::PrimitiveState;
use crate::parallel::{nan_max, Execution};

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const IDENTITY_TOLERANCE: f64 = 1e-12;
pub const GRADIENT_TOLERANCE: f64 = 1e-6;

const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckKind {
    TotalEnergyIdentity,
    Derivation(DerivationStep),
    EntropyGradient,
}

impl CheckKind {
    pub fn label(self) -> &'static str {
        match self {
            CheckKind::TotalEnergyIdentity => "total energy identity",
            CheckKind::Derivation(step) => step.label(),
            CheckKind::EntropyGradient => "entropy variable gradient",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            CheckKind::EntropyGradient => GRADIENT_TOLERANCE,
            _ => IDENTITY_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOptions {
    pub orders: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub energy_flux: EnergyFluxForm,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            orders: vec![0, 1, 2, 3],
            samples: 10_000,
            seed: DEFAULT_SEED,
            energy_flux: EnergyFluxForm::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub order: usize,
    pub kind: CheckKind,
    /// Largest defect over all samples; `None` for an empty batch.
    pub max_defect: Option<f64>,
}

impl CheckRow {
    pub fn passed(&self) -> bool {
        self.max_defect.is_none_or(|d| d <= self.kind.tolerance())
    }
}

impl fmt::Display for CheckRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        match self.max_defect {
            Some(d) => write!(
                f,
                "{status} N={} {}: max defect {d:.3e} (tol {:.0e})",
                self.order,
                self.kind.label(),
                self.kind.tolerance()
            ),
            None => write!(f, "{status} N={} {}: no samples", self.order, self.kind.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub rows: Vec<CheckRow>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(CheckRow::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRow> {
        self.rows.iter().filter(|r| !r.passed())
    }

    pub fn worst(&self, order: usize, kind: CheckKind) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.order == order && r.kind == kind)
            .and_then(|r| r.max_defect)
    }
}

fn draw_g(rng: &mut impl Rng) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        9.81
    }
}

/// Gradient-check state: `h ∈ [0.1, 10]`, velocities in `[−3, 3]`, `b ∈ [0, 1]`.
pub fn random_gradient_state(rng: &mut impl Rng, order: usize) -> (PrimitiveState, f64) {
    let w = PrimitiveState::new(
        rng.random_range(0.1..10.0),
        rng.random_range(-3.0..3.0),
        (0..order).map(|_| rng.random_range(-3.0..3.0)).collect(),
    );
    (w, rng.random_range(0.0..1.0))
}

/// Per-check maxima over one chunk, in a fixed kind order.
fn chunk_maxima(
    order: usize,
    seed: u64,
    chunk: usize,
    count: usize,
    form: EnergyFluxForm,
) -> Result<Vec<f64>> {
    let mut rng = chunk_rng(seed, order, chunk);
    let mut worst = vec![0.0f64; DerivationStep::ALL.len() + 2];
    for _ in 0..count {
        let g = draw_g(&mut rng);
        let s = FreeSample::random(&mut rng, order);
        worst[0] = nan_max(worst[0], check_total_energy_identity_with(&s, g, form));
        for (slot, (_, d)) in worst[1..].iter_mut().zip(check_skew_forms(&s, g)) {
            *slot = nan_max(*slot, d);
        }
        let last = worst.len() - 1;
        let (w, b) = random_gradient_state(&mut rng, order);
        worst[last] = nan_max(worst[last], gradient_check_entropy(&w, b, g)?);
    }
    Ok(worst)
}

/// Run every pointwise check for each order in `options.orders`.
pub fn run_checks(options: &CheckOptions, execution: Execution) -> Result<CheckReport> {
    let mut kinds = vec![CheckKind::TotalEnergyIdentity];
    kinds.extend(DerivationStep::ALL.iter().map(|&s| CheckKind::Derivation(s)));
    kinds.push(CheckKind::EntropyGradient);

    let mut rows = Vec::new();
    for &order in &options.orders {
        let chunks = options.samples.div_ceil(CHUNK);
        let per_chunk = execution.try_map_range(chunks, |c| {
            let count = CHUNK.min(options.samples - c * CHUNK);
            chunk_maxima(order, options.seed, c, count, options.energy_flux)
        })?;
        for (k, &kind) in kinds.iter().enumerate() {
            let max_defect = (!per_chunk.is_empty())
                .then(|| per_chunk.iter().map(|m| m[k]).fold(0.0, nan_max));
            rows.push(CheckRow {
                order,
                kind,
                max_defect,
            });
        }
    }
    Ok(CheckReport { rows })
}

/// `β = ∫₀¹ u(ζ)² dζ / u_m²` evaluated by Gauss quadrature of the velocity
/// profile `u(ζ) = u_m + Σ u_i φ_i(ζ)`.
pub fn boussinesq_beta_quadrature(w: &PrimitiveState) -> Result<f64> {
    if w.u_m == 0.0 {
        return Err(Error::UndefinedBeta);
    }
    let rule = basis::gauss_rule(w.order() + 2)?;
    let mut total = 0.0;
    for (&z, &wt) in rule.nodes().iter().zip(rule.weights()) {
        let mut u = w.u_m;
        for (i, &ui) in w.u.iter().enumerate() {
            u += ui * basis::phi(i + 1, z)?;
        }
        total += wt * u * u;
    }
    Ok(total / (w.u_m * w.u_m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::boussinesq_beta;

    #[test]
    fn default_checks_pass() {
        let options = CheckOptions {
            samples: 3000,
            ..CheckOptions::default()
        };
        let report = run_checks(&options, Execution::default()).unwrap();
        assert_eq!(report.rows.len(), 4 * 13);
        for row in &report.rows {
            assert!(row.passed(), "{row}");
        }
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let options = CheckOptions {
            orders: vec![2],
            samples: 2500,
            ..CheckOptions::default()
        };
        let a = run_checks(&options, Execution::Sequential).unwrap();
        let b = run_checks(&options, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corrupted_flux_fails_only_the_energy_identity() {
        let options = CheckOptions {
            orders: vec![1],
            samples: 200,
            energy_flux: EnergyFluxForm::Corrupted,
            ..CheckOptions::default()
        };
        let report = run_checks(&options, Execution::default()).unwrap();
        let failed: Vec<_> = report.failures().map(|r| r.kind).collect();
        assert_eq!(failed, vec![CheckKind::TotalEnergyIdentity]);
        assert!(report.rows[0].to_string().contains("total energy identity"));
    }

    #[test]
    fn empty_batch_is_vacuous() {
        let options = CheckOptions {
            samples: 0,
            ..CheckOptions::default()
        };
        let report = run_checks(&options, Execution::default()).unwrap();
        assert!(report.passed());
        assert!(report.rows.iter().all(|r| r.max_defect.is_none()));
    }

    #[test]
    fn beta_quadrature_matches_closed_form() {
        let w = PrimitiveState::new(1.0, 0.5, vec![0.3, -0.2, 0.1]);
        let q = boussinesq_beta_quadrature(&w).unwrap();
        let c = boussinesq_beta(&w).unwrap();
        assert!((q - c).abs() <= 1e-13 * c);
        let plain = PrimitiveState::new(1.0, 0.5, vec![]);
        assert!((boussinesq_beta_quadrature(&plain).unwrap() - 1.0).abs() < 1e-15);
        assert!(boussinesq_beta_quadrature(&PrimitiveState::new(1.0, 0.0, vec![0.1])).is_err());
    }
}
