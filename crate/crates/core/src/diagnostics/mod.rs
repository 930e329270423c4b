//! Verification tooling: identity checks, gradient checks, exact solutions,
//! energy reports and convergence studies.

pub mod convergence;
pub mod energy;
pub mod gradient;
pub mod identities;
pub mod stoker;
pub mod suite;

pub use convergence::{convergence_study, ConvergenceRow, ConvergenceTable, Reference};
pub use energy::{energy_report, EnergyReport, EnergyRow};
pub use gradient::{gradient_check_entropy, gradient_check_entropy_with_step};
pub use identities::{
    check_skew_forms, check_total_energy_identity, residual_c_m_ui, DerivationStep,
    EnergyFluxForm, FreeSample,
};
pub use stoker::{stoker_dam_break, StokerSolution};
pub use suite::{run_checks, CheckKind, CheckOptions, CheckReport, CheckRow};
