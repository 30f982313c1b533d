//! Inequality checks with margins, conjecture campaigns and certificates.
//!
//! Theorem-grade checks are proved statements, so a failure means a bug.
//! The entropy-exponential triangle inequality at κ = 1 and concavity of
//! `λ ↦ S(√λX + √(1-λ)Y)` are open; failures there produce certificates.

pub mod checks;
pub mod report;
pub mod search;

pub use checks::{
    busemann_triangle, classical_lemma_checks, concavity_scan, derivative_functional_check, entropy_norm,
    epi_floor_check, equivalence_check, exchangeable_check, grunbaum_row, kappa_scan, sum_entropy_check,
    theorem_checks, triangle_margin, uniform_box_check, ConcavityScan, KappaScan,
};
pub use report::{CheckReport, FamilyWeight, HarnessConfig, Suite, SummaryRow, Tolerances, ViolationCertificate, Witness};
pub use search::{run_trials, search, verify_certificate, write_outputs, SearchOutcome};
