//! Virasoro operators `L_n`, their genus-0 residuals, the commutation
//! relations, and a registry of correlator identities checked coefficient by
//! coefficient.

mod coeff;
mod commutator;
pub(crate) mod ctx;
mod identities;
mod operator;
mod psi;

pub use coeff::{coeff_a, coeff_b};
pub use commutator::{bracket, commutator_residual, l0_scalar_check, CommutatorResidual, L0ScalarCheck};
pub use identities::{verify_identity, IdentityId, IdentityReport, TupleFailure, TupleResult};
pub use operator::{
    build_operator, dilaton_field, euler_field, l0_field, string_field, tilde_l1_field, VectorField,
    VirasoroOperator,
};
pub use psi::{
    apply_operator, apply_with, displayed_operator, psi, psi_displayed, psi_generic, psi_tilde,
    psi_tilde_report, DerivativeFamilies, PsiReport,
};
