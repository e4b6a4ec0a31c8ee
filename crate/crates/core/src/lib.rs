//! Exact genus-0 Gromov–Witten invariants and a checker for the genus-0
//! Virasoro constraints.
//!
//! The crate is organised bottom-up:
//!
//! * [`scalar`] and [`series`]: exact rationals and the truncated formal
//!   power-series ring in the big-phase-space coordinates `t^α_m` and the
//!   Novikov variables.
//! * [`target`]: the classical cohomology package of a target space.
//! * [`engine`]: descendent invariants by string, dilaton, divisor and
//!   topological-recursion reductions, with a memo cache, plus the
//!   generating functions built from them.
//! * [`virasoro`]: the operators `L_n`, the constraint residuals, the
//!   commutator check and the identity registry.

pub mod engine;
pub mod error;
pub mod scalar;
pub mod series;
pub mod target;
pub mod virasoro;

pub use error::{Error, Result};
pub use scalar::{format_rational, parse_rational, rat, ratio, Rational, Scalar};
pub use series::{NovikovDegree, SeriesMonomial, TruncatedSeries, TruncationPolicy, VarId};

/// Truncated series with exact rational coefficients.
pub type Series = TruncatedSeries<Rational>;
