//! Exact, cross-checked evaluation of the correlation inequalities on small graphs.

mod checks;
mod oracle;
mod suite;

pub use checks::{
    boundary_of, check_ferromagnet, check_ginibre_monotonicity, check_lieb_rivasseau, check_mms, check_reflection,
    check_squares, mms_sequences, with_coupling, CenteredBox, CheckReport, Estimator, SequencePoint, EXACT_TOL,
    MC_SIGMAS, MIN_ESS,
};
pub use oracle::{exact_correlator, OracleValue, ROUTE_SLACK};
pub use suite::{random_instance, randomized_suite, SuiteReport};
