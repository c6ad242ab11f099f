//! Two-coloured loop configurations for pairs of currents, path switching,
//! and the identities and inequalities built on them.

mod config;
mod enumerate;
mod identities;

pub use config::{weight_lambda_tilde, Colour, ColouredLoopConfig};
pub use enumerate::{coloured_count, enumerate_coloured, verify_loopexp1};
pub use identities::{
    derivative_identity_check, double_switch_verify, ferromagnet_verify, DerivativeReport, DoubleSwitchReport,
    FerromagnetReport,
};
