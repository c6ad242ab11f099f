//! Loop configurations of a current outside a source set, their weights,
//! and the identities linking them to currents and heights.

mod config;
mod count;
mod mlaw;
mod switching;
mod winding;

pub use config::{LoopConfig, LoopMultigraph, Traversal};
pub use count::{
    configuration_count, enumerate_consistent, eulerian_factor, eulerian_marginal_check, loop_weight_sum,
    verify_cutting, verify_loopexp, weight_lambda, weight_lambda_exact, CuttingCheck, EulerianCheck, LoopexpCheck,
    EXPLICIT_GUARD,
};
pub use mlaw::{m_law, m_law_explicit, path_visit_expectation};
pub use switching::{
    higher_power_verify, path_reversal_check, single_switch_verify, PathReversalReport, SwitchReport,
};
pub use winding::{geometric_winding, winding_at, winding_field};
