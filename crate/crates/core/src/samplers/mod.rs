//! Spin-space quadrature on tiny graphs and Monte Carlo samplers for spins and heights.

mod height;
mod quadrature;
mod spin;
mod stats;

pub use height::{
    augment_to_loops, estimate_two_point_sq, height_heat_bath, loop_samples, winding_and_height_stats, Augmenter,
    HeightChain, WindingStats,
};
pub use quadrature::{quad_at, quad_correlator, quad_correlator_at, QUAD_MAX_VERTICES};
pub use spin::{spin_mcmc, spin_mcmc_with, von_mises, Observable, SpinChain, SpinConfig};
pub use stats::{ChainSpec, Estimate, BATCHES};
