//! Single-site heat-bath Glauber dynamics, the shared-uniform threshold
//! coupling, and Monte Carlo experiments built on it.
//!
//! A step picks a site uniformly, then draws one uniform `U` and sets the spin
//! to `-1`, `0` or `+1` according to the cumulative thresholds
//! `[p_minus | p_zero | p_plus]`. Both chains of a coupling use the same site
//! and the same `U`. Since both thresholds decrease as the neighbour sum grows,
//! the coupling preserves the coordinatewise order.

mod config;
mod coupling;
mod experiments;
mod rng;
mod update;

use thiserror::Error;

use crate::exactchain::ChainError;

pub use config::SpinConfiguration;
pub use coupling::{coalescence_time, coupling_time, CoupledMove, CouplingRecord, CouplingRun, Glauber, MAX_CAP};
pub use experiments::{
    aggregate_contraction, coupling_times_from_stationary, empirical_mean_step_distance, leading_order_mean_distance,
    neighbor_pair, tv_upper_via_coupling, wilson_interval, AggregateContraction, MeanDistanceEstimate,
    StationarySampler, TvUpperPoint, TvUpperReport, MIN_MEAN_DISTANCE_REPLICAS, MIN_TV_REPLICAS, Z_95,
};
pub use rng::RngStream;
pub use update::{phi_fn, update_probs, UpdateDistribution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
}
