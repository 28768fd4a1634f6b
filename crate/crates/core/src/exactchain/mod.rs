//! Exact finite-`n` computations on the lumped chain of spin counts
//! `(n_minus, n_plus)`: the Gibbs law, the Glauber kernel, total variation
//! mixing curves, and bottleneck lower bounds.
//!
//! Glauber update probabilities depend on a configuration only through its
//! total spin and the value of the chosen site, so the count process is itself
//! Markov and its distance to stationarity from a configuration depends only on
//! the configuration's counts.

mod bottleneck;
mod gibbs;
mod matrix;
mod mixing;
mod states;

use thiserror::Error;

use crate::equilibrium::EquilibriumError;

pub use bottleneck::{bottleneck, BottleneckReport, CutFlow};
pub use gibbs::{gibbs_stationary, LumpedDistribution};
pub use matrix::{glauber_lumped_matrix, TransitionMatrix};
pub use mixing::{default_t_max, t_mix_exact, tv_curve, ExactChain, MixingCurve, Starts, T_MAX_GUARD};
pub use states::{enumerate_states, LumpedState, StateSpace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("system size {n} outside the exact range 1..={max}")]
    Size { n: usize, max: usize },
    #[error("invalid counts n_minus = {n_minus}, n_plus = {n_plus} for n = {n}")]
    InvalidState { n: usize, n_minus: usize, n_plus: usize },
    #[error("not mixed within {t_max} steps (last distance {last_d})")]
    NotMixed { t_max: u64, last_d: f64 },
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
}
