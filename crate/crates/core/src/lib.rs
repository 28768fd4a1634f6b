//! Mean-field Blume-Capel model: equilibrium phase structure, exact mixing
//! times of the lumped magnetisation chain, and coupled Glauber dynamics.
//!
//! The analytic and exact-chain code is generic over [`Scalar`] (`f32` or
//! `f64`); the aliases at the crate root fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod equilibrium;
pub mod exactchain;
pub mod params;
pub mod scalar;
pub mod scaling;

pub use dynamics::{Glauber, RngStream, SpinConfiguration};
pub use params::MAX_EXACT_N;
pub use scalar::Scalar;
pub use scaling::{fit_scaling, ScalingFit, ScalingModel};

pub type ModelParams = params::ModelParams<f64>;
pub type ModelTemperature = equilibrium::ModelTemperature<f64>;
pub type MinimaReport = equilibrium::MinimaReport<f64>;
pub type PhaseReport = equilibrium::PhaseReport<f64>;
pub type LumpedDistribution = exactchain::LumpedDistribution<f64>;
pub type TransitionMatrix = exactchain::TransitionMatrix<f64>;
pub type ExactChain = exactchain::ExactChain<f64>;
pub type MixingCurve = exactchain::MixingCurve<f64>;
pub type BottleneckReport = exactchain::BottleneckReport<f64>;
