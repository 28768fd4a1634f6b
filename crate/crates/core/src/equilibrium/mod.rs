//! Equilibrium structure of the mean-field model: the cumulant generating
//! function and its transforms, minimisers of the free energy functional,
//! the three critical curves, and the phase / mixing-regime classification.

mod cgf;
mod curves;
mod minima;
mod phase;

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;

pub use cgf::{cgf, cgf_derivs, cgf_slope_inverse, free_energy, legendre};
pub use curves::{k1, k1_solution, kc1, kc2, slope_ratio_sup, wc, K1Solution};
pub use minima::{minimize_g, rate_function, CriticalKind, CriticalPoint, MinimaReport, RateFunction};
pub use phase::{classify, contraction_profile, ContractionPoint, MixingPrediction, Phase, PhaseReport};

/// Default tolerance for scalar root finding.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default tolerance for the two-equation tangency system defining `K_1`.
pub const TANGENCY_TOL: f64 = 1e-8;

/// The tricritical inverse temperature `log 4`.
pub fn beta_c<T: Scalar>() -> T {
    T::LN_2() + T::LN_2()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("solver failed: {what} (last bracket [{lo}, {hi}])")]
    Solver { what: String, lo: f64, hi: f64 },
}

/// Inverse temperature and interaction strength, both finite and positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelTemperature<T> {
    pub beta: T,
    pub k: T,
}

impl<T: Scalar> ModelTemperature<T> {
    pub fn new(beta: T, k: T) -> Result<Self, EquilibriumError> {
        check_beta(beta)?;
        check_k(k)?;
        Ok(Self { beta, k })
    }
}

pub(crate) fn check_finite<T: Scalar>(name: &str, v: T) -> Result<(), EquilibriumError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(EquilibriumError::Domain(format!("{name} must be finite, got {v}")))
    }
}

pub(crate) fn check_beta<T: Scalar>(beta: T) -> Result<(), EquilibriumError> {
    check_finite("beta", beta)?;
    if beta > T::zero() {
        Ok(())
    } else {
        Err(EquilibriumError::Domain(format!("beta must be positive, got {beta}")))
    }
}

pub(crate) fn check_k<T: Scalar>(k: T) -> Result<(), EquilibriumError> {
    check_finite("K", k)?;
    if k > T::zero() {
        Ok(())
    } else {
        Err(EquilibriumError::Domain(format!("K must be positive, got {k}")))
    }
}
