use serde::Serialize;

use super::cgf::{cgf_d1, cgf_d2};
use super::curves::{k1, kc1, kc2, wc};
use super::minima::{minimize_g, MinimaReport};
use super::{beta_c, EquilibriumError, ModelTemperature, TANGENCY_TOL};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    SinglePhase,
    SecondOrderCritical,
    TwoPhase,
    MetastableSinglePhase,
    FirstOrderCoexistence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingPrediction {
    Rapid,
    Slow,
    Boundary,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::SinglePhase => "single_phase",
            Phase::SecondOrderCritical => "second_order_critical",
            Phase::TwoPhase => "two_phase",
            Phase::MetastableSinglePhase => "metastable_single_phase",
            Phase::FirstOrderCoexistence => "first_order_coexistence",
        })
    }
}

impl std::fmt::Display for MixingPrediction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MixingPrediction::Rapid => "rapid",
            MixingPrediction::Slow => "slow",
            MixingPrediction::Boundary => "boundary",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseReport<T> {
    pub beta: T,
    pub k: T,
    pub minima: MinimaReport<T>,
    pub kc2: Option<T>,
    pub k1: Option<T>,
    pub kc1: Option<T>,
    pub wc: Option<T>,
    pub phase: Phase,
    pub mixing_prediction: MixingPrediction,
    /// Largest admissible contraction exponent; 0 unless mixing is predicted rapid.
    pub alpha_max: T,
}

/// Equilibrium structure and predicted mixing regime at `(beta, K)`.
///
/// The rapid/slow interface is `K_c^(2)` for `beta <= log 4` and `K_1` above it;
/// `K` within `10 tol` (relative) of the interface is reported as `Boundary`.
pub fn classify<T: Scalar>(beta: T, k: T, tol: T) -> Result<PhaseReport<T>, EquilibriumError> {
    ModelTemperature::new(beta, k)?;
    let minima = minimize_g(beta, k, tol)?;
    let near = |curve: T| (k - curve).abs() <= T::lit(10.0) * tol * curve.max(T::one());

    let (kc2_v, k1_v, kc1_v, wc_v, phase, interface) = if beta <= beta_c() {
        let c = kc2(beta)?;
        let w = if beta == beta_c() { Some(wc(beta)?) } else { None };
        let phase = if near(c) {
            Phase::SecondOrderCritical
        } else if k < c {
            Phase::SinglePhase
        } else {
            Phase::TwoPhase
        };
        (Some(c), None, None, w, phase, c)
    } else {
        let a = k1(beta, T::lit(TANGENCY_TOL))?;
        let b = kc1(beta, tol)?;
        let phase = if near(b) {
            Phase::FirstOrderCoexistence
        } else if k <= a || near(a) {
            Phase::SinglePhase
        } else if k < b {
            Phase::MetastableSinglePhase
        } else {
            Phase::TwoPhase
        };
        (None, Some(a), Some(b), Some(wc(beta)?), phase, a)
    };

    let (mixing_prediction, alpha_max) = if near(interface) {
        (MixingPrediction::Boundary, T::zero())
    } else if k < interface {
        (MixingPrediction::Rapid, (interface - k) / interface)
    } else {
        (MixingPrediction::Slow, T::zero())
    };

    Ok(PhaseReport {
        beta,
        k,
        minima,
        kc2: kc2_v,
        k1: k1_v,
        kc1: kc1_v,
        wc: wc_v,
        phase,
        mixing_prediction,
        alpha_max,
    })
}

/// Per-point contraction coefficients of the threshold coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionPoint<T> {
    pub z: T,
    /// `2 beta K c_beta''(2 beta K z)`: neighbour pairs at magnetisation `z` contract iff `< 1`.
    pub local: T,
    /// `c_beta'(2 beta K z) / z`: contraction in aggregate along a path from the origin iff `< 1`.
    pub aggregate: T,
    pub local_expands: bool,
    pub aggregate_contracts: bool,
}

pub fn contraction_profile<T: Scalar>(
    beta: T,
    k: T,
    grid: &[T],
) -> Result<Vec<ContractionPoint<T>>, EquilibriumError> {
    ModelTemperature::new(beta, k)?;
    let m = T::lit(2.0) * beta * k;
    grid.iter()
        .map(|&z| {
            if !(z > T::zero() && z <= T::one()) {
                return Err(EquilibriumError::Domain(format!(
                    "contraction profile grid points must lie in (0, 1], got {z}"
                )));
            }
            let local = m * cgf_d2(beta, m * z);
            let aggregate = cgf_d1(beta, m * z) / z;
            Ok(ContractionPoint {
                z,
                local,
                aggregate,
                local_expands: local > T::one(),
                aggregate_contracts: aggregate < T::one(),
            })
        })
        .collect()
}
