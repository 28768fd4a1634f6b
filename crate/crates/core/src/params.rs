use serde::Serialize;

use crate::equilibrium::{EquilibriumError, ModelTemperature};
use crate::scalar::Scalar;

/// Upper bound on the system size accepted by the exact-chain code.
pub const MAX_EXACT_N: usize = 2000;

/// The triple `(n, beta, K)` every finite-size computation is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams<T> {
    pub n: usize,
    pub beta: T,
    pub k: T,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(n: usize, beta: T, k: T) -> Result<Self, EquilibriumError> {
        if n == 0 {
            return Err(EquilibriumError::Domain("system size must be positive".into()));
        }
        ModelTemperature::new(beta, k)?;
        Ok(Self { n, beta, k })
    }

    pub fn temperature(&self) -> ModelTemperature<T> {
        ModelTemperature {
            beta: self.beta,
            k: self.k,
        }
    }

    /// Coupling strength `2 beta K / n` that multiplies the neighbour sum in the update weights.
    pub fn field_scale(&self) -> T {
        T::lit(2.0) * self.beta * self.k / T::from_count(self.n)
    }

    /// Log weight of the zero spin relative to `±1`: `beta - beta K / n`.
    pub fn zero_log_weight(&self) -> T {
        self.beta - self.beta * self.k / T::from_count(self.n)
    }
}
