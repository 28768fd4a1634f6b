use serde::Serialize;

use crate::params::ModelParams;
use crate::scalar::Scalar;

/// Heat-bath law of the updated spin given the neighbour sum `S~`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpdateDistribution<T> {
    pub p_minus: T,
    pub p_zero: T,
    pub p_plus: T,
}

impl<T: Scalar> UpdateDistribution<T> {
    /// Cumulative thresholds `(p_minus, p_minus + p_zero)` in the fixed order
    /// `[-1 | 0 | +1]` used by the threshold coupling. Both are nonincreasing in `S~`.
    #[inline]
    pub fn thresholds(&self) -> (T, T) {
        (self.p_minus, T::one() - self.p_plus)
    }

    /// Spin selected by a uniform `u` in `[0, 1)`.
    #[inline]
    pub fn select(&self, u: T) -> i8 {
        let (lo, hi) = self.thresholds();
        if u < lo {
            -1
        } else if u < hi {
            0
        } else {
            1
        }
    }

    #[inline]
    pub fn prob(&self, spin: i8) -> T {
        match spin {
            -1 => self.p_minus,
            0 => self.p_zero,
            _ => self.p_plus,
        }
    }
}

/// Heat-bath probabilities for a site whose neighbours sum to `s_tilde`:
/// weights `e^{2 beta K S~/n}`, `e^{beta - beta K/n}`, `e^{-2 beta K S~/n}` for
/// `+1`, `0`, `-1`, evaluated after subtracting the largest exponent.
pub fn update_probs<T: Scalar>(params: &ModelParams<T>, s_tilde: i64) -> UpdateDistribution<T> {
    debug_assert!(s_tilde.unsigned_abs() < params.n as u64, "|S~| must be below n");
    update_probs_unchecked(params, s_tilde)
}

/// `phi_{beta,K}(x) = 2 sinh(2 beta K x / n) / (2 cosh(2 beta K x / n) + e^{beta - beta K / n})`,
/// the difference `p_+ - p_-` at neighbour sum `x`.
pub fn phi_fn<T: Scalar>(params: &ModelParams<T>, x: i64) -> T {
    debug_assert!(x.unsigned_abs() <= params.n as u64);
    let d = update_probs_unchecked(params, x);
    d.p_plus - d.p_minus
}

// `phi_fn` is also evaluated at |x| = n, outside the update range.
fn update_probs_unchecked<T: Scalar>(params: &ModelParams<T>, x: i64) -> UpdateDistribution<T> {
    // evaluated at |x| and mirrored so that flipping S~ swaps p_+ and p_- exactly
    let a = params.field_scale() * T::from_spin(x.abs());
    let b = params.zero_log_weight();
    let m = a.max(b);
    let (w_up, w_zero, w_down) = ((a - m).exp(), (b - m).exp(), (-a - m).exp());
    let z = w_down + w_zero + w_up;
    let (up, zero, down) = (w_up / z, w_zero / z, w_down / z);
    if x >= 0 {
        UpdateDistribution { p_minus: down, p_zero: zero, p_plus: up }
    } else {
        UpdateDistribution { p_minus: up, p_zero: zero, p_plus: down }
    }
}
