use serde::Serialize;

use super::states::{LumpedState, StateSpace};
use super::ChainError;
use crate::params::ModelParams;
use crate::scalar::Scalar;

/// Probability vector over lumped states in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LumpedDistribution<T> {
    pub probs: Vec<T>,
    pub n: usize,
}

impl<T: Scalar> LumpedDistribution<T> {
    pub fn point_mass(space: &StateSpace, at: &LumpedState) -> Self {
        let mut probs = vec![T::zero(); space.len()];
        probs[space.index(at)] = T::one();
        Self { probs, n: space.n() }
    }

    pub fn prob(&self, space: &StateSpace, s: &LumpedState) -> T {
        self.probs[space.index(s)]
    }

    /// Law of the total spin, indexed by `S + n`.
    pub fn magnetization_marginal(&self, space: &StateSpace) -> Vec<T> {
        let mut out = vec![T::zero(); 2 * self.n + 1];
        for (s, &p) in space.iter().zip(&self.probs) {
            let i = (s.magnetization() + self.n as i64) as usize;
            out[i] = out[i] + p;
        }
        out
    }

    /// Total variation distance `1/2 sum |mu - nu|`.
    pub fn tv_distance(&self, other: &Self) -> T {
        debug_assert_eq!(self.probs.len(), other.probs.len());
        let s: T = self.probs.iter().zip(&other.probs).map(|(&a, &b)| (a - b).abs()).sum();
        s / T::lit(2.0)
    }
}

/// `log k!` for `k = 0..=n`.
pub(crate) fn log_factorials<T: Scalar>(n: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0f64;
    out.push(T::zero());
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(T::lit(acc));
    }
    out
}

/// Gibbs law of the spin counts:
/// `log w = log multinomial(n; n_-, n_0, n_+) - beta (n_- + n_+) + beta K S^2 / n`,
/// normalised in log space.
pub fn gibbs_stationary<T: Scalar>(params: &ModelParams<T>) -> Result<LumpedDistribution<T>, ChainError> {
    let space = StateSpace::new(params.n)?;
    let lf = log_factorials::<T>(params.n);
    let n_t = T::from_count(params.n);
    let log_w: Vec<T> = space
        .iter()
        .map(|s| {
            let mag = T::from_spin(s.magnetization());
            lf[params.n] - (lf[s.n_minus] + lf[s.n_plus]) - lf[s.n_zero()]
                - params.beta * T::from_count(s.n_minus + s.n_plus)
                + params.beta * params.k * mag * mag / n_t
        })
        .collect();
    let max = log_w.iter().copied().fold(T::neg_infinity(), T::max);
    let mut probs: Vec<T> = log_w.iter().map(|&l| (l - max).exp()).collect();
    let z: T = probs.iter().copied().sum();
    for p in &mut probs {
        *p = *p / z;
    }
    Ok(LumpedDistribution { probs, n: params.n })
}
