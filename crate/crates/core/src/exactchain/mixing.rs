use rayon::prelude::*;
use serde::Serialize;

use super::gibbs::{gibbs_stationary, LumpedDistribution};
use super::matrix::{glauber_lumped_matrix, TransitionMatrix};
use super::states::LumpedState;
use super::ChainError;
use crate::params::ModelParams;
use crate::scalar::Scalar;

/// Hard cap on the number of iterated steps.
pub const T_MAX_GUARD: u64 = 10_000_000;

/// Distance to stationarity `d(t)` from one lumped start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingCurve<T> {
    pub t: Vec<u64>,
    pub d: Vec<T>,
    pub start: LumpedState,
    /// First `t` with `d(t) <= eps`, for each requested `eps` that was reached.
    pub eps_hit: Vec<(T, u64)>,
}

impl<T: Scalar> MixingCurve<T> {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,d")?;
        for (t, d) in self.t.iter().zip(&self.d) {
            writeln!(w, "{t},{d}")?;
        }
        Ok(())
    }
}

/// Which lumped starts the worst-case distance is taken over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Starts {
    /// All-plus, all-minus and all-zero.
    Extreme,
    /// Every lumped state (exact `d(t)`).
    All,
    Custom(Vec<LumpedState>),
}

impl Starts {
    pub fn resolve(&self, n: usize) -> Vec<LumpedState> {
        match self {
            Starts::Extreme => vec![LumpedState::all_plus(n), LumpedState::all_minus(n), LumpedState::all_zero(n)],
            Starts::All => (0..=n).flat_map(|m| (0..=n - m).map(move |p| LumpedState { n_minus: m, n_plus: p, n })).collect(),
            Starts::Custom(v) => v.clone(),
        }
    }
}

/// `ceil(50 n log n)`, the default iteration budget in the rapidly mixing regime.
pub fn default_t_max(n: usize) -> u64 {
    let n = n.max(2) as f64;
    (50.0 * n * n.ln()).ceil() as u64
}

/// Lumped kernel together with its stationary law.
#[derive(Debug, Clone)]
pub struct ExactChain<T> {
    pub matrix: TransitionMatrix<T>,
    pub stationary: LumpedDistribution<T>,
}

struct Evolution<'a, T> {
    chain: &'a ExactChain<T>,
    mu: Vec<T>,
    next: Vec<T>,
}

impl<'a, T: Scalar> Evolution<'a, T> {
    fn new(chain: &'a ExactChain<T>, start: &LumpedState) -> Self {
        let mu = LumpedDistribution::point_mass(chain.matrix.space(), start).probs;
        let next = vec![T::zero(); mu.len()];
        Self { chain, mu, next }
    }

    fn distance(&self) -> T {
        let s: T = self
            .mu
            .iter()
            .zip(&self.chain.stationary.probs)
            .map(|(&a, &b)| (a - b).abs())
            .sum();
        s / T::lit(2.0)
    }

    fn step(&mut self) {
        self.chain.matrix.apply_left(&self.mu, &mut self.next);
        std::mem::swap(&mut self.mu, &mut self.next);
    }
}

impl<T: Scalar> ExactChain<T> {
    pub fn new(params: &ModelParams<T>) -> Result<Self, ChainError> {
        Ok(Self {
            matrix: glauber_lumped_matrix(params)?,
            stationary: gibbs_stationary(params)?,
        })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.matrix.params
    }

    /// `d(t) = || delta_start P^t - pi ||_TV` for `t = 0, 1, ...` up to `t_max`,
    /// stopping early once `d` is more than `1e-4` below the smallest `eps`.
    pub fn tv_curve(&self, start: &LumpedState, t_max: u64, eps: &[T]) -> Result<MixingCurve<T>, ChainError> {
        check_t_max(t_max)?;
        let mut evo = Evolution::new(self, start);
        let stop = eps
            .iter()
            .copied()
            .fold(None, |acc: Option<T>, e| Some(acc.map_or(e, |a| a.min(e))))
            .map(|e| e - T::lit(1e-4));
        let mut ts = Vec::new();
        let mut ds = Vec::new();
        let mut eps_hit: Vec<(T, u64)> = Vec::new();
        let mut t = 0u64;
        loop {
            let d = evo.distance();
            ts.push(t);
            ds.push(d);
            for &e in eps {
                if d <= e && !eps_hit.iter().any(|&(x, _)| x == e) {
                    eps_hit.push((e, t));
                }
            }
            if t == t_max || stop.is_some_and(|s| d < s) {
                break;
            }
            evo.step();
            t += 1;
        }
        Ok(MixingCurve {
            t: ts,
            d: ds,
            start: *start,
            eps_hit,
        })
    }

    /// First `t` with `d(t) <= eps` from a single start.
    fn hitting_time(&self, start: &LumpedState, eps: T, t_max: u64) -> Result<u64, (u64, T)> {
        let mut evo = Evolution::new(self, start);
        let mut t = 0u64;
        loop {
            let d = evo.distance();
            if d <= eps {
                return Ok(t);
            }
            if t == t_max {
                return Err((t, d));
            }
            evo.step();
            t += 1;
        }
    }

    /// `t_mix(eps) = min { t : max_start d_start(t) <= eps }`. Each `d_start` is
    /// nonincreasing, so this is the largest of the per-start hitting times.
    pub fn t_mix(&self, eps: T, starts: &Starts, t_max: u64) -> Result<u64, ChainError> {
        check_t_max(t_max)?;
        if !(eps > T::zero() && eps <= T::one()) {
            return Err(ChainError::Domain(format!("eps must lie in (0, 1], got {eps}")));
        }
        let list = starts.resolve(self.params().n);
        if list.is_empty() {
            return Err(ChainError::Domain("no start states given".into()));
        }
        let results: Vec<Result<u64, (u64, T)>> = list.par_iter().map(|s| self.hitting_time(s, eps, t_max)).collect();
        let mut worst = 0u64;
        let mut failure: Option<f64> = None;
        for r in results {
            match r {
                Ok(t) => worst = worst.max(t),
                Err((_, d)) => failure = Some(failure.map_or(d.to_f64_lossy(), |f: f64| f.max(d.to_f64_lossy()))),
            }
        }
        match failure {
            Some(last_d) => Err(ChainError::NotMixed { t_max, last_d }),
            None => Ok(worst),
        }
    }
}

fn check_t_max(t_max: u64) -> Result<(), ChainError> {
    if t_max > T_MAX_GUARD {
        Err(ChainError::Domain(format!("t_max {t_max} exceeds the guard {T_MAX_GUARD}")))
    } else {
        Ok(())
    }
}

/// Builds the chain and returns `d(t)` from `start`.
pub fn tv_curve<T: Scalar>(params: &ModelParams<T>, start: &LumpedState, t_max: u64) -> Result<MixingCurve<T>, ChainError> {
    ExactChain::new(params)?.tv_curve(start, t_max, &[])
}

/// Builds the chain and returns `t_mix(eps)` over `starts`.
pub fn t_mix_exact<T: Scalar>(params: &ModelParams<T>, eps: T, starts: &Starts, t_max: u64) -> Result<u64, ChainError> {
    ExactChain::new(params)?.t_mix(eps, starts, t_max)
}
