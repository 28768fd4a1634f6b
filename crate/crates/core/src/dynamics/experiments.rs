use rayon::prelude::*;
use serde::Serialize;

use super::{coalescence_time, phi_fn, DynamicsError, Glauber, RngStream, SpinConfiguration};
use crate::exactchain::{gibbs_stationary, StateSpace};
use crate::params::{ModelParams, MAX_EXACT_N};

/// Minimum replica count for [`empirical_mean_step_distance`].
pub const MIN_MEAN_DISTANCE_REPLICAS: usize = 10_000;
/// Minimum replica count for [`tv_upper_via_coupling`].
pub const MIN_TV_REPLICAS: usize = 100;
/// Two-sided 95% normal quantile used for the binomial intervals.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Neighbouring pair `(sigma, tau)` with `S(sigma) = s_sigma` and `tau` equal to
/// `sigma` except one zero spin raised to `+1`. Spins of `sigma` are split as
/// evenly as the magnetisation allows.
pub fn neighbor_pair(n: usize, s_sigma: i64) -> Result<(SpinConfiguration, SpinConfiguration), DynamicsError> {
    let abs = s_sigma.unsigned_abs() as usize;
    if abs >= n {
        return Err(DynamicsError::Precondition(format!("|S| = {abs} leaves no zero spin at n = {n}")));
    }
    let base = (n - abs) / 3;
    let n_minus = base + if s_sigma < 0 { abs } else { 0 };
    let n_plus = base + if s_sigma > 0 { abs } else { 0 };
    let sigma = SpinConfiguration::from_counts(n, n_minus, n_plus)?;
    let mut tau = sigma.clone();
    tau.set(n_minus, 1);
    Ok((sigma, tau))
}

/// Leading-order mean coupling distance for neighbours with `S(tau) = S(sigma) + 1`:
/// `(n - 1)/n + ((n - 1)/n) (phi(S(tau)) - phi(S(sigma)))`.
pub fn leading_order_mean_distance(params: &ModelParams<f64>, s_sigma: i64, s_tau: i64) -> f64 {
    let f = (params.n as f64 - 1.0) / params.n as f64;
    f + f * (phi_fn(params, s_tau) - phi_fn(params, s_sigma))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanDistanceEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub replicas: usize,
}

/// Monte Carlo mean of `rho(X_1, Y_1)` over `m` independent one-step couplings
/// from a neighbouring pair. Replica `r` uses stream `(seed, r)`.
pub fn empirical_mean_step_distance(
    glauber: &Glauber,
    sigma: &SpinConfiguration,
    tau: &SpinConfiguration,
    m: usize,
    seed: u64,
) -> Result<MeanDistanceEstimate, DynamicsError> {
    if sigma.n() != glauber.n() || tau.n() != glauber.n() {
        return Err(DynamicsError::Precondition("configuration size does not match n".into()));
    }
    if sigma.hamming(tau) != 1 {
        return Err(DynamicsError::Precondition(format!(
            "expected neighbouring configurations, distance is {}",
            sigma.hamming(tau)
        )));
    }
    if m < MIN_MEAN_DISTANCE_REPLICAS {
        return Err(DynamicsError::Precondition(format!(
            "need at least {MIN_MEAN_DISTANCE_REPLICAS} replicas, got {m}"
        )));
    }
    // integer tallies keep the result independent of the reduction order
    let (sum, sum_sq) = (0..m as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, r);
            let rho = (1 + glauber.propose_coupled(sigma, tau, &mut rng).rho_delta) as u64;
            (rho, rho * rho)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let mf = m as f64;
    let mean = sum as f64 / mf;
    let var = (sum_sq as f64 - mf * mean * mean) / (mf - 1.0);
    Ok(MeanDistanceEstimate { estimate: mean, stderr: (var.max(0.0) / mf).sqrt(), replicas: m })
}

/// Draws configurations from the Gibbs law.
///
/// Up to [`MAX_EXACT_N`] sites the counts are sampled exactly from the lumped
/// stationary law and placed by a uniform permutation, which is exact because
/// the law is exchangeable. Beyond that a burn-in of `100 n ln n` Glauber steps
/// from the all-zero configuration is used and [`Self::is_exact`] is false.
#[derive(Debug, Clone)]
pub struct StationarySampler {
    glauber: Glauber,
    exact: Option<(StateSpace, Vec<f64>)>,
}

impl StationarySampler {
    pub fn new(params: &ModelParams<f64>) -> Result<Self, DynamicsError> {
        let glauber = Glauber::new(params);
        let exact = if params.n <= MAX_EXACT_N {
            let pi = gibbs_stationary(params)?;
            let mut acc = 0.0;
            let cdf = pi
                .probs
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect();
            Some((StateSpace::new(params.n)?, cdf))
        } else {
            None
        };
        Ok(Self { glauber, exact })
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn glauber(&self) -> &Glauber {
        &self.glauber
    }

    pub fn burn_in_steps(&self) -> u64 {
        let n = self.glauber.n() as f64;
        (100.0 * n * n.ln()).ceil() as u64
    }

    pub fn sample(&self, rng: &mut RngStream) -> SpinConfiguration {
        let n = self.glauber.n();
        match &self.exact {
            Some((space, cdf)) => {
                let u = rng.uniform() * cdf[cdf.len() - 1];
                let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                let s = space.state(i);
                SpinConfiguration::shuffled_from_counts(n, s.n_minus, s.n_plus, rng).expect("valid lumped state")
            }
            None => {
                let mut x = SpinConfiguration::all_zero(n);
                for _ in 0..self.burn_in_steps() {
                    self.glauber.step(&mut x, rng);
                }
                x
            }
        }
    }
}

/// Wilson score interval for `k` successes in `m` trials.
pub fn wilson_interval(k: usize, m: usize, z: f64) -> (f64, f64) {
    if m == 0 {
        return (0.0, 1.0);
    }
    let mf = m as f64;
    let p = k as f64 / mf;
    let z2 = z * z;
    let denom = 1.0 + z2 / mf;
    let centre = (p + z2 / (2.0 * mf)) / denom;
    let half = z * (p * (1.0 - p) / mf + z2 / (4.0 * mf * mf)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == m { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvUpperPoint {
    pub t: u64,
    /// Fraction of replicas with `X_t != Y_t`.
    pub p_hat: f64,
    /// Binomial standard error of `p_hat`.
    pub sigma: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TvUpperReport {
    pub replicas: usize,
    pub exact_stationary: bool,
    pub points: Vec<TvUpperPoint>,
}

/// Coalescence times of `replicas` couplings started from `x0` and a fresh
/// stationary sample. Replica `r` uses stream `(seed, r)` for both the sample
/// and the coupled run; results are in replica order.
pub fn coupling_times_from_stationary(
    sampler: &StationarySampler,
    x0: &SpinConfiguration,
    replicas: usize,
    cap: u64,
    seed: u64,
) -> Result<Vec<Option<u64>>, DynamicsError> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, r);
            let mut y = sampler.sample(&mut rng);
            let mut x = x0.clone();
            coalescence_time(sampler.glauber(), &mut x, &mut y, cap, &mut rng)
        })
        .collect()
}

/// Estimates `P(X_t != Y_t)` on `t_grid` with `Y_0` stationary, an upper bound
/// on `d(t)` from `x0` up to the stationary-sampling error.
pub fn tv_upper_via_coupling(
    sampler: &StationarySampler,
    x0: &SpinConfiguration,
    replicas: usize,
    t_grid: &[u64],
    seed: u64,
) -> Result<TvUpperReport, DynamicsError> {
    if replicas < MIN_TV_REPLICAS {
        return Err(DynamicsError::Precondition(format!("need at least {MIN_TV_REPLICAS} replicas, got {replicas}")));
    }
    let horizon = t_grid.iter().copied().max().unwrap_or(0).max(1);
    let times = coupling_times_from_stationary(sampler, x0, replicas, horizon, seed)?;
    let points = t_grid
        .iter()
        .map(|&t| {
            let apart = times.iter().filter(|c| c.is_none_or(|tc| tc > t)).count();
            let p_hat = apart as f64 / replicas as f64;
            let (ci_lo, ci_hi) = wilson_interval(apart, replicas, Z_95);
            TvUpperPoint { t, p_hat, sigma: (p_hat * (1.0 - p_hat) / replicas as f64).sqrt(), ci_lo, ci_hi }
        })
        .collect();
    Ok(TvUpperReport { replicas, exact_stationary: sampler.is_exact(), points })
}

/// Aggregate one-step contraction from near-zero-magnetisation starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregateContraction {
    pub eps: f64,
    /// Stationary samples with `|S/n| < eps` that were used.
    pub accepted: usize,
    pub drawn: usize,
    /// Mean and maximum of `E[rho(X_1, Y_1)] / rho(sigma, tau)` over accepted samples.
    pub mean_ratio: f64,
    pub max_ratio: f64,
    /// `n (1 - max_ratio)`: positive when every pair contracts.
    pub min_rate: f64,
    pub exact_stationary: bool,
}

/// Draws `samples` stationary configurations `sigma` (stream `(seed, r)`),
/// keeps those with `|S(sigma)/n| < eps`, and evaluates the exact one-step
/// contraction ratio of the coupling from `(sigma, tau)`.
pub fn aggregate_contraction(
    sampler: &StationarySampler,
    tau: &SpinConfiguration,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<AggregateContraction, DynamicsError> {
    let g = sampler.glauber();
    if tau.n() != g.n() {
        return Err(DynamicsError::Precondition("configuration size does not match n".into()));
    }
    if !(eps > 0.0) || samples == 0 {
        return Err(DynamicsError::Precondition("need eps > 0 and at least one sample".into()));
    }
    let n = g.n() as f64;
    let ratios: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .filter_map(|r| {
            let sigma = sampler.sample(&mut RngStream::new(seed, r));
            let rho = sigma.hamming(tau);
            ((sigma.total_spin() as f64 / n).abs() < eps && rho > 0)
                .then(|| g.exact_mean_step_distance(&sigma, tau) / rho as f64)
        })
        .collect();
    if ratios.is_empty() {
        return Err(DynamicsError::Precondition(format!("no sample fell inside |S/n| < {eps}")));
    }
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(AggregateContraction {
        eps,
        accepted: ratios.len(),
        drawn: samples,
        mean_ratio: ratios.iter().sum::<f64>() / ratios.len() as f64,
        max_ratio,
        min_rate: n * (1.0 - max_ratio),
        exact_stationary: sampler.is_exact(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactchain::ExactChain;

    fn params(n: usize, beta: f64, k: f64) -> ModelParams<f64> {
        ModelParams::new(n, beta, k).unwrap()
    }

    #[test]
    fn neighbor_pairs_have_requested_shape() {
        for &s in &[0i64, 50, 100, -70] {
            let (sigma, tau) = neighbor_pair(200, s).unwrap();
            assert_eq!(sigma.total_spin(), s);
            assert_eq!(tau.total_spin(), s + 1);
            assert_eq!(sigma.hamming(&tau), 1);
            assert!(sigma.le(&tau));
        }
        assert!(neighbor_pair(10, 10).is_err());
    }

    #[test]
    fn exact_mean_distance_is_close_to_leading_order() {
        for &(beta, k) in &[(1.0, 0.8), (2.0, 0.6), (3.0, 0.9)] {
            for &n in &[100usize, 200, 400] {
                let p = params(n, beta, k);
                let g = Glauber::new(&p);
                for &s in &[0, n as i64 / 4, n as i64 / 2] {
                    let (sigma, tau) = neighbor_pair(n, s).unwrap();
                    let exact = g.exact_mean_step_distance(&sigma, &tau);
                    let leading = leading_order_mean_distance(&p, s, s + 1);
                    let nn = (n * n) as f64;
                    assert!((exact - leading).abs() * nn < 5.0, "remainder {} at n={n}", (exact - leading).abs() * nn);
                }
            }
        }
    }

    #[test]
    fn empirical_mean_distance_agrees_with_exact() {
        let p = params(100, 1.0, 0.8);
        let g = Glauber::new(&p);
        let (sigma, tau) = neighbor_pair(100, 25).unwrap();
        let est = empirical_mean_step_distance(&g, &sigma, &tau, 50_000, 17).unwrap();
        let exact = g.exact_mean_step_distance(&sigma, &tau);
        assert!((est.estimate - exact).abs() < 4.0 * est.stderr, "{est:?} vs {exact}");
        let again = empirical_mean_step_distance(&g, &sigma, &tau, 50_000, 17).unwrap();
        assert_eq!(est, again);
        assert!(empirical_mean_step_distance(&g, &sigma, &sigma, 50_000, 17).is_err());
        assert!(empirical_mean_step_distance(&g, &sigma, &tau, 100, 17).is_err());
    }

    #[test]
    fn stationary_sampler_matches_gibbs_counts() {
        let p = params(30, 1.0, 0.8);
        let sampler = StationarySampler::new(&p).unwrap();
        assert!(sampler.is_exact());
        let chain = ExactChain::new(&p).unwrap();
        let space = chain.matrix.space().clone();
        let m = 100_000;
        let mut hist = vec![0usize; space.len()];
        for r in 0..m {
            let c = sampler.sample(&mut RngStream::new(8, r));
            c.check_caches().unwrap();
            hist[space.index(&c.lumped())] += 1;
        }
        let tv: f64 =
            0.5 * hist.iter().zip(&chain.stationary.probs).map(|(&h, &p)| (h as f64 / m as f64 - p).abs()).sum::<f64>();
        assert!(tv < 0.02, "tv = {tv}");
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let (lo, hi) = wilson_interval(30, 100, Z_95);
        assert!(lo < 0.3 && 0.3 < hi);
        assert!((lo - 0.2189).abs() < 1e-3 && (hi - 0.3958).abs() < 1e-3);
        let (lo, hi) = wilson_interval(0, 100, Z_95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
    }

    #[test]
    fn tv_upper_is_monotone_and_starts_near_one() {
        let p = params(40, 1.0, 0.8);
        let sampler = StationarySampler::new(&p).unwrap();
        let x0 = SpinConfiguration::all_plus(40);
        let grid = [0, 100, 400, 1_600, 6_400];
        let rep = tv_upper_via_coupling(&sampler, &x0, 400, &grid, 3).unwrap();
        assert!(rep.exact_stationary);
        assert!(rep.points[0].p_hat > 0.99);
        for w in rep.points.windows(2) {
            assert!(w[1].p_hat <= w[0].p_hat);
        }
        assert!(rep.points[4].p_hat < 0.05);
        assert!(tv_upper_via_coupling(&sampler, &x0, 10, &grid, 3).is_err());
    }

    #[test]
    fn aggregate_contraction_near_zero_below_k1() {
        // at n = 200 a few pairs still expand; the onset is finite-n
        let p = params(500, 2.0, 0.9 * 1.0151125540071309);
        let sampler = StationarySampler::new(&p).unwrap();
        let tau = SpinConfiguration::all_plus(500);
        let agg = aggregate_contraction(&sampler, &tau, 0.1, 200, 5).unwrap();
        assert!(agg.accepted > 150);
        assert!(agg.max_ratio < 1.0, "{agg:?}");
    }
}
