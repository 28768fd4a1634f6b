use serde::Serialize;

use super::{update_probs, DynamicsError, RngStream, SpinConfiguration};
use crate::params::ModelParams;

/// Largest step cap accepted by [`coupling_time`].
pub const MAX_CAP: u64 = 1_000_000_000;

/// Heat-bath Glauber kernel with the update thresholds tabulated for every
/// neighbour sum `S~ in [-(n - 1), n - 1]`.
#[derive(Debug, Clone)]
pub struct Glauber {
    params: ModelParams<f64>,
    thresholds: Vec<(f64, f64)>,
}

/// Outcome of one coupled step: the chosen site and both new spins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoupledMove {
    pub site: usize,
    pub x_new: i8,
    pub y_new: i8,
    /// Change of the Hamming distance, in `{-1, 0, 1}`.
    pub rho_delta: i64,
}

impl Glauber {
    pub fn new(params: &ModelParams<f64>) -> Self {
        let n = params.n as i64;
        let thresholds = (-(n - 1)..=(n - 1)).map(|s| update_probs(params, s).thresholds()).collect();
        Self { params: *params, thresholds }
    }

    pub fn params(&self) -> &ModelParams<f64> {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    /// `(p_minus, p_minus + p_zero)` at neighbour sum `s_tilde`.
    #[inline]
    pub fn thresholds(&self, s_tilde: i64) -> (f64, f64) {
        self.thresholds[(s_tilde + self.params.n as i64 - 1) as usize]
    }

    /// Threshold rule in the fixed order `[-1 | 0 | +1]`.
    #[inline]
    pub fn select(&self, s_tilde: i64, u: f64) -> i8 {
        let (lo, hi) = self.thresholds(s_tilde);
        if u < lo {
            -1
        } else if u < hi {
            0
        } else {
            1
        }
    }

    /// Draws a site then a uniform and returns the site and the resampled spin.
    #[inline]
    pub fn propose(&self, x: &SpinConfiguration, rng: &mut RngStream) -> (usize, i8) {
        let k = rng.index(x.n());
        let u = rng.uniform();
        (k, self.select(x.s_tilde(k), u))
    }

    /// One Glauber step in place.
    #[inline]
    pub fn step(&self, x: &mut SpinConfiguration, rng: &mut RngStream) -> (usize, i8) {
        let (k, s) = self.propose(x, rng);
        x.set(k, s);
        (k, s)
    }

    /// Same site and same uniform for both chains, each with its own thresholds.
    #[inline]
    pub fn propose_coupled(&self, x: &SpinConfiguration, y: &SpinConfiguration, rng: &mut RngStream) -> CoupledMove {
        debug_assert_eq!(x.n(), y.n());
        let k = rng.index(x.n());
        let u = rng.uniform();
        let x_new = self.select(x.s_tilde(k), u);
        let y_new = self.select(y.s_tilde(k), u);
        let before = (x.spin(k) != y.spin(k)) as i64;
        let after = (x_new != y_new) as i64;
        CoupledMove { site: k, x_new, y_new, rho_delta: after - before }
    }

    #[inline]
    pub fn coupled_step(&self, x: &mut SpinConfiguration, y: &mut SpinConfiguration, rng: &mut RngStream) -> CoupledMove {
        let mv = self.propose_coupled(x, y, rng);
        x.set(mv.site, mv.x_new);
        y.set(mv.site, mv.y_new);
        mv
    }

    /// Probability that one coupled step leaves different spins at site `k`.
    ///
    /// Both thresholds move in the same direction with `S~`, so the two
    /// selections disagree on a set of `u` of measure `|a_x - a_y| + |b_x - b_y|`.
    pub fn disagreement_prob(&self, x: &SpinConfiguration, y: &SpinConfiguration, k: usize) -> f64 {
        let (ax, bx) = self.thresholds(x.s_tilde(k));
        let (ay, by) = self.thresholds(y.s_tilde(k));
        (ax - ay).abs() + (bx - by).abs()
    }

    /// Exact `E[rho(X_1, Y_1)]` after one coupled step from `(x, y)`.
    pub fn exact_mean_step_distance(&self, x: &SpinConfiguration, y: &SpinConfiguration) -> f64 {
        assert_eq!(x.n(), y.n(), "configurations of different size");
        let n = x.n();
        // sites with equal (x_k, y_k) share both neighbour sums
        let mut groups = [[0usize; 3]; 3];
        let mut rep = [[usize::MAX; 3]; 3];
        for k in 0..n {
            let (a, b) = ((x.spin(k) + 1) as usize, (y.spin(k) + 1) as usize);
            groups[a][b] += 1;
            rep[a][b] = k;
        }
        let rho = x.hamming(y) as f64;
        let mut change = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                if groups[a][b] == 0 {
                    continue;
                }
                let diff_now = (a != b) as u8 as f64;
                change += groups[a][b] as f64 * (self.disagreement_prob(x, y, rep[a][b]) - diff_now);
            }
        }
        rho + change / n as f64
    }
}

/// Snapshot of a coupled pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CouplingRecord {
    pub t: u64,
    pub rho: usize,
    pub sx: i64,
    pub sy: i64,
    pub coalesced_at: Option<u64>,
}

/// Trajectory of a coupled run, sampled every `n` steps plus the final step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingRun {
    pub seed: u64,
    pub stream_id: u64,
    pub cap: u64,
    pub coalesced_at: Option<u64>,
    pub records: Vec<CouplingRecord>,
}

impl CouplingRun {
    pub const CSV_HEADER: &'static str = "t,rho,sx,sy";

    pub fn csv_rows(&self) -> impl Iterator<Item = String> + '_ {
        self.records.iter().map(|r| format!("{},{},{},{}", r.t, r.rho, r.sx, r.sy))
    }
}

fn check_cap(cap: u64) -> Result<(), DynamicsError> {
    if cap == 0 || cap > MAX_CAP {
        return Err(DynamicsError::Precondition(format!("step cap must be in 1..={MAX_CAP}, got {cap}")));
    }
    Ok(())
}

/// Runs the coupling until the chains meet or `cap` steps have been taken.
/// Returns the coalescence step, or `None` at the cap.
pub fn coalescence_time(
    glauber: &Glauber,
    x: &mut SpinConfiguration,
    y: &mut SpinConfiguration,
    cap: u64,
    rng: &mut RngStream,
) -> Result<Option<u64>, DynamicsError> {
    check_cap(cap)?;
    check_pair(glauber, x, y)?;
    let mut rho = x.hamming(y) as i64;
    if rho == 0 {
        return Ok(Some(0));
    }
    for t in 1..=cap {
        rho += glauber.coupled_step(x, y, rng).rho_delta;
        if rho == 0 {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Coupled run from `(x0, y0)` recording the trajectory every `n` steps.
pub fn coupling_time(
    glauber: &Glauber,
    x0: &SpinConfiguration,
    y0: &SpinConfiguration,
    cap: u64,
    rng: &mut RngStream,
) -> Result<CouplingRun, DynamicsError> {
    check_cap(cap)?;
    check_pair(glauber, x0, y0)?;
    let (seed, stream_id) = (rng.seed(), rng.stream_id());
    let (mut x, mut y) = (x0.clone(), y0.clone());
    let mut rho = x.hamming(&y) as i64;
    let every = glauber.n() as u64;
    let snap = |t, rho: i64, x: &SpinConfiguration, y: &SpinConfiguration| CouplingRecord {
        t,
        rho: rho as usize,
        sx: x.total_spin(),
        sy: y.total_spin(),
        coalesced_at: (rho == 0).then_some(t),
    };
    let mut records = vec![snap(0, rho, &x, &y)];
    let mut coalesced_at = (rho == 0).then_some(0);
    let mut t = 0;
    while coalesced_at.is_none() && t < cap {
        t += 1;
        rho += glauber.coupled_step(&mut x, &mut y, rng).rho_delta;
        if rho == 0 {
            coalesced_at = Some(t);
            records.push(snap(t, rho, &x, &y));
        } else if t % every == 0 || t == cap {
            records.push(snap(t, rho, &x, &y));
        }
    }
    Ok(CouplingRun { seed, stream_id, cap, coalesced_at, records })
}

fn check_pair(glauber: &Glauber, x: &SpinConfiguration, y: &SpinConfiguration) -> Result<(), DynamicsError> {
    if x.n() != glauber.n() || y.n() != glauber.n() {
        return Err(DynamicsError::Precondition(format!(
            "configuration sizes {} and {} do not match n = {}",
            x.n(),
            y.n(),
            glauber.n()
        )));
    }
    Ok(())
}
