//! Bottleneck ratios of magnetisation cuts `A = { S/n > z' }`.

use serde::Serialize;

use super::mixing::ExactChain;
use super::ChainError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BottleneckReport<T> {
    pub n: usize,
    pub beta: T,
    pub k: T,
    /// Requested cut before rounding to an attainable `S/n`.
    pub zprime_requested: T,
    /// Cut actually used, `S'/n`.
    pub zprime: T,
    /// `Phi(A) = Q(A, A^c) / pi(A)` for the requested cut.
    pub phi: T,
    /// Minimum of `Phi` over all cuts `z' >= 0` with `pi(A) <= 1/2`.
    pub phi_star: T,
    /// Cut attaining `phi_star`.
    pub zprime_star: T,
    /// `1 / (4 phi_star)`.
    pub tmix_lower: T,
}

impl<T: Scalar> BottleneckReport<T> {
    pub const CSV_HEADER: &'static str = "n,beta,k,zprime,phi,phi_star,tmix_lower";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.n, self.beta, self.k, self.zprime, self.phi, self.phi_star, self.tmix_lower
        )
    }
}

/// Flow and mass of one cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutFlow<T> {
    /// Integer cut `S'`: `A = { S > S' }`.
    pub cut: i64,
    /// `Q(A, A^c)`.
    pub flow: T,
    /// `pi(A)`.
    pub mass: T,
}

impl<T: Scalar> CutFlow<T> {
    pub fn ratio(&self) -> T {
        self.flow / self.mass
    }
}

impl<T: Scalar> ExactChain<T> {
    /// `Q(A, A^c)` and `pi(A)` for every cut `S' = 0, ..., n - 1`.
    ///
    /// One step moves `S` by at most 2, so a transition `i -> j` with `S_j < S_i`
    /// crosses exactly the cuts `S_j <= S' < S_i`: only states with
    /// `S in (S', S' + 2]` contribute to the flow out of `A`.
    pub fn cut_flows(&self) -> Vec<CutFlow<T>> {
        let n = self.params().n as i64;
        let space = self.matrix.space();
        let mut flow = vec![T::zero(); n as usize];
        let mut by_mag = vec![T::zero(); 2 * n as usize + 1];
        for i in 0..space.len() {
            let s_i = space.state(i).magnetization();
            let pi_i = self.stationary.probs[i];
            by_mag[(s_i + n) as usize] = by_mag[(s_i + n) as usize] + pi_i;
            if s_i <= 0 {
                continue;
            }
            for (j, p) in self.matrix.row(i) {
                let s_j = space.state(j).magnetization();
                debug_assert!((s_i - s_j).abs() <= 2);
                for cut in s_j.max(0)..s_i {
                    flow[cut as usize] = flow[cut as usize] + pi_i * p;
                }
            }
        }
        // pi(S > S') by a tail sum from the top
        let mut tail = T::zero();
        let mut mass = vec![T::zero(); n as usize];
        for cut in (0..n).rev() {
            tail = tail + by_mag[(cut + 1 + n) as usize];
            mass[cut as usize] = tail;
        }
        (0..n)
            .map(|cut| CutFlow {
                cut,
                flow: flow[cut as usize],
                mass: mass[cut as usize],
            })
            .collect()
    }

    /// Bottleneck report for the cut nearest to `zprime`, with `Phi_*` minimised
    /// over all magnetisation cuts `z' >= 0` whose set has stationary mass at most 1/2.
    pub fn bottleneck(&self, zprime: T) -> Result<BottleneckReport<T>, ChainError> {
        if !(zprime >= T::zero() && zprime < T::one()) {
            return Err(ChainError::Domain(format!("cut z' must lie in [0, 1), got {zprime}")));
        }
        let n = self.params().n;
        let n_t = T::from_count(n);
        let flows = self.cut_flows();
        let cut = (zprime * n_t).round().to_i64().unwrap_or(0).clamp(0, n as i64 - 1);
        let chosen = flows[cut as usize];
        let half = T::lit(0.5);
        let best = flows
            .iter()
            .filter(|f| f.mass > T::zero() && f.mass <= half)
            .min_by(|a, b| a.ratio().partial_cmp(&b.ratio()).expect("finite ratios"))
            .copied()
            .ok_or_else(|| ChainError::Domain("no admissible cut".into()))?;
        let phi_star = best.ratio();
        Ok(BottleneckReport {
            n,
            beta: self.params().beta,
            k: self.params().k,
            zprime_requested: zprime,
            zprime: T::from_spin(cut) / n_t,
            phi: chosen.ratio(),
            phi_star,
            zprime_star: T::from_spin(best.cut) / n_t,
            tmix_lower: T::one() / (T::lit(4.0) * phi_star),
        })
    }
}

/// Builds the chain and computes the bottleneck report.
pub fn bottleneck<T: Scalar>(
    params: &crate::params::ModelParams<T>,
    zprime: T,
) -> Result<BottleneckReport<T>, ChainError> {
    ExactChain::new(params)?.bottleneck(zprime)
}

#[cfg(test)]
mod tests {
    use super::*;
    type ModelParams = crate::params::ModelParams<f64>;

    #[test]
    fn cut_flows_match_direct_sum() {
        let params = ModelParams::new(15, 1.0, 1.6).unwrap();
        let chain = ExactChain::new(&params).unwrap();
        let space = chain.matrix.space().clone();
        for f in chain.cut_flows() {
            let mut flow = 0.0;
            let mut mass = 0.0;
            for i in 0..space.len() {
                if space.state(i).magnetization() > f.cut {
                    mass += chain.stationary.probs[i];
                    for (j, p) in chain.matrix.row(i) {
                        if space.state(j).magnetization() <= f.cut {
                            flow += chain.stationary.probs[i] * p;
                        }
                    }
                }
            }
            assert!((flow - f.flow).abs() < 1e-15);
            assert!((mass - f.mass).abs() < 1e-14);
            assert!(f.mass <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn report_is_consistent() {
        let params = ModelParams::new(40, 1.0, 1.6).unwrap();
        let r = bottleneck(&params, 0.3).unwrap();
        assert_eq!(r.zprime, 12.0 / 40.0);
        assert!(r.phi_star <= r.phi);
        assert!((r.tmix_lower * r.phi_star - 0.25).abs() < 1e-15);
        assert!(bottleneck(&params, 1.0).is_err());
    }

    #[test]
    fn two_phase_bottleneck_at_origin() {
        let params = ModelParams::new(60, 1.0, 1.6).unwrap();
        let r = bottleneck(&params, 0.0).unwrap();
        assert_eq!(r.zprime_star, 0.0);
        assert!(r.phi_star < 1e-2);
    }
}
