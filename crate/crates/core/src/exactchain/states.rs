use serde::Serialize;

use super::ChainError;
use crate::params::MAX_EXACT_N;

/// Spin counts `(n_minus, n_plus)` of a configuration on `n` sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LumpedState {
    pub n_minus: usize,
    pub n_plus: usize,
    pub n: usize,
}

impl LumpedState {
    pub fn new(n: usize, n_minus: usize, n_plus: usize) -> Result<Self, ChainError> {
        if n_minus + n_plus > n {
            return Err(ChainError::InvalidState { n, n_minus, n_plus });
        }
        Ok(Self { n_minus, n_plus, n })
    }

    pub fn all_plus(n: usize) -> Self {
        Self { n_minus: 0, n_plus: n, n }
    }

    pub fn all_minus(n: usize) -> Self {
        Self { n_minus: n, n_plus: 0, n }
    }

    pub fn all_zero(n: usize) -> Self {
        Self { n_minus: 0, n_plus: 0, n }
    }

    pub fn n_zero(&self) -> usize {
        self.n - self.n_minus - self.n_plus
    }

    /// Total spin `S = n_plus - n_minus`.
    pub fn magnetization(&self) -> i64 {
        self.n_plus as i64 - self.n_minus as i64
    }

    /// Image under the global flip `spin -> -spin`.
    pub fn flipped(&self) -> Self {
        Self {
            n_minus: self.n_plus,
            n_plus: self.n_minus,
            n: self.n,
        }
    }
}

/// Canonical enumeration of the `(n+1)(n+2)/2` lumped states, lexicographic in
/// `(n_minus, n_plus)`, with constant-time index lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    n: usize,
}

impl StateSpace {
    pub fn new(n: usize) -> Result<Self, ChainError> {
        if n == 0 || n > MAX_EXACT_N {
            return Err(ChainError::Size { n, max: MAX_EXACT_N });
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        (self.n + 1) * (self.n + 2) / 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    // first index with the given n_minus
    #[inline]
    fn offset(&self, n_minus: usize) -> usize {
        n_minus * (self.n + 1) - n_minus * n_minus.saturating_sub(1) / 2
    }

    #[inline]
    pub fn index(&self, s: &LumpedState) -> usize {
        debug_assert_eq!(s.n, self.n);
        self.offset(s.n_minus) + s.n_plus
    }

    #[inline]
    pub fn index_of(&self, n_minus: usize, n_plus: usize) -> usize {
        self.offset(n_minus) + n_plus
    }

    pub fn state(&self, index: usize) -> LumpedState {
        // largest m with offset(m) <= index
        let mut lo = 0;
        let mut hi = self.n;
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if self.offset(mid) <= index {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        LumpedState {
            n_minus: lo,
            n_plus: index - self.offset(lo),
            n: self.n,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = LumpedState> + '_ {
        let n = self.n;
        (0..=n).flat_map(move |m| (0..=n - m).map(move |p| LumpedState { n_minus: m, n_plus: p, n }))
    }
}

/// All lumped states for `n` sites in canonical order.
pub fn enumerate_states(n: usize) -> Result<Vec<LumpedState>, ChainError> {
    Ok(StateSpace::new(n)?.iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_enumerations() {
        let s = enumerate_states(1).unwrap();
        let pairs: Vec<_> = s.iter().map(|x| (x.n_minus, x.n_plus)).collect();
        assert_eq!(pairs, vec![(0, 0), (0, 1), (1, 0)]);
        assert_eq!(enumerate_states(2).unwrap().len(), 6);
        assert_eq!(enumerate_states(200).unwrap().len(), 20301);
        assert!(enumerate_states(0).is_err());
        assert!(enumerate_states(MAX_EXACT_N + 1).is_err());
    }

    #[test]
    fn index_is_a_bijection() {
        for n in [1, 2, 7, 60] {
            let space = StateSpace::new(n).unwrap();
            for (i, s) in space.iter().enumerate() {
                assert_eq!(space.index(&s), i);
                assert_eq!(space.state(i), s);
                assert!(s.n_zero() + s.n_minus + s.n_plus == n);
            }
            assert_eq!(space.iter().count(), space.len());
        }
    }

    #[test]
    fn state_validation() {
        assert!(LumpedState::new(3, 2, 2).is_err());
        let s = LumpedState::new(5, 1, 3).unwrap();
        assert_eq!(s.magnetization(), 2);
        assert_eq!(s.flipped().magnetization(), -2);
        assert_eq!(s.n_zero(), 1);
    }
}
