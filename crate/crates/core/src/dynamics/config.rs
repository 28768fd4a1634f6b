use serde::Serialize;

use super::{DynamicsError, RngStream};
use crate::exactchain::LumpedState;

// Full O(n) revalidation after each update only runs in debug builds and only
// up to this size, so debug-built Monte Carlo at large n stays usable.
const DEBUG_REVALIDATE_MAX_N: usize = 512;

/// Spin configuration with cached total spin and counts `(n_minus, n_zero, n_plus)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SpinConfiguration {
    spins: Vec<i8>,
    total_spin: i64,
    counts: [usize; 3],
}

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self, DynamicsError> {
        if spins.is_empty() {
            return Err(DynamicsError::Precondition("configuration must have at least one site".into()));
        }
        let mut counts = [0usize; 3];
        for (i, &s) in spins.iter().enumerate() {
            if !(-1..=1).contains(&s) {
                return Err(DynamicsError::Precondition(format!("spin {s} at site {i} is not in {{-1, 0, 1}}")));
            }
            counts[(s + 1) as usize] += 1;
        }
        let total_spin = counts[2] as i64 - counts[0] as i64;
        Ok(Self { spins, total_spin, counts })
    }

    pub fn constant(n: usize, spin: i8) -> Result<Self, DynamicsError> {
        Self::new(vec![spin; n])
    }

    pub fn all_plus(n: usize) -> Self {
        Self::constant(n, 1).expect("n > 0")
    }

    pub fn all_minus(n: usize) -> Self {
        Self::constant(n, -1).expect("n > 0")
    }

    pub fn all_zero(n: usize) -> Self {
        Self::constant(n, 0).expect("n > 0")
    }

    /// Sites `0..n_minus` set to -1, then `n_zero` zeros, then +1.
    pub fn from_counts(n: usize, n_minus: usize, n_plus: usize) -> Result<Self, DynamicsError> {
        if n == 0 || n_minus + n_plus > n {
            return Err(DynamicsError::Precondition(format!(
                "counts n_minus = {n_minus}, n_plus = {n_plus} invalid for n = {n}"
            )));
        }
        let mut spins = vec![0i8; n];
        spins[..n_minus].fill(-1);
        spins[n - n_plus..].fill(1);
        Ok(Self { spins, total_spin: n_plus as i64 - n_minus as i64, counts: [n_minus, n - n_minus - n_plus, n_plus] })
    }

    /// Counts drawn as given, sites assigned by a uniform random permutation.
    pub fn shuffled_from_counts(
        n: usize,
        n_minus: usize,
        n_plus: usize,
        rng: &mut RngStream,
    ) -> Result<Self, DynamicsError> {
        let mut c = Self::from_counts(n, n_minus, n_plus)?;
        for i in (1..n).rev() {
            let j = rng.index(i + 1);
            c.spins.swap(i, j);
        }
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.spins.len()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    #[inline]
    pub fn spin(&self, i: usize) -> i8 {
        self.spins[i]
    }

    #[inline]
    pub fn total_spin(&self) -> i64 {
        self.total_spin
    }

    /// `(n_minus, n_zero, n_plus)`.
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.counts[0], self.counts[1], self.counts[2])
    }

    /// Total spin of all sites other than `i`.
    #[inline]
    pub fn s_tilde(&self, i: usize) -> i64 {
        self.total_spin - self.spins[i] as i64
    }

    pub fn lumped(&self) -> LumpedState {
        LumpedState { n_minus: self.counts[0], n_plus: self.counts[2], n: self.n() }
    }

    /// Sets site `i` to `s`, updating the caches in O(1).
    #[inline]
    pub fn set(&mut self, i: usize, s: i8) {
        debug_assert!((-1..=1).contains(&s));
        let old = self.spins[i];
        if old != s {
            self.spins[i] = s;
            self.total_spin += (s - old) as i64;
            self.counts[(old + 1) as usize] -= 1;
            self.counts[(s + 1) as usize] += 1;
        }
        if cfg!(debug_assertions) && self.n() <= DEBUG_REVALIDATE_MAX_N {
            self.check_caches().expect("cache drift after update");
        }
    }

    /// Recomputes both caches from the spins and compares.
    pub fn check_caches(&self) -> Result<(), DynamicsError> {
        let fresh = Self::new(self.spins.clone())?;
        if fresh.total_spin != self.total_spin || fresh.counts != self.counts {
            return Err(DynamicsError::Precondition(format!(
                "cached total {} / counts {:?} disagree with spins ({} / {:?})",
                self.total_spin, self.counts, fresh.total_spin, fresh.counts
            )));
        }
        Ok(())
    }

    /// Hamming distance, the path metric on configurations.
    pub fn hamming(&self, other: &Self) -> usize {
        assert_eq!(self.n(), other.n(), "configurations of different size");
        self.spins.iter().zip(&other.spins).filter(|(a, b)| a != b).count()
    }

    /// Coordinatewise `self <= other`.
    pub fn le(&self, other: &Self) -> bool {
        self.n() == other.n() && self.spins.iter().zip(&other.spins).all(|(a, b)| a <= b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caches_follow_updates() {
        let mut c = SpinConfiguration::from_counts(10, 3, 4).unwrap();
        assert_eq!(c.total_spin(), 1);
        assert_eq!(c.counts(), (3, 3, 4));
        c.set(0, 1);
        c.set(5, -1);
        c.set(9, 1);
        assert_eq!(c.total_spin(), 2);
        assert_eq!(c.counts(), (3, 2, 5));
        assert_eq!(c.s_tilde(0), 1);
        c.check_caches().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SpinConfiguration::new(vec![]).is_err());
        assert!(SpinConfiguration::new(vec![0, 2]).is_err());
        assert!(SpinConfiguration::from_counts(5, 3, 3).is_err());
    }

    #[test]
    fn shuffle_keeps_counts() {
        let mut rng = RngStream::new(3, 0);
        let c = SpinConfiguration::shuffled_from_counts(100, 20, 45, &mut rng).unwrap();
        c.check_caches().unwrap();
        assert_eq!(c.counts(), (20, 35, 45));
        assert_ne!(c, SpinConfiguration::from_counts(100, 20, 45).unwrap());
    }

    #[test]
    fn order_and_distance() {
        let a = SpinConfiguration::new(vec![-1, 0, 1]).unwrap();
        let b = SpinConfiguration::new(vec![0, 0, 1]).unwrap();
        assert!(a.le(&b) && !b.le(&a));
        assert_eq!(a.hamming(&b), 1);
        assert_eq!(a.lumped(), LumpedState { n_minus: 1, n_plus: 1, n: 3 });
    }
}
