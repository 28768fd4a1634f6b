use rayon::prelude::*;

use super::gibbs::LumpedDistribution;
use super::states::{LumpedState, StateSpace};
use super::ChainError;
use crate::dynamics::update_probs;
use crate::params::ModelParams;
use crate::scalar::Scalar;

/// Glauber kernel of the lumped count chain in compressed sparse row form.
/// Each row has at most seven entries: the six `(old spin, new spin)` changes
/// plus the aggregated self-loop.
#[derive(Debug, Clone)]
pub struct TransitionMatrix<T> {
    pub params: ModelParams<T>,
    space: StateSpace,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
}

const SPINS: [i8; 3] = [-1, 0, 1];

fn count_of(s: &LumpedState, spin: i8) -> usize {
    match spin {
        -1 => s.n_minus,
        0 => s.n_zero(),
        _ => s.n_plus,
    }
}

/// Counts after one site changes from `from` to `to`.
fn moved(s: &LumpedState, from: i8, to: i8) -> (usize, usize) {
    let (mut m, mut p) = (s.n_minus, s.n_plus);
    match from {
        -1 => m -= 1,
        1 => p -= 1,
        _ => {}
    }
    match to {
        -1 => m += 1,
        1 => p += 1,
        _ => {}
    }
    (m, p)
}

/// One row of the lumped kernel: a uniformly chosen site holds spin `s` with
/// probability `n_s / n`; it is redrawn from the heat-bath law at `S~ = S - s`.
fn lumped_row<T: Scalar>(params: &ModelParams<T>, space: &StateSpace, s: &LumpedState) -> Vec<(u32, T)> {
    let n = T::from_count(params.n);
    let here = space.index(s) as u32;
    let mut row: Vec<(u32, T)> = Vec::with_capacity(7);
    // holding mass per current spin, combined as (-1, +1) then 0 so the row is
    // bit-exactly flip-equivariant
    let mut stay = [T::zero(); 3];
    for &old in &SPINS {
        let count = count_of(s, old);
        if count == 0 {
            continue;
        }
        let pick = T::from_count(count) / n;
        let law = update_probs(params, s.magnetization() - old as i64);
        for &new in &SPINS {
            let w = pick * law.prob(new);
            if new == old {
                stay[(old + 1) as usize] = w;
            } else {
                let (m, p) = moved(s, old, new);
                row.push((space.index_of(m, p) as u32, w));
            }
        }
    }
    row.push((here, (stay[0] + stay[2]) + stay[1]));
    row.sort_by_key(|e| e.0);
    row
}

impl<T: Scalar> TransitionMatrix<T> {
    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Stored entries of row `i` as `(column, probability)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().zip(&self.vals[r]).map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i).find(|&(c, _)| c == j).map_or(T::zero(), |(_, v)| v)
    }

    /// `out = mu P`, accumulated row by row in canonical order.
    pub fn apply_left(&self, mu: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|x| *x = T::zero());
        for (i, &w) in mu.iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            for (j, p) in self.row(i) {
                out[j] = out[j] + w * p;
            }
        }
    }

    /// `out = mu P` with Neumaier-compensated accumulation (about twice the working precision).
    pub fn apply_left_compensated(&self, mu: &[T], out: &mut [T], carry: &mut [T]) {
        out.iter_mut().for_each(|x| *x = T::zero());
        carry.iter_mut().for_each(|x| *x = T::zero());
        for (i, &w) in mu.iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            for (j, p) in self.row(i) {
                let term = w * p;
                let sum = out[j] + term;
                let lost = if out[j].abs() >= term.abs() {
                    (out[j] - sum) + term
                } else {
                    (term - sum) + out[j]
                };
                out[j] = sum;
                carry[j] = carry[j] + lost;
            }
        }
        for (o, c) in out.iter_mut().zip(carry.iter()) {
            *o = *o + *c;
        }
    }

    /// Largest violation of `pi_i P_ij = pi_j P_ji`, relative to the larger side.
    pub fn detailed_balance_error(&self, pi: &LumpedDistribution<T>) -> T {
        let mut worst = T::zero();
        for i in 0..self.len() {
            for (j, p) in self.row(i) {
                let a = pi.probs[i] * p;
                let b = pi.probs[j] * self.get(j, i);
                let scale = a.abs().max(b.abs());
                if scale > T::zero() {
                    worst = worst.max((a - b).abs() / scale);
                }
            }
        }
        worst
    }
}

/// Builds the lumped Glauber kernel; rows are computed in parallel.
pub fn glauber_lumped_matrix<T: Scalar>(params: &ModelParams<T>) -> Result<TransitionMatrix<T>, ChainError> {
    let space = StateSpace::new(params.n)?;
    let states: Vec<LumpedState> = space.iter().collect();
    let rows: Vec<Vec<(u32, T)>> = states.par_iter().map(|s| lumped_row(params, &space, s)).collect();
    let mut row_ptr = Vec::with_capacity(rows.len() + 1);
    let nnz: usize = rows.iter().map(Vec::len).sum();
    let mut cols = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    row_ptr.push(0);
    for row in rows {
        for (c, v) in row {
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    Ok(TransitionMatrix {
        params: *params,
        space,
        row_ptr,
        cols,
        vals,
    })
}
