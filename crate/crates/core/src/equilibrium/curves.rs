//! The critical curves `K_c^(2)`, `K_1`, `K_c^(1)` and the inflection point `w_c`.

use serde::Serialize;

use super::cgf::{cgf_d1, cgf_d2, cgf_d3, free_energy_unchecked};
use super::{beta_c, check_beta, EquilibriumError};
use crate::scalar::Scalar;

/// Second-order curve `K_c^(2)(beta) = 1 / (2 beta c_beta''(0)) = (e^beta + 2) / (4 beta)`,
/// defined for `0 < beta <= log 4`.
pub fn kc2<T: Scalar>(beta: T) -> Result<T, EquilibriumError> {
    check_beta(beta)?;
    if beta > beta_c() {
        return Err(EquilibriumError::Domain(format!(
            "K_c^(2) is only the transition curve for beta <= log 4 (beta = {beta})"
        )));
    }
    Ok((beta.exp() + T::lit(2.0)) / (T::lit(4.0) * beta))
}

/// `w_c(beta) = arccosh(e^beta / 2 - 4 e^-beta)`: where `c_beta'` turns from convex to concave.
pub fn wc<T: Scalar>(beta: T) -> Result<T, EquilibriumError> {
    check_beta(beta)?;
    let arg = beta.exp() / T::lit(2.0) - T::lit(4.0) * (-beta).exp();
    if beta < beta_c() {
        return Err(EquilibriumError::Domain(format!(
            "w_c needs e^beta/2 - 4e^-beta >= 1, got {arg} at beta = {beta}"
        )));
    }
    // at beta = log 4 the argument is 1 up to rounding
    Ok(arg.max(T::one()).acosh())
}

/// `c_beta'(x) / x` with its limit `c_beta''(0)` at the origin.
fn slope_ratio<T: Scalar>(beta: T, x: T) -> T {
    if x == T::zero() {
        cgf_d2(beta, T::zero())
    } else {
        cgf_d1(beta, x) / x
    }
}

/// Right end of the search interval for the maximiser of `c_beta'(x) / x`.
fn ratio_search_end<T: Scalar>(beta: T) -> T {
    T::lit(2.0) * beta + T::lit(40.0)
}

/// `sup_{x > 0} c_beta'(x) / x` and its maximiser, located by golden-section
/// search. For `beta <= log 4` the ratio is decreasing and the supremum is the
/// limit `c_beta''(0)` at `x = 0`.
pub fn slope_ratio_sup<T: Scalar>(beta: T, tol: T) -> Result<(T, T), EquilibriumError> {
    check_beta(beta)?;
    if beta <= beta_c() {
        return Ok((T::zero(), cgf_d2(beta, T::zero())));
    }
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut a = T::zero();
    let mut b = ratio_search_end(beta);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = slope_ratio(beta, c);
    let mut fd = slope_ratio(beta, d);
    let x_tol = tol.max(T::epsilon().sqrt() * T::lit(4.0));
    for _ in 0..500 {
        if b - a <= x_tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = slope_ratio(beta, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = slope_ratio(beta, d);
        }
    }
    let x = (a + b) / T::lit(2.0);
    Ok((x, slope_ratio(beta, x)))
}

/// Solution of the tangency system `G'(z) = G''(z) = 0` that defines `K_1(beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct K1Solution<T> {
    pub k1: T,
    /// Positive magnetisation where `G_{beta,K_1}` has its inflection-tangency.
    pub z: T,
    /// `x = 2 beta K_1 z`, the maximiser of `c_beta'(x) / x`.
    pub x: T,
    /// `K_1` from the variational route `1 / (2 beta sup_x c_beta'(x)/x)`.
    pub k1_variational: T,
}

/// Metastable critical value `K_1(beta)` for `beta > log 4`.
pub fn k1<T: Scalar>(beta: T, tol: T) -> Result<T, EquilibriumError> {
    k1_solution(beta, tol).map(|s| s.k1)
}

/// Solves the tangency system. Eliminating `K = 1 / (2 beta c_beta''(x))` leaves
/// `g(x) = x c_beta''(x) - c_beta'(x) = 0`, which changes sign exactly once on
/// `(w_c, infinity)`; a damped Newton iteration with bisection fallback solves it.
/// The result must agree with the golden-section value of
/// `1 / (2 beta sup_x c_beta'(x)/x)` to `10 tol`.
pub fn k1_solution<T: Scalar>(beta: T, tol: T) -> Result<K1Solution<T>, EquilibriumError> {
    check_beta(beta)?;
    if beta <= beta_c() {
        return Err(EquilibriumError::Domain(format!(
            "K_1 is defined for beta > log 4 (beta = {beta})"
        )));
    }
    let g = |x: T| x * cgf_d2(beta, x) - cgf_d1(beta, x);
    let mut lo = wc(beta)?;
    let mut hi = ratio_search_end(beta);
    if lo == T::zero() {
        lo = T::epsilon().sqrt();
    }
    if !(g(lo) > T::zero() && g(hi) < T::zero()) {
        return Err(EquilibriumError::Solver {
            what: format!("tangency bracket for K_1 at beta = {beta}"),
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    let mut x = (lo + hi) / T::lit(2.0);
    let mut converged = false;
    for _ in 0..300 {
        let gx = g(x);
        if gx == T::zero() {
            converged = true;
            break;
        }
        if gx > T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        // g'(x) = x c'''(x)
        let dg = x * cgf_d3(beta, x);
        let mut next = (lo + hi) / T::lit(2.0);
        if dg != T::zero() {
            let step = gx / dg;
            let mut damp = T::one();
            while damp > T::lit(1e-3) {
                let cand = x - damp * step;
                if cand > lo && cand < hi {
                    next = cand;
                    break;
                }
                damp = damp / T::lit(2.0);
            }
        }
        let done = (next - x).abs() <= T::lit(4.0) * T::epsilon() * x || hi - lo <= T::lit(4.0) * T::epsilon() * hi;
        x = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(EquilibriumError::Solver {
            what: format!("tangency Newton for K_1 at beta = {beta}"),
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    let two_beta = T::lit(2.0) * beta;
    let k1 = T::one() / (two_beta * cgf_d2(beta, x));
    let (_, sup) = slope_ratio_sup(beta, tol)?;
    let k1_variational = T::one() / (two_beta * sup);
    if (k1 - k1_variational).abs() > T::lit(10.0) * tol * k1.max(T::one()) {
        return Err(EquilibriumError::Solver {
            what: format!(
                "K_1 routes disagree at beta = {beta}: tangency {k1}, variational {k1_variational}"
            ),
            lo: k1.min(k1_variational).to_f64_lossy(),
            hi: k1.max(k1_variational).to_f64_lossy(),
        });
    }
    Ok(K1Solution {
        k1,
        z: x / (two_beta * k1),
        x,
        k1_variational,
    })
}

/// Positive local minimiser of `G_{beta,K}` for `K >= K_1(beta)`, via the unique
/// root of `c_beta'(x)/x = 1/(2 beta K)` to the right of the ratio's maximiser.
fn metastable_minimizer<T: Scalar>(beta: T, k: T, x_peak: T) -> T {
    let target = T::one() / (T::lit(2.0) * beta * k);
    let mut lo = x_peak;
    let mut hi = x_peak + T::lit(4.0) * beta * k;
    for _ in 0..400 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope_ratio(beta, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = (lo + hi) / T::lit(2.0);
    x / (T::lit(2.0) * beta * k)
}

/// First-order curve `K_c^(1)(beta)` for `beta > log 4`: the `K > K_1` at which the
/// metastable minimum `z_loc(K)` is exactly as deep as the minimum at the origin,
/// `G_{beta,K}(z_loc) = G_{beta,K}(0) = 0`. Bisection on `K` over `[K_1, K_1 + 1]`,
/// widening the upper end until the depth changes sign.
pub fn kc1<T: Scalar>(beta: T, tol: T) -> Result<T, EquilibriumError> {
    let sol = k1_solution(beta, tol)?;
    let depth = |k: T| free_energy_unchecked(beta, k, metastable_minimizer(beta, k, sol.x));
    let mut lo = sol.k1;
    let mut hi = sol.k1 + T::one();
    if !(depth(lo) > T::zero()) {
        return Err(EquilibriumError::Solver {
            what: format!("metastable well not above the origin at K_1, beta = {beta}"),
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    let mut widen = 0;
    while depth(hi) >= T::zero() {
        lo = hi;
        hi = hi + T::one();
        widen += 1;
        if widen > 64 {
            return Err(EquilibriumError::Solver {
                what: format!("no sign change of the well depth for K_c^(1) at beta = {beta}"),
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
            });
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if depth(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / T::lit(2.0))
}
