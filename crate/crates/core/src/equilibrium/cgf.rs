//! The single-site cumulant generating function `c_beta`, its derivatives, its
//! Legendre-Fenchel transform `J_beta`, and the free energy functional `G`.
//!
//! Everything is written in terms of the tilted single-site law on
//! `{-1, 0, +1}` with unnormalised weights `e^{t-beta}`, `1`, `e^{-t-beta}`.
//! Exponents are shifted by their maximum before exponentiating, so the
//! functions stay finite for `|t|` and `beta` well past 700.

use super::{check_beta, check_finite, EquilibriumError};
use crate::scalar::Scalar;

/// Probabilities `(p_minus, p_zero, p_plus)` of the single-site law tilted by `t`.
#[inline]
pub(crate) fn tilted_probs<T: Scalar>(beta: T, t: T) -> (T, T, T) {
    let x = t.abs();
    let shift = (x - beta).max(T::zero());
    let q_far = (x - beta - shift).exp();
    let q_zero = (-shift).exp();
    let q_near = (-x - beta - shift).exp();
    let z = q_far + q_zero + q_near;
    let (big, small) = (q_far / z, q_near / z);
    if t >= T::zero() {
        (small, q_zero / z, big)
    } else {
        (big, q_zero / z, small)
    }
}

/// `c_beta(t) = log[(1 + e^{-beta}(e^t + e^{-t})) / (1 + 2 e^{-beta})]`.
pub fn cgf<T: Scalar>(beta: T, t: T) -> Result<T, EquilibriumError> {
    check_beta(beta)?;
    check_finite("t", t)?;
    Ok(cgf_unchecked(beta, t))
}

pub(crate) fn cgf_unchecked<T: Scalar>(beta: T, t: T) -> T {
    let x = t.abs();
    let a = (-beta).exp();
    let two = T::lit(2.0);
    if x < T::lit(20.0) {
        // 1 + 2a cosh x = (1 + 2a) + 4a sinh^2(x/2); keeps full relative accuracy near 0.
        let s = (x / two).sinh();
        (T::lit(4.0) * a * s * s / (T::one() + two * a)).ln_1p()
    } else {
        // log(1 + e^{x-b} + e^{-x-b}) = x + log(e^{-x} + e^{-b} + e^{-b-2x})
        let e1 = -x;
        let e2 = -beta;
        let e3 = -beta - two * x;
        let m = e1.max(e2);
        x + m + ((e1 - m).exp() + (e2 - m).exp() + (e3 - m).exp()).ln() - (two * a).ln_1p()
    }
}

/// First and second derivatives `(c_beta'(t), c_beta''(t))`.
pub fn cgf_derivs<T: Scalar>(beta: T, t: T) -> Result<(T, T), EquilibriumError> {
    check_beta(beta)?;
    check_finite("t", t)?;
    Ok(cgf_derivs_unchecked(beta, t))
}

pub(crate) fn cgf_derivs_unchecked<T: Scalar>(beta: T, t: T) -> (T, T) {
    (cgf_d1(beta, t), cgf_d2(beta, t))
}

/// `c_beta'(t) = 2 e^{-beta} sinh t / (1 + 2 e^{-beta} cosh t)`.
pub(crate) fn cgf_d1<T: Scalar>(beta: T, t: T) -> T {
    let x = t.abs();
    let shift = (x - beta).max(T::zero());
    let q_far = (x - beta - shift).exp();
    let q_zero = (-shift).exp();
    let q_near = (-x - beta - shift).exp();
    let z = q_far + q_zero + q_near;
    // q_far - q_near without cancellation
    let diff = if x < T::lit(20.0) {
        T::lit(2.0) * x.sinh() * (-beta - shift).exp()
    } else {
        q_far * -(T::lit(-2.0) * x).exp_m1()
    };
    let v = diff / z;
    if t < T::zero() {
        -v
    } else {
        v
    }
}

/// `c_beta''(t)`, the variance of the tilted law: `(p_+ + p_-) p_0 + 4 p_+ p_-`.
pub(crate) fn cgf_d2<T: Scalar>(beta: T, t: T) -> T {
    let (pm, p0, pp) = tilted_probs(beta, t);
    (pp + pm) * p0 + T::lit(4.0) * pp * pm
}

/// `c_beta'''(t)`, the third central moment of the tilted law.
pub(crate) fn cgf_d3<T: Scalar>(beta: T, t: T) -> T {
    let (pm, p0, pp) = tilted_probs(beta, t);
    let mu = cgf_d1(beta, t);
    let one = T::one();
    let cube = |v: T| v * v * v;
    pm * cube(-one - mu) + p0 * cube(-mu) + pp * cube(one - mu)
}

/// Inverse of `c_beta'` on `(-1, 1)`: the unique `t` with `c_beta'(t) = z`.
///
/// `c_beta'` is odd and strictly increasing with range `(-1, 1)`, so a bracket
/// `[0, hi]` for `|z|` is grown by doubling and then closed with Newton steps
/// that fall back to bisection whenever they leave the bracket.
pub fn cgf_slope_inverse<T: Scalar>(beta: T, z: T) -> Result<T, EquilibriumError> {
    check_beta(beta)?;
    check_finite("z", z)?;
    if z.abs() >= T::one() {
        return Err(EquilibriumError::Domain(format!(
            "c_beta' takes values in (-1, 1); no preimage for z = {z}"
        )));
    }
    if z == T::zero() {
        return Ok(T::zero());
    }
    let target = z.abs();
    let mut lo = T::zero();
    let mut hi = T::one();
    let limit = T::lit(4096.0);
    while cgf_d1(beta, hi) < target {
        lo = hi;
        hi = hi + hi;
        if hi > limit {
            return Err(EquilibriumError::Solver {
                what: format!("inverse of c_beta' at z = {z}"),
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
            });
        }
    }
    let eps = T::epsilon();
    let mut t = (lo + hi) / T::lit(2.0);
    for _ in 0..300 {
        let f = cgf_d1(beta, t) - target;
        if f == T::zero() {
            break;
        }
        if f > T::zero() {
            hi = t;
        } else {
            lo = t;
        }
        let slope = cgf_d2(beta, t);
        let newton = t - f / slope;
        let next = if newton > lo && newton < hi && slope > T::zero() {
            newton
        } else {
            (lo + hi) / T::lit(2.0)
        };
        let done = (next - t).abs() <= T::lit(4.0) * eps * t.abs().max(T::one())
            || hi - lo <= T::lit(4.0) * eps * hi;
        t = next;
        if done {
            break;
        }
    }
    Ok(if z < T::zero() { -t } else { t })
}

/// `J_beta(z) = sup_t { t z - c_beta(t) }` for `|z| <= 1`.
pub fn legendre<T: Scalar>(beta: T, z: T) -> Result<T, EquilibriumError> {
    check_beta(beta)?;
    check_finite("z", z)?;
    if z.abs() > T::one() {
        return Err(EquilibriumError::Domain(format!(
            "J_beta is infinite outside [-1, 1] (z = {z})"
        )));
    }
    if z.abs() == T::one() {
        return Ok(beta + (T::lit(2.0) * (-beta).exp()).ln_1p());
    }
    let t = cgf_slope_inverse(beta, z)?;
    Ok(t * z - cgf_unchecked(beta, t))
}

/// `G_{beta,K}(z) = beta K z^2 - c_beta(2 beta K z)`.
pub fn free_energy<T: Scalar>(beta: T, k: T, z: T) -> Result<T, EquilibriumError> {
    check_beta(beta)?;
    super::check_k(k)?;
    check_finite("z", z)?;
    Ok(free_energy_unchecked(beta, k, z))
}

pub(crate) fn free_energy_unchecked<T: Scalar>(beta: T, k: T, z: T) -> T {
    let bk = beta * k;
    bk * z * z - cgf_unchecked(beta, T::lit(2.0) * bk * z)
}

/// `G''_{beta,K}(z) = 2 beta K (1 - 2 beta K c_beta''(2 beta K z))`.
pub(crate) fn free_energy_curvature<T: Scalar>(beta: T, k: T, z: T) -> T {
    let m = T::lit(2.0) * beta * k;
    m * (T::one() - m * cgf_d2(beta, m * z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const BETA_C: f64 = std::f64::consts::LN_2 * 2.0;

    fn fd1(beta: f64, t: f64, h: f64) -> f64 {
        (cgf_unchecked(beta, t + h) - cgf_unchecked(beta, t - h)) / (2.0 * h)
    }

    #[test]
    fn cgf_vanishes_at_origin_and_is_even() {
        for &beta in &[0.1, 1.0, BETA_C, 5.0] {
            assert_eq!(cgf(beta, 0.0).unwrap(), 0.0);
            for &t in &[0.3, 2.0, 25.0, 300.0] {
                assert_eq!(cgf(beta, t).unwrap(), cgf(beta, -t).unwrap());
            }
        }
    }

    #[test]
    fn cgf_reference_value() {
        // 50-digit evaluation of the closed form: 0.16638429586543058227...
        assert_relative_eq!(cgf(BETA_C, 1.0).unwrap(), 0.166_384_295_865_430_58, max_relative = 1e-14);
    }

    #[test]
    fn cgf_branches_agree_at_switch() {
        for &beta in &[0.5, 2.0, 9.0] {
            let below = cgf_unchecked(beta, 20.0 - 1e-12);
            let above = cgf_unchecked(beta, 20.0);
            assert_relative_eq!(below, above, max_relative = 1e-12);
        }
    }

    #[test]
    fn cgf_is_finite_at_extreme_arguments() {
        for &(beta, t) in &[(1.0f64, 700.0f64), (700.0, 1.0), (700.0, 700.0), (0.5, -700.0)] {
            let v = cgf(beta, t).unwrap();
            assert!(v.is_finite(), "c({beta}, {t}) = {v}");
            let (d1, d2) = cgf_derivs(beta, t).unwrap();
            assert!(d1.is_finite() && d2.is_finite());
        }
        // asymptote: c(t) ~ t - beta - log(1 + 2 e^-beta)
        let beta: f64 = 3.0;
        let t = 600.0;
        assert_relative_eq!(
            cgf_unchecked(beta, t),
            t - beta - (2.0 * (-beta).exp()).ln_1p(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn derivatives_at_origin() {
        let (d1, d2) = cgf_derivs(BETA_C, 0.0).unwrap();
        assert_eq!(d1, 0.0);
        assert_relative_eq!(d2, 1.0 / 3.0, max_relative = 1e-15);
        let h = 1e-5;
        let fd2 = (cgf_unchecked(BETA_C, h) - 2.0 * cgf_unchecked(BETA_C, 0.0) + cgf_unchecked(BETA_C, -h)) / (h * h);
        assert!((fd2 - 1.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for &beta in &[0.5, 1.0, BETA_C, 2.0, 3.0] {
            for i in 0..200 {
                let t = -10.0 + 20.0 * (i as f64 + 0.5) / 200.0;
                let (d1, d2) = cgf_derivs_unchecked(beta, t);
                let h = 1e-4;
                let f1 = fd1(beta, t, h);
                let f2 = (cgf_d1(beta, t + h) - cgf_d1(beta, t - h)) / (2.0 * h);
                assert!((d1 - f1).abs() <= 1e-6 * d1.abs().max(1e-2), "c' at beta={beta} t={t}");
                assert!((d2 - f2).abs() <= 1e-6 * d2.abs().max(1e-2), "c'' at beta={beta} t={t}");
                assert!(d2 > 0.0);
                let f3 = (cgf_d2(beta, t + h) - cgf_d2(beta, t - h)) / (2.0 * h);
                assert!((cgf_d3(beta, t) - f3).abs() <= 1e-6 * f3.abs().max(1e-2));
            }
        }
    }

    #[test]
    fn slope_inverse_matches_quadratic_root() {
        // c'(t) = z  <=>  a(1-z)u^2 - z u - a(1+z) = 0 with u = e^t, a = e^-beta
        for &beta in &[0.4f64, 1.0, 2.5] {
            let a = (-beta).exp();
            for &z in &[-0.97, -0.5, 0.01, 0.3, 0.9] {
                let u = (z + (z * z + 4.0 * a * a * (1.0 - z * z)).sqrt()) / (2.0 * a * (1.0 - z));
                let t = cgf_slope_inverse(beta, z).unwrap();
                assert_relative_eq!(t, u.ln(), max_relative = 1e-12, epsilon = 1e-14);
            }
            // near |z| = 1 the inverse is ill-conditioned; check the forward residual instead
            let t = cgf_slope_inverse(beta, 0.999_999).unwrap();
            assert!((cgf_d1(beta, t) - 0.999_999).abs() < 1e-15);
        }
    }

    #[test]
    fn legendre_basic_properties() {
        for &beta in &[0.5, 2.0] {
            assert_eq!(legendre(beta, 0.0).unwrap(), 0.0);
            for &z in &[0.1, 0.5, 0.95] {
                assert_relative_eq!(legendre(beta, z).unwrap(), legendre(beta, -z).unwrap());
            }
        }
        assert!(legendre(1.0, 1.0 + 1e-9).is_err());
    }

    #[test]
    fn legendre_endpoint_matches_grid_supremum() {
        // grid supremum of t - c_2(t) over [0, 60] with step 1e-4
        let beta = 2.0;
        let mut best = f64::MIN;
        let mut t = 0.0;
        while t <= 60.0 {
            best = best.max(t - cgf_unchecked(beta, t));
            t += 1e-4;
        }
        let j = legendre(beta, 1.0).unwrap();
        assert_relative_eq!(j, 2.239_544_766_221_884_5, max_relative = 1e-14);
        assert!((j - best).abs() < 1e-9);
    }

    #[test]
    fn legendre_interior_matches_grid_supremum() {
        let beta = 1.3;
        for &z in &[0.2, 0.6, 0.9] {
            let mut best = f64::MIN;
            let mut t = -5.0;
            while t <= 15.0 {
                best = best.max(t * z - cgf_unchecked(beta, t));
                t += 1e-4;
            }
            assert!((legendre(beta, z).unwrap() - best).abs() < 1e-8);
        }
    }

    #[test]
    fn free_energy_composition() {
        let (beta, k, z) = (BETA_C, 1.0, 0.5);
        let expect = beta * k * z * z - cgf(beta, 2.0 * beta * k * z).unwrap();
        assert_eq!(free_energy(beta, k, z).unwrap(), expect);
        assert_eq!(free_energy(beta, k, 0.0).unwrap(), 0.0);
        assert_eq!(free_energy(beta, k, z).unwrap(), free_energy(beta, k, -z).unwrap());
    }

    #[test]
    fn rejects_non_finite_input() {
        assert!(cgf(f64::NAN, 1.0).is_err());
        assert!(cgf(1.0, f64::INFINITY).is_err());
        assert!(cgf(-1.0, 0.5).is_err());
        assert!(cgf_derivs(1.0, f64::NAN).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let v: f32 = cgf(BETA_C as f32, 1.0f32).unwrap();
        assert!((v - 0.166_384_3).abs() < 1e-6);
        let j: f32 = legendre(2.0f32, 0.5).unwrap();
        assert!((j as f64 - legendre(2.0f64, 0.5).unwrap()).abs() < 1e-5);
    }
}
