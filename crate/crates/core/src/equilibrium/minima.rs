use serde::Serialize;

use super::cgf::{cgf_d1, cgf_d2, free_energy_curvature, free_energy_unchecked, legendre};
use super::{EquilibriumError, ModelTemperature};
use crate::scalar::Scalar;

/// Right end of the interval scanned for critical points. Magnetisations live in
/// `[-1, 1]`; the margin keeps roots near `±1` inside the scan.
const SCAN_END: f64 = 1.5;
const SCAN_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CriticalKind {
    LocalMin,
    LocalMax,
    /// `|G''| < tol`: left unclassified.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint<T> {
    pub z: T,
    pub g: T,
    pub curvature: T,
    pub kind: CriticalKind,
}

/// Critical points and minimisers of `G_{beta,K}` on the real line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimaReport<T> {
    pub global_minimizers: Vec<T>,
    /// Sorted; contains every global minimiser.
    pub local_minimizers: Vec<T>,
    /// `G` at each entry of `local_minimizers`.
    pub g_values: Vec<T>,
    /// All critical points found, both signs, sorted by `z`.
    pub critical_points: Vec<CriticalPoint<T>>,
    /// True when some critical point had `|G''| < tol`.
    pub degenerate: bool,
    pub tolerance: T,
}

impl<T: Scalar> MinimaReport<T> {
    pub fn min_value(&self) -> T {
        self.g_values
            .iter()
            .copied()
            .fold(T::infinity(), |a, b| a.min(b))
    }

    /// Largest global minimiser (the positive branch `z(beta, K)` when it exists).
    pub fn largest_global(&self) -> T {
        *self.global_minimizers.last().expect("G always has a global minimiser")
    }

    /// Local minimisers strictly above `floor`.
    pub fn positive_local_minimizers(&self, floor: T) -> Vec<T> {
        self.local_minimizers.iter().copied().filter(|&z| z > floor).collect()
    }
}

/// Locates the critical points of `G_{beta,K}` as roots of `z - c_beta'(2 beta K z)`
/// on `[0, 1.5]` (sign-change scan with step `1e-3`, then bisection to `tol`),
/// classifies them by the sign of `G''`, and reflects them to the negative axis.
pub fn minimize_g<T: Scalar>(beta: T, k: T, tol: T) -> Result<MinimaReport<T>, EquilibriumError> {
    ModelTemperature::new(beta, k)?;
    if !(tol > T::zero() && tol <= T::lit(1e-3)) {
        return Err(EquilibriumError::Domain(format!("tol must lie in (0, 1e-3], got {tol}")));
    }
    let m = T::lit(2.0) * beta * k;
    let f = |z: T| z - cgf_d1(beta, m * z);
    let bisect = |mut lo: T, mut hi: T| -> T {
        let mut f_lo = f(lo);
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = (lo + hi) / T::lit(2.0);
            let fm = f(mid);
            if fm == T::zero() {
                return mid;
            }
            if (fm > T::zero()) == (f_lo > T::zero()) {
                lo = mid;
                f_lo = fm;
            } else {
                hi = mid;
            }
        }
        (lo + hi) / T::lit(2.0)
    };

    let mut roots = vec![T::zero()];
    let step = T::lit(SCAN_STEP);
    let cells = (SCAN_END / SCAN_STEP).round() as usize;

    // Just right of the origin f has the sign of f'(0) = 1 - 2 beta K c''(0).
    // When G''(0) is degenerate that sign is round-off, and any root it would
    // produce is indistinguishable from the origin.
    let slope0 = T::one() - m * cgf_d2(beta, T::zero());
    let origin_degenerate = free_energy_curvature(beta, k, T::zero()).abs() < tol;
    let first = f(step);
    if !origin_degenerate && first != T::zero() && (slope0 > T::zero()) != (first > T::zero()) {
        let mut eps = step * T::lit(1e-4);
        while (f(eps) > T::zero()) != (slope0 > T::zero()) && eps > T::min_positive_value() {
            eps = eps * T::lit(1e-3);
        }
        roots.push(bisect(eps, step));
    }
    let mut z_prev = step;
    let mut f_prev = first;
    if f_prev == T::zero() {
        roots.push(z_prev);
    }
    for i in 2..=cells {
        let z = step * T::from_count(i);
        let fz = f(z);
        if fz == T::zero() {
            roots.push(z);
        } else if f_prev != T::zero() && (fz > T::zero()) != (f_prev > T::zero()) {
            roots.push(bisect(z_prev, z));
        }
        z_prev = z;
        f_prev = fz;
    }

    let mut points: Vec<CriticalPoint<T>> = Vec::with_capacity(2 * roots.len());
    for &z in &roots {
        let curvature = free_energy_curvature(beta, k, z);
        let kind = if curvature.abs() < tol {
            CriticalKind::Degenerate
        } else if curvature > T::zero() {
            CriticalKind::LocalMin
        } else {
            CriticalKind::LocalMax
        };
        let g = free_energy_unchecked(beta, k, z);
        points.push(CriticalPoint { z, g, curvature, kind });
        if z > T::zero() {
            points.push(CriticalPoint { z: -z, g, curvature, kind });
        }
    }
    points.sort_by(|a, b| a.z.partial_cmp(&b.z).expect("finite roots"));

    let gmin = points
        .iter()
        .filter(|p| p.kind != CriticalKind::LocalMax)
        .map(|p| p.g)
        .fold(T::infinity(), |a, b| a.min(b));
    let window = T::lit(10.0) * tol;
    let is_global = |p: &CriticalPoint<T>| p.kind != CriticalKind::LocalMax && p.g <= gmin + window;

    let global_minimizers: Vec<T> = points.iter().filter(|p| is_global(p)).map(|p| p.z).collect();
    let locals: Vec<&CriticalPoint<T>> = points
        .iter()
        .filter(|p| p.kind == CriticalKind::LocalMin || is_global(p))
        .collect();
    Ok(MinimaReport {
        global_minimizers,
        local_minimizers: locals.iter().map(|p| p.z).collect(),
        g_values: locals.iter().map(|p| p.g).collect(),
        degenerate: points.iter().any(|p| p.kind == CriticalKind::Degenerate),
        critical_points: points,
        tolerance: tol,
    })
}

/// `I_{beta,K}(z) = J_beta(z) - beta K z^2 - inf_y {J_beta(y) - beta K y^2}`, with
/// the infimum taken once, as the minimum value of `G_{beta,K}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFunction<T> {
    pub beta: T,
    pub k: T,
    pub infimum: T,
}

impl<T: Scalar> RateFunction<T> {
    pub fn new(beta: T, k: T, tol: T) -> Result<Self, EquilibriumError> {
        let minima = minimize_g(beta, k, tol)?;
        Ok(Self {
            beta,
            k,
            infimum: minima.min_value(),
        })
    }

    pub fn eval(&self, z: T) -> Result<T, EquilibriumError> {
        let j = legendre(self.beta, z)?;
        Ok(j - self.beta * self.k * z * z - self.infimum)
    }
}

/// One-shot evaluation of `I_{beta,K}(z)`; prefer [`RateFunction`] for repeated use.
pub fn rate_function<T: Scalar>(beta: T, k: T, z: T) -> Result<T, EquilibriumError> {
    RateFunction::new(beta, k, T::lit(super::DEFAULT_TOL))?.eval(z)
}
