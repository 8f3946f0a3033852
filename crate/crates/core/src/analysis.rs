//! Convergence of the closed packaging loop.
//!
//! With processing cost `t = g(s)` positive and strictly increasing and the
//! sizing law `s' = f(t)` strictly increasing and bounded, the map `s -> f(g(s))`
//! is order preserving, so its iterates are constant, strictly increasing or
//! strictly decreasing, and converge. [`fixed_point_iterate`] runs the map;
//! [`fixed_point_bisect`] finds the same fixed point by an independent route.

use crate::error::{AsapError, Result};
use crate::packager::PackagerParams;
use crate::scalar::Scalar;

/// Processing-time model `t = g(s)`.
pub trait CostModel<T> {
    fn cost(&self, s: T) -> T;
}

impl<T, F: Fn(T) -> T> CostModel<T> for F {
    fn cost(&self, s: T) -> T {
        self(s)
    }
}

/// `g(s) = β0 + β1·s^p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLaw<T> {
    pub beta0: T,
    pub beta1: T,
    pub exponent: u32,
}

impl<T: Scalar> PowerLaw<T> {
    pub fn new(beta0: T, beta1: T, exponent: u32) -> Result<Self> {
        if !(beta0 >= T::zero() && beta1 > T::zero()) || exponent == 0 {
            return Err(AsapError::InvalidParams(format!(
                "power law needs beta0 >= 0, beta1 > 0, exponent >= 1; got {beta0}, {beta1}, {exponent}"
            )));
        }
        Ok(PowerLaw { beta0, beta1, exponent })
    }

    pub fn affine(beta0: T, beta1: T) -> Result<Self> {
        Self::new(beta0, beta1, 1)
    }
}

impl<T: Scalar> CostModel<T> for PowerLaw<T> {
    fn cost(&self, s: T) -> T {
        self.beta0 + self.beta1 * s.powi(self.exponent as i32)
    }
}

/// `f(g(s))` with the processing time clamped into `[t_min, t_max]`, unrounded.
pub fn closed_loop_map<T: Scalar, G: CostModel<T> + ?Sized>(params: &PackagerParams<T>, g: &G, s: T) -> T {
    let t = params.clamp_time(g.cost(s));
    params.sizing(t).expect("clamped processing time is positive")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monotonicity {
    Constant,
    StrictlyIncreasing,
    StrictlyDecreasing,
    Mixed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace<T> {
    pub s: Vec<T>,
    pub classification: Monotonicity,
    /// Last iterate when the step size fell below the tolerance.
    pub limit: Option<T>,
    pub iterations_to_converge: usize,
}

impl<T: Scalar> IterationTrace<T> {
    pub fn converged(&self) -> bool {
        self.limit.is_some()
    }
}

/// Iterates `s <- f(g(s))` from `s0` until a step is smaller than `tol` or
/// `max_iter` steps have run.
///
/// The classification looks at every step larger than `tol`; a trace that
/// moves both up and down is reported as [`Monotonicity::Mixed`].
pub fn fixed_point_iterate<T: Scalar, G: CostModel<T> + ?Sized>(
    params: &PackagerParams<T>,
    g: &G,
    s0: T,
    tol: T,
    max_iter: usize,
) -> Result<IterationTrace<T>> {
    if !(s0 > T::zero()) {
        return Err(AsapError::InvalidParams(format!("s0 must be positive, got {s0}")));
    }
    let mut s = vec![s0];
    let (mut up, mut down) = (false, false);
    let mut limit = None;
    let mut cur = s0;
    for _ in 0..max_iter {
        let next = closed_loop_map(params, g, cur);
        s.push(next);
        let step = next - cur;
        if step.abs() < tol {
            limit = Some(next);
            break;
        }
        if step > T::zero() {
            up = true;
        } else {
            down = true;
        }
        cur = next;
    }
    let classification = match (up, down) {
        (false, false) => Monotonicity::Constant,
        (true, false) => Monotonicity::StrictlyIncreasing,
        (false, true) => Monotonicity::StrictlyDecreasing,
        (true, true) => Monotonicity::Mixed,
    };
    let iterations_to_converge = s.len() - 1;
    Ok(IterationTrace { s, classification, limit, iterations_to_converge })
}

/// Bracket used by [`fixed_point_bisect`]: `[s_min, s_max]`, widened to the
/// bounds of the unclamped sizing law when that is not enough.
pub fn bisection_bracket<T: Scalar>(params: &PackagerParams<T>) -> [(T, T); 2] {
    let (lo, hi) = params.sizing_bounds();
    let s_min = T::lit(params.s_min() as f64);
    let s_max = T::lit(params.s_max() as f64);
    [(s_min, s_max), (lo.min(s_min), hi.max(s_max))]
}

/// Root of `h(s) = f(g(s)) - s` by bisection, with `|h(s*)| < tol`.
pub fn fixed_point_bisect<T: Scalar, G: CostModel<T> + ?Sized>(params: &PackagerParams<T>, g: &G, tol: T) -> Result<T> {
    let h = |s: T| closed_loop_map(params, g, s) - s;
    let mut found = None;
    for (lo, hi) in bisection_bracket(params) {
        let (hl, hh) = (h(lo), h(hi));
        if hl == T::zero() {
            return Ok(lo);
        }
        if hh == T::zero() {
            return Ok(hi);
        }
        if (hl > T::zero()) != (hh > T::zero()) {
            found = Some((lo, hi, hl > T::zero()));
            break;
        }
    }
    let Some((mut lo, mut hi, lo_positive)) = found else {
        let [_, (lo, hi)] = bisection_bracket(params);
        let sign = if h(lo) > T::zero() { "positive" } else { "negative" };
        return Err(AsapError::NoFixedPoint { lo: lo.as_f64(), hi: hi.as_f64(), sign });
    };
    let mut mid = (lo + hi) / T::lit(2.0);
    for _ in 0..256 {
        mid = (lo + hi) / T::lit(2.0);
        let hm = h(mid);
        if hm.abs() < tol || mid <= lo || mid >= hi {
            break;
        }
        if (hm > T::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Sign changes of `f(g(s)) - s` over `samples` evenly spaced points of the
/// widened bracket; one means the fixed point is unique at that resolution.
pub fn count_sign_changes<T: Scalar, G: CostModel<T> + ?Sized>(params: &PackagerParams<T>, g: &G, samples: usize) -> usize {
    let [_, (lo, hi)] = bisection_bracket(params);
    let step = (hi - lo) / T::lit(samples.max(1) as f64);
    let mut changes = 0;
    let mut prev = closed_loop_map(params, g, lo) - lo > T::zero();
    for i in 1..=samples {
        let s = lo + step * T::lit(i as f64);
        let cur = closed_loop_map(params, g, s) - s > T::zero();
        if cur != prev {
            changes += 1;
        }
        prev = cur;
    }
    changes
}

/// Relative slack used to decide that a value sitting on the band edge is outside it.
const BAND_EDGE_SLACK: f64 = 1e-9;

/// Minimum in-band tail required for a settling count to be defined.
pub const MIN_STEADY_TAIL: usize = 10;

/// Samples after `disturbance` before the series enters, and stays inside,
/// `±band` (relative) of its steady-state mean, taken as the mean of the
/// final quartile after the disturbance.
pub fn settling_iterations<T: Scalar>(series: &[T], disturbance: usize, band: T) -> Result<usize> {
    if disturbance >= series.len() {
        return Err(AsapError::UndefinedSettling(format!(
            "disturbance index {disturbance} outside a series of {}",
            series.len()
        )));
    }
    let seg = &series[disturbance..];
    if seg.len() < MIN_STEADY_TAIL {
        return Err(AsapError::UndefinedSettling(format!(
            "{} samples after the disturbance, need at least {MIN_STEADY_TAIL}",
            seg.len()
        )));
    }
    let quartile = seg.len().div_ceil(4);
    let tail = &seg[seg.len() - quartile..];
    let mean = tail.iter().fold(T::zero(), |a, &x| a + x) / T::lit(quartile as f64);
    let width = band * mean.abs() * (T::one() - T::lit(BAND_EDGE_SLACK));
    let entry = seg.iter().rposition(|&x| !((x - mean).abs() < width)).map_or(0, |i| i + 1);
    if seg.len() - entry < MIN_STEADY_TAIL {
        return Err(AsapError::UndefinedSettling(format!(
            "only {} trailing samples within ±{band} of the steady mean {mean}",
            seg.len() - entry
        )));
    }
    Ok(entry)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3_params() -> PackagerParams<f64> {
        PackagerParams::new(1, 1000, 1e-6, 0.1, 5.0).unwrap()
    }

    #[test]
    fn constant_from_fixed_point() {
        let p = fig3_params();
        let g = PowerLaw::affine(1e-4, 1e-5).unwrap();
        let star = fixed_point_bisect(&p, &g, 1e-12).unwrap();
        let tr = fixed_point_iterate(&p, &g, star, 1e-6, 100).unwrap();
        assert_eq!(tr.classification, Monotonicity::Constant);
        assert!((tr.limit.unwrap() - star).abs() < 1e-6);
    }

    #[test]
    fn oracle_fixed_point_value() {
        // mpmath bisection of f(g(s)) = s at 50 digits
        let g = PowerLaw::affine(1e-4, 1e-5).unwrap();
        let star = fixed_point_bisect(&fig3_params(), &g, 1e-10).unwrap();
        assert!((star - 272.008_609_459_569_64).abs() < 1e-6);
    }

    #[test]
    fn saturating_cost_converges_to_s_max() {
        let p = fig3_params();
        let g = PowerLaw::affine(0.01, 0.01).unwrap();
        let tr = fixed_point_iterate(&p, &g, 1.0, 1e-9, 1000).unwrap();
        assert_eq!(tr.classification, Monotonicity::StrictlyIncreasing);
        let star = fixed_point_bisect(&p, &g, 1e-9).unwrap();
        assert!((tr.limit.unwrap() - star).abs() < 1e-6 * 1000.0);
        assert!((star - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn decreasing_from_above() {
        let p = fig3_params();
        let g = PowerLaw::affine(1e-4, 1e-5).unwrap();
        let star = fixed_point_bisect(&p, &g, 1e-12).unwrap();
        let tr = fixed_point_iterate(&p, &g, star + 10.0, 1e-9, 10_000).unwrap();
        assert_eq!(tr.classification, Monotonicity::StrictlyDecreasing);
        assert!((tr.limit.unwrap() - star).abs() < 1e-6 * 1000.0);
    }

    #[test]
    fn non_convergence_is_reported() {
        let p = fig3_params();
        let g = PowerLaw::affine(1e-4, 1e-5).unwrap();
        let tr = fixed_point_iterate(&p, &g, 1.0, 1e-12, 2).unwrap();
        assert!(!tr.converged());
        assert_eq!(tr.iterations_to_converge, 2);
    }

    #[test]
    fn closures_are_cost_models() {
        let p = fig3_params();
        let g = |s: f64| 1e-4 + 1e-5 * s;
        let a = fixed_point_bisect(&p, &g, 1e-10).unwrap();
        let b = fixed_point_bisect(&p, &PowerLaw::affine(1e-4, 1e-5).unwrap(), 1e-10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bisection_residual_below_tol() {
        let p = PackagerParams::<f64>::default();
        for (b0, b1) in [(1e-6, 1e-6), (1e-3, 1e-6), (0.05, 1e-4)] {
            let g = PowerLaw::affine(b0, b1).unwrap();
            let s = fixed_point_bisect(&p, &g, 1e-9).unwrap();
            assert!((closed_loop_map(&p, &g, s) - s).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_cost_pins_fixed_point() {
        let p = fig3_params();
        struct Runaway;
        impl CostModel<f64> for Runaway {
            fn cost(&self, _s: f64) -> f64 {
                0.1
            }
        }
        let star = fixed_point_bisect(&p, &Runaway, 1e-9).unwrap();
        assert!((star - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn power_law_validation() {
        assert!(PowerLaw::<f64>::new(0.0, 0.0, 1).is_err());
        assert!(PowerLaw::<f64>::new(0.1, 1.0, 0).is_err());
        assert_eq!(PowerLaw::new(0.0, 1e-6, 2).unwrap().cost(100.0), 0.01);
    }

    #[test]
    fn settling_constant_series() {
        assert_eq!(settling_iterations(&[3.0; 20], 0, 0.01).unwrap(), 0);
    }

    #[test]
    fn settling_band_edge_counts_as_outside() {
        let mut s = vec![1.0, 1.0, 5.0, 9.0, 9.9];
        s.extend(std::iter::repeat(10.0).take(40));
        assert_eq!(settling_iterations(&s, 2, 0.01).unwrap(), 3);
    }

    #[test]
    fn settling_geometric_approach() {
        let s: Vec<f64> = (0..100).map(|k| 10.0 * (1.0 - 0.5f64.powi(k))).collect();
        assert_eq!(settling_iterations(&s, 0, 0.01).unwrap(), 7);
    }

    #[test]
    fn settling_undefined_without_tail() {
        let s: Vec<f64> = (0..40).map(|k| if k % 2 == 0 { 1.0 } else { 2.0 }).collect();
        assert!(matches!(settling_iterations(&s, 0, 0.01), Err(AsapError::UndefinedSettling(_))));
        assert!(settling_iterations(&[1.0; 5], 0, 0.01).is_err());
        assert!(settling_iterations(&[1.0; 20], 25, 0.01).is_err());
    }
}
