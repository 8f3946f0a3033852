//! Adaptive event packaging.
//!
//! The next package size follows `s = A·Φ(t_prev) + B` with
//! `Φ(t) = atan(κ·ln t)`. `A` and `B` are calibrated so that `t_min` maps to
//! `s_min` and `t_max` maps to `s_max`.

mod assembler;
mod taylor;

pub use assembler::Assembler;
pub use taylor::{max_abs_error, phi_series, phi_taylor, TaylorTable, DEFAULT_TAYLOR_ORDER, DEFAULT_TAYLOR_POINTS};

use crate::error::{AsapError, Result};
use crate::scalar::{clamp, Scalar};

/// A curve usable as `Φ`: defined and strictly increasing on `[t_min, t_max]`.
pub trait ShapeFunction<T> {
    fn value(&self, t: T) -> Result<T>;
}

/// `Φ(t) = atan(κ·ln t)`.
pub fn phi<T: Scalar>(t: T, kappa: T) -> Result<T> {
    if !(t > T::zero()) {
        return Err(AsapError::Domain { function: "phi", value: t.as_f64() });
    }
    Ok((kappa * t.ln()).atan())
}

/// Exact `Φ` for a fixed `κ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArctanLog<T> {
    pub kappa: T,
}

impl<T: Scalar> ShapeFunction<T> for ArctanLog<T> {
    fn value(&self, t: T) -> Result<T> {
        phi(t, self.kappa)
    }
}

/// Smaller inflection point of `Φ`: `exp(-sqrt(κ²-1)/κ - 1)`.
pub fn inflection_point<T: Scalar>(kappa: T) -> Result<T> {
    inflection(kappa, -T::one())
}

/// The larger inflection point, where the curvature of `Φ` is already close to zero.
pub fn second_inflection_point<T: Scalar>(kappa: T) -> Result<T> {
    inflection(kappa, T::one())
}

fn inflection<T: Scalar>(kappa: T, branch: T) -> Result<T> {
    if !(kappa >= T::one()) {
        return Err(AsapError::Domain { function: "inflection_point", value: kappa.as_f64() });
    }
    Ok((branch * (kappa * kappa - T::one()).sqrt() / kappa - T::one()).exp())
}

/// `(A, B)` such that `A·Φ(t_min) + B = s_min` and `A·Φ(t_max) + B = s_max`.
pub fn calibrate<T: Scalar>(s_min: T, s_max: T, t_min: T, t_max: T, kappa: T) -> Result<(T, T)> {
    let lo = phi(t_min, kappa)?;
    let hi = phi(t_max, kappa)?;
    let span = hi - lo;
    if !(span > T::zero()) {
        return Err(AsapError::InvalidParams(format!("Φ(t_max) - Φ(t_min) = {span} is not positive")));
    }
    let a = (s_max - s_min) / span;
    let b = s_max - a * hi;
    Ok((a, b))
}

pub const DEFAULT_S_MIN: usize = 1;
pub const DEFAULT_S_MAX: usize = 1000;
pub const DEFAULT_T_MIN: f64 = 1e-6;
pub const DEFAULT_T_MAX: f64 = 0.1;
pub const DEFAULT_KAPPA: f64 = 5.0;

/// Calibrated sizing law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PackagerParams<T> {
    s_min: usize,
    s_max: usize,
    t_min: T,
    t_max: T,
    kappa: T,
    a: T,
    b: T,
}

impl<T: Scalar> Default for PackagerParams<T> {
    fn default() -> Self {
        PackagerParams::new(DEFAULT_S_MIN, DEFAULT_S_MAX, T::lit(DEFAULT_T_MIN), T::lit(DEFAULT_T_MAX), T::lit(DEFAULT_KAPPA))
            .expect("default packager parameters are valid")
    }
}

impl<T: Scalar> PackagerParams<T> {
    pub fn new(s_min: usize, s_max: usize, t_min: T, t_max: T, kappa: T) -> Result<Self> {
        if s_min < 1 {
            return Err(AsapError::InvalidParams("s_min must be at least 1".into()));
        }
        if s_max <= s_min {
            return Err(AsapError::InvalidParams(format!("s_max ({s_max}) must exceed s_min ({s_min})")));
        }
        if !(t_min > T::zero() && t_max > t_min) {
            return Err(AsapError::InvalidParams(format!("need 0 < t_min < t_max, got {t_min} and {t_max}")));
        }
        if !(kappa >= T::one()) {
            return Err(AsapError::InvalidParams(format!("kappa must be >= 1, got {kappa}")));
        }
        let (a, b) = calibrate(T::lit(s_min as f64), T::lit(s_max as f64), t_min, t_max, kappa)?;
        Ok(PackagerParams { s_min, s_max, t_min, t_max, kappa, a, b })
    }

    pub fn s_min(&self) -> usize {
        self.s_min
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    pub fn t_min(&self) -> T {
        self.t_min
    }

    pub fn t_max(&self) -> T {
        self.t_max
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn shape(&self) -> ArctanLog<T> {
        ArctanLog { kappa: self.kappa }
    }

    pub fn clamp_time(&self, t: T) -> T {
        clamp(t, self.t_min, self.t_max)
    }

    /// `A·Φ(t) + B` without clamping or rounding.
    pub fn sizing(&self, t: T) -> Result<T> {
        Ok(self.a * phi(t, self.kappa)? + self.b)
    }

    /// Open range `(B - Aπ/2, B + Aπ/2)` of the unclamped sizing law.
    pub fn sizing_bounds(&self) -> (T, T) {
        let half = self.a * T::FRAC_PI_2();
        (self.b - half, self.b + half)
    }

    /// Package size for the next package given the last processing time.
    pub fn target_size(&self, t_prev: T) -> usize {
        self.target_size_with(&self.shape(), t_prev)
            .expect("exact Φ is defined on the clamped range")
    }

    /// Like [`target_size`](Self::target_size) with a substitute `Φ`.
    pub fn target_size_with<S: ShapeFunction<T> + ?Sized>(&self, shape: &S, t_prev: T) -> Result<usize> {
        let t = self.clamp_time(t_prev);
        let s = self.a * shape.value(t)? + self.b;
        Ok(self.round_size(s))
    }

    /// Rounds half up and clamps into `[s_min, s_max]`.
    pub fn round_size(&self, s: T) -> usize {
        let r = (s + T::lit(0.5)).floor();
        let lo = T::lit(self.s_min as f64);
        let hi = T::lit(self.s_max as f64);
        clamp(r, lo, hi).to_usize().unwrap_or(self.s_min)
    }

    /// Slope of the sizing law: `Aκ / (t (κ² ln² t + 1))`.
    pub fn sizing_derivative(&self, t: T) -> T {
        let l = t.ln();
        self.a * self.kappa / (t * (self.kappa * self.kappa * l * l + T::one()))
    }
}
