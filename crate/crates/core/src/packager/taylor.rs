//! Tabulated Taylor expansions of `Φ(t) = atan(κ·ln t)` around log-spaced
//! operating points.

use crate::error::{AsapError, Result};
use crate::scalar::Scalar;

use super::{phi, ShapeFunction};

pub const DEFAULT_TAYLOR_ORDER: usize = 5;
pub const DEFAULT_TAYLOR_POINTS: usize = 64;

/// Taylor coefficients `c_0..=c_order` of `atan(κ·ln t)` around `t = a`.
///
/// Built by truncated power-series arithmetic in `h = t - a`:
/// `u = κ·ln(a + h)` has the closed-form series `κ ln a + κ Σ (-1)^(j+1) h^j / (j a^j)`,
/// then `Φ' = u' / (1 + u²)` is divided out term by term and integrated.
pub fn phi_series<T: Scalar>(a: T, kappa: T, order: usize) -> Result<Vec<T>> {
    if !(a > T::zero()) {
        return Err(AsapError::Domain { function: "phi_series", value: a.as_f64() });
    }
    let n = order + 1;
    let mut u = vec![T::zero(); n];
    u[0] = kappa * a.ln();
    let mut a_pow = T::one();
    for (j, uj) in u.iter_mut().enumerate().skip(1) {
        a_pow = a_pow * a;
        let sign = if j % 2 == 1 { T::one() } else { -T::one() };
        *uj = sign * kappa / (T::lit(j as f64) * a_pow);
    }
    // 1 + u², truncated to `order` terms (enough for the derivative series)
    let mut w = vec![T::zero(); order.max(1)];
    for (j, wj) in w.iter_mut().enumerate() {
        *wj = (0..=j).fold(T::zero(), |acc, i| acc + u[i] * u[j - i]);
    }
    w[0] = w[0] + T::one();
    let mut q = vec![T::zero(); order];
    for j in 0..order {
        let du = T::lit((j + 1) as f64) * u[j + 1];
        let conv = (1..=j).fold(T::zero(), |acc, i| acc + w[i] * q[j - i]);
        q[j] = (du - conv) / w[0];
    }
    let mut c = Vec::with_capacity(n);
    c.push(u[0].atan());
    for (j, qj) in q.iter().enumerate() {
        c.push(*qj / T::lit((j + 1) as f64));
    }
    Ok(c)
}

/// Operating points and their expansions.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorTable<T> {
    order: usize,
    points: Vec<T>,
    /// Geometric midpoints between consecutive operating points.
    edges: Vec<T>,
    coeffs: Vec<Vec<T>>,
}

impl<T: Scalar> TaylorTable<T> {
    /// `num_points` operating points log-spaced over `[t_min, t_max]`.
    pub fn build(t_min: T, t_max: T, kappa: T, order: usize, num_points: usize) -> Result<Self> {
        if order < 1 {
            return Err(AsapError::InvalidParams("taylor order must be at least 1".into()));
        }
        if num_points < 2 {
            return Err(AsapError::InvalidParams("taylor table needs at least 2 points".into()));
        }
        if !(t_min > T::zero() && t_max > t_min) {
            return Err(AsapError::InvalidParams(format!("need 0 < t_min < t_max, got {t_min} and {t_max}")));
        }
        let (lo, hi) = (t_min.ln(), t_max.ln());
        let step = (hi - lo) / T::lit((num_points - 1) as f64);
        let mut points: Vec<T> = (0..num_points).map(|j| (lo + step * T::lit(j as f64)).exp()).collect();
        points[0] = t_min;
        points[num_points - 1] = t_max;
        let edges = points.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
        let coeffs = points.iter().map(|&a| phi_series(a, kappa, order)).collect::<Result<_>>()?;
        Ok(TaylorTable { order, points, edges, coeffs })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn coefficients(&self, j: usize) -> &[T] {
        &self.coeffs[j]
    }

    pub fn span(&self) -> (T, T) {
        (self.points[0], self.points[self.points.len() - 1])
    }

    /// Index of the operating point nearest to `t` in log space.
    pub fn nearest(&self, t: T) -> usize {
        self.edges.partition_point(|&e| e <= t)
    }

    /// Evaluates the expansion at the nearest operating point.
    pub fn eval(&self, t: T) -> Result<T> {
        let (lo, hi) = self.span();
        if !(t >= lo && t <= hi) {
            return Err(AsapError::Domain { function: "phi_taylor", value: t.as_f64() });
        }
        let j = self.nearest(t);
        let h = t - self.points[j];
        Ok(self.coeffs[j].iter().rev().fold(T::zero(), |acc, &c| acc * h + c))
    }
}

impl<T: Scalar> ShapeFunction<T> for TaylorTable<T> {
    fn value(&self, t: T) -> Result<T> {
        self.eval(t)
    }
}

/// Free-function form of [`TaylorTable::eval`].
pub fn phi_taylor<T: Scalar>(t: T, table: &TaylorTable<T>) -> Result<T> {
    table.eval(t)
}

/// Maximum of `|phi_taylor - phi|` over `samples` log-spaced points of the table span.
pub fn max_abs_error<T: Scalar>(table: &TaylorTable<T>, kappa: T, samples: usize) -> Result<T> {
    let (lo, hi) = table.span();
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut worst = T::zero();
    for i in 0..samples {
        let f = T::lit(i as f64 / (samples - 1).max(1) as f64);
        let t = (llo + (lhi - llo) * f).exp().max(lo).min(hi);
        worst = worst.max((table.eval(t)? - phi(t, kappa)?).abs());
    }
    Ok(worst)
}
