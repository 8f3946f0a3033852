//! Incoming event rate over a sliding window of stream time, and the adaptive
//! extremes `r_min` / `r_max` tracked with a forgetting factor.

use std::collections::VecDeque;

use crate::error::{AsapError, Result};
use crate::events::{Timestamp, MICROS_PER_SECOND};
use crate::scalar::Scalar;

pub const DEFAULT_WINDOW_US: u64 = 1_000;

/// Per-event forgetting factor applied to the rate extremes.
pub const DEFAULT_ALPHA: f64 = 1.0 - 1e-8;

/// Counts events whose timestamp lies in `(t_now - window, t_now]`.
#[derive(Clone, Debug)]
pub struct RateTracker<T> {
    window_us: u64,
    window_secs: T,
    recent: VecDeque<Timestamp>,
    last_t: Option<Timestamp>,
    observed: u64,
    rate: T,
}

impl<T: Scalar> RateTracker<T> {
    pub fn new(window_us: u64) -> Result<Self> {
        if window_us == 0 {
            return Err(AsapError::InvalidParams("rate window must be at least 1 us".into()));
        }
        Ok(RateTracker {
            window_us,
            window_secs: T::lit(window_us as f64 / MICROS_PER_SECOND),
            recent: VecDeque::new(),
            last_t: None,
            observed: 0,
            rate: T::zero(),
        })
    }

    pub fn window_us(&self) -> u64 {
        self.window_us
    }

    /// Registers an event at `t` and returns the current rate in events per second.
    pub fn observe(&mut self, t: Timestamp) -> Result<T> {
        if let Some(prev) = self.last_t {
            if t < prev {
                return Err(AsapError::Ordering { index: self.observed, previous: prev, current: t });
            }
        }
        self.last_t = Some(t);
        self.observed += 1;
        self.recent.push_back(t);
        while let Some(&oldest) = self.recent.front() {
            if oldest + self.window_us <= t {
                self.recent.pop_front();
            } else {
                break;
            }
        }
        self.rate = T::lit(self.recent.len() as f64) / self.window_secs;
        Ok(self.rate)
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn in_window(&self) -> usize {
        self.recent.len()
    }
}

/// Adaptive rate extremes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateBounds<T> {
    alpha: T,
    bounds: Option<(T, T)>,
}

impl<T: Scalar> RateBounds<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return Err(AsapError::InvalidParams(format!("forgetting factor {alpha} outside (0, 1]")));
        }
        Ok(RateBounds { alpha, bounds: None })
    }

    /// Bounds continuing from a known state.
    pub fn with_state(alpha: T, r_min: T, r_max: T) -> Result<Self> {
        let mut b = Self::new(alpha)?;
        if !(r_min > T::zero() && r_min <= r_max) {
            return Err(AsapError::InvalidParams(format!("need 0 < r_min <= r_max, got {r_min}, {r_max}")));
        }
        b.bounds = Some((r_min, r_max));
        Ok(b)
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// `(r_min, r_max)`, or `None` before the first update.
    pub fn get(&self) -> Option<(T, T)> {
        self.bounds
    }

    /// Applies one step of the forgetting update for the rate `r_i` and returns
    /// the new `(r_min, r_max)`. The first call seeds both extremes with `r_i`.
    ///
    /// A decayed extreme that would pass `r_i` is taken over by `r_i`, so
    /// `r_min <= r_i <= r_max` holds after every update and the extremes never cross.
    pub fn update(&mut self, r_i: T) -> (T, T) {
        let next = match self.bounds {
            None => (r_i, r_i),
            Some((lo, hi)) => {
                let hi = if r_i <= hi { self.alpha * hi } else { r_i };
                let lo = if r_i >= lo { lo / self.alpha } else { r_i };
                (lo.min(r_i), hi.max(r_i))
            }
        };
        self.bounds = Some(next);
        next
    }
}
