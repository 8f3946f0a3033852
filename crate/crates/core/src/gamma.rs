//! The γ-filter: a per-event keep probability driven by processing-time
//! feedback and by where the current rate sits between its tracked extremes.
//!
//! `γ` is a KEEP probability: an event is kept iff `ρ < γ` with `ρ ~ U(0,1)`,
//! so `γ = 1` passes everything and `γ_min` caps the removed fraction at
//! `1 - γ_min`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{AsapError, Result};
use crate::events::Event;
use crate::scalar::{clamp, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaParams<T> {
    pub gamma_min: T,
    pub gamma_max: T,
    /// Processing-time bounds in seconds; shared with the packager.
    pub t_min: T,
    pub t_max: T,
}

impl<T: Scalar> Default for GammaParams<T> {
    fn default() -> Self {
        GammaParams { gamma_min: T::lit(0.2), gamma_max: T::one(), t_min: T::lit(1e-6), t_max: T::lit(0.1) }
    }
}

impl<T: Scalar> GammaParams<T> {
    pub fn new(gamma_min: T, gamma_max: T, t_min: T, t_max: T) -> Result<Self> {
        let p = GammaParams { gamma_min, gamma_max, t_min, t_max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (z, o) = (T::zero(), T::one());
        if !(z <= self.gamma_min && self.gamma_min <= self.gamma_max && self.gamma_max <= o) {
            return Err(AsapError::InvalidParams(format!(
                "need 0 <= gamma_min <= gamma_max <= 1, got {} and {}",
                self.gamma_min, self.gamma_max
            )));
        }
        if !(z < self.t_min && self.t_min < self.t_max) {
            return Err(AsapError::InvalidParams(format!(
                "need 0 < t_min < t_max, got {} and {}",
                self.t_min, self.t_max
            )));
        }
        Ok(())
    }
}

/// Upper operating level `γ̂` for the next package from the last processing time.
///
/// Linear from `γ_max` at `t_min` down to `γ_min` at `t_max`; `t_prev` is
/// clamped into `[t_min, t_max]` first.
pub fn update_gamma_hat<T: Scalar>(params: &GammaParams<T>, t_prev: T) -> T {
    let t = clamp(t_prev, params.t_min, params.t_max);
    let frac = (t - params.t_min) / (params.t_max - params.t_min);
    let g = params.gamma_max - frac * (params.gamma_max - params.gamma_min);
    clamp(g, params.gamma_min, params.gamma_max)
}

/// Per-event keep probability: `γ̂` at `r_min`, falling linearly to `γ_min` at `r_max`.
pub fn compute_gamma<T: Scalar>(gamma_hat: T, params: &GammaParams<T>, r_i: T, r_min: T, r_max: T) -> T {
    if r_max <= r_min {
        return gamma_hat;
    }
    let r = clamp(r_i, r_min, r_max);
    let frac = (r - r_min) / (r_max - r_min);
    gamma_hat - frac * (gamma_hat - params.gamma_min)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Keep,
    Drop,
}

impl Decision {
    pub fn is_keep(self) -> bool {
        self == Decision::Keep
    }
}

/// Per-event filter contract: an event and its current γ in, keep or drop out.
pub trait EventFilter<T> {
    fn decide(&mut self, event: &Event, gamma: T) -> Decision;
}

/// Uniform random removal.
///
/// Draws come from ChaCha8 seeded with a 64-bit seed (`ChaCha8Rng::seed_from_u64`).
/// Draw `i` is the `i`-th `f64` of that stream (53 random mantissa bits from one
/// 64-bit output), so decisions are a pure function of seed, draw index and γ.
#[derive(Clone, Debug)]
pub struct RandomRemoval {
    seed: u64,
    rng: ChaCha8Rng,
    draws: u64,
}

impl RandomRemoval {
    pub fn new(seed: u64) -> Self {
        RandomRemoval { seed, rng: ChaCha8Rng::seed_from_u64(seed), draws: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    fn draw(&mut self) -> f64 {
        self.draws += 1;
        self.rng.random::<f64>()
    }
}

impl<T: Scalar> EventFilter<T> for RandomRemoval {
    fn decide(&mut self, _event: &Event, gamma: T) -> Decision {
        let rho = self.draw();
        if rho < gamma.as_f64() {
            Decision::Keep
        } else {
            Decision::Drop
        }
    }
}

/// The γ-filter stage: current `γ̂` plus the removal strategy.
#[derive(Clone, Debug)]
pub struct GammaFilter<T, F = RandomRemoval> {
    params: GammaParams<T>,
    gamma_hat: T,
    filter: F,
}

impl<T: Scalar> GammaFilter<T, RandomRemoval> {
    pub fn random(params: GammaParams<T>, seed: u64) -> Result<Self> {
        GammaFilter::with_filter(params, RandomRemoval::new(seed))
    }
}

impl<T: Scalar, F: EventFilter<T>> GammaFilter<T, F> {
    /// Starts with `γ̂` as if the last processing time were `t_min`.
    pub fn with_filter(params: GammaParams<T>, filter: F) -> Result<Self> {
        params.validate()?;
        let gamma_hat = update_gamma_hat(&params, params.t_min);
        Ok(GammaFilter { params, gamma_hat, filter })
    }

    pub fn params(&self) -> &GammaParams<T> {
        &self.params
    }

    pub fn gamma_hat(&self) -> T {
        self.gamma_hat
    }

    /// Applies processing-time feedback; returns the new `γ̂`.
    pub fn on_feedback(&mut self, t_prev: T) -> T {
        self.gamma_hat = update_gamma_hat(&self.params, t_prev);
        self.gamma_hat
    }

    /// Computes `γ_i` for the event and lets the filter decide.
    pub fn process(&mut self, event: &Event, r_i: T, r_min: T, r_max: T) -> (T, Decision) {
        let gamma = compute_gamma(self.gamma_hat, &self.params, r_i, r_min, r_max);
        (gamma, self.filter.decide(event, gamma))
    }

    pub fn filter(&self) -> &F {
        &self.filter
    }
}
