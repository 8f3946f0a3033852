//! Adaptive event handling for event-camera streams.
//!
//! Two closed loops keep a downstream event processor responsive: a γ-filter
//! that randomly removes an adaptive fraction of the incoming events, and an
//! adaptive packager that sizes event packages from the processing time of
//! the previous package. [`pipeline`] wires both to a simulated processor on
//! a virtual clock; [`analysis`] studies the convergence of the packaging loop.
//!
//! The control laws are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod analysis;
pub mod error;
pub mod events;
pub mod gamma;
pub mod packager;
pub mod pipeline;
pub mod rate;
pub mod scalar;

pub use error::{AsapError, Result};
pub use events::{Closure, Event, EventPackage, PackageMetrics, Polarity, Timestamp};
pub use scalar::Scalar;

pub type PackagerParamsF64 = packager::PackagerParams<f64>;
pub type PackagerParamsF32 = packager::PackagerParams<f32>;
pub type TaylorTableF64 = packager::TaylorTable<f64>;
pub type TaylorTableF32 = packager::TaylorTable<f32>;
pub type GammaParamsF64 = gamma::GammaParams<f64>;
pub type GammaParamsF32 = gamma::GammaParams<f32>;
pub type GammaFilterF64 = gamma::GammaFilter<f64>;
pub type RateTrackerF64 = rate::RateTracker<f64>;
pub type RateBoundsF64 = rate::RateBounds<f64>;
pub type RateBoundsF32 = rate::RateBounds<f32>;
pub type PowerLawF64 = analysis::PowerLaw<f64>;
pub type IterationTraceF64 = analysis::IterationTrace<f64>;
