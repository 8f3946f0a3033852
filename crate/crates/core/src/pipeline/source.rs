//! Synthetic event sources with Poisson arrivals, and trace replay.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{AsapError, Result};
use crate::events::{read_trace, Event, Polarity, MICROS_PER_SECOND};

/// Sensor resolution used for the synthetic payload (DAVIS346).
pub const SENSOR_WIDTH: u16 = 346;
pub const SENSOR_HEIGHT: u16 = 260;

/// Target event rate over time, in events per second.
#[derive(Clone, Debug, PartialEq)]
pub enum RateProfile {
    Constant(f64),
    /// Linear from `from` to `to` over `ramp_s`, then holds `to`; with
    /// `round_trip` it returns to `from` over the next `ramp_s` and repeats.
    Ramp { from: f64, to: f64, ramp_s: f64, round_trip: bool },
    /// `(start_s, rate)` pairs; the first must start at 0.
    Steps(Vec<(f64, f64)>),
    /// `burst` for the first `burst_s` of every `period_s`, `base` otherwise.
    Bursts { base: f64, burst: f64, period_s: f64, burst_s: f64 },
}

impl RateProfile {
    pub fn rate_at(&self, t_s: f64) -> f64 {
        match self {
            RateProfile::Constant(r) => *r,
            RateProfile::Ramp { from, to, ramp_s, round_trip } => {
                let mut x = t_s / ramp_s;
                if *round_trip {
                    x %= 2.0;
                    if x > 1.0 {
                        x = 2.0 - x;
                    }
                } else {
                    x = x.min(1.0);
                }
                from + (to - from) * x
            }
            RateProfile::Steps(steps) => {
                let i = steps.partition_point(|&(at, _)| at <= t_s).saturating_sub(1);
                steps[i].1
            }
            RateProfile::Bursts { base, burst, period_s, burst_s } => {
                if t_s % period_s < *burst_s {
                    *burst
                } else {
                    *base
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(AsapError::Scenario(m));
        let positive = |r: f64| r > 0.0 && r.is_finite();
        match self {
            RateProfile::Constant(r) if !positive(*r) => bad(format!("source rate must be positive, got {r}")),
            RateProfile::Ramp { from, to, ramp_s, .. } if !(positive(*from) && positive(*to) && *ramp_s > 0.0) => {
                bad(format!("ramp needs positive rates and duration, got {from}, {to}, {ramp_s}"))
            }
            RateProfile::Steps(steps) => {
                if steps.is_empty() || steps[0].0 != 0.0 {
                    return bad("rate steps must start at 0 s".into());
                }
                if steps.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return bad("rate step times must increase".into());
                }
                if steps.iter().any(|&(_, r)| !positive(r)) {
                    return bad("rate steps must be positive".into());
                }
                Ok(())
            }
            RateProfile::Bursts { base, burst, period_s, burst_s } => {
                if !(positive(*base) && positive(*burst) && *period_s > 0.0 && *burst_s > 0.0 && burst_s < period_s) {
                    return bad("bursts need positive rates and 0 < burst_s < period_s".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SourceSpec {
    Synthetic(RateProfile),
    Trace(PathBuf),
}

/// Poisson event stream following a [`RateProfile`].
///
/// Inter-arrival gaps are exponential at the rate in effect at the previous
/// arrival; coordinates and polarity are uniform.
pub struct SyntheticSource {
    profile: RateProfile,
    rng: ChaCha8Rng,
    t_s: f64,
    end_s: f64,
}

impl SyntheticSource {
    pub fn new(profile: RateProfile, duration_s: f64, seed: u64) -> Result<Self> {
        profile.validate()?;
        if !(duration_s > 0.0) {
            return Err(AsapError::Scenario(format!("duration must be positive, got {duration_s}")));
        }
        Ok(SyntheticSource { profile, rng: ChaCha8Rng::seed_from_u64(seed), t_s: 0.0, end_s: duration_s })
    }
}

impl Iterator for SyntheticSource {
    type Item = Result<Event>;

    fn next(&mut self) -> Option<Self::Item> {
        let rate = self.profile.rate_at(self.t_s);
        let gap: f64 = Exp1.sample(&mut self.rng);
        self.t_s += gap / rate;
        if self.t_s >= self.end_s {
            return None;
        }
        let t = (self.t_s * MICROS_PER_SECOND) as u64;
        let x = self.rng.random_range(0..SENSOR_WIDTH);
        let y = self.rng.random_range(0..SENSOR_HEIGHT);
        let polarity = if self.rng.random::<bool>() { Polarity::Positive } else { Polarity::Negative };
        Some(Ok(Event::new(t, x, y, polarity)))
    }
}

/// Opens the event stream described by `spec`.
pub fn source_generate(spec: &SourceSpec, duration_s: f64, seed: u64) -> Result<Box<dyn Iterator<Item = Result<Event>>>> {
    match spec {
        SourceSpec::Synthetic(profile) => Ok(Box::new(SyntheticSource::new(profile.clone(), duration_s, seed)?)),
        SourceSpec::Trace(path) => Ok(Box::new(read_trace(path)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::write_trace;

    fn collect(profile: RateProfile, duration: f64, seed: u64) -> Vec<Event> {
        SyntheticSource::new(profile, duration, seed).unwrap().map(|e| e.unwrap()).collect()
    }

    #[test]
    fn constant_rate_count() {
        let n = collect(RateProfile::Constant(1000.0), 1.0, 42).len();
        assert!((900..=1100).contains(&n), "{n} events");
    }

    #[test]
    fn deterministic_and_ordered() {
        let a = collect(RateProfile::Constant(50_000.0), 0.2, 9);
        let b = collect(RateProfile::Constant(50_000.0), 0.2, 9);
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].t <= w[1].t));
        assert!(a.iter().all(|e| e.x < SENSOR_WIDTH && e.y < SENSOR_HEIGHT));
    }

    #[test]
    fn ramp_profile_shape() {
        let p = RateProfile::Ramp { from: 1.0, to: 3.0, ramp_s: 2.0, round_trip: true };
        assert_eq!(p.rate_at(0.0), 1.0);
        assert_eq!(p.rate_at(1.0), 2.0);
        assert_eq!(p.rate_at(2.0), 3.0);
        assert_eq!(p.rate_at(3.0), 2.0);
        assert_eq!(p.rate_at(4.0), 1.0);
        let one_way = RateProfile::Ramp { from: 1.0, to: 3.0, ramp_s: 2.0, round_trip: false };
        assert_eq!(one_way.rate_at(10.0), 3.0);
    }

    #[test]
    fn ramp_reaches_final_rate() {
        // 500 -> 8000 ev/ms over 20 s; only the last second is generated
        let p = RateProfile::Ramp { from: 5e5, to: 8e6, ramp_s: 20.0, round_trip: false };
        let mut src = SyntheticSource::new(p, 20.0, 3).unwrap();
        src.t_s = 19.0;
        let n = src.count() as f64;
        assert!((n - 8e6).abs() < 0.1 * 8e6, "{n} events in the final second");
    }

    #[test]
    fn steps_and_bursts() {
        let s = RateProfile::Steps(vec![(0.0, 10.0), (1.0, 20.0)]);
        assert_eq!((s.rate_at(0.5), s.rate_at(1.0)), (10.0, 20.0));
        let b = RateProfile::Bursts { base: 1.0, burst: 9.0, period_s: 1.0, burst_s: 0.25 };
        assert_eq!((b.rate_at(0.1), b.rate_at(0.5), b.rate_at(1.1)), (9.0, 1.0, 9.0));
    }

    #[test]
    fn invalid_profiles() {
        assert!(RateProfile::Constant(0.0).validate().is_err());
        assert!(RateProfile::Steps(vec![(0.5, 1.0)]).validate().is_err());
        assert!(SyntheticSource::new(RateProfile::Constant(1.0), 0.0, 0).is_err());
    }

    #[test]
    fn trace_replay_identity() {
        let events = collect(RateProfile::Constant(10_000.0), 0.05, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace(&events, &path).unwrap();
        let replay: Vec<Event> =
            source_generate(&SourceSpec::Trace(path), 1.0, 0).unwrap().map(|e| e.unwrap()).collect();
        assert_eq!(replay, events);
    }
}
