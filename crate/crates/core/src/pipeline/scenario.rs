//! Run configuration and the flat key-value scenario file.
//!
//! Scenario files are flat TOML. Rates are in events per second, times in
//! seconds unless the key says otherwise. Keys (defaults in brackets):
//!
//! | key | meaning |
//! |-----|---------|
//! | `duration_s` | simulated stream length (required) |
//! | `seed` | master seed [0] |
//! | `source` | `constant`, `ramp`, `steps`, `bursts` or `trace` [`constant`] |
//! | `rate` | constant rate; ramp start; burst base rate |
//! | `rate_to`, `ramp_s`, `round_trip` | ramp end rate, ramp duration, triangle wave [false] |
//! | `rate_steps` | `[[start_s, rate], ...]` |
//! | `burst_rate`, `burst_period_s`, `burst_s` | burst train |
//! | `trace` | path of a `t_us,x,y,p` CSV, relative to the scenario file |
//! | `workload` | `power_law`, `step_schedule`, `sinusoid` or `scripted` [`power_law`] |
//! | `beta0`, `beta1`, `exponent` | `t = beta0 + beta1·s^exponent` [1e-4, 1e-6, 1] |
//! | `workload_steps` | `[[start_s, factor, order], ...]`; cost `beta0 + factor·beta1·s^order` |
//! | `sin_t_low`, `sin_t_high`, `sin_period_s` | sinusoidal cost [t_min, t_max, 4] |
//! | `script` | `[t_0, t_1, ...]` processing times |
//! | `policy` | `asap`, `fixed_size` or `fixed_rate` [`asap`] |
//! | `package_size`, `package_hz` | static policy parameters |
//! | `gamma_min`, `gamma_max` | [0.2, 1.0] |
//! | `t_min`, `t_max`, `s_min`, `s_max`, `kappa` | [1e-6, 0.1, 1, 1000, 5] |
//! | `use_taylor`, `taylor_order`, `taylor_points` | [false, 5, 64] |
//! | `alpha`, `window_us` | rate forgetting factor per event, rate window [1 - 1e-8, 1000] |
//! | `transport_us` | delivery delay between package close and earliest processing start [0] |
//! | `max_package_age_us` | flush packages older than this (unset: wait indefinitely) |
//! | `gamma_trace_stride` | record every n-th event's γ sample (unset: no trace) |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::PowerLaw;
use crate::error::{AsapError, Result};
use crate::gamma::GammaParams;
use crate::packager::{PackagerParams, TaylorTable, DEFAULT_TAYLOR_ORDER, DEFAULT_TAYLOR_POINTS};
use crate::rate::{DEFAULT_ALPHA, DEFAULT_WINDOW_US};

use super::source::{RateProfile, SourceSpec};
use super::workload::{CostStep, Workload, WorkloadKind};

/// Control-law parameters plus harness settings.
#[derive(Clone, Debug, PartialEq)]
pub struct AsapConfig {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub s_min: usize,
    pub s_max: usize,
    pub kappa: f64,
    pub use_taylor: bool,
    pub taylor_order: usize,
    pub taylor_points: usize,
    pub alpha: f64,
    pub window_us: u64,
    pub transport_us: f64,
    pub max_package_age_us: Option<u64>,
    pub gamma_trace_stride: Option<u64>,
}

impl Default for AsapConfig {
    fn default() -> Self {
        AsapConfig {
            gamma_min: 0.2,
            gamma_max: 1.0,
            t_min: 1e-6,
            t_max: 0.1,
            s_min: 1,
            s_max: 1000,
            kappa: 5.0,
            use_taylor: false,
            taylor_order: DEFAULT_TAYLOR_ORDER,
            taylor_points: DEFAULT_TAYLOR_POINTS,
            alpha: DEFAULT_ALPHA,
            window_us: DEFAULT_WINDOW_US,
            transport_us: 0.0,
            max_package_age_us: None,
            gamma_trace_stride: None,
        }
    }
}

impl AsapConfig {
    pub fn packager_params(&self) -> Result<PackagerParams<f64>> {
        PackagerParams::new(self.s_min, self.s_max, self.t_min, self.t_max, self.kappa)
    }

    pub fn gamma_params(&self) -> Result<GammaParams<f64>> {
        GammaParams::new(self.gamma_min, self.gamma_max, self.t_min, self.t_max)
    }

    pub fn taylor_table(&self) -> Result<TaylorTable<f64>> {
        TaylorTable::build(self.t_min, self.t_max, self.kappa, self.taylor_order, self.taylor_points)
    }

    pub fn validate(&self) -> Result<()> {
        let scenario = |e: AsapError| AsapError::Scenario(e.to_string());
        self.packager_params().map_err(scenario)?;
        self.gamma_params().map_err(scenario)?;
        if self.use_taylor {
            self.taylor_table().map_err(scenario)?;
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(AsapError::Scenario(format!("alpha must be in (0, 1], got {}", self.alpha)));
        }
        if self.window_us == 0 {
            return Err(AsapError::Scenario("window_us must be positive".into()));
        }
        if !(self.transport_us >= 0.0 && self.transport_us.is_finite()) {
            return Err(AsapError::Scenario(format!("transport_us must be >= 0, got {}", self.transport_us)));
        }
        if self.gamma_trace_stride == Some(0) || self.max_package_age_us == Some(0) {
            return Err(AsapError::Scenario("gamma_trace_stride and max_package_age_us must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeliveryPolicy {
    Asap,
    FixedSize(usize),
    FixedRate(f64),
}

impl DeliveryPolicy {
    pub fn label(&self) -> String {
        match self {
            DeliveryPolicy::Asap => "asap".into(),
            DeliveryPolicy::FixedSize(n) => format!("fixed_size_{n}"),
            DeliveryPolicy::FixedRate(f) => format!("fixed_rate_{f}hz"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DeliveryPolicy::FixedSize(0) => Err(AsapError::Scenario("fixed package size must be at least 1".into())),
            DeliveryPolicy::FixedRate(f) if !(f > 0.0 && f.is_finite()) => {
                Err(AsapError::Scenario(format!("fixed package rate must be positive, got {f}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub source: SourceSpec,
    pub workload: WorkloadKind,
    pub policy: DeliveryPolicy,
    pub duration_s: f64,
    pub config: AsapConfig,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(AsapError::Scenario(format!("duration must be positive, got {}", self.duration_s)));
        }
        if let SourceSpec::Synthetic(p) = &self.source {
            p.validate()?;
        }
        Workload::new(self.workload.clone())?;
        self.policy.validate()?;
        self.config.validate()
    }

    /// Parses a scenario file; relative trace paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| AsapError::Scenario(e.to_string()))?;
        file.into_scenario(base_dir)
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| AsapError::Scenario(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, path.parent())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&ScenarioFile::from(self)).expect("scenario file serializes")
    }
}

/// On-disk form of a [`Scenario`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub duration_s: Option<f64>,
    pub seed: Option<u64>,

    pub source: Option<String>,
    pub rate: Option<f64>,
    pub rate_to: Option<f64>,
    pub ramp_s: Option<f64>,
    pub round_trip: Option<bool>,
    pub rate_steps: Option<Vec<[f64; 2]>>,
    pub burst_rate: Option<f64>,
    pub burst_period_s: Option<f64>,
    pub burst_s: Option<f64>,
    pub trace: Option<String>,

    pub workload: Option<String>,
    pub beta0: Option<f64>,
    pub beta1: Option<f64>,
    pub exponent: Option<u32>,
    pub workload_steps: Option<Vec<[f64; 3]>>,
    pub sin_t_low: Option<f64>,
    pub sin_t_high: Option<f64>,
    pub sin_period_s: Option<f64>,
    pub script: Option<Vec<f64>>,

    pub policy: Option<String>,
    pub package_size: Option<usize>,
    pub package_hz: Option<f64>,

    pub gamma_min: Option<f64>,
    pub gamma_max: Option<f64>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub s_min: Option<usize>,
    pub s_max: Option<usize>,
    pub kappa: Option<f64>,
    pub use_taylor: Option<bool>,
    pub taylor_order: Option<usize>,
    pub taylor_points: Option<usize>,
    pub alpha: Option<f64>,
    pub window_us: Option<u64>,
    pub transport_us: Option<f64>,
    pub max_package_age_us: Option<u64>,
    pub gamma_trace_stride: Option<u64>,
}

fn missing(key: &str, what: &str) -> AsapError {
    AsapError::Scenario(format!("`{key}` is required for {what}"))
}

impl ScenarioFile {
    pub fn into_scenario(self, base_dir: Option<&Path>) -> Result<Scenario> {
        let d = AsapConfig::default();
        let config = AsapConfig {
            gamma_min: self.gamma_min.unwrap_or(d.gamma_min),
            gamma_max: self.gamma_max.unwrap_or(d.gamma_max),
            t_min: self.t_min.unwrap_or(d.t_min),
            t_max: self.t_max.unwrap_or(d.t_max),
            s_min: self.s_min.unwrap_or(d.s_min),
            s_max: self.s_max.unwrap_or(d.s_max),
            kappa: self.kappa.unwrap_or(d.kappa),
            use_taylor: self.use_taylor.unwrap_or(d.use_taylor),
            taylor_order: self.taylor_order.unwrap_or(d.taylor_order),
            taylor_points: self.taylor_points.unwrap_or(d.taylor_points),
            alpha: self.alpha.unwrap_or(d.alpha),
            window_us: self.window_us.unwrap_or(d.window_us),
            transport_us: self.transport_us.unwrap_or(d.transport_us),
            max_package_age_us: self.max_package_age_us,
            gamma_trace_stride: self.gamma_trace_stride,
        };

        let source = match self.source.as_deref().unwrap_or("constant") {
            "constant" => SourceSpec::Synthetic(RateProfile::Constant(self.rate.ok_or_else(|| missing("rate", "a constant source"))?)),
            "ramp" => SourceSpec::Synthetic(RateProfile::Ramp {
                from: self.rate.ok_or_else(|| missing("rate", "a ramp source"))?,
                to: self.rate_to.ok_or_else(|| missing("rate_to", "a ramp source"))?,
                ramp_s: self.ramp_s.ok_or_else(|| missing("ramp_s", "a ramp source"))?,
                round_trip: self.round_trip.unwrap_or(false),
            }),
            "steps" => SourceSpec::Synthetic(RateProfile::Steps(
                self.rate_steps
                    .ok_or_else(|| missing("rate_steps", "a steps source"))?
                    .into_iter()
                    .map(|[at, r]| (at, r))
                    .collect(),
            )),
            "bursts" => SourceSpec::Synthetic(RateProfile::Bursts {
                base: self.rate.ok_or_else(|| missing("rate", "a burst source"))?,
                burst: self.burst_rate.ok_or_else(|| missing("burst_rate", "a burst source"))?,
                period_s: self.burst_period_s.ok_or_else(|| missing("burst_period_s", "a burst source"))?,
                burst_s: self.burst_s.ok_or_else(|| missing("burst_s", "a burst source"))?,
            }),
            "trace" => {
                let p = PathBuf::from(self.trace.ok_or_else(|| missing("trace", "a trace source"))?);
                SourceSpec::Trace(match base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p,
                })
            }
            other => return Err(AsapError::Scenario(format!("unknown source `{other}`"))),
        };

        let beta0 = self.beta0.unwrap_or(1e-4);
        let beta1 = self.beta1.unwrap_or(1e-6);
        let workload = match self.workload.as_deref().unwrap_or("power_law") {
            "power_law" => WorkloadKind::PowerLaw(PowerLaw { beta0, beta1, exponent: self.exponent.unwrap_or(1) }),
            "step_schedule" => WorkloadKind::StepSchedule {
                beta0,
                beta1,
                steps: self
                    .workload_steps
                    .ok_or_else(|| missing("workload_steps", "a step schedule"))?
                    .into_iter()
                    .map(|[at_s, factor, order]| {
                        if order < 1.0 || order.fract() != 0.0 {
                            return Err(AsapError::Scenario(format!("complexity order must be a positive integer, got {order}")));
                        }
                        Ok(CostStep { at_s, factor, order: order as u32 })
                    })
                    .collect::<Result<_>>()?,
            },
            "sinusoid" => WorkloadKind::Sinusoid {
                t_low: self.sin_t_low.unwrap_or(config.t_min),
                t_high: self.sin_t_high.unwrap_or(config.t_max),
                period_s: self.sin_period_s.unwrap_or(4.0),
            },
            "scripted" => WorkloadKind::Scripted(self.script.ok_or_else(|| missing("script", "a scripted workload"))?),
            other => return Err(AsapError::Scenario(format!("unknown workload `{other}`"))),
        };

        let policy = match self.policy.as_deref().unwrap_or("asap") {
            "asap" => DeliveryPolicy::Asap,
            "fixed_size" => DeliveryPolicy::FixedSize(self.package_size.ok_or_else(|| missing("package_size", "fixed_size"))?),
            "fixed_rate" => DeliveryPolicy::FixedRate(self.package_hz.ok_or_else(|| missing("package_hz", "fixed_rate"))?),
            other => return Err(AsapError::Scenario(format!("unknown policy `{other}`"))),
        };

        let scenario = Scenario {
            source,
            workload,
            policy,
            duration_s: self.duration_s.ok_or_else(|| missing("duration_s", "every scenario"))?,
            config,
            seed: self.seed.unwrap_or(0),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let c = &s.config;
        let mut f = ScenarioFile {
            duration_s: Some(s.duration_s),
            seed: Some(s.seed),
            gamma_min: Some(c.gamma_min),
            gamma_max: Some(c.gamma_max),
            t_min: Some(c.t_min),
            t_max: Some(c.t_max),
            s_min: Some(c.s_min),
            s_max: Some(c.s_max),
            kappa: Some(c.kappa),
            use_taylor: Some(c.use_taylor),
            taylor_order: Some(c.taylor_order),
            taylor_points: Some(c.taylor_points),
            alpha: Some(c.alpha),
            window_us: Some(c.window_us),
            transport_us: Some(c.transport_us),
            max_package_age_us: c.max_package_age_us,
            gamma_trace_stride: c.gamma_trace_stride,
            ..Default::default()
        };
        match &s.source {
            SourceSpec::Synthetic(RateProfile::Constant(r)) => {
                f.source = Some("constant".into());
                f.rate = Some(*r);
            }
            SourceSpec::Synthetic(RateProfile::Ramp { from, to, ramp_s, round_trip }) => {
                f.source = Some("ramp".into());
                f.rate = Some(*from);
                f.rate_to = Some(*to);
                f.ramp_s = Some(*ramp_s);
                f.round_trip = Some(*round_trip);
            }
            SourceSpec::Synthetic(RateProfile::Steps(steps)) => {
                f.source = Some("steps".into());
                f.rate_steps = Some(steps.iter().map(|&(a, r)| [a, r]).collect());
            }
            SourceSpec::Synthetic(RateProfile::Bursts { base, burst, period_s, burst_s }) => {
                f.source = Some("bursts".into());
                f.rate = Some(*base);
                f.burst_rate = Some(*burst);
                f.burst_period_s = Some(*period_s);
                f.burst_s = Some(*burst_s);
            }
            SourceSpec::Trace(p) => {
                f.source = Some("trace".into());
                f.trace = Some(p.display().to_string());
            }
        }
        match &s.workload {
            WorkloadKind::PowerLaw(g) => {
                f.workload = Some("power_law".into());
                f.beta0 = Some(g.beta0);
                f.beta1 = Some(g.beta1);
                f.exponent = Some(g.exponent);
            }
            WorkloadKind::StepSchedule { beta0, beta1, steps } => {
                f.workload = Some("step_schedule".into());
                f.beta0 = Some(*beta0);
                f.beta1 = Some(*beta1);
                f.workload_steps = Some(steps.iter().map(|s| [s.at_s, s.factor, s.order as f64]).collect());
            }
            WorkloadKind::Sinusoid { t_low, t_high, period_s } => {
                f.workload = Some("sinusoid".into());
                f.sin_t_low = Some(*t_low);
                f.sin_t_high = Some(*t_high);
                f.sin_period_s = Some(*period_s);
            }
            WorkloadKind::Scripted(costs) => {
                f.workload = Some("scripted".into());
                f.script = Some(costs.clone());
            }
        }
        match s.policy {
            DeliveryPolicy::Asap => f.policy = Some("asap".into()),
            DeliveryPolicy::FixedSize(n) => {
                f.policy = Some("fixed_size".into());
                f.package_size = Some(n);
            }
            DeliveryPolicy::FixedRate(hz) => {
                f.policy = Some("fixed_rate".into());
                f.package_hz = Some(hz);
            }
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_uses_defaults() {
        let s = Scenario::from_toml_str("duration_s = 1.0\nrate = 70000.0\n", None).unwrap();
        assert_eq!(s.config, AsapConfig::default());
        assert_eq!(s.policy, DeliveryPolicy::Asap);
        assert_eq!(s.source, SourceSpec::Synthetic(RateProfile::Constant(70_000.0)));
    }

    #[test]
    fn round_trips_through_text() {
        let text = r#"
            duration_s = 3.0
            seed = 9
            source = "ramp"
            rate = 5.0e5
            rate_to = 8.0e6
            ramp_s = 1.5
            round_trip = true
            workload = "step_schedule"
            beta0 = 1e-5
            beta1 = 1e-7
            workload_steps = [[0.0, 10.0, 1.0], [1.0, 50.0, 1.0]]
            policy = "fixed_rate"
            package_hz = 100.0
            transport_us = 50.0
            gamma_trace_stride = 100
        "#;
        let s = Scenario::from_toml_str(text, None).unwrap();
        let again = Scenario::from_toml_str(&s.to_toml_string(), None).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn trace_path_is_relative_to_file() {
        let s = Scenario::from_toml_str("duration_s = 1.0\nsource = \"trace\"\ntrace = \"ev.csv\"\n", Some(Path::new("/data"))).unwrap();
        assert_eq!(s.source, SourceSpec::Trace(PathBuf::from("/data/ev.csv")));
    }

    #[test]
    fn validation_errors() {
        let cases = [
            "rate = 1.0\n",
            "duration_s = 1.0\n",
            "duration_s = 1.0\nrate = 1.0\npolicy = \"fixed_size\"\n",
            "duration_s = 1.0\nrate = 1.0\npolicy = \"fixed_size\"\npackage_size = 0\n",
            "duration_s = 1.0\nrate = 1.0\nsource = \"warp\"\n",
            "duration_s = 1.0\nrate = 1.0\ns_max = 1\n",
            "duration_s = 1.0\nrate = 1.0\nalpha = 0.0\n",
            "duration_s = 1.0\nrate = 1.0\nunknown_key = 3\n",
            "duration_s = -1.0\nrate = 1.0\n",
            "duration_s = 1.0\nrate = 1.0\nworkload = \"step_schedule\"\nworkload_steps = [[0.0, 1.0, 1.5]]\n",
        ];
        for text in cases {
            assert!(matches!(Scenario::from_toml_str(text, None), Err(AsapError::Scenario(_))), "{text}");
        }
    }
}
