//! Built-in experiment shapes at desk scale.

use std::fmt;
use std::str::FromStr;

use asap_core::analysis::{fixed_point_bisect, PowerLaw};
use asap_core::packager::PackagerParams;
use asap_core::pipeline::{AsapConfig, CostStep, DeliveryPolicy, RateProfile, Scenario, SourceSpec, WorkloadKind};
use asap_core::Result;

/// Delivery delay applied in every preset, in microseconds.
pub const PRESET_TRANSPORT_US: f64 = 50.0;

/// Constant source rate of the step and static presets (70 ev/ms).
pub const STEADY_RATE: f64 = 70_000.0;

/// Cost factors of the complexity sweep, one per segment.
pub const SWEEP_FACTORS: [f64; 7] = [10.0, 50.0, 200.0, 500.0, 200.0, 50.0, 10.0];
pub const SWEEP_SEGMENT_S: f64 = 2.0;

/// `(order, beta0, beta1)` of each complexity sweep run.
pub const SWEEP_COSTS: [(u32, f64, f64); 3] = [(1, 5e-6, 1.5e-8), (2, 1e-5, 7e-12), (3, 1e-5, 1e-13)];

/// Cost of the static comparison: `2 ms + 1 us/event`.
pub const STATIC_COST: (f64, f64) = (2e-3, 1e-6);

pub const STATIC_POLICIES: [DeliveryPolicy; 7] = [
    DeliveryPolicy::Asap,
    DeliveryPolicy::FixedSize(10),
    DeliveryPolicy::FixedSize(500),
    DeliveryPolicy::FixedSize(1000),
    DeliveryPolicy::FixedRate(50.0),
    DeliveryPolicy::FixedRate(100.0),
    DeliveryPolicy::FixedRate(500.0),
];

pub const RAMP_LOW: f64 = 5e5;
pub const RAMP_HIGH: f64 = 8e6;
pub const RAMP_LEG_S: f64 = 2.0;
pub const RAMP_TRACE_STRIDE: u64 = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    StepComplexity,
    ComplexitySweep,
    RateRamp,
    SinusoidCost,
    StaticComparison,
    ConvergenceGrid,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::StepComplexity,
        Preset::ComplexitySweep,
        Preset::RateRamp,
        Preset::SinusoidCost,
        Preset::StaticComparison,
        Preset::ConvergenceGrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::StepComplexity => "step-complexity",
            Preset::ComplexitySweep => "complexity-sweep",
            Preset::RateRamp => "rate-ramp",
            Preset::SinusoidCost => "sinusoid-cost",
            Preset::StaticComparison => "static-comparison",
            Preset::ConvergenceGrid => "convergence-grid",
        }
    }

    /// Labelled scenarios run by this preset; empty for the grid.
    pub fn scenarios(self, seed: u64) -> Vec<(String, Scenario)> {
        match self {
            Preset::StepComplexity => vec![("step_complexity".into(), step_complexity(seed))],
            Preset::ComplexitySweep => SWEEP_COSTS
                .iter()
                .map(|&(p, b0, b1)| (format!("complexity_p{p}"), complexity_sweep(p, b0, b1, seed)))
                .collect(),
            Preset::RateRamp => vec![("rate_ramp".into(), rate_ramp(seed))],
            Preset::SinusoidCost => vec![("sinusoid_cost".into(), sinusoid_cost(seed))],
            Preset::StaticComparison => {
                STATIC_POLICIES.iter().map(|&p| (p.label(), static_comparison(p, seed))).collect()
            }
            Preset::ConvergenceGrid => Vec::new(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
            format!("unknown preset `{s}` (expected one of: {})", names.join(", "))
        })
    }
}

fn config() -> AsapConfig {
    AsapConfig { transport_us: PRESET_TRANSPORT_US, ..AsapConfig::default() }
}

/// Constant 70 ev/ms; the per-event cost steps up 25x after 2 s.
pub fn step_complexity(seed: u64) -> Scenario {
    Scenario {
        source: SourceSpec::Synthetic(RateProfile::Constant(STEADY_RATE)),
        workload: WorkloadKind::StepSchedule {
            beta0: 1e-5,
            beta1: 1e-7,
            steps: vec![
                CostStep { at_s: 0.0, factor: 1.0, order: 1 },
                CostStep { at_s: 2.0, factor: 25.0, order: 1 },
            ],
        },
        policy: DeliveryPolicy::Asap,
        duration_s: 4.0,
        config: config(),
        seed,
    }
}

/// Cost `beta0 + n·beta1·s^p` with `n` following [`SWEEP_FACTORS`].
pub fn complexity_sweep(order: u32, beta0: f64, beta1: f64, seed: u64) -> Scenario {
    let steps = SWEEP_FACTORS
        .iter()
        .enumerate()
        .map(|(j, &factor)| CostStep { at_s: j as f64 * SWEEP_SEGMENT_S, factor, order })
        .collect();
    Scenario {
        source: SourceSpec::Synthetic(RateProfile::Constant(STEADY_RATE)),
        workload: WorkloadKind::StepSchedule { beta0, beta1, steps },
        policy: DeliveryPolicy::Asap,
        duration_s: SWEEP_FACTORS.len() as f64 * SWEEP_SEGMENT_S,
        config: config(),
        seed,
    }
}

/// 500 to 8000 ev/ms and back, twice, with a near-constant cheap cost.
pub fn rate_ramp(seed: u64) -> Scenario {
    Scenario {
        source: SourceSpec::Synthetic(RateProfile::Ramp {
            from: RAMP_LOW,
            to: RAMP_HIGH,
            ramp_s: RAMP_LEG_S,
            round_trip: true,
        }),
        workload: WorkloadKind::PowerLaw(PowerLaw { beta0: 1e-5, beta1: 1e-10, exponent: 1 }),
        policy: DeliveryPolicy::Asap,
        duration_s: 4.0 * RAMP_LEG_S,
        config: AsapConfig { gamma_trace_stride: Some(RAMP_TRACE_STRIDE), ..config() },
        seed,
    }
}

/// Processing time oscillating between `t_min` and `t_max` with a 10 s period.
pub fn sinusoid_cost(seed: u64) -> Scenario {
    let cfg = config();
    Scenario {
        source: SourceSpec::Synthetic(RateProfile::Constant(10_000.0)),
        workload: WorkloadKind::Sinusoid { t_low: cfg.t_min, t_high: cfg.t_max, period_s: 10.0 },
        policy: DeliveryPolicy::Asap,
        duration_s: 20.0,
        config: cfg,
        seed,
    }
}

pub fn static_comparison(policy: DeliveryPolicy, seed: u64) -> Scenario {
    let (beta0, beta1) = STATIC_COST;
    Scenario {
        source: SourceSpec::Synthetic(RateProfile::Constant(STEADY_RATE)),
        workload: WorkloadKind::PowerLaw(PowerLaw { beta0, beta1, exponent: 1 }),
        policy,
        duration_s: 5.0,
        config: config(),
        seed,
    }
}

/// Log-spaced cost coefficients `10^(-6 + 5j/9)`, `j = 0..9`, spanning `(0, 0.1]`.
pub fn grid_axis() -> Vec<f64> {
    (0..10).map(|j| 10f64.powf(-6.0 + 5.0 * j as f64 / 9.0)).collect()
}

/// Fixed points of the affine closed loop over the grid, with `s` in
/// `[1, 1000]` and `t` in `[1e-6, 0.1]`. Rows are `(beta0, beta1, s_star)`.
pub fn convergence_grid() -> Result<Vec<(f64, f64, f64)>> {
    let params = PackagerParams::new(1, 1000, 1e-6, 0.1, 5.0)?;
    let axis = grid_axis();
    let mut rows = Vec::with_capacity(axis.len() * axis.len());
    for &b0 in &axis {
        for &b1 in &axis {
            let g = PowerLaw::affine(b0, b1)?;
            rows.push((b0, b1, fixed_point_bisect(&params, &g, 1e-9)?));
        }
    }
    Ok(rows)
}
