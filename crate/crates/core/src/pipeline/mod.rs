//! The closed loop: source, γ-filter, packager, delivery queue and processor,
//! with processing-time feedback to both adaptive stages.

mod clock;
mod engine;
mod scenario;
mod source;
mod wall;
mod workload;

pub use clock::{ClockMode, VirtualClock};
pub use engine::{
    run, settling_report, write_gamma_trace, write_summary, GammaHatSample, GammaSample, RunOutput, Settling, Summary,
    GAMMA_TRACE_HEADER, SETTLING_BAND,
};
pub use scenario::{AsapConfig, DeliveryPolicy, Scenario, ScenarioFile};
pub use source::{source_generate, RateProfile, SourceSpec, SyntheticSource, SENSOR_HEIGHT, SENSOR_WIDTH};
pub use wall::{run_wall, WallReport};
pub use workload::{CostStep, Workload, WorkloadKind};
