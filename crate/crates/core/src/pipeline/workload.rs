//! Synthetic processing-cost models standing in for an event algorithm.

use std::f64::consts::TAU;

use crate::analysis::{CostModel, PowerLaw};
use crate::error::{AsapError, Result};

/// One segment of a step schedule: from `at_s` on, the cost is
/// `beta0 + factor·beta1·s^order`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostStep {
    pub at_s: f64,
    pub factor: f64,
    pub order: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum WorkloadKind {
    PowerLaw(PowerLaw<f64>),
    StepSchedule { beta0: f64, beta1: f64, steps: Vec<CostStep> },
    /// Cost oscillating between `t_low` and `t_high` (starting at `t_low`), independent of size.
    Sinusoid { t_low: f64, t_high: f64, period_s: f64 },
    /// Explicit processing times, consumed one per package.
    Scripted(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Workload {
    kind: WorkloadKind,
    cursor: usize,
}

impl Workload {
    pub fn new(kind: WorkloadKind) -> Result<Self> {
        validate(&kind)?;
        Ok(Workload { kind, cursor: 0 })
    }

    pub fn power_law(beta0: f64, beta1: f64, exponent: u32) -> Result<Self> {
        Self::new(WorkloadKind::PowerLaw(PowerLaw::new(beta0, beta1, exponent)?))
    }

    pub fn kind(&self) -> &WorkloadKind {
        &self.kind
    }

    /// Instants (seconds) where the cost model changes abruptly.
    pub fn disturbances(&self) -> Vec<f64> {
        match &self.kind {
            WorkloadKind::StepSchedule { steps, .. } => steps.iter().skip(1).map(|s| s.at_s).collect(),
            _ => Vec::new(),
        }
    }

    /// Processing time in seconds for a package of `s` events starting at `now_ns`.
    pub fn simulate_cost(&mut self, s: usize, now_ns: u64) -> Result<f64> {
        let s = s as f64;
        let now_s = now_ns as f64 * 1e-9;
        match &self.kind {
            WorkloadKind::PowerLaw(g) => Ok(g.cost(s)),
            WorkloadKind::StepSchedule { beta0, beta1, steps } => {
                let i = steps.partition_point(|st| st.at_s <= now_s).saturating_sub(1);
                let st = steps[i];
                Ok(beta0 + st.factor * beta1 * s.powi(st.order as i32))
            }
            WorkloadKind::Sinusoid { t_low, t_high, period_s } => {
                let phase = TAU * now_s / period_s;
                Ok(t_low + (t_high - t_low) * 0.5 * (1.0 - phase.cos()))
            }
            WorkloadKind::Scripted(costs) => {
                let t = *costs.get(self.cursor).ok_or(AsapError::ScriptExhausted(self.cursor))?;
                self.cursor += 1;
                Ok(t)
            }
        }
    }
}

fn validate(kind: &WorkloadKind) -> Result<()> {
    let bad = |m: String| Err(AsapError::Scenario(m));
    match kind {
        WorkloadKind::PowerLaw(g) => {
            if !(g.beta0 >= 0.0 && g.beta1 > 0.0 && g.exponent >= 1 && (g.beta0 > 0.0 || g.beta1 > 0.0)) {
                return bad(format!("power law needs beta0 >= 0, beta1 > 0, exponent >= 1: {g:?}"));
            }
        }
        WorkloadKind::StepSchedule { beta0, beta1, steps } => {
            if !(*beta0 >= 0.0 && *beta1 > 0.0) {
                return bad(format!("step schedule needs beta0 >= 0 and beta1 > 0, got {beta0}, {beta1}"));
            }
            if steps.is_empty() || steps[0].at_s != 0.0 {
                return bad("step schedule must start with a step at 0 s".into());
            }
            if steps.windows(2).any(|w| w[1].at_s <= w[0].at_s) {
                return bad("step schedule switch times must increase".into());
            }
            if steps.iter().any(|s| !(s.factor > 0.0) || s.order == 0) {
                return bad("step factors must be positive and orders at least 1".into());
            }
        }
        WorkloadKind::Sinusoid { t_low, t_high, period_s } => {
            if !(*t_low > 0.0 && t_high >= t_low && *period_s > 0.0) {
                return bad(format!("sinusoid needs 0 < t_low <= t_high and period > 0, got {t_low}, {t_high}, {period_s}"));
            }
        }
        WorkloadKind::Scripted(costs) => {
            if costs.iter().any(|&t| !(t > 0.0)) {
                return bad("scripted costs must be positive".into());
            }
        }
    }
    Ok(())
}
