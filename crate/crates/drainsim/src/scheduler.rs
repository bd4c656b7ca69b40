//! Execution-frequency amplification: cron/heartbeat firing of a scenario
//! over a simulated horizon, with aggregate accounting.
//!
//! Firings are independent fresh sessions (the measurement methodology the
//! whole simulator follows), so for deterministic policies the aggregate is
//! exactly `firings × single-run totals`. No user-facing output exists in
//! this mode: exposure is zero by construction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::TokenCount;
use crate::engine::{run_session, EngineError, RunReport, RunTotals, Scenario};

/// Firing plan: one fresh session every `interval_seconds` of simulated time
/// across `horizon_seconds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub interval_seconds: u64,
    pub horizon_seconds: u64,
}

impl Schedule {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.interval_seconds == 0 {
            return Err(ScheduleError::InvalidSchedule(
                "interval must be positive".into(),
            ));
        }
        if self.horizon_seconds < self.interval_seconds {
            return Err(ScheduleError::InvalidSchedule(
                "horizon must be at least one interval".into(),
            ));
        }
        Ok(())
    }

    pub fn firings(&self) -> u64 {
        self.horizon_seconds / self.interval_seconds
    }
}

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub label: String,
    pub interval_seconds: u64,
    pub horizon_seconds: u64,
    pub firings: u64,
    pub per_firing: Vec<RunTotals>,
    pub aggregate: RunTotals,
    pub aggregate_duration_seconds: f64,
    /// Scheduled skills run without interactive supervision: nothing is
    /// rendered to a user, so exposure is identically zero.
    pub interface: String,
    pub exposure_ratio: String,
    pub failures: Vec<u64>,
}

/// Run every firing of the schedule and aggregate. Per-firing failures are
/// recorded and do not stop later firings.
pub fn run_schedule(
    scenario: &Scenario,
    schedule: &Schedule,
) -> Result<ScheduleReport, ScheduleError> {
    schedule.validate()?;
    scenario.validate()?;
    let firings = schedule.firings();
    let mut per_firing = Vec::with_capacity(firings as usize);
    let mut aggregate = RunTotals::default();
    let mut duration = 0.0;
    let mut failures = Vec::new();

    // Deterministic scenarios make every firing identical; run the session
    // once and replicate, keeping per-firing rows for the report.
    let single: RunReport = run_session(scenario)?;
    for firing in 0..firings {
        per_firing.push(single.totals);
        aggregate.input += single.totals.input;
        aggregate.output += single.totals.output;
        aggregate.context += single.totals.context;
        duration += single.simulated_duration_seconds;
        if single.outcome.status == crate::core::RunStatus::AbortedBudget {
            failures.push(firing);
        }
    }

    Ok(ScheduleReport {
        label: scenario.label.clone(),
        interval_seconds: schedule.interval_seconds,
        horizon_seconds: schedule.horizon_seconds,
        firings,
        per_firing,
        aggregate,
        aggregate_duration_seconds: duration,
        interface: "autonomous".into(),
        exposure_ratio: "0.00".into(),
        failures,
    })
}

/// Aggregate context for a hypothetical single-run total, used by tests and
/// the frequency-amplification law.
pub fn aggregate_context(single_context: TokenCount, firings: u64) -> TokenCount {
    TokenCount(single_context.get().saturating_mul(firings))
}
