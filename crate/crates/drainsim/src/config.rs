//! Scenario configuration files.
//!
//! A scenario file is a JSON document with a `scenario` block (session
//! constants, the policy, and skill package directories resolved relative to
//! the file), plus optional `schedule` and `prices` blocks and an optional
//! top-level `seed`. Unknown keys are rejected everywhere: a config that
//! does not validate never runs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::TokenCount;
use crate::engine::Scenario;
use crate::policy::PolicySpec;
use crate::scheduler::Schedule;
use crate::skillpack::{
    load_skill_package, registry_order, SkillError, SkillKind, SkillManifest, SkillPackage,
};
use crate::tokenmeter::PriceTable;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub prices: Option<PriceTable>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Skill package directories, relative to the scenario file.
    pub skills: Vec<PathBuf>,
    pub user_query: String,
    #[serde(default)]
    pub user_constraint: Option<String>,
    pub policy: PolicySpec,
    pub preamble_tokens: u64,
    pub compaction_window: u64,
    pub compaction_retain_fraction: f64,
    pub summary_stub_tokens: u64,
    pub turn_budget: u32,
    pub narration_tokens_per_turn: u64,
    pub session_seed: u64,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Unreadable { path: String, reason: String },
    #[error("schema violation in {path}: {reason}")]
    Schema { path: String, reason: String },
    #[error(transparent)]
    Skill(#[from] SkillError),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// A parsed and fully validated scenario file.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub schedule: Option<Schedule>,
    pub prices: Option<PriceTable>,
}

pub fn load_scenario_file(path: &Path) -> Result<LoadedScenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|e| ConfigError::Schema {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    resolve_scenario_file(&file, path)
}

pub fn resolve_scenario_file(
    file: &ScenarioFile,
    path: &Path,
) -> Result<LoadedScenario, ConfigError> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut skills = Vec::new();
    for dir in &file.scenario.skills {
        let dir = if dir.is_absolute() {
            dir.clone()
        } else {
            base.join(dir)
        };
        skills.push(load_skill_package(&dir)?);
    }
    let label = file.label.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "scenario".into())
    });
    let scenario = Scenario {
        label,
        skills: registry_order(skills),
        user_query: file.scenario.user_query.clone(),
        user_constraint: file.scenario.user_constraint.clone(),
        policy: file.scenario.policy.clone(),
        preamble_tokens: TokenCount(file.scenario.preamble_tokens),
        compaction_window: TokenCount(file.scenario.compaction_window),
        compaction_retain_fraction: file.scenario.compaction_retain_fraction,
        summary_stub_tokens: TokenCount(file.scenario.summary_stub_tokens),
        turn_budget: file.scenario.turn_budget,
        narration_tokens_per_turn: TokenCount(file.scenario.narration_tokens_per_turn),
        session_seed: file.seed.unwrap_or(file.scenario.session_seed),
    };
    scenario
        .validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    if let Some(schedule) = &file.schedule {
        schedule
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    }
    if let Some(prices) = &file.prices {
        prices
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    }
    Ok(LoadedScenario {
        scenario,
        schedule: file.schedule,
        prices: file.prices.clone(),
    })
}

/// Documentation body used for derived benign twins. Mirrors the shipped
/// benign query skill so baseline comparisons are apples-to-apples.
pub const BENIGN_TWIN_DOC: &str = "\
# Headline query skill

Fetches the latest BBC headline summary for a user query and returns a
concise answer in a single call. Provide the user's query as the `query`
argument; the skill responds with the current headline data. No multi-step
handshake, no verification protocol, no retries required.
";

/// The benign twin of a scenario: identical constants and query, with the
/// primary protocol skill replaced by a benign skill of the same name and
/// payload. Scenarios whose primary skill is already benign are their own
/// twin.
pub fn benign_twin(scenario: &Scenario) -> Scenario {
    let primary = scenario.primary_skill();
    if primary.manifest.kind == SkillKind::Benign {
        let mut twin = scenario.clone();
        twin.label = format!("{}-baseline", scenario.label);
        return twin;
    }
    let twin_package = SkillPackage::new(
        SkillManifest {
            name: primary.name().to_string(),
            kind: SkillKind::Benign,
            payload_text: primary.manifest.payload_text.clone(),
            narration_enabled: false,
            verbosity_multiplier: 1.0,
            svp: None,
        },
        BENIGN_TWIN_DOC,
    )
    .expect("benign twin manifest is valid");
    let skills = scenario
        .skills
        .iter()
        .map(|s| {
            if s.name() == primary.name() {
                twin_package.clone()
            } else {
                s.clone()
            }
        })
        .collect();
    Scenario {
        label: format!("{}-baseline", scenario.label),
        skills,
        ..scenario.clone()
    }
}
