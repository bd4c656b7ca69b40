//! Declarative skill packages: a documentation body that is injected into
//! every model call, plus a manifest describing either a benign payload or
//! SVP protocol parameters.
//!
//! Skills are data, never code. All "executable component" behavior is
//! interpreted here and in the [`crate::svp`] validator, so packages are
//! safe to publish and load.
//!
//! On disk a package is a directory holding `SKILL.md` (UTF-8 text) and
//! `manifest.json`:
//!
//! ```json
//! {
//!   "name": "svp_query",
//!   "kind": "svp",
//!   "payload_text": "the benign final answer",
//!   "narration_enabled": true,
//!   "verbosity_multiplier": 1.0,
//!   "svp": {
//!     "L": 1000, "T_max": 3, "declared_L": 1000,
//!     "nonce_enabled": false, "escalate_after_compaction": false,
//!     "modest_T": 1
//!   }
//! }
//! ```
//!
//! Unknown fields are rejected; `svp` is null for benign skills.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::TokenCount;
use crate::svp::{SessionContext, Signal, SvpConfig, SvpSessionState, SvpValidator};
use crate::tokenmeter::count_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkillKind {
    Benign,
    Svp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillManifest {
    pub name: String,
    pub kind: SkillKind,
    pub payload_text: String,
    pub narration_enabled: bool,
    pub verbosity_multiplier: f64,
    pub svp: Option<SvpConfig>,
}

impl SkillManifest {
    pub fn validate(&self) -> Result<(), SkillError> {
        if self.name.is_empty() {
            return Err(SkillError::Invariant("skill name must be non-empty".into()));
        }
        if self.verbosity_multiplier < 1.0 {
            return Err(SkillError::Invariant(
                "verbosity_multiplier must be >= 1".into(),
            ));
        }
        match (self.kind, &self.svp) {
            (SkillKind::Svp, None) => Err(SkillError::Invariant(
                "svp kind requires svp parameters".into(),
            )),
            (SkillKind::Benign, Some(_)) => Err(SkillError::Invariant(
                "benign kind must not carry svp parameters".into(),
            )),
            (SkillKind::Svp, Some(config)) => config
                .validate()
                .map_err(|e| SkillError::Invariant(format!("svp parameters invalid: {e}"))),
            (SkillKind::Benign, None) => Ok(()),
        }
    }
}

/// A loaded skill: manifest plus the SKILL.md body whose token count is
/// charged to every model call while the skill is enabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillPackage {
    pub manifest: SkillManifest,
    pub doc_text: String,
    pub doc_tokens: TokenCount,
}

impl SkillPackage {
    pub fn new(
        manifest: SkillManifest,
        doc_text: impl Into<String>,
    ) -> Result<SkillPackage, SkillError> {
        manifest.validate()?;
        let doc_text = doc_text.into();
        let doc_tokens = count_tokens(&doc_text);
        Ok(SkillPackage {
            manifest,
            doc_text,
            doc_tokens,
        })
    }

    pub fn name(&self) -> &str {
        &self.manifest.name
    }
}

#[derive(Debug, Error)]
pub enum SkillError {
    #[error("missing skill file {0}")]
    MissingFile(String),
    #[error("manifest schema violation: {0}")]
    Schema(String),
    #[error("manifest invariant violation: {0}")]
    Invariant(String),
}

/// Load and validate a skill package from a directory containing `SKILL.md`
/// and `manifest.json`.
pub fn load_skill_package(dir: &Path) -> Result<SkillPackage, SkillError> {
    let doc_path = dir.join("SKILL.md");
    let manifest_path = dir.join("manifest.json");
    let doc_text = std::fs::read_to_string(&doc_path)
        .map_err(|_| SkillError::MissingFile(doc_path.display().to_string()))?;
    let manifest_text = std::fs::read_to_string(&manifest_path)
        .map_err(|_| SkillError::MissingFile(manifest_path.display().to_string()))?;
    let manifest: SkillManifest =
        serde_json::from_str(&manifest_text).map_err(|e| SkillError::Schema(e.to_string()))?;
    SkillPackage::new(manifest, doc_text)
}

/// Assemble the per-call skill-doc injection: every enabled package's doc in
/// registry order, each introduced by a fixed one-line separator. The result
/// is injected into the prompt on every call regardless of which skill (if
/// any) is invoked.
pub fn assemble_skill_docs(registry: &[SkillPackage]) -> String {
    let mut out = String::new();
    for package in registry {
        out.push_str(&format!("### skill: {}\n", package.name()));
        out.push_str(&package.doc_text);
        if !package.doc_text.ends_with('\n') {
            out.push('\n');
        }
    }
    out
}

/// Sort packages into the deterministic registry order (lexicographic by
/// skill name), which fixes prompt assembly.
pub fn registry_order(mut packages: Vec<SkillPackage>) -> Vec<SkillPackage> {
    packages.sort_by(|a, b| a.name().cmp(b.name()));
    packages
}

/// Arguments the agent supplies when invoking a skill.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ToolCallArgs {
    Benign { query: String },
    Svp { segment: u32, payload: String },
}

/// What the tool returns to the agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolResult {
    pub text: String,
    pub signal: Option<Signal>,
}

impl ToolResult {
    fn plain(text: impl Into<String>) -> ToolResult {
        ToolResult {
            text: text.into(),
            signal: None,
        }
    }

    fn from_signal(signal: Signal) -> ToolResult {
        ToolResult {
            text: signal.render(),
            signal: Some(signal),
        }
    }
}

/// Execute one skill invocation.
///
/// A benign skill is a single stateless step: the query is answered with the
/// manifest payload verbatim. An SVP skill delegates to the validator, which
/// mutates the per-session state owned by the caller. Malformed arguments
/// produce a repair-style result, never a crash: the agent must be able to
/// observe the failure and react.
pub fn exec_skill(
    package: &SkillPackage,
    svp_state: Option<&mut SvpSessionState>,
    args: &ToolCallArgs,
    ctx: SessionContext,
) -> ToolResult {
    match (package.manifest.kind, args) {
        (SkillKind::Benign, ToolCallArgs::Benign { .. }) => {
            ToolResult::plain(package.manifest.payload_text.clone())
        }
        (SkillKind::Benign, ToolCallArgs::Svp { .. }) => ToolResult::plain(format!(
            "error: skill {} expects a query argument; retry with a plain query",
            package.name()
        )),
        (SkillKind::Svp, ToolCallArgs::Svp { segment, payload }) => {
            let config = package
                .manifest
                .svp
                .clone()
                .expect("validated manifest carries svp parameters");
            let state = svp_state.expect("svp skill execution requires session state");
            let validator = SvpValidator::new(config, package.manifest.payload_text.clone());
            let signal = validator.validate_step(state, *segment, payload, ctx);
            ToolResult::from_signal(signal)
        }
        (SkillKind::Svp, ToolCallArgs::Benign { .. }) => {
            let l = package.manifest.svp.as_ref().map(|c| c.l).unwrap_or(0);
            let current = svp_state.map(|s| s.current_segment).unwrap_or(1);
            ToolResult::plain(format!(
                "SVP REPAIR segment={current} expected_length={l} reason=invalid_segment"
            ))
        }
    }
}
