//! The tool-calling session loop: prompt assembly with every-call skill-doc
//! injection, turn execution, history accumulation, compaction, narration,
//! and run accounting.
//!
//! One session is one execution context. Each turn makes exactly one model
//! call: the assembled prompt (system preamble + all enabled skill docs +
//! live transcript) is charged as input, the policy's action text plus
//! per-turn overheads as output, and the cumulative context counter grows by
//! input + output. Tool calls append their results to the transcript, where
//! they are re-ingested by every later call.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::core::{
    CompactionEvent, Message, Role, RunOutcome, RunStatus, Tag, TokenCount, Transcript,
};
use crate::policy::{next_action, AgentAction, Observation, PolicySpec, PolicyState, TaskView};
use crate::skillpack::{assemble_skill_docs, exec_skill, SkillKind, SkillPackage, ToolResult};
use crate::svp::{RepairReason, SessionContext, SignalKind, SvpSessionState};
use crate::tokenmeter::{count_tokens, sized_text};

/// Seconds of simulated latency per model call.
pub const TURN_LATENCY_SECONDS: f64 = 2.0;
/// Seconds of simulated latency per generated output token.
pub const OUTPUT_TOKEN_LATENCY_SECONDS: f64 = 0.035;
/// Extra seconds per recovery-cascade step (web searches, process kills and
/// service retries are slow compared to a model call). Cosmetic: reported
/// durations support ordinal comparisons only.
pub const FALLBACK_STEP_LATENCY_SECONDS: f64 = 45.0;

/// A fully resolved scenario: everything a session needs, with no I/O.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub label: String,
    pub skills: Vec<SkillPackage>,
    pub user_query: String,
    pub user_constraint: Option<String>,
    pub policy: PolicySpec,
    pub preamble_tokens: TokenCount,
    pub compaction_window: TokenCount,
    pub compaction_retain_fraction: f64,
    pub summary_stub_tokens: TokenCount,
    pub turn_budget: u32,
    pub narration_tokens_per_turn: TokenCount,
    pub session_seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.skills.is_empty() {
            return Err(EngineError::InvalidScenario("no skills configured".into()));
        }
        if self.turn_budget == 0 {
            return Err(EngineError::InvalidScenario(
                "turn_budget must be >= 1".into(),
            ));
        }
        if !(self.compaction_retain_fraction > 0.0 && self.compaction_retain_fraction <= 1.0) {
            return Err(EngineError::InvalidScenario(
                "compaction_retain_fraction must be in (0, 1]".into(),
            ));
        }
        self.policy
            .validate()
            .map_err(EngineError::InvalidScenario)?;
        for skill in &self.skills {
            skill
                .manifest
                .validate()
                .map_err(|e| EngineError::InvalidScenario(e.to_string()))?;
        }
        Ok(())
    }

    /// The skill the policy works against: the first protocol skill in
    /// registry order, or the first skill when none runs the protocol.
    pub fn primary_skill(&self) -> &SkillPackage {
        self.skills
            .iter()
            .find(|s| s.manifest.kind == SkillKind::Svp)
            .unwrap_or(&self.skills[0])
    }

    /// Global verbosity multiplier: behavioral injection from any enabled
    /// skill's documentation applies to all assistant output.
    pub fn effective_verbosity(&self) -> f64 {
        self.skills
            .iter()
            .map(|s| s.manifest.verbosity_multiplier)
            .fold(1.0, f64::max)
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    ToolCall,
    ToolComposition,
    Fallback,
    FinalAnswer,
    Abandon,
}

/// Per-turn accounting record. `prompt_tokens` is the full model-call input;
/// `fresh_input_tokens` counts only content entering a prompt for the first
/// time; `payload_tokens` is the size of the text the agent wrote for its
/// action (before narration and reasoning overhead).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub turn_index: u64,
    pub action: ActionKind,
    pub skill: Option<String>,
    pub segment: Option<u32>,
    pub prompt_tokens: TokenCount,
    pub fresh_input_tokens: TokenCount,
    pub output_tokens: TokenCount,
    pub payload_tokens: TokenCount,
    pub result_tokens: TokenCount,
    pub narration_tokens: TokenCount,
    pub signal: Option<SignalKind>,
    pub repair_reason: Option<RepairReason>,
    pub compacted: bool,
    pub evicted_user_constraint: bool,
    pub action_text: String,
    pub result_text: Option<String>,
    pub narration_text: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunTotals {
    pub input: TokenCount,
    pub output: TokenCount,
    pub context: TokenCount,
}

/// Everything a run produced. Totals reproduce exactly from the trace:
/// `context = Σ (prompt + output)`, `input = Σ fresh`, `output = Σ output`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub label: String,
    pub scenario_fingerprint: String,
    pub outcome: RunOutcome,
    pub totals: RunTotals,
    pub turns: u64,
    pub simulated_duration_seconds: f64,
    pub compaction_events: Vec<CompactionEvent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEntry>>,
}

impl RunReport {
    pub fn without_trace(mut self) -> RunReport {
        self.trace = None;
        self
    }
}

/// Prompt size for the next model call: system preamble + every enabled
/// skill's documentation + all live transcript messages.
pub fn assemble_prompt(scenario: &Scenario, transcript: &Transcript) -> TokenCount {
    let docs = assemble_skill_docs(&scenario.skills);
    scenario.preamble_tokens + count_tokens(&docs) + transcript.live_message_tokens()
}

/// Outcome of a compaction attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompactionOutcome {
    NotNeeded,
    Compacted(CompactionEvent),
    /// Even evicting everything evictable cannot reach the retain target.
    TargetUnreachable,
}

/// Evict the oldest non-system messages until the live prompt fits within
/// `retain_fraction × compaction_window`, replacing the evicted span with a
/// single summary stub. User-constraint messages are not exempt: that is the
/// modeled vulnerability.
pub fn compact(
    scenario: &Scenario,
    transcript: &mut Transcript,
    turn_index: u64,
) -> CompactionOutcome {
    let live = assemble_prompt(scenario, transcript);
    if live <= scenario.compaction_window {
        return CompactionOutcome::NotNeeded;
    }
    let target_total =
        (scenario.compaction_window.get() as f64 * scenario.compaction_retain_fraction) as u64;
    let fixed = assemble_prompt(scenario, &Transcript::new());
    let message_budget = target_total.saturating_sub(fixed.get());
    let stub_base =
        format!("[context summary: earlier conversation compacted at turn {turn_index}]");
    let stub = Message {
        role: Role::System,
        content: sized_text(&stub_base, scenario.summary_stub_tokens),
        tokens: scenario.summary_stub_tokens,
        tags: std::iter::once(Tag::SummaryStub).collect(),
    };
    let budget = TokenCount(message_budget.saturating_sub(scenario.summary_stub_tokens.get()));
    match transcript.evict_prefix_to(budget, stub, turn_index) {
        Some(event) => {
            if transcript.live_message_tokens().get() > message_budget {
                CompactionOutcome::TargetUnreachable
            } else {
                CompactionOutcome::Compacted(event)
            }
        }
        None => CompactionOutcome::TargetUnreachable,
    }
}

fn apply_verbosity(text: &str, multiplier: f64) -> String {
    if multiplier <= 1.0 {
        return text.to_string();
    }
    let base = count_tokens(text);
    let target = TokenCount((base.get() as f64 * multiplier).ceil() as u64);
    if target <= base {
        return text.to_string();
    }
    sized_text(text, target)
}

fn narration_text(action: &AgentAction, tokens: TokenCount) -> Option<String> {
    if tokens == TokenCount::ZERO {
        return None;
    }
    let base = match action {
        AgentAction::ToolCall { args, .. } | AgentAction::ToolComposition { args, .. } => {
            match args {
                crate::skillpack::ToolCallArgs::Svp { segment, .. } => {
                    format!("Starting verification stage {segment}…")
                }
                crate::skillpack::ToolCallArgs::Benign { .. } => "Fetching data…".to_string(),
            }
        }
        _ => return None,
    };
    Some(sized_text(&base, tokens))
}

/// FNV-1a over the canonical scenario serialization: a stable fingerprint
/// for correlating reports with configurations.
fn fingerprint(scenario: &Scenario) -> String {
    let serialized = serde_json::to_string(scenario).unwrap_or_default();
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in serialized.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

/// Execute one full session and account for every token.
pub fn run_session(scenario: &Scenario) -> Result<RunReport, EngineError> {
    scenario.validate()?;

    let primary = scenario.primary_skill().clone();
    let verbosity = scenario.effective_verbosity();
    let expected_payload = primary.manifest.payload_text.clone();

    let mut transcript = Transcript::new();
    let mut pending_fresh = TokenCount::ZERO;

    let query = Message::new(Role::User, scenario.user_query.clone());
    pending_fresh += query.tokens;
    transcript.append(query);
    if let Some(constraint) = &scenario.user_constraint {
        let msg = Message::new(Role::User, constraint.clone()).with_tag(Tag::UserConstraint);
        pending_fresh += msg.tokens;
        transcript.append(msg);
    }

    let mut policy_state = PolicyState::new(
        &scenario.policy,
        TaskView::of_package(&primary),
        &scenario.user_query,
    );
    let mut svp_states: BTreeMap<String, SvpSessionState> = scenario
        .skills
        .iter()
        .filter(|s| s.manifest.kind == SkillKind::Svp)
        .map(|s| {
            (
                s.name().to_string(),
                SvpSessionState::new(scenario.session_seed),
            )
        })
        .collect();

    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut totals = RunTotals::default();
    let mut duration = 0.0f64;
    let mut last_result: Option<ToolResult> = None;
    let mut outcome: Option<RunOutcome> = None;
    let mut turns = 0u64;

    for turn in 1..=u64::from(scenario.turn_budget) {
        turns = turn;
        let prompt_tokens = assemble_prompt(scenario, &transcript);
        let fresh_base = if turn == 1 {
            let docs = assemble_skill_docs(&scenario.skills);
            scenario.preamble_tokens + count_tokens(&docs)
        } else {
            TokenCount::ZERO
        };
        let fresh_input = fresh_base + std::mem::take(&mut pending_fresh);

        let observation = if turn == 1 {
            Observation::UserQuery
        } else {
            match &last_result {
                Some(result) => Observation::Tool(result),
                None => Observation::Continue,
            }
        };
        let action = next_action(&scenario.policy, &mut policy_state, observation);
        last_result = None;

        let written = apply_verbosity(action.written(), verbosity);
        let payload_tokens = count_tokens(&written);
        let narration = narration_text(&action, scenario.narration_tokens_per_turn).filter(|_| {
            matches!(&action, AgentAction::ToolCall { skill, .. } | AgentAction::ToolComposition { skill, .. }
                if scenario.skills.iter().any(|s| s.name() == skill && s.manifest.narration_enabled))
        });
        let narration_tokens = narration.as_deref().map(count_tokens).unwrap_or_default();

        let output_tokens =
            payload_tokens + scenario.policy.reasoning_overhead_tokens + narration_tokens;

        // Append the assistant's turn to the transcript.
        let (kind, skill_name, segment) = match &action {
            AgentAction::ToolCall { skill, args, .. } => (
                ActionKind::ToolCall,
                Some(skill.clone()),
                match args {
                    crate::skillpack::ToolCallArgs::Svp { segment, .. } => Some(*segment),
                    _ => None,
                },
            ),
            AgentAction::ToolComposition { skill, args, .. } => (
                ActionKind::ToolComposition,
                Some(skill.clone()),
                match args {
                    crate::skillpack::ToolCallArgs::Svp { segment, .. } => Some(*segment),
                    _ => None,
                },
            ),
            AgentAction::Fallback { .. } => (ActionKind::Fallback, None, None),
            AgentAction::FinalAnswer { .. } => (ActionKind::FinalAnswer, None, None),
            AgentAction::Abandon { .. } => (ActionKind::Abandon, None, None),
        };
        let role = match kind {
            ActionKind::ToolCall | ActionKind::ToolComposition | ActionKind::Fallback => {
                Role::ToolCall
            }
            ActionKind::FinalAnswer | ActionKind::Abandon => Role::Assistant,
        };
        let mut action_msg = Message {
            role,
            content: written.clone(),
            tokens: payload_tokens,
            tags: Default::default(),
        };
        if segment.is_some() {
            action_msg.tags.insert(Tag::CalibrationPayload);
        }
        if kind == ActionKind::Fallback {
            action_msg.tags.insert(Tag::Fallback);
        }
        pending_fresh += action_msg.tokens;
        transcript.append(action_msg);

        // Execute tools and append their results.
        let mut result_text = None;
        let mut result_tokens = TokenCount::ZERO;
        let mut signal_kind = None;
        let mut repair_reason = None;
        match &action {
            AgentAction::ToolCall { skill, args, .. }
            | AgentAction::ToolComposition { skill, args, .. } => {
                let result = match scenario.skills.iter().find(|s| s.name() == *skill) {
                    Some(package) => {
                        let ctx = SessionContext {
                            turn_index: turn,
                            compaction_count: transcript.compaction_events.len() as u64,
                        };
                        exec_skill(package, svp_states.get_mut(skill.as_str()), args, ctx)
                    }
                    None => ToolResult {
                        text: format!("error: unknown skill {skill}"),
                        signal: None,
                    },
                };
                signal_kind = result.signal.as_ref().map(|s| s.kind);
                repair_reason = result.signal.as_ref().and_then(|s| s.reason);
                let msg = Message::new(Role::ToolResult, result.text.clone());
                result_tokens = msg.tokens;
                pending_fresh += msg.tokens;
                transcript.append(msg);
                result_text = Some(result.text.clone());
                last_result = Some(result);
            }
            AgentAction::Fallback { step, .. } => {
                let text = sized_text(&format!("{} result:", step.name.as_str()), step.result_cost);
                let msg = Message::new(Role::ToolResult, text.clone()).with_tag(Tag::Fallback);
                result_tokens = msg.tokens;
                pending_fresh += msg.tokens;
                transcript.append(msg);
                result_text = Some(text.clone());
                last_result = Some(ToolResult { text, signal: None });
            }
            AgentAction::FinalAnswer { text } => {
                outcome = Some(
                    RunOutcome::new(RunStatus::Success, Some(text.clone()), &expected_payload)
                        .expect("success outcome"),
                );
            }
            AgentAction::Abandon { .. } => {}
        }

        if let Some(nar) = &narration {
            let msg = Message::new(Role::Narration, nar.clone());
            pending_fresh += msg.tokens;
            transcript.append(msg);
        }

        // Account for the model call.
        transcript.record_model_call(prompt_tokens, output_tokens);
        totals.input += fresh_input;
        totals.output += output_tokens;
        duration +=
            TURN_LATENCY_SECONDS + output_tokens.get() as f64 * OUTPUT_TOKEN_LATENCY_SECONDS;
        if kind == ActionKind::Fallback {
            duration += FALLBACK_STEP_LATENCY_SECONDS;
        }

        // Compact when the live prompt exceeds the window.
        let mut compacted = false;
        let mut evicted_user_constraint = false;
        let constraint_live_before = transcript
            .messages
            .iter()
            .any(|m| m.has_tag(Tag::UserConstraint));
        match compact(scenario, &mut transcript, turn) {
            CompactionOutcome::NotNeeded => {}
            CompactionOutcome::Compacted(event) => {
                compacted = true;
                evicted_user_constraint = constraint_live_before
                    && !transcript
                        .messages
                        .iter()
                        .any(|m| m.has_tag(Tag::UserConstraint));
                // The stub is new content for the next call.
                pending_fresh += scenario.summary_stub_tokens;
                let _ = event;
            }
            CompactionOutcome::TargetUnreachable => {
                trace.push(TraceEntry {
                    turn_index: turn,
                    action: kind,
                    skill: skill_name,
                    segment,
                    prompt_tokens,
                    fresh_input_tokens: fresh_input,
                    output_tokens,
                    payload_tokens,
                    result_tokens,
                    narration_tokens,
                    signal: signal_kind,
                    repair_reason,
                    compacted: false,
                    evicted_user_constraint: false,
                    action_text: written,
                    result_text,
                    narration_text: narration,
                });
                outcome = Some(
                    RunOutcome::new(RunStatus::AbortedBudget, None, &expected_payload)
                        .expect("abort outcome"),
                );
                break;
            }
        }

        trace.push(TraceEntry {
            turn_index: turn,
            action: kind,
            skill: skill_name,
            segment,
            prompt_tokens,
            fresh_input_tokens: fresh_input,
            output_tokens,
            payload_tokens,
            result_tokens,
            narration_tokens,
            signal: signal_kind,
            repair_reason,
            compacted,
            evicted_user_constraint,
            action_text: written,
            result_text,
            narration_text: narration,
        });

        if outcome.is_some() {
            break;
        }
        if policy_state.is_done() {
            // The cascade completed its fallback steps without an answer.
            outcome = Some(
                RunOutcome::new(RunStatus::FailureAbandoned, None, &expected_payload)
                    .expect("failure outcome"),
            );
            break;
        }
    }

    let outcome = outcome.unwrap_or_else(|| {
        RunOutcome::new(RunStatus::AbortedBudget, None, &expected_payload).expect("abort outcome")
    });
    totals.context = transcript.cumulative_context;

    Ok(RunReport {
        label: scenario.label.clone(),
        scenario_fingerprint: fingerprint(scenario),
        outcome,
        totals,
        turns,
        simulated_duration_seconds: duration,
        compaction_events: transcript.compaction_events.clone(),
        trace: Some(trace),
    })
}
