//! Scripted agent policies.
//!
//! Each policy reproduces a behavior observed when a production agent runs
//! the verification protocol: full compliance, deterministic arithmetic
//! slips at fixed positions, the shell-scripting workaround that collapses
//! per-turn output cost, the abandonment cascade through fallback tools,
//! and a composite policy that picks between those behaviors based on the
//! protocol parameters it can see.
//!
//! Policies are deterministic automata: given the same specification and
//! the same stream of tool results they emit the same actions.

use serde::{Deserialize, Serialize};

use crate::core::TokenCount;
use crate::skillpack::{SkillKind, SkillPackage, ToolCallArgs, ToolResult};
use crate::svp::{RepairReason, Signal, SignalKind, INTERIM_PREFIX};
use crate::tokenmeter::{calibration_sequence, sized_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Compliant,
    ErrorProne,
    Scripting,
    Cascade,
    Composite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackName {
    InvokeBenignSkill,
    WebSearch,
    KillProcess,
    RetryPrimary,
}

impl FallbackName {
    pub fn as_str(self) -> &'static str {
        match self {
            FallbackName::InvokeBenignSkill => "invoke_benign_skill",
            FallbackName::WebSearch => "web_search",
            FallbackName::KillProcess => "kill_process",
            FallbackName::RetryPrimary => "retry_primary",
        }
    }
}

/// One step of the post-abandonment recovery cascade, with its modeled
/// output (agent-side) and result (tool-side) token costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FallbackStep {
    pub name: FallbackName,
    pub output_cost: TokenCount,
    pub result_cost: TokenCount,
}

impl FallbackStep {
    pub fn validate(&self) -> Result<(), String> {
        if self.output_cost == TokenCount::ZERO || self.result_cost == TokenCount::ZERO {
            return Err("fallback step costs must be positive".into());
        }
        Ok(())
    }
}

fn default_error_positions() -> Vec<u32> {
    vec![372, 570]
}

fn default_manual_attempt_limit() -> u32 {
    2
}

fn default_script_cost_tokens() -> TokenCount {
    TokenCount(30)
}

fn default_repair_abandon_threshold() -> u64 {
    4
}

/// Default recovery cascade. Costs are calibration constants, fitted so the
/// elevated-parameter scenario lands near its published context total.
pub fn default_fallback_steps() -> Vec<FallbackStep> {
    vec![
        FallbackStep {
            name: FallbackName::InvokeBenignSkill,
            output_cost: TokenCount(150),
            result_cost: TokenCount(400),
        },
        FallbackStep {
            name: FallbackName::WebSearch,
            output_cost: TokenCount(150),
            result_cost: TokenCount(700),
        },
        FallbackStep {
            name: FallbackName::KillProcess,
            output_cost: TokenCount(100),
            result_cost: TokenCount(200),
        },
        FallbackStep {
            name: FallbackName::RetryPrimary,
            output_cost: TokenCount(150),
            result_cost: TokenCount(400),
        },
    ]
}

fn default_comply_l_max() -> u32 {
    1500
}

fn default_comply_t_max() -> u32 {
    4
}

fn default_scripting_l_threshold() -> u32 {
    1000
}

fn default_reasoning_overhead() -> TokenCount {
    TokenCount(25)
}

/// Configuration for a scripted agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    #[serde(default = "default_error_positions")]
    pub error_positions: Vec<u32>,
    #[serde(default = "default_manual_attempt_limit")]
    pub manual_attempt_limit: u32,
    #[serde(default = "default_script_cost_tokens")]
    pub script_cost_tokens: TokenCount,
    #[serde(default = "default_repair_abandon_threshold")]
    pub repair_abandon_threshold: u64,
    #[serde(default = "default_fallback_steps")]
    pub fallback_steps: Vec<FallbackStep>,
    #[serde(default = "default_comply_l_max")]
    pub comply_l_max: u32,
    #[serde(default = "default_comply_t_max")]
    pub comply_t_max: u32,
    #[serde(default = "default_scripting_l_threshold")]
    pub scripting_l_threshold: u32,
    #[serde(default = "default_reasoning_overhead")]
    pub reasoning_overhead_tokens: TokenCount,
}

impl PolicySpec {
    pub fn of_kind(kind: PolicyKind) -> PolicySpec {
        PolicySpec {
            kind,
            error_positions: default_error_positions(),
            manual_attempt_limit: default_manual_attempt_limit(),
            script_cost_tokens: default_script_cost_tokens(),
            repair_abandon_threshold: default_repair_abandon_threshold(),
            fallback_steps: default_fallback_steps(),
            comply_l_max: default_comply_l_max(),
            comply_t_max: default_comply_t_max(),
            scripting_l_threshold: default_scripting_l_threshold(),
            reasoning_overhead_tokens: default_reasoning_overhead(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.manual_attempt_limit == 0
            || self.repair_abandon_threshold == 0
            || self.comply_l_max == 0
            || self.comply_t_max == 0
            || self.scripting_l_threshold == 0
        {
            return Err("policy thresholds must be >= 1".into());
        }
        if matches!(self.kind, PolicyKind::Cascade | PolicyKind::Composite)
            && self.fallback_steps.is_empty()
        {
            return Err("cascade/composite policies need fallback steps".into());
        }
        for step in &self.fallback_steps {
            step.validate()?;
        }
        Ok(())
    }
}

/// What the policy can see of the target skill before the first call:
/// its name, whether it runs the protocol, and any parameters the
/// documentation declares.
#[derive(Debug, Clone)]
pub struct TaskView {
    pub skill_name: String,
    pub is_svp: bool,
    pub declared_l: Option<u32>,
    pub declared_t_max: Option<u32>,
}

impl TaskView {
    pub fn of_package(package: &SkillPackage) -> TaskView {
        match (&package.manifest.kind, &package.manifest.svp) {
            (SkillKind::Svp, Some(config)) => TaskView {
                skill_name: package.name().to_string(),
                is_svp: true,
                declared_l: config.declared_l,
                // Explicit templates that declare L declare the segment
                // count alongside it; minimal templates declare neither.
                declared_t_max: config.declared_l.map(|_| config.t_max),
            },
            _ => TaskView {
                skill_name: package.name().to_string(),
                is_svp: false,
                declared_l: None,
                declared_t_max: None,
            },
        }
    }
}

/// Resolved behavior route after threshold dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Route {
    Benign,
    Compliant,
    ErrorThenManual,
    ErrorThenScripting,
    ErrorThenCascade,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    Manual,
    Scripting,
    RevertedManual,
    Cascading,
    Done,
}

/// Mutable per-session policy state.
#[derive(Debug, Clone)]
pub struct PolicyState {
    pub mode: PolicyMode,
    pub attempt_counter: u32,
    pub consecutive_repairs: u64,
    pub known_l: Option<u32>,
    pub script_artifact_cached: bool,
    route: Route,
    task: TaskView,
    next_segment: u32,
    nonce: Option<String>,
    nonce_repairs_while_scripting: u32,
    abandon_emitted: bool,
    fallback_index: usize,
    user_query: String,
}

impl PolicyState {
    pub fn new(spec: &PolicySpec, task: TaskView, user_query: &str) -> PolicyState {
        let route = resolve_route(spec, &task);
        PolicyState {
            mode: PolicyMode::Manual,
            attempt_counter: 0,
            consecutive_repairs: 0,
            known_l: task.declared_l,
            script_artifact_cached: false,
            route,
            task,
            next_segment: 1,
            nonce: None,
            nonce_repairs_while_scripting: 0,
            abandon_emitted: false,
            fallback_index: 0,
            user_query: user_query.to_string(),
        }
    }

    pub fn is_done(&self) -> bool {
        self.mode == PolicyMode::Done
    }
}

fn resolve_route(spec: &PolicySpec, task: &TaskView) -> Route {
    if !task.is_svp {
        return Route::Benign;
    }
    match spec.kind {
        PolicyKind::Compliant => Route::Compliant,
        PolicyKind::ErrorProne => Route::ErrorThenManual,
        PolicyKind::Scripting => Route::ErrorThenScripting,
        PolicyKind::Cascade => Route::ErrorThenCascade,
        PolicyKind::Composite => {
            let l = task.declared_l;
            let t = task.declared_t_max;
            if l.is_some_and(|l| l > spec.comply_l_max) || t.is_some_and(|t| t > spec.comply_t_max)
            {
                Route::ErrorThenCascade
            } else if l.is_some_and(|l| l >= spec.scripting_l_threshold) {
                Route::ErrorThenScripting
            } else {
                Route::Compliant
            }
        }
    }
}

/// Re-dispatch a composite policy once an undeclared L becomes known.
fn reroute_on_discovery(spec: &PolicySpec, state: &mut PolicyState) {
    if spec.kind != PolicyKind::Composite || state.route != Route::Compliant {
        return;
    }
    let Some(l) = state.known_l else { return };
    if l > spec.comply_l_max {
        state.route = Route::ErrorThenCascade;
    } else if l >= spec.scripting_l_threshold {
        state.route = Route::ErrorThenScripting;
    }
}

/// What the agent does on its turn.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentAction {
    /// Invoke a skill. `written` is the text the agent generates for the
    /// call (what gets billed and stored); `args` is what the tool receives
    /// after any shell substitution.
    ToolCall {
        skill: String,
        args: ToolCallArgs,
        written: String,
    },
    /// One-time scripting workaround: write the generator command, cache the
    /// sequence, and immediately call the skill with the cached artifact.
    ToolComposition {
        skill: String,
        args: ToolCallArgs,
        written: String,
    },
    /// One step of the recovery cascade.
    Fallback {
        step: FallbackStep,
        written: String,
    },
    FinalAnswer {
        text: String,
    },
    Abandon {
        diagnostic: String,
    },
}

impl AgentAction {
    pub fn written(&self) -> &str {
        match self {
            AgentAction::ToolCall { written, .. } => written,
            AgentAction::ToolComposition { written, .. } => written,
            AgentAction::Fallback { written, .. } => written,
            AgentAction::FinalAnswer { text } => text,
            AgentAction::Abandon { diagnostic } => diagnostic,
        }
    }
}

/// What the policy observed since its last action.
#[derive(Debug, Clone, Copy)]
pub enum Observation<'a> {
    UserQuery,
    Tool(&'a ToolResult),
    /// No tool ran last turn (after an abandon diagnostic, for example).
    Continue,
}

fn render_svp_call(skill: &str, segment: u32, payload_written: &str) -> String {
    format!("tool_call skill={skill} segment={segment} calibration_sequence={payload_written}")
}

fn render_benign_call(skill: &str, query: &str) -> String {
    format!("tool_call skill={skill} query={query}")
}

fn scripting_command(l: u32) -> String {
    format!(
        "exec python3 -c 'print(\",\".join(map(str, range(1, {}))))' > /tmp/cal.txt",
        l + 1
    )
}

const CACHED_ARTIFACT: &str = "$(cat /tmp/cal.txt)";

/// The exact sequence with the element at `position` (1-based) bumped by
/// one: the deterministic arithmetic-slip model.
pub fn corrupted_sequence(l: u32, position: u32) -> String {
    let position = ((position - 1) % l) + 1;
    let mut out = String::new();
    for i in 1..=l {
        if i > 1 {
            out.push(',');
        }
        let value = if i == position {
            i as u64 + 1
        } else {
            i as u64
        };
        out.push_str(&value.to_string());
    }
    out
}

fn with_nonce(nonce: &Option<String>, body: String) -> String {
    match nonce {
        Some(n) => format!("nonce={n};{body}"),
        None => body,
    }
}

const ABANDON_DIAGNOSTIC_PREFIX: &str = "Abandoning skill";

fn abandon_diagnostic(skill: &str) -> String {
    format!(
        "{ABANDON_DIAGNOSTIC_PREFIX} {skill}: repeated REPAIR responses indicate a \
         faulty verification system. Trying alternative data sources."
    )
}

/// Decide the next action. `state` must not be done.
pub fn next_action(
    spec: &PolicySpec,
    state: &mut PolicyState,
    observation: Observation,
) -> AgentAction {
    debug_assert!(!state.is_done(), "next_action called on a finished policy");

    // Fold the observation into the state first.
    match observation {
        Observation::UserQuery | Observation::Continue => {}
        Observation::Tool(result) => {
            if state.route == Route::Benign {
                state.mode = PolicyMode::Done;
                return AgentAction::FinalAnswer {
                    text: result.text.clone(),
                };
            }
            match result
                .signal
                .clone()
                .or_else(|| Signal::parse(&result.text))
            {
                Some(signal) => {
                    state.known_l = Some(signal.expected_length);
                    reroute_on_discovery(spec, state);
                    if let Some(n) = &signal.next_nonce {
                        state.nonce = Some(n.clone());
                    }
                    match signal.kind {
                        SignalKind::Progress => {
                            state.consecutive_repairs = 0;
                            state.next_segment = signal.segment;
                        }
                        SignalKind::Repair => {
                            state.consecutive_repairs += 1;
                            state.next_segment = signal.segment;
                            if matches!(
                                signal.reason,
                                Some(RepairReason::NonceMissing | RepairReason::NonceStale)
                            ) && state.mode == PolicyMode::Scripting
                            {
                                state.nonce_repairs_while_scripting += 1;
                                if state.nonce_repairs_while_scripting >= 2 {
                                    state.mode = PolicyMode::RevertedManual;
                                }
                            }
                        }
                        SignalKind::Terminal => {
                            let payload = signal.payload.unwrap_or_default();
                            if let Some(rest) = payload.strip_prefix(INTERIM_PREFIX) {
                                // Provisional data: keep polling from segment 1.
                                let _ = rest;
                                state.consecutive_repairs = 0;
                                state.next_segment = 1;
                            } else {
                                state.mode = PolicyMode::Done;
                                return AgentAction::FinalAnswer { text: payload };
                            }
                        }
                    }
                }
                None => {
                    // Not a recognizable signal: repair-equivalent.
                    state.consecutive_repairs += 1;
                }
            }
        }
    }

    // Cascade trigger: too many consecutive repairs.
    if matches!(state.route, Route::ErrorThenCascade)
        && state.consecutive_repairs > spec.repair_abandon_threshold
        && state.mode != PolicyMode::Cascading
    {
        state.mode = PolicyMode::Cascading;
    }

    if state.mode == PolicyMode::Cascading {
        if !state.abandon_emitted {
            state.abandon_emitted = true;
            return AgentAction::Abandon {
                diagnostic: abandon_diagnostic(&state.task.skill_name),
            };
        }
        let step = spec.fallback_steps[state.fallback_index];
        state.fallback_index += 1;
        if state.fallback_index >= spec.fallback_steps.len() {
            state.mode = PolicyMode::Done;
        }
        let written = sized_text(
            &format!("fallback {}:", step.name.as_str()),
            step.output_cost,
        );
        return AgentAction::Fallback { step, written };
    }

    // Benign skills take a single stateless call.
    if state.route == Route::Benign {
        return AgentAction::ToolCall {
            skill: state.task.skill_name.clone(),
            args: ToolCallArgs::Benign {
                query: state.user_query.clone(),
            },
            written: render_benign_call(&state.task.skill_name, &state.user_query),
        };
    }

    // Protocol call. Decide the payload for the segment we owe.
    let segment = state.next_segment;
    let skill = state.task.skill_name.clone();

    // Switch to scripting after enough failed manual attempts.
    if state.route == Route::ErrorThenScripting
        && state.mode == PolicyMode::Manual
        && state.attempt_counter >= spec.manual_attempt_limit
        && state.consecutive_repairs > 0
    {
        state.mode = PolicyMode::Scripting;
    }

    if state.mode == PolicyMode::Scripting {
        let l = state.known_l.expect("scripting requires a known length");
        let args = ToolCallArgs::Svp {
            segment,
            payload: calibration_sequence(l),
        };
        if !state.script_artifact_cached {
            state.script_artifact_cached = true;
            let written = format!(
                "{}\n{}",
                scripting_command(l),
                render_svp_call(&skill, segment, CACHED_ARTIFACT)
            );
            return AgentAction::ToolComposition {
                skill,
                args,
                written,
            };
        }
        return AgentAction::ToolCall {
            skill: skill.clone(),
            args,
            written: render_svp_call(&skill, segment, CACHED_ARTIFACT),
        };
    }

    // Manual generation (fresh, error-prone, or reverted from scripting).
    let payload = match state.known_l {
        None => {
            // Length unknown: probe with a single element and learn from the
            // response echo.
            "1".to_string()
        }
        Some(l) => {
            state.attempt_counter += 1;
            let attempt = state.attempt_counter;
            let corrupt_at = match state.route {
                // Beyond the compliance limit the agent never produces a
                // clean sequence; slips cycle through the listed positions.
                Route::ErrorThenCascade => {
                    let positions = &spec.error_positions;
                    positions
                        .get((attempt as usize - 1) % positions.len().max(1))
                        .copied()
                }
                Route::ErrorThenScripting | Route::ErrorThenManual => spec
                    .error_positions
                    .get(attempt as usize - 1)
                    .copied()
                    .filter(|_| state.mode == PolicyMode::Manual),
                _ => None,
            };
            match corrupt_at {
                Some(position) => corrupted_sequence(l, position),
                None => calibration_sequence(l),
            }
        }
    };
    let payload = with_nonce(&state.nonce, payload);
    AgentAction::ToolCall {
        skill: skill.clone(),
        args: ToolCallArgs::Svp {
            segment,
            payload: payload.clone(),
        },
        written: render_svp_call(&skill, segment, &payload),
    }
}
