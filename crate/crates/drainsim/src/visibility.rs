//! Interface models: render a run through the three interfaces a deployment
//! exposes and compute how much of the agent's activity a user could see.
//!
//! * `chat_gui` — every tool call, tool result, assistant message and
//!   narration line is rendered in the conversation stream.
//! * `tui_narrated` — only narration messages, the final answer, and
//!   abandonment diagnostics are shown; raw tool traffic is suppressed.
//! * `autonomous` — scheduled execution with no user-facing output at all.
//!
//! The exposure ratio divides visible tokens by total assistant-and-tool
//! tokens (the input side is excluded: no interface shows the assembled
//! prompt). Anomaly detection is a configurable substring scan over the
//! visible text.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::TokenCount;
use crate::engine::{ActionKind, RunReport, TraceEntry};
use crate::tokenmeter::display_ratio;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceKind {
    ChatGui,
    TuiNarrated,
    Autonomous,
}

impl InterfaceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InterfaceKind::ChatGui => "chat_gui",
            InterfaceKind::TuiNarrated => "tui_narrated",
            InterfaceKind::Autonomous => "autonomous",
        }
    }
}

/// Default list of phrases that would prompt a security-aware user to
/// inspect the skill if they appeared on screen.
pub fn default_anomaly_phrases() -> Vec<String> {
    vec!["faulty verification system".to_string()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibleMessage {
    pub turn_index: u64,
    pub kind: String,
    pub tokens: TokenCount,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureReport {
    pub interface: InterfaceKind,
    pub visible_messages: Vec<VisibleMessage>,
    pub visible_tokens: TokenCount,
    pub total_tokens: TokenCount,
    pub exposure_numerator: u64,
    pub exposure_denominator: u64,
    pub exposure_display: String,
    pub anomaly_visible: bool,
}

impl ExposureReport {
    pub fn exposure_ratio(&self) -> Ratio<u64> {
        if self.exposure_denominator == 0 {
            Ratio::new(0, 1)
        } else {
            Ratio::new(self.exposure_numerator, self.exposure_denominator)
        }
    }
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("run report has no trace; rerun with tracing enabled (--trace)")]
    TraceMissing,
}

fn visible_in_gui(entry: &TraceEntry) -> Vec<(String, TokenCount, String)> {
    let mut out = Vec::new();
    out.push((
        match entry.action {
            ActionKind::ToolCall => "tool_call",
            ActionKind::ToolComposition => "tool_composition",
            ActionKind::Fallback => "fallback_call",
            ActionKind::FinalAnswer => "assistant",
            ActionKind::Abandon => "assistant",
        }
        .to_string(),
        entry.payload_tokens,
        entry.action_text.clone(),
    ));
    if let Some(result) = &entry.result_text {
        out.push((
            "tool_result".to_string(),
            entry.result_tokens,
            result.clone(),
        ));
    }
    if let Some(narration) = &entry.narration_text {
        out.push((
            "narration".to_string(),
            entry.narration_tokens,
            narration.clone(),
        ));
    }
    out
}

fn visible_in_tui(entry: &TraceEntry) -> Vec<(String, TokenCount, String)> {
    let mut out = Vec::new();
    if let Some(narration) = &entry.narration_text {
        out.push((
            "narration".to_string(),
            entry.narration_tokens,
            narration.clone(),
        ));
    }
    match entry.action {
        ActionKind::FinalAnswer => out.push((
            "final_answer".to_string(),
            entry.payload_tokens,
            entry.action_text.clone(),
        )),
        ActionKind::Abandon => out.push((
            "abandon_diagnostic".to_string(),
            entry.payload_tokens,
            entry.action_text.clone(),
        )),
        _ => {}
    }
    out
}

/// Pure fold over the trace: which messages a user of `interface` sees, and
/// what fraction of the run's assistant-and-tool tokens that is.
pub fn render(
    run: &RunReport,
    interface: InterfaceKind,
    anomaly_phrases: &[String],
) -> Result<ExposureReport, RenderError> {
    let trace = run.trace.as_ref().ok_or(RenderError::TraceMissing)?;

    let mut total = TokenCount::ZERO;
    for entry in trace {
        total += entry.payload_tokens + entry.result_tokens + entry.narration_tokens;
    }

    let mut visible_messages = Vec::new();
    for entry in trace {
        let picks = match interface {
            InterfaceKind::ChatGui => visible_in_gui(entry),
            InterfaceKind::TuiNarrated => visible_in_tui(entry),
            InterfaceKind::Autonomous => Vec::new(),
        };
        for (kind, tokens, text) in picks {
            visible_messages.push(VisibleMessage {
                turn_index: entry.turn_index,
                kind,
                tokens,
                text,
            });
        }
    }

    let visible: TokenCount = visible_messages.iter().map(|m| m.tokens).sum();
    let anomaly_visible = visible_messages.iter().any(|m| {
        anomaly_phrases
            .iter()
            .any(|phrase| m.text.contains(phrase.as_str()))
    });
    let ratio = if total == TokenCount::ZERO {
        Ratio::new(0u64, 1u64)
    } else {
        Ratio::new(visible.get(), total.get())
    };

    Ok(ExposureReport {
        interface,
        visible_messages,
        visible_tokens: visible,
        total_tokens: total,
        exposure_numerator: *ratio.numer(),
        exposure_denominator: (*ratio.denom()).max(1),
        exposure_display: display_ratio(ratio),
        anomaly_visible,
    })
}

/// Human rendering of what the interface shows, for the CLI.
pub fn render_text(report: &ExposureReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "interface={} visible_tokens={} total_tokens={} exposure={} anomaly_visible={}\n",
        report.interface.as_str(),
        report.visible_tokens,
        report.total_tokens,
        report.exposure_display,
        report.anomaly_visible
    ));
    for message in &report.visible_messages {
        let text: String = message.text.chars().take(96).collect();
        let suffix = if message.text.chars().count() > 96 {
            "…"
        } else {
            ""
        };
        out.push_str(&format!(
            "  [turn {:>2}] {:<18} {}{}\n",
            message.turn_index, message.kind, text, suffix
        ));
    }
    out
}
