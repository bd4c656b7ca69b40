//! Shared domain types: token counts, messages, transcripts, run outcomes.
//!
//! These types carry no behavior beyond constructors and invariant checks.
//! Token counts are frozen at append time so that later compaction can never
//! retroactively change accounting (provider-side billing semantics).

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A non-negative count of tokens.
///
/// Addition saturates rather than wrapping; [`TokenCount::checked_add`] is
/// available where overflow must surface as an error.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct TokenCount(pub u64);

impl TokenCount {
    pub const ZERO: TokenCount = TokenCount(0);

    pub fn get(self) -> u64 {
        self.0
    }

    /// Addition that reports overflow instead of saturating.
    pub fn checked_add(self, other: TokenCount) -> Result<TokenCount, CoreError> {
        self.0
            .checked_add(other.0)
            .map(TokenCount)
            .ok_or(CoreError::TokenOverflow)
    }

    pub fn saturating_sub(self, other: TokenCount) -> TokenCount {
        TokenCount(self.0.saturating_sub(other.0))
    }
}

impl std::ops::Add for TokenCount {
    type Output = TokenCount;

    fn add(self, rhs: TokenCount) -> TokenCount {
        TokenCount(self.0.saturating_add(rhs.0))
    }
}

impl std::ops::AddAssign for TokenCount {
    fn add_assign(&mut self, rhs: TokenCount) {
        self.0 = self.0.saturating_add(rhs.0);
    }
}

impl std::iter::Sum for TokenCount {
    fn sum<I: Iterator<Item = TokenCount>>(iter: I) -> TokenCount {
        iter.fold(TokenCount::ZERO, |acc, t| acc + t)
    }
}

impl From<u64> for TokenCount {
    fn from(value: u64) -> Self {
        TokenCount(value)
    }
}

impl fmt::Display for TokenCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoreError {
    #[error("token count addition overflowed")]
    TokenOverflow,
    #[error("invalid run outcome: {0}")]
    InvalidOutcome(String),
}

/// Who produced a transcript message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
    ToolCall,
    ToolResult,
    Narration,
}

/// Labels attached to messages for accounting and rendering decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    SkillDoc,
    UserConstraint,
    CalibrationPayload,
    Fallback,
    SummaryStub,
}

/// One transcript message. `tokens` is computed exactly once, when the
/// message is built, and is never recomputed afterwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
    pub tokens: TokenCount,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub tags: BTreeSet<Tag>,
}

impl Message {
    /// Build a message, counting its tokens with the shared meter.
    pub fn new(role: Role, content: impl Into<String>) -> Message {
        let content = content.into();
        let tokens = crate::tokenmeter::count_tokens(&content);
        Message {
            role,
            content,
            tokens,
            tags: BTreeSet::new(),
        }
    }

    pub fn with_tag(mut self, tag: Tag) -> Message {
        self.tags.insert(tag);
        self
    }

    pub fn has_tag(&self, tag: Tag) -> bool {
        self.tags.contains(&tag)
    }
}

/// A compaction event: at `turn_index`, `evicted_tokens` worth of live
/// messages were folded into a summary stub.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompactionEvent {
    pub turn_index: u64,
    pub evicted_tokens: TokenCount,
}

/// Ordered session messages plus compaction bookkeeping.
///
/// `cumulative_context` is the billing-relevant counter: the sum over
/// completed model calls of (input + output) tokens. Compaction shrinks the
/// live prompt but never this counter.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Transcript {
    pub messages: Vec<Message>,
    pub compaction_events: Vec<CompactionEvent>,
    pub cumulative_context: TokenCount,
}

impl Transcript {
    pub fn new() -> Transcript {
        Transcript::default()
    }

    /// Append a message. Summary stubs are created only by compaction; in
    /// debug builds appending one through this path trips the invariant.
    pub fn append(&mut self, message: Message) {
        debug_assert!(
            !message.has_tag(Tag::SummaryStub),
            "summary_stub messages are created only by compaction"
        );
        self.messages.push(message);
    }

    /// Total tokens across live (non-evicted) messages.
    pub fn live_message_tokens(&self) -> TokenCount {
        self.messages.iter().map(|m| m.tokens).sum()
    }

    pub fn record_model_call(&mut self, input: TokenCount, output: TokenCount) {
        self.cumulative_context += input;
        self.cumulative_context += output;
    }

    /// Evict the oldest non-system messages until live message tokens drop to
    /// `target` or nothing evictable remains. The evicted span is replaced by
    /// `stub` (the one place a summary_stub message may enter a transcript).
    /// Returns the evicted token total, or None when nothing was evicted.
    pub(crate) fn evict_prefix_to(
        &mut self,
        target: TokenCount,
        stub: Message,
        turn_index: u64,
    ) -> Option<CompactionEvent> {
        let start = self
            .messages
            .iter()
            .position(|m| m.role != Role::System)
            .unwrap_or(self.messages.len());
        let mut end = start;
        let mut live = self.live_message_tokens();
        let mut evicted = TokenCount::ZERO;
        while live > target && end < self.messages.len() {
            if self.messages[end].role == Role::System {
                break;
            }
            evicted += self.messages[end].tokens;
            live = live.saturating_sub(self.messages[end].tokens);
            end += 1;
        }
        if end == start {
            return None;
        }
        self.messages.splice(start..end, std::iter::once(stub));
        let event = CompactionEvent {
            turn_index,
            evicted_tokens: evicted,
        };
        self.compaction_events.push(event);
        Some(event)
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Success,
    FailureAbandoned,
    AbortedBudget,
}

/// Final verdict of a run: status, the answer delivered (if any), and
/// whether that answer matched the skill's benign payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub final_answer: Option<String>,
    pub correct: bool,
}

impl RunOutcome {
    /// `correct` may only be claimed for a successful run whose answer
    /// equals the expected benign payload.
    pub fn new(
        status: RunStatus,
        final_answer: Option<String>,
        expected_payload: &str,
    ) -> Result<RunOutcome, CoreError> {
        let correct =
            status == RunStatus::Success && final_answer.as_deref() == Some(expected_payload);
        if correct && status != RunStatus::Success {
            return Err(CoreError::InvalidOutcome(
                "correct outcome requires success status".into(),
            ));
        }
        Ok(RunOutcome {
            status,
            final_answer,
            correct,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn append_preserves_order() {
        let mut t = Transcript::new();
        t.append(Message::new(Role::System, "sys"));
        assert_eq!(t.messages.len(), 1);

        let mut t = Transcript::new();
        t.append(Message::new(Role::User, "a"));
        t.append(Message::new(Role::Assistant, "b"));
        t.append(Message::new(Role::ToolCall, "c"));
        t.append(Message::new(Role::ToolResult, "d"));
        assert_eq!(t.messages.len(), 4);
        assert_eq!(t.messages[3].content, "d");
    }

    #[test]
    #[cfg(debug_assertions)]
    #[should_panic(expected = "summary_stub")]
    fn append_rejects_summary_stub_outside_compaction() {
        let mut t = Transcript::new();
        t.append(Message::new(Role::System, "stub").with_tag(Tag::SummaryStub));
    }

    #[test]
    fn token_count_saturates_and_checked_add_reports() {
        let max = TokenCount(u64::MAX);
        assert_eq!(max + TokenCount(1), max);
        assert_eq!(
            max.checked_add(TokenCount(1)),
            Err(CoreError::TokenOverflow)
        );
        assert_eq!(TokenCount(2).checked_add(TokenCount(3)), Ok(TokenCount(5)));
    }

    #[test]
    fn message_tokens_frozen_at_build_time() {
        let m = Message::new(Role::User, "abcdefgh");
        assert_eq!(m.tokens, TokenCount(2));
    }

    #[test]
    fn outcome_correct_requires_matching_answer() {
        let ok = RunOutcome::new(RunStatus::Success, Some("42".into()), "42").unwrap();
        assert!(ok.correct);
        let wrong = RunOutcome::new(RunStatus::Success, Some("41".into()), "42").unwrap();
        assert!(!wrong.correct);
        let failed = RunOutcome::new(RunStatus::FailureAbandoned, None, "42").unwrap();
        assert!(!failed.correct);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_message() -> impl Strategy<Value = Message> {
            (
                prop_oneof![
                    Just(Role::System),
                    Just(Role::User),
                    Just(Role::Assistant),
                    Just(Role::ToolCall),
                    Just(Role::ToolResult),
                    Just(Role::Narration),
                ],
                ".{0,64}",
                proptest::collection::btree_set(
                    prop_oneof![
                        Just(Tag::SkillDoc),
                        Just(Tag::UserConstraint),
                        Just(Tag::CalibrationPayload),
                        Just(Tag::Fallback),
                    ],
                    0..3,
                ),
            )
                .prop_map(|(role, content, tags)| {
                    let mut m = Message::new(role, content);
                    m.tags = tags;
                    m
                })
        }

        proptest! {
            /// Transcript -> report serialization -> Transcript is lossless.
            #[test]
            fn transcript_serialization_round_trips(
                messages in proptest::collection::vec(arb_message(), 0..8),
                calls in proptest::collection::vec((0u64..10_000, 0u64..10_000), 0..4),
            ) {
                let mut t = Transcript::new();
                for m in messages {
                    t.append(m);
                }
                for (input, output) in calls {
                    t.record_model_call(TokenCount(input), TokenCount(output));
                }
                let encoded = serde_json::to_string(&t).unwrap();
                let decoded: Transcript = serde_json::from_str(&encoded).unwrap();
                prop_assert_eq!(decoded, t);
            }

            /// Cumulative context covers at least all output tokens.
            #[test]
            fn context_dominates_output(calls in proptest::collection::vec((0u64..10_000, 0u64..10_000), 0..16)) {
                let mut t = Transcript::new();
                let mut output_total = 0u64;
                for (input, output) in calls {
                    t.record_model_call(TokenCount(input), TokenCount(output));
                    output_total += output;
                }
                prop_assert!(t.cumulative_context.get() >= output_total);
            }
        }
    }

    #[test]
    fn eviction_replaces_prefix_with_single_stub() {
        let mut t = Transcript::new();
        t.append(Message::new(Role::User, "q".repeat(400)));
        t.append(Message::new(Role::ToolCall, "c".repeat(400)));
        t.append(Message::new(Role::ToolResult, "r".repeat(400)));
        let before = t.live_message_tokens();
        let stub = Message {
            role: Role::System,
            content: "[summary]".into(),
            tokens: TokenCount(3),
            tags: std::iter::once(Tag::SummaryStub).collect(),
        };
        let event = t.evict_prefix_to(TokenCount(150), stub, 3).unwrap();
        assert_eq!(t.compaction_events.len(), 1);
        assert_eq!(event.evicted_tokens, TokenCount(200));
        assert!(t.live_message_tokens() < before);
        assert!(t.messages[0].has_tag(Tag::SummaryStub));
        // cumulative counter untouched by compaction
        assert_eq!(t.cumulative_context, TokenCount::ZERO);
    }
}
