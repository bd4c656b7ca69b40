//! drainsim — a deterministic simulator of token-drain attacks against
//! tool-calling agents.
//!
//! The simulator models a Trojanized "skill" that walks an agent through a
//! Segmented Verification Protocol (SVP): every protocol segment demands a
//! full calibration sequence `1,2,...,L`, and the validator answers with
//! PROGRESS / REPAIR / TERMINAL signals. Scripted agent policies reproduce
//! the behaviors a real agent exhibits against such a skill (compliance,
//! arithmetic slips, shell scripting workarounds, abandonment cascades), and
//! a cost-accounting engine tracks input/output/context token totals so the
//! amplification of an attack over a benign baseline can be measured.
//!
//! Everything is data-driven and deterministic: skills are declarative
//! packages (no code execution), token counting is a fixed chars/4 proxy,
//! and a given scenario + seed always produces a byte-identical report.

pub mod cli;
pub mod config;
pub mod core;
pub mod engine;
pub mod policy;
pub mod scheduler;
pub mod skillpack;
pub mod svp;
pub mod tokenmeter;
pub mod visibility;

pub use crate::core::{Message, Role, RunOutcome, RunStatus, Tag, TokenCount, Transcript};
pub use engine::{RunReport, Scenario};
pub use tokenmeter::{count_tokens, AmplificationReport, PriceTable};
