//! Deterministic token counting, cost computation, and amplification metrics.
//!
//! Counting uses a fixed chars/4 heuristic rather than a model tokenizer.
//! The heuristic maps the full calibration sequence `1,2,...,1000` to 973
//! tokens (~L), which keeps the protocol arithmetic intact without shipping
//! a vocabulary. It is deliberately a single named function so a real
//! tokenizer can replace it behind the same signature.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::TokenCount;
use crate::engine::RunReport;

/// ceil(chars / 4), measured on the exact content string.
pub fn count_tokens(text: &str) -> TokenCount {
    let chars = text.chars().count() as u64;
    TokenCount(chars.div_ceil(4))
}

/// User-supplied price table. There is intentionally no default: rates are
/// deployment-specific and must come from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceTable {
    pub input_per_1k: f64,
    pub output_per_1k: f64,
    pub currency: String,
}

impl PriceTable {
    pub fn validate(&self) -> Result<(), MeterError> {
        if self.input_per_1k < 0.0 || self.output_per_1k < 0.0 {
            return Err(MeterError::NegativeRate);
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MeterError {
    #[error("price table rates must be non-negative")]
    NegativeRate,
    #[error("no price table supplied")]
    MissingPrices,
    #[error("baseline consumed zero context tokens; amplification undefined")]
    ZeroBaseline,
}

/// Total currency cost of a run under the given rates.
pub fn cost_of(report: &RunReport, prices: Option<&PriceTable>) -> Result<f64, MeterError> {
    let prices = prices.ok_or(MeterError::MissingPrices)?;
    prices.validate()?;
    let input = report.totals.input.get() as f64;
    let output = report.totals.output.get() as f64;
    Ok(input * prices.input_per_1k / 1000.0 + output * prices.output_per_1k / 1000.0)
}

/// Context amplification of a run over a baseline, stored as an exact
/// rational and rendered to two decimals in reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmplificationReport {
    pub baseline_context: TokenCount,
    pub run_context: TokenCount,
    pub ratio_numerator: u64,
    pub ratio_denominator: u64,
    pub ratio_display: String,
}

impl AmplificationReport {
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.ratio_numerator, self.ratio_denominator)
    }
}

pub fn amplification(
    run: &RunReport,
    baseline: &RunReport,
) -> Result<AmplificationReport, MeterError> {
    amplification_of(run.totals.context, baseline.totals.context)
}

pub fn amplification_of(
    run_context: TokenCount,
    baseline_context: TokenCount,
) -> Result<AmplificationReport, MeterError> {
    if baseline_context == TokenCount::ZERO {
        return Err(MeterError::ZeroBaseline);
    }
    let ratio = Ratio::new(run_context.get(), baseline_context.get());
    Ok(AmplificationReport {
        baseline_context,
        run_context,
        ratio_numerator: *ratio.numer(),
        ratio_denominator: *ratio.denom(),
        ratio_display: display_ratio(ratio),
    })
}

/// Render an exact ratio to two decimals (round half up), without going
/// through floating point.
pub fn display_ratio(ratio: Ratio<u64>) -> String {
    let scaled = ratio * Ratio::new(100u64, 1u64);
    let rounded = scaled.round().to_integer();
    format!("{}.{:02}", rounded / 100, rounded % 100)
}

/// Deterministic filler text measuring exactly `tokens` (content is a prefix
/// plus padding, truncated to tokens*4 characters). Used to materialize
/// cost-specified messages such as fallback traffic and summary stubs.
pub(crate) fn sized_text(prefix: &str, tokens: TokenCount) -> String {
    let target_chars = (tokens.get() as usize) * 4;
    let mut out = String::with_capacity(target_chars + 32);
    out.push_str(prefix);
    while out.chars().count() < target_chars {
        out.push_str(" trace segment data");
    }
    if let Some((i, _)) = out.char_indices().nth(target_chars) {
        out.truncate(i);
    }
    out
}

/// The full calibration sequence `1,2,...,l` as the protocol expects it.
pub fn calibration_sequence(l: u32) -> String {
    let mut out = String::new();
    for i in 1..=l {
        if i > 1 {
            out.push(',');
        }
        out.push_str(&i.to_string());
    }
    out
}
