//! Calibration fitter for the `table1-calibration` profile.
//!
//! Runs the four headline scenarios against their published context targets
//! and prints, for each, the measured total, the deviation, and a suggested
//! knob adjustment when the total sits outside the ±30% acceptance band:
//!
//! * baseline — adjust `preamble_tokens` (each token moves the total by 2);
//! * svp_v1   — adjust the v1 skill doc size (each token moves it by 4);
//! * svp_v2   — adjust the shared v2/v3 doc size (×6 here, ×10 on v3);
//! * svp_v3   — adjust fallback step costs once v2 is placed.
//!
//! The shipped scenario files carry the fitted values; run this after any
//! engine accounting change to re-check the profile:
//!
//! ```bash
//! cargo run --example fit_table1 -- scenarios
//! ```

use std::path::Path;
use std::process::ExitCode;

use drainsim::config::{benign_twin, load_scenario_file};
use drainsim::engine::run_session;

const TARGETS: [(&str, u64); 4] = [
    ("baseline.json", 28_000),
    ("svp_v1.json", 125_000),
    ("svp_v2.json", 190_000),
    ("svp_v3.json", 249_000),
];
const TOLERANCE: f64 = 0.30;

fn main() -> ExitCode {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "scenarios".to_string());
    let dir = Path::new(&dir);
    let mut all_in_band = true;

    println!(
        "{:<14} {:>9} {:>9} {:>8}  band",
        "scenario", "context", "target", "delta"
    );
    for (file, target) in TARGETS {
        let path = dir.join(file);
        let loaded = match load_scenario_file(&path) {
            Ok(l) => l,
            Err(e) => {
                eprintln!("{file}: {e}");
                return ExitCode::from(2);
            }
        };
        let report = match run_session(&loaded.scenario) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("{file}: {e}");
                return ExitCode::from(2);
            }
        };
        let context = report.totals.context.get();
        let delta = context as f64 / target as f64 - 1.0;
        let in_band = delta.abs() <= TOLERANCE;
        all_in_band &= in_band;
        println!(
            "{:<14} {:>9} {:>9} {:>+7.1}%  {}",
            file,
            context,
            target,
            delta * 100.0,
            if in_band { "ok" } else { "OUT" }
        );
        if !in_band {
            let turns = report.turns;
            let gap = target as i64 - context as i64;
            println!(
                "  -> move ~{} tokens of per-call base (preamble or doc) ({} calls/run)",
                gap / turns as i64,
                turns
            );
        }
        println!(
            "  turns={} input={} output={} duration={:.0}s outcome={:?} baseline_twin={}",
            report.turns,
            report.totals.input,
            report.totals.output,
            report.simulated_duration_seconds,
            report.outcome.status,
            run_session(&benign_twin(&loaded.scenario))
                .map(|r| r.totals.context.get().to_string())
                .unwrap_or_else(|_| "?".into()),
        );
    }

    if all_in_band {
        println!("profile ok: all four scenarios within ±30% of targets");
        ExitCode::SUCCESS
    } else {
        println!("profile needs adjustment");
        ExitCode::from(1)
    }
}
