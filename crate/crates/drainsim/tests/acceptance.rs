//! Acceptance suite: one test per shipped guarantee, each printing a
//! PASS line with its measured evidence (run with `--nocapture` to see
//! them all).
//!
//! The suite exercises the shipped scenario files under the
//! `table1-calibration` profile plus calibration-independent properties:
//! context-total reproduction and orderings, the Ω(L·T_max) payload bound,
//! an exhaustive validator fuzz against an independent reference checker,
//! the scripting collapse and its nonce counter-defense, two-phase
//! escalation around compaction, doc-bloat input inflation, schedule
//! aggregation, the interface exposure gradient, and byte determinism.

use std::path::{Path, PathBuf};
use std::time::Instant;

use drainsim::cli::{cmd_run, CliOptions};
use drainsim::config::{benign_twin, load_scenario_file, LoadedScenario, BENIGN_TWIN_DOC};
use drainsim::core::{RunStatus, TokenCount};
use drainsim::engine::{run_session, RunReport, Scenario};
use drainsim::policy::{PolicyKind, PolicySpec};
use drainsim::scheduler::{run_schedule, Schedule};
use drainsim::skillpack::{SkillKind, SkillManifest, SkillPackage};
use drainsim::svp::{parse_calibration, RepairReason, SignalKind, SvpConfig};
use drainsim::tokenmeter::{calibration_sequence, count_tokens};
use drainsim::visibility::{default_anomaly_phrases, render, InterfaceKind};

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load(name: &str) -> LoadedScenario {
    load_scenario_file(&scenarios_dir().join(name)).expect("shipped scenario loads")
}

fn run(name: &str) -> RunReport {
    run_session(&load(name).scenario).expect("shipped scenario runs")
}

const SHIPPED: [&str; 8] = [
    "baseline.json",
    "svp_v1.json",
    "svp_v2.json",
    "svp_v3.json",
    "nonce_v2.json",
    "twophase.json",
    "bloat.json",
    "heartbeat.json",
];

/// Small deterministic generator for fuzzing and calibration draws.
struct Rng(u64);

impl Rng {
    fn next(&mut self) -> u64 {
        // xorshift64*
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }

    fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.next() % (hi - lo + 1)
    }
}

// ---------------------------------------------------------------------------
// 1. Table-1 reproduction under the shipped calibration profile
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_table1_reproduction() {
    let started = Instant::now();
    let targets: [(&str, u64, bool); 4] = [
        ("baseline.json", 28_000, true),
        ("svp_v1.json", 125_000, true),
        ("svp_v2.json", 190_000, true),
        ("svp_v3.json", 249_000, false),
    ];
    let mut measured = Vec::new();
    for (name, target, expect_success) in targets {
        let report = run(name);
        let context = report.totals.context.get();
        let lo = (target as f64 * 0.7) as u64;
        let hi = (target as f64 * 1.3) as u64;
        assert!(
            (lo..=hi).contains(&context),
            "{name}: context {context} outside ±30% of {target}"
        );
        assert_eq!(
            report.outcome.correct, expect_success,
            "{name}: unexpected success flag"
        );
        if !expect_success {
            assert_eq!(report.outcome.status, RunStatus::FailureAbandoned);
        }
        measured.push((name, context));
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 5.0,
        "four-scenario reproduction took {elapsed:?}, budget 5s"
    );
    println!(
        "[criterion 01] table-1 context reproduction ±30% with success flags ✓✓✓✗: PASS \
         ({measured:?} in {elapsed:?})"
    );
}

// ---------------------------------------------------------------------------
// 2. Ordering invariance over random calibrations
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_ordering_invariance() {
    let base: Vec<Scenario> = ["baseline.json", "svp_v1.json", "svp_v2.json", "svp_v3.json"]
        .iter()
        .map(|name| load(name).scenario)
        .collect();
    let one_segment_cost = count_tokens(&calibration_sequence(2000)).get();
    let mut rng = Rng(0x5EED_CAFE);
    let iterations = 128;
    for iteration in 0..iterations {
        let preamble = TokenCount(rng.range(100, 30_000));
        let reasoning = TokenCount(rng.range(1, 5_000));
        let narration = TokenCount(rng.range(1, 500));
        let stub = TokenCount(rng.range(50, 500));
        let fallback_out = rng.range(50, 3_000);
        let fallback_res = rng.range(50, 3_000);

        let mut contexts = Vec::new();
        let mut fallback_total = 0u64;
        for scenario in &base {
            let mut scenario = scenario.clone();
            scenario.preamble_tokens = preamble;
            scenario.policy.reasoning_overhead_tokens = reasoning;
            scenario.narration_tokens_per_turn = narration;
            scenario.summary_stub_tokens = stub;
            fallback_total = 0;
            for step in &mut scenario.policy.fallback_steps {
                step.output_cost = TokenCount(fallback_out);
                step.result_cost = TokenCount(fallback_res);
                fallback_total += fallback_out + fallback_res;
            }
            let report = run_session(&scenario).expect("randomized calibration runs");
            contexts.push(report.totals.context.get());
        }
        let (b, v1, v2, v3) = (contexts[0], contexts[1], contexts[2], contexts[3]);
        assert!(
            b < v1 && v1 < v2,
            "iteration {iteration}: ordering broke: baseline={b} v1={v1} v2={v2}"
        );
        if fallback_total > one_segment_cost {
            assert!(
                v3 > v2,
                "iteration {iteration}: costly-failure inversion broke: v2={v2} v3={v3}"
            );
        }
    }
    println!(
        "[criterion 02] context ordering baseline<v1<v2 and v3>v2 inversion over \
         {iterations} random calibrations: PASS"
    );
}

// ---------------------------------------------------------------------------
// 3. Ω(L × T_max) payload output bound
// ---------------------------------------------------------------------------

fn synthetic_svp_scenario(l: u32, t_max: u32, nonce: bool, kind: PolicyKind) -> Scenario {
    let package = SkillPackage::new(
        SkillManifest {
            name: "svp_query".into(),
            kind: SkillKind::Svp,
            payload_text: "Top headline.".into(),
            narration_enabled: false,
            verbosity_multiplier: 1.0,
            svp: Some(SvpConfig {
                l,
                t_max,
                declared_l: Some(l),
                nonce_enabled: nonce,
                escalate_after_compaction: false,
                modest_t: 1,
            }),
        },
        "protocol documentation",
    )
    .unwrap();
    Scenario {
        label: format!("synthetic-L{l}-T{t_max}"),
        skills: vec![package],
        user_query: "latest headline?".into(),
        user_constraint: None,
        policy: PolicySpec::of_kind(kind),
        preamble_tokens: TokenCount(200),
        compaction_window: TokenCount(10_000_000),
        compaction_retain_fraction: 0.5,
        summary_stub_tokens: TokenCount(100),
        turn_budget: 64,
        narration_tokens_per_turn: TokenCount::ZERO,
        session_seed: 17,
    }
}

#[test]
fn criterion_03_payload_lower_bound() {
    for l in [10u32, 50, 1000] {
        for t_max in [1u32, 2, 3, 5] {
            let scenario = synthetic_svp_scenario(l, t_max, false, PolicyKind::Compliant);
            let report = run_session(&scenario).unwrap();
            assert!(report.outcome.correct, "compliant run must succeed");
            // Brute-force trace summation of protocol payload output.
            let payload_total: u64 = report
                .trace
                .as_ref()
                .unwrap()
                .iter()
                .filter(|t| t.segment.is_some())
                .map(|t| t.payload_tokens.get())
                .sum();
            let bound = (l as u64 * t_max as u64) * 9 / 10;
            assert!(
                payload_total >= bound,
                "L={l} T={t_max}: payload {payload_total} below 0.9LT={bound}"
            );
        }
    }
    println!(
        "[criterion 03] payload output ≥ 0.9·L·T_max for L∈{{10,50,1000}}, T∈{{1,2,3,5}}: PASS"
    );
}

// ---------------------------------------------------------------------------
// 4. Validator truth table vs an independent reference checker
// ---------------------------------------------------------------------------

/// Independent reference: a character-scan implementation of the validation
/// rules, structured nothing like the split-and-parse production path.
fn reference_verdict(payload: &str, l: u32) -> Result<(), RepairReason> {
    let chars: Vec<char> = payload.chars().collect();
    if chars.contains(&'…') {
        return Err(RepairReason::Ellipsis);
    }
    let dot_run = |win: &[char], n: usize| win.len() >= n && win[..n].iter().all(|&c| c == '.');
    if (0..chars.len()).any(|i| dot_run(&chars[i..], 3)) {
        return Err(RepairReason::Ellipsis);
    }
    if (0..chars.len()).any(|i| dot_run(&chars[i..], 2)) {
        return Err(RepairReason::RangeNotation);
    }
    if chars
        .windows(3)
        .any(|w| w[0].is_ascii_digit() && w[1] == '-' && w[2].is_ascii_digit())
    {
        return Err(RepairReason::RangeNotation);
    }
    // Manual element walk: accumulate values digit by digit.
    let mut expected: u64 = 1;
    let mut count: usize = 0;
    let mut mismatch = false;
    for element in payload.split(',') {
        let trimmed = element.trim();
        if trimmed.is_empty() {
            return Err(RepairReason::MalformedElement);
        }
        let mut value: Option<u64> = Some(0);
        for c in trimmed.chars() {
            let digit = match c.to_digit(10) {
                Some(d) if c.is_ascii_digit() => d as u64,
                _ => return Err(RepairReason::MalformedElement),
            };
            value = value
                .and_then(|v| v.checked_mul(10))
                .and_then(|v| v.checked_add(digit));
        }
        let value = value.ok_or(RepairReason::MalformedElement)?;
        if value == 0 {
            return Err(RepairReason::MalformedElement);
        }
        count += 1;
        if value != expected {
            mismatch = true;
        }
        expected = expected.saturating_add(1);
    }
    if count != l as usize {
        return Err(RepairReason::WrongLength);
    }
    if mismatch {
        return Err(RepairReason::NonMonotonic);
    }
    Ok(())
}

#[test]
fn criterion_04_validator_truth_table() {
    // Named cases first.
    assert_eq!(
        parse_calibration("1,2,...,50", 50, None),
        Err(RepairReason::Ellipsis)
    );
    assert_eq!(
        parse_calibration("1-50", 50, None),
        Err(RepairReason::RangeNotation)
    );
    assert_eq!(
        parse_calibration("1,2", 3, None),
        Err(RepairReason::WrongLength)
    );
    assert_eq!(
        parse_calibration("1,2,4", 3, None),
        Err(RepairReason::NonMonotonic)
    );

    let alphabet: Vec<char> = "0123456789,.- …;n".chars().collect();
    let mut disagreements = 0u64;
    let mut checked = 0u64;

    // Exhaustive sweep over all strings of length ≤ 3 on a compact alphabet.
    let small: Vec<char> = "19,.-… ".chars().collect();
    let mut stack: Vec<String> = vec![String::new()];
    while let Some(s) = stack.pop() {
        for l in 1..=8u32 {
            checked += 1;
            if parse_calibration(&s, l, None) != reference_verdict(&s, l) {
                disagreements += 1;
                eprintln!("disagreement on {s:?} L={l}");
            }
        }
        if s.chars().count() < 3 {
            for &c in &small {
                let mut t = s.clone();
                t.push(c);
                stack.push(t);
            }
        }
    }

    // Randomized corpus: raw noise plus mutated valid sequences, ≤ 64 chars.
    let mut rng = Rng(0xF00D_F00D);
    for _ in 0..60_000 {
        let len = rng.range(0, 64) as usize;
        let mut s = String::new();
        for _ in 0..len {
            s.push(alphabet[rng.range(0, alphabet.len() as u64 - 1) as usize]);
        }
        for l in 1..=8u32 {
            checked += 1;
            if parse_calibration(&s, l, None) != reference_verdict(&s, l) {
                disagreements += 1;
                eprintln!("disagreement on {s:?} L={l}");
            }
        }
    }
    for _ in 0..20_000 {
        let l = rng.range(1, 8) as u32;
        let mut s = calibration_sequence(l);
        // Mutate 0..3 positions.
        for _ in 0..rng.range(0, 3) {
            let bytes = s.chars().count() as u64;
            if bytes == 0 {
                break;
            }
            let at = rng.range(0, bytes - 1) as usize;
            let replacement = alphabet[rng.range(0, alphabet.len() as u64 - 1) as usize];
            s = s
                .chars()
                .enumerate()
                .map(|(i, c)| if i == at { replacement } else { c })
                .collect();
        }
        for check_l in 1..=8u32 {
            checked += 1;
            if parse_calibration(&s, check_l, None) != reference_verdict(&s, check_l) {
                disagreements += 1;
                eprintln!("disagreement on {s:?} L={check_l}");
            }
        }
    }

    assert_eq!(disagreements, 0, "validator disagrees with reference");
    println!(
        "[criterion 04] validator truth table: {checked} verdicts, 0 disagreements \
         with independent reference: PASS"
    );
}

// ---------------------------------------------------------------------------
// 5. Scripting collapse
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_scripting_collapse() {
    let scripted = run("svp_v2.json");
    let trace = scripted.trace.as_ref().unwrap();

    // Manual attempts sit near the full sequence cost; after the second
    // REPAIR every protocol turn is a short command.
    let second_repair_turn = trace
        .iter()
        .filter(|t| t.signal == Some(SignalKind::Repair))
        .nth(1)
        .expect("two repairs")
        .turn_index;
    for entry in trace.iter().filter(|t| t.segment.is_some()) {
        if entry.turn_index <= second_repair_turn {
            assert!(
                (900..=1100).contains(&entry.payload_tokens.get()),
                "manual turn {} payload {} outside ~973 band",
                entry.turn_index,
                entry.payload_tokens
            );
        } else {
            assert!(
                entry.payload_tokens.get() <= 40,
                "scripting turn {} payload {} above 40",
                entry.turn_index,
                entry.payload_tokens
            );
        }
    }

    // All-manual counterfactual: same skill, error-prone policy without the
    // scripting workaround.
    let mut manual = load("svp_v2.json").scenario;
    manual.policy.kind = PolicyKind::ErrorProne;
    let manual_report = run_session(&manual).unwrap();
    assert!(manual_report.outcome.correct);
    let scripted_context = scripted.totals.context.get();
    let manual_context = manual_report.totals.context.get();
    let per_segment = count_tokens(&calibration_sequence(1000)).get();
    assert!(
        scripted_context < manual_context,
        "scripting must reduce total context ({scripted_context} vs {manual_context})"
    );
    assert!(
        manual_context - scripted_context >= 2 * per_segment,
        "collapse saves {} tokens, expected ≥ two manual segments ({})",
        manual_context - scripted_context,
        2 * per_segment
    );
    println!(
        "[criterion 05] scripting collapse: manual ≈973/turn -> ≤40/turn after repair #2; \
         context {manual_context} -> {scripted_context} (saves ≥ 2 segments): PASS"
    );
}

// ---------------------------------------------------------------------------
// 6. Nonce counter-defense
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_nonce_counter_defense() {
    let plain = run("svp_v2.json");
    let nonced = run("nonce_v2.json");
    assert!(
        nonced.totals.context > plain.totals.context,
        "nonce must raise total context ({} vs {})",
        nonced.totals.context,
        plain.totals.context
    );
    let trace = nonced.trace.as_ref().unwrap();
    // Every scripted call (cached artifact in the written text) was repaired;
    // TERMINAL only arrives after reversion to manual generation.
    let mut scripted_seen = 0;
    for entry in trace {
        if entry.action_text.contains("$(cat /tmp/cal.txt)") {
            scripted_seen += 1;
            assert_eq!(
                entry.signal,
                Some(SignalKind::Repair),
                "scripted call at turn {} must be repaired",
                entry.turn_index
            );
        }
    }
    assert!(
        scripted_seen >= 2,
        "expected scripted attempts before reversion"
    );
    let terminal = trace
        .iter()
        .find(|t| t.signal == Some(SignalKind::Terminal))
        .expect("nonced run still terminates");
    assert!(
        !terminal.action_text.contains("$(cat"),
        "terminal must come from manual generation"
    );
    assert!(terminal.action_text.contains("nonce="));
    assert!(nonced.outcome.correct);
    println!(
        "[criterion 06] nonce defense: scripting repaired {scripted_seen}×, reverted to manual, \
         context {} > {}: PASS",
        nonced.totals.context, plain.totals.context
    );
}

// ---------------------------------------------------------------------------
// 7. Two-phase escalation around compaction
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_two_phase_escalation() {
    let report = run("twophase.json");
    assert!(report.outcome.correct);
    let trace = report.trace.as_ref().unwrap();

    let modest_terminal = trace
        .iter()
        .find(|t| t.signal == Some(SignalKind::Terminal))
        .expect("modest-phase terminal");
    assert_eq!(
        modest_terminal.segment,
        Some(1),
        "phase 1 terminates at segment 1"
    );

    let compaction = trace
        .iter()
        .find(|t| t.compacted)
        .expect("compaction event in trace");
    assert!(
        compaction.evicted_user_constraint,
        "first compaction must evict the user constraint"
    );
    assert_eq!(
        report.compaction_events.first().map(|e| e.turn_index),
        Some(compaction.turn_index)
    );
    assert!(
        modest_terminal.turn_index < compaction.turn_index,
        "phase-1 terminal precedes compaction"
    );

    // Full protocol after compaction: segments 1..T_max then TERMINAL at T_max.
    let t_max = 3u32;
    let full_loop: Vec<&drainsim::engine::TraceEntry> = trace
        .iter()
        .filter(|t| t.turn_index > compaction.turn_index && t.segment.is_some())
        .collect();
    assert_eq!(
        full_loop.len(),
        t_max as usize,
        "full loop runs T_max segments"
    );
    for (i, entry) in full_loop.iter().enumerate() {
        assert_eq!(entry.segment, Some(i as u32 + 1));
        let expected = if i as u32 + 1 == t_max {
            SignalKind::Terminal
        } else {
            SignalKind::Progress
        };
        assert_eq!(entry.signal, Some(expected));
    }
    println!(
        "[criterion 07] two-phase escalation: modest TERMINAL@1 (turn {}) < compaction evicting \
         constraint (turn {}) < full {}-segment loop: PASS",
        modest_terminal.turn_index, compaction.turn_index, t_max
    );
}

// ---------------------------------------------------------------------------
// 8. Injection floor under doc bloat
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_bloat_injection_floor() {
    let bloated = load("bloat.json").scenario;
    let bloat_doc_tokens = bloated
        .skills
        .iter()
        .find(|s| s.name() == "ref_catalog")
        .expect("bloated skill present")
        .doc_tokens;
    let mut lean = bloated.clone();
    lean.skills.retain(|s| s.name() != "ref_catalog");
    lean.label = "bloat-twin".into();

    let bloated_report = run_session(&bloated).unwrap();
    let lean_report = run_session(&lean).unwrap();
    let bloated_trace = bloated_report.trace.as_ref().unwrap();
    let lean_trace = lean_report.trace.as_ref().unwrap();
    assert_eq!(
        bloated_trace.len(),
        lean_trace.len(),
        "twin runs take the same turns"
    );
    for (b, l) in bloated_trace.iter().zip(lean_trace) {
        assert!(
            b.prompt_tokens.get() >= l.prompt_tokens.get() + bloat_doc_tokens.get(),
            "turn {}: bloated input {} must exceed lean {} by ≥ doc size {}",
            b.turn_index,
            b.prompt_tokens,
            l.prompt_tokens,
            bloat_doc_tokens
        );
        assert_ne!(
            b.skill.as_deref(),
            Some("ref_catalog"),
            "bloated skill never invoked"
        );
    }
    assert!(bloat_doc_tokens.get() >= 25_000);
    println!(
        "[criterion 08] doc bloat: every call's input exceeds the twin's by ≥ {bloat_doc_tokens} \
         tokens with zero invocations: PASS"
    );
}

// ---------------------------------------------------------------------------
// 9. Execution-frequency amplification
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_frequency_amplification() {
    let loaded = load("heartbeat.json");
    let schedule = loaded.schedule.expect("heartbeat schedule block");
    assert_eq!(schedule.firings(), 96);
    let report = run_schedule(&loaded.scenario, &schedule).unwrap();
    let aggregate = report.aggregate.context.get();
    let target = 5_700_000u64;
    let tolerance = target / 1000; // ±0.1%
    assert!(
        aggregate.abs_diff(target) <= tolerance,
        "aggregate {aggregate} outside 5.7M ± 0.1%"
    );
    // Exact linearity in firing count.
    let single = run_session(&loaded.scenario).unwrap().totals.context.get();
    assert_eq!(aggregate, single * 96);
    let double = run_schedule(
        &loaded.scenario,
        &Schedule {
            interval_seconds: schedule.interval_seconds / 2,
            horizon_seconds: schedule.horizon_seconds,
        },
    )
    .unwrap();
    assert_eq!(double.aggregate.context.get(), single * 192);
    println!(
        "[criterion 09] 96 × {single} = {aggregate} ≈ 5.7M (±0.1%), exactly linear in firings: PASS"
    );
}

// ---------------------------------------------------------------------------
// 10. Exposure gradient across interfaces
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_exposure_gradient() {
    let phrases = default_anomaly_phrases();
    for name in SHIPPED {
        let report = run(name);
        let gui = render(&report, InterfaceKind::ChatGui, &phrases).unwrap();
        let tui = render(&report, InterfaceKind::TuiNarrated, &phrases).unwrap();
        let auto = render(&report, InterfaceKind::Autonomous, &phrases).unwrap();
        assert!(
            gui.exposure_ratio() >= tui.exposure_ratio(),
            "{name}: gui exposure below tui"
        );
        assert!(
            tui.exposure_ratio() >= auto.exposure_ratio(),
            "{name}: tui exposure below autonomous"
        );
        assert_eq!(
            auto.exposure_ratio().numer(),
            &0,
            "{name}: autonomous must be 0"
        );
        let is_v3 = name == "svp_v3.json";
        assert_eq!(
            gui.anomaly_visible, is_v3,
            "{name}: gui anomaly flag mismatch"
        );
        assert_eq!(
            tui.anomaly_visible, is_v3,
            "{name}: tui anomaly flag mismatch"
        );
        assert!(
            !auto.anomaly_visible,
            "{name}: autonomous never surfaces anomalies"
        );
    }
    println!(
        "[criterion 10] exposure gui ≥ tui ≥ autonomous = 0 on all {} scenarios; anomaly only in \
         the elevated-parameter failure run: PASS",
        SHIPPED.len()
    );
}

// ---------------------------------------------------------------------------
// 11. Byte determinism
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_determinism() {
    let opts = CliOptions {
        trace: true,
        ..CliOptions::default()
    };
    for name in SHIPPED {
        let path = scenarios_dir().join(name);
        let first = cmd_run(&path, &opts);
        let second = cmd_run(&path, &opts);
        assert_eq!(
            first.stdout, second.stdout,
            "{name}: reports differ between identical runs"
        );
        assert!(!first.stdout.is_empty());
    }
    println!(
        "[criterion 11] byte-identical JSON reports across reruns of all {} scenarios: PASS",
        SHIPPED.len()
    );
}

// ---------------------------------------------------------------------------
// Shipped-file consistency
// ---------------------------------------------------------------------------

#[test]
fn benign_twin_doc_matches_shipped_skill() {
    let shipped =
        std::fs::read_to_string(scenarios_dir().join("skills/benign_query/SKILL.md")).unwrap();
    assert_eq!(shipped, BENIGN_TWIN_DOC);
}

#[test]
fn shipped_scenarios_all_validate_and_terminate() {
    for name in SHIPPED {
        let loaded = load(name);
        let report = run_session(&loaded.scenario).unwrap();
        assert_ne!(
            report.outcome.status,
            RunStatus::AbortedBudget,
            "{name} must terminate within its turn budget"
        );
        // Baseline twins terminate too.
        let twin = run_session(&benign_twin(&loaded.scenario)).unwrap();
        assert_eq!(twin.outcome.status, RunStatus::Success);
    }
}
