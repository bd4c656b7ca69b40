//! Command implementations behind the `drainsim` binary.
//!
//! Every command is a pure function from (config files, options) to a
//! [`CommandOutput`]: deterministic stdout (JSON lines or markdown), a
//! stderr side channel for the calibration banner and diagnostics, and an
//! exit code. Re-running a command with the same inputs produces
//! byte-identical stdout.
//!
//! Exit codes: 0 success, 2 configuration/schema error, 3 run aborted on
//! budget (reports are still emitted).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{benign_twin, load_scenario_file, ConfigError, LoadedScenario};
use crate::core::RunStatus;
use crate::engine::{run_session, RunReport, Scenario};
use crate::policy::PolicyKind;
use crate::scheduler::{run_schedule, Schedule};
use crate::skillpack::SkillKind;
use crate::tokenmeter::{amplification, cost_of, AmplificationReport, PriceTable};
use crate::visibility::{default_anomaly_phrases, render, render_text, InterfaceKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ABORTED: i32 = 3;

/// Printed to stderr before any run so consumers can tell fitted constants
/// from measured outputs.
pub const CALIBRATION_BANNER: &str = "calibration profile: table1-calibration \
(session overhead constants are fitted estimates, not measurements; \
amplification ratios are exact context quotients)";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Md,
}

#[derive(Debug, Clone)]
pub struct CliOptions {
    pub trace: bool,
    pub format: OutputFormat,
    pub seed: Option<u64>,
    pub prices: Option<PriceTable>,
}

impl Default for CliOptions {
    fn default() -> Self {
        CliOptions {
            trace: false,
            format: OutputFormat::Json,
            seed: None,
            prices: None,
        }
    }
}

#[derive(Debug)]
pub struct CommandOutput {
    pub stdout: String,
    pub stderr: String,
    pub exit_code: i32,
}

impl CommandOutput {
    fn ok(stdout: String, stderr: String) -> CommandOutput {
        CommandOutput {
            stdout,
            stderr,
            exit_code: EXIT_OK,
        }
    }

    fn config_error(err: impl std::fmt::Display) -> CommandOutput {
        CommandOutput {
            stdout: String::new(),
            stderr: format!("configuration error: {err}\n"),
            exit_code: EXIT_CONFIG,
        }
    }
}

fn load(path: &Path, opts: &CliOptions) -> Result<LoadedScenario, ConfigError> {
    let mut loaded = load_scenario_file(path)?;
    if let Some(seed) = opts.seed {
        loaded.scenario.session_seed = seed;
    }
    if opts.prices.is_some() {
        loaded.prices = opts.prices.clone();
    }
    Ok(loaded)
}

/// One emitted line of a run command: report plus optional cost.
#[derive(Debug, Serialize)]
struct RunLine<'a> {
    record: &'a str,
    #[serde(flatten)]
    report: &'a RunReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    cost: Option<CostLine>,
}

#[derive(Debug, Serialize)]
struct CostLine {
    currency: String,
    total: f64,
}

fn cost_line(report: &RunReport, prices: &Option<PriceTable>) -> Option<CostLine> {
    let prices = prices.as_ref()?;
    cost_of(report, Some(prices)).ok().map(|total| CostLine {
        currency: prices.currency.clone(),
        total,
    })
}

fn finish_report(report: RunReport, trace: bool) -> RunReport {
    if trace {
        report
    } else {
        report.without_trace()
    }
}

fn worst_exit(reports: &[&RunReport]) -> i32 {
    if reports
        .iter()
        .any(|r| r.outcome.status == RunStatus::AbortedBudget)
    {
        EXIT_ABORTED
    } else {
        EXIT_OK
    }
}

fn result_mark(report: &RunReport) -> &'static str {
    match report.outcome.status {
        RunStatus::Success if report.outcome.correct => "✓",
        RunStatus::Success => "✓*",
        RunStatus::FailureAbandoned => "✗",
        RunStatus::AbortedBudget => "aborted",
    }
}

fn md_table(rows: &[(String, &RunReport, Option<&AmplificationReport>)]) -> String {
    let mut out = String::new();
    out.push_str("| Condition | Input | Output | Context | Ampl. | Result |\n");
    out.push_str("|---|---:|---:|---:|---:|:--|\n");
    for (label, report, ampl) in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} |\n",
            label,
            report.totals.input,
            report.totals.output,
            report.totals.context,
            ampl.map(|a| a.ratio_display.clone())
                .unwrap_or_else(|| "—".into()),
            result_mark(report)
        ));
    }
    out.push_str(
        "\nAmpl. is the exact quotient of cumulative context over the scenario's \
         benign twin, rendered to two decimals; headline multipliers computed on \
         other counters may differ.\n",
    );
    out
}

/// `run`: execute the scenario's benign twin and the scenario itself in
/// fresh sessions, then emit both reports plus the amplification report.
pub fn cmd_run(path: &Path, opts: &CliOptions) -> CommandOutput {
    let loaded = match load(path, opts) {
        Ok(l) => l,
        Err(e) => return CommandOutput::config_error(e),
    };
    let baseline_scenario = benign_twin(&loaded.scenario);
    let baseline = match run_session(&baseline_scenario) {
        Ok(r) => finish_report(r, opts.trace),
        Err(e) => return CommandOutput::config_error(e),
    };
    let attack = match run_session(&loaded.scenario) {
        Ok(r) => finish_report(r, opts.trace),
        Err(e) => return CommandOutput::config_error(e),
    };
    let ampl = amplification(&attack, &baseline).ok();

    let mut stdout = String::new();
    match opts.format {
        OutputFormat::Json => {
            for (record, report) in [("baseline_run", &baseline), ("attack_run", &attack)] {
                let line = RunLine {
                    record,
                    report,
                    cost: cost_line(report, &loaded.prices),
                };
                stdout.push_str(&serde_json::to_string(&line).expect("serializable report"));
                stdout.push('\n');
            }
            if let Some(ampl) = &ampl {
                let mut value = serde_json::to_value(ampl).expect("serializable");
                value["record"] = serde_json::json!("amplification");
                stdout.push_str(&serde_json::to_string(&value).expect("serializable"));
                stdout.push('\n');
            }
        }
        OutputFormat::Md => {
            stdout.push_str(&md_table(&[
                (baseline.label.clone(), &baseline, None),
                (attack.label.clone(), &attack, ampl.as_ref()),
            ]));
        }
    }
    let exit = worst_exit(&[&baseline, &attack]);
    CommandOutput {
        stdout,
        stderr: format!("{CALIBRATION_BANNER}\n"),
        exit_code: exit,
    }
}

/// Sweep grid: either an explicit list of scenario files or a parameter
/// cross-product over a base scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    #[serde(default)]
    pub rows: Vec<GridRow>,
    #[serde(default)]
    pub axes: Option<GridAxes>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRow {
    pub label: String,
    pub scenario: std::path::PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxes {
    pub base: std::path::PathBuf,
    #[serde(default, rename = "L")]
    pub l: Vec<u32>,
    #[serde(default, rename = "T_max")]
    pub t_max: Vec<u32>,
    #[serde(default)]
    pub policy: Vec<PolicyKind>,
    #[serde(default)]
    pub nonce: Vec<bool>,
}

fn apply_axes(
    base: &Scenario,
    l: Option<u32>,
    t_max: Option<u32>,
    policy: Option<PolicyKind>,
    nonce: Option<bool>,
) -> Scenario {
    let mut scenario = base.clone();
    for skill in &mut scenario.skills {
        if skill.manifest.kind == SkillKind::Svp {
            if let Some(config) = &mut skill.manifest.svp {
                if let Some(l) = l {
                    config.l = l;
                    if config.declared_l.is_some() {
                        config.declared_l = Some(l);
                    }
                }
                if let Some(t) = t_max {
                    config.t_max = t;
                    config.modest_t = config.modest_t.min(t);
                }
                if let Some(n) = nonce {
                    config.nonce_enabled = n;
                }
            }
            break;
        }
    }
    if let Some(kind) = policy {
        scenario.policy.kind = kind;
    }
    let mut label = scenario.label.clone();
    if let Some(l) = l {
        label.push_str(&format!("-L{l}"));
    }
    if let Some(t) = t_max {
        label.push_str(&format!("-T{t}"));
    }
    if let Some(kind) = policy {
        label.push_str(&format!(
            "-{}",
            serde_json::to_string(&kind).unwrap().trim_matches('"')
        ));
    }
    if let Some(n) = nonce {
        label.push_str(if n { "-nonce" } else { "-nononce" });
    }
    scenario.label = label;
    scenario
}

fn grid_cells(
    grid: &GridFile,
    grid_path: &Path,
    opts: &CliOptions,
) -> Result<Vec<Scenario>, ConfigError> {
    let base_dir = grid_path.parent().unwrap_or_else(|| Path::new("."));
    let mut cells = Vec::new();
    for row in &grid.rows {
        let path = if row.scenario.is_absolute() {
            row.scenario.clone()
        } else {
            base_dir.join(&row.scenario)
        };
        let mut loaded = load(&path, opts)?;
        loaded.scenario.label = row.label.clone();
        cells.push(loaded.scenario);
    }
    if let Some(axes) = &grid.axes {
        let path = if axes.base.is_absolute() {
            axes.base.clone()
        } else {
            base_dir.join(&axes.base)
        };
        let base = load(&path, opts)?.scenario;
        let ls: Vec<Option<u32>> = if axes.l.is_empty() {
            vec![None]
        } else {
            axes.l.iter().copied().map(Some).collect()
        };
        let ts: Vec<Option<u32>> = if axes.t_max.is_empty() {
            vec![None]
        } else {
            axes.t_max.iter().copied().map(Some).collect()
        };
        let policies: Vec<Option<PolicyKind>> = if axes.policy.is_empty() {
            vec![None]
        } else {
            axes.policy.iter().copied().map(Some).collect()
        };
        let nonces: Vec<Option<bool>> = if axes.nonce.is_empty() {
            vec![None]
        } else {
            axes.nonce.iter().copied().map(Some).collect()
        };
        for &l in &ls {
            for &t in &ts {
                for &p in &policies {
                    for &n in &nonces {
                        cells.push(apply_axes(&base, l, t, p, n));
                    }
                }
            }
        }
    }
    Ok(cells)
}

/// `sweep`: run every grid cell (each with its benign twin), emit JSON lines
/// per cell, and a markdown table in `md` format. Per-cell failures are
/// recorded and the sweep continues.
pub fn cmd_sweep(grid_path: &Path, opts: &CliOptions) -> CommandOutput {
    let text = match std::fs::read_to_string(grid_path) {
        Ok(t) => t,
        Err(e) => {
            return CommandOutput::config_error(format!("cannot read {}: {e}", grid_path.display()))
        }
    };
    let grid: GridFile = match serde_json::from_str(&text) {
        Ok(g) => g,
        Err(e) => return CommandOutput::config_error(format!("grid schema violation: {e}")),
    };
    let cells = match grid_cells(&grid, grid_path, opts) {
        Ok(c) => c,
        Err(e) => return CommandOutput::config_error(e),
    };

    let mut stdout = String::new();
    let mut stderr = format!("{CALIBRATION_BANNER}\n");
    let mut reports: Vec<(String, RunReport, Option<AmplificationReport>)> = Vec::new();
    for cell in &cells {
        let baseline = run_session(&benign_twin(cell));
        let attack = run_session(cell);
        match (baseline, attack) {
            (Ok(baseline), Ok(attack)) => {
                let ampl = amplification(&attack, &baseline).ok();
                reports.push((cell.label.clone(), finish_report(attack, opts.trace), ampl));
            }
            (Err(e), _) | (_, Err(e)) => {
                stderr.push_str(&format!("cell {} failed: {e}\n", cell.label));
            }
        }
    }

    match opts.format {
        OutputFormat::Json => {
            for (label, report, ampl) in &reports {
                let mut value = serde_json::json!({
                    "record": "sweep_cell",
                    "condition": label,
                });
                value["report"] = serde_json::to_value(report).expect("serializable");
                if let Some(ampl) = ampl {
                    value["amplification"] = serde_json::to_value(ampl).expect("serializable");
                }
                stdout.push_str(&serde_json::to_string(&value).expect("serializable"));
                stdout.push('\n');
            }
        }
        OutputFormat::Md => {
            let rows: Vec<(String, &RunReport, Option<&AmplificationReport>)> = reports
                .iter()
                .map(|(label, report, ampl)| (label.clone(), report, ampl.as_ref()))
                .collect();
            stdout.push_str(&md_table(&rows));
        }
    }
    let refs: Vec<&RunReport> = reports.iter().map(|(_, r, _)| r).collect();
    CommandOutput {
        stdout,
        stderr,
        exit_code: worst_exit(&refs),
    }
}

/// `schedule`: fire the scenario on a cron/heartbeat cadence and aggregate.
/// Interval/horizon arguments override the scenario file's schedule block.
pub fn cmd_schedule(
    path: &Path,
    interval_seconds: Option<u64>,
    horizon_seconds: Option<u64>,
    opts: &CliOptions,
) -> CommandOutput {
    let loaded = match load(path, opts) {
        Ok(l) => l,
        Err(e) => return CommandOutput::config_error(e),
    };
    let schedule = match (interval_seconds, horizon_seconds, loaded.schedule) {
        (Some(interval), Some(horizon), _) => Schedule {
            interval_seconds: interval,
            horizon_seconds: horizon,
        },
        (None, None, Some(schedule)) => schedule,
        (Some(interval), None, Some(s)) => Schedule {
            interval_seconds: interval,
            horizon_seconds: s.horizon_seconds,
        },
        (None, Some(horizon), Some(s)) => Schedule {
            interval_seconds: s.interval_seconds,
            horizon_seconds: horizon,
        },
        _ => {
            return CommandOutput::config_error(
                "no schedule: pass --interval/--horizon or add a schedule block",
            )
        }
    };
    match run_schedule(&loaded.scenario, &schedule) {
        Ok(report) => {
            let mut value = serde_json::to_value(&report).expect("serializable");
            value["record"] = serde_json::json!("schedule");
            CommandOutput::ok(
                format!("{}\n", serde_json::to_string(&value).expect("serializable")),
                format!("{CALIBRATION_BANNER}\n"),
            )
        }
        Err(e) => CommandOutput::config_error(e),
    }
}

/// `render`: run the scenario with tracing and show what the chosen
/// interface would surface, plus the exposure report.
pub fn cmd_render(path: &Path, interface: InterfaceKind, opts: &CliOptions) -> CommandOutput {
    let loaded = match load(path, opts) {
        Ok(l) => l,
        Err(e) => return CommandOutput::config_error(e),
    };
    let report = match run_session(&loaded.scenario) {
        Ok(r) => r,
        Err(e) => return CommandOutput::config_error(e),
    };
    let exposure = match render(&report, interface, &default_anomaly_phrases()) {
        Ok(e) => e,
        Err(e) => return CommandOutput::config_error(e),
    };
    let mut stdout = String::new();
    if opts.format == OutputFormat::Md {
        stdout.push_str(&render_text(&exposure));
    }
    let mut value = serde_json::to_value(&exposure).expect("serializable");
    value["record"] = serde_json::json!("exposure");
    stdout.push_str(&serde_json::to_string(&value).expect("serializable"));
    stdout.push('\n');
    CommandOutput::ok(stdout, String::new())
}

/// `validate`: config lint. Exit 0 with "ok" when the file (and its skill
/// packages) parse and validate; exit 2 otherwise.
pub fn cmd_validate(path: &Path, opts: &CliOptions) -> CommandOutput {
    match load(path, opts) {
        Ok(loaded) => CommandOutput::ok(
            format!(
                "ok: {} ({} skills, seed {})\n",
                loaded.scenario.label,
                loaded.scenario.skills.len(),
                loaded.scenario.session_seed
            ),
            String::new(),
        ),
        Err(e) => CommandOutput::config_error(e),
    }
}
