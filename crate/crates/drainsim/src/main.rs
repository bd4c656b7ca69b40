use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use drainsim::cli::{
    cmd_render, cmd_run, cmd_schedule, cmd_sweep, cmd_validate, CliOptions, CommandOutput,
    OutputFormat, EXIT_CONFIG,
};
use drainsim::tokenmeter::PriceTable;
use drainsim::visibility::InterfaceKind;

/// Deterministic token-drain attack simulator for tool-calling agents.
#[derive(Parser)]
#[command(name = "drainsim", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Md,
}

#[derive(Clone, Copy, ValueEnum)]
enum InterfaceArg {
    Gui,
    Tui,
    Auto,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and its benign twin; emit both reports plus the
    /// amplification report.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        prices: Option<PathBuf>,
    },
    /// Run a sweep grid (explicit rows and/or a parameter cross-product).
    Sweep {
        grid: PathBuf,
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        prices: Option<PathBuf>,
    },
    /// Fire a scenario on a cron/heartbeat cadence and aggregate the cost.
    Schedule {
        scenario: PathBuf,
        #[arg(long)]
        interval: Option<u64>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        prices: Option<PathBuf>,
    },
    /// Show what a user of the given interface would see of a run.
    Render {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        interface: InterfaceArg,
        #[arg(long, value_enum, default_value = "md")]
        format: FormatArg,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Lint a scenario file without running it.
    Validate { scenario: PathBuf },
}

fn load_prices(path: &Option<PathBuf>) -> Result<Option<PriceTable>, String> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let prices: PriceTable =
        serde_json::from_str(&text).map_err(|e| format!("price table schema violation: {e}"))?;
    prices.validate().map_err(|e| e.to_string())?;
    Ok(Some(prices))
}

fn options(
    trace: bool,
    format: FormatArg,
    seed: Option<u64>,
    prices: &Option<PathBuf>,
) -> Result<CliOptions, String> {
    Ok(CliOptions {
        trace,
        format: match format {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Md => OutputFormat::Md,
        },
        seed,
        prices: load_prices(prices)?,
    })
}

fn emit(output: CommandOutput) -> ExitCode {
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    let _ = stdout.write_all(output.stdout.as_bytes());
    let _ = stderr.write_all(output.stderr.as_bytes());
    ExitCode::from(output.exit_code as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let output = match args.command {
        Command::Run {
            scenario,
            trace,
            format,
            seed,
            prices,
        } => match options(trace, format, seed, &prices) {
            Ok(opts) => cmd_run(&scenario, &opts),
            Err(e) => CommandOutput {
                stdout: String::new(),
                stderr: format!("configuration error: {e}\n"),
                exit_code: EXIT_CONFIG,
            },
        },
        Command::Sweep {
            grid,
            trace,
            format,
            seed,
            prices,
        } => match options(trace, format, seed, &prices) {
            Ok(opts) => cmd_sweep(&grid, &opts),
            Err(e) => CommandOutput {
                stdout: String::new(),
                stderr: format!("configuration error: {e}\n"),
                exit_code: EXIT_CONFIG,
            },
        },
        Command::Schedule {
            scenario,
            interval,
            horizon,
            seed,
            prices,
        } => match options(false, FormatArg::Json, seed, &prices) {
            Ok(opts) => cmd_schedule(&scenario, interval, horizon, &opts),
            Err(e) => CommandOutput {
                stdout: String::new(),
                stderr: format!("configuration error: {e}\n"),
                exit_code: EXIT_CONFIG,
            },
        },
        Command::Render {
            scenario,
            interface,
            format,
            seed,
        } => match options(true, format, seed, &None) {
            Ok(opts) => cmd_render(
                &scenario,
                match interface {
                    InterfaceArg::Gui => InterfaceKind::ChatGui,
                    InterfaceArg::Tui => InterfaceKind::TuiNarrated,
                    InterfaceArg::Auto => InterfaceKind::Autonomous,
                },
                &opts,
            ),
            Err(e) => CommandOutput {
                stdout: String::new(),
                stderr: format!("configuration error: {e}\n"),
                exit_code: EXIT_CONFIG,
            },
        },
        Command::Validate { scenario } => cmd_validate(&scenario, &CliOptions::default()),
    };
    emit(output)
}
