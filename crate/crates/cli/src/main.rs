use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use memoryflow_cli::{run_with_threads, write_outputs, CliError, CliResult, Command, Preset, RunConfig};

#[derive(Parser)]
#[command(name = "memoryflow", version, about = "Open quantum dynamics: controlled qubit and dephasing walk")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Built-in parameter set (fig1 .. fig5).
    #[arg(long, global = true)]
    preset: Option<String>,
    #[arg(long, global = true, value_enum)]
    engine: Option<EngineArg>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// |kappa(t)| trajectories and spectral densities.
    Dephasing,
    /// Bloch trajectories, trace distance and measure of the controlled qubit.
    ControlledQubit,
    /// Distance between the exact and the strong-dephasing maps.
    StrongLimitError,
    /// Position distribution of the unitary Hadamard walk.
    Walk,
    /// Non-Markovianity of the open walk over a step-duration sweep.
    OpenWalkNm,
    /// Brute-force equivalence checks.
    Oracle,
    /// Orthogonal-pair scan of the qubit measure.
    Scan,
}

#[derive(ValueEnum, Clone, Copy)]
enum EngineArg {
    Series,
    Quadrature,
    StrongLimit,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Dephasing => Command::Dephasing,
            Sub::ControlledQubit => Command::ControlledQubit,
            Sub::StrongLimitError => Command::StrongLimitError,
            Sub::Walk => Command::Walk,
            Sub::OpenWalkNm => Command::OpenWalkNm,
            Sub::Oracle => Command::Oracle,
            Sub::Scan => Command::Scan,
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let command = Command::from(cli.command);
    let preset = cli.preset.as_deref().map(str::parse::<Preset>).transpose()?;
    let mut cfg = preset.map(|p| p.config()).unwrap_or_default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        cfg = cfg.overlay(RunConfig::from_json(&text)?);
    }
    let flags = RunConfig {
        engine: cli.engine.map(|e| match e {
            EngineArg::Series => "series".into(),
            EngineArg::Quadrature => "quadrature".into(),
            EngineArg::StrongLimit => "strong-limit".into(),
        }),
        steps: cli.steps,
        seed: cli.seed,
        ..RunConfig::default()
    };
    let resolved = cfg.overlay(flags).resolve(preset)?;
    let out = run_with_threads(command, &resolved, cli.threads)?;
    write_outputs(&cli.out, command, &resolved, &out)?;
    match out.failure {
        Some(msg) => Err(CliError::Numeric(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("memoryflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
