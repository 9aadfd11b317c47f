use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qcorr::exec::with_threads;
use qcorr::sweep::{evaluate, report_limits, run_sweep, to_csv, Measure, SweepConfig};
use qcorr::{BipartiteLayout, DensityMatrix, Execution, QcorrError, SearchConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "qcorr", version, about = "Discord, conditional entropies and information deficits for qudit-qubit states and XY chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a field sweep described by a JSON config and write CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path; overrides `output` in the config. Stdout if neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for sweep points.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print reference measures of the two-spin states at the transverse factorizing field as JSON.
    Limits {
        #[arg(long)]
        chi: f64,
        #[arg(long)]
        n: usize,
    },
    /// Evaluate one measure on a state given as JSON (inline or a file path).
    Measure {
        #[arg(long)]
        state: String,
        /// One of D, I1, I2, IR2, concurrence, eof, S2cond.
        #[arg(long)]
        measure: String,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<QcorrError> for Failure {
    fn from(e: QcorrError) -> Self {
        let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_CONFIG };
        Failure { code, message: e.to_string() }
    }
}

fn config_failure(message: String) -> Failure {
    Failure { code: EXIT_CONFIG, message }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| config_failure(format!("cannot read {}: {e}", path.display())))
}

fn sweep(config: &Path, out: Option<PathBuf>, threads: Option<usize>) -> Result<(), Failure> {
    let cfg = SweepConfig::from_json(&read(config)?)?;
    if threads == Some(0) {
        return Err(config_failure("--threads must be at least 1".into()));
    }
    let rows = with_threads(threads, || run_sweep(&cfg, Execution::Parallel))?;
    let csv = to_csv(&cfg, &rows);
    match out.or_else(|| cfg.output.clone()) {
        Some(path) => fs::write(&path, csv).map_err(|e| config_failure(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn limits(chi: f64, n: usize) -> Result<(), Failure> {
    let report = report_limits(chi, n, &SearchConfig::default())?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn measure(state: &str, name: &str) -> Result<(), Failure> {
    let measure = Measure::parse(name)?;
    let text = if state.trim_start().starts_with('{') { state.to_string() } else { read(Path::new(state))? };
    let rho: DensityMatrix = serde_json::from_str(&text).map_err(|e| config_failure(format!("invalid state: {e}")))?;
    let layout = BipartiteLayout::qudit_qubit(rho.dim())?;
    let value = evaluate(&rho, layout, measure, &SearchConfig::default())?;
    let json = serde_json::json!({
        "measure": measure.name(),
        "value": value.value,
        "theta": value.theta,
        "phi": value.phi,
    });
    println!("{json}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep { config, out, threads } => sweep(&config, out, threads),
        Command::Limits { chi, n } => limits(chi, n),
        Command::Measure { state, measure: name } => measure(&state, &name),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qcorr: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
