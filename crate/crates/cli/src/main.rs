use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use netident_cli::commands::{self, Outcome, Selector, INPUT_ERROR};
use netident_cli::spec_file::EdgeEntry;
use netident_cli::CliError;

/// Structural indistinguishability of networks under partial measurement.
///
/// Relative output paths are placed under $NETIDENT_OUT_DIR when it is set.
/// Exit codes: 0 ok, 1 input error, 2 infeasible certificate, 3 divergence.
#[derive(Debug, Parser)]
#[command(name = "netident", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Observable-space contraction along the auxiliary family.
    Analyze {
        spec: PathBuf,
        /// Contraction rate for which a certificate is sought.
        #[arg(long, allow_negative_numbers = true)]
        mu: Option<f64>,
        /// Approximate number of states sampled per trajectory.
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value = "analysis.json")]
        out: PathBuf,
    },
    /// List output-invisible topologies reached by perturbing free edges.
    Candidates {
        spec: PathBuf,
        /// Perturbation magnitudes, comma separated (default: spec file, else 1,-1).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        values: Option<Vec<f64>>,
        #[arg(long, default_value = "candidates.json")]
        out: PathBuf,
    },
    /// Simulate the spec network against a perturbed one and write the time series.
    Compare {
        spec: PathBuf,
        /// 1-based index into the candidate list.
        #[arg(long, conflicts_with = "delta")]
        candidate: Option<usize>,
        /// Explicit perturbation such as `1-2=1,3-4=-1` (1-based nodes).
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<String>,
        /// Start both networks from the spec's x0 (default).
        #[arg(long, conflicts_with = "x0_b")]
        same_x0: bool,
        /// Initial state of the second network, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x0_b: Option<Vec<f64>>,
        #[arg(long, default_value = "compare.csv")]
        out: PathBuf,
    },
    /// Integrate one member of the auxiliary family.
    Simulate {
        spec: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long, default_value = "simulate.csv")]
        out: PathBuf,
    },
    /// Evaluate every sufficient condition plus simulation evidence.
    Verdict {
        spec: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        mu: Option<f64>,
        #[arg(long, default_value = "verdict.json")]
        out: PathBuf,
    },
}

fn parse_delta(text: &str) -> Result<Vec<EdgeEntry>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|item| !item.is_empty())
        .map(|item| {
            let (edge, weight) = item.split_once('=').ok_or_else(|| format!("`{item}`: expected i-j=value"))?;
            let (i, j) = edge.split_once('-').ok_or_else(|| format!("`{item}`: expected i-j=value"))?;
            let node = |s: &str| s.trim().parse::<usize>().map_err(|e| format!("`{item}`: {e}"));
            let weight = weight.trim().parse::<f64>().map_err(|e| format!("`{item}`: {e}"))?;
            Ok(EdgeEntry { i: node(i)?, j: node(j)?, weight })
        })
        .collect()
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Analyze { spec, mu, samples, out } => commands::analyze(&spec, mu, samples, &out),
        Command::Candidates { spec, values, out } => commands::candidates(&spec, values, &out),
        Command::Compare { spec, candidate, delta, same_x0: _, x0_b, out } => {
            let selector = match (candidate, delta) {
                (Some(k), _) => Selector::Candidate(k),
                (None, Some(text)) => Selector::Delta(parse_delta(&text).map_err(|e| CliError::Input(format!("--delta: {e}")))?),
                (None, None) => Selector::SpecDelta,
            };
            commands::compare(&spec, &selector, x0_b, &out)
        }
        Command::Simulate { spec, s, out } => commands::simulate(&spec, s, &out),
        Command::Verdict { spec, mu, out } => commands::verdict(&spec, mu, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            // usage errors are input errors; code 2 is reserved for infeasibility
            return ExitCode::from(if err.use_stderr() { INPUT_ERROR as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for path in &outcome.outputs {
                println!("wrote {}", path.display());
            }
            ExitCode::from(outcome.exit.code() as u8)
        }
        Err(err) => {
            eprintln!("netident: {err}");
            ExitCode::from(INPUT_ERROR as u8)
        }
    }
}
