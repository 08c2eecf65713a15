use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use perceptkit::dataset::{dataset_root, read_manifest};
use perceptkit::study::SessionStore;
use perceptkit::{Error, Result};
use perceptkit_cli::commands::{self, AnalyzeArgs, EvaluateArgs, GenerateArgs};
use perceptkit_cli::server::{self, AppState};

#[derive(Parser)]
#[command(name = "perceptkit", version, about = "Synthetic visual-perception benchmark toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate stimuli and a manifest from a sweep file (default: the benchmark grids).
    Generate {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides every sweep's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides every sweep's instances per combination.
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long, default_value_t = default_parallel())]
        parallel: usize,
    },
    /// Query a model (or a mock) with every manifest item and score the answers.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        /// Endpoint TOML file.
        #[arg(long)]
        endpoint: Option<PathBuf>,
        /// Model name override; without --endpoint, a mock: oracle or random.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        parallel: Option<usize>,
        /// Results file (JSONL). Existing successful records are reused.
        #[arg(long)]
        out: PathBuf,
        /// Response cache directory (default: `cache/` next to --out for real endpoints).
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Seed for the random mock.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Accuracy table, parameter importance and difficulty breakdown.
    Analyze {
        #[arg(long, required = true, num_args = 1..)]
        results: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// JSONL of `{"instance_id", "difficulty"}` lines.
        #[arg(long)]
        ratings: Option<PathBuf>,
        /// Directory for analysis.txt and analysis.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the human-study HTTP API (and the UI bundle when present).
    ServeStudy {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Give every participant the same items.
        #[arg(long)]
        shared_seed: Option<u64>,
        /// Session log directory (default: `sessions/` in the dataset root).
        #[arg(long)]
        sessions: Option<PathBuf>,
        /// Static UI bundle directory (default: `study_ui/dist` if it exists).
        #[arg(long)]
        ui: Option<PathBuf>,
    },
}

fn default_parallel() -> usize {
    std::thread::available_parallelism().map_or(1, usize::from)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { spec, out, seed, instances, parallel } => {
            let (_, text) = commands::generate(&GenerateArgs { spec, out, seed, instances, parallel })?;
            print!("{text}");
        }
        Command::Evaluate { manifest, endpoint, model, parallel, out, cache, seed } => {
            let summary = commands::evaluate(&EvaluateArgs { manifest, endpoint, model, parallel, out: out.clone(), cache, seed })?;
            println!(
                "{}: {} items ({} reused), {} correct, {} failed -> {}",
                summary.responder,
                summary.total,
                summary.reused,
                summary.correct,
                summary.failed,
                out.display()
            );
            if summary.total > 0 && summary.failed == summary.total {
                return Err(Error::Transport {
                    attempts: 0,
                    message: "every item failed; see the error field in the results file".into(),
                });
            }
        }
        Command::Analyze { results, alpha, ratings, out } => {
            print!("{}", commands::analyze(&AnalyzeArgs { results, alpha, ratings, out })?);
        }
        Command::ServeStudy { manifest, port, host, shared_seed, sessions, ui } => {
            let records = read_manifest(&manifest)?;
            let root = dataset_root(&manifest);
            let sessions = sessions.unwrap_or_else(|| root.join("sessions"));
            let ui = ui.or_else(|| Some(PathBuf::from("study_ui/dist"))).filter(|p| p.join("index.html").is_file());
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| Error::InvalidArgument(format!("bad address {host}:{port}: {e}")))?;
            let items = records.len();
            let state = AppState {
                store: SessionStore::new(records, Some(sessions))?,
                root,
                ui,
                shared_seed,
                items,
            };
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Setup(format!("tokio runtime: {e}")))?;
            rt.block_on(server::serve(state, addr))?;
        }
    }
    Ok(())
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
            eprintln!("error: {e}");
            ExitCode::from(perceptkit_cli::exit_code(&e) as u8)
        }
    }
}
