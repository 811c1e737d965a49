use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use vrtouch_core::agent::{Agent, AgentParams};
use vrtouch_core::input::{parse_trace, serialize_trace};
use vrtouch_core::session::{replay, serve, ReplayError, SessionConfig};
use vrtouch_core::tasks::{
    balanced_latin_square, export_metrics, gen_puzzle_set, gen_transfer_block, parse_metrics, serialize_puzzles, serialize_transfer_block,
    LayoutKind, MetricsFormat, PuzzleGrid, TransferParams,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_TRACE: u8 = 3;
const EXIT_PROTOCOL: u8 = 4;

#[derive(Parser)]
#[command(name = "vrtouch", version, about = "Replay, generate and serve touch-driven virtual screen sessions")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Replay a trace and write metrics records followed by the final snapshot.
    Replay {
        /// Session config (TOML). Defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trace: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate task content.
    GenTask {
        #[command(subcommand)]
        task: GenTask,
    },
    /// Print a balanced Latin square, one row per line.
    LatinSquare {
        #[arg(long)]
        n: usize,
    },
    /// Host live sessions over WebSocket at ws://HOST:PORT/session?version=1.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Convert metrics records (as written by `replay`) to CSV or canonical records.
    Export {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the scripted agent on the config's task and write the resulting trace.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenTask {
    /// A block of 32 content transfer trials.
    Transfer {
        #[arg(long, value_parser = ["4", "15"])]
        screens: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A set of layered puzzles.
    Puzzle {
        #[arg(long, value_parser = ["4", "10"])]
        layers: String,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Records,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl std::fmt::Display) -> Failure {
    Failure { code, message: message.to_string() }
}

type Outcome = Result<(), Failure>;

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Outcome {
    let result = match out {
        Some(path) => fs::write(path, bytes),
        None => io::stdout().lock().write_all(bytes),
    };
    result.map_err(|e| fail(1, format!("writing output: {e}")))
}

fn load_config(path: Option<&Path>) -> Result<SessionConfig, Failure> {
    match path {
        Some(p) => SessionConfig::load(p).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", p.display()))),
        None => Ok(SessionConfig::default()),
    }
}

fn read_input(path: &Path, code: u8) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| fail(code, format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Cmd::Replay { config, trace, out } => {
            let config = load_config(config.as_deref())?;
            let bytes = read_input(&trace, EXIT_TRACE)?;
            let trace = parse_trace(&bytes).map_err(|e| fail(EXIT_TRACE, format!("{}: {e}", trace.display())))?;
            let output = replay(&config, &trace).map_err(|e| match e {
                ReplayError::Config(_) => fail(EXIT_CONFIG, e),
                _ => fail(EXIT_TRACE, e),
            })?;
            write_out(out.as_deref(), output.to_text().as_bytes())
        }
        Cmd::GenTask { task: GenTask::Transfer { screens, seed, out } } => {
            let kind = LayoutKind::from_screens(screens.parse().expect("validated by clap")).expect("validated by clap");
            let block = gen_transfer_block(kind, seed, &TransferParams::default());
            write_out(out.as_deref(), serialize_transfer_block(&block).as_bytes())
        }
        Cmd::GenTask { task: GenTask::Puzzle { layers, seed, count, out } } => {
            let layers = layers.parse().expect("validated by clap");
            let specs = gen_puzzle_set(layers, count, seed, &PuzzleGrid::default()).map_err(|e| fail(EXIT_CONFIG, e))?;
            write_out(out.as_deref(), serialize_puzzles(&specs).as_bytes())
        }
        Cmd::LatinSquare { n } => {
            let square = balanced_latin_square(n).map_err(|e| fail(EXIT_CONFIG, e))?;
            let text: String = square
                .iter()
                .map(|row| row.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ") + "\n")
                .collect();
            write_out(None, text.as_bytes())
        }
        Cmd::Serve { config, port, host } => {
            let config = load_config(config.as_deref())?;
            config.validate().map_err(|e| fail(EXIT_CONFIG, e))?;
            let listener = std::net::TcpListener::bind((host.as_str(), port)).map_err(|e| fail(EXIT_PROTOCOL, format!("binding {host}:{port}: {e}")))?;
            let addr = listener.local_addr().map_err(|e| fail(EXIT_PROTOCOL, e))?;
            eprintln!("listening on ws://{addr}/session?version=1");
            serve(listener, config, Arc::new(AtomicBool::new(false))).map_err(|e| fail(EXIT_PROTOCOL, e))
        }
        Cmd::Export { metrics, format, out } => {
            let bytes = read_input(&metrics, EXIT_TRACE)?;
            let text = String::from_utf8(bytes).map_err(|e| fail(EXIT_TRACE, format!("{}: {e}", metrics.display())))?;
            let list = parse_metrics(&text).map_err(|e| fail(EXIT_TRACE, format!("{}: {e}", metrics.display())))?;
            let format = match format {
                Format::Csv => MetricsFormat::Csv,
                Format::Records => MetricsFormat::Records,
            };
            write_out(out.as_deref(), &export_metrics(&list, format))
        }
        Cmd::Simulate { config, out } => {
            let config = load_config(Some(&config))?;
            let run = Agent::run(&config, AgentParams::default()).map_err(|e| fail(EXIT_CONFIG, e))?;
            log::info!("{} trials scored", run.metrics.len());
            write_out(out.as_deref(), serialize_trace(&run.trace).as_bytes())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
