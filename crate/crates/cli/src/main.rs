//! `chain-gather`: generate configurations, simulate them, verify traces.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chain_gather::engine::{Counters, EngineError, FrameMode, Outcome, Settings, SimulationState};
use chain_gather::generators::{line_cycle, perturbed_chain, regular_star, translated_isogonal};
use chain_gather::io::{config_from_str, config_to_string, read_trace, render_svg, write_trace_line};
use chain_gather::verify::audit_progress;
use chain_gather::Tolerances;
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_USAGE: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;
const EXIT_VIOLATION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "chain-gather",
    version,
    about = "Gathering simulator for closed chains of luminous robots"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Star,
    Translated,
    Perturbed,
    Line,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Angular offset of the translated polygon.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Edge length (longest edge for `translated`, spacing for `line`).
    #[arg(long, default_value_t = 1.0)]
    edge: f64,
    #[arg(long, default_value_t = 0.05)]
    jitter: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout if omitted.
    #[arg(short = 'o', long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    config: PathBuf,
    /// Defaults to 4018·n.
    #[arg(long)]
    max_rounds: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON Lines trace, one record per round.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Check invariants after every round.
    #[arg(long)]
    check: bool,
    /// Use unrotated local frames.
    #[arg(long)]
    identity_frames: bool,
    /// Write an SVG frame every k rounds.
    #[arg(long)]
    frames_every: Option<u64>,
    #[arg(long, default_value = "frames")]
    frames_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Write an initial configuration file.
    Generate(GenerateArgs),
    /// Run a configuration until it gathers or the round budget runs out.
    Simulate(SimulateArgs),
    /// Audit a trace file against the progress ledgers.
    Verify { trace: PathBuf },
}

enum Failure {
    Usage(String),
    Timeout(String),
    Violation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Timeout(_) => EXIT_TIMEOUT,
            Failure::Violation(_) => EXIT_VIOLATION,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Timeout(m) | Failure::Violation(m) => m,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Generate(args) => generate(&args),
        Command::Simulate(args) => simulate(&args),
        Command::Verify { trace } => verify(&trace),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("chain-gather: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn generate(a: &GenerateArgs) -> Result<(), Failure> {
    let pts = match a.kind {
        Kind::Star => regular_star(a.n, a.d, a.edge),
        Kind::Translated => translated_isogonal(a.n, a.d, a.t, a.edge),
        Kind::Perturbed => perturbed_chain(a.n, a.edge, a.jitter, a.seed),
        Kind::Line => line_cycle(a.n, a.edge),
    }
    .map_err(usage)?;
    let text = config_to_string(&pts);
    match &a.out {
        Some(path) => fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn summary_json(n_initial: usize, outcome: &str, rounds: u64, counters: &Counters) -> String {
    let value = serde_json::json!({
        "n_initial": n_initial,
        "outcome": outcome,
        "rounds": rounds,
        "rounds_per_n": rounds as f64 / n_initial as f64,
        "counters": counters,
    });
    serde_json::to_string_pretty(&value).expect("summary serializes")
}

fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let config = args.config.as_path();
    let frames_dir = args.frames_dir.as_path();
    let text = fs::read_to_string(config).map_err(|e| usage(format!("{}: {e}", config.display())))?;
    let positions = config_from_str(&text).map_err(|e| usage(format!("{}: {e}", config.display())))?;
    let tol = Tolerances::from_env().map_err(usage)?;
    let settings = Settings {
        tol,
        frames: if args.identity_frames {
            FrameMode::Identity
        } else {
            FrameMode::Seeded(args.seed)
        },
        check_invariants: args.check,
    };
    let mut state = SimulationState::new(&positions, settings, args.seed).map_err(usage)?;
    let max_rounds = args.max_rounds.unwrap_or(4018 * state.n_initial as u64);

    let mut writer = match args.trace.as_deref() {
        Some(p) => Some(BufWriter::new(
            File::create(p).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        )),
        None => None,
    };
    let frames_every = args.frames_every.filter(|&k| k > 0);
    if frames_every.is_some() {
        fs::create_dir_all(frames_dir).map_err(|e| usage(format!("{}: {e}", frames_dir.display())))?;
        write_frame(frames_dir, &state)?;
    }

    let mut totals = Counters::default();
    let mut io_error: Option<std::io::Error> = None;
    let result = state.run_until_with(max_rounds, |st, tr| {
        totals.add(&tr.counters);
        if let Some(w) = writer.as_mut() {
            if let Err(e) = write_trace_line(w, tr) {
                io_error.get_or_insert(e);
            }
        }
        if let Some(k) = frames_every {
            if st.config.round % k == 0 || st.is_gathered() {
                if let Err(Failure::Usage(m)) = write_frame(frames_dir, st) {
                    io_error.get_or_insert(std::io::Error::other(m));
                }
            }
        }
        Ok(())
    });
    if let Some(mut w) = writer {
        if let Err(e) = w.flush() {
            io_error.get_or_insert(e);
        }
    }
    if let Some(e) = io_error {
        return Err(usage(e));
    }

    let n = state.n_initial;
    match result {
        Ok(Outcome::Gathered { rounds }) => {
            println!("{}", summary_json(n, "gathered", rounds, &totals));
            Ok(())
        }
        Ok(Outcome::Timeout { rounds }) => {
            println!("{}", summary_json(n, "timeout", rounds, &totals));
            Err(Failure::Timeout(format!("not gathered after {rounds} rounds")))
        }
        Err(e @ EngineError::InvariantViolation { .. }) => Err(Failure::Violation(e.to_string())),
        Err(e) => Err(usage(e)),
    }
}

fn write_frame(dir: &Path, state: &SimulationState) -> Result<(), Failure> {
    let path = dir.join(format!("round_{:06}.svg", state.config.round));
    fs::write(&path, render_svg(&state.config, 600)).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn verify(trace_path: &Path) -> Result<(), Failure> {
    let file = File::open(trace_path).map_err(|e| usage(format!("{}: {e}", trace_path.display())))?;
    let traces = read_trace(BufReader::new(file)).map_err(|e| usage(format!("{}: {e}", trace_path.display())))?;
    let report = audit_progress(&traces).map_err(usage)?;
    let ledgers: Vec<serde_json::Value> = report
        .ledgers
        .iter()
        .map(|l| {
            serde_json::json!({
                "name": l.name,
                "value": l.value,
                "bound": l.bound,
                "kind": if l.floor { "floor" } else { "ceiling" },
                "ok": l.ok(),
            })
        })
        .collect();
    let value = serde_json::json!({
        "n_initial": report.n_initial,
        "rounds": report.rounds,
        "counters": report.totals,
        "ledgers": ledgers,
        "ok": report.ok(),
    });
    println!("{}", serde_json::to_string_pretty(&value).expect("report serializes"));
    if report.ok() {
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().iter().map(|l| l.name).collect();
        Err(Failure::Violation(format!("ledger violation: {}", names.join(", "))))
    }
}
