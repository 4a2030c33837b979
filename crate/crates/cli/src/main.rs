//! `srkmmv` — runs the Monte Carlo experiments, generates and solves
//! fixture problems, and classifies feature files.
//!
//! Exit codes: 0 on success, 1 for usage or validation errors (bad flags,
//! unreadable or malformed input), 2 for failures while running.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use srkmmv_core::classify::{build_dictionary, classify_mmv, classify_smv, ClassDictionary};
use srkmmv_core::experiments::{run_experiment, ExperimentKind, ExperimentSpec, Regime, RunOptions, Scale};
use srkmmv_core::formats::{
    fmt_f64, parse_spec, read_labeled_vectors, read_problem, report_csv, report_json, write_problem,
};
use srkmmv_core::metrics::relative_error;
use srkmmv_core::sampling::SeededRng;
use srkmmv_core::synth::generate_problem;
use srkmmv_core::{solvers::solve, DenseMatrix, Error, SolverConfig, Variant, Vector};

/// Environment variable naming the directory used when `--out` is absent.
const OUT_DIR_ENV: &str = "SRKMMV_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "srkmmv", version, about = "Sparse randomized Kaczmarz solvers and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Recovery error as a function of the support estimate k̂.
    SupportSweep(ExperimentArgs),
    /// Mean relative error after every sweep.
    Convergence(ExperimentArgs),
    /// Recovery rate as a function of the sparsity K.
    PhaseTransition(ExperimentArgs),
    /// Solve a fixture problem and report the relative error.
    Solve(SolveArgs),
    /// Write a random joint-sparse problem in fixture format.
    GenProblem(GenArgs),
    /// Classify test sequences against a labeled training set.
    Classify(ClassifyArgs),
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file; defaults to $SRKMMV_OUT_DIR/<command>.<ext>, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Spec file (`key = value` lines).
    #[arg(long, conflicts_with_all = ["preset", "regime"])]
    spec: Option<PathBuf>,
    /// Built-in configuration used when no spec file is given.
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Phase-transition regime for presets.
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    /// Overrides the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of trials per grid point.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    problem: PathBuf,
    /// cyclic, rk, srk or srk-mmv.
    #[arg(long, value_parser = parse_variant, default_value = "srk-mmv")]
    variant: Variant,
    /// Support estimate k̂; defaults to the fixture's K.
    #[arg(long)]
    khat: Option<usize>,
    #[arg(long, default_value_t = 50)]
    sweeps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    /// Number of measurement vectors.
    #[arg(long = "L", visible_alias = "measurements")]
    l: usize,
    /// Size of the common support.
    #[arg(long = "K", visible_alias = "sparsity")]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    /// Training vectors, `class f_1 ... f_d` per line.
    #[arg(long)]
    train: PathBuf,
    /// Test frames, `sequence f_1 ... f_d` per line; frames sharing a
    /// sequence id are classified together.
    #[arg(long)]
    test: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Mmv)]
    mode: Mode,
    /// Support estimate k̂; defaults to the largest class size.
    #[arg(long)]
    khat: Option<usize>,
    #[arg(long, default_value_t = 20)]
    sweeps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PresetArg {
    Paper,
    Desk,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RegimeArg {
    Over,
    Under,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    /// Joint SRK-MMV over all frames of a sequence.
    Mmv,
    /// SRK on each frame, then a majority vote.
    Smv,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| format!("unknown variant {s:?} (expected cyclic, rk, srk or srk-mmv)"))
}

/// Failure classes, mapped to exit codes 1 and 2.
#[derive(Debug)]
enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Runtime(m) => m,
        }
    }
}

/// Input-shaped errors are the caller's fault; numerical breakdowns and
/// I/O while writing are not.
impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Dimension(_)
            | Error::NonFinite(_)
            | Error::InvalidSparsity { .. }
            | Error::UnsupportedVariant { .. }
            | Error::SpecValidation(_)
            | Error::Parse { .. } => Failure::Invalid(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read_input(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn with_file(path: &Path, e: Error) -> Failure {
    match Failure::from(e) {
        Failure::Invalid(m) => Failure::Invalid(format!("{}: {m}", path.display())),
        other => other,
    }
}

/// Writes `content` to `out`, or to the default location for `stem`.
fn emit(out: Option<&Path>, stem: &str, ext: &str, content: &str) -> CliResult<()> {
    let target = match out {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(OUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(format!("{stem}.{ext}"))),
    };
    let runtime = |what: &Path, e: std::io::Error| Failure::Runtime(format!("cannot write {}: {e}", what.display()));
    match target {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| runtime(dir, e))?;
            }
            fs::write(&path, content).map_err(|e| runtime(&path, e))
        }
        None => std::io::stdout()
            .lock()
            .write_all(content.as_bytes())
            .map_err(|e| runtime(Path::new("<stdout>"), e)),
    }
}

fn run_experiment_command(kind: ExperimentKind, args: &ExperimentArgs) -> CliResult<()> {
    let mut spec = match &args.spec {
        Some(path) => parse_spec(&read_input(path)?, Some(kind)).map_err(|e| with_file(path, e))?,
        None => {
            let scale = match args.preset.unwrap_or(PresetArg::Desk) {
                PresetArg::Paper => Scale::Paper,
                PresetArg::Desk => Scale::Desk,
            };
            let regime = match args.regime.unwrap_or(RegimeArg::Over) {
                RegimeArg::Over => Regime::Over,
                RegimeArg::Under => Regime::Under,
            };
            ExperimentSpec::preset(kind, scale, regime)
        }
    };
    if let Some(seed) = args.seed {
        spec.base_seed = seed;
    }
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    spec.validate()?;

    let opts = RunOptions {
        threads: args.threads.map(|t| t as usize),
        keep_outcomes: false,
    };
    let report = run_experiment(&spec, &opts)?;
    let body = match args.output.format {
        Format::Csv => report_csv(&report),
        Format::Json => report_json(&report) + "\n",
    };
    emit(args.output.out.as_deref(), kind.name(), args.output.format.extension(), &body)
}

fn run_solve(args: &SolveArgs) -> CliResult<()> {
    let problem = read_problem(&read_input(&args.problem)?).map_err(|e| with_file(&args.problem, e))?;
    let khat = args.khat.unwrap_or(problem.sparsity());
    let cfg = SolverConfig::new(args.variant, khat, args.sweeps, args.seed);
    let result = solve(&problem.a, &problem.b, &cfg)?;
    let err = relative_error(&problem.x_true, &result.solution)?;

    let body = match args.output.format {
        Format::Csv => format!(
            "variant,khat,sweeps,relative_error,dot_products\n{},{},{},{},{}\n",
            args.variant.name(),
            khat,
            args.sweeps,
            fmt_f64(err),
            result.dot_products
        ),
        Format::Json => {
            let value = json!({
                "variant": args.variant.name(),
                "khat": khat,
                "sweeps": args.sweeps,
                "relative_error": err,
                "dot_products": result.dot_products,
            });
            serde_json::to_string_pretty(&value).expect("finite values") + "\n"
        }
    };
    emit(args.output.out.as_deref(), "solve", args.output.format.extension(), &body)
}

fn run_gen(args: &GenArgs) -> CliResult<()> {
    let problem = generate_problem(args.m, args.n, args.l, args.k, &mut SeededRng::new(args.seed))?;
    emit(args.out.as_deref(), "problem", "txt", &write_problem(&problem))
}

/// Groups frames by sequence id, in first-seen order.
fn group_sequences(frames: Vec<(usize, Vector)>) -> CliResult<Vec<(usize, DenseMatrix)>> {
    let mut ids: Vec<usize> = Vec::new();
    for (id, _) in &frames {
        if !ids.contains(id) {
            ids.push(*id);
        }
    }
    ids.into_iter()
        .map(|id| {
            let cols: Vec<&Vector> = frames.iter().filter(|(s, _)| *s == id).map(|(_, v)| v).collect();
            Ok((id, DenseMatrix::from_columns(&cols)?))
        })
        .collect()
}

/// Most frequent class among `predictions`; ties go to the class that comes
/// first in the dictionary.
fn majority(dict: &ClassDictionary, predictions: &[usize]) -> usize {
    let ids = dict.class_ids();
    let count = |c: &usize| predictions.iter().filter(|p| *p == c).count();
    let mut best = ids[0];
    for c in &ids[1..] {
        if count(c) > count(&best) {
            best = *c;
        }
    }
    best
}

fn run_classify(args: &ClassifyArgs) -> CliResult<()> {
    let train = read_labeled_vectors(&read_input(&args.train)?).map_err(|e| with_file(&args.train, e))?;
    let test = read_labeled_vectors(&read_input(&args.test)?).map_err(|e| with_file(&args.test, e))?;
    let dict = build_dictionary(&train)?;
    let sequences = group_sequences(test)?;

    let mut rows = Vec::with_capacity(sequences.len());
    for (idx, (id, frames)) in sequences.iter().enumerate() {
        let mut cfg = dict.default_config(args.sweeps, args.seed.wrapping_add(idx as u64));
        if let Some(khat) = args.khat {
            cfg.estimated_support = khat;
        }
        let predicted = match args.mode {
            Mode::Mmv => classify_mmv(&dict, frames, &cfg)?.predicted,
            Mode::Smv => {
                let votes = (0..frames.cols())
                    .map(|f| Ok(classify_smv(&dict, &frames.column(f), &cfg)?.predicted))
                    .collect::<CliResult<Vec<_>>>()?;
                majority(&dict, &votes)
            }
        };
        rows.push((*id, predicted, frames.cols()));
    }

    let body = match args.output.format {
        Format::Csv => {
            let mut s = String::from("sequence,predicted,frames\n");
            for (id, p, f) in &rows {
                s.push_str(&format!("{id},{p},{f}\n"));
            }
            s
        }
        Format::Json => {
            let items: Vec<_> = rows
                .iter()
                .map(|(id, p, f)| json!({ "sequence": id, "predicted": p, "frames": f }))
                .collect();
            serde_json::to_string_pretty(&items).expect("integers only") + "\n"
        }
    };
    emit(args.output.out.as_deref(), "classify", args.output.format.extension(), &body)
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::SupportSweep(a) => run_experiment_command(ExperimentKind::SupportSweep, a),
        Command::Convergence(a) => run_experiment_command(ExperimentKind::Convergence, a),
        Command::PhaseTransition(a) => run_experiment_command(ExperimentKind::PhaseTransition, a),
        Command::Solve(a) => run_solve(a),
        Command::GenProblem(a) => run_gen(a),
        Command::Classify(a) => run_classify(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("srkmmv: error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
