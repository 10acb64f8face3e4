use std::ffi::OsString;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use duet_core::agents::{Agents, ReplayMode, Transcript};
use duet_core::dataset::{
    load_csv, load_features_reader, load_labels_reader, write_csv_string, DatasetMeta,
};
use duet_core::diagnosis::summarize;
use duet_core::expr::{
    canonical_key, parse, parse_fts, OperatorSet, TransformSequence, GRAMMAR_HELP,
};
use duet_core::harness::{
    compare, timing_profile, ClassifierSpec, DEFAULT_SEEDS, DEFAULT_TEST_FRACTION,
};
use duet_core::refine::{run, RunError, RunResult};

use crate::api::{serve, AppState};
use crate::config::{BackendFactory, BackendKind, Settings};
use crate::session::{read_snapshot, SessionStore};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_FAILURE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "duet",
    version,
    about = "Critic/generator feature transformation for tabular data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run critic/generator rounds over a dataset and write the results.
    Run(RunArgs),
    /// Compare classifiers on an original and a transformed table.
    Eval(EvalArgs),
    /// Validate an .fts file (or one sequence) and print its canonical form.
    Parse(ParseArgs),
    /// Start the HTTP session service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value_t = BackendKind::Heuristic)]
    pub backend: BackendKind,
    /// Transcript to replay with `--backend replay`; otherwise a copy of the
    /// calls made is written here.
    #[arg(long, required_if_eq("backend", "replay"))]
    pub record: Option<PathBuf>,
    /// Fail when a replayed prompt differs from the recorded one.
    #[arg(long)]
    pub strict: bool,
    /// JSON config with `agents`, `remote`, `loop` and `operators` sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub meta: PathBuf,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Most expressions accepted from one generator answer.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Comma-separated operator names, e.g. `mul,div,log`.
    #[arg(long, value_delimiter = ',')]
    pub ops: Option<Vec<String>>,
    /// Also write the initial feature statistics as JSON.
    #[arg(long)]
    pub dump_stats: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub original: PathBuf,
    #[arg(long)]
    pub transformed: PathBuf,
    /// CSV holding the label column; defaults to `--original`.
    #[arg(long)]
    pub labels_from: Option<PathBuf>,
    /// Label column name.
    #[arg(long, required_unless_present = "meta")]
    pub target: Option<String>,
    /// Dataset metadata, used for the label column name.
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "dt,rf,knn")]
    pub models: Vec<ClassifierSpec>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SEEDS)]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = DEFAULT_TEST_FRACTION)]
    pub test_fraction: f64,
    /// Print JSON instead of the text table.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// `.fts` file, one sequence per line; `-` reads stdin.
    #[arg(required_unless_present = "expr", conflicts_with = "expr")]
    pub file: Option<PathBuf>,
    /// A single sequence given inline.
    #[arg(long, short)]
    pub expr: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub ops: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Directory of web UI assets served at `/`.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    /// Sessions are saved here on shutdown and restored on start.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    #[arg(long, default_value_t = 3600)]
    pub ttl_secs: u64,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Parse(a) => cmd_parse(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("{msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn operators(settings: &Settings, ops: Option<Vec<String>>) -> Result<OperatorSet, Failure> {
    match ops {
        Some(names) => {
            OperatorSet::from_names(names.iter().map(String::as_str)).map_err(Failure::Usage)
        }
        None => settings.operator_set().map_err(Failure::runtime),
    }
}

fn factory(args: &BackendArgs, settings: &Settings) -> Result<BackendFactory, Failure> {
    let factory = match args.backend {
        BackendKind::Heuristic => BackendFactory::heuristic(),
        BackendKind::Remote => BackendFactory::remote(settings.remote.clone()),
        BackendKind::Replay => {
            let path = args
                .record
                .as_ref()
                .expect("clap requires --record for replay");
            let transcript = Transcript::read(path)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            let mode = if args.strict {
                ReplayMode::Strict
            } else {
                ReplayMode::Lenient
            };
            BackendFactory::replay(transcript, mode)
        }
    };
    // Surfaces a missing API key before any work starts.
    factory.build().map_err(Failure::runtime)?;
    Ok(factory)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let mut settings = Settings::load(a.backend.config.as_deref()).map_err(Failure::runtime)?;
    if let Some(n) = a.iterations {
        settings.refine.iterations = n;
    }
    if let Some(k) = a.k_max {
        settings.refine.k_max = k;
    }
    if let Some(seed) = a.seed {
        settings.refine.seed = seed;
    }
    settings
        .refine
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let ops = operators(&settings, a.ops)?;
    let factory = factory(&a.backend, &settings)?;

    let (table, labels, meta) = load_csv(&a.data, &a.meta).map_err(Failure::runtime)?;
    if let Some(path) = &a.dump_stats {
        write(
            path,
            serde_json::to_string_pretty(&summarize(&table)).expect("stats serialize"),
        )?;
    }

    let backend = factory.build().map_err(Failure::runtime)?;
    let mut agents = Agents::new(backend, settings.agents.clone());
    let (result, failure) = match run(&table, &meta, &ops, &settings.refine, &mut agents) {
        Ok(r) => (r, None),
        Err(RunError::Backend {
            round,
            error,
            partial,
        }) => (
            *partial,
            Some(format!("round {round}: {error}; partial results written")),
        ),
        Err(e) => return Err(Failure::runtime(e)),
    };

    std::fs::create_dir_all(&a.out_dir)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", a.out_dir.display())))?;
    let csv = write_csv_string(&result.table, Some((&meta.target_name, &labels)))
        .map_err(Failure::runtime)?;
    write(&a.out_dir.join("transformed.csv"), csv)?;
    write(&a.out_dir.join("sequences.fts"), result.sequences_fts())?;
    write(
        &a.out_dir.join("transcript.jsonl"),
        result.transcript.to_jsonl(),
    )?;
    write(&a.out_dir.join("iterations.json"), result.iterations_json())?;
    write(
        &a.out_dir.join("timing.json"),
        timing_profile(&result).to_json(),
    )?;
    if let (Some(path), false) = (&a.backend.record, a.backend.backend == BackendKind::Replay) {
        write(path, result.transcript.to_jsonl())?;
    }
    report_run(&result, &a.out_dir);
    failure.map_or(Ok(()), |msg| Err(Failure::Runtime(msg)))
}

fn report_run(result: &RunResult, out_dir: &Path) {
    for r in &result.iterations {
        let accepted: Vec<String> = r.accepted.iter().map(ToString::to_string).collect();
        match &r.skipped {
            Some(why) => println!("round {}: skipped ({why})", r.index),
            None => println!(
                "round {}: +{} [{}]",
                r.index,
                accepted.len(),
                accepted.join(", ")
            ),
        }
    }
    println!(
        "{} rows x {} columns written to {}",
        result.table.n_rows(),
        result.table.n_cols(),
        out_dir.display()
    );
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn cmd_eval(a: EvalArgs) -> Result<(), Failure> {
    let target = match (&a.target, &a.meta) {
        (Some(t), _) => t.clone(),
        (None, Some(m)) => DatasetMeta::read(m).map_err(Failure::runtime)?.target_name,
        (None, None) => unreachable!("clap requires --target or --meta"),
    };
    let labels_path = a.labels_from.as_ref().unwrap_or(&a.original);
    let labels = load_labels_reader(read_file(labels_path)?.as_bytes(), &target)
        .map_err(Failure::runtime)?;
    let original = load_features_reader(read_file(&a.original)?.as_bytes(), Some(&target))
        .map_err(Failure::runtime)?;
    let transformed = load_features_reader(read_file(&a.transformed)?.as_bytes(), Some(&target))
        .map_err(Failure::runtime)?;
    let report = compare(
        &original,
        &transformed,
        &labels.values,
        &a.models,
        &a.seeds,
        a.test_fraction,
    )
    .map_err(Failure::runtime)?;
    if let Some(path) = &a.report {
        write(path, report.to_json())?;
    }
    if a.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    Ok(())
}

fn canonical_line(seq: &TransformSequence) -> String {
    seq.iter().map(canonical_key).collect::<Vec<_>>().join(",")
}

fn cmd_parse(a: ParseArgs) -> Result<(), Failure> {
    let ops = operators(&Settings::default(), a.ops)?;
    let usage = |detail: String| Failure::Usage(format!("{detail}\n\ngrammar:\n{GRAMMAR_HELP}"));
    if let Some(text) = a.expr {
        let seq =
            parse(&text, &ops).map_err(|e| usage(format!("error {e}\n{}", e.annotate(&text))))?;
        println!("{}", canonical_line(&seq));
        return Ok(());
    }
    let path = a.file.expect("clap requires a file or --expr");
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(Failure::runtime)?;
        s
    } else {
        read_file(&path)?
    };
    match parse_fts(&text, &ops) {
        Ok(seqs) => {
            for seq in &seqs {
                println!("{}", canonical_line(seq));
            }
            Ok(())
        }
        Err((line, e)) => {
            let src = text.lines().nth(line - 1).unwrap_or_default();
            Err(usage(format!(
                "{}:{line}: error {e}\n{}",
                path.display(),
                e.annotate(src)
            )))
        }
    }
}

fn cmd_serve(a: ServeArgs) -> Result<(), Failure> {
    let settings = Settings::load(a.backend.config.as_deref()).map_err(Failure::runtime)?;
    let ops = settings.operator_set().map_err(Failure::runtime)?;
    let factory = factory(&a.backend, &settings)?;
    let state = Arc::new(AppState::new(
        SessionStore::new(Duration::from_secs(a.ttl_secs)),
        factory,
        settings,
        ops,
    ));
    if let Some(path) = a.snapshot.as_ref().filter(|p| p.exists()) {
        let sessions = read_snapshot(path)
            .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
        let n = state
            .restore(sessions)
            .map_err(|e| Failure::Runtime(e.message))?;
        eprintln!("restored {n} session(s) from {}", path.display());
    }
    let runtime = tokio::runtime::Runtime::new().map_err(Failure::runtime)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port))
            .await
            .map_err(|e| Failure::Runtime(format!("bind {}:{}: {e}", a.host, a.port)))?;
        let addr = listener.local_addr().map_err(Failure::runtime)?;
        eprintln!("listening on http://{addr}");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        serve(listener, state, a.static_dir, a.snapshot, shutdown)
            .await
            .map_err(Failure::runtime)
    })
}
