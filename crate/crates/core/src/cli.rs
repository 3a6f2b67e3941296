//! Command-line surface: `infer`, `eval`, `dump-tdg` and `train-embeddings`.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::eval::{evaluate, predictions_for, DEFAULT_KS, DEFAULT_RARE_THRESHOLD};
use crate::frontend::{collect_user_types, parse_module, strip_annotations, GroundTruthRecord};
use crate::recommend::skipgram::{identifier_tokens, train, SkipGramConfig};
use crate::recommend::{
    BpeMerges, Embedding, FileRecommender, FrequencyTable, LexicalEmbedding, NaiveMode, NaiveRecommender,
    NullRecommender, Recommender, SidecarRecommender, VectorEmbedding, DEFAULT_TIMEOUT,
};
use crate::rules::{RuleCtx, StubError, StubTable};
use crate::solver::{Engine, InferenceConfig, InferenceResult};
use crate::tdg::{build_program, export_dot};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pytdg", version, about = "Type inference for Python over type dependency graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Infer types and print them as JSON.
    Infer(InferArgs),
    /// Strip annotations, infer, and score the result against them.
    Eval(EvalArgs),
    /// Write the dependency graph of every function as DOT.
    DumpTdg(DumpArgs),
    /// Train identifier embeddings for type correction.
    TrainEmbeddings(TrainArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    None,
    Naive,
    File,
    Sidecar,
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    /// Stub files with `name : Callable[...]` entries; later files override.
    #[arg(long, env = "HITYPER_STUBS", value_delimiter = ':')]
    pub stubs: Vec<PathBuf>,
    /// Directories searched for imported modules.
    #[arg(long = "search-path")]
    pub search_path: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "none")]
    pub recommender: Backend,
    /// JSON map from `function:kind:name` to ranked types (file backend).
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Shell command of the recommender process (sidecar backend).
    #[arg(long = "sidecar-cmd")]
    pub sidecar_cmd: Option<String>,
    /// Seconds to wait for the sidecar per batch.
    #[arg(long = "sidecar-timeout")]
    pub sidecar_timeout: Option<u64>,
    /// Type frequency table (naive backend).
    #[arg(long = "freq-table")]
    pub freq_table: Option<PathBuf>,
    /// Candidates installed per hot slot: 1, 3 or 5.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long = "max-iters", default_value_t = 3)]
    pub max_iters: usize,
    /// Seed of the naive backend; without it the backend is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Word vectors for type correction; a lexical similarity is used without.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long = "bpe-merges")]
    pub bpe_merges: Option<PathBuf>,
    /// Added to the name similarity when correcting user-defined types.
    #[arg(long, default_value_t = -0.1, allow_hyphen_values = true)]
    pub penalty: f64,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Annotated sources. Ignored when both --truths and --preds are given.
    pub paths: Vec<PathBuf>,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Ground truth as JSON lines of `{function, kind, name, annotation}`.
    #[arg(long)]
    pub truths: Option<PathBuf>,
    /// Ranked predictions as a JSON map from `function:kind:name`.
    #[arg(long)]
    pub preds: Option<PathBuf>,
    #[arg(long = "rare-threshold", default_value_t = DEFAULT_RARE_THRESHOLD)]
    pub rare_threshold: f64,
    /// Where to write the JSON report; the text table goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    #[arg(long, env = "HITYPER_STUBS", value_delimiter = ':')]
    pub stubs: Vec<PathBuf>,
    /// Directory for one `.dot` file per function; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    #[arg(long, default_value_t = 256)]
    pub dim: usize,
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn config(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<StubError> for Failure {
    fn from(e: StubError) -> Failure {
        match e {
            StubError::Io { .. } => Failure::input(e.to_string()),
            _ => Failure::config(e.to_string()),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Infer(a) => cmd_infer(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::DumpTdg(a) => cmd_dump_tdg(&a),
        Command::TrainEmbeddings(a) => cmd_train_embeddings(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Python files under `paths`: files as given, directories searched
/// recursively, each group sorted.
pub fn discover(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_file() {
            out.push(p.clone());
        } else if p.is_dir() {
            let mut found = Vec::new();
            for entry in WalkDir::new(p).follow_links(true) {
                let entry = entry.map_err(|e| Failure::input(format!("{}: {e}", p.display())))?;
                if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "py") {
                    found.push(entry.into_path());
                }
            }
            found.sort();
            out.extend(found);
        } else {
            return Err(Failure::input(format!("{}: no such file or directory", p.display())));
        }
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_stubs(paths: &[PathBuf]) -> Result<StubTable, Failure> {
    let mut table = StubTable::builtin();
    for p in paths {
        table.load_file(p)?;
    }
    Ok(table)
}

/// Everything `infer` needs that outlives the per-file work.
pub struct Setup {
    pub stubs: StubTable,
    pub search_path: Vec<PathBuf>,
    pub recommender: Box<dyn Recommender>,
    pub embedding: Box<dyn Embedding>,
    pub bpe: Option<BpeMerges>,
    pub config: InferenceConfig,
}

impl Setup {
    pub fn from_args(a: &EngineArgs) -> Result<Setup, Failure> {
        if !DEFAULT_KS.contains(&a.k) {
            return Err(Failure::config(format!("--k must be 1, 3 or 5, not {}", a.k)));
        }
        let recommender: Box<dyn Recommender> = match a.recommender {
            Backend::None => Box::new(NullRecommender),
            Backend::File => {
                let p = a
                    .predictions
                    .as_ref()
                    .ok_or_else(|| Failure::config("--recommender file needs --predictions"))?;
                Box::new(FileRecommender::load(p).map_err(|e| Failure::input(e.to_string()))?)
            }
            Backend::Naive => {
                let p = a
                    .freq_table
                    .as_ref()
                    .ok_or_else(|| Failure::config("--recommender naive needs --freq-table"))?;
                let table = FrequencyTable::load(p).map_err(|e| Failure::input(e.to_string()))?;
                let mode = a.seed.map_or(NaiveMode::Deterministic, |seed| NaiveMode::Sampling { seed });
                Box::new(NaiveRecommender { table, mode })
            }
            Backend::Sidecar => {
                let cmd = a
                    .sidecar_cmd
                    .as_ref()
                    .ok_or_else(|| Failure::config("--recommender sidecar needs --sidecar-cmd"))?;
                let timeout = a.sidecar_timeout.map_or(DEFAULT_TIMEOUT, Duration::from_secs);
                Box::new(SidecarRecommender::new(cmd.clone()).with_timeout(timeout))
            }
        };
        let embedding: Box<dyn Embedding> = match &a.embeddings {
            Some(p) => Box::new(VectorEmbedding::load(p).map_err(|e| Failure::input(e.to_string()))?),
            None => Box::new(LexicalEmbedding),
        };
        let bpe = match &a.bpe_merges {
            Some(p) => Some(BpeMerges::load(p).map_err(|e| Failure::input(e.to_string()))?),
            None => None,
        };
        Ok(Setup {
            stubs: load_stubs(&a.stubs)?,
            search_path: a.search_path.clone(),
            recommender,
            embedding,
            bpe,
            config: InferenceConfig {
                max_outer_iterations: a.max_iters,
                top_k: a.k,
                penalty: a.penalty,
            },
        })
    }

    /// Solves one source file. `file` is the name the recommender sees.
    pub fn infer_source(&self, source: &str, file: &str) -> Result<(InferenceResult, BTreeSet<String>), String> {
        let module = parse_module(source, file).map_err(|e| format!("{file}:{}:{}: {}", e.line, e.col, e.message))?;
        let users = collect_user_types(&module, &self.search_path);
        let program = build_program(&module, &users, &self.stubs);
        let engine = Engine {
            ctx: RuleCtx {
                stubs: &self.stubs,
                users: &users,
            },
            recommender: self.recommender.as_ref(),
            embedding: self.embedding.as_ref(),
            bpe: self.bpe.as_ref(),
            config: self.config.clone(),
        };
        let solved = engine.infer(&program, file).map_err(|e| format!("{file}: {e}"))?;
        let names = users.names().map(str::to_string).collect();
        Ok((solved.functions, names))
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure {
                    code: EXIT_FAILURE,
                    message: e.to_string(),
                })
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

pub fn cmd_infer(a: &InferArgs) -> Result<(), Failure> {
    let setup = Setup::from_args(&a.engine)?;
    let files = discover(&a.paths)?;
    let sources: Vec<(String, String)> = files
        .iter()
        .map(|f| read(f).map(|s| (display(f), s)))
        .collect::<Result<_, _>>()?;
    let solved: Vec<(String, Result<InferenceResult, String>)> = sources
        .par_iter()
        .map(|(name, src)| (name.clone(), setup.infer_source(src, name).map(|(r, _)| r)))
        .collect();
    let mut out: BTreeMap<String, InferenceResult> = BTreeMap::new();
    for (name, r) in solved {
        match r {
            Ok(r) => {
                out.insert(name, r);
            }
            Err(e) => eprintln!("skipping {e}"),
        }
    }
    let mut text = serde_json::to_string_pretty(&out).expect("serializable output");
    text.push('\n');
    emit(&text, a.out.as_deref())
}

fn read_truths(path: &Path) -> Result<Vec<GroundTruthRecord>, Failure> {
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Failure::config(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn cmd_eval(a: &EvalArgs) -> Result<(), Failure> {
    let (preds, truths, users) = match (&a.truths, &a.preds) {
        (Some(t), Some(p)) => {
            let truths = read_truths(t)?;
            let preds: BTreeMap<String, Vec<String>> = serde_json::from_str(&read(p)?)
                .map_err(|e| Failure::config(format!("{}: {e}", p.display())))?;
            // Without sources, user-defined names come from the annotations
            // that do not parse as builtin types.
            let users = truths
                .iter()
                .flat_map(|r| crate::types::parse_type_lenient(&r.annotation).members())
                .filter_map(|t| match t {
                    crate::types::PyType::UserDefined(u) => Some(u.name),
                    _ => None,
                })
                .collect();
            (preds, truths, users)
        }
        (None, None) => {
            if a.paths.is_empty() {
                return Err(Failure::config("eval needs source paths, or --truths with --preds"));
            }
            let setup = Setup::from_args(&a.engine)?;
            let files = discover(&a.paths)?;
            let sources: Vec<(String, String)> = files
                .iter()
                .map(|f| read(f).map(|s| (display(f), s)))
                .collect::<Result<_, _>>()?;
            let per_file: Vec<Result<_, String>> = sources
                .par_iter()
                .map(|(name, src)| {
                    let (stripped, truths) =
                        strip_annotations(src).map_err(|e| format!("{name}:{}:{}: {}", e.line, e.col, e.message))?;
                    let (results, users) = setup.infer_source(&stripped, name)?;
                    Ok((predictions_for(&results, &truths), truths, users))
                })
                .collect();
            let mut preds = BTreeMap::new();
            let mut truths = Vec::new();
            let mut users = BTreeSet::new();
            for r in per_file {
                match r {
                    Ok((p, t, u)) => {
                        preds.extend(p);
                        truths.extend(t);
                        users.extend(u);
                    }
                    Err(e) => eprintln!("skipping {e}"),
                }
            }
            (preds, truths, users)
        }
        _ => return Err(Failure::config("--truths and --preds go together")),
    };
    let report = evaluate(&preds, &truths, &DEFAULT_KS, a.rare_threshold, &users);
    if let Some(out) = &a.out {
        let mut json = serde_json::to_string_pretty(&report).expect("serializable report");
        json.push('\n');
        emit(&json, Some(out))?;
    }
    emit(&report.to_table(), None)
}

/// File name of a function's DOT output.
pub fn dot_file_name(source: &Path, function: &str) -> String {
    let stem = source.file_stem().map_or_else(|| "module".to_string(), |s| s.to_string_lossy().into_owned());
    let safe: String = function
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect();
    format!("{stem}.{safe}.dot")
}

pub fn cmd_dump_tdg(a: &DumpArgs) -> Result<(), Failure> {
    let files = discover(&a.paths)?;
    let stubs = load_stubs(&a.stubs)?;
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    }
    let mut stdout_text = String::new();
    for f in &files {
        let src = read(f)?;
        let module = match parse_module(&src, &display(f)) {
            Ok(m) => m,
            Err(e) => {
                eprintln!("skipping {}:{}:{}: {}", f.display(), e.line, e.col, e.message);
                continue;
            }
        };
        let users = collect_user_types(&module, &[]);
        let program = build_program(&module, &users, &stubs);
        for tdg in &program.tdgs {
            let dot = export_dot(tdg);
            match &a.out {
                Some(dir) => {
                    let path = dir.join(dot_file_name(f, &tdg.function));
                    std::fs::write(&path, dot).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
                }
                None => stdout_text.push_str(&dot),
            }
        }
    }
    if a.out.is_none() {
        emit(&stdout_text, None)?;
    }
    Ok(())
}

pub fn cmd_train_embeddings(a: &TrainArgs) -> Result<(), Failure> {
    if a.dim == 0 {
        return Err(Failure::config("--dim must be positive"));
    }
    let files = discover(&a.paths)?;
    let corpus: Vec<Vec<String>> = files
        .iter()
        .map(|f| read(f).map(|s| identifier_tokens(&s)))
        .collect::<Result<_, _>>()?;
    let cfg = SkipGramConfig {
        dim: a.dim,
        window: a.window,
        epochs: a.epochs,
        seed: a.seed,
        ..SkipGramConfig::default()
    };
    emit(&train(&corpus, &cfg).to_text(), a.out.as_deref())
}
