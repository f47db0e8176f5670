//! `cxr-label` command line: `label`, `evaluate` and `transform`.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data errors.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::aggregate::{Labeler, ObservationLabel};
use crate::eval::{self, EvalError, MetricReport, ProbabilityRow, Task};
use crate::ingest::{self, attach_parses, IngestError, ParseIndex, ReportDocument};
use crate::observation::Observation;
use crate::policy::{self, BasicPolicy, LabelMatrix, Policy, PolicyError, PolicyOutput, PredictionMatrix, TargetCell};
use crate::rules::{RuleError, RuleSet};
use crate::table::{self, TableError, TableWriter};

/// Names a directory holding `rules/` and `phrases/`, used when `--rules` or
/// `--phrases` is not given.
pub const RULES_DIR_ENV: &str = "CXR_LABEL_RULES_DIR";

/// Reports labeled per parallel batch; bounds memory on large corpora.
const BATCH_SIZE: usize = 2048;

#[derive(Debug, Parser)]
#[command(name = "cxr-label", version, about = "Rule-based chest radiograph report labeler")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label a reports CSV (`report_id,text`) and write a labels CSV.
    Label(LabelArgs),
    /// Score labels (or probabilities) against gold annotations.
    Evaluate(EvaluateArgs),
    /// Turn a labels CSV into training targets and a loss mask.
    Transform(TransformArgs),
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub reports: PathBuf,
    /// Directory with the three phase rule files.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Directory with one `<observation_slug>.txt` phrase file per observation.
    #[arg(long)]
    pub phrases: Option<PathBuf>,
    /// CoNLL-U parses of the report sentences, enabling dependency rules.
    #[arg(long, conflicts_with = "surface_only")]
    pub conllu: Option<PathBuf>,
    /// Use surface rules only (no parses).
    #[arg(long)]
    pub surface_only: bool,
    /// Labels CSV to write; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Mention,
    Negation,
    Uncertainty,
    All,
}

impl TaskArg {
    fn tasks(self) -> Vec<Task> {
        match self {
            TaskArg::Mention => vec![Task::Mention],
            TaskArg::Negation => vec![Task::Negation],
            TaskArg::Uncertainty => vec![Task::Uncertainty],
            TaskArg::All => Task::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predicted labels CSV.
    #[arg(long, required_unless_present = "probs", conflicts_with = "probs")]
    pub pred: Option<PathBuf>,
    /// Predicted probabilities CSV (same layout, cells in [0, 1]); scored with AUROC and Brier.
    #[arg(long)]
    pub probs: Option<PathBuf>,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub task: TaskArg,
    /// Machine-readable report (CSV).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Human-readable table; stdout when absent.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Ignore,
    Zeros,
    Ones,
    SelfTrained,
    Multiclass,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_enum)]
    pub policy: PolicyArg,
    /// Model probabilities CSV; required by `self-trained`.
    #[arg(long)]
    pub preds: Option<PathBuf>,
    /// Targets CSV; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Mask CSV; defaults to `<output stem>.mask.csv` next to `--output`.
    #[arg(long)]
    pub mask_output: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{path}: {source}")]
    Table {
        path: PathBuf,
        #[source]
        source: TableError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

/// Validated inputs for one subcommand run.
#[derive(Debug, Clone, PartialEq)]
pub enum RunConfig {
    Label {
        reports: PathBuf,
        rules_dir: PathBuf,
        phrases_dir: PathBuf,
        conllu: Option<PathBuf>,
        output: Option<PathBuf>,
        workers: usize,
    },
    Evaluate {
        pred: PathBuf,
        gold: PathBuf,
        tasks: Vec<Task>,
        output: Option<PathBuf>,
        table: Option<PathBuf>,
    },
    EvaluateProbabilities {
        probs: PathBuf,
        gold: PathBuf,
        output: Option<PathBuf>,
        table: Option<PathBuf>,
    },
    Transform {
        labels: PathBuf,
        policy: Policy,
        preds: Option<PathBuf>,
        output: Option<PathBuf>,
        mask_output: Option<PathBuf>,
    },
}

fn require_file(path: &Path, flag: &str) -> Result<PathBuf, CliError> {
    if path.is_file() {
        Ok(path.to_path_buf())
    } else {
        Err(CliError::Usage(format!("{flag} {}: no such file", path.display())))
    }
}

fn require_dir(path: &Path, flag: &str) -> Result<PathBuf, CliError> {
    if path.is_dir() {
        Ok(path.to_path_buf())
    } else {
        Err(CliError::Usage(format!("{flag} {}: no such directory", path.display())))
    }
}

fn default_mask_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().unwrap_or_default().to_string_lossy();
    output.with_file_name(format!("{stem}.mask.csv"))
}

impl RunConfig {
    /// Checks paths and flag combinations. `rules_env` is the value of
    /// [`RULES_DIR_ENV`], if set.
    pub fn from_command(command: Command, rules_env: Option<PathBuf>) -> Result<Self, CliError> {
        match command {
            Command::Label(a) => {
                let from_env = |sub: &str| rules_env.as_ref().map(|root| root.join(sub));
                let rules_dir = a.rules.or_else(|| from_env("rules")).ok_or_else(|| {
                    CliError::Usage(format!("--rules is required (or set {RULES_DIR_ENV})"))
                })?;
                let phrases_dir = a.phrases.or_else(|| from_env("phrases")).ok_or_else(|| {
                    CliError::Usage(format!("--phrases is required (or set {RULES_DIR_ENV})"))
                })?;
                if a.workers == Some(0) {
                    return Err(CliError::Usage("--workers must be at least 1".into()));
                }
                Ok(RunConfig::Label {
                    reports: require_file(&a.reports, "--reports")?,
                    rules_dir: require_dir(&rules_dir, "--rules")?,
                    phrases_dir: require_dir(&phrases_dir, "--phrases")?,
                    conllu: a.conllu.as_deref().map(|p| require_file(p, "--conllu")).transpose()?,
                    output: a.output,
                    workers: a
                        .workers
                        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
                })
            }
            Command::Evaluate(a) => {
                let gold = require_file(&a.gold, "--gold")?;
                match (a.pred, a.probs) {
                    (Some(pred), None) => Ok(RunConfig::Evaluate {
                        pred: require_file(&pred, "--pred")?,
                        gold,
                        tasks: a.task.tasks(),
                        output: a.output,
                        table: a.table,
                    }),
                    (None, Some(probs)) => Ok(RunConfig::EvaluateProbabilities {
                        probs: require_file(&probs, "--probs")?,
                        gold,
                        output: a.output,
                        table: a.table,
                    }),
                    _ => Err(CliError::Usage("give exactly one of --pred and --probs".into())),
                }
            }
            Command::Transform(a) => {
                let policy = match a.policy {
                    PolicyArg::Ignore => Policy::Ignore,
                    PolicyArg::Zeros => Policy::Zeros,
                    PolicyArg::Ones => Policy::Ones,
                    PolicyArg::SelfTrained => Policy::SelfTrained,
                    PolicyArg::Multiclass => Policy::MultiClass,
                };
                let preds = match (policy, a.preds) {
                    (Policy::SelfTrained, None) => {
                        return Err(CliError::Usage("--policy self-trained requires --preds".into()))
                    }
                    (Policy::SelfTrained, Some(p)) => Some(require_file(&p, "--preds")?),
                    (_, Some(_)) => {
                        return Err(CliError::Usage("--preds is only used by --policy self-trained".into()))
                    }
                    (_, None) => None,
                };
                let mask_output = a.mask_output.or_else(|| a.output.as_deref().map(default_mask_path));
                Ok(RunConfig::Transform {
                    labels: require_file(&a.labels, "--labels")?,
                    policy,
                    preds,
                    output: a.output,
                    mask_output,
                })
            }
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn create(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => File::create(p)
            .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|source| CliError::Io { path: p.to_path_buf(), source }),
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn output_name(path: Option<&Path>) -> PathBuf {
    path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf)
}

pub fn run(config: &RunConfig) -> Result<(), CliError> {
    match config {
        RunConfig::Label { reports, rules_dir, phrases_dir, conllu, output, workers } => {
            run_label(reports, rules_dir, phrases_dir, conllu.as_deref(), output.as_deref(), *workers)
        }
        RunConfig::Evaluate { pred, gold, tasks, output, table } => {
            run_evaluate(pred, gold, tasks, output.as_deref(), table.as_deref())
        }
        RunConfig::EvaluateProbabilities { probs, gold, output, table } => {
            run_evaluate_probabilities(probs, gold, output.as_deref(), table.as_deref())
        }
        RunConfig::Transform { labels, policy, preds, output, mask_output } => {
            run_transform(labels, *policy, preds.as_deref(), output.as_deref(), mask_output.as_deref())
        }
    }
}

fn run_label(
    reports: &Path,
    rules_dir: &Path,
    phrases_dir: &Path,
    conllu: Option<&Path>,
    output: Option<&Path>,
    workers: usize,
) -> Result<(), CliError> {
    let labeler = Labeler::new(RuleSet::load(phrases_dir, rules_dir)?);
    let parses = match conllu {
        Some(path) => Some(ParseIndex::from_blocks(ingest::read_conllu(open(path)?)?)),
        None => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Data(format!("cannot start worker pool: {e}")))?;

    let out_name = output_name(output);
    let table_err = |source| CliError::Table { path: out_name.clone(), source };
    let mut writer = TableWriter::new(create(output)?).map_err(table_err)?;

    let label_one = |record: ingest::ReportRecord| -> Result<_, IngestError> {
        let mut doc = ReportDocument::new(record.report_id, record.text);
        if let Some(index) = &parses {
            let blocks = index.get(&doc.report_id);
            doc = attach_parses(doc, blocks)?;
        }
        Ok(labeler.label(&doc))
    };

    let mut records = ingest::read_reports(open(reports)?);
    loop {
        let batch: Vec<_> = records.by_ref().take(BATCH_SIZE).collect::<Result<_, _>>()?;
        if batch.is_empty() {
            break;
        }
        let labeled: Vec<_> = pool.install(|| batch.into_par_iter().map(label_one).collect());
        for result in labeled {
            let v = result?;
            writer.write_labels(v.report_id(), v.labels()).map_err(table_err)?;
        }
    }
    writer.flush().map_err(table_err)
}

fn read_labels(path: &Path) -> Result<Vec<table::LabelRow>, CliError> {
    table::read_label_rows(open(path)?).map_err(|source| CliError::Table { path: path.to_path_buf(), source })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|source| CliError::Io { path: output_name(path), source })
}

fn run_evaluate(pred: &Path, gold: &Path, tasks: &[Task], output: Option<&Path>, table: Option<&Path>) -> Result<(), CliError> {
    let pred = read_labels(pred)?;
    let gold = read_labels(gold)?;
    let reports: Vec<MetricReport> = tasks
        .iter()
        .map(|&t| eval::f1_report(&pred, &gold, t))
        .collect::<Result<_, _>>()?;
    if let Some(path) = output {
        eval::write_metric_csv(create(Some(path))?, &reports)
            .map_err(|e| CliError::Table { path: path.to_path_buf(), source: e.into() })?;
    }
    write_text(table, &eval::format_table(&reports))
}

fn read_probabilities(path: &Path) -> Result<Vec<ProbabilityRow>, CliError> {
    let table_err = |source| CliError::Table { path: path.to_path_buf(), source };
    let mut out = Vec::new();
    for row in table::read_rows(open(path)?).map_err(table_err)? {
        let (line, report_id, cells) = row.map_err(table_err)?;
        let mut probs = [None; Observation::COUNT];
        for (i, cell) in cells.iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                continue;
            }
            match cell.parse::<f64>() {
                Ok(p) if (0.0..=1.0).contains(&p) => probs[i] = Some(p),
                _ => {
                    return Err(table_err(TableError::Invalid {
                        line,
                        reason: format!("report {report_id:?}, {}: {cell:?} is not a probability", Observation::ALL[i]),
                    }))
                }
            }
        }
        out.push(ProbabilityRow { report_id, probs });
    }
    Ok(out)
}

fn run_evaluate_probabilities(probs: &Path, gold: &Path, output: Option<&Path>, table: Option<&Path>) -> Result<(), CliError> {
    let probs = read_probabilities(probs)?;
    let gold = read_labels(gold)?;
    let scores = eval::score_probabilities(&probs, &gold)?;

    let cell = |v: Option<f64>| v.map_or_else(|| "N/A".to_string(), |f| f.to_string());
    if let Some(path) = output {
        let csv_err = |e: csv::Error| CliError::Table { path: path.to_path_buf(), source: e.into() };
        let mut w = csv::Writer::from_writer(create(Some(path))?);
        w.write_record(["category", "positives", "negatives", "auroc", "brier", "scaled_brier"]).map_err(csv_err)?;
        for s in &scores {
            w.write_record([
                s.observation.name(),
                &s.positives.to_string(),
                &s.negatives.to_string(),
                &cell(s.auroc),
                &cell(s.brier),
                &cell(s.scaled_brier),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    }

    let short = |v: Option<f64>| v.map_or_else(|| "N/A".to_string(), |f| format!("{f:.3}"));
    let mut text = format!("{:<28}{:>10}{:>10}{:>14}\n", "Category", "AUROC", "Brier", "Scaled Brier");
    for s in &scores {
        text.push_str(&format!(
            "{:<28}{:>10}{:>10}{:>14}\n",
            s.observation.name(),
            short(s.auroc),
            short(s.brier),
            short(s.scaled_brier)
        ));
    }
    write_text(table, &text)
}

fn target_cell(t: TargetCell) -> String {
    match t {
        TargetCell::Masked => String::new(),
        TargetCell::Value(1.0) => "1.0".into(),
        TargetCell::Value(0.0) => "0.0".into(),
        TargetCell::Value(v) => v.to_string(),
        TargetCell::Class(c) => (c as u8).to_string(),
    }
}

fn run_transform(
    labels_path: &Path,
    policy: Policy,
    preds: Option<&Path>,
    output: Option<&Path>,
    mask_output: Option<&Path>,
) -> Result<(), CliError> {
    let rows = read_labels(labels_path)?;
    let ids: Vec<&str> = rows.iter().map(|r| r.report_id.as_str()).collect();
    let matrix = LabelMatrix::from_rows(&rows.iter().map(|r| r.labels).collect::<Vec<[ObservationLabel; 14]>>())?;

    let out: PolicyOutput = match policy {
        Policy::Ignore => policy::apply_policy(&matrix, BasicPolicy::Ignore),
        Policy::Zeros => policy::apply_policy(&matrix, BasicPolicy::Zeros),
        Policy::Ones => policy::apply_policy(&matrix, BasicPolicy::Ones),
        Policy::MultiClass => policy::apply_policy(&matrix, BasicPolicy::MultiClass),
        Policy::SelfTrained => {
            let path = preds.expect("validated by RunConfig");
            let by_id: HashMap<String, [Option<f64>; 14]> = read_probabilities(path)?
                .into_iter()
                .map(|r| (r.report_id, r.probs))
                .collect();
            let mut aligned = Vec::with_capacity(ids.len());
            for id in &ids {
                let probs = by_id
                    .get(*id)
                    .ok_or_else(|| CliError::Data(format!("{}: no predictions for report {id:?}", path.display())))?;
                let full: Option<Vec<f64>> = probs.iter().copied().collect();
                aligned.push(full.ok_or_else(|| {
                    CliError::Data(format!("{}: report {id:?} has empty prediction cells", path.display()))
                })?);
            }
            policy::apply_selftrain(&matrix, &PredictionMatrix::from_rows(&aligned)?)?
        }
    };

    let out_name = output_name(output);
    let table_err = |path: PathBuf| move |source| CliError::Table { path, source };
    let mut targets = TableWriter::new(create(output)?).map_err(table_err(out_name.clone()))?;
    let mut masks = match mask_output {
        Some(p) => Some(TableWriter::new(create(Some(p))?).map_err(table_err(p.to_path_buf()))?),
        None => None,
    };
    for (r, id) in ids.iter().enumerate() {
        let cells: Vec<String> = (0..out.n_cols()).map(|c| target_cell(out.target(r, c))).collect();
        targets.write_cells(id, &cells).map_err(table_err(out_name.clone()))?;
        if let (Some(w), Some(p)) = (masks.as_mut(), mask_output) {
            let cells: Vec<&str> = (0..out.n_cols())
                .map(|c| if matches!(out.target(r, c), TargetCell::Masked) { "0" } else { "1" })
                .collect();
            w.write_cells(id, &cells).map_err(table_err(p.to_path_buf()))?;
        }
    }
    targets.flush().map_err(table_err(out_name))?;
    if let (Some(w), Some(p)) = (masks.as_mut(), mask_output) {
        w.flush().map_err(table_err(p.to_path_buf()))?;
    }
    Ok(())
}

/// Parses `args`, runs the subcommand and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let rules_env = std::env::var_os(RULES_DIR_ENV).map(PathBuf::from);
    let result = RunConfig::from_command(cli.command, rules_env).and_then(|config| run(&config));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cxr-label: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
