//! `sttopic` command line: segment, split, fit, label, eval, drift, bleu,
//! degrade and demo.

mod config;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sttopic::corpus::{
    call_durations, load_corpus, read_segments, sample_disjoint_splits, sample_split, segment_calls, write_jsonl,
    CorpusSplit, DEFAULT_WINDOW_S,
};
use sttopic::degrade::{degrade_corpus, NoiseSpec, SubPool};
use sttopic::eval::{drift_timeline, evaluate, LabelSource, LabeledSet};
use sttopic::nmf::{Init, NmfConfig};
use sttopic::pipeline::{fit_model, label_docs};
use sttopic::textprep::{vectorize, VocabConfig};
use sttopic::topics::{load_model, save_model, top_terms};
use sttopic::{Error, ErrorClass};

use config::FileConfig;

#[derive(Parser)]
#[command(name = "sttopic", version, about = "Topic classification for translated speech segments")]
struct Cli {
    /// TOML file with default values for command flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Group utterances into fixed-length segment documents.
    Segment(SegmentArgs),
    /// Sample call-level splits reaching target durations.
    Split(SplitArgs),
    /// Build the vocabulary and learn topics from segment documents.
    Fit(FitArgs),
    /// Infer topic labels for segment documents under a saved model.
    Label(LabelArgs),
    /// Compare predicted labels with silver labels.
    Eval(EvalArgs),
    /// Per-minute topic distributions across calls.
    Drift(DriftArgs),
    /// Corpus BLEU of a hypothesis file against reference files.
    Bleu(BleuArgs),
    /// Corrupt segment text with token deletions and substitutions.
    Degrade(DegradeArgs),
    /// Run the whole pipeline on the bundled synthetic corpus.
    Demo(DemoArgs),
}

#[derive(Args)]
struct SegmentArgs {
    /// Utterance corpus (JSONL).
    input: PathBuf,
    /// Segment documents (JSONL).
    output: PathBuf,
    /// Window length in seconds.
    #[arg(long)]
    window: Option<f64>,
}

#[derive(Args)]
struct SplitArgs {
    /// Utterance corpus (JSONL).
    input: PathBuf,
    /// Split definitions (JSON).
    output: PathBuf,
    /// `name=duration`, e.g. `train=18h`, `dev=90m`, `tiny=600s`. Repeatable.
    #[arg(long = "target")]
    targets: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Take the targets as consecutive non-overlapping chunks instead of nested prefixes.
    #[arg(long)]
    disjoint: bool,
}

#[derive(Args)]
struct FitArgs {
    /// Segment documents (JSONL).
    input: PathBuf,
    /// Model file to write.
    model: PathBuf,
    #[arg(long)]
    topics: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// `nndsvda` or `seeded-random`.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    min_df: Option<usize>,
    /// Largest document-frequency ratio kept in the vocabulary.
    #[arg(long)]
    max_df: Option<f64>,
    #[arg(long)]
    max_terms: Option<usize>,
    /// Comma-separated topic names.
    #[arg(long, value_delimiter = ',')]
    names: Option<Vec<String>>,
    /// Split file from `split`; only calls in `--split-name` are used.
    #[arg(long, requires = "split_name")]
    split: Option<PathBuf>,
    #[arg(long, requires = "split")]
    split_name: Option<String>,
    /// Also write the training tf-idf matrix as `doc_id,term_index,value` CSV.
    #[arg(long)]
    dump_tfidf: Option<PathBuf>,
    /// Also write the objective trace, one value per line.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct LabelArgs {
    /// Segment documents (JSONL).
    input: PathBuf,
    model: PathBuf,
    /// Labels file to write (JSONL).
    output: PathBuf,
    /// `system` or `silver`.
    #[arg(long)]
    source: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted labels (JSONL).
    pred: PathBuf,
    /// Silver labels (JSONL).
    silver: PathBuf,
    /// Output directory for report.json, confusion.csv and recall.csv.
    out_dir: PathBuf,
    /// Model whose topic names label the tables.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, conflicts_with = "model")]
    topics: Option<usize>,
}

#[derive(Args)]
struct DriftArgs {
    labels: PathBuf,
    /// Segment documents (JSONL).
    segments: PathBuf,
    /// Timeline CSV to write.
    output: PathBuf,
    /// Comma-separated call ids to include.
    #[arg(long, value_delimiter = ',', conflicts_with = "calls_file")]
    calls: Option<Vec<String>>,
    /// File with one call id per line.
    #[arg(long)]
    calls_file: Option<PathBuf>,
    #[arg(long)]
    topics: Option<usize>,
}

#[derive(Args)]
struct BleuArgs {
    /// Hypotheses, one segment per line.
    hyp: PathBuf,
    /// Reference files aligned with the hypotheses.
    #[arg(required = true)]
    refs: Vec<PathBuf>,
    /// Score JSON to write.
    #[arg(long)]
    out: PathBuf,
    /// Add-one smoothing of the higher-order precisions.
    #[arg(long)]
    smooth: bool,
}

#[derive(Args)]
struct DegradeArgs {
    /// Segment documents (JSONL).
    input: PathBuf,
    output: PathBuf,
    #[arg(long)]
    p_drop: Option<f64>,
    #[arg(long)]
    p_sub: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Draw substitutes uniformly from this word list (one per line)
    /// instead of the corpus unigram distribution.
    #[arg(long)]
    sub_list: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Segment(_) => "segment",
            Command::Split(_) => "split",
            Command::Fit(_) => "fit",
            Command::Label(_) => "label",
            Command::Eval(_) => "eval",
            Command::Drift(_) => "drift",
            Command::Bleu(_) => "bleu",
            Command::Degrade(_) => "degrade",
            Command::Demo(_) => "demo",
        }
    }
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(msg) => Failure::Usage(msg),
            other => Failure::Core(other),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn report(command: &str, kind: &str, message: &str) {
    let body = json!({ "error": { "command": command, "kind": kind, "message": message } });
    eprintln!("{body}");
}

fn log(msg: impl AsRef<str>) {
    eprintln!("sttopic: {}", msg.as_ref());
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Error> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_lines(path: &Path) -> Result<Vec<String>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

/// Parses `name=duration` with an optional `h`, `m` or `s` suffix.
fn parse_target(spec: &str) -> Result<(String, f64), Failure> {
    let bad = || Failure::Usage(format!("bad split target `{spec}`, expected name=duration"));
    let (name, dur) = spec.split_once('=').ok_or_else(bad)?;
    if name.is_empty() {
        return Err(bad());
    }
    let (num, scale) = match dur.chars().last() {
        Some('h') => (&dur[..dur.len() - 1], 3600.0),
        Some('m') => (&dur[..dur.len() - 1], 60.0),
        Some('s') => (&dur[..dur.len() - 1], 1.0),
        _ => (dur, 1.0),
    };
    let value: f64 = num.parse().map_err(|_| bad())?;
    if !(value >= 0.0) || !value.is_finite() {
        return Err(bad());
    }
    Ok((name.to_string(), value * scale))
}

fn parse_source(s: &str) -> Result<LabelSource, Failure> {
    match s {
        "system" => Ok(LabelSource::System),
        "silver" => Ok(LabelSource::Silver),
        other => Err(Failure::Usage(format!("unknown label source `{other}`"))),
    }
}

fn cmd_segment(a: SegmentArgs, file: &FileConfig) -> CmdResult {
    let window = a.window.or(file.segment.window).unwrap_or(DEFAULT_WINDOW_S);
    let utts = load_corpus(&a.input)?;
    let docs = segment_calls(&utts, window)?;
    write_jsonl(&a.output, &docs)?;
    log(format!("{} utterances -> {} segments", utts.len(), docs.len()));
    Ok(())
}

fn cmd_split(a: SplitArgs, file: &FileConfig) -> CmdResult {
    let seed = a.seed.or(file.split.seed).or(file.seed).unwrap_or(0);
    let raw = if a.targets.is_empty() {
        file.split.targets.clone().unwrap_or_default()
    } else {
        a.targets
    };
    if raw.is_empty() {
        return Err(Failure::Usage("at least one --target is required".into()));
    }
    let targets = raw.iter().map(|t| parse_target(t)).collect::<Result<Vec<_>, _>>()?;
    let durations = call_durations(&load_corpus(&a.input)?);
    let splits: Vec<CorpusSplit> = if a.disjoint || file.split.disjoint.unwrap_or(false) {
        sample_disjoint_splits(&durations, &targets, seed)?
    } else {
        targets
            .iter()
            .map(|(name, secs)| sample_split(name, &durations, *secs, seed))
            .collect::<Result<_, _>>()?
    };
    for s in &splits {
        log(format!("{}: {} calls, {:.0} s", s.name, s.call_ids.len(), s.total_seconds));
    }
    write_file(&a.output, serde_json::to_string_pretty(&splits).expect("splits serialize"))?;
    Ok(())
}

fn load_splits(path: &Path) -> Result<Vec<CorpusSplit>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

fn cmd_fit(a: FitArgs, file: &FileConfig) -> CmdResult {
    let f = &file.fit;
    let defaults = NmfConfig::default();
    let init = match a.init.as_deref().or(f.init.as_deref()) {
        Some(s) => s.parse::<Init>()?,
        None => defaults.init,
    };
    let nmf = NmfConfig {
        n_topics: a.topics.or(f.topics).unwrap_or(defaults.n_topics),
        max_iter: a.max_iter.or(f.max_iter).unwrap_or(defaults.max_iter),
        tol: a.tol.or(f.tol).unwrap_or(defaults.tol),
        seed: a.seed.or(f.seed).or(file.seed).unwrap_or(defaults.seed),
        init,
    };
    let vd = VocabConfig::default();
    let vocab = VocabConfig {
        min_df: a.min_df.or(f.min_df).unwrap_or(vd.min_df),
        max_df_ratio: a.max_df.or(f.max_df).unwrap_or(vd.max_df_ratio),
        max_terms: a.max_terms.or(f.max_terms).unwrap_or(vd.max_terms),
    };
    nmf.validate()?;
    vocab.validate()?;

    let mut docs = read_segments(&a.input)?;
    if let (Some(path), Some(name)) = (&a.split, &a.split_name) {
        let splits = load_splits(path)?;
        let split = splits
            .iter()
            .find(|s| &s.name == name)
            .ok_or_else(|| Failure::Usage(format!("no split named `{name}` in {}", path.display())))?;
        docs.retain(|d| split.call_ids.contains(&d.call_id));
    }
    log(format!("fitting {} topics on {} documents", nmf.n_topics, docs.len()));
    let names = a.names.or_else(|| f.names.clone());
    let fitted = fit_model(&docs, &vocab, &nmf, names)?;
    save_model(&fitted.model, &a.model)?;
    log(format!(
        "vocabulary {} terms, {} iterations, objective {:.6}",
        fitted.model.vocab().len(),
        fitted.fit.n_iter(),
        fitted.fit.trace.last().copied().unwrap_or(0.0)
    ));
    for k in 0..fitted.model.n_topics() {
        if let Ok(s) = top_terms(&fitted.model, k, 8.min(fitted.model.vocab().len())) {
            let terms: Vec<&str> = s.top_terms.iter().map(|(t, _)| t.as_str()).collect();
            log(format!("{}: {}", fitted.model.topic_name(k), terms.join(" ")));
        }
    }
    if let Some(path) = &a.dump_tfidf {
        let v = vectorize(&docs, fitted.model.vocab())?;
        write_file(path, v.to_coo_csv())?;
    }
    if let Some(path) = &a.trace {
        let lines: String = fitted.fit.trace.iter().map(|x| format!("{x:e}\n")).collect();
        write_file(path, lines)?;
    }
    Ok(())
}

fn cmd_label(a: LabelArgs, file: &FileConfig) -> CmdResult {
    let source = parse_source(a.source.as_deref().or(file.label.source.as_deref()).unwrap_or("system"))?;
    let docs = read_segments(&a.input)?;
    let model = load_model(&a.model)?;
    let (_, labels) = label_docs(&docs, &model, source)?;
    labels.save(&a.output)?;
    let n_degenerate = labels.degenerate.iter().filter(|&&d| d).count();
    log(format!("labeled {} documents ({n_degenerate} degenerate)", labels.len()));
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> CmdResult {
    let pred = LabeledSet::load(&a.pred, LabelSource::System)?;
    let silver = LabeledSet::load(&a.silver, LabelSource::Silver)?;
    let model = a.model.as_deref().map(load_model).transpose()?;
    let n_topics = match (&model, a.topics) {
        (Some(m), _) => m.n_topics(),
        (None, Some(t)) => t,
        (None, None) => pred.max_label().max(silver.max_label()).map_or(1, |m| m + 1),
    };
    let names: Vec<String> = (0..n_topics)
        .map(|k| model.as_ref().map_or_else(|| format!("t{k}"), |m| m.topic_name(k)))
        .collect();
    let report = evaluate(&pred, &silver, n_topics)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    write_file(&a.out_dir.join("report.json"), report.to_json())?;
    write_file(&a.out_dir.join("confusion.csv"), report.confusion_csv(&names))?;
    write_file(&a.out_dir.join("recall.csv"), report.recall_csv(&names))?;
    log(format!(
        "accuracy {:.4} over {} documents; baseline {} at {:.4}",
        report.accuracy, report.n_docs, names[report.baseline_topic], report.baseline_accuracy
    ));
    Ok(())
}

fn cmd_drift(a: DriftArgs) -> CmdResult {
    let labels = LabeledSet::load(&a.labels, LabelSource::System)?;
    let segs = read_segments(&a.segments)?;
    let filter: Option<BTreeSet<String>> = match (a.calls, &a.calls_file) {
        (Some(calls), _) => Some(calls.into_iter().collect()),
        (None, Some(path)) => Some(read_lines(path)?.into_iter().collect()),
        (None, None) => None,
    };
    let n_topics = a.topics.unwrap_or(0);
    let timeline = drift_timeline(&labels, &segs, filter.as_ref(), n_topics)?;
    write_file(&a.output, timeline.to_csv())?;
    log(format!("{} segment indices", timeline.rows.len()));
    Ok(())
}

fn cmd_bleu(a: BleuArgs, file: &FileConfig) -> CmdResult {
    let smooth = a.smooth || file.bleu.smooth.unwrap_or(false);
    let (hyps, refs) = sttopic::bleu::load_aligned(&a.hyp, &a.refs)?;
    let score = sttopic::bleu::corpus_bleu(&hyps, &refs, smooth)?;
    write_file(&a.out, serde_json::to_string_pretty(&score).expect("score serializes"))?;
    log(format!("BLEU {:.2}", score.score));
    Ok(())
}

fn cmd_degrade(a: DegradeArgs, file: &FileConfig) -> CmdResult {
    let d = &file.degrade;
    let mut spec = NoiseSpec::new(
        a.p_drop.or(d.p_drop).unwrap_or(0.0),
        a.p_sub.or(d.p_sub).unwrap_or(0.0),
        a.seed.or(d.seed).or(file.seed).unwrap_or(0),
    );
    if let Some(path) = a.sub_list.as_ref().or(d.sub_list.as_ref()) {
        spec.sub_pool = SubPool::FixedList(read_lines(path)?);
    }
    spec.validate()?;
    let docs = read_segments(&a.input)?;
    let noisy = degrade_corpus(&docs, &spec)?;
    write_jsonl(&a.output, &noisy)?;
    log(format!("degraded {} documents", noisy.len()));
    Ok(())
}

fn cmd_demo(a: DemoArgs, file: &FileConfig) -> CmdResult {
    let seed = a.seed.or(file.demo.seed).or(file.seed).unwrap_or(11);
    let summary = sttopic::demo::run_demo(&a.out_dir, seed)?;
    log(format!(
        "{} segments, model {}x{}, baseline {:.3}",
        summary.n_segments, summary.model_dims[0], summary.model_dims[1], summary.baseline_accuracy
    ));
    for p in &summary.ladder {
        log(format!("{}: BLEU {:.2}, accuracy {:.3}", p.name, p.bleu, p.accuracy));
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(Failure::Usage)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Segment(a) => cmd_segment(a, &file),
        Command::Split(a) => cmd_split(a, &file),
        Command::Fit(a) => cmd_fit(a, &file),
        Command::Label(a) => cmd_label(a, &file),
        Command::Eval(a) => cmd_eval(a),
        Command::Drift(a) => cmd_drift(a),
        Command::Bleu(a) => cmd_bleu(a, &file),
        Command::Degrade(a) => cmd_degrade(a, &file),
        Command::Demo(a) => cmd_demo(a, &file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report("", "usage", e.render().to_string().trim());
            return ExitCode::from(2);
        }
    };
    let command = cli.command.name();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Usage(msg) => report(command, "usage", msg),
                Failure::Core(e) => report(command, e.kind(), &e.to_string()),
            }
            ExitCode::from(exit_status(&failure))
        }
    }
}

fn exit_status(failure: &Failure) -> u8 {
    match failure {
        Failure::Usage(_) => 2,
        Failure::Core(e) => match e.class() {
            ErrorClass::Data => 3,
            ErrorClass::Numerical => 4,
        },
    }
}
