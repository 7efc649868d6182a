//! Subcommand definitions and their execution.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nlpkit::classify::{build_index, classification_counts, classify_doc, tokenize, train_centroids, vectorize};
use nlpkit::corpus::{
    decode_spans, encode_bmes, format_tagged, load_labeled, load_segmented, load_tagged, EntitySpan, SegmentedSentence,
    TaggedSentence,
};
use nlpkit::dcnn::{Activation, TrainConfig};
use nlpkit::hmm_seg::{segment_text, train_hmm};
use nlpkit::metrics::{
    bleu, count_segments, fmt_f64, micro_prf, rouge_l, seg_precision_recall, BleuParams, EvalReport, RougeParams,
    SegCounts,
};
use nlpkit::ner::{evaluate_ner, predict_labels, train_ner, NerArch, NerEvalMode, NerTrainConfig};
use nlpkit::seqmodel::{train_sequence_model, ModelKind as SeqKind, SequenceModel, TrainParams};

use crate::bench::run_bench;
use crate::config::{CliError, OutputFormat, RunConfig, EXIT_CODE_HELP};
use crate::model_io::{load_model, save_model, CentroidBundle, Model, ModelFile, ModelKind};
use crate::simval::{simval, BASELINE, IMPROVED};
use crate::{atomic_write, fixtures};

#[derive(Debug, Parser)]
#[command(
    name = "nlpkit",
    version,
    about = "Word segmentation, tagging, NER, classification and evaluation",
    after_help = EXIT_CODE_HELP
)]
pub struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
    /// Also write the report to this file.
    #[arg(long, global = true, value_name = "FILE")]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train an HMM word segmenter on a segmented corpus.
    SegTrain(SegTrainArgs),
    /// Segment raw text, optionally scoring against a gold segmentation.
    SegRun(SegRunArgs),
    /// Train a maximum-entropy or CRF sequence tagger.
    TagTrain(TagTrainArgs),
    /// Tag a corpus and report label accuracy.
    TagRun(RunArgs),
    /// Train the convolutional NER tagger on a BIO corpus.
    NerTrain(NerTrainArgs),
    /// Tag a BIO corpus with a NER model and evaluate its spans.
    NerRun(NerRunArgs),
    /// Train a TF-IDF nearest-centroid document classifier.
    ClassifyTrain(TrainArgs),
    /// Classify labeled documents and report accuracy.
    ClassifyRun(RunArgs),
    /// Compute evaluation metrics from counts or files.
    #[command(subcommand)]
    Score(ScoreCommand),
    /// Time the four task families on the fixture corpora.
    Bench(BenchArgs),
    /// Recompute the reference segmentation comparison and check it.
    Simval(SimvalArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training corpus.
    #[arg(long, value_name = "FILE")]
    pub train: PathBuf,
    /// Output model file.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SegTrainArgs {
    #[command(flatten)]
    pub common: TrainArgs,
    /// Additive smoothing for HMM tables.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct SegRunArgs {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Raw text, one sentence per line.
    #[arg(long, value_name = "FILE", required_unless_present = "gold")]
    pub input: Option<PathBuf>,
    /// Gold segmentation; its sentences are the input when --input is absent.
    #[arg(long, value_name = "FILE")]
    pub gold: Option<PathBuf>,
    /// Segmented output; stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaggerKind {
    Maxent,
    Crf,
}

#[derive(Debug, Args)]
pub struct TagTrainArgs {
    #[command(flatten)]
    pub common: TrainArgs,
    #[arg(long, value_enum, default_value_t = TaggerKind::Crf)]
    pub kind: TaggerKind,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.01)]
    pub l2: f64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Labeled input; its labels are the gold standard.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Predictions; stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NerTrainArgs {
    #[command(flatten)]
    pub common: TrainArgs,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.3)]
    pub init_scale: f64,
    /// Units seen per prediction (odd).
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 16)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 3)]
    pub kernel: usize,
    #[arg(long, default_value_t = 24)]
    pub channels: usize,
    #[arg(long, default_value_t = 2)]
    pub pool: usize,
    /// Decode with a CRF layer over the network emissions.
    #[arg(long)]
    pub crf: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Strict,
    Relaxed,
}

impl From<EvalMode> for NerEvalMode {
    fn from(m: EvalMode) -> Self {
        match m {
            EvalMode::Strict => NerEvalMode::Strict,
            EvalMode::Relaxed => NerEvalMode::Relaxed,
        }
    }
}

#[derive(Debug, Args)]
pub struct NerRunArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, default_value_t = EvalMode::Strict)]
    pub mode: EvalMode,
}

#[derive(Debug, Subcommand)]
pub enum ScoreCommand {
    /// Segmentation precision and recall from counts or files.
    Seg(ScoreSegArgs),
    /// Mean line-level ROUGE-L.
    Rouge(ScoreRougeArgs),
    /// Mean line-level BLEU.
    Bleu(ScoreBleuArgs),
    /// Entity-span P/R/F between two BIO files.
    Ner(ScoreNerArgs),
}

#[derive(Debug, Args)]
pub struct ScoreSegArgs {
    /// Correct output segments.
    #[arg(long = "n", requires_all = ["total_output", "total_gold"], conflicts_with_all = ["gold", "pred"])]
    pub correct: Option<usize>,
    /// Total output segments.
    #[arg(long = "N", requires = "correct")]
    pub total_output: Option<usize>,
    /// Gold segments.
    #[arg(long = "M", requires = "correct")]
    pub total_gold: Option<usize>,
    #[arg(long, value_name = "FILE", requires = "pred", required_unless_present = "correct")]
    pub gold: Option<PathBuf>,
    #[arg(long, value_name = "FILE", requires = "gold")]
    pub pred: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreRougeArgs {
    #[arg(long, value_name = "FILE")]
    pub cand: PathBuf,
    #[arg(long = "ref", value_name = "FILE")]
    pub reference: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
}

#[derive(Debug, Args)]
pub struct ScoreBleuArgs {
    #[arg(long, value_name = "FILE")]
    pub cand: PathBuf,
    /// Reference file, line-aligned with the candidates; repeatable.
    #[arg(long = "ref", value_name = "FILE", required = true)]
    pub references: Vec<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub max_order: usize,
}

#[derive(Debug, Args)]
pub struct ScoreNerArgs {
    #[arg(long, value_name = "FILE")]
    pub gold: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub pred: PathBuf,
    #[arg(long, value_enum, default_value_t = EvalMode::Strict)]
    pub mode: EvalMode,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Fixture directory; defaults to $NLPKIT_FIXTURES, then the bundled set.
    #[arg(long, value_name = "DIR")]
    pub fixtures: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimvalArgs {
    #[arg(long = "base-n", default_value_t = BASELINE.0)]
    pub base_n: usize,
    #[arg(long = "base-N", default_value_t = BASELINE.1)]
    pub base_big_n: usize,
    #[arg(long = "base-M", default_value_t = BASELINE.2)]
    pub base_m: usize,
    #[arg(long = "improved-n", default_value_t = IMPROVED.0)]
    pub improved_n: usize,
    #[arg(long = "improved-N", default_value_t = IMPROVED.1)]
    pub improved_big_n: usize,
    #[arg(long = "improved-M", default_value_t = IMPROVED.2)]
    pub improved_m: usize,
}

/// Captured output of one command.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
}

fn render(report: &EvalReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Table => report.to_table(),
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    atomic_write(path, body.as_bytes()).map_err(|e| CliError::io(path, e))
}

/// Records the seed the model was trained with.
fn model_seed(report: &mut EvalReport, meta: &BTreeMap<String, String>) {
    if let Some(seed) = meta.get("seed") {
        report.meta("seed", seed);
    }
}

/// Renders the report; one without a seed of its own gets the run's seed.
fn render_seeded(report: &EvalReport, cfg: &RunConfig) -> String {
    let mut report = report.clone();
    report
        .meta
        .entry("seed".to_owned())
        .or_insert_with(|| cfg.seed.to_string());
    render(&report, cfg.format)
}

/// Emits the report to stdout and, when configured, to the report file.
fn emit(out: &mut Outcome, cfg: &RunConfig, report: &EvalReport) -> Result<(), CliError> {
    let text = render_seeded(report, cfg);
    if let Some(p) = &cfg.report {
        write_file(p, &text)?;
    }
    out.stdout.push_str(&text);
    Ok(())
}

/// Predictions go to `--output` or stdout. The report follows on stdout
/// only when predictions went to a file.
fn emit_predictions(
    out: &mut Outcome,
    cfg: &RunConfig,
    output: Option<&Path>,
    predictions: &str,
    report: &EvalReport,
) -> Result<(), CliError> {
    match output {
        Some(p) => {
            write_file(p, predictions)?;
            emit(out, cfg, report)
        }
        None => {
            out.stdout.push_str(predictions);
            if let Some(p) = &cfg.report {
                write_file(p, &render_seeded(report, cfg))?;
            }
            Ok(())
        }
    }
}

fn save(path: &Path, file: ModelFile) -> Result<(), CliError> {
    Ok(save_model(path, &file)?)
}

fn train_report(title: &str, seed: u64, kind: ModelKind) -> EvalReport {
    let mut r = EvalReport::new(title);
    r.meta("seed", seed).meta("model_kind", kind.tag());
    r
}

/// Runs a parsed command. Output produced before a failure stays in `out`.
pub fn execute(cli: Cli, out: &mut Outcome) -> Result<(), CliError> {
    let seed = match &cli.command {
        Command::SegTrain(a) => a.common.seed,
        Command::TagTrain(a) => a.common.seed,
        Command::NerTrain(a) => a.common.seed,
        Command::ClassifyTrain(a) => a.seed,
        _ => 0,
    };
    let cfg = RunConfig {
        seed,
        format: cli.format,
        report: cli.report,
    };
    match cli.command {
        Command::SegTrain(a) => seg_train(out, &cfg, &a)?,
        Command::SegRun(a) => seg_run(out, &cfg, &a)?,
        Command::TagTrain(a) => tag_train(out, &cfg, &a)?,
        Command::TagRun(a) => tag_run(out, &cfg, &a)?,
        Command::NerTrain(a) => ner_train(out, &cfg, &a)?,
        Command::NerRun(a) => ner_run(out, &cfg, &a)?,
        Command::ClassifyTrain(a) => classify_train(out, &cfg, &a)?,
        Command::ClassifyRun(a) => classify_run(out, &cfg, &a)?,
        Command::Score(s) => score(out, &cfg, s)?,
        Command::Bench(a) => {
            let dir = fixtures::fixture_dir(a.fixtures.as_deref());
            let report = run_bench(&dir)?;
            let text = match cfg.format {
                OutputFormat::Json => report.to_json(),
                OutputFormat::Table => report.to_table(),
            };
            if let Some(p) = &cfg.report {
                write_file(p, &text)?;
            }
            out.stdout.push_str(&text);
        }
        Command::Simval(a) => simval_cmd(out, &cfg, &a)?,
    }
    Ok(())
}

fn seg_train(out: &mut Outcome, cfg: &RunConfig, a: &SegTrainArgs) -> Result<(), CliError> {
    RunConfig::require_inputs(&[&a.common.train])?;
    if !(a.alpha >= 0.0 && a.alpha.is_finite()) {
        return Err(CliError::Usage(format!(
            "--alpha must be non-negative, got {}",
            a.alpha
        )));
    }
    let corpus = load_segmented(&a.common.train)?;
    let tagged: Vec<TaggedSentence> = corpus.iter().map(encode_bmes).collect::<Result<_, _>>()?;
    let model = train_hmm(&tagged, a.alpha).map_err(CliError::other)?;
    let mut report = train_report("seg-train", cfg.seed, ModelKind::Hmm);
    report
        .meta("alpha", fmt_f64(a.alpha))
        .count("sentences", corpus.len() as u64)
        .count("units", tagged.iter().map(|t| t.len() as u64).sum())
        .count("vocabulary", model.vocab.len() as u64)
        .count("states", model.num_states() as u64);
    let file = ModelFile::new(Model::Hmm(model))
        .with_meta("seed", cfg.seed)
        .with_meta("alpha", fmt_f64(a.alpha));
    save(&a.common.model, file)?;
    emit(out, cfg, &report)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn seg_run(out: &mut Outcome, cfg: &RunConfig, a: &SegRunArgs) -> Result<(), CliError> {
    let inputs: Vec<&Path> = [Some(&a.model), a.input.as_ref(), a.gold.as_ref()]
        .into_iter()
        .flatten()
        .map(PathBuf::as_path)
        .collect();
    RunConfig::require_inputs(&inputs)?;
    let ModelFile {
        model: Model::Hmm(model),
        meta,
    } = load_model(&a.model, Some(&[ModelKind::Hmm]))?
    else {
        unreachable!("kind checked by loader")
    };
    let gold = a.gold.as_deref().map(load_segmented).transpose()?;
    let raw: Vec<String> = match (&a.input, &gold) {
        (Some(p), _) => read_text(p)?
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .map(str::to_owned)
            .collect(),
        (None, Some(g)) => g.iter().map(SegmentedSentence::concat).collect(),
        (None, None) => return Err(CliError::Usage("seg-run needs --input or --gold".into())),
    };
    let mut segmented = Vec::with_capacity(raw.len());
    for (i, line) in raw.iter().enumerate() {
        let seg = segment_text(&model, line).map_err(|e| CliError::Format(format!("input sentence {}: {e}", i + 1)))?;
        segmented.push(seg);
    }
    let mut text = String::new();
    for s in &segmented {
        let _ = writeln!(text, "{s}");
    }
    let mut report = EvalReport::new("seg-run");
    model_seed(&mut report, &meta);
    report.count("sentences", segmented.len() as u64);
    if let Some(g) = &gold {
        if g.len() != segmented.len() {
            return Err(CliError::Format(format!(
                "gold has {} sentences, input has {}",
                g.len(),
                segmented.len()
            )));
        }
        let counts = g
            .iter()
            .zip(&segmented)
            .fold(SegCounts::default(), |acc, (g, s)| acc.merge(count_segments(g, s)));
        seg_scores(&mut report, counts)?;
    }
    emit_predictions(out, cfg, a.output.as_deref(), &text, &report)
}

fn seg_scores(report: &mut EvalReport, c: SegCounts) -> Result<(), CliError> {
    let (p, r) = seg_precision_recall(c)?;
    report
        .count("n", c.correct as u64)
        .count("N", c.output as u64)
        .count("M", c.gold as u64)
        .score("precision", p)
        .score("recall", r);
    Ok(())
}

fn tag_train(out: &mut Outcome, cfg: &RunConfig, a: &TagTrainArgs) -> Result<(), CliError> {
    RunConfig::require_inputs(&[&a.common.train])?;
    let corpus = load_tagged(&a.common.train, None)?;
    let kind = match a.kind {
        TaggerKind::Maxent => SeqKind::MaxEnt,
        TaggerKind::Crf => SeqKind::Crf,
    };
    let params = TrainParams {
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        l2: a.l2,
        seed: cfg.seed,
    };
    let (model, train) = train_sequence_model(kind, &corpus, &params).map_err(CliError::other)?;
    let file: Model = model.into();
    let mut report = train_report("tag-train", cfg.seed, file.kind());
    report
        .meta("epochs", a.epochs)
        .meta("learning_rate", fmt_f64(a.learning_rate))
        .meta("l2", fmt_f64(a.l2))
        .count("sentences", corpus.len() as u64)
        .meta("final_loss", fmt_f64(*train.losses.last().unwrap_or(&f64::NAN)))
        .meta("final_learning_rate", fmt_f64(train.final_learning_rate));
    let file = ModelFile::new(file)
        .with_meta("seed", cfg.seed)
        .with_meta("epochs", a.epochs)
        .with_meta("learning_rate", fmt_f64(a.learning_rate))
        .with_meta("l2", fmt_f64(a.l2));
    save(&a.common.model, file)?;
    emit(out, cfg, &report)
}

fn tag_run(out: &mut Outcome, cfg: &RunConfig, a: &RunArgs) -> Result<(), CliError> {
    RunConfig::require_inputs(&[&a.model, &a.input])?;
    let file = load_model(&a.model, Some(&[ModelKind::MaxEnt, ModelKind::Crf]))?;
    let meta = file.meta;
    let model = match file.model {
        Model::MaxEnt(m) => SequenceModel::MaxEnt(m),
        Model::Crf(m) => SequenceModel::Crf(m),
        _ => unreachable!("kind checked by loader"),
    };
    let corpus = load_tagged(&a.input, None)?;
    let mut predicted = Vec::with_capacity(corpus.len());
    let (mut gold, mut pred) = (Vec::new(), Vec::new());
    for s in &corpus {
        let labels = model.predict(&s.units);
        gold.extend(s.labels.iter().cloned());
        pred.extend(labels.iter().cloned());
        predicted.push(TaggedSentence::new(s.units.clone(), labels).map_err(CliError::other)?);
    }
    let mut report = EvalReport::new("tag-run");
    model_seed(&mut report, &meta);
    report
        .count("sentences", corpus.len() as u64)
        .count("units", gold.len() as u64);
    if !gold.is_empty() {
        let counts = classification_counts(&gold, &pred)?;
        report.score("accuracy", micro_prf(&counts)?.prf.precision);
        report.add_class_counts(&counts)?;
    }
    emit_predictions(out, cfg, a.output.as_deref(), &format_tagged(&predicted), &report)
}

fn ner_train(out: &mut Outcome, cfg: &RunConfig, a: &NerTrainArgs) -> Result<(), CliError> {
    RunConfig::require_inputs(&[&a.common.train])?;
    let corpus = load_tagged(&a.common.train, None)?;
    let config = NerTrainConfig {
        train: TrainConfig {
            learning_rate: a.learning_rate,
            epochs: a.epochs,
            seed: cfg.seed,
            init_scale: a.init_scale,
        },
        arch: NerArch {
            window: a.window,
            embed_dim: a.embed_dim,
            kernel: a.kernel,
            conv_channels: a.channels,
            conv_activation: Activation::Relu,
            pool_window: a.pool,
            use_crf: a.crf,
        },
    };
    let (model, train) = train_ner(&corpus, &config).map_err(|e| match e {
        nlpkit::ner::NerError::NotBio(_) => CliError::format(e),
        nlpkit::ner::NerError::Architecture(_) => CliError::Usage(e.to_string()),
        other => CliError::other(other),
    })?;
    let (gold, pred): (Vec<Vec<EntitySpan>>, Vec<Vec<EntitySpan>>) = corpus
        .iter()
        .map(|s| (decode_spans(&s.labels), decode_spans(&predict_labels(&model, &s.units))))
        .unzip();
    let ev = evaluate_ner(&gold, &pred, NerEvalMode::Strict).map_err(CliError::format)?;
    let mut report = train_report("ner-train", cfg.seed, ModelKind::Ner);
    report
        .meta("epochs", a.epochs)
        .meta("learning_rate", fmt_f64(a.learning_rate))
        .meta("crf_layer", a.crf)
        .count("sentences", corpus.len() as u64)
        .meta("final_cost", fmt_f64(*train.epoch_costs.last().unwrap_or(&f64::NAN)));
    if !ev.counts.classes.is_empty() {
        report.score("train_micro_f1", micro_prf(&ev.counts)?.prf.f1);
    }
    let file = ModelFile::new(Model::Ner(model))
        .with_meta("seed", cfg.seed)
        .with_meta("epochs", a.epochs)
        .with_meta("learning_rate", fmt_f64(a.learning_rate))
        .with_meta("init_scale", fmt_f64(a.init_scale));
    save(&a.common.model, file)?;
    emit(out, cfg, &report)
}

fn ner_run(out: &mut Outcome, cfg: &RunConfig, a: &NerRunArgs) -> Result<(), CliError> {
    RunConfig::require_inputs(&[&a.run.model, &a.run.input])?;
    let ModelFile {
        model: Model::Ner(model),
        meta,
    } = load_model(&a.run.model, Some(&[ModelKind::Ner]))?
    else {
        unreachable!("kind checked by loader")
    };
    let corpus = load_tagged(&a.run.input, None)?;
    let mut predicted = Vec::with_capacity(corpus.len());
    let (mut gold, mut pred) = (Vec::new(), Vec::new());
    for s in &corpus {
        let labels = predict_labels(&model, &s.units);
        gold.push(decode_spans(&s.labels));
        pred.push(decode_spans(&labels));
        predicted.push(TaggedSentence::new(s.units.clone(), labels).map_err(CliError::other)?);
    }
    let mut report = evaluate_ner(&gold, &pred, a.mode.into())
        .map_err(CliError::format)?
        .report;
    report.title = "ner-run".into();
    model_seed(&mut report, &meta);
    emit_predictions(out, cfg, a.run.output.as_deref(), &format_tagged(&predicted), &report)
}

fn classify_train(out: &mut Outcome, cfg: &RunConfig, a: &TrainArgs) -> Result<(), CliError> {
    RunConfig::require_inputs(&[&a.train])?;
    let docs = load_labeled(&a.train, true)?;
    let tokens: Vec<Vec<String>> = docs.iter().map(|d| tokenize(&d.text)).collect();
    let index = build_index(&tokens)?;
    let examples: Vec<_> = docs
        .iter()
        .zip(&tokens)
        .map(|(d, t)| (vectorize(&index, t), d.label.clone().unwrap_or_default()))
        .collect();
    let model = train_centroids(&examples)?;
    let gold: Vec<&str> = examples.iter().map(|(_, l)| l.as_str()).collect();
    let pred: Vec<&str> = tokens.iter().map(|t| classify_doc(&model, &index, t)).collect();
    let counts = classification_counts(&gold, &pred)?;
    let mut report = train_report("classify-train", cfg.seed, ModelKind::Centroid);
    report
        .count("documents", docs.len() as u64)
        .count("labels", model.labels().len() as u64)
        .count("vocabulary", index.vocabulary().len() as u64)
        .score("train_accuracy", micro_prf(&counts)?.prf.precision);
    let file = ModelFile::new(Model::Centroid(CentroidBundle { index, model })).with_meta("seed", cfg.seed);
    save(&a.model, file)?;
    emit(out, cfg, &report)
}

fn classify_run(out: &mut Outcome, cfg: &RunConfig, a: &RunArgs) -> Result<(), CliError> {
    RunConfig::require_inputs(&[&a.model, &a.input])?;
    let ModelFile {
        model: Model::Centroid(bundle),
        meta,
    } = load_model(&a.model, Some(&[ModelKind::Centroid]))?
    else {
        unreachable!("kind checked by loader")
    };
    let docs = load_labeled(&a.input, true)?;
    let mut text = String::new();
    let (mut gold, mut pred) = (Vec::new(), Vec::new());
    for d in &docs {
        let label = classify_doc(&bundle.model, &bundle.index, &tokenize(&d.text));
        let _ = writeln!(text, "{}\t{label}", d.id);
        gold.push(d.label.clone().unwrap_or_default());
        pred.push(label.to_owned());
    }
    let mut report = EvalReport::new("classify-run");
    model_seed(&mut report, &meta);
    report.count("documents", docs.len() as u64);
    if !docs.is_empty() {
        let counts = classification_counts(&gold, &pred)?;
        report.score("accuracy", micro_prf(&counts)?.prf.precision);
        report.add_class_counts(&counts)?;
    }
    emit_predictions(out, cfg, a.output.as_deref(), &text, &report)
}

/// Line-aligned token lists from a text file.
fn read_lines(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    Ok(read_text(path)?
        .lines()
        .map(|l| l.split_whitespace().map(str::to_owned).collect())
        .collect())
}

fn score(out: &mut Outcome, cfg: &RunConfig, cmd: ScoreCommand) -> Result<(), CliError> {
    let report = match cmd {
        ScoreCommand::Seg(a) => {
            let counts = match (a.correct, &a.gold, &a.pred) {
                (Some(n), _, _) => SegCounts::new(
                    n,
                    a.total_output.expect("required by --n"),
                    a.total_gold.expect("required by --n"),
                )
                .map_err(|e| CliError::Usage(e.to_string()))?,
                (None, Some(g), Some(p)) => {
                    RunConfig::require_inputs(&[g, p])?;
                    let (g, p) = (load_segmented(g)?, load_segmented(p)?);
                    if g.len() != p.len() {
                        return Err(CliError::Format(format!(
                            "gold has {} sentences, prediction has {}",
                            g.len(),
                            p.len()
                        )));
                    }
                    g.iter()
                        .zip(&p)
                        .fold(SegCounts::default(), |acc, (g, p)| acc.merge(count_segments(g, p)))
                }
                _ => return Err(CliError::Usage("score seg needs --n/--N/--M or --gold/--pred".into())),
            };
            let mut r = EvalReport::new("score seg");
            seg_scores(&mut r, counts)?;
            r
        }
        ScoreCommand::Rouge(a) => {
            RunConfig::require_inputs(&[&a.cand, &a.reference])?;
            if !(a.beta > 0.0 && a.beta.is_finite()) {
                return Err(CliError::Usage(format!("--beta must be positive, got {}", a.beta)));
            }
            let params = RougeParams { beta: a.beta };
            let (cands, refs) = (read_lines(&a.cand)?, read_lines(&a.reference)?);
            line_counts_match(cands.len(), refs.len())?;
            let (mut f, mut rec, mut prec) = (0.0, 0.0, 0.0);
            for (c, r) in cands.iter().zip(&refs) {
                let s = rouge_l(c, r, params)?;
                f += s.score;
                rec += s.recall;
                prec += s.precision;
            }
            let n = cands.len().max(1) as f64;
            let mut r = EvalReport::new("score rouge");
            r.meta("beta", fmt_f64(a.beta))
                .count("lines", cands.len() as u64)
                .score("rouge_l", f / n)
                .score("rouge_l_recall", rec / n)
                .score("rouge_l_precision", prec / n);
            r
        }
        ScoreCommand::Bleu(a) => {
            let mut inputs: Vec<&Path> = vec![&a.cand];
            inputs.extend(a.references.iter().map(PathBuf::as_path));
            RunConfig::require_inputs(&inputs)?;
            let params = BleuParams::new(a.max_order).map_err(|e| CliError::Usage(e.to_string()))?;
            let cands = read_lines(&a.cand)?;
            let refs = a
                .references
                .iter()
                .map(|p| read_lines(p))
                .collect::<Result<Vec<_>, _>>()?;
            for r in &refs {
                line_counts_match(cands.len(), r.len())?;
            }
            let mut total = 0.0;
            let (mut zero_order, mut empty) = (0u64, 0u64);
            for (i, c) in cands.iter().enumerate() {
                let line_refs: Vec<&Vec<String>> = refs.iter().map(|r| &r[i]).collect();
                let s = bleu(c, &line_refs, &params).map_err(|e| CliError::Format(format!("line {}: {e}", i + 1)))?;
                total += s.score;
                zero_order += u64::from(s.zero_order.is_some());
                empty += u64::from(s.empty_candidate);
            }
            let mut r = EvalReport::new("score bleu");
            r.meta("max_order", a.max_order)
                .count("lines", cands.len() as u64)
                .count("references", refs.len() as u64)
                .count("zero_order_lines", zero_order)
                .count("empty_candidates", empty)
                .score("bleu", total / cands.len().max(1) as f64);
            if zero_order > 0 {
                r.flag("zero_order");
            }
            if empty > 0 {
                r.flag("empty_candidate");
            }
            r
        }
        ScoreCommand::Ner(a) => {
            RunConfig::require_inputs(&[&a.gold, &a.pred])?;
            let gold: Vec<Vec<EntitySpan>> = load_tagged(&a.gold, None)?
                .iter()
                .map(|s| decode_spans(&s.labels))
                .collect();
            let pred: Vec<Vec<EntitySpan>> = load_tagged(&a.pred, None)?
                .iter()
                .map(|s| decode_spans(&s.labels))
                .collect();
            let mut r = evaluate_ner(&gold, &pred, a.mode.into())
                .map_err(CliError::format)?
                .report;
            r.title = "score ner".into();
            r
        }
    };
    emit(out, cfg, &report)
}

fn line_counts_match(cand: usize, reference: usize) -> Result<(), CliError> {
    if cand != reference {
        return Err(CliError::Format(format!(
            "candidate file has {cand} lines, reference has {reference}"
        )));
    }
    Ok(())
}

fn simval_cmd(out: &mut Outcome, cfg: &RunConfig, a: &SimvalArgs) -> Result<(), CliError> {
    let mk = |n, big_n, m| SegCounts::new(n, big_n, m).map_err(|e| CliError::Usage(e.to_string()));
    let base = mk(a.base_n, a.base_big_n, a.base_m)?;
    let improved = mk(a.improved_n, a.improved_big_n, a.improved_m)?;
    let result = simval(base, improved).map_err(|e| CliError::Usage(e.to_string()))?;
    let text = match cfg.format {
        OutputFormat::Table => result.summary() + "\n",
        OutputFormat::Json => {
            let mut r = EvalReport::new("simval");
            r.count("baseline_n", base.correct as u64)
                .count("baseline_N", base.output as u64)
                .count("baseline_M", base.gold as u64)
                .count("improved_n", improved.correct as u64)
                .count("improved_N", improved.output as u64)
                .count("improved_M", improved.gold as u64)
                .score("baseline_precision", result.ratios[0])
                .score("baseline_recall", result.ratios[1])
                .score("improved_precision", result.ratios[2])
                .score("improved_recall", result.ratios[3])
                .meta("summary", result.summary());
            for m in &result.mismatches {
                r.flag(&format!("mismatch: {m}"));
            }
            render_seeded(&r, cfg)
        }
    };
    if let Some(p) = &cfg.report {
        write_file(p, &text)?;
    }
    out.stdout.push_str(&text);
    if result.ok() {
        Ok(())
    } else {
        Err(CliError::SimvalMismatch(format!(
            "simval mismatch: {}",
            result.mismatches.join("; ")
        )))
    }
}

/// Parses `args` (program name first) and runs the command, writing to the
/// given streams. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return crate::config::EXIT_OK;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("usage error");
            let _ = writeln!(stderr, "{first}");
            return crate::config::EXIT_USAGE;
        }
    };
    let mut out = Outcome::default();
    let result = execute(cli, &mut out);
    let _ = stdout.write_all(out.stdout.as_bytes());
    match result {
        Ok(()) => crate::config::EXIT_OK,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            let _ = writeln!(stderr, "error: {line}");
            e.exit_code()
        }
    }
}
