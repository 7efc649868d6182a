//! Timing harness: four task families, ten timed runs each, over the fixture
//! corpora.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nlpkit::classify::{build_index, classification_counts, classify_doc, tokenize, train_centroids, vectorize};
use nlpkit::corpus::{decode_spans, encode_bmes, load_labeled, load_segmented, load_tagged};
use nlpkit::dcnn::TrainConfig;
use nlpkit::hmm_seg::{segment_text, train_hmm};
use nlpkit::metrics::{
    bleu, count_segments, micro_prf, rouge_l, seg_precision_recall, BleuParams, RougeParams, SegCounts,
};
use nlpkit::ner::{evaluate_ner, predict_labels, train_ner, NerEvalMode, NerTrainConfig};
use nlpkit::seqmodel::{train_sequence_model, ModelKind, TrainParams};
use serde_json::json;

use crate::config::CliError;
use crate::fixtures;

pub const RUNS: usize = 10;
pub const FAMILIES: [&str; 4] = [
    "sentence analysis",
    "information extraction",
    "classification",
    "translation scoring",
];

/// Epochs for the NER model trained once before the extraction family is
/// timed; the timed task is prediction plus evaluation.
const BENCH_NER_EPOCHS: usize = 10;
const BENCH_TAGGER_EPOCHS: usize = 20;
/// Seed of every model the harness trains.
const BENCH_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyReport {
    pub name: String,
    pub seconds: Vec<f64>,
    pub mean: f64,
    /// CRC32 of the task output; identical across runs.
    pub digest: String,
    /// Task-quality figure of the output, e.g. segmentation F1.
    pub quality: (String, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub fixtures: PathBuf,
    pub families: Vec<FamilyReport>,
}

/// Output text plus a named quality figure.
type TaskOutput = (String, (String, f64));

fn time_family(name: &str, mut task: impl FnMut() -> Result<TaskOutput, CliError>) -> Result<FamilyReport, CliError> {
    let mut seconds = Vec::with_capacity(RUNS);
    let mut first: Option<TaskOutput> = None;
    for run in 0..RUNS {
        let start = Instant::now();
        let out = task()?;
        seconds.push(start.elapsed().as_secs_f64());
        match &first {
            None => first = Some(out),
            Some(f) if *f != out => {
                return Err(CliError::Other(format!(
                    "{name}: output of run {} differs from run 1",
                    run + 1
                )));
            }
            Some(_) => {}
        }
    }
    let (text, quality) = first.expect("at least one run");
    Ok(FamilyReport {
        name: name.to_owned(),
        mean: seconds.iter().sum::<f64>() / RUNS as f64,
        seconds,
        digest: format!("{:08x}", crc32fast::hash(text.as_bytes())),
        quality,
    })
}

fn need(dir: &Path, name: &str) -> Result<PathBuf, CliError> {
    let p = dir.join(name);
    if p.is_file() {
        Ok(p)
    } else {
        Err(CliError::io(&p, "missing fixture"))
    }
}

pub fn run_bench(dir: &Path) -> Result<BenchReport, CliError> {
    let paths: Vec<PathBuf> = [
        fixtures::SEG_TRAIN,
        fixtures::SEG_TEST,
        fixtures::POS_TRAIN,
        fixtures::POS_TEST,
        fixtures::NER_TRAIN,
        fixtures::NER_TEST,
        fixtures::DOCS_TRAIN,
        fixtures::DOCS_TEST,
        fixtures::MT_CAND,
        fixtures::MT_REF,
    ]
    .iter()
    .map(|n| need(dir, n))
    .collect::<Result<_, _>>()?;
    let [seg_train, seg_test, pos_train, pos_test, ner_train, ner_test, docs_train, docs_test, mt_cand, mt_ref] =
        &paths[..]
    else {
        unreachable!()
    };

    // models are prepared once; only the task call is timed
    let seg_train = load_segmented(seg_train)?;
    let tagged: Vec<_> = seg_train.iter().map(encode_bmes).collect::<Result<_, _>>()?;
    let hmm = train_hmm(&tagged, 1.0).map_err(CliError::other)?;
    let seg_test = load_segmented(seg_test)?;
    let pos_train = load_tagged(pos_train, None)?;
    let pos_test = load_tagged(pos_test, None)?;
    let tagger_params = TrainParams {
        epochs: BENCH_TAGGER_EPOCHS,
        seed: BENCH_SEED,
        ..TrainParams::default()
    };
    let (tagger, _) = train_sequence_model(ModelKind::Crf, &pos_train, &tagger_params).map_err(CliError::other)?;
    let ner_cfg = NerTrainConfig {
        train: TrainConfig {
            epochs: BENCH_NER_EPOCHS,
            seed: BENCH_SEED,
            ..TrainConfig::default()
        },
        ..NerTrainConfig::default()
    };
    let (ner, _) = train_ner(&load_tagged(ner_train, None)?, &ner_cfg).map_err(CliError::other)?;
    let ner_test = load_tagged(ner_test, None)?;
    let docs_train = load_labeled(docs_train, false)?;
    let docs_test = load_labeled(docs_test, false)?;
    let read = |p: &PathBuf| std::fs::read_to_string(p).map_err(|e| CliError::io(p, e));
    let cand_text = read(mt_cand)?;
    let ref_text = read(mt_ref)?;

    let sentence_analysis = || {
        let mut out = String::new();
        let mut counts = SegCounts::default();
        for gold in &seg_test {
            let seg = segment_text(&hmm, &gold.concat()).map_err(CliError::other)?;
            counts = counts.merge(count_segments(gold, &seg));
            let _ = writeln!(out, "{seg}");
        }
        let mut correct = 0usize;
        let mut total = 0usize;
        for s in &pos_test {
            let labels = tagger.predict(&s.units);
            correct += labels.iter().zip(&s.labels).filter(|(a, b)| a == b).count();
            total += labels.len();
            let _ = writeln!(out, "{}", labels.join(" "));
        }
        let (p, r) = seg_precision_recall(counts)?;
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        let _ = writeln!(out, "tag accuracy {correct}/{total}");
        Ok((out, ("segmentation_f1".to_owned(), f)))
    };

    let information_extraction = || {
        let mut out = String::new();
        let (mut gold, mut pred) = (Vec::new(), Vec::new());
        for s in &ner_test {
            let labels = predict_labels(&ner, &s.units);
            let _ = writeln!(out, "{}", labels.join(" "));
            gold.push(decode_spans(&s.labels));
            pred.push(decode_spans(&labels));
        }
        let ev = evaluate_ner(&gold, &pred, NerEvalMode::Strict).map_err(CliError::other)?;
        let f1 = micro_prf(&ev.counts)?.prf.f1;
        Ok((out, ("ner_micro_f1".to_owned(), f1)))
    };

    let classification = || {
        let train_tokens: Vec<Vec<String>> = docs_train.iter().map(|d| tokenize(&d.text)).collect();
        let index = build_index(&train_tokens)?;
        let examples: Vec<_> = docs_train
            .iter()
            .zip(&train_tokens)
            .map(|(d, t)| (vectorize(&index, t), d.label.clone().unwrap_or_default()))
            .collect();
        let model = train_centroids(&examples)?;
        let mut out = String::new();
        let (mut gold, mut pred) = (Vec::new(), Vec::new());
        for d in &docs_test {
            let label = classify_doc(&model, &index, &tokenize(&d.text));
            let _ = writeln!(out, "{}\t{label}", d.id);
            gold.push(d.label.clone().unwrap_or_default());
            pred.push(label.to_owned());
        }
        let acc = micro_prf(&classification_counts(&gold, &pred)?)?.prf.precision;
        Ok((out, ("accuracy".to_owned(), acc)))
    };

    let translation_scoring = || {
        let params = BleuParams::default();
        let mut out = String::new();
        let mut total = 0.0;
        let mut n = 0usize;
        for (c, r) in cand_text.lines().zip(ref_text.lines()) {
            let c: Vec<&str> = c.split_whitespace().collect();
            let r: Vec<&str> = r.split_whitespace().collect();
            let b = bleu(&c, std::slice::from_ref(&r), &params)?;
            let rl = rouge_l(&c, &r, RougeParams::default())?;
            let _ = writeln!(
                out,
                "{} {}",
                nlpkit::metrics::fmt_f64(b.score),
                nlpkit::metrics::fmt_f64(rl.score)
            );
            total += b.score;
            n += 1;
        }
        let mean = if n == 0 { 0.0 } else { total / n as f64 };
        Ok((out, ("mean_bleu".to_owned(), mean)))
    };

    let families = vec![
        time_family(FAMILIES[0], sentence_analysis)?,
        time_family(FAMILIES[1], information_extraction)?,
        time_family(FAMILIES[2], classification)?,
        time_family(FAMILIES[3], translation_scoring)?,
    ];
    Ok(BenchReport {
        fixtures: dir.to_owned(),
        families,
    })
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        let families: Vec<_> = self
            .families
            .iter()
            .map(|f| {
                json!({
                    "name": f.name,
                    "runs": f.seconds.iter().enumerate()
                        .map(|(i, s)| json!({"run": i + 1, "seconds": s}))
                        .collect::<Vec<_>>(),
                    "mean_seconds": f.mean,
                    "output_digest": f.digest,
                    "quality": {f.quality.0.clone(): f.quality.1},
                })
            })
            .collect();
        let v = json!({
            "families": families,
            "runs_per_family": RUNS,
            "seed": BENCH_SEED,
            "data": "synthetic stand-in fixtures",
            "fixtures": self.fixtures.display().to_string(),
        });
        serde_json::to_string_pretty(&v).expect("serializable") + "\n"
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("bench (synthetic stand-in fixtures, seed {BENCH_SEED})\n");
        let _ = writeln!(out, "{:<24} {:>5} {:>12}", "family", "run", "seconds");
        for f in &self.families {
            for (i, s) in f.seconds.iter().enumerate() {
                let _ = writeln!(out, "{:<24} {:>5} {:>12.6}", f.name, i + 1, s);
            }
            let _ = writeln!(out, "{:<24} {:>5} {:>12.6}", f.name, "mean", f.mean);
            let _ = writeln!(
                out,
                "{:<24} {:>5} {} = {:.4}, digest {}",
                f.name, "out", f.quality.0, f.quality.1, f.digest
            );
        }
        out
    }
}
