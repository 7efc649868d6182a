//! Windowed convolutional named-entity tagger with an optional CRF decoding
//! layer, and strict/relaxed span evaluation.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{bio_parts, decode_spans, EntitySpan, SchemeKind, TagScheme, TaggedSentence};
use crate::dcnn::{forward, sgd_epoch, Activation, DcnnError, Layer, Network, Tensor, TrainConfig};
use crate::metrics::{ClassCounts, EvalReport, MetricsError};
use crate::seqmodel::{crf_decode_from_scores, softmax};

pub const PAD: &str = "<PAD>";
pub const UNK: &str = "<UNK>";

/// Probability floor applied before taking logs of network outputs.
const EMISSION_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum NerError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("label {0:?} is not a BIO label")]
    NotBio(String),
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error(transparent)]
    Dcnn(#[from] DcnnError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("span {0:?} is empty or reversed")]
    InvalidSpan(EntitySpan),
    #[error("gold spans {0:?} and {1:?} overlap")]
    OverlappingGold(EntitySpan, EntitySpan),
    #[error("gold has {gold} sentences, prediction has {pred}")]
    SentenceCountMismatch { gold: usize, pred: usize },
}

pub type Result<T> = std::result::Result<T, NerError>;

/// Shape of the tagging network. Each prediction sees `window` units
/// centred on the target position.
#[derive(Debug, Clone, PartialEq)]
pub struct NerArch {
    pub window: usize,
    pub embed_dim: usize,
    pub kernel: usize,
    pub conv_channels: usize,
    pub conv_activation: Activation,
    pub pool_window: usize,
    pub use_crf: bool,
}

impl Default for NerArch {
    fn default() -> Self {
        NerArch {
            window: 5,
            embed_dim: 16,
            kernel: 3,
            conv_channels: 24,
            conv_activation: Activation::Relu,
            pool_window: 2,
            use_crf: false,
        }
    }
}

impl NerArch {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(NerError::Architecture(m.into()));
        if self.window == 0 || self.window.is_multiple_of(2) {
            return bad("window must be a positive odd number");
        }
        if self.embed_dim == 0 || self.conv_channels == 0 {
            return bad("embedding and channel widths must be positive");
        }
        if self.kernel == 0 || self.kernel.is_multiple_of(2) {
            return bad("kernel must be a positive odd number");
        }
        if self.pool_window == 0 || self.pool_window > self.window {
            return bad("pool window must lie in 1..=window");
        }
        Ok(())
    }

    fn build(&self, vocab: usize, labels: usize, rng: &mut ChaCha8Rng, scale: f64) -> Result<Network> {
        self.validate()?;
        let pooled = self.window - self.pool_window + 1;
        let layers = vec![
            Layer::embedding(vocab, self.embed_dim, rng, scale),
            Layer::conv1d(
                self.embed_dim,
                self.conv_channels,
                self.kernel,
                1,
                self.kernel / 2,
                rng,
                scale,
            ),
            Layer::Activation(self.conv_activation),
            Layer::MaxPool1d {
                window: self.pool_window,
                stride: 1,
            },
            Layer::dense(pooled * self.conv_channels, labels, rng, scale),
            Layer::Activation(Activation::Sigmoid),
        ];
        Ok(Network::new(vec![self.window], layers)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NerModel {
    window: usize,
    scheme: TagScheme,
    vocab: Vec<String>,
    net: Network,
    transitions: Option<Vec<Vec<f64>>>,
}

impl NerModel {
    /// `vocab` starts with [`PAD`] and [`UNK`]; the remaining entries are
    /// sorted and unique.
    pub fn from_parts(
        window: usize,
        scheme: TagScheme,
        vocab: Vec<String>,
        net: Network,
        transitions: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if scheme.kind != SchemeKind::Bio {
            return Err(NerError::Architecture("tag scheme must be BIO".into()));
        }
        if window == 0 || window.is_multiple_of(2) || net.input_shape() != [window] {
            return Err(NerError::Architecture(format!(
                "window {window} does not match network input {:?}",
                net.input_shape()
            )));
        }
        let k = scheme.labels().len();
        if net.output_shape() != [k] {
            return Err(NerError::Architecture(format!(
                "network output {:?} does not match {k} labels",
                net.output_shape()
            )));
        }
        if vocab.len() < 2 || vocab[0] != PAD || vocab[1] != UNK || !vocab[2..].windows(2).all(|w| w[0] < w[1]) {
            return Err(NerError::Architecture("malformed vocabulary".into()));
        }
        match net.layers().first() {
            Some(Layer::Embedding { table }) if table.shape()[0] == vocab.len() => {}
            _ => return Err(NerError::Architecture("first layer must embed the vocabulary".into())),
        }
        if let Some(t) = &transitions {
            if t.len() != k || t.iter().any(|r| r.len() != k) {
                return Err(NerError::Architecture("transition matrix shape".into()));
            }
        }
        Ok(NerModel {
            window,
            scheme,
            vocab,
            net,
            transitions,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn scheme(&self) -> &TagScheme {
        &self.scheme
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn net(&self) -> &Network {
        &self.net
    }

    pub fn transitions(&self) -> Option<&[Vec<f64>]> {
        self.transitions.as_deref()
    }

    pub fn use_crf(&self) -> bool {
        self.transitions.is_some()
    }

    fn unit_id(&self, unit: &str) -> usize {
        self.vocab[2..]
            .binary_search_by(|v| v.as_str().cmp(unit))
            .map_or(1, |i| i + 2)
    }

    /// Embedding ids of the window centred on `pos`, padded at the edges.
    pub fn window_input(&self, units: &[String], pos: usize) -> Tensor {
        let half = self.window / 2;
        let ids = (0..self.window)
            .map(|j| {
                let i = (pos + j).checked_sub(half).filter(|&i| i < units.len());
                i.map_or(0, |i| self.unit_id(&units[i])) as f64
            })
            .collect();
        Tensor::from_vec(ids)
    }

    /// Network output per position, one row per unit.
    pub fn emissions(&self, units: &[String]) -> Vec<Vec<f64>> {
        (0..units.len())
            .map(|pos| {
                let (y, _) = forward(&self.net, &self.window_input(units, pos)).expect("model shapes validated");
                y.data().to_vec()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NerTrainConfig {
    pub train: TrainConfig,
    pub arch: NerArch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NerTrainReport {
    /// Mean per-example cost of each epoch.
    pub epoch_costs: Vec<f64>,
}

/// Log label-bigram probabilities with add-one smoothing; moves into `I-t`
/// from anything other than `B-t` or `I-t` are forbidden.
pub fn bio_transitions(scheme: &TagScheme, corpus: &[TaggedSentence]) -> Vec<Vec<f64>> {
    let labels = scheme.labels();
    let k = labels.len();
    let mut counts = vec![vec![0u64; k]; k];
    for s in corpus {
        let ids: Vec<Option<usize>> = s.labels.iter().map(|l| scheme.index_of(l)).collect();
        for w in ids.windows(2) {
            if let [Some(a), Some(b)] = w {
                counts[*a][*b] += 1;
            }
        }
    }
    (0..k)
        .map(|i| {
            let total: u64 = counts[i].iter().sum();
            (0..k)
                .map(|j| {
                    if bio_allowed(&labels[i], &labels[j]) {
                        ((counts[i][j] as f64 + 1.0) / (total as f64 + k as f64)).ln()
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect()
        })
        .collect()
}

/// Whether `next` may follow `prev` in a well-formed BIO sequence.
pub fn bio_allowed(prev: &str, next: &str) -> bool {
    match bio_parts(next) {
        Some(('I', ty)) => matches!(bio_parts(prev), Some((_, t)) if t == ty),
        _ => true,
    }
}

pub fn train_ner(corpus: &[TaggedSentence], config: &NerTrainConfig) -> Result<(NerModel, NerTrainReport)> {
    let corpus: Vec<&TaggedSentence> = corpus.iter().filter(|s| !s.is_empty()).collect();
    if corpus.is_empty() {
        return Err(NerError::EmptyCorpus);
    }
    config.train.validate()?;
    config.arch.validate()?;
    for s in &corpus {
        if let Some(l) = s.labels.iter().find(|l| *l != "O" && bio_parts(l).is_none()) {
            return Err(NerError::NotBio(l.clone()));
        }
    }
    let owned: Vec<TaggedSentence> = corpus.iter().map(|s| (*s).clone()).collect();
    let scheme = TagScheme::bio_from_corpus(&owned);
    let units: BTreeSet<&str> = corpus.iter().flat_map(|s| s.units.iter().map(String::as_str)).collect();
    let vocab: Vec<String> = [PAD, UNK].into_iter().chain(units).map(str::to_owned).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.train.seed);
    let k = scheme.labels().len();
    let net = config.arch.build(vocab.len(), k, &mut rng, config.train.init_scale)?;
    let transitions = config.arch.use_crf.then(|| bio_transitions(&scheme, &owned));
    let mut model = NerModel::from_parts(config.arch.window, scheme, vocab, net, transitions)?;

    let mut examples = Vec::new();
    for s in &corpus {
        for (pos, label) in s.labels.iter().enumerate() {
            let mut target = vec![0.0; k];
            target[model.scheme.index_of(label).expect("scheme built from corpus")] = 1.0;
            examples.push((model.window_input(&s.units, pos), Tensor::from_vec(target)));
        }
    }
    let mut epoch_costs = Vec::with_capacity(config.train.epochs);
    for _ in 0..config.train.epochs {
        examples.shuffle(&mut rng);
        epoch_costs.push(sgd_epoch(&mut model.net, &examples, config.train.learning_rate)?);
    }
    Ok((model, NerTrainReport { epoch_costs }))
}

/// BIO labels for `units`. Without a CRF layer each position takes the
/// argmax of its softmaxed emissions, ties to the lowest label index.
pub fn predict_labels(model: &NerModel, units: &[String]) -> Vec<String> {
    if units.is_empty() {
        return Vec::new();
    }
    let emissions = model.emissions(units);
    let path: Vec<usize> = match &model.transitions {
        Some(tr) => {
            let scores: Vec<Vec<f64>> = emissions
                .iter()
                .map(|row| row.iter().map(|p| p.max(EMISSION_FLOOR).ln()).collect())
                .collect();
            crf_decode_from_scores(&scores, tr).expect("shapes validated").0
        }
        None => emissions.iter().map(|row| argmax(&softmax(row))).collect(),
    };
    path.into_iter().map(|i| model.scheme.labels()[i].clone()).collect()
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

pub fn predict_spans(model: &NerModel, units: &[String]) -> Vec<EntitySpan> {
    decode_spans(&predict_labels(model, units))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NerEvalMode {
    Strict,
    Relaxed,
}

impl NerEvalMode {
    pub fn name(self) -> &'static str {
        match self {
            NerEvalMode::Strict => "strict",
            NerEvalMode::Relaxed => "relaxed",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "strict" => Some(NerEvalMode::Strict),
            "relaxed" => Some(NerEvalMode::Relaxed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NerEvaluation {
    pub counts: ClassCounts,
    pub report: EvalReport,
}

/// Per-sentence one-to-one matching of predicted against gold spans.
///
/// Exact matches are paired first. In relaxed mode the remaining
/// predictions are then scanned in sentence order, each taking the first
/// unmatched gold span that either overlaps it with the same type or has the
/// same bounds with a different type. A relaxed match counts as a true
/// positive of the gold type.
pub fn match_spans(
    gold: &[EntitySpan],
    pred: &[EntitySpan],
    mode: NerEvalMode,
    counts: &mut ClassCounts,
) -> Result<()> {
    for s in gold.iter().chain(pred) {
        if s.start >= s.end {
            return Err(NerError::InvalidSpan(s.clone()));
        }
    }
    let mut gold: Vec<&EntitySpan> = gold.iter().collect();
    let mut pred: Vec<&EntitySpan> = pred.iter().collect();
    gold.sort();
    pred.sort();
    for w in gold.windows(2) {
        if w[0].overlaps(w[1]) {
            return Err(NerError::OverlappingGold(w[0].clone(), w[1].clone()));
        }
    }
    let mut gold_used = vec![false; gold.len()];
    let mut pred_used = vec![false; pred.len()];
    for (pi, p) in pred.iter().enumerate() {
        if let Some(gi) = (0..gold.len()).find(|&g| !gold_used[g] && gold[g] == *p) {
            gold_used[gi] = true;
            pred_used[pi] = true;
            counts.entry(&gold[gi].kind).tp += 1;
        }
    }
    if mode == NerEvalMode::Relaxed {
        for (pi, p) in pred.iter().enumerate() {
            if pred_used[pi] {
                continue;
            }
            let hit = (0..gold.len()).find(|&g| {
                !gold_used[g]
                    && ((gold[g].kind == p.kind && gold[g].overlaps(p))
                        || (gold[g].kind != p.kind && gold[g].same_bounds(p)))
            });
            if let Some(gi) = hit {
                gold_used[gi] = true;
                pred_used[pi] = true;
                counts.entry(&gold[gi].kind).tp += 1;
            }
        }
    }
    for (g, used) in gold.iter().zip(&gold_used) {
        if !used {
            counts.entry(&g.kind).fn_ += 1;
        }
    }
    for (p, used) in pred.iter().zip(&pred_used) {
        if !used {
            counts.entry(&p.kind).fp += 1;
        }
    }
    Ok(())
}

pub fn evaluate_ner(gold: &[Vec<EntitySpan>], pred: &[Vec<EntitySpan>], mode: NerEvalMode) -> Result<NerEvaluation> {
    if gold.len() != pred.len() {
        return Err(NerError::SentenceCountMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let mut counts = ClassCounts::default();
    for (g, p) in gold.iter().zip(pred) {
        match_spans(g, p, mode, &mut counts)?;
    }
    let mut report = EvalReport::new("ner");
    report
        .meta("mode", mode.name())
        .count("sentences", gold.len() as u64)
        .count("gold_spans", gold.iter().map(Vec::len).sum::<usize>() as u64)
        .count("pred_spans", pred.iter().map(Vec::len).sum::<usize>() as u64);
    if counts.classes.is_empty() {
        report.flag("no_entities");
    } else {
        report.add_class_counts(&counts)?;
    }
    Ok(NerEvaluation { counts, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::encode_spans;
    use crate::metrics::micro_prf;
    use proptest::prelude::*;

    fn sent(units: &str, labels: &str) -> TaggedSentence {
        TaggedSentence::new(
            units.split_whitespace().map(String::from).collect(),
            labels.split_whitespace().map(String::from).collect(),
        )
        .unwrap()
    }

    fn small_config(epochs: usize) -> NerTrainConfig {
        NerTrainConfig {
            train: TrainConfig {
                epochs,
                ..TrainConfig::default()
            },
            arch: NerArch {
                embed_dim: 8,
                conv_channels: 8,
                ..NerArch::default()
            },
        }
    }

    #[test]
    fn overfit_cost_decreases() {
        let s = sent("mr smith met ms jones in paris", "O B-PER O O B-PER O B-LOC");
        let corpus = vec![s.clone(); 4];
        let (model, report) = train_ner(&corpus, &small_config(5)).unwrap();
        let c = &report.epoch_costs;
        assert!(c.windows(2).all(|w| w[1] < w[0]), "{c:?}");
        let (_, long) = train_ner(&corpus, &small_config(60)).unwrap();
        assert!(long.epoch_costs.last().unwrap() < &c[0]);
        assert_eq!(predict_labels(&model, &s.units).len(), s.len());
    }

    #[test]
    fn memorizes_training_sentence() {
        let s = sent("mr smith met ms jones in paris", "O B-PER O O B-PER O B-LOC");
        let (model, _) = train_ner(std::slice::from_ref(&s), &small_config(150)).unwrap();
        assert_eq!(predict_labels(&model, &s.units), s.labels);
    }

    #[test]
    fn single_label_corpus_predicts_o() {
        let corpus = vec![sent("a b c", "O O O"), sent("d e", "O O")];
        let (model, _) = train_ner(&corpus, &small_config(2)).unwrap();
        assert_eq!(model.scheme().labels(), ["O"]);
        let units: Vec<String> = ["x", "a", "q"].iter().map(|s| s.to_string()).collect();
        assert_eq!(predict_labels(&model, &units), ["O", "O", "O"]);
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = vec![sent("mr smith met ms jones", "O B-PER O O B-PER")];
        let (a, ra) = train_ner(&corpus, &small_config(3)).unwrap();
        let (b, rb) = train_ner(&corpus, &small_config(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(train_ner(&[], &small_config(1)), Err(NerError::EmptyCorpus));
        let bad = vec![sent("a b", "O X")];
        assert_eq!(train_ner(&bad, &small_config(1)), Err(NerError::NotBio("X".into())));
        let mut cfg = small_config(1);
        cfg.arch.window = 4;
        assert!(matches!(
            train_ner(&[sent("a", "O")], &cfg),
            Err(NerError::Architecture(_))
        ));
    }

    fn zero_model(types: &[&str], use_crf: bool) -> NerModel {
        let scheme = TagScheme::bio(types);
        let k = scheme.labels().len();
        let net = Network::new(
            vec![1],
            vec![
                Layer::Embedding {
                    table: Tensor::zeros(vec![2, 1]),
                },
                Layer::Dense {
                    weights: Tensor::zeros(vec![k, 1]),
                    bias: Tensor::zeros(vec![k]),
                },
                Layer::Activation(Activation::Sigmoid),
            ],
        )
        .unwrap();
        let tr = use_crf.then(|| bio_transitions(&scheme, &[]));
        NerModel::from_parts(1, scheme, vec![PAD.into(), UNK.into()], net, tr).unwrap()
    }

    #[test]
    fn equal_emissions_tie_to_lowest_index() {
        let m = zero_model(&["LOC", "PER"], false);
        let units: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        assert_eq!(predict_labels(&m, &units), ["O", "O", "O"]);
    }

    #[test]
    fn transitions_forbid_bio_violations() {
        let scheme = TagScheme::bio(&["LOC", "PER"]);
        let tr = bio_transitions(&scheme, &[]);
        let labels = scheme.labels();
        for (i, a) in labels.iter().enumerate() {
            for (j, b) in labels.iter().enumerate() {
                let forbidden = b.starts_with("I-") && !(a.ends_with(&b[1..]) && a != "O");
                assert_eq!(tr[i][j] == f64::NEG_INFINITY, forbidden, "{a} -> {b}");
            }
            let mass: f64 = tr[i].iter().filter(|v| v.is_finite()).map(|v| v.exp()).sum();
            assert!(mass <= 1.0 + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn crf_layer_never_emits_forbidden_bigrams(bias in prop::collection::vec(-3.0f64..3.0, 5), n in 1usize..7) {
            let scheme = TagScheme::bio(&["LOC", "PER"]);
            let mut m = zero_model(&["LOC", "PER"], true);
            // bias the dense layer so I- labels look attractive
            let net = Network::new(vec![1], vec![
                Layer::Embedding { table: Tensor::zeros(vec![2, 1]) },
                Layer::Dense { weights: Tensor::zeros(vec![5, 1]), bias: Tensor::from_vec(bias) },
                Layer::Activation(Activation::Sigmoid),
            ]).unwrap();
            m = NerModel::from_parts(1, scheme, m.vocab.clone(), net, m.transitions.clone()).unwrap();
            let units: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
            let labels = predict_labels(&m, &units);
            prop_assert_eq!(labels.len(), n);
            for w in labels.windows(2) {
                prop_assert!(bio_allowed(&w[0], &w[1]), "{:?}", labels);
            }
        }
    }

    fn sp(start: usize, end: usize, kind: &str) -> EntitySpan {
        EntitySpan::new(start, end, kind)
    }

    #[test]
    fn identical_spans_score_one() {
        let gold = vec![vec![sp(0, 2, "PER"), sp(3, 4, "LOC")]];
        let ev = evaluate_ner(&gold, &gold, NerEvalMode::Strict).unwrap();
        for (_, prf) in ev.counts.per_class() {
            assert_eq!((prf.precision, prf.recall, prf.f1), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn shifted_span() {
        let gold = vec![vec![sp(0, 2, "PER")]];
        let pred = vec![vec![sp(1, 3, "PER")]];
        let s = evaluate_ner(&gold, &pred, NerEvalMode::Strict).unwrap().counts;
        let c = s.classes["PER"];
        assert_eq!((c.tp, c.fp, c.fn_), (0, 1, 1));
        let r = evaluate_ner(&gold, &pred, NerEvalMode::Relaxed).unwrap().counts;
        let c = r.classes["PER"];
        assert_eq!((c.tp, c.fp, c.fn_), (1, 0, 0));
    }

    #[test]
    fn wrong_type() {
        let gold = vec![vec![sp(0, 2, "PER")]];
        let pred = vec![vec![sp(0, 2, "LOC")]];
        let s = evaluate_ner(&gold, &pred, NerEvalMode::Strict).unwrap().counts;
        assert_eq!(s.classes["PER"].fn_, 1);
        assert_eq!(s.classes["LOC"].fp, 1);
        assert_eq!(s.pooled().tp, 0);
        let r = evaluate_ner(&gold, &pred, NerEvalMode::Relaxed).unwrap().counts;
        assert_eq!(r.pooled().tp, 1);
        assert_eq!(r.pooled().fp + r.pooled().fn_, 0);
    }

    #[test]
    fn exact_match_wins_over_earlier_overlap() {
        // the first prediction overlaps the second gold span; the second
        // prediction matches it exactly and must keep it
        let gold = vec![vec![sp(0, 1, "LOC"), sp(2, 5, "PER")]];
        let pred = vec![vec![sp(1, 3, "PER"), sp(2, 5, "PER")]];
        let r = evaluate_ner(&gold, &pred, NerEvalMode::Relaxed).unwrap().counts;
        assert_eq!(r.classes["PER"].tp, 1);
        assert_eq!(r.classes["PER"].fp, 1);
        assert_eq!(r.classes["LOC"].fn_, 1);
    }

    #[test]
    fn overlapping_gold_rejected() {
        let gold = vec![vec![sp(0, 3, "PER"), sp(2, 4, "LOC")]];
        assert!(matches!(
            evaluate_ner(&gold, &[vec![]], NerEvalMode::Strict),
            Err(NerError::OverlappingGold(..))
        ));
        assert!(matches!(
            evaluate_ner(&gold, &[], NerEvalMode::Strict),
            Err(NerError::SentenceCountMismatch { .. })
        ));
    }

    #[test]
    fn report_carries_micro_scores() {
        let gold = vec![vec![sp(0, 2, "PER")], vec![sp(1, 2, "LOC")]];
        let pred = vec![vec![sp(0, 2, "PER")], vec![sp(0, 1, "LOC")]];
        let ev = evaluate_ner(&gold, &pred, NerEvalMode::Strict).unwrap();
        let mi = micro_prf(&ev.counts).unwrap();
        assert_eq!(ev.report.scores["micro_f1"], mi.prf.f1);
        assert_eq!(mi.prf.precision, 0.5);
        let empty = evaluate_ner(&[vec![]], &[vec![]], NerEvalMode::Strict).unwrap();
        assert!(empty.report.flags.contains("no_entities"));
    }

    fn arb_layout() -> impl Strategy<Value = Vec<EntitySpan>> {
        prop::collection::vec((0usize..3, 1usize..3, 0usize..2), 0..5).prop_map(|parts| {
            let mut pos = 0;
            parts
                .into_iter()
                .map(|(gap, len, t)| {
                    let s = sp(pos + gap, pos + gap + len, ["LOC", "PER"][t]);
                    pos = s.end;
                    s
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn relaxed_dominates_strict(gold in arb_layout(), pred in arb_layout()) {
            let g = vec![gold.clone()];
            let p = vec![pred.clone()];
            let s = evaluate_ner(&g, &p, NerEvalMode::Strict).unwrap().counts;
            let r = evaluate_ner(&g, &p, NerEvalMode::Relaxed).unwrap().counts;
            prop_assert!(r.pooled().tp >= s.pooled().tp);
            for (ty, c) in &s.classes {
                let ng = gold.iter().filter(|x| &x.kind == ty).count() as u64;
                let np = pred.iter().filter(|x| &x.kind == ty).count() as u64;
                prop_assert_eq!(c.tp + c.fn_, ng);
                prop_assert_eq!(c.tp + c.fp, np);
            }
            let rp = r.pooled();
            prop_assert_eq!(rp.tp + rp.fn_, gold.len() as u64);
            prop_assert_eq!(rp.tp + rp.fp, pred.len() as u64);
        }

        #[test]
        fn spans_round_trip_through_labels(gold in arb_layout()) {
            let len = gold.last().map_or(0, |s| s.end) + 1;
            prop_assert_eq!(decode_spans(&encode_spans(len, &gold)), gold);
        }
    }
}
