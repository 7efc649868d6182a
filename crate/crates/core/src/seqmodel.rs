//! Log-linear sequence labeling: a per-position maximum-entropy classifier
//! and a first-order linear-chain CRF.
//!
//! Both models read binary indicator features produced by
//! [`FeatureTemplate`]s and keep one weight per (feature, label) pair. The CRF
//! adds a position-independent label transition table. Decoding and the
//! forward/backward recursions are also exposed over raw score matrices so
//! that external emission scores (for example from a convolutional network)
//! can be decoded with the same machinery.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::corpus::TaggedSentence;

#[derive(Debug, Error, PartialEq)]
pub enum SeqModelError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("sentence {0}: units and labels differ in length")]
    LengthMismatch(usize),
    #[error("label {0:?} is not in the model's label set")]
    UnknownLabel(String),
    #[error("non-finite gradient at epoch {epoch}, sentence {sentence}")]
    NonFiniteGradient { epoch: usize, sentence: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid hyperparameter: {0}")]
    InvalidParams(String),
    #[error("unknown feature template {0:?}")]
    UnknownTemplate(String),
}

pub type Result<T> = std::result::Result<T, SeqModelError>;

pub const BOS: &str = "<BOS>";
pub const EOS: &str = "<EOS>";

/// Which unit attributes a feature reads, relative to the current position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureTemplate {
    Unigram(isize),
    Bigram(isize, isize),
}

impl FeatureTemplate {
    /// Stable textual id, e.g. `unigram@-1` or `bigram@0,1`.
    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn parse(s: &str) -> Result<Self> {
        let err = || SeqModelError::UnknownTemplate(s.to_owned());
        let (kind, args) = s.split_once('@').ok_or_else(err)?;
        match kind {
            "unigram" => Ok(FeatureTemplate::Unigram(args.parse().map_err(|_| err())?)),
            "bigram" => {
                let (a, b) = args.split_once(',').ok_or_else(err)?;
                Ok(FeatureTemplate::Bigram(
                    a.parse().map_err(|_| err())?,
                    b.parse().map_err(|_| err())?,
                ))
            }
            _ => Err(err()),
        }
    }

    fn extract<S: AsRef<str>>(&self, units: &[S], pos: usize) -> String {
        let at = |off: isize| -> &str {
            let i = pos as isize + off;
            if i < 0 {
                BOS
            } else if i as usize >= units.len() {
                EOS
            } else {
                units[i as usize].as_ref()
            }
        };
        match *self {
            FeatureTemplate::Unigram(o) => format!("u{o}={}", at(o)),
            FeatureTemplate::Bigram(a, b) => format!("b{a},{b}={}|{}", at(a), at(b)),
        }
    }
}

impl fmt::Display for FeatureTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureTemplate::Unigram(o) => write!(f, "unigram@{o}"),
            FeatureTemplate::Bigram(a, b) => write!(f, "bigram@{a},{b}"),
        }
    }
}

/// Unigrams at offsets -2..=2 and bigrams at (-1,0) and (0,+1).
pub fn default_templates() -> Vec<FeatureTemplate> {
    let mut t: Vec<FeatureTemplate> = (-2..=2).map(FeatureTemplate::Unigram).collect();
    t.push(FeatureTemplate::Bigram(-1, 0));
    t.push(FeatureTemplate::Bigram(0, 1));
    t
}

/// Feature ids active at `pos`. Offsets outside the sentence read the
/// `<BOS>`/`<EOS>` sentinels.
pub fn extract_features<S: AsRef<str>>(units: &[S], pos: usize, templates: &[FeatureTemplate]) -> Vec<String> {
    templates.iter().map(|t| t.extract(units, pos)).collect()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn argmax_low(xs: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..xs.len() {
        if xs[i] > xs[best] {
            best = i;
        }
    }
    best
}

/// Sorted feature inventory shared by both model kinds.
fn feature_index(features: &[String], name: &str) -> Option<usize> {
    features.binary_search_by(|f| f.as_str().cmp(name)).ok()
}

/// Maximum-entropy classifier: `p(y|x) = exp(sum_i w_iy f_i(x)) / Z(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntModel {
    pub labels: Vec<String>,
    pub templates: Vec<FeatureTemplate>,
    /// Sorted, duplicate-free feature ids.
    pub features: Vec<String>,
    /// Row-major `features.len() x labels.len()`.
    pub weights: Vec<f64>,
}

impl MaxEntModel {
    pub fn zeros(labels: Vec<String>, templates: Vec<FeatureTemplate>, features: Vec<String>) -> Self {
        let weights = vec![0.0; features.len() * labels.len()];
        MaxEntModel {
            labels,
            templates,
            features,
            weights,
        }
    }

    pub fn weight(&self, feature: &str, label: usize) -> f64 {
        feature_index(&self.features, feature)
            .map(|f| self.weights[f * self.labels.len() + label])
            .unwrap_or(0.0)
    }

    /// Unnormalized label scores; unknown features contribute nothing.
    pub fn scores<S: AsRef<str>>(&self, features: &[S]) -> Vec<f64> {
        let k = self.labels.len();
        let mut s = vec![0.0; k];
        for f in features {
            if let Some(fi) = feature_index(&self.features, f.as_ref()) {
                for (y, v) in s.iter_mut().enumerate() {
                    *v += self.weights[fi * k + y];
                }
            }
        }
        s
    }

    pub fn predict<S: AsRef<str>>(&self, units: &[S]) -> Vec<String> {
        (0..units.len())
            .map(|i| {
                let s = self.scores(&extract_features(units, i, &self.templates));
                self.labels[argmax_low(&s)].clone()
            })
            .collect()
    }
}

/// Normalized label distribution for a set of active features.
pub fn maxent_distribution<S: AsRef<str>>(model: &MaxEntModel, features: &[S]) -> Vec<f64> {
    softmax(&model.scores(features))
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(scores);
    scores.iter().map(|s| (s - z).exp()).collect()
}

/// Linear-chain CRF with featurized emissions and a label transition table.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    pub labels: Vec<String>,
    pub templates: Vec<FeatureTemplate>,
    pub features: Vec<String>,
    /// Row-major `features.len() x labels.len()`.
    pub emission: Vec<f64>,
    /// `transitions[i][j]` scores label `i` followed by label `j`.
    pub transitions: Vec<Vec<f64>>,
    pub l2: f64,
}

impl CrfModel {
    pub fn zeros(labels: Vec<String>, templates: Vec<FeatureTemplate>, features: Vec<String>) -> Self {
        let k = labels.len();
        CrfModel {
            emission: vec![0.0; features.len() * k],
            transitions: vec![vec![0.0; k]; k],
            labels,
            templates,
            features,
            l2: 0.0,
        }
    }

    /// Position x label emission scores of a unit sequence.
    pub fn emission_scores<S: AsRef<str>>(&self, units: &[S]) -> Vec<Vec<f64>> {
        let k = self.labels.len();
        (0..units.len())
            .map(|i| {
                let mut row = vec![0.0; k];
                for f in extract_features(units, i, &self.templates) {
                    if let Some(fi) = feature_index(&self.features, &f) {
                        for (y, v) in row.iter_mut().enumerate() {
                            *v += self.emission[fi * k + y];
                        }
                    }
                }
                row
            })
            .collect()
    }
}

fn check_shapes(emissions: &[Vec<f64>], transitions: &[Vec<f64>]) -> Result<usize> {
    let k = transitions.len();
    if transitions.iter().any(|r| r.len() != k) {
        return Err(SeqModelError::ShapeMismatch("transition table is not square".into()));
    }
    if let Some((t, row)) = emissions.iter().enumerate().find(|(_, r)| r.len() != k) {
        return Err(SeqModelError::ShapeMismatch(format!(
            "emission row {t} has {} labels, transitions have {k}",
            row.len()
        )));
    }
    Ok(k)
}

/// Sum of emission and transition scores along a label path.
pub fn path_score(emissions: &[Vec<f64>], transitions: &[Vec<f64>], path: &[usize]) -> f64 {
    let mut s = 0.0;
    for (t, &y) in path.iter().enumerate() {
        if t > 0 {
            s += transitions[path[t - 1]][y];
        }
        s += emissions[t][y];
    }
    s
}

/// Forward recursion: log of the sum of `exp(path score)` over all paths.
pub fn log_partition(emissions: &[Vec<f64>], transitions: &[Vec<f64>]) -> f64 {
    forward(emissions, transitions)
        .last()
        .map(|a| log_sum_exp(a))
        .unwrap_or(0.0)
}

fn forward(emissions: &[Vec<f64>], transitions: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = transitions.len();
    let mut alpha: Vec<Vec<f64>> = Vec::with_capacity(emissions.len());
    let mut buf = vec![0.0; k];
    for (t, e) in emissions.iter().enumerate() {
        let row = if t == 0 {
            e.clone()
        } else {
            let prev = &alpha[t - 1];
            (0..k)
                .map(|j| {
                    for i in 0..k {
                        buf[i] = prev[i] + transitions[i][j];
                    }
                    log_sum_exp(&buf) + e[j]
                })
                .collect()
        };
        alpha.push(row);
    }
    alpha
}

fn backward(emissions: &[Vec<f64>], transitions: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = transitions.len();
    let n = emissions.len();
    let mut beta = vec![vec![0.0; k]; n];
    let mut buf = vec![0.0; k];
    for t in (0..n.saturating_sub(1)).rev() {
        for i in 0..k {
            for j in 0..k {
                buf[j] = transitions[i][j] + emissions[t + 1][j] + beta[t + 1][j];
            }
            beta[t][i] = log_sum_exp(&buf);
        }
    }
    beta
}

/// Posterior marginals of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub log_z: f64,
    /// `unary[t][y] = p(y_t = y)`.
    pub unary: Vec<Vec<f64>>,
    /// `pairwise[t][i][j] = p(y_t = i, y_{t+1} = j)`.
    pub pairwise: Vec<Vec<Vec<f64>>>,
}

pub fn forward_backward(emissions: &[Vec<f64>], transitions: &[Vec<f64>]) -> Marginals {
    let k = transitions.len();
    let alpha = forward(emissions, transitions);
    let beta = backward(emissions, transitions);
    let log_z = alpha.last().map(|a| log_sum_exp(a)).unwrap_or(0.0);
    let unary = alpha
        .iter()
        .zip(&beta)
        .map(|(a, b)| (0..k).map(|y| (a[y] + b[y] - log_z).exp()).collect())
        .collect();
    let pairwise = (0..emissions.len().saturating_sub(1))
        .map(|t| {
            (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| (alpha[t][i] + transitions[i][j] + emissions[t + 1][j] + beta[t + 1][j] - log_z).exp())
                        .collect()
                })
                .collect()
        })
        .collect();
    Marginals { log_z, unary, pairwise }
}

/// Max-scoring label path over a score matrix and its score.
///
/// Among equally scoring paths the lexicographically smallest (by label
/// index) is returned: best suffix scores are computed right to left, then
/// labels are chosen left to right taking the lowest index on ties.
pub fn crf_decode_from_scores(emissions: &[Vec<f64>], transitions: &[Vec<f64>]) -> Result<(Vec<usize>, f64)> {
    let k = check_shapes(emissions, transitions)?;
    let n = emissions.len();
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    if k == 0 {
        return Err(SeqModelError::ShapeMismatch("no labels".into()));
    }
    let mut suffix = vec![vec![0.0; k]; n];
    suffix[n - 1] = emissions[n - 1].clone();
    for t in (0..n - 1).rev() {
        for i in 0..k {
            let best = (0..k)
                .map(|j| transitions[i][j] + suffix[t + 1][j])
                .fold(f64::NEG_INFINITY, f64::max);
            suffix[t][i] = emissions[t][i] + best;
        }
    }
    let mut path = Vec::with_capacity(n);
    path.push(argmax_low(&suffix[0]));
    let score = suffix[0][path[0]];
    let mut cand = vec![0.0; k];
    for t in 1..n {
        let prev = path[t - 1];
        for j in 0..k {
            cand[j] = transitions[prev][j] + suffix[t][j];
        }
        path.push(argmax_low(&cand));
    }
    Ok((path, score))
}

pub fn crf_log_partition<S: AsRef<str>>(model: &CrfModel, units: &[S]) -> f64 {
    log_partition(&model.emission_scores(units), &model.transitions)
}

pub fn crf_decode<S: AsRef<str>>(model: &CrfModel, units: &[S]) -> Vec<String> {
    let (path, _) =
        crf_decode_from_scores(&model.emission_scores(units), &model.transitions).expect("model tables are consistent");
    path.into_iter().map(|y| model.labels[y].clone()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    MaxEnt,
    Crf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Recorded for provenance; full-batch training from zero weights draws
    /// no random numbers.
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            learning_rate: 0.5,
            epochs: 50,
            l2: 0.01,
            seed: 0,
        }
    }
}

/// Regularized negative log-likelihood after each epoch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub losses: Vec<f64>,
    /// Step size in effect at the end of training.
    pub final_learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SequenceModel {
    MaxEnt(MaxEntModel),
    Crf(CrfModel),
}

impl SequenceModel {
    pub fn labels(&self) -> &[String] {
        match self {
            SequenceModel::MaxEnt(m) => &m.labels,
            SequenceModel::Crf(m) => &m.labels,
        }
    }

    pub fn predict<S: AsRef<str>>(&self, units: &[S]) -> Vec<String> {
        match self {
            SequenceModel::MaxEnt(m) => m.predict(units),
            SequenceModel::Crf(m) => crf_decode(m, units),
        }
    }
}

/// A sentence with features resolved to indices into the model inventory.
struct Encoded {
    feats: Vec<Vec<usize>>,
    gold: Vec<usize>,
}

fn encode_corpus(
    corpus: &[TaggedSentence],
    labels: &[String],
    templates: &[FeatureTemplate],
    features: &[String],
) -> Result<Vec<Encoded>> {
    corpus
        .iter()
        .enumerate()
        .map(|(si, s)| {
            if s.units.len() != s.labels.len() {
                return Err(SeqModelError::LengthMismatch(si));
            }
            let gold = s
                .labels
                .iter()
                .map(|l| {
                    labels
                        .iter()
                        .position(|x| x == l)
                        .ok_or_else(|| SeqModelError::UnknownLabel(l.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            let feats = (0..s.units.len())
                .map(|i| {
                    extract_features(&s.units, i, templates)
                        .iter()
                        .filter_map(|f| feature_index(features, f))
                        .collect()
                })
                .collect();
            Ok(Encoded { feats, gold })
        })
        .collect()
}

/// Log-likelihood and its gradient over the flat parameter vector
/// (emission weights, then transitions for the CRF).
fn log_likelihood_and_grad(
    kind: ModelKind,
    k: usize,
    n_feat: usize,
    theta: &[f64],
    data: &[Encoded],
) -> std::result::Result<(f64, Vec<f64>), usize> {
    let mut ll = 0.0;
    let mut grad = vec![0.0; theta.len()];
    let trans: Vec<Vec<f64>> = match kind {
        ModelKind::Crf => (0..k)
            .map(|i| theta[n_feat * k + i * k..n_feat * k + (i + 1) * k].to_vec())
            .collect(),
        ModelKind::MaxEnt => Vec::new(),
    };
    for (si, sent) in data.iter().enumerate() {
        let emissions: Vec<Vec<f64>> = sent
            .feats
            .iter()
            .map(|fs| {
                let mut row = vec![0.0; k];
                for &f in fs {
                    for (y, v) in row.iter_mut().enumerate() {
                        *v += theta[f * k + y];
                    }
                }
                row
            })
            .collect();
        match kind {
            ModelKind::MaxEnt => {
                for (t, row) in emissions.iter().enumerate() {
                    let z = log_sum_exp(row);
                    ll += row[sent.gold[t]] - z;
                    for &f in &sent.feats[t] {
                        grad[f * k + sent.gold[t]] += 1.0;
                        for y in 0..k {
                            grad[f * k + y] -= (row[y] - z).exp();
                        }
                    }
                }
            }
            ModelKind::Crf => {
                let m = forward_backward(&emissions, &trans);
                ll += path_score(&emissions, &trans, &sent.gold) - m.log_z;
                for t in 0..emissions.len() {
                    for &f in &sent.feats[t] {
                        grad[f * k + sent.gold[t]] += 1.0;
                        for y in 0..k {
                            grad[f * k + y] -= m.unary[t][y];
                        }
                    }
                }
                let off = n_feat * k;
                for t in 1..emissions.len() {
                    grad[off + sent.gold[t - 1] * k + sent.gold[t]] += 1.0;
                    for i in 0..k {
                        for j in 0..k {
                            grad[off + i * k + j] -= m.pairwise[t - 1][i][j];
                        }
                    }
                }
            }
        }
        if !ll.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(si);
        }
    }
    Ok((ll, grad))
}

/// Log-likelihood of `corpus` under a CRF and its gradient with respect to
/// the emission weights and transitions (observed minus expected counts).
pub fn crf_log_likelihood_grad(model: &CrfModel, corpus: &[TaggedSentence]) -> Result<(f64, Vec<f64>, Vec<Vec<f64>>)> {
    let k = model.labels.len();
    let data = encode_corpus(corpus, &model.labels, &model.templates, &model.features)?;
    let theta = crf_theta(model);
    let (ll, grad) = log_likelihood_and_grad(ModelKind::Crf, k, model.features.len(), &theta, &data)
        .map_err(|sentence| SeqModelError::NonFiniteGradient { epoch: 0, sentence })?;
    let off = model.features.len() * k;
    let trans = (0..k).map(|i| grad[off + i * k..off + (i + 1) * k].to_vec()).collect();
    Ok((ll, grad[..off].to_vec(), trans))
}

fn crf_theta(model: &CrfModel) -> Vec<f64> {
    let mut theta = model.emission.clone();
    for row in &model.transitions {
        theta.extend_from_slice(row);
    }
    theta
}

fn corpus_inventory(corpus: &[TaggedSentence], templates: &[FeatureTemplate]) -> (Vec<String>, Vec<String>) {
    let labels: BTreeSet<&String> = corpus.iter().flat_map(|s| s.labels.iter()).collect();
    let mut features = BTreeSet::new();
    for s in corpus {
        for i in 0..s.units.len() {
            features.extend(extract_features(&s.units, i, templates));
        }
    }
    (labels.into_iter().cloned().collect(), features.into_iter().collect())
}

/// Full-batch gradient training from zero weights with the default templates.
pub fn train_sequence_model(
    kind: ModelKind,
    corpus: &[TaggedSentence],
    params: &TrainParams,
) -> Result<(SequenceModel, TrainReport)> {
    if corpus.is_empty() || corpus.iter().all(|s| s.is_empty()) {
        return Err(SeqModelError::EmptyCorpus);
    }
    let templates = default_templates();
    let (labels, features) = corpus_inventory(corpus, &templates);
    let init = match kind {
        ModelKind::MaxEnt => SequenceModel::MaxEnt(MaxEntModel::zeros(labels, templates, features)),
        ModelKind::Crf => SequenceModel::Crf(CrfModel::zeros(labels, templates, features)),
    };
    train_sequence_model_from(init, corpus, params)
}

/// Continues training an existing model; its feature inventory stays fixed.
///
/// Each epoch takes one step along the negative gradient of the L2-regularized
/// negative log-likelihood. A step that would raise the loss is retried with
/// half the step size, so the recorded losses never increase.
pub fn train_sequence_model_from(
    init: SequenceModel,
    corpus: &[TaggedSentence],
    params: &TrainParams,
) -> Result<(SequenceModel, TrainReport)> {
    if corpus.is_empty() {
        return Err(SeqModelError::EmptyCorpus);
    }
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) {
        return Err(SeqModelError::InvalidParams("learning rate must be positive".into()));
    }
    if !(params.l2 >= 0.0 && params.l2.is_finite()) {
        return Err(SeqModelError::InvalidParams("l2 must be non-negative".into()));
    }
    let (kind, labels, templates, features, mut theta) = match &init {
        SequenceModel::MaxEnt(m) => (
            ModelKind::MaxEnt,
            &m.labels,
            &m.templates,
            &m.features,
            m.weights.clone(),
        ),
        SequenceModel::Crf(m) => (ModelKind::Crf, &m.labels, &m.templates, &m.features, crf_theta(m)),
    };
    let k = labels.len();
    let n_feat = features.len();
    let data = encode_corpus(corpus, labels, templates, features)?;

    let objective = |theta: &[f64], epoch: usize| -> Result<(f64, Vec<f64>)> {
        let (ll, mut grad) = log_likelihood_and_grad(kind, k, n_feat, theta, &data)
            .map_err(|sentence| SeqModelError::NonFiniteGradient { epoch, sentence })?;
        let norm2: f64 = theta.iter().map(|w| w * w).sum();
        // descend the loss: negate the likelihood gradient, add the penalty
        for (g, w) in grad.iter_mut().zip(theta) {
            *g = -*g + params.l2 * w;
        }
        Ok((-ll + 0.5 * params.l2 * norm2, grad))
    };

    let mut lr = params.learning_rate;
    let (mut loss, mut grad) = objective(&theta, 0)?;
    let mut report = TrainReport::default();
    for epoch in 0..params.epochs {
        loop {
            let cand: Vec<f64> = theta.iter().zip(&grad).map(|(w, g)| w - lr * g).collect();
            let accepted = match objective(&cand, epoch) {
                Ok((l, g)) if l <= loss => Some((cand, l, g)),
                Ok(_) | Err(SeqModelError::NonFiniteGradient { .. }) => None,
                Err(e) => return Err(e),
            };
            if let Some((c, l, g)) = accepted {
                theta = c;
                loss = l;
                grad = g;
                break;
            }
            lr *= 0.5;
            if lr < 1e-12 {
                break;
            }
        }
        report.losses.push(loss);
    }
    report.final_learning_rate = lr;

    let model = match init {
        SequenceModel::MaxEnt(mut m) => {
            m.weights = theta;
            SequenceModel::MaxEnt(m)
        }
        SequenceModel::Crf(mut m) => {
            let off = n_feat * k;
            m.transitions = (0..k).map(|i| theta[off + i * k..off + (i + 1) * k].to_vec()).collect();
            m.emission = theta[..off].to_vec();
            m.l2 = params.l2;
            SequenceModel::Crf(m)
        }
    };
    Ok((model, report))
}
