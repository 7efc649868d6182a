//! Hidden Markov word segmentation.
//!
//! Stage one estimates initial, transition and emission tables from an
//! annotated corpus by counting (maximum likelihood with additive smoothing).
//! Stage two finds the best BMES path with Viterbi and decodes it to words.
//! A standalone Poisson maximum-likelihood estimator is provided as well.

use thiserror::Error;

use crate::corpus::{decode_bmes, graphemes, SegmentedSentence, TaggedSentence, BMES_LABELS};

#[derive(Debug, Error, PartialEq)]
pub enum HmmError {
    #[error("sample list is empty")]
    EmptySamples,
    #[error("rate must be non-negative, got {0}")]
    NegativeRate(f64),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("sentence {sentence}: label {label:?} is not a BMES tag")]
    UnknownLabel { sentence: usize, label: String },
    #[error("sentence {0}: units and labels differ in length")]
    LengthMismatch(usize),
    #[error("smoothing alpha must be finite and non-negative, got {0}")]
    InvalidAlpha(f64),
    #[error("input is empty")]
    EmptyInput,
    #[error("input contains whitespace; pass one unsegmented sentence")]
    Whitespace,
    #[error("model states are not the BMES tag set")]
    NotBmes,
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

pub type Result<T> = std::result::Result<T, HmmError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonMleResult {
    pub phi: f64,
    pub n: usize,
    pub log_likelihood: f64,
}

/// Maximum-likelihood Poisson rate: the sample mean.
pub fn mle_poisson(samples: &[u64]) -> Result<PoissonMleResult> {
    if samples.is_empty() {
        return Err(HmmError::EmptySamples);
    }
    let total: u128 = samples.iter().map(|&x| x as u128).sum();
    let phi = total as f64 / samples.len() as f64;
    Ok(PoissonMleResult {
        phi,
        n: samples.len(),
        log_likelihood: poisson_log_likelihood(samples, phi)?,
    })
}

/// `ln L(phi) = -n phi + (sum x) ln phi - sum ln(x!)`.
///
/// At `phi == 0` the `x ln phi` term is taken as 0 when every sample is 0 and
/// as negative infinity otherwise.
pub fn poisson_log_likelihood(samples: &[u64], phi: f64) -> Result<f64> {
    if phi < 0.0 || phi.is_nan() {
        return Err(HmmError::NegativeRate(phi));
    }
    let n = samples.len() as f64;
    let sum: f64 = samples.iter().map(|&x| x as f64).sum();
    let log_fact: f64 = samples.iter().map(|&x| libm::lgamma(x as f64 + 1.0)).sum();
    let middle = if sum == 0.0 {
        0.0
    } else if phi == 0.0 {
        f64::NEG_INFINITY
    } else {
        sum * phi.ln()
    };
    Ok(-n * phi + middle - log_fact)
}

/// How emissions of units outside the training vocabulary are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnkPolicy {
    /// A reserved last emission column that receives only smoothing mass.
    SmoothedColumn,
}

impl UnkPolicy {
    pub fn name(self) -> &'static str {
        match self {
            UnkPolicy::SmoothedColumn => "smoothed-column",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        (s == "smoothed-column").then_some(UnkPolicy::SmoothedColumn)
    }
}

/// First-order HMM in log domain. `log_emit` rows have one column per
/// vocabulary entry plus a trailing unknown-unit column.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    pub states: Vec<String>,
    pub vocab: Vec<String>,
    pub log_pi: Vec<f64>,
    pub log_trans: Vec<Vec<f64>>,
    pub log_emit: Vec<Vec<f64>>,
    pub smoothing_alpha: f64,
    pub unk_policy: UnkPolicy,
}

fn log_row_sum(row: &[f64]) -> f64 {
    row.iter().map(|v| v.exp()).sum()
}

impl HmmModel {
    /// Assembles a model from log tables, checking shapes, vocabulary order
    /// and that every row is a distribution.
    pub fn from_parts(
        states: Vec<String>,
        vocab: Vec<String>,
        log_pi: Vec<f64>,
        log_trans: Vec<Vec<f64>>,
        log_emit: Vec<Vec<f64>>,
        smoothing_alpha: f64,
        unk_policy: UnkPolicy,
    ) -> Result<Self> {
        let k = states.len();
        let bad = |m: String| Err(HmmError::InvalidModel(m));
        if k == 0 {
            return bad("no states".into());
        }
        if !vocab.windows(2).all(|w| w[0] < w[1]) {
            return bad("vocabulary is not sorted and duplicate-free".into());
        }
        if log_pi.len() != k || log_trans.len() != k || log_emit.len() != k {
            return bad("table row count differs from state count".into());
        }
        if log_trans.iter().any(|r| r.len() != k) {
            return bad("transition table is not square".into());
        }
        if log_emit.iter().any(|r| r.len() != vocab.len() + 1) {
            return bad("emission rows must have vocab + 1 columns".into());
        }
        let rows = std::iter::once(&log_pi).chain(&log_trans).chain(&log_emit);
        for row in rows {
            if row.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
                return bad("NaN or +inf log-probability".into());
            }
            let s = log_row_sum(row);
            if (s - 1.0).abs() > 1e-9 {
                return bad(format!("probability row sums to {s}"));
            }
        }
        if !(smoothing_alpha >= 0.0 && smoothing_alpha.is_finite()) {
            return Err(HmmError::InvalidAlpha(smoothing_alpha));
        }
        Ok(HmmModel {
            states,
            vocab,
            log_pi,
            log_trans,
            log_emit,
            smoothing_alpha,
            unk_policy,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Emission column of a unit; unknown units map to the reserved column.
    pub fn observation(&self, unit: &str) -> usize {
        self.vocab
            .binary_search_by(|v| v.as_str().cmp(unit))
            .unwrap_or(self.vocab.len())
    }

    pub fn observations<S: AsRef<str>>(&self, units: &[S]) -> Vec<usize> {
        units.iter().map(|u| self.observation(u.as_ref())).collect()
    }

    /// Log joint probability of a state path and observation sequence.
    pub fn path_log_score(&self, obs: &[usize], path: &[usize]) -> f64 {
        let mut score = 0.0;
        for (t, (&o, &s)) in obs.iter().zip(path).enumerate() {
            score += if t == 0 {
                self.log_pi[s]
            } else {
                self.log_trans[path[t - 1]][s]
            };
            score += self.log_emit[s][o];
        }
        score
    }

    fn is_bmes(&self) -> bool {
        self.states.len() == 4 && self.states.iter().zip(BMES_LABELS).all(|(a, b)| a == b)
    }
}

/// Normalizes smoothed counts into a log distribution. A row with no mass at
/// all becomes uniform.
fn log_normalize(counts: &[f64], alpha: f64) -> Vec<f64> {
    let total: f64 = counts.iter().sum::<f64>() + alpha * counts.len() as f64;
    if total == 0.0 {
        let u = -(counts.len() as f64).ln();
        return vec![u; counts.len()];
    }
    counts.iter().map(|c| ((c + alpha) / total).ln()).collect()
}

/// Count-ratio estimation of a BMES HMM with additive smoothing `alpha`.
pub fn train_hmm(corpus: &[TaggedSentence], smoothing_alpha: f64) -> Result<HmmModel> {
    if corpus.is_empty() {
        return Err(HmmError::EmptyCorpus);
    }
    if !(smoothing_alpha >= 0.0 && smoothing_alpha.is_finite()) {
        return Err(HmmError::InvalidAlpha(smoothing_alpha));
    }
    let mut vocab: Vec<String> = corpus.iter().flat_map(|s| s.units.iter().cloned()).collect();
    vocab.sort();
    vocab.dedup();

    let k = BMES_LABELS.len();
    let width = vocab.len() + 1;
    let mut pi = vec![0.0; k];
    let mut trans = vec![vec![0.0; k]; k];
    let mut emit = vec![vec![0.0; width]; k];

    for (si, sent) in corpus.iter().enumerate() {
        if sent.units.len() != sent.labels.len() {
            return Err(HmmError::LengthMismatch(si));
        }
        let mut prev: Option<usize> = None;
        for (unit, label) in sent.units.iter().zip(&sent.labels) {
            let s = BMES_LABELS
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| HmmError::UnknownLabel {
                    sentence: si,
                    label: label.clone(),
                })?;
            match prev {
                None => pi[s] += 1.0,
                Some(p) => trans[p][s] += 1.0,
            }
            let o = vocab.binary_search(unit).expect("unit collected into vocab");
            emit[s][o] += 1.0;
            prev = Some(s);
        }
    }

    Ok(HmmModel {
        states: BMES_LABELS.iter().map(|s| s.to_string()).collect(),
        vocab,
        log_pi: log_normalize(&pi, smoothing_alpha),
        log_trans: trans.iter().map(|r| log_normalize(r, smoothing_alpha)).collect(),
        log_emit: emit.iter().map(|r| log_normalize(r, smoothing_alpha)).collect(),
        smoothing_alpha,
        unk_policy: UnkPolicy::SmoothedColumn,
    })
}

/// Max-scoring state path and its log score. Ties go to the smaller state
/// index at every backpointer and at the final position.
pub fn viterbi(model: &HmmModel, obs: &[usize]) -> (Vec<usize>, f64) {
    let k = model.num_states();
    if obs.is_empty() {
        return (Vec::new(), 0.0);
    }
    let mut delta: Vec<f64> = (0..k).map(|s| model.log_pi[s] + model.log_emit[s][obs[0]]).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(obs.len());
    for &o in &obs[1..] {
        let mut next = vec![f64::NEG_INFINITY; k];
        let mut bp = vec![0usize; k];
        for s in 0..k {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for (p, d) in delta.iter().enumerate() {
                let v = d + model.log_trans[p][s];
                if v > best {
                    best = v;
                    arg = p;
                }
            }
            next[s] = best + model.log_emit[s][o];
            bp[s] = arg;
        }
        back.push(bp);
        delta = next;
    }
    let mut last = 0;
    for s in 1..k {
        if delta[s] > delta[last] {
            last = s;
        }
    }
    let score = delta[last];
    let mut path = vec![last; obs.len()];
    for t in (1..obs.len()).rev() {
        path[t - 1] = back[t - 1][path[t]];
    }
    (path, score)
}

/// Viterbi labels for a unit sequence.
pub fn viterbi_decode<S: AsRef<str>>(model: &HmmModel, units: &[S]) -> Vec<String> {
    let (path, _) = viterbi(model, &model.observations(units));
    path.into_iter().map(|s| model.states[s].clone()).collect()
}

/// Segments one sentence: graphemes, Viterbi over BMES, then BMES decoding.
pub fn segment_text(model: &HmmModel, sentence: &str) -> Result<SegmentedSentence> {
    if !model.is_bmes() {
        return Err(HmmError::NotBmes);
    }
    if sentence.chars().any(char::is_whitespace) {
        return Err(HmmError::Whitespace);
    }
    let units = graphemes(sentence);
    if units.is_empty() {
        return Err(HmmError::EmptyInput);
    }
    let labels = viterbi_decode(model, &units);
    Ok(decode_bmes(&TaggedSentence { units, labels }))
}
