//! Evaluation metrics.
//!
//! Segmentation precision/recall with two-decimal half-up rounding,
//! macro/micro averaged P/R/F over entity classes, ROUGE-L and BLEU.
//! Everything here is a pure function of its inputs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::hash::Hash;

use thiserror::Error;

use crate::corpus::SegmentedSentence;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("inconsistent counts: {0}")]
    InvalidCounts(String),
    #[error("{0} is undefined: zero denominator")]
    ZeroDenominator(&'static str),
    #[error("value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("class list is empty")]
    EmptyClassList,
    #[error("reference is empty")]
    EmptyReference,
    #[error("no non-empty reference given")]
    NoReferences,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// Segment counts: `correct` output segments matching the standard, total
/// `output` segments and `gold` (standard) segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SegCounts {
    pub correct: usize,
    pub output: usize,
    pub gold: usize,
}

impl SegCounts {
    pub fn new(correct: usize, output: usize, gold: usize) -> Result<Self> {
        if correct > output.min(gold) {
            return Err(MetricsError::InvalidCounts(format!(
                "correct={correct} exceeds min(output={output}, gold={gold})"
            )));
        }
        Ok(SegCounts { correct, output, gold })
    }

    pub fn merge(self, other: SegCounts) -> SegCounts {
        SegCounts {
            correct: self.correct + other.correct,
            output: self.output + other.output,
            gold: self.gold + other.gold,
        }
    }
}

/// Raw segmentation precision `n/N` and recall `n/M`.
pub fn seg_precision_recall(c: SegCounts) -> Result<(f64, f64)> {
    if c.correct > c.output.min(c.gold) {
        return Err(MetricsError::InvalidCounts(format!(
            "correct={} exceeds min(output={}, gold={})",
            c.correct, c.output, c.gold
        )));
    }
    if c.output == 0 {
        return Err(MetricsError::ZeroDenominator("precision"));
    }
    if c.gold == 0 {
        return Err(MetricsError::ZeroDenominator("recall"));
    }
    Ok((c.correct as f64 / c.output as f64, c.correct as f64 / c.gold as f64))
}

/// Counts output words whose grapheme span coincides with a gold word.
pub fn count_segments(gold: &SegmentedSentence, output: &SegmentedSentence) -> SegCounts {
    let gold_spans: BTreeSet<(usize, usize)> = gold.spans().into_iter().collect();
    let out_spans = output.spans();
    SegCounts {
        correct: out_spans.iter().filter(|s| gold_spans.contains(s)).count(),
        output: out_spans.len(),
        gold: gold_spans.len(),
    }
}

/// Rounds a ratio half-up to two decimals and returns it as an integer percent.
///
/// A relative slack of 1e-9 absorbs binary representation error, so decimal
/// halves such as 0.005 round up.
pub fn percent_round(x: f64) -> Result<u32> {
    if !(0.0..=1.0).contains(&x) {
        return Err(MetricsError::OutOfRange(x));
    }
    let scaled = x * 100.0;
    Ok((scaled + 0.5 + 1e-9 * scaled.max(1.0)).floor() as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn per_class_f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Unweighted means of per-class precision, recall and F1.
pub fn macro_prf(classes: &[Prf]) -> Result<Prf> {
    if classes.is_empty() {
        return Err(MetricsError::EmptyClassList);
    }
    let n = classes.len() as f64;
    let sum = classes.iter().fold(Prf::default(), |acc, c| Prf {
        precision: acc.precision + c.precision,
        recall: acc.recall + c.recall,
        f1: acc.f1 + c.f1,
    });
    Ok(Prf {
        precision: sum.precision / n,
        recall: sum.recall / n,
        f1: sum.f1 / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Confusion {
    /// P/R/F under the defined-zero convention, plus whether a zero
    /// denominator was hit.
    pub fn prf(&self) -> (Prf, bool) {
        let p_den = self.tp + self.fp;
        let r_den = self.tp + self.fn_;
        let precision = if p_den == 0 { 0.0 } else { self.tp as f64 / p_den as f64 };
        let recall = if r_den == 0 { 0.0 } else { self.tp as f64 / r_den as f64 };
        let prf = Prf {
            precision,
            recall,
            f1: per_class_f1(precision, recall),
        };
        (prf, p_den == 0 || r_den == 0)
    }
}

/// Per-class confusion counts, keyed by class name.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub classes: BTreeMap<String, Confusion>,
}

impl ClassCounts {
    pub fn entry(&mut self, class: &str) -> &mut Confusion {
        self.classes.entry(class.to_owned()).or_default()
    }

    pub fn pooled(&self) -> Confusion {
        self.classes.values().fold(Confusion::default(), |acc, c| Confusion {
            tp: acc.tp + c.tp,
            fp: acc.fp + c.fp,
            fn_: acc.fn_ + c.fn_,
        })
    }

    pub fn per_class(&self) -> Vec<(String, Prf)> {
        self.classes.iter().map(|(k, c)| (k.clone(), c.prf().0)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroPrf {
    pub prf: Prf,
    /// A pooled denominator was zero and the affected ratio was defined as 0.
    pub degenerate: bool,
}

/// Micro-averaged P/R/F from pooled counts.
pub fn micro_prf(c: &ClassCounts) -> Result<MicroPrf> {
    if c.classes.is_empty() {
        return Err(MetricsError::EmptyClassList);
    }
    let pooled = c.pooled();
    let (p_den, r_den) = (pooled.tp + pooled.fp, pooled.tp + pooled.fn_);
    let precision = if p_den == 0 {
        0.0
    } else {
        pooled.tp as f64 / p_den as f64
    };
    let recall = if r_den == 0 {
        0.0
    } else {
        pooled.tp as f64 / r_den as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(MicroPrf {
        prf: Prf { precision, recall, f1 },
        degenerate: p_den == 0 || r_den == 0,
    })
}

/// Length of the longest common subsequence.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RougeParams {
    pub beta: f64,
}

impl Default for RougeParams {
    fn default() -> Self {
        RougeParams { beta: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RougeScore {
    pub recall: f64,
    pub precision: f64,
    pub score: f64,
}

/// ROUGE-L: `(1+B²)RP / (R+B²P)` with LCS-based recall and precision.
pub fn rouge_l<T: PartialEq>(candidate: &[T], reference: &[T], params: RougeParams) -> Result<RougeScore> {
    if !(params.beta > 0.0 && params.beta.is_finite()) {
        return Err(MetricsError::InvalidParams(format!(
            "beta must be positive, got {}",
            params.beta
        )));
    }
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let lcs = lcs_length(candidate, reference) as f64;
    let recall = lcs / reference.len() as f64;
    let precision = if candidate.is_empty() {
        0.0
    } else {
        lcs / candidate.len() as f64
    };
    let b2 = params.beta * params.beta;
    let den = recall + b2 * precision;
    let score = if den == 0.0 {
        0.0
    } else {
        (1.0 + b2) * recall * precision / den
    };
    Ok(RougeScore {
        recall,
        precision,
        score,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BleuParams {
    max_order: usize,
    weights: Vec<f64>,
}

impl BleuParams {
    /// Uniform weights `1/N` over orders `1..=N`.
    pub fn new(max_order: usize) -> Result<Self> {
        if max_order == 0 {
            return Err(MetricsError::InvalidParams("max_order must be at least 1".into()));
        }
        Ok(BleuParams {
            max_order,
            weights: vec![1.0 / max_order as f64; max_order],
        })
    }

    pub fn with_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(MetricsError::InvalidParams("no weights".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(MetricsError::InvalidParams("weights must be positive".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(MetricsError::InvalidParams(format!("weights sum to {sum}, not 1")));
        }
        Ok(BleuParams {
            max_order: weights.len(),
            weights,
        })
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Default for BleuParams {
    fn default() -> Self {
        BleuParams::new(4).expect("order 4 is valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BleuScore {
    pub score: f64,
    /// Clipped modified precision per order, `precisions[n-1]` for order n.
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub candidate_len: usize,
    pub reference_len: usize,
    /// First order whose clipped precision is zero, if any.
    pub zero_order: Option<usize>,
    pub empty_candidate: bool,
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram precision for one order: (matches, total candidate n-grams).
pub fn clipped_matches<T: Eq + Hash, R: AsRef<[T]>>(candidate: &[T], references: &[R], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let mut max_ref: HashMap<&[T], usize> = HashMap::new();
    for r in references {
        for (g, c) in ngram_counts(r.as_ref(), n) {
            let e = max_ref.entry(g).or_insert(0);
            *e = (*e).max(c);
        }
    }
    let matches = cand
        .iter()
        .map(|(g, c)| (*c).min(max_ref.get(g).copied().unwrap_or(0)))
        .sum();
    (matches, candidate.len().saturating_sub(n - 1))
}

/// Reference length closest to `c`; ties go to the shorter reference.
pub fn closest_ref_length(c: usize, ref_lengths: impl IntoIterator<Item = usize>) -> Option<usize> {
    ref_lengths.into_iter().min_by_key(|&r| (r.abs_diff(c), r))
}

/// Sentence BLEU with the standard brevity penalty and no smoothing.
pub fn bleu<T: Eq + Hash, R: AsRef<[T]>>(candidate: &[T], references: &[R], params: &BleuParams) -> Result<BleuScore> {
    let refs: Vec<&[T]> = references
        .iter()
        .map(|r| r.as_ref())
        .filter(|r| !r.is_empty())
        .collect();
    if refs.is_empty() {
        return Err(MetricsError::NoReferences);
    }
    let c = candidate.len();
    let r = closest_ref_length(c, refs.iter().map(|r| r.len())).expect("refs non-empty");
    if c == 0 {
        return Ok(BleuScore {
            score: 0.0,
            precisions: vec![0.0; params.max_order],
            brevity_penalty: 0.0,
            candidate_len: 0,
            reference_len: r,
            zero_order: Some(1),
            empty_candidate: true,
        });
    }
    let precisions: Vec<f64> = (1..=params.max_order)
        .map(|n| {
            let (m, total) = clipped_matches(candidate, &refs, n);
            if total == 0 {
                0.0
            } else {
                m as f64 / total as f64
            }
        })
        .collect();
    let brevity_penalty = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    let zero_order = precisions.iter().position(|p| *p == 0.0).map(|i| i + 1);
    let score = if zero_order.is_some() {
        0.0
    } else {
        let log_sum: f64 = params.weights.iter().zip(&precisions).map(|(w, p)| w * p.ln()).sum();
        brevity_penalty * log_sum.exp()
    };
    Ok(BleuScore {
        score,
        precisions,
        brevity_penalty,
        candidate_len: c,
        reference_len: r,
        zero_order,
        empty_candidate: false,
    })
}

/// Formats a float with 17 significant digits, `null` when not finite.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassRow {
    pub counts: Confusion,
    pub prf: Prf,
}

/// Named scores with per-class rows. Raw ratios are kept as-is; percent forms
/// are derived only when the report is rendered.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub title: String,
    pub meta: BTreeMap<String, String>,
    pub scores: BTreeMap<String, f64>,
    pub counts: BTreeMap<String, u64>,
    pub classes: BTreeMap<String, ClassRow>,
    pub flags: BTreeSet<String>,
}

impl EvalReport {
    pub fn new(title: impl Into<String>) -> Self {
        EvalReport {
            title: title.into(),
            ..Default::default()
        }
    }

    pub fn score(&mut self, name: &str, value: f64) -> &mut Self {
        self.scores.insert(name.to_owned(), value);
        self
    }

    pub fn count(&mut self, name: &str, value: u64) -> &mut Self {
        self.counts.insert(name.to_owned(), value);
        self
    }

    pub fn flag(&mut self, flag: &str) -> &mut Self {
        self.flags.insert(flag.to_owned());
        self
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.insert(key.to_owned(), value.to_string());
        self
    }

    /// Adds per-class rows plus macro and micro aggregates.
    pub fn add_class_counts(&mut self, counts: &ClassCounts) -> Result<()> {
        for (name, c) in &counts.classes {
            let (prf, degenerate) = c.prf();
            if degenerate {
                self.flags.insert(format!("zero_denominator:{name}"));
            }
            self.classes.insert(name.clone(), ClassRow { counts: *c, prf });
        }
        let per_class: Vec<Prf> = counts.per_class().into_iter().map(|(_, p)| p).collect();
        let ma = macro_prf(&per_class)?;
        let mi = micro_prf(counts)?;
        self.score("macro_precision", ma.precision)
            .score("macro_recall", ma.recall)
            .score("macro_f1", ma.f1)
            .score("micro_precision", mi.prf.precision)
            .score("micro_recall", mi.prf.recall)
            .score("micro_f1", mi.prf.f1);
        if mi.degenerate {
            self.flag("micro_zero_denominator");
        }
        Ok(())
    }

    /// Integer percents for every score inside [0, 1].
    pub fn percents(&self) -> BTreeMap<String, u32> {
        self.scores
            .iter()
            .filter_map(|(k, v)| percent_round(*v).ok().map(|p| (k.clone(), p)))
            .collect()
    }

    /// Key-sorted JSON with raw values at 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut o = String::from("{\n");
        let mut sections: Vec<String> = Vec::new();

        let classes: Vec<String> = self
            .classes
            .iter()
            .map(|(name, row)| {
                let mut fields = vec![
                    ("f1".to_string(), fmt_f64(row.prf.f1)),
                    ("fn".to_string(), row.counts.fn_.to_string()),
                    ("fp".to_string(), row.counts.fp.to_string()),
                    ("precision".to_string(), fmt_f64(row.prf.precision)),
                    ("recall".to_string(), fmt_f64(row.prf.recall)),
                    ("tp".to_string(), row.counts.tp.to_string()),
                ];
                for (k, v) in [
                    ("f1", row.prf.f1),
                    ("precision", row.prf.precision),
                    ("recall", row.prf.recall),
                ] {
                    if let Ok(p) = percent_round(v) {
                        fields.push((format!("{k}_pct"), p.to_string()));
                    }
                }
                fields.sort();
                let body: Vec<String> = fields
                    .into_iter()
                    .map(|(k, v)| format!("{}: {v}", json_str(&k)))
                    .collect();
                format!("    {}: {{{}}}", json_str(name), body.join(", "))
            })
            .collect();
        sections.push(block("classes", &classes));

        let counts: Vec<String> = self
            .counts
            .iter()
            .map(|(k, v)| format!("    {}: {v}", json_str(k)))
            .collect();
        sections.push(block("counts", &counts));

        let flags: Vec<String> = self.flags.iter().map(|f| json_str(f)).collect();
        sections.push(format!("  \"flags\": [{}]", flags.join(", ")));

        let meta: Vec<String> = self
            .meta
            .iter()
            .map(|(k, v)| format!("    {}: {}", json_str(k), json_str(v)))
            .collect();
        sections.push(block("meta", &meta));

        let percents: Vec<String> = self
            .percents()
            .iter()
            .map(|(k, v)| format!("    {}: {v}", json_str(k)))
            .collect();
        sections.push(block("percents", &percents));

        let scores: Vec<String> = self
            .scores
            .iter()
            .map(|(k, v)| format!("    {}: {}", json_str(k), fmt_f64(*v)))
            .collect();
        sections.push(block("scores", &scores));

        sections.push(format!("  \"title\": {}", json_str(&self.title)));
        o.push_str(&sections.join(",\n"));
        o.push_str("\n}\n");
        o
    }

    /// Aligned plain-text rendering.
    pub fn to_table(&self) -> String {
        let mut out = format!("{}\n", self.title);
        for (k, v) in &self.meta {
            let _ = writeln!(out, "  {k}: {v}");
        }
        let percents = self.percents();
        let width = self
            .scores
            .keys()
            .chain(self.counts.keys())
            .map(|k| display_name(k).len())
            .max()
            .unwrap_or(0);
        for (k, v) in &self.counts {
            let _ = writeln!(out, "{:<width$}  {v:>24}", display_name(k));
        }
        for (k, v) in &self.scores {
            let pct = percents.get(k).map(|p| format!("{p:>4}%")).unwrap_or_default();
            let _ = writeln!(out, "{:<width$}  {:>24}  {pct}", display_name(k), fmt_f64(*v));
        }
        if !self.classes.is_empty() {
            let cw = self.classes.keys().map(|k| k.len()).max().unwrap_or(0).max(5);
            let _ = writeln!(
                out,
                "{:<cw$}  {:>6} {:>6} {:>6}  {:>9} {:>9} {:>9}",
                "class", "tp", "fp", "fn", "precision", "recall", "f1"
            );
            for (k, row) in &self.classes {
                let _ = writeln!(
                    out,
                    "{:<cw$}  {:>6} {:>6} {:>6}  {:>9.4} {:>9.4} {:>9.4}",
                    k, row.counts.tp, row.counts.fp, row.counts.fn_, row.prf.precision, row.prf.recall, row.prf.f1
                );
            }
        }
        if !self.flags.is_empty() {
            let flags: Vec<&str> = self.flags.iter().map(String::as_str).collect();
            let _ = writeln!(out, "flags: {}", flags.join(", "));
        }
        out
    }
}

/// Segmentation precision is reported as "accuracy" alongside its name.
fn display_name(key: &str) -> String {
    match key {
        "precision" => "precision (accuracy)".to_string(),
        other => other.to_string(),
    }
}

fn block(name: &str, lines: &[String]) -> String {
    if lines.is_empty() {
        format!("  {}: {{}}", json_str(name))
    } else {
        format!("  {}: {{\n{}\n  }}", json_str(name), lines.join(",\n"))
    }
}
