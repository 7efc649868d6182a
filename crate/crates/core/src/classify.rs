//! TF-IDF document vectors, nearest-centroid classification, word
//! similarity and synonym-set construction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::corpus::graphemes;
use crate::metrics::ClassCounts;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("document has no terms")]
    EmptyDocument,
    #[error("term count {count} exceeds document length {len}")]
    CountExceedsLength { count: u64, len: u64 },
    #[error("document frequency {df} exceeds document count {n}")]
    FrequencyExceedsCount { df: u64, n: u64 },
    #[error("label {0:?} has no training examples")]
    MissingLabel(String),
    #[error("alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("{gold} gold labels but {pred} predictions")]
    LengthMismatch { gold: usize, pred: usize },
}

pub type Result<T> = std::result::Result<T, ClassifyError>;

/// Whitespace split with lowercase folding.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

/// Term frequency `m / len`.
pub fn tf(count: u64, doc_len: u64) -> Result<f64> {
    if doc_len == 0 {
        return Err(ClassifyError::EmptyDocument);
    }
    if count > doc_len {
        return Err(ClassifyError::CountExceedsLength { count, len: doc_len });
    }
    Ok(count as f64 / doc_len as f64)
}

/// Inverse document frequency `ln(n / (1 + df))`. Negative once
/// `df + 1 > n`.
pub fn idf(doc_count: u64, doc_freq: u64) -> Result<f64> {
    if doc_count == 0 {
        return Err(ClassifyError::EmptyCorpus);
    }
    if doc_freq > doc_count {
        return Err(ClassifyError::FrequencyExceedsCount {
            df: doc_freq,
            n: doc_count,
        });
    }
    Ok((doc_count as f64 / (1 + doc_freq) as f64).ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfIndex {
    vocabulary: Vec<String>,
    doc_count: u64,
    doc_freq: Vec<u64>,
}

impl TfIdfIndex {
    pub fn from_parts(vocabulary: Vec<String>, doc_count: u64, doc_freq: Vec<u64>) -> Result<Self> {
        if doc_count == 0 {
            return Err(ClassifyError::EmptyCorpus);
        }
        if vocabulary.len() != doc_freq.len() || !vocabulary.windows(2).all(|w| w[0] < w[1]) {
            return Err(ClassifyError::EmptyCorpus);
        }
        if let Some(&df) = doc_freq.iter().find(|&&df| df > doc_count) {
            return Err(ClassifyError::FrequencyExceedsCount { df, n: doc_count });
        }
        Ok(TfIdfIndex {
            vocabulary,
            doc_count,
            doc_freq,
        })
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn doc_count(&self) -> u64 {
        self.doc_count
    }

    pub fn doc_freqs(&self) -> &[u64] {
        &self.doc_freq
    }

    pub fn doc_freq(&self, term: &str) -> Option<u64> {
        self.position(term).map(|i| self.doc_freq[i])
    }

    fn position(&self, term: &str) -> Option<usize> {
        self.vocabulary.binary_search_by(|v| v.as_str().cmp(term)).ok()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.doc_freq(term)
            .map(|df| idf(self.doc_count, df).expect("index counts validated"))
    }
}

/// Builds an index over already tokenized documents. `doc_freq` counts
/// presence, not multiplicity.
pub fn build_index<S: AsRef<str>>(docs: &[Vec<S>]) -> Result<TfIdfIndex> {
    if docs.is_empty() {
        return Err(ClassifyError::EmptyCorpus);
    }
    let mut df: BTreeMap<&str, u64> = BTreeMap::new();
    for doc in docs {
        let terms: BTreeSet<&str> = doc.iter().map(AsRef::as_ref).collect();
        for t in terms {
            *df.entry(t).or_default() += 1;
        }
    }
    let (vocabulary, doc_freq) = df.into_iter().map(|(t, c)| (t.to_owned(), c)).unzip();
    Ok(TfIdfIndex {
        vocabulary,
        doc_count: docs.len() as u64,
        doc_freq,
    })
}

/// Sparse term -> weight map.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DocVector {
    pub weights: BTreeMap<String, f64>,
}

impl DocVector {
    pub fn norm(&self) -> f64 {
        self.weights.values().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &DocVector) -> f64 {
        let (small, large) = if self.weights.len() <= other.weights.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .weights
            .iter()
            .filter_map(|(t, w)| large.weights.get(t).map(|v| w * v))
            .sum()
    }

    /// Cosine similarity; −1 when either vector has zero norm.
    pub fn cosine(&self, other: &DocVector) -> f64 {
        let n = self.norm() * other.norm();
        if n == 0.0 {
            -1.0
        } else {
            self.dot(other) / n
        }
    }

    pub fn scaled(&self, c: f64) -> DocVector {
        DocVector {
            weights: self.weights.iter().map(|(t, w)| (t.clone(), w * c)).collect(),
        }
    }
}

/// `tf * idf` for each in-vocabulary term. Term frequency is relative to the
/// full document length, out-of-vocabulary tokens included.
pub fn vectorize<S: AsRef<str>>(index: &TfIdfIndex, doc: &[S]) -> DocVector {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for t in doc {
        *counts.entry(t.as_ref()).or_default() += 1;
    }
    let len = doc.len() as u64;
    let weights = counts
        .into_iter()
        .filter_map(|(t, c)| {
            let idf = index.idf(t)?;
            Some((t.to_owned(), tf(c, len).expect("count within length") * idf))
        })
        .collect();
    DocVector { weights }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentroidModel {
    labels: Vec<String>,
    centroids: Vec<DocVector>,
}

impl CentroidModel {
    pub fn from_parts(labels: Vec<String>, centroids: Vec<DocVector>) -> Result<Self> {
        if labels.is_empty() || labels.len() != centroids.len() || !labels.windows(2).all(|w| w[0] < w[1]) {
            return Err(ClassifyError::EmptyCorpus);
        }
        Ok(CentroidModel { labels, centroids })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn centroids(&self) -> &[DocVector] {
        &self.centroids
    }

    pub fn centroid(&self, label: &str) -> Option<&DocVector> {
        self.labels.iter().position(|l| l == label).map(|i| &self.centroids[i])
    }
}

/// Mean vector per label over the labels that occur in `examples`.
pub fn train_centroids(examples: &[(DocVector, String)]) -> Result<CentroidModel> {
    let labels: BTreeSet<&str> = examples.iter().map(|(_, l)| l.as_str()).collect();
    let labels: Vec<String> = labels.into_iter().map(str::to_owned).collect();
    train_centroids_for(examples, &labels)
}

/// Like [`train_centroids`] but over a declared label set; every declared
/// label needs at least one example.
pub fn train_centroids_for(examples: &[(DocVector, String)], labels: &[String]) -> Result<CentroidModel> {
    if labels.is_empty() {
        return Err(ClassifyError::EmptyCorpus);
    }
    let labels: BTreeSet<&String> = labels.iter().collect();
    let mut centroids = Vec::with_capacity(labels.len());
    for label in &labels {
        let mut sum: BTreeMap<String, f64> = BTreeMap::new();
        let mut n = 0usize;
        for (v, l) in examples.iter().filter(|(_, l)| l == *label) {
            debug_assert_eq!(l, *label);
            n += 1;
            for (t, w) in &v.weights {
                *sum.entry(t.clone()).or_default() += w;
            }
        }
        if n == 0 {
            return Err(ClassifyError::MissingLabel((*label).clone()));
        }
        for w in sum.values_mut() {
            *w /= n as f64;
        }
        centroids.push(DocVector { weights: sum });
    }
    Ok(CentroidModel {
        labels: labels.into_iter().cloned().collect(),
        centroids,
    })
}

/// Label of the most cosine-similar centroid; ties go to the
/// lexicographically first label.
pub fn classify_vector<'m>(model: &'m CentroidModel, v: &DocVector) -> &'m str {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, c) in model.centroids.iter().enumerate() {
        let s = v.cosine(c);
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    &model.labels[best]
}

pub fn classify_doc<'m, S: AsRef<str>>(model: &'m CentroidModel, index: &TfIdfIndex, doc: &[S]) -> &'m str {
    classify_vector(model, &vectorize(index, doc))
}

/// Confusion counts of single-label predictions. A correct prediction is a
/// true positive of its label; an error is a false positive of the
/// predicted label and a false negative of the gold label, so pooled
/// precision equals accuracy.
pub fn classification_counts<S: AsRef<str>, T: AsRef<str>>(gold: &[S], pred: &[T]) -> Result<ClassCounts> {
    if gold.len() != pred.len() {
        return Err(ClassifyError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let mut counts = ClassCounts::default();
    for (g, p) in gold.iter().zip(pred) {
        let (g, p) = (g.as_ref(), p.as_ref());
        if g == p {
            counts.entry(g).tp += 1;
        } else {
            counts.entry(p).fp += 1;
            counts.entry(g).fn_ += 1;
        }
    }
    Ok(counts)
}

/// A distance over words: zero on identical words, symmetric, nonnegative.
pub trait WordDistance: Send + Sync {
    fn name(&self) -> &str;
    fn distance(&self, a: &str, b: &str) -> f64;
}

/// Edit distance counted in grapheme clusters.
#[derive(Debug, Clone, Copy, Default)]
pub struct Levenshtein;

impl WordDistance for Levenshtein {
    fn name(&self) -> &str {
        "levenshtein"
    }

    fn distance(&self, a: &str, b: &str) -> f64 {
        levenshtein(&graphemes(a), &graphemes(b)) as f64
    }
}

pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub struct SimilarityParams {
    alpha: f64,
    distance: Box<dyn WordDistance>,
}

impl fmt::Debug for SimilarityParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimilarityParams")
            .field("alpha", &self.alpha)
            .field("distance", &self.distance.name())
            .finish()
    }
}

impl SimilarityParams {
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_distance(alpha, Box::new(Levenshtein))
    }

    pub fn with_distance(alpha: f64, distance: Box<dyn WordDistance>) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ClassifyError::InvalidAlpha(alpha));
        }
        Ok(SimilarityParams { alpha, distance })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn distance(&self) -> &dyn WordDistance {
        self.distance.as_ref()
    }
}

/// `alpha / (d + alpha)`: 1 for identical words, falling toward 0 with
/// distance.
pub fn word_similarity(a: &str, b: &str, params: &SimilarityParams) -> f64 {
    let d = params.distance.distance(a, b);
    params.alpha / (d + params.alpha)
}

/// Connected components of the graph linking words whose similarity is at
/// least `threshold`. Each set is sorted and sets are ordered by their first
/// word.
pub fn build_synonym_sets<S: AsRef<str>>(
    vocabulary: &[S],
    params: &SimilarityParams,
    threshold: f64,
) -> Result<Vec<Vec<String>>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(ClassifyError::InvalidThreshold(threshold));
    }
    let words: Vec<&str> = vocabulary
        .iter()
        .map(AsRef::as_ref)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut parent: Vec<usize> = (0..words.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            if word_similarity(words[i], words[j], params) >= threshold {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut sets: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, w) in words.iter().enumerate() {
        let root = find(&mut parent, i);
        sets.entry(root).or_default().push((*w).to_owned());
    }
    // roots are the smallest member index, so sets come out ordered
    Ok(sets.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn tf_examples() {
        assert_eq!(tf(0, 5).unwrap(), 0.0);
        assert_eq!(tf(7, 7).unwrap(), 1.0);
        assert_eq!(tf(2, 10).unwrap(), 0.2);
        assert_eq!(tf(1, 0), Err(ClassifyError::EmptyDocument));
        assert!(tf(3, 2).is_err());
    }

    #[test]
    fn idf_examples() {
        assert_eq!(idf(1, 0).unwrap(), 0.0);
        assert_eq!(idf(10, 4).unwrap(), 2f64.ln());
        let v = idf(4, 4).unwrap();
        assert_eq!(v, (4.0f64 / 5.0).ln());
        assert!(v < 0.0);
        assert!(idf(0, 0).is_err());
        assert!(idf(2, 3).is_err());
    }

    #[test]
    fn index_counts_presence() {
        let idx = build_index(&[toks("a b"), toks("a")]).unwrap();
        assert_eq!(idx.doc_count(), 2);
        assert_eq!(idx.doc_freq("a"), Some(2));
        assert_eq!(idx.doc_freq("b"), Some(1));
        let idx2 = build_index(&[toks("a a a b"), toks("A")]).unwrap();
        assert_eq!(idx2, idx);
        assert_eq!(build_index::<String>(&[]), Err(ClassifyError::EmptyCorpus));
        let empty = build_index(&[toks("")]).unwrap();
        assert!(empty.vocabulary().is_empty());
    }

    #[test]
    fn vectorize_examples() {
        // ten documents, "x" in four of them
        let mut docs: Vec<Vec<String>> = (0..4).map(|_| toks("x")).collect();
        docs.extend((0..6).map(|i| vec![format!("y{i}")]));
        let idx = build_index(&docs).unwrap();
        let v = vectorize(&idx, &toks("x"));
        assert_eq!(v.weights.len(), 1);
        assert_eq!(v.weights["x"], 1.0 * 2f64.ln());
        assert!(vectorize(&idx, &toks("unseen words")).weights.is_empty());
        let once = vectorize(&idx, &toks("x y0 q"));
        let twice = vectorize(&idx, &toks("x y0 q x y0 q"));
        assert_eq!(once, twice);
    }

    fn topic_model() -> (TfIdfIndex, CentroidModel, Vec<(Vec<String>, String)>) {
        let data = [
            ("goal match striker league", "sport"),
            ("league match referee goal", "sport"),
            ("striker referee season", "sport"),
            ("stock market shares bank", "finance"),
            ("bank interest market rates", "finance"),
            ("shares rates investor", "finance"),
        ];
        let docs: Vec<(Vec<String>, String)> = data.iter().map(|(t, l)| (toks(t), l.to_string())).collect();
        let tokens: Vec<Vec<String>> = docs.iter().map(|(d, _)| d.clone()).collect();
        let idx = build_index(&tokens).unwrap();
        let ex: Vec<(DocVector, String)> = docs.iter().map(|(d, l)| (vectorize(&idx, d), l.clone())).collect();
        (idx, train_centroids(&ex).unwrap(), docs)
    }

    #[test]
    fn separable_topics_classified() {
        let (idx, model, docs) = topic_model();
        for (d, l) in &docs {
            assert_eq!(classify_doc(&model, &idx, d), l);
        }
    }

    #[test]
    fn centroid_and_fallback() {
        let (_, model, _) = topic_model();
        let c = model.centroid("sport").unwrap().clone();
        assert_eq!(classify_vector(&model, &c), "sport");
        assert_eq!(classify_vector(&model, &DocVector::default()), "finance");
    }

    #[test]
    fn declared_label_without_examples_fails() {
        let (idx, _, docs) = topic_model();
        let ex: Vec<(DocVector, String)> = docs.iter().map(|(d, l)| (vectorize(&idx, d), l.clone())).collect();
        let labels = vec!["finance".to_string(), "politics".to_string(), "sport".to_string()];
        assert_eq!(
            train_centroids_for(&ex, &labels),
            Err(ClassifyError::MissingLabel("politics".into()))
        );
    }

    #[test]
    fn centroid_is_mean() {
        let mk = |pairs: &[(&str, f64)]| DocVector {
            weights: pairs.iter().map(|(t, w)| (t.to_string(), *w)).collect(),
        };
        let ex = vec![
            (mk(&[("a", 1.0)]), "l".to_string()),
            (mk(&[("a", 3.0), ("b", 2.0)]), "l".to_string()),
        ];
        let m = train_centroids(&ex).unwrap();
        assert_eq!(m.centroid("l").unwrap(), &mk(&[("a", 2.0), ("b", 1.0)]));
    }

    #[test]
    fn accuracy_counts() {
        let c = classification_counts(&["a", "a", "b", "c"], &["a", "b", "b", "a"]).unwrap();
        let p = c.pooled();
        assert_eq!((p.tp, p.fp, p.fn_), (2, 2, 2));
        assert!(classification_counts(&["a"], &[] as &[&str]).is_err());
    }

    #[test]
    fn similarity_examples() {
        let p1 = SimilarityParams::new(1.0).unwrap();
        let p2 = SimilarityParams::new(2.0).unwrap();
        assert_eq!(word_similarity("cat", "cat", &p1), 1.0);
        assert_eq!(word_similarity("cat", "cats", &p1), 0.5);
        assert_eq!(word_similarity("ab", "cd", &p2), 0.5);
        assert!(SimilarityParams::new(0.0).is_err());
        assert!(SimilarityParams::new(f64::NAN).is_err());
    }

    #[test]
    fn levenshtein_counts_graphemes() {
        assert_eq!(levenshtein(b"kitten", b"sitting"), 3);
        assert_eq!(Levenshtein.distance("e\u{301}a", "ea"), 1.0);
        assert_eq!(Levenshtein.distance("", "abc"), 3.0);
    }

    #[test]
    fn synonym_set_examples() {
        let p = SimilarityParams::new(1.0).unwrap();
        let sets = build_synonym_sets(&["cat", "cats", "dog"], &p, 0.5).unwrap();
        assert_eq!(sets, vec![vec!["cat".to_string(), "cats".into()], vec!["dog".into()]]);
        let singles = build_synonym_sets(&["cat", "cats", "dog"], &p, 1.0).unwrap();
        assert_eq!(singles.len(), 3);
        assert!(build_synonym_sets(&["a"], &p, 0.0).is_err());
    }

    fn arb_words() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec("[a-c]{1,4}", 0..12)
    }

    fn partition_of(sets: &[Vec<String>], words: &[String]) -> bool {
        let all: Vec<&String> = sets.iter().flatten().collect();
        let uniq: BTreeSet<&String> = all.iter().copied().collect();
        let expected: BTreeSet<&String> = words.iter().collect();
        all.len() == uniq.len() && uniq == expected
    }

    proptest! {
        #[test]
        fn synonym_sets_partition(words in arb_words(), tau in 0.05f64..=1.0, lo in 0.05f64..=1.0) {
            let p = SimilarityParams::new(1.0).unwrap();
            let fine = build_synonym_sets(&words, &p, tau.max(lo)).unwrap();
            let coarse = build_synonym_sets(&words, &p, tau.min(lo)).unwrap();
            prop_assert!(partition_of(&fine, &words));
            prop_assert!(partition_of(&coarse, &words));
            // every fine set sits inside one coarse set
            for s in &fine {
                prop_assert!(coarse.iter().any(|c| s.iter().all(|w| c.contains(w))));
            }
        }

        #[test]
        fn similarity_properties(a in "[a-d]{0,5}", b in "[a-d]{0,5}", alpha in 0.1f64..10.0) {
            let p = SimilarityParams::new(alpha).unwrap();
            let s = word_similarity(&a, &b, &p);
            prop_assert_eq!(s, word_similarity(&b, &a, &p));
            prop_assert!(s > 0.0 && s <= 1.0);
            prop_assert_eq!(s == 1.0, a == b);
        }

        #[test]
        fn idf_non_increasing(n in 1u64..50, df in 0u64..49) {
            prop_assume!(df < n);
            prop_assert!(idf(n, df + 1).unwrap() <= idf(n, df).unwrap());
        }

        #[test]
        fn tf_sums_to_one(doc in prop::collection::vec("[a-e]", 1..20)) {
            let idx = build_index(std::slice::from_ref(&doc)).unwrap();
            let len = doc.len() as u64;
            let total: f64 = idx.vocabulary().iter()
                .map(|t| tf(doc.iter().filter(|d| *d == t).count() as u64, len).unwrap())
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn classify_scale_invariant(ws in prop::collection::vec(-2.0f64..2.0, 4), c in 0.01f64..100.0) {
            let (_, model, _) = topic_model();
            let terms = ["goal", "market", "bank", "striker"];
            let v = DocVector { weights: terms.iter().zip(&ws).map(|(t, w)| (t.to_string(), *w)).collect() };
            prop_assert_eq!(classify_vector(&model, &v), classify_vector(&model, &v.scaled(c)));
        }
    }
}
