//! Corpus ingestion and tag encodings.
//!
//! Three on-disk formats are supported, all UTF-8:
//!
//! - **segmented**: one sentence per line, tokens separated by single spaces.
//! - **tagged**: one `unit<TAB>label` pair per line, blank line between sentences.
//! - **labeled**: one document per line as `id<TAB>label<TAB>text`.
//!
//! Segmentation is reduced to character tagging with the BMES scheme and
//! entity spans are carried as BIO labels. Both decoders are total: ill-formed
//! label runs are repaired rather than rejected.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;
use unicode_segmentation::UnicodeSegmentation;

/// Token separator of the segmented format.
pub const TOKEN_SEPARATOR: char = ' ';

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: label {label:?} is not in the tag inventory")]
    UnknownLabel { line: usize, label: String },
    #[error("empty token")]
    EmptyToken,
    #[error("token {0:?} contains the separator character")]
    SeparatorInToken(String),
    #[error("units and labels differ in length ({units} vs {labels})")]
    LengthMismatch { units: usize, labels: usize },
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// Splits text into extended grapheme clusters.
pub fn graphemes(text: &str) -> Vec<String> {
    text.graphemes(true).map(str::to_owned).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub label: Option<String>,
}

/// A sentence as an ordered list of words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SegmentedSentence {
    tokens: Vec<String>,
}

impl SegmentedSentence {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        for t in &tokens {
            if t.is_empty() {
                return Err(CorpusError::EmptyToken);
            }
            if t.contains(TOKEN_SEPARATOR) {
                return Err(CorpusError::SeparatorInToken(t.clone()));
            }
        }
        Ok(SegmentedSentence { tokens })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// The raw sentence with separators removed.
    pub fn concat(&self) -> String {
        self.tokens.concat()
    }

    /// Grapheme offsets `(start, end)` of every token.
    pub fn spans(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.tokens.len());
        let mut pos = 0;
        for t in &self.tokens {
            let n = t.graphemes(true).count();
            out.push((pos, pos + n));
            pos += n;
        }
        out
    }
}

impl fmt::Display for SegmentedSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

/// Observation units paired one-to-one with labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    pub units: Vec<String>,
    pub labels: Vec<String>,
}

impl TaggedSentence {
    pub fn new(units: Vec<String>, labels: Vec<String>) -> Result<Self> {
        if units.len() != labels.len() {
            return Err(CorpusError::LengthMismatch {
                units: units.len(),
                labels: labels.len(),
            });
        }
        Ok(TaggedSentence { units, labels })
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Bmes,
    Bio,
}

/// A tag scheme together with its label inventory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagScheme {
    pub kind: SchemeKind,
    labels: Vec<String>,
}

pub const BMES_LABELS: [&str; 4] = ["B", "M", "E", "S"];

impl TagScheme {
    pub fn bmes() -> Self {
        TagScheme {
            kind: SchemeKind::Bmes,
            labels: BMES_LABELS.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// `O` followed by `B-t`, `I-t` for each entity type in sorted order.
    pub fn bio<S: AsRef<str>>(types: &[S]) -> Self {
        let types: BTreeSet<&str> = types.iter().map(|t| t.as_ref()).collect();
        let mut labels = vec!["O".to_string()];
        for t in types {
            labels.push(format!("B-{t}"));
            labels.push(format!("I-{t}"));
        }
        TagScheme {
            kind: SchemeKind::Bio,
            labels,
        }
    }

    /// BIO scheme covering every entity type that occurs in `corpus`.
    pub fn bio_from_corpus(corpus: &[TaggedSentence]) -> Self {
        let types: BTreeSet<&str> = corpus
            .iter()
            .flat_map(|s| s.labels.iter())
            .filter_map(|l| bio_parts(l).map(|(_, t)| t))
            .collect();
        let types: Vec<&str> = types.into_iter().collect();
        Self::bio(&types)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Entity types of a BIO scheme, in inventory order.
    pub fn entity_types(&self) -> Vec<String> {
        self.labels
            .iter()
            .filter_map(|l| l.strip_prefix("B-").map(str::to_owned))
            .collect()
    }
}

/// Splits `B-PER` into `('B', "PER")`. `O` and malformed labels yield `None`.
pub fn bio_parts(label: &str) -> Option<(char, &str)> {
    let (prefix, ty) = label.split_once('-')?;
    match prefix {
        "B" if !ty.is_empty() => Some(('B', ty)),
        "I" if !ty.is_empty() => Some(('I', ty)),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusKind {
    Segmented,
    Tagged,
    Labeled,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Corpus {
    Segmented(Vec<SegmentedSentence>),
    Tagged(Vec<TaggedSentence>),
    Labeled(Vec<Document>),
}

impl Corpus {
    pub fn len(&self) -> usize {
        match self {
            Corpus::Segmented(v) => v.len(),
            Corpus::Tagged(v) => v.len(),
            Corpus::Labeled(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads a corpus of the given kind. Tagged labels are not checked against an
/// inventory here; use [`load_tagged`] for that.
pub fn load_corpus(path: &Path, kind: CorpusKind) -> Result<Corpus> {
    let text = read_text(path)?;
    Ok(match kind {
        CorpusKind::Segmented => Corpus::Segmented(parse_segmented(&text)?),
        CorpusKind::Tagged => Corpus::Tagged(parse_tagged(&text, None)?),
        CorpusKind::Labeled => Corpus::Labeled(parse_labeled(&text, false)?),
    })
}

pub fn load_segmented(path: &Path) -> Result<Vec<SegmentedSentence>> {
    parse_segmented(&read_text(path)?)
}

pub fn load_tagged(path: &Path, scheme: Option<&TagScheme>) -> Result<Vec<TaggedSentence>> {
    parse_tagged(&read_text(path)?, scheme)
}

pub fn load_labeled(path: &Path, allow_empty_text: bool) -> Result<Vec<Document>> {
    parse_labeled(&read_text(path)?, allow_empty_text)
}

fn strip_cr(line: &str) -> &str {
    line.strip_suffix('\r').unwrap_or(line)
}

pub fn parse_segmented(text: &str) -> Result<Vec<SegmentedSentence>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_cr(raw);
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<String> = line.split(TOKEN_SEPARATOR).map(str::to_owned).collect();
        if tokens.iter().any(|t| t.is_empty()) {
            return Err(CorpusError::Malformed {
                line: i + 1,
                message: "empty token (leading, trailing or doubled space)".into(),
            });
        }
        if let Some(t) = tokens.iter().find(|t| t.contains('\t')) {
            return Err(CorpusError::Malformed {
                line: i + 1,
                message: format!("tab inside token {t:?}"),
            });
        }
        out.push(SegmentedSentence { tokens });
    }
    Ok(out)
}

pub fn parse_tagged(text: &str, scheme: Option<&TagScheme>) -> Result<Vec<TaggedSentence>> {
    let mut out = Vec::new();
    let mut units = Vec::new();
    let mut labels = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_cr(raw);
        let lineno = i + 1;
        if line.trim().is_empty() {
            if !units.is_empty() {
                out.push(TaggedSentence {
                    units: std::mem::take(&mut units),
                    labels: std::mem::take(&mut labels),
                });
            }
            continue;
        }
        let mut cols = line.split('\t');
        let (unit, label) = match (cols.next(), cols.next(), cols.next()) {
            (Some(u), Some(l), None) => (u, l),
            _ => {
                return Err(CorpusError::Malformed {
                    line: lineno,
                    message: "expected `unit<TAB>label`".into(),
                })
            }
        };
        if unit.is_empty() || label.is_empty() || label.chars().any(char::is_whitespace) {
            return Err(CorpusError::Malformed {
                line: lineno,
                message: "empty unit or label, or whitespace inside label".into(),
            });
        }
        if let Some(s) = scheme {
            if !s.contains(label) {
                return Err(CorpusError::UnknownLabel {
                    line: lineno,
                    label: label.to_owned(),
                });
            }
        }
        units.push(unit.to_owned());
        labels.push(label.to_owned());
    }
    if !units.is_empty() {
        out.push(TaggedSentence { units, labels });
    }
    Ok(out)
}

pub fn parse_labeled(text: &str, allow_empty_text: bool) -> Result<Vec<Document>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_cr(raw);
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.splitn(3, '\t');
        let (id, label, body) = match (cols.next(), cols.next(), cols.next()) {
            (Some(id), Some(label), Some(body)) => (id, label, body),
            _ => {
                return Err(CorpusError::Malformed {
                    line: lineno,
                    message: "expected `id<TAB>label<TAB>text`".into(),
                })
            }
        };
        if body.contains('\t') {
            return Err(CorpusError::Malformed {
                line: lineno,
                message: "tab inside document text".into(),
            });
        }
        if id.is_empty() {
            return Err(CorpusError::Malformed {
                line: lineno,
                message: "empty document id".into(),
            });
        }
        if !seen.insert(id.to_owned()) {
            return Err(CorpusError::Malformed {
                line: lineno,
                message: format!("duplicate document id {id:?}"),
            });
        }
        if body.trim().is_empty() && !allow_empty_text {
            return Err(CorpusError::Malformed {
                line: lineno,
                message: "empty document text".into(),
            });
        }
        out.push(Document {
            id: id.to_owned(),
            text: body.to_owned(),
            label: (!label.is_empty()).then(|| label.to_owned()),
        });
    }
    Ok(out)
}

/// Renders sentences in the tagged format.
pub fn format_tagged(sentences: &[TaggedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        for (u, l) in s.units.iter().zip(&s.labels) {
            out.push_str(u);
            out.push('\t');
            out.push_str(l);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// Character-level BMES encoding of a segmented sentence.
pub fn encode_bmes(s: &SegmentedSentence) -> Result<TaggedSentence> {
    let mut units = Vec::new();
    let mut labels = Vec::new();
    for tok in &s.tokens {
        let chars = graphemes(tok);
        match chars.len() {
            0 => return Err(CorpusError::EmptyToken),
            1 => labels.push("S".to_string()),
            k => {
                labels.push("B".to_string());
                labels.extend(std::iter::repeat_n("M".to_string(), k - 2));
                labels.push("E".to_string());
            }
        }
        units.extend(chars);
    }
    Ok(TaggedSentence { units, labels })
}

/// Inverse of [`encode_bmes`].
///
/// Decoding runs left to right: `M` or `E` with no open word opens one, a word
/// still open at the end is closed, and any label outside BMES acts as `S`.
pub fn decode_bmes(t: &TaggedSentence) -> SegmentedSentence {
    let mut tokens = Vec::new();
    let mut open: Option<String> = None;
    for (unit, label) in t.units.iter().zip(&t.labels) {
        match label.as_str() {
            "B" => {
                if let Some(w) = open.take() {
                    tokens.push(w);
                }
                open = Some(unit.clone());
            }
            "M" => open.get_or_insert_with(String::new).push_str(unit),
            "E" => {
                let mut w = open.take().unwrap_or_default();
                w.push_str(unit);
                tokens.push(w);
            }
            _ => {
                if let Some(w) = open.take() {
                    tokens.push(w);
                }
                tokens.push(unit.clone());
            }
        }
    }
    if let Some(w) = open {
        tokens.push(w);
    }
    SegmentedSentence { tokens }
}

/// A typed entity span over unit positions; `end` is exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub kind: String,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, kind: impl Into<String>) -> Self {
        EntitySpan {
            start,
            end,
            kind: kind.into(),
        }
    }

    pub fn overlaps(&self, other: &EntitySpan) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn same_bounds(&self, other: &EntitySpan) -> bool {
        self.start == other.start && self.end == other.end
    }
}

/// Extracts maximal `B-t I-t*` runs. A stray `I-t` opens a new span.
pub fn decode_spans<S: AsRef<str>>(labels: &[S]) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut open: Option<EntitySpan> = None;
    for (i, label) in labels.iter().enumerate() {
        match bio_parts(label.as_ref()) {
            Some(('I', ty)) if open.as_ref().is_some_and(|s| s.kind == ty) => {
                if let Some(s) = open.as_mut() {
                    s.end = i + 1;
                }
            }
            Some((_, ty)) => {
                spans.extend(open.take());
                open = Some(EntitySpan::new(i, i + 1, ty));
            }
            None => spans.extend(open.take()),
        }
    }
    spans.extend(open);
    spans
}

/// BIO labels for sorted, non-overlapping spans over a sentence of `len` units.
pub fn encode_spans(len: usize, spans: &[EntitySpan]) -> Vec<String> {
    let mut labels = vec!["O".to_string(); len];
    for s in spans {
        for (k, slot) in labels[s.start..s.end].iter_mut().enumerate() {
            *slot = if k == 0 {
                format!("B-{}", s.kind)
            } else {
                format!("I-{}", s.kind)
            };
        }
    }
    labels
}
