//! Self-describing model files.
//!
//! ```text
//! NLPKIT-MODEL
//! version 1
//! kind <hmm|maxent|crf|ner|centroid>
//! payload <byte length>
//! <payload: line-oriented text, floats at 17 significant digits>
//! checksum <crc32 of every preceding byte, 8 hex digits>
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nlpkit::classify::{CentroidModel, DocVector, TfIdfIndex};
use nlpkit::corpus::{bio_parts, TagScheme};
use nlpkit::dcnn::{Activation, Layer, Network, Tensor};
use nlpkit::hmm_seg::{HmmModel, UnkPolicy};
use nlpkit::ner::NerModel;
use nlpkit::seqmodel::{CrfModel, FeatureTemplate, MaxEntModel, SequenceModel};
use thiserror::Error;

use crate::atomic_write;

pub const MAGIC: &str = "NLPKIT-MODEL";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {found} (expected {FORMAT_VERSION})")]
    UnsupportedVersion { found: String },
    #[error("checksum failure: {0}")]
    Checksum(&'static str),
    #[error("expected a {expected} model, found {found}")]
    KindMismatch { expected: String, found: String },
    #[error("payload line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("invalid model: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, ModelIoError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Hmm,
    MaxEnt,
    Crf,
    Ner,
    Centroid,
}

impl ModelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Hmm => "hmm",
            ModelKind::MaxEnt => "maxent",
            ModelKind::Crf => "crf",
            ModelKind::Ner => "ner",
            ModelKind::Centroid => "centroid",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        [
            ModelKind::Hmm,
            ModelKind::MaxEnt,
            ModelKind::Crf,
            ModelKind::Ner,
            ModelKind::Centroid,
        ]
        .into_iter()
        .find(|k| k.tag() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentroidBundle {
    pub index: TfIdfIndex,
    pub model: CentroidModel,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Hmm(HmmModel),
    MaxEnt(MaxEntModel),
    Crf(CrfModel),
    Ner(NerModel),
    Centroid(CentroidBundle),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Hmm(_) => ModelKind::Hmm,
            Model::MaxEnt(_) => ModelKind::MaxEnt,
            Model::Crf(_) => ModelKind::Crf,
            Model::Ner(_) => ModelKind::Ner,
            Model::Centroid(_) => ModelKind::Centroid,
        }
    }
}

impl From<SequenceModel> for Model {
    fn from(m: SequenceModel) -> Self {
        match m {
            SequenceModel::MaxEnt(m) => Model::MaxEnt(m),
            SequenceModel::Crf(m) => Model::Crf(m),
        }
    }
}

/// A model plus free-form metadata such as the training seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub meta: BTreeMap<String, String>,
    pub model: Model,
}

impl ModelFile {
    pub fn new(model: Model) -> Self {
        ModelFile {
            meta: BTreeMap::new(),
            model,
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_owned(), value.to_string());
        self
    }
}

fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // `inf`, `-inf` and `NaN` parse back through `f64::from_str`
        x.to_string()
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> std::result::Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('t') => out.push('\t'),
            other => return Err(format!("bad escape {other:?}")),
        }
    }
    Ok(out)
}

#[derive(Default)]
struct Writer {
    out: String,
}

impl Writer {
    fn scalar(&mut self, name: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.out, "{name} {value}");
    }

    fn float(&mut self, name: &str, value: f64) {
        self.scalar(name, fmt_float(value));
    }

    fn strings<S: AsRef<str>>(&mut self, name: &str, items: &[S]) {
        self.scalar(name, items.len());
        for s in items {
            self.out.push_str(&escape(s.as_ref()));
            self.out.push('\n');
        }
    }

    fn values(&mut self, data: &[f64]) {
        for v in data {
            self.out.push_str(&fmt_float(*v));
            self.out.push('\n');
        }
    }

    fn floats(&mut self, name: &str, data: &[f64]) {
        self.scalar(name, data.len());
        self.values(data);
    }

    fn matrix(&mut self, name: &str, rows: usize, cols: usize, data: &[f64]) {
        let _ = writeln!(self.out, "{name} {rows} {cols}");
        self.values(data);
    }

    fn table(&mut self, name: &str, rows: &[Vec<f64>]) {
        let cols = rows.first().map_or(0, Vec::len);
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        self.matrix(name, rows.len(), cols, &flat);
    }

    fn tensor(&mut self, name: &str, t: &Tensor) {
        let dims: Vec<String> = t.shape().iter().map(|d| d.to_string()).collect();
        let _ = writeln!(self.out, "tensor {name} {} {}", dims.len(), dims.join(" "));
        self.values(t.data());
    }
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            lines: text.lines().enumerate(),
            line: 0,
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(ModelIoError::Format {
            line: self.line,
            message: message.into(),
        })
    }

    fn next_line(&mut self) -> Result<&'a str> {
        match self.lines.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => {
                self.line += 1;
                self.err("unexpected end of payload")
            }
        }
    }

    fn header(&mut self, name: &str) -> Result<Vec<&'a str>> {
        let line = self.next_line()?;
        let mut parts = line.split(' ');
        if parts.next() != Some(name) {
            return self.err(format!("expected {name:?}, found {line:?}"));
        }
        Ok(parts.collect())
    }

    fn parse<T: FromStr>(&self, s: &str) -> Result<T> {
        s.parse().or_else(|_| self.err(format!("cannot parse {s:?}")))
    }

    fn scalar<T: FromStr>(&mut self, name: &str) -> Result<T> {
        let parts = self.header(name)?;
        match parts[..] {
            [v] => self.parse(v),
            _ => self.err(format!("{name} takes one value")),
        }
    }

    fn float(&mut self, name: &str) -> Result<f64> {
        self.scalar(name)
    }

    fn strings(&mut self, name: &str) -> Result<Vec<String>> {
        let n: usize = self.scalar(name)?;
        (0..n)
            .map(|_| {
                let l = self.next_line()?;
                unescape(l).or_else(|e| self.err(e))
            })
            .collect()
    }

    fn values(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n)
            .map(|_| {
                let l = self.next_line()?;
                self.parse(l)
            })
            .collect()
    }

    fn floats(&mut self, name: &str) -> Result<Vec<f64>> {
        let n: usize = self.scalar(name)?;
        self.values(n)
    }

    fn matrix(&mut self, name: &str) -> Result<(usize, usize, Vec<f64>)> {
        let parts = self.header(name)?;
        let [r, c] = parts[..] else {
            return self.err(format!("{name} needs rows and columns"));
        };
        let (r, c): (usize, usize) = (self.parse(r)?, self.parse(c)?);
        let data = self.values(r * c)?;
        Ok((r, c, data))
    }

    fn table(&mut self, name: &str) -> Result<Vec<Vec<f64>>> {
        let (_, c, data) = self.matrix(name)?;
        if c == 0 {
            return Ok(Vec::new());
        }
        Ok(data.chunks(c).map(<[f64]>::to_vec).collect())
    }

    fn tensor(&mut self, name: &str) -> Result<Tensor> {
        let parts = self.header("tensor")?;
        if parts.first() != Some(&name) || parts.len() < 2 {
            return self.err(format!("expected tensor {name}"));
        }
        let rank: usize = self.parse(parts[1])?;
        if parts.len() != rank + 2 {
            return self.err("tensor rank does not match dimensions");
        }
        let shape = parts[2..]
            .iter()
            .map(|d| self.parse(d))
            .collect::<Result<Vec<usize>>>()?;
        let data = self.values(shape.iter().product())?;
        Tensor::new(shape, data).or_else(|e| self.err(e.to_string()))
    }

    fn finish(&mut self) -> Result<()> {
        if let Some((i, l)) = self.lines.next() {
            self.line = i + 1;
            return self.err(format!("trailing data {l:?}"));
        }
        Ok(())
    }
}

fn invalid(e: impl std::fmt::Display) -> ModelIoError {
    ModelIoError::Invalid(e.to_string())
}

fn write_payload(file: &ModelFile) -> String {
    let mut w = Writer::default();
    w.scalar("meta", file.meta.len());
    for (k, v) in &file.meta {
        let _ = writeln!(w.out, "{} {}", escape(k).replace(' ', "_"), escape(v));
    }
    match &file.model {
        Model::Hmm(m) => {
            w.strings("states", &m.states);
            w.strings("vocab", &m.vocab);
            w.float("alpha", m.smoothing_alpha);
            w.scalar("unk", m.unk_policy.name());
            w.floats("log_pi", &m.log_pi);
            w.table("log_trans", &m.log_trans);
            w.table("log_emit", &m.log_emit);
        }
        Model::MaxEnt(m) => {
            w.strings("labels", &m.labels);
            let ids: Vec<String> = m.templates.iter().map(FeatureTemplate::id).collect();
            w.strings("templates", &ids);
            w.strings("features", &m.features);
            w.matrix("weights", m.features.len(), m.labels.len(), &m.weights);
        }
        Model::Crf(m) => {
            w.strings("labels", &m.labels);
            let ids: Vec<String> = m.templates.iter().map(FeatureTemplate::id).collect();
            w.strings("templates", &ids);
            w.strings("features", &m.features);
            w.matrix("emission", m.features.len(), m.labels.len(), &m.emission);
            w.table("transitions", &m.transitions);
            w.float("l2", m.l2);
        }
        Model::Ner(m) => {
            w.scalar("window", m.window());
            w.strings("labels", m.scheme().labels());
            w.strings("vocab", m.vocab());
            match m.transitions() {
                Some(t) => {
                    w.scalar("crf", 1);
                    w.table("transitions", t);
                }
                None => w.scalar("crf", 0),
            }
            let layers = m.net().layers();
            w.scalar("layers", layers.len());
            for layer in layers {
                match layer {
                    Layer::Embedding { table } => {
                        w.scalar("layer", "embedding");
                        w.tensor("table", table);
                    }
                    Layer::Conv1d {
                        stride,
                        padding,
                        weights,
                        bias,
                    } => {
                        w.scalar("layer", "conv1d");
                        w.scalar("stride", stride);
                        w.scalar("padding", padding);
                        w.tensor("weights", weights);
                        w.tensor("bias", bias);
                    }
                    Layer::MaxPool1d { window, stride } => {
                        w.scalar("layer", "maxpool1d");
                        w.scalar("window", window);
                        w.scalar("stride", stride);
                    }
                    Layer::Dense { weights, bias } => {
                        w.scalar("layer", "dense");
                        w.tensor("weights", weights);
                        w.tensor("bias", bias);
                    }
                    Layer::Activation(a) => {
                        w.scalar("layer", "activation");
                        w.scalar("function", a.name());
                    }
                }
            }
        }
        Model::Centroid(b) => {
            w.strings("vocabulary", b.index.vocabulary());
            w.scalar("doc_count", b.index.doc_count());
            let df: Vec<String> = b.index.doc_freqs().iter().map(u64::to_string).collect();
            w.strings("doc_freq", &df);
            w.strings("labels", b.model.labels());
            for c in b.model.centroids() {
                w.scalar("centroid", c.weights.len());
                for (t, v) in &c.weights {
                    let _ = writeln!(w.out, "{}\t{}", escape(t), fmt_float(*v));
                }
            }
        }
    }
    w.out
}

fn templates(r: &Reader, ids: Vec<String>) -> Result<Vec<FeatureTemplate>> {
    ids.iter()
        .map(|s| FeatureTemplate::parse(s).or_else(|e| r.err(e.to_string())))
        .collect()
}

fn read_payload(kind: ModelKind, text: &str) -> Result<ModelFile> {
    let mut r = Reader::new(text);
    let n: usize = r.scalar("meta")?;
    let mut meta = BTreeMap::new();
    for _ in 0..n {
        let line = r.next_line()?;
        let Some((k, v)) = line.split_once(' ') else {
            return r.err("meta entry needs a key and a value");
        };
        let v = unescape(v).or_else(|e| r.err(e))?;
        meta.insert(k.to_owned(), v);
    }
    let model = match kind {
        ModelKind::Hmm => {
            let states = r.strings("states")?;
            let vocab = r.strings("vocab")?;
            let alpha = r.float("alpha")?;
            let unk: String = r.scalar("unk")?;
            let unk = UnkPolicy::from_name(&unk).map_or_else(|| r.err(format!("unknown policy {unk:?}")), Ok)?;
            let log_pi = r.floats("log_pi")?;
            let log_trans = r.table("log_trans")?;
            let log_emit = r.table("log_emit")?;
            Model::Hmm(HmmModel::from_parts(states, vocab, log_pi, log_trans, log_emit, alpha, unk).map_err(invalid)?)
        }
        ModelKind::MaxEnt | ModelKind::Crf => {
            let labels = r.strings("labels")?;
            let ids = r.strings("templates")?;
            let templates = templates(&r, ids)?;
            let features = r.strings("features")?;
            let check = |rows: usize, cols: usize| {
                if rows != features.len() || cols != labels.len() {
                    Err(invalid("weight matrix shape"))
                } else {
                    Ok(())
                }
            };
            if kind == ModelKind::MaxEnt {
                let (rows, cols, weights) = r.matrix("weights")?;
                check(rows, cols)?;
                Model::MaxEnt(MaxEntModel {
                    labels,
                    templates,
                    features,
                    weights,
                })
            } else {
                let (rows, cols, emission) = r.matrix("emission")?;
                check(rows, cols)?;
                let transitions = r.table("transitions")?;
                if transitions.len() != labels.len() || transitions.iter().any(|t| t.len() != labels.len()) {
                    return Err(invalid("transition matrix shape"));
                }
                let l2 = r.float("l2")?;
                Model::Crf(CrfModel {
                    labels,
                    templates,
                    features,
                    emission,
                    transitions,
                    l2,
                })
            }
        }
        ModelKind::Ner => {
            let window: usize = r.scalar("window")?;
            let labels = r.strings("labels")?;
            let types: Vec<&str> = labels.iter().filter_map(|l| bio_parts(l).map(|(_, t)| t)).collect();
            let scheme = TagScheme::bio(&types);
            if scheme.labels() != labels.as_slice() {
                return Err(invalid("label inventory is not a BIO scheme"));
            }
            let vocab = r.strings("vocab")?;
            let crf: u8 = r.scalar("crf")?;
            let transitions = match crf {
                0 => None,
                1 => Some(r.table("transitions")?),
                _ => return r.err("crf flag must be 0 or 1"),
            };
            let n: usize = r.scalar("layers")?;
            let mut layers = Vec::with_capacity(n);
            for _ in 0..n {
                let kind: String = r.scalar("layer")?;
                layers.push(match kind.as_str() {
                    "embedding" => Layer::Embedding {
                        table: r.tensor("table")?,
                    },
                    "conv1d" => Layer::Conv1d {
                        stride: r.scalar("stride")?,
                        padding: r.scalar("padding")?,
                        weights: r.tensor("weights")?,
                        bias: r.tensor("bias")?,
                    },
                    "maxpool1d" => Layer::MaxPool1d {
                        window: r.scalar("window")?,
                        stride: r.scalar("stride")?,
                    },
                    "dense" => Layer::Dense {
                        weights: r.tensor("weights")?,
                        bias: r.tensor("bias")?,
                    },
                    "activation" => {
                        let f: String = r.scalar("function")?;
                        Layer::Activation(
                            Activation::from_name(&f).map_or_else(|| r.err(format!("unknown activation {f:?}")), Ok)?,
                        )
                    }
                    other => return r.err(format!("unknown layer {other:?}")),
                });
            }
            let net = Network::new(vec![window], layers).map_err(invalid)?;
            Model::Ner(NerModel::from_parts(window, scheme, vocab, net, transitions).map_err(invalid)?)
        }
        ModelKind::Centroid => {
            let vocabulary = r.strings("vocabulary")?;
            let doc_count: u64 = r.scalar("doc_count")?;
            let df = r.strings("doc_freq")?;
            let doc_freq = df.iter().map(|s| r.parse(s)).collect::<Result<Vec<u64>>>()?;
            let index = TfIdfIndex::from_parts(vocabulary, doc_count, doc_freq).map_err(invalid)?;
            let labels = r.strings("labels")?;
            let mut centroids = Vec::with_capacity(labels.len());
            for _ in 0..labels.len() {
                let n: usize = r.scalar("centroid")?;
                let mut weights = BTreeMap::new();
                for _ in 0..n {
                    let line = r.next_line()?;
                    let Some((t, v)) = line.split_once('\t') else {
                        return r.err("centroid entry needs a term and a weight");
                    };
                    let t = unescape(t).or_else(|e| r.err(e))?;
                    weights.insert(t, r.parse(v)?);
                }
                centroids.push(DocVector { weights });
            }
            let model = CentroidModel::from_parts(labels, centroids).map_err(invalid)?;
            Model::Centroid(CentroidBundle { index, model })
        }
    };
    r.finish()?;
    Ok(ModelFile { meta, model })
}

pub fn encode(file: &ModelFile) -> Vec<u8> {
    let payload = write_payload(file);
    let mut out = format!(
        "{MAGIC}\nversion {FORMAT_VERSION}\nkind {}\npayload {}\n",
        file.model.kind().tag(),
        payload.len()
    );
    out.push_str(&payload);
    let crc = crc32fast::hash(out.as_bytes());
    let _ = writeln!(out, "checksum {crc:08x}");
    out.into_bytes()
}

/// Decodes a model file, optionally insisting on one of `expected` kinds.
pub fn decode(bytes: &[u8], expected: Option<&[ModelKind]>) -> Result<ModelFile> {
    let body_end = bytes
        .strip_suffix(b"\n")
        .and_then(|b| b.iter().rposition(|&c| c == b'\n').map(|i| i + 1))
        .ok_or(ModelIoError::Checksum("file truncated"))?;
    let (body, tail) = bytes.split_at(body_end);
    let stored = std::str::from_utf8(tail)
        .ok()
        .and_then(|t| t.strip_prefix("checksum "))
        .and_then(|t| t.strip_suffix('\n'))
        .filter(|h| h.len() == 8 && h.bytes().all(|c| matches!(c, b'0'..=b'9' | b'a'..=b'f')))
        .and_then(|h| u32::from_str_radix(h, 16).ok())
        .ok_or(ModelIoError::Checksum("missing checksum line, file truncated"))?;
    if crc32fast::hash(body) != stored {
        return Err(ModelIoError::Checksum("content does not match checksum"));
    }
    let body = std::str::from_utf8(body).map_err(|_| ModelIoError::BadMagic)?;
    let mut parts = body.splitn(5, '\n');
    if parts.next() != Some(MAGIC) {
        return Err(ModelIoError::BadMagic);
    }
    let version = parts.next().and_then(|l| l.strip_prefix("version ")).unwrap_or("?");
    if version != FORMAT_VERSION.to_string() {
        return Err(ModelIoError::UnsupportedVersion {
            found: version.to_owned(),
        });
    }
    let header_err = |m: &str| ModelIoError::Format {
        line: 0,
        message: m.to_owned(),
    };
    let tag = parts
        .next()
        .and_then(|l| l.strip_prefix("kind "))
        .ok_or_else(|| header_err("missing kind line"))?;
    let kind = ModelKind::from_tag(tag).ok_or_else(|| header_err("unknown model kind"))?;
    if let Some(allowed) = expected {
        if !allowed.contains(&kind) {
            let names: Vec<&str> = allowed.iter().map(|k| k.tag()).collect();
            return Err(ModelIoError::KindMismatch {
                expected: names.join(" or "),
                found: tag.to_owned(),
            });
        }
    }
    let len: usize = parts
        .next()
        .and_then(|l| l.strip_prefix("payload "))
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| header_err("missing payload length"))?;
    let payload = parts.next().unwrap_or("");
    if payload.len() != len {
        return Err(header_err("payload length does not match header"));
    }
    read_payload(kind, payload)
}

pub fn save_model(path: &Path, file: &ModelFile) -> Result<()> {
    atomic_write(path, &encode(file)).map_err(|source| ModelIoError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn load_model(path: &Path, expected: Option<&[ModelKind]>) -> Result<ModelFile> {
    let bytes = std::fs::read(path).map_err(|source| ModelIoError::Io {
        path: path.to_owned(),
        source,
    })?;
    decode(&bytes, expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nlpkit::classify::{build_index, train_centroids, vectorize};
    use nlpkit::corpus::{encode_bmes, parse_segmented, TaggedSentence};
    use nlpkit::dcnn::TrainConfig;
    use nlpkit::hmm_seg::train_hmm;
    use nlpkit::ner::{train_ner, NerArch, NerTrainConfig};
    use nlpkit::seqmodel::{train_sequence_model, ModelKind as SeqKind, TrainParams};
    use proptest::prelude::*;

    fn hmm_file() -> ModelFile {
        let seg = parse_segmented("ab c\nd ab\n").unwrap();
        let tagged: Vec<_> = seg.iter().map(|s| encode_bmes(s).unwrap()).collect();
        ModelFile::new(Model::Hmm(train_hmm(&tagged, 0.0).unwrap())).with_meta("seed", 7)
    }

    fn tagged() -> Vec<TaggedSentence> {
        let s = |u: &str, l: &str| {
            TaggedSentence::new(
                u.split(' ').map(String::from).collect(),
                l.split(' ').map(String::from).collect(),
            )
            .unwrap()
        };
        vec![
            s("mr smith met ms jones", "O B-PER O O B-PER"),
            s("in paris", "O B-LOC"),
        ]
    }

    fn all_files() -> Vec<ModelFile> {
        let params = TrainParams {
            epochs: 3,
            ..TrainParams::default()
        };
        let (me, _) = train_sequence_model(SeqKind::MaxEnt, &tagged(), &params).unwrap();
        let (crf, _) = train_sequence_model(SeqKind::Crf, &tagged(), &params).unwrap();
        let cfg = NerTrainConfig {
            train: TrainConfig {
                epochs: 2,
                ..TrainConfig::default()
            },
            arch: NerArch {
                embed_dim: 3,
                conv_channels: 2,
                use_crf: true,
                ..NerArch::default()
            },
        };
        let (ner, _) = train_ner(&tagged(), &cfg).unwrap();
        let docs = vec![vec!["a".to_string(), "b\tc".into()], vec!["a".into()]];
        let index = build_index(&docs).unwrap();
        let ex = vec![
            (vectorize(&index, &docs[0]), "x".to_string()),
            (vectorize(&index, &docs[1]), "y".to_string()),
        ];
        let model = train_centroids(&ex).unwrap();
        vec![
            hmm_file(),
            ModelFile::new(me.into()),
            ModelFile::new(crf.into()),
            ModelFile::new(Model::Ner(ner)).with_meta("note", "two words"),
            ModelFile::new(Model::Centroid(CentroidBundle { index, model })),
        ]
    }

    #[test]
    fn round_trip_is_bit_identical() {
        for f in all_files() {
            let bytes = encode(&f);
            let back = decode(&bytes, None).unwrap();
            assert_eq!(back, f, "{}", f.model.kind().tag());
            assert_eq!(encode(&back), bytes);
        }
    }

    #[test]
    fn negative_infinity_survives() {
        let f = hmm_file();
        let Model::Hmm(m) = &f.model else { unreachable!() };
        assert!(m.log_trans.iter().flatten().any(|v| *v == f64::NEG_INFINITY));
        let back = decode(&encode(&f), None).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn kind_is_enforced() {
        let bytes = encode(&hmm_file());
        let err = decode(&bytes, Some(&[ModelKind::Ner])).unwrap_err();
        assert!(matches!(err, ModelIoError::KindMismatch { .. }), "{err}");
    }

    #[test]
    fn version_mismatch_rejected() {
        let text = String::from_utf8(encode(&hmm_file())).unwrap();
        let body = text[..text.rfind("checksum").unwrap()].replacen("version 1", "version 2", 1);
        let bytes = format!("{body}checksum {:08x}\n", crc32fast::hash(body.as_bytes()));
        assert!(matches!(
            decode(bytes.as_bytes(), None),
            Err(ModelIoError::UnsupportedVersion { .. })
        ));
    }

    #[test]
    fn truncation_detected() {
        let bytes = encode(&hmm_file());
        for cut in [0, 1, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                matches!(decode(&bytes[..cut], None), Err(ModelIoError::Checksum(_))),
                "cut {cut}"
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn any_corrupt_byte_is_detected(pos in any::<prop::sample::Index>(), flip in 1u8..=255) {
            let mut bytes = encode(&hmm_file());
            let i = pos.index(bytes.len());
            bytes[i] ^= flip;
            prop_assert!(matches!(decode(&bytes, None), Err(ModelIoError::Checksum(_))));
        }
    }
}
