//! Sequence labeling and text analysis toolkit.
//!
//! - [`corpus`]: corpus formats, BMES and BIO encodings
//! - [`hmm_seg`]: Poisson MLE, HMM training and Viterbi word segmentation
//! - [`seqmodel`]: maximum-entropy classifier and linear-chain CRF
//! - [`dcnn`]: a small convolutional network engine with backpropagation
//! - [`ner`]: windowed convolutional NER with an optional CRF decoding layer
//! - [`classify`]: TF-IDF, nearest-centroid classification, word similarity
//! - [`metrics`]: P/R/F, ROUGE-L, BLEU and report rendering

pub mod classify;
pub mod corpus;
pub mod dcnn;
pub mod hmm_seg;
pub mod metrics;
pub mod ner;
pub mod seqmodel;
