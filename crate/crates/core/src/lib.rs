//! Dependency-based semantic role labeling with argument boundary tags.
//!
//! The pipeline reads CoNLL-2009 style corpora ([`conll`]), marks the span
//! around each predicate's arguments with `<BOA>`/`<EOA>` ([`tags`]), encodes
//! tokens with a stacked BiLSTM and multi-hop self-attention ([`encoder`]),
//! trains a per-token softmax labeler ([`model`], [`train`]) and decodes
//! greedily outward from the predicate until a boundary tag is predicted
//! ([`decoder`]).

pub mod config;
pub mod conll;
pub mod decoder;
pub mod embedding;
pub mod encoder;
pub mod error;
pub mod gradcheck;
pub mod model;
pub mod numerics;
pub mod scorer;
pub mod synth;
pub mod tags;
pub mod train;

pub use config::{LossWindow, TrainConfig};
pub use conll::{extract_instances, parse_corpus, serialize_corpus, Corpus, FormatConfig, PredicateInstance, Sentence, Token};
pub use decoder::{decode, predict_corpus, ArgumentSet};
pub use error::{Error, Result};
pub use model::{compute_loss, Mode, PredictionMatrix, SrlModel};
pub use scorer::{evaluate, EvalReport};
pub use tags::{augment_labels, compute_label_stats, strip_tags, LabelSet, LabelStats, StatsScope};
pub use train::{train, Dataset, EpochRecord, TrainOutcome};
