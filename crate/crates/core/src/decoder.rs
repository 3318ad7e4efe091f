//! Greedy decoding outward from the predicate.
//!
//! The predicate position is classified first. The left scan then walks from
//! the predicate towards the sentence start and stops at the first `<BOA>`;
//! the right scan mirrors it and stops at the first `<EOA>`. A tag of the
//! wrong direction counts as `_` and the scan continues.

use std::collections::BTreeMap;

use crate::conll::{extract_instances, Corpus};
use crate::embedding::ExternalVectors;
use crate::error::{Error, Result};
use crate::model::{Mode, PredictionMatrix, SrlModel};
use crate::numerics::tensor::argmax;
use crate::tags::{is_argument, LabelSet, NULL_LABEL};

/// Arguments of one predicate: token index to label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ArgumentSet {
    pub sentence_id: usize,
    pub predicate_index: usize,
    pub args: BTreeMap<usize, String>,
}

impl ArgumentSet {
    pub fn new(sentence_id: usize, predicate_index: usize) -> Self {
        ArgumentSet {
            sentence_id,
            predicate_index,
            args: BTreeMap::new(),
        }
    }

    /// Collects the argument labels of a label sequence; tags and `_` are
    /// skipped.
    pub fn from_labels(sentence_id: usize, predicate_index: usize, labels: &[String]) -> Self {
        let args = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| is_argument(l))
            .map(|(i, l)| (i, l.clone()))
            .collect();
        ArgumentSet {
            sentence_id,
            predicate_index,
            args,
        }
    }

    pub fn len(&self) -> usize {
        self.args.len()
    }

    pub fn is_empty(&self) -> bool {
        self.args.is_empty()
    }

    /// Label sequence of length `n`: argument labels, `_` elsewhere.
    pub fn to_labels(&self, n: usize) -> Vec<String> {
        let mut out = vec![NULL_LABEL.to_string(); n];
        for (&i, l) in &self.args {
            out[i] = l.clone();
        }
        out
    }
}

/// Applies the scan rules to per-position label indices.
pub fn scan_arguments(
    best: &[usize],
    labels: &LabelSet,
    predicate_index: usize,
    use_aux_tags: bool,
) -> BTreeMap<usize, String> {
    let mut args = BTreeMap::new();
    let mut record = |i: usize, l: usize| {
        let name = labels.label(l);
        if is_argument(name) {
            args.insert(i, name.to_string());
        }
    };
    if !use_aux_tags {
        for (i, &l) in best.iter().enumerate() {
            record(i, l);
        }
        return args;
    }
    record(predicate_index, best[predicate_index]);
    for i in (0..predicate_index).rev() {
        if best[i] == LabelSet::BOA {
            break;
        }
        record(i, best[i]);
    }
    for (i, &l) in best.iter().enumerate().skip(predicate_index + 1) {
        if l == LabelSet::EOA {
            break;
        }
        record(i, l);
    }
    args
}

/// Per-row argmax. Without tags the two boundary columns are never chosen.
pub fn best_labels(pred: &PredictionMatrix, use_aux_tags: bool) -> Vec<usize> {
    let probs = pred.probs();
    (0..pred.len())
        .map(|i| {
            let row = probs.row(i);
            if use_aux_tags {
                argmax(row)
            } else {
                let mut masked = row.to_vec();
                masked[LabelSet::BOA] = f64::NEG_INFINITY;
                masked[LabelSet::EOA] = f64::NEG_INFINITY;
                argmax(&masked)
            }
        })
        .collect()
}

pub fn decode(
    pred: &PredictionMatrix,
    labels: &LabelSet,
    sentence_id: usize,
    predicate_index: usize,
    use_aux_tags: bool,
) -> Result<ArgumentSet> {
    if pred.width() != labels.len() {
        return Err(Error::Shape(format!(
            "prediction width {} for {} labels",
            pred.width(),
            labels.len()
        )));
    }
    if predicate_index >= pred.len() {
        return Err(Error::Invalid(format!(
            "predicate {} outside {} rows",
            predicate_index,
            pred.len()
        )));
    }
    // Re-validate in case the matrix was built from raw parts.
    let pred = PredictionMatrix::new(pred.probs().clone())?;
    let best = best_labels(&pred, use_aux_tags);
    Ok(ArgumentSet {
        sentence_id,
        predicate_index,
        args: scan_arguments(&best, labels, predicate_index, use_aux_tags),
    })
}

/// Gold argument sets of every predicate, in corpus order.
pub fn gold_argument_sets(corpus: &Corpus) -> Vec<ArgumentSet> {
    extract_instances(corpus)
        .iter()
        .map(|inst| ArgumentSet::from_labels(inst.sentence_id, inst.predicate_index, &inst.gold_labels))
        .collect()
}

/// Decodes every predicate of `corpus` with `model`, in corpus order.
pub fn predict_arguments(
    model: &SrlModel,
    corpus: &Corpus,
    external: Option<&ExternalVectors>,
) -> Result<Vec<ArgumentSet>> {
    extract_instances(corpus)
        .iter()
        .map(|inst| {
            let pred = model.forward(inst, external, Mode::Eval)?;
            decode(&pred, &model.labels, inst.sentence_id, inst.predicate_index, model.config.use_aux_tags)
        })
        .collect()
}

/// Writes decoded arguments into the argument columns of a copy of
/// `corpus`. Boundary tags never reach the output.
pub fn predict_corpus(
    model: &SrlModel,
    corpus: &Corpus,
    external: Option<&ExternalVectors>,
) -> Result<Corpus> {
    if let Some(unknown) = corpus
        .label_inventory
        .arguments()
        .iter()
        .find(|l| !model.labels.contains(l))
    {
        return Err(Error::Labels(format!(
            "corpus label {} is not in the model's inventory",
            unknown
        )));
    }
    let predicted = predict_arguments(model, corpus, external)?;
    Ok(write_arguments(corpus, &predicted))
}

/// Replaces argument columns with the given sets, matched by
/// (sentence, predicate).
pub fn write_arguments(corpus: &Corpus, sets: &[ArgumentSet]) -> Corpus {
    let mut sentences = corpus.sentences.clone();
    for set in sets {
        let sentence = &mut sentences[set.sentence_id];
        let frame = sentence
            .predicate_indices
            .iter()
            .position(|&p| p == set.predicate_index)
            .expect("argument set refers to a predicate of the sentence");
        let labels = set.to_labels(sentence.len());
        sentence.set_frame_labels(frame, &labels);
    }
    Corpus::new(sentences)
}
