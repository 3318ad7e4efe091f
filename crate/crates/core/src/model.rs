//! The labeler: embeddings, encoder, optional attention fusion and a softmax
//! output layer, plus checkpoint persistence.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{LossWindow, TrainConfig};
use crate::conll::{PredicateInstance, Sentence};
use crate::embedding::{EmbeddingLayer, ExternalVectors, PretrainedVectors, VocabMaps, INIT_BOUND};
use crate::encoder::{attend, bilstm_encode, fuse, AttentionParams, BiLstmStack};
use crate::error::{Error, Result};
use crate::numerics::rng::{derive_rng, SeedRng};
use crate::numerics::tape::{softmax_rows, LOG_FLOOR};
use crate::numerics::{checkpoint, BoundParams, Gradients, ParamId, ParamStore, Tape, Tensor, Var};
use crate::tags::{tagged_span, LabelSet};

const INIT_STREAM: u64 = 0x1417;

/// Per-token label distributions, `n x |labels|`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    probs: Tensor,
}

impl PredictionMatrix {
    /// Wraps probabilities after checking every row is a distribution.
    pub fn new(probs: Tensor) -> Result<Self> {
        let (n, l) = probs.dims2()?;
        if n == 0 || l == 0 {
            return Err(Error::Shape(format!("prediction matrix of shape {:?}", probs.shape())));
        }
        for i in 0..n {
            let row = probs.row(i);
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Invalid(format!("row {} has a negative or non-finite entry", i)));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-6 {
                return Err(Error::Invalid(format!("row {} sums to {}", i, total)));
            }
        }
        Ok(PredictionMatrix { probs })
    }

    /// Row-wise softmax of raw scores.
    pub fn from_logits(logits: &Tensor) -> Result<Self> {
        Ok(PredictionMatrix {
            probs: softmax_rows(logits)?,
        })
    }

    /// Probability one at each given label.
    pub fn one_hot(labels: &[usize], width: usize) -> Result<Self> {
        let mut t = Tensor::zeros(&[labels.len(), width]);
        for (i, &l) in labels.iter().enumerate() {
            if l >= width {
                return Err(Error::Shape(format!("label {} out of range {}", l, width)));
            }
            t.data_mut()[i * width + l] = 1.0;
        }
        PredictionMatrix::new(t)
    }

    pub fn probs(&self) -> &Tensor {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> usize {
        self.probs.cols()
    }
}

/// Positions in scope for the loss.
pub fn loss_mask(gold: &[String], predicate: usize, window: LossWindow) -> Vec<bool> {
    match window {
        LossWindow::FullSequence => vec![true; gold.len()],
        LossWindow::WindowOnly => {
            let (lo, hi) = tagged_span(gold, predicate);
            (0..gold.len()).map(|i| i >= lo && i <= hi).collect()
        }
    }
}

/// Mean negative log-probability of the gold labels over the in-scope
/// positions.
pub fn compute_loss(
    pred: &PredictionMatrix,
    gold: &[String],
    labels: &LabelSet,
    predicate: usize,
    window: LossWindow,
) -> Result<f64> {
    if gold.len() != pred.len() {
        return Err(Error::Shape(format!("{} gold labels for {} rows", gold.len(), pred.len())));
    }
    let targets = labels.encode(gold)?;
    let mask = loss_mask(gold, predicate, window);
    let count = mask.iter().filter(|&&m| m).count();
    assert!(count > 0, "loss window always holds the predicate");
    let total: f64 = (0..gold.len())
        .filter(|&i| mask[i])
        .map(|i| -pred.probs.get(i, targets[i]).max(LOG_FLOOR).ln())
        .sum();
    Ok(total / count as f64)
}

pub enum Mode<'r> {
    Eval,
    Train(&'r mut SeedRng),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Sidecar {
    format_version: u32,
    config: TrainConfig,
    labels: LabelSet,
    vocabs: VocabMaps,
    pretrained_index: HashMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct SrlModel {
    pub config: TrainConfig,
    pub labels: LabelSet,
    pub params: ParamStore,
    pub embedding: EmbeddingLayer,
    pub encoder: BiLstmStack,
    pub attention: Option<AttentionParams>,
    pub w_out: ParamId,
    pub b_out: ParamId,
}

impl SrlModel {
    /// Fresh model with seeded uniform initialization.
    pub fn new(
        config: &TrainConfig,
        labels: LabelSet,
        vocabs: VocabMaps,
        pretrained: Option<&PretrainedVectors>,
    ) -> Result<Self> {
        config.validate()?;
        let mut rng = derive_rng(config.seed, &[INIT_STREAM]);
        let mut params = ParamStore::new();
        let embedding = EmbeddingLayer::new(config.dims, vocabs, pretrained, &mut params, &mut rng)?;
        let encoder = BiLstmStack::new(
            config.dims.total(),
            config.hidden,
            config.layers,
            config.keep_prob,
            &mut params,
            &mut rng,
        )?;
        let state_width = encoder.output_width();
        let attention = if config.use_attention {
            Some(AttentionParams::new(state_width, config.attn_dim(), config.hops, &mut params, &mut rng)?)
        } else {
            None
        };
        let fused = if config.use_attention {
            state_width * (1 + config.hops)
        } else {
            state_width
        };
        let w_out = params.add("out.w", Tensor::uniform(&[fused, labels.len()], INIT_BOUND, &mut rng), true);
        let b_out = params.add("out.b", Tensor::zeros(&[labels.len()]), true);
        Ok(SrlModel {
            config: config.clone(),
            labels,
            params,
            embedding,
            encoder,
            attention,
            w_out,
            b_out,
        })
    }

    pub fn fused_width(&self) -> usize {
        self.params.get(self.w_out).rows()
    }

    /// Unnormalized label scores, `n x |labels|`.
    #[allow(clippy::too_many_arguments)]
    pub fn logits<'a>(
        &'a self,
        tape: &mut Tape<'a>,
        bound: &BoundParams,
        sentence: &Sentence,
        sentence_id: usize,
        predicate_index: usize,
        external: Option<&ExternalVectors>,
        mode: Mode<'_>,
    ) -> Result<Var> {
        let embedded = self.embedding.embed(
            tape,
            bound,
            &self.params,
            sentence,
            sentence_id,
            predicate_index,
            external,
        )?;
        let states = match mode {
            Mode::Eval => {
                let mut unused = derive_rng(0, &[]);
                bilstm_encode(tape, bound, &self.encoder, embedded, &mut unused, false)?
            }
            Mode::Train(rng) => bilstm_encode(tape, bound, &self.encoder, embedded, rng, true)?,
        };
        let features = match &self.attention {
            Some(attn) => {
                let (_, summary) = attend(tape, bound, attn, states)?;
                fuse(tape, states, summary)?
            }
            None => states,
        };
        let scores = tape.matmul(features, bound.var(self.w_out))?;
        tape.add_row(scores, bound.var(self.b_out))
    }

    pub fn forward(
        &self,
        instance: &PredicateInstance,
        external: Option<&ExternalVectors>,
        mode: Mode<'_>,
    ) -> Result<PredictionMatrix> {
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape);
        let logits = self.logits(
            &mut tape,
            &bound,
            &instance.sentence,
            instance.sentence_id,
            instance.predicate_index,
            external,
            mode,
        )?;
        PredictionMatrix::from_logits(tape.value(logits))
    }

    /// Training loss of one instance and its parameter gradients. Returns
    /// `(mean loss, in-scope positions, gradients)`.
    pub fn loss_and_gradients(
        &self,
        instance: &PredicateInstance,
        external: Option<&ExternalVectors>,
        mode: Mode<'_>,
    ) -> Result<(f64, usize, Gradients)> {
        let targets = self.labels.encode(&instance.gold_labels)?;
        let mask = loss_mask(&instance.gold_labels, instance.predicate_index, self.config.loss_window);
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape);
        let logits = self.logits(
            &mut tape,
            &bound,
            &instance.sentence,
            instance.sentence_id,
            instance.predicate_index,
            external,
            mode,
        )?;
        let loss = tape.cross_entropy(logits, &targets, &mask)?;
        let value = tape.value(loss).item()?;
        tape.backward(loss)?;
        let count = mask.iter().filter(|&&m| m).count();
        Ok((value, count, bound.gradients(&tape, &self.params)))
    }

    /// Training loss of one instance without the backward pass.
    pub fn loss_value(
        &self,
        instance: &PredicateInstance,
        external: Option<&ExternalVectors>,
        mode: Mode<'_>,
    ) -> Result<f64> {
        let targets = self.labels.encode(&instance.gold_labels)?;
        let mask = loss_mask(&instance.gold_labels, instance.predicate_index, self.config.loss_window);
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape);
        let logits = self.logits(
            &mut tape,
            &bound,
            &instance.sentence,
            instance.sentence_id,
            instance.predicate_index,
            external,
            mode,
        )?;
        let loss = tape.cross_entropy(logits, &targets, &mask)?;
        tape.value(loss).item()
    }

    fn sidecar_path(path: &Path) -> PathBuf {
        let mut p = path.as_os_str().to_owned();
        p.push(".json");
        PathBuf::from(p)
    }

    /// Writes the binary parameters to `path` and the configuration, labels
    /// and vocabularies to `<path>.json`, each atomically.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::new();
        checkpoint::write_params(&self.params, &mut bytes)?;
        let sidecar = Sidecar {
            format_version: checkpoint::VERSION,
            config: self.config.clone(),
            labels: self.labels.clone(),
            vocabs: self.embedding.vocabs.clone(),
            pretrained_index: self.embedding.pretrained_index.clone(),
        };
        let json = serde_json::to_vec_pretty(&sidecar)?;
        checkpoint::write_atomic(&Self::sidecar_path(path), &json)?;
        checkpoint::write_atomic(path, &bytes)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let sidecar: Sidecar = serde_json::from_slice(&std::fs::read(Self::sidecar_path(path))?)?;
        if sidecar.format_version != checkpoint::VERSION {
            return Err(Error::Checkpoint(format!(
                "sidecar version {} unsupported",
                sidecar.format_version
            )));
        }
        let pretrained = PretrainedVectors {
            table: Tensor::zeros(&[sidecar.pretrained_index.len(), sidecar.config.dims.pretrained]),
            index: sidecar.pretrained_index,
        };
        let mut model = SrlModel::new(&sidecar.config, sidecar.labels, sidecar.vocabs, Some(&pretrained))?;
        let file = std::fs::File::open(path)?;
        checkpoint::load_into(&mut model.params, std::io::BufReader::new(file))?;
        Ok(model)
    }
}
