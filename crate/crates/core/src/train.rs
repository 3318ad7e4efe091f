//! Minibatch training with per-epoch model selection on dev F1.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::config::TrainConfig;
use crate::conll::{extract_instances, Corpus, PredicateInstance};
use crate::decoder::{gold_argument_sets, predict_arguments};
use crate::embedding::{ExternalVectors, PretrainedVectors, VocabMaps};
use crate::error::{Error, Result};
use crate::model::{Mode, SrlModel};
use crate::numerics::rng::derive_rng;
use crate::numerics::{adam_step, AdamConfig, AdamState, Gradients, ParamStore};
use crate::scorer::{evaluate, EvalReport};
use crate::tags::{augment_labels, LabelSet};

const SHUFFLE_STREAM: u64 = 0x5f;
const DROPOUT_STREAM: u64 = 0xd0;

/// A corpus with its optional external vectors.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub corpus: Corpus,
    pub external: Option<ExternalVectors>,
}

impl Dataset {
    pub fn new(corpus: Corpus) -> Self {
        Dataset {
            corpus,
            external: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-position training loss over the epoch.
    pub train_loss: f64,
    pub dev: EvalReport,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SrlModel,
    pub history: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (1-based; 0 when no epoch ran).
    pub best_epoch: usize,
    /// Parameters after the last epoch.
    pub final_params: ParamStore,
}

/// Training instances, augmented with boundary tags when configured.
pub fn training_instances(corpus: &Corpus, use_aux_tags: bool) -> Result<Vec<PredicateInstance>> {
    let instances = extract_instances(corpus);
    if use_aux_tags {
        instances.iter().map(augment_labels).collect()
    } else {
        Ok(instances)
    }
}

/// Labeled argument scores of `model` on `data`.
pub fn evaluate_model(model: &SrlModel, data: &Dataset) -> Result<EvalReport> {
    let pred = predict_arguments(model, &data.corpus, data.external.as_ref())?;
    evaluate(&pred, &gold_argument_sets(&data.corpus))
}

/// Computes the weighted mean loss and gradient of one batch. Instances are
/// processed independently, then merged in batch order.
pub fn batch_gradients(
    model: &SrlModel,
    batch: &[(usize, &PredicateInstance)],
    external: Option<&ExternalVectors>,
    epoch: usize,
    pool: Option<&rayon::ThreadPool>,
) -> Result<(f64, usize, Gradients)> {
    let seed = model.config.seed;
    let one = |&(idx, inst): &(usize, &PredicateInstance)| {
        let mut rng = derive_rng(seed, &[DROPOUT_STREAM, epoch as u64, idx as u64]);
        model.loss_and_gradients(inst, external, Mode::Train(&mut rng))
    };
    let results: Vec<Result<(f64, usize, Gradients)>> = match pool {
        Some(pool) => pool.install(|| batch.par_iter().map(one).collect()),
        None => batch.iter().map(one).collect(),
    };
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let total: usize = results.iter().map(|r| r.1).sum();
    let mut grads = Gradients::zeros_like(&model.params);
    let mut loss = 0.0;
    for (l, count, g) in &results {
        let w = *count as f64 / total as f64;
        loss += l * w;
        grads.add_scaled(g, w)?;
    }
    Ok((loss, total, grads))
}

/// Trains for `config.max_epochs` epochs and returns the parameters of the
/// epoch with the highest dev F1 (the earliest on ties). Without a dev set
/// the training set is scored instead.
pub fn train(
    train_data: &Dataset,
    dev_data: Option<&Dataset>,
    config: &TrainConfig,
    pretrained: Option<&PretrainedVectors>,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    let instances = training_instances(&train_data.corpus, config.use_aux_tags)?;
    if instances.is_empty() {
        return Err(Error::Invalid("training corpus has no predicate instances".into()));
    }
    let mut observed: Vec<&str> = train_data
        .corpus
        .label_inventory
        .arguments()
        .iter()
        .map(String::as_str)
        .collect();
    if let Some(dev) = dev_data {
        observed.extend(dev.corpus.label_inventory.arguments().iter().map(String::as_str));
    }
    let labels = LabelSet::from_labels(observed);
    let vocabs = VocabMaps::from_corpora(&[&train_data.corpus]);
    let mut model = SrlModel::new(config, labels, vocabs, pretrained)?;
    let mut adam = AdamState::new(&model.params);
    let adam_config = AdamConfig {
        lr: config.lr,
        ..AdamConfig::default()
    };
    let pool = if config.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?,
        )
    } else {
        None
    };
    let eval_data = dev_data.unwrap_or(train_data);

    let mut history = Vec::with_capacity(config.max_epochs);
    let mut best: Option<(usize, f64, ParamStore)> = None;
    let mut order: Vec<usize> = (0..instances.len()).collect();

    for epoch in 1..=config.max_epochs {
        let mut shuffle_rng = derive_rng(config.seed, &[SHUFFLE_STREAM, epoch as u64]);
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut positions = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(usize, &PredicateInstance)> = chunk.iter().map(|&i| (i, &instances[i])).collect();
            let (loss, count, mut grads) =
                batch_gradients(&model, &batch, train_data.external.as_ref(), epoch, pool.as_ref())?;
            if let Some(cap) = config.clip_norm {
                grads.clip_global_norm(cap);
            }
            adam_step(&mut model.params, &grads, &mut adam, &adam_config)?;
            loss_sum += loss * count as f64;
            positions += count;
        }
        let dev = evaluate_model(&model, eval_data)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / positions as f64,
            dev,
        };
        log::info!(
            "epoch {} loss {:.6} dev P {:.4} R {:.4} F1 {:.4}",
            epoch,
            record.train_loss,
            dev.precision,
            dev.recall,
            dev.f1
        );
        on_epoch(&record);
        if best.as_ref().is_none_or(|(_, f1, _)| dev.f1 > *f1) {
            best = Some((epoch, dev.f1, model.params.clone()));
        }
        history.push(record);
    }

    let final_params = model.params.clone();
    let best_epoch = match best {
        Some((epoch, _, params)) => {
            model.params = params;
            epoch
        }
        None => 0,
    };
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
        final_params,
    })
}
