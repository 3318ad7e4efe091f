//! Central finite-difference check of the full model's analytic gradients.

use std::fmt;

use rand::Rng;

use crate::config::TrainConfig;
use crate::conll::{extract_instances, parse_str, FormatConfig, PredicateInstance};
use crate::embedding::{ExternalVectors, PretrainedVectors, VocabMaps};
use crate::error::Result;
use crate::model::{Mode, SrlModel};
use crate::numerics::rng::derive_rng;
use crate::numerics::Tensor;
use crate::tags::augment_labels;

pub const DEFAULT_EPS: f64 = 1e-4;

/// Denominator floor of the relative error, so that gradients that are
/// zero up to rounding compare by absolute difference.
pub const REL_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamCheck {
    pub name: String,
    pub elements: usize,
    pub max_rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.params.iter().map(|p| p.max_rel_err).fold(0.0, f64::max)
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.params {
            writeln!(f, "{:<20} {:>6} {:>12.3e}", p.name, p.elements, p.max_rel_err)?;
        }
        write!(f, "max_rel_err={:.3e}", self.max_rel_err())
    }
}

/// Compares backpropagated gradients of the training loss on `instance`
/// against central differences for every element of every trainable
/// parameter. Dropout runs with the same mask stream for every evaluation.
pub fn check_model(
    model: &SrlModel,
    instance: &PredicateInstance,
    external: Option<&ExternalVectors>,
    dropout_seed: u64,
    eps: f64,
) -> Result<GradCheckReport> {
    let stream = || derive_rng(dropout_seed, &[0xfd]);
    let (_, _, grads) = model.loss_and_gradients(instance, external, Mode::Train(&mut stream()))?;
    let mut probe = model.clone();
    let mut report = Vec::new();
    for id in model.params.ids() {
        if !model.params.is_trainable(id) {
            continue;
        }
        let original = model.params.get(id).clone();
        let zeros = Tensor::zeros(original.shape());
        let analytic = grads.get(id).unwrap_or(&zeros);
        let mut worst: f64 = 0.0;
        for j in 0..original.len() {
            let base = original.data()[j];
            probe.params.get_mut(id).data_mut()[j] = base + eps;
            let up = probe.loss_value(instance, external, Mode::Train(&mut stream()))?;
            probe.params.get_mut(id).data_mut()[j] = base - eps;
            let down = probe.loss_value(instance, external, Mode::Train(&mut stream()))?;
            probe.params.get_mut(id).data_mut()[j] = base;
            let numeric = (up - down) / (2.0 * eps);
            worst = worst.max(relative_error(analytic.data()[j], numeric));
        }
        report.push(ParamCheck {
            name: model.params.name(id).to_string(),
            elements: original.len(),
            max_rel_err: worst,
        });
    }
    Ok(GradCheckReport { params: report })
}

const TOY_SENTENCE: &str = "\
cats cat NNS _ A0
sleep sleep VBP sleep.01 _
soundly soundly RB _ _
";

/// Builds the three-token toy problem for `seed`: every block of the input
/// (pretrained, external) is active and parameters are drawn from
/// `[-0.5, 0.5]` so that gradients are not vanishingly small.
pub fn toy_problem(seed: u64) -> Result<(SrlModel, PredicateInstance, ExternalVectors)> {
    let mut config = TrainConfig::toy();
    config.seed = seed;
    let corpus = parse_str(TOY_SENTENCE, &FormatConfig::simple())?;
    let instance = augment_labels(&extract_instances(&corpus)[0])?;
    let mut rng = derive_rng(seed, &[0x70]);
    let pretrained = PretrainedVectors {
        index: [("cats".to_string(), 0), ("sleep".to_string(), 1)].into_iter().collect(),
        table: Tensor::uniform(&[2, config.dims.pretrained], 1.0, &mut rng),
    };
    let mut external = ExternalVectors::new(config.dims.external);
    external.insert(0, Tensor::uniform(&[3, config.dims.external], 1.0, &mut rng))?;
    let mut model = SrlModel::new(
        &config,
        corpus.label_inventory.clone(),
        VocabMaps::from_corpora(&[&corpus]),
        Some(&pretrained),
    )?;
    let ids: Vec<_> = model.params.ids().collect();
    for id in ids {
        if model.params.is_trainable(id) {
            for v in model.params.get_mut(id).data_mut() {
                *v = rng.random_range(-0.5..=0.5);
            }
        }
    }
    Ok((model, instance, external))
}

/// Full-model check on the toy problem.
pub fn toy_gradient_check(seed: u64) -> Result<GradCheckReport> {
    let (model, instance, external) = toy_problem(seed)?;
    check_model(&model, &instance, Some(&external), seed, DEFAULT_EPS)
}
