//! Mini-batch gradient descent on sampled comparisons, and style
//! estimation metrics.

use std::collections::HashMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{Dataset, ImageRecord, Style, NUM_STYLES};
use crate::comparisons::{sample_comparisons, ComparisonLabel, DatasetSplit};
use crate::error::{Error, Result};
use crate::model::{argmax_style, StyleModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub comparisons_per_epoch: usize,
    /// Minimum vote differential for a comparison label.
    pub threshold_x: u32,
    /// Comparisons drawn once from the validation partition.
    pub validation_comparisons: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 50,
            batch_size: 32,
            comparisons_per_epoch: 2048,
            threshold_x: 1,
            validation_comparisons: 512,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(
                "learning rate must be finite and non-negative".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 || self.comparisons_per_epoch == 0 {
            return Err(Error::InvalidArgument(
                "batch size and comparisons per epoch must be at least 1".into(),
            ));
        }
        if self.threshold_x == 0 {
            return Err(Error::InvalidArgument(
                "threshold x must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean comparison loss over each epoch, measured before each step.
    pub epoch_loss: Vec<f64>,
    /// Pairwise accuracy on the validation comparisons after each epoch;
    /// `None` when the validation partition cannot produce comparisons.
    pub validation_accuracy: Vec<Option<f64>>,
}

fn feature_index(dataset: &Dataset) -> HashMap<&str, &[f64]> {
    dataset
        .images
        .iter()
        .map(|i| (i.image_id.as_str(), i.features.as_slice()))
        .collect()
}

/// Fraction of comparisons whose label agrees with the sign of the
/// model's score difference. Zero differences count as wrong.
pub fn pairwise_accuracy(
    model: &StyleModel,
    dataset: &Dataset,
    labels: &[ComparisonLabel],
) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Empty("comparison set"));
    }
    let features = feature_index(dataset);
    let lookup = |id: &str| {
        features
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownImage(id.to_string()))
    };
    let mut correct = 0usize;
    for c in labels {
        let s = c.style.code();
        let diff = model.scores(lookup(&c.image_a)?)?[s] - model.scores(lookup(&c.image_b)?)?[s];
        if diff * c.label.sign() > 0.0 {
            correct += 1;
        }
    }
    Ok(correct as f64 / labels.len() as f64)
}

/// Trains `model` on comparisons from the train partition.
///
/// Every epoch draws a fresh set of comparisons with a seed taken from a
/// generator seeded by `config.seed`, then steps through it in order in
/// mini-batches, applying the mean batch gradient. The result depends
/// only on the inputs.
pub fn train(
    mut model: StyleModel,
    dataset: &Dataset,
    split: &DatasetSplit,
    config: &TrainConfig,
) -> Result<(StyleModel, TrainHistory)> {
    config.validate()?;
    if dataset.images.feature_dim() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "training features".into(),
            expected: model.input_dim(),
            found: dataset.images.feature_dim(),
        });
    }
    let features = feature_index(dataset);
    let lookup = |id: &str| {
        features
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownImage(id.to_string()))
    };

    let mut seeds = ChaCha8Rng::seed_from_u64(config.seed);
    let validation_seed = seeds.next_u64();
    let validation = if config.validation_comparisons > 0 {
        sample_comparisons(
            &split.validation,
            &dataset.votes,
            config.validation_comparisons,
            config.threshold_x,
            validation_seed,
        )
        .ok()
    } else {
        None
    };

    let mut history = TrainHistory {
        epoch_loss: Vec::with_capacity(config.epochs),
        validation_accuracy: Vec::with_capacity(config.epochs),
    };
    let mut grad = vec![0.0; model.param_count()];
    for _ in 0..config.epochs {
        let labels = sample_comparisons(
            &split.train,
            &dataset.votes,
            config.comparisons_per_epoch,
            config.threshold_x,
            seeds.next_u64(),
        )?;
        let mut total_loss = 0.0;
        for batch in labels.chunks(config.batch_size) {
            grad.fill(0.0);
            let scale = 1.0 / batch.len() as f64;
            for c in batch {
                total_loss += model.accumulate_gradient(
                    lookup(&c.image_a)?,
                    lookup(&c.image_b)?,
                    c.style,
                    c.label,
                    scale,
                    &mut grad,
                );
            }
            for (p, g) in model.params_mut().iter_mut().zip(&grad) {
                *p -= config.learning_rate * g;
            }
        }
        if !model.is_finite() {
            return Err(Error::Invariant(
                "training produced non-finite parameters".into(),
            ));
        }
        history.epoch_loss.push(total_loss / labels.len() as f64);
        history.validation_accuracy.push(match &validation {
            Some(v) => Some(pairwise_accuracy(&model, dataset, v)?),
            None => None,
        });
    }
    Ok((model, history))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Skip images whose majority style was decided by the tie rule.
    pub exclude_ties: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StyleAccuracy {
    pub style: Style,
    pub correct: usize,
    pub total: usize,
    /// `None` when no evaluated image has this majority style.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    /// Micro-averaged accuracy over all evaluated images.
    pub overall: f64,
    pub per_style: [StyleAccuracy; NUM_STYLES],
    pub evaluated: usize,
    pub skipped_ties: usize,
}

/// Scores predictions against majority-vote ground truth.
pub fn evaluate_predictions<F>(
    dataset: &Dataset,
    test_ids: &[String],
    options: EvalOptions,
    mut predict: F,
) -> Result<EstimationReport>
where
    F: FnMut(&ImageRecord) -> Result<Style>,
{
    if test_ids.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let mut correct = [0usize; NUM_STYLES];
    let mut total = [0usize; NUM_STYLES];
    let mut skipped_ties = 0;
    for id in test_ids {
        let image = dataset
            .images
            .get(id)
            .ok_or_else(|| Error::UnknownImage(id.clone()))?;
        let truth = dataset.votes.majority_style(id)?;
        if truth.tie && options.exclude_ties {
            skipped_ties += 1;
            continue;
        }
        let s = truth.style.code();
        total[s] += 1;
        if predict(image)? == truth.style {
            correct[s] += 1;
        }
    }
    let evaluated: usize = total.iter().sum();
    if evaluated == 0 {
        return Err(Error::Empty("evaluated test set"));
    }
    let per_style = std::array::from_fn(|s| StyleAccuracy {
        style: Style::ALL[s],
        correct: correct[s],
        total: total[s],
        accuracy: (total[s] > 0).then(|| correct[s] as f64 / total[s] as f64),
    });
    Ok(EstimationReport {
        overall: correct.iter().sum::<usize>() as f64 / evaluated as f64,
        per_style,
        evaluated,
        skipped_ties,
    })
}

/// Style-estimation accuracy of `model` (argmax of the style scores).
pub fn evaluate_estimation(
    model: &StyleModel,
    dataset: &Dataset,
    test_ids: &[String],
    options: EvalOptions,
) -> Result<EstimationReport> {
    evaluate_predictions(dataset, test_ids, options, |img| {
        Ok(argmax_style(&model.scores(&img.features)?))
    })
}
