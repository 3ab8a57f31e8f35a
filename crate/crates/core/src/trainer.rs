//! Margin-loss stochastic gradient descent with Bern negative sampling.
//!
//! Each epoch shuffles the training triples, cuts them into `groups`
//! contiguous groups and visits every triple once, drawing one corrupted
//! triple per positive and taking a plain SGD step on the hinge
//! `[margin + f(pos) - f(neg)]_+`.

use std::collections::HashSet;
use std::ops::Range;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg_data::{sample_negative, BernStats, Dataset, Triple};
use crate::model::{EmbeddingModel, ModelKind, Scoring};
use crate::torus_math::ScoreKind;

/// Upper bound on redraws when negative filtering rejects a corruption.
const MAX_FILTER_REDRAWS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub scoring: Scoring,
    pub dim: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub groups: usize,
    pub seed: u64,
    /// Redraw corruptions that are themselves training triples.
    #[serde(default)]
    pub filter_negatives: bool,
}

impl Default for TrainConfig {
    /// The best WN18 configuration: f_L1, n = 10000, margin 2000, rate 0.0005.
    fn default() -> Self {
        TrainConfig {
            scoring: Scoring::Torus(ScoreKind::L1),
            dim: 10_000,
            margin: 2000.0,
            learning_rate: 0.0005,
            epochs: 500,
            groups: 100,
            seed: 42,
            filter_negatives: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, train_len: usize) -> Result<()> {
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::InvalidArgument(format!("margin must be positive, got {}", self.margin)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if self.groups == 0 || self.groups > train_len {
            return Err(Error::InvalidArgument(format!(
                "groups per epoch must be in 1..={train_len}, got {}",
                self.groups
            )));
        }
        Ok(())
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub violations: usize,
    pub seconds: f64,
    /// Positive triples visited this epoch.
    #[serde(skip)]
    pub visited: usize,
    /// Calls to `normalize_entities` this epoch.
    #[serde(skip)]
    pub normalizations: usize,
}

/// Result of one SGD step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub loss: f64,
    pub updated: bool,
    pub normalized: bool,
}

/// `max(0, margin + f(pos) - f(neg))`.
pub fn hinge_loss(model: &EmbeddingModel, pos: &Triple, neg: &Triple, margin: f64) -> Result<f64> {
    let fp = model.score_triple(pos)?;
    let fneg = model.score_triple(neg)?;
    Ok(hinge(margin, fp, fneg))
}

#[inline]
fn hinge(margin: f64, pos: f64, neg: f64) -> f64 {
    (margin + pos - neg).max(0.0)
}

/// One gradient step on the hinge for a (positive, negative) pair.
pub fn sgd_step(
    model: &mut EmbeddingModel,
    pos: &Triple,
    neg: &Triple,
    margin: f64,
    learning_rate: f64,
) -> Result<StepOutcome> {
    model.check(pos)?;
    model.check(neg)?;
    Stepper::new(model.dim()).step(model, pos, neg, margin, learning_rate)
}

/// Reusable gradient buffers for the hot loop.
struct Stepper {
    grad_pos: Vec<f64>,
    grad_neg: Vec<f64>,
}

impl Stepper {
    fn new(dim: usize) -> Self {
        Stepper {
            grad_pos: vec![0.0; dim],
            grad_neg: vec![0.0; dim],
        }
    }

    fn step(
        &mut self,
        model: &mut EmbeddingModel,
        pos: &Triple,
        neg: &Triple,
        margin: f64,
        lr: f64,
    ) -> Result<StepOutcome> {
        let loss = hinge(margin, model.score_ids(pos), model.score_ids(neg));
        if loss <= 0.0 {
            return Ok(StepOutcome {
                loss: 0.0,
                updated: false,
                normalized: false,
            });
        }
        // both gradients come from the pre-update parameters
        model.residual_gradient(pos, &mut self.grad_pos);
        model.residual_gradient(neg, &mut self.grad_neg);

        model.axpy_entity(pos.head, -lr, &self.grad_pos);
        model.axpy_relation(pos.relation, -lr, &self.grad_pos);
        model.axpy_entity(pos.tail, lr, &self.grad_pos);

        model.axpy_entity(neg.head, lr, &self.grad_neg);
        model.axpy_relation(neg.relation, lr, &self.grad_neg);
        model.axpy_entity(neg.tail, -lr, &self.grad_neg);

        let normalized = model.kind() == ModelKind::TransE;
        if normalized {
            model.normalize_entities()?;
        }
        Ok(StepOutcome {
            loss,
            updated: true,
            normalized,
        })
    }
}

/// Splits `0..len` into `groups` contiguous ranges whose sizes differ by at
/// most one.
pub fn partition_groups(len: usize, groups: usize) -> Vec<Range<usize>> {
    if groups == 0 {
        return Vec::new();
    }
    (0..groups)
        .map(|g| (g * len / groups)..((g + 1) * len / groups))
        .collect()
}

/// RNG used for model initialization.
pub fn init_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

/// RNG driving the shuffle and negative draws of one epoch. Every epoch has
/// its own stream so that any epoch replays independently of the others.
pub fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64 + 1);
    rng
}

pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<(EmbeddingModel, Vec<EpochStats>)> {
    train_with(dataset, config, |_| {})
}

/// Trains from scratch, calling `on_epoch` after every epoch.
pub fn train_with<F>(dataset: &Dataset, config: &TrainConfig, on_epoch: F) -> Result<(EmbeddingModel, Vec<EpochStats>)>
where
    F: FnMut(&EpochStats),
{
    config.validate(dataset.train.len())?;
    let model = EmbeddingModel::init(
        config.scoring,
        dataset.num_entities(),
        dataset.num_relations(),
        config.dim,
        &mut init_rng(config.seed),
    )?;
    train_from(model, dataset, config, on_epoch)
}

/// Continues training an existing model for `config.epochs` epochs.
pub fn train_from<F>(
    mut model: EmbeddingModel,
    dataset: &Dataset,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<(EmbeddingModel, Vec<EpochStats>)>
where
    F: FnMut(&EpochStats),
{
    config.validate(dataset.train.len())?;
    if model.num_entities() != dataset.num_entities() || model.num_relations() != dataset.num_relations() {
        return Err(Error::Consistency(format!(
            "model has {} entities / {} relations, dataset has {} / {}",
            model.num_entities(),
            model.num_relations(),
            dataset.num_entities(),
            dataset.num_relations()
        )));
    }
    let stats = BernStats::compute(dataset);
    let train_set: Option<HashSet<Triple>> = config
        .filter_negatives
        .then(|| dataset.train.iter().copied().collect());
    let groups = partition_groups(dataset.train.len(), config.groups);
    let mut stepper = Stepper::new(model.dim());
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let start = Instant::now();
        let mut rng = epoch_rng(config.seed, epoch);
        for (i, slot) in order.iter_mut().enumerate() {
            *slot = i;
        }
        order.shuffle(&mut rng);

        let mut record = EpochStats {
            epoch: epoch + 1,
            loss: 0.0,
            violations: 0,
            seconds: 0.0,
            visited: 0,
            normalizations: 0,
        };
        for group in &groups {
            for &idx in &order[group.clone()] {
                let pos = dataset.train[idx];
                let mut neg = sample_negative(&pos, &stats, dataset.num_entities(), &mut rng)?;
                if let Some(set) = &train_set {
                    let mut redraws = 0;
                    while set.contains(&neg) && redraws < MAX_FILTER_REDRAWS {
                        neg = sample_negative(&pos, &stats, dataset.num_entities(), &mut rng)?;
                        redraws += 1;
                    }
                }
                let outcome = stepper.step(&mut model, &pos, &neg, config.margin, config.learning_rate)?;
                record.visited += 1;
                record.loss += outcome.loss;
                if outcome.updated {
                    record.violations += 1;
                }
                if outcome.normalized {
                    record.normalizations += 1;
                }
            }
        }
        record.seconds = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
        on_epoch(&record);
        history.push(record);
    }
    Ok((model, history))
}
