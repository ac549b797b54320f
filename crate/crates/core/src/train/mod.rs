//! Mini-batch Adam training with best-dev-F1 model selection.

mod adam;
mod checkpoint;
mod gradcheck;
mod loss;

pub use adam::Adam;
pub use checkpoint::{
    checkpoint_bytes, checkpoint_from_bytes, load_checkpoint, save_checkpoint, CheckpointError,
    FORMAT_VERSION, MAGIC,
};
pub use gradcheck::{gradient_check, gradient_check_with, GradCheckReport, FD_STEP};
pub use loss::{loss_and_gradient, sentence_loss, span_loss, Objective, SentenceLoss};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{evaluate, Arm, EvalError, ScoreMode};
use crate::model::{Examples, ModelConfig, ModelError, ModelParameters, Vocab};
use crate::scalar::Scalar;

/// Learning rate used when fine-tuning on top of pretrained encoder features.
pub const FINE_TUNE_LEARNING_RATE: f64 = 5e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub class_weight_i: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub objective: Objective,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            learning_rate: 1e-3,
            epochs: 30,
            seed: 0,
            class_weight_i: 1.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            objective: Objective::Span,
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.class_weight_i > 0.0 && self.class_weight_i.is_finite()) {
            return bad("class_weight_i must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("adam betas must lie in [0, 1)");
        }
        self.model.validate().map_err(TrainError::InvalidConfig)
    }

    /// The evaluation arm matching this objective and graph setting.
    pub fn arm(&self) -> Arm {
        match (self.objective, self.model.use_gcn) {
            (Objective::Token, _) => Arm::TokenBaseline,
            (Objective::Span, true) => Arm::SpanGcn,
            (Objective::Span, false) => Arm::Span,
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        loss: f64,
    },
    #[error("parameters became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteParameters { epoch: usize, batch: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One line of the metrics log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_p: f64,
    pub dev_r: f64,
    pub dev_f1: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<S> {
    /// Parameters from the epoch with the best dev F1 (the last epoch when
    /// there is no dev data).
    pub params: ModelParameters<S>,
    pub metrics: Vec<EpochMetrics>,
    pub best_epoch: Option<usize>,
    /// Gold runs longer than `max_span_len`, counted once per epoch.
    pub unreachable_gold: usize,
}

pub fn train<S: Scalar>(
    train_set: Examples<'_, S>,
    dev_set: Examples<'_, S>,
    config: &TrainConfig,
) -> Result<TrainOutcome<S>, TrainError> {
    train_with(train_set, dev_set, config, |_| {})
}

/// [`train`], calling `on_epoch` after each epoch's dev evaluation.
pub fn train_with<S: Scalar, F: FnMut(&EpochMetrics)>(
    train_set: Examples<'_, S>,
    dev_set: Examples<'_, S>,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<TrainOutcome<S>, TrainError> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vocab = Vocab::from_corpus(train_set.sentences);
    let mut params = ModelParameters::<S>::init(config.model.clone(), vocab, &mut rng);
    let mut outcome = TrainOutcome {
        params: params.clone(),
        metrics: Vec::new(),
        best_epoch: None,
        unreachable_gold: 0,
    };
    if config.epochs == 0 {
        return Ok(outcome);
    }

    let mut adam = Adam::new(
        &params.weights,
        S::of(config.learning_rate),
        S::of(config.beta1),
        S::of(config.beta2),
        S::of(config.epsilon),
    );
    let weight_i = S::of(config.class_weight_i);
    let arm = config.arm();
    let mut best_f1 = f64::NEG_INFINITY;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_sum = 0.0;
        let mut epoch_count = 0usize;
        for (batch, chunk) in order.chunks(config.batch_size).enumerate() {
            let mut grads = params.weights.zeros_like();
            let mut sum = S::zero();
            let mut count = 0usize;
            for &i in chunk {
                let (sentence, features) = train_set.input(i, &params.config)?;
                let l = sentence_loss(
                    &params,
                    sentence,
                    features,
                    config.objective,
                    weight_i,
                    Some(&mut grads),
                )?;
                sum += l.sum;
                count += l.count;
                outcome.unreachable_gold += l.unreachable.len();
            }
            if count == 0 {
                continue;
            }
            let mean = sum.as_f64() / count as f64;
            if !mean.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    epoch,
                    batch,
                    loss: mean,
                });
            }
            grads.scale(S::one() / S::of(count as f64));
            adam.update(&mut params.weights, &grads);
            if !params.weights.all_finite() {
                return Err(TrainError::NonFiniteParameters { epoch, batch });
            }
            epoch_sum += sum.as_f64();
            epoch_count += count;
        }

        let (dev_p, dev_r, dev_f1) = if dev_set.is_empty() {
            (0.0, 0.0, 0.0)
        } else {
            let r = evaluate(&params, dev_set, arm, ScoreMode::Token)?;
            (r.precision, r.recall, r.f1)
        };
        let m = EpochMetrics {
            epoch,
            train_loss: epoch_sum / epoch_count.max(1) as f64,
            dev_p,
            dev_r,
            dev_f1,
        };
        on_epoch(&m);
        let improved = if dev_set.is_empty() {
            true
        } else {
            dev_f1 > best_f1
        };
        if improved {
            best_f1 = dev_f1;
            outcome.best_epoch = Some(epoch);
            outcome.params = params.clone();
        }
        outcome.metrics.push(m);
    }
    Ok(outcome)
}
