//! Staged mini-batch gradient descent.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::objective::{CorrectionSample, TaggingSample};
use super::params::TaggerParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs_per_stage: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Per-task loss weights; `None` means `1/T` each.
    pub task_weights: Option<Vec<f64>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: 0.1, epochs_per_stage: 20, batch_size: 8, seed: 0, task_weights: None }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if let Some(w) = &self.task_weights {
            let sum: f64 = w.iter().sum();
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Config("task weights must be non-negative and sum to 1".into()));
            }
        }
        Ok(())
    }
}

/// Anything with a token count, for loss averaging in the trace.
pub trait Sample {
    fn token_count(&self) -> usize;
}

impl Sample for CorrectionSample {
    fn token_count(&self) -> usize {
        self.ids.len()
    }
}

impl Sample for TaggingSample {
    fn token_count(&self) -> usize {
        self.ids.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub stage: usize,
    pub epoch: usize,
    pub batches: usize,
    pub samples: usize,
    /// Token-weighted mean of the pre-update batch losses.
    pub loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub epochs: Vec<EpochRecord>,
}

impl TrainTrace {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.loss).collect()
    }

    /// `stage<TAB>epoch<TAB>batches<TAB>samples<TAB>loss` with a header row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("stage\tepoch\tbatches\tsamples\tloss\n");
        for e in &self.epochs {
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", e.stage, e.epoch, e.batches, e.samples, e.loss);
        }
        out
    }
}

/// Trains on each stage in turn, `epochs_per_stage` epochs apiece,
/// reshuffling every epoch from `rng`. Empty stages are skipped.
///
/// `loss_and_grad` evaluates a batch at the current parameters, typically
/// by building an [`Objective`](super::objective::Objective) over it.
pub fn train_stages<S, F>(
    params: &mut TaggerParams,
    stages: &[Vec<S>],
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
    loss_and_grad: F,
) -> Result<TrainTrace>
where
    S: Sample,
    F: Fn(&TaggerParams, &[&S]) -> Result<(f64, TaggerParams)>,
{
    config.validate()?;
    if stages.iter().all(Vec::is_empty) {
        return Err(Error::Undefined("training"));
    }
    let mut trace = TrainTrace::default();
    for (stage, data) in stages.iter().enumerate() {
        if data.is_empty() {
            continue;
        }
        let mut order: Vec<usize> = (0..data.len()).collect();
        for epoch in 0..config.epochs_per_stage {
            order.shuffle(rng);
            let (mut weighted, mut tokens, mut batches) = (0.0, 0usize, 0usize);
            for (batch, chunk) in order.chunks(config.batch_size).enumerate() {
                let samples: Vec<&S> = chunk.iter().map(|&i| &data[i]).collect();
                let (loss, grad) = loss_and_grad(params, &samples)?;
                if !loss.is_finite() || grad.tensors().iter().any(|(_, t)| t.iter().any(|x| !x.is_finite())) {
                    return Err(Error::Divergence { stage, epoch, batch });
                }
                params.add_scaled(-config.learning_rate, &grad);
                let n: usize = samples.iter().map(|s| s.token_count()).sum();
                weighted += loss * n as f64;
                tokens += n;
                batches += 1;
            }
            let loss = if tokens == 0 { 0.0 } else { weighted / tokens as f64 };
            trace.epochs.push(EpochRecord { stage, epoch, batches, samples: data.len(), loss });
        }
    }
    Ok(trace)
}
