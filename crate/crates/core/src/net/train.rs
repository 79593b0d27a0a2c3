//! Mini-batch training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{AdamConfig, OptimizerState};
use super::loss::bce_loss;
use super::model::Model;
use super::params::{ModelConfig, Parameters};
use super::tensor::HeatmapSet;
use crate::error::{Error, Result};

/// One input interval with its target heatmaps.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub input: Vec<f64>,
    pub target: HeatmapSet,
}

pub struct Trainer {
    pub model: Model,
    pub params: Parameters,
    pub optimizer: OptimizerState,
    pub batch_size: usize,
    rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(cfg: ModelConfig, adam: AdamConfig, batch_size: usize, seed: u64) -> Result<Self> {
        let params = Parameters::init(&cfg, seed)?;
        Self::from_params(cfg, params, adam, batch_size, seed)
    }

    pub fn from_params(
        cfg: ModelConfig,
        params: Parameters,
        adam: AdamConfig,
        batch_size: usize,
        seed: u64,
    ) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::InvalidInput("batch size must be positive".into()));
        }
        let model = Model::new(cfg)?;
        let optimizer = OptimizerState::new(&params, adam);
        Ok(Self {
            model,
            params,
            optimizer,
            batch_size,
            // shuffling stream separate from the init stream
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_5EED),
        })
    }

    /// Runs one gradient step and returns the batch loss before the update.
    pub fn step(&mut self, batch: &[&TrainingPair]) -> Result<f64> {
        let inputs: Vec<Vec<f64>> = batch.iter().map(|p| p.input.clone()).collect();
        let targets: Vec<HeatmapSet> = batch.iter().map(|p| p.target.clone()).collect();
        let (loss, grads) = self.model.loss_and_grad(&self.params, &inputs, &targets)?;
        self.optimizer.step(&mut self.params, &grads)?;
        if !self.params.all_finite() {
            return Err(Error::Numerical("parameters diverged".into()));
        }
        Ok(loss)
    }

    /// One shuffled pass over `data`; returns the mean batch loss.
    pub fn epoch(&mut self, data: &[TrainingPair]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::InvalidInput("empty training set".into()));
        }
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut self.rng);
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(self.batch_size) {
            let batch: Vec<&TrainingPair> = chunk.iter().map(|&i| &data[i]).collect();
            total += self.step(&batch)?;
            batches += 1;
        }
        Ok(total / batches as f64)
    }

    /// Mean loss over `data` without updating.
    pub fn evaluate(&self, data: &[TrainingPair]) -> Result<f64> {
        let inputs: Vec<Vec<f64>> = data.iter().map(|p| p.input.clone()).collect();
        let targets: Vec<HeatmapSet> = data.iter().map(|p| p.target.clone()).collect();
        let preds = self.model.forward(&self.params, &inputs)?;
        bce_loss(&preds, &targets)
    }
}
