//! Training loop, reference loss and the Q quality score.
//!
//! Each epoch estimates the parameter-shift gradient from fresh shots,
//! takes one Adam step, then records MMD^2 of a fresh shot sample of the
//! updated circuit against the full training set. The recording sample is
//! one circuit evaluation on top of the `2 n (L + 1) + 1` used by the
//! gradient.

mod adam;
mod gradient;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codes::{BinaryCode, CodeKind};
use crate::data::{Dataset, DiscretizedSpace};
use crate::error::{Error, Result};
use crate::mmd::{mmd2_with, Estimator, KernelConfig};
use crate::seed;
use crate::sim::{init_params, CircuitShape};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradient::{shift_gradient, GradientEstimate, GradientMode, Objective};

/// Value substituted for nonpositive loss estimates before scoring.
pub const LOSS_CLAMP: f64 = 1e-12;

/// Seeds for the independent random streams of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub init: u64,
    pub shots: u64,
    pub code: u64,
    pub reference: u64,
}

impl Seeds {
    pub fn from_master(master: u64) -> Self {
        Self {
            init: seed::derive(master, "init"),
            shots: seed::derive(master, "shots"),
            code: seed::derive(master, "code"),
            reference: seed::derive(master, "reference"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub shots: usize,
    pub code: CodeKind,
    pub shape: CircuitShape,
    pub kernel: KernelConfig,
    pub estimator: Estimator,
    pub adam: AdamConfig,
    pub seeds: Seeds,
    pub dataset: Dataset,
    /// Size of the held-out sample behind the reference loss.
    pub test_samples: usize,
    /// Also record the loss under exact Born probabilities. Costs
    /// `O(4^n)` per epoch.
    pub exact_loss: bool,
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if self.shots == 0 {
            return Err(Error::InvalidArgument("shots must be at least 1".into()));
        }
        if self.test_samples == 0 {
            return Err(Error::InvalidArgument("test_samples must be at least 1".into()));
        }
        if self.dataset.is_empty() {
            return Err(Error::InvalidArgument("dataset is empty".into()));
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    /// MMD^2 estimate after each epoch's update.
    pub losses: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_losses: Option<Vec<f64>>,
    pub initial_theta: Vec<f64>,
    pub final_theta: Vec<f64>,
    pub q_score: f64,
    pub reference_loss: f64,
    /// Number of loss entries raised to [`LOSS_CLAMP`] before scoring.
    pub clamp_count: usize,
    /// Representative indices of the final epoch's recording sample.
    pub synthetic: Vec<u32>,
    pub circuits_per_epoch: usize,
    pub wallclock_ms: Vec<f64>,
}

impl TrainingRecord {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("history is never empty")
    }

    /// First epoch (1-based) whose loss is within `factor` times the reference.
    pub fn epochs_to_reference(&self, factor: f64) -> Option<usize> {
        self.losses.iter().position(|&l| l <= factor * self.reference_loss).map(|i| i + 1)
    }
}

/// Geometric mean `exp(mean(ln loss))` of a loss history.
pub fn q_score(history: &[f64]) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::InvalidArgument("empty loss history".into()));
    }
    let mut acc = 0.0;
    for (epoch, &v) in history.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::NonPositiveLoss { epoch, value: v });
        }
        acc += v.ln();
    }
    Ok((acc / history.len() as f64).exp())
}

/// MMD^2 between a fresh sample from the training distribution, snapped to
/// representatives, and the training set itself.
pub fn reference_loss(
    train: &Dataset,
    space: &DiscretizedSpace,
    cfg: &KernelConfig,
    test_size: usize,
    seed: u64,
) -> Result<f64> {
    reference_loss_with(train, space, cfg, test_size, seed, Estimator::Biased)
}

pub fn reference_loss_with(
    train: &Dataset,
    space: &DiscretizedSpace,
    cfg: &KernelConfig,
    test_size: usize,
    seed: u64,
    estimator: Estimator,
) -> Result<f64> {
    if test_size == 0 {
        return Err(Error::InvalidArgument("test sample size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let test = train
        .target
        .sample(test_size, &mut rng)
        .into_iter()
        .map(|x| space.discretize(x).map(|j| space.representative(j)))
        .collect::<Result<Vec<_>>>()?;
    mmd2_with(&test, &train.samples, cfg, estimator)
}

pub fn train(config: &TrainingConfig) -> Result<TrainingRecord> {
    config.validate()?;
    let n = config.shape.qubits as u32;
    let space = DiscretizedSpace::new(n)?;
    let code = BinaryCode::new(config.code, n, config.seeds.code)?;
    let objective = Objective::new(code, &space, &config.kernel, &config.dataset.samples)?;
    let reference = reference_loss_with(
        &config.dataset,
        &space,
        &config.kernel,
        config.test_samples,
        config.seeds.reference,
        config.estimator,
    )?;

    let mut params = init_params(config.shape, config.seeds.init);
    let initial_theta = params.theta().to_vec();
    let mut adam = AdamState::new(config.adam, params.theta().len());
    let mut losses = Vec::with_capacity(config.epochs);
    let mut exact_losses = config.exact_loss.then(|| Vec::with_capacity(config.epochs));
    let mut wallclock_ms = Vec::with_capacity(config.epochs);
    let mut clamp_count = 0;
    let mut circuits_per_epoch = 0;
    let mut last_sample = Vec::new();

    for epoch in 0..config.epochs {
        let started = Instant::now();
        let stream = seed::derive_indexed(config.seeds.shots, epoch as u64);
        let grad = objective.shift_gradient(&params, GradientMode::Shots { shots: config.shots, seed: stream })?;
        adam.update(params.theta_mut(), &grad.gradient)?;

        let sample = objective.sample_model(&params, config.shots, seed::derive_indexed(stream, u64::MAX));
        let mut loss = objective.loss_from_counts(&sample, config.estimator);
        if loss <= 0.0 {
            loss = LOSS_CLAMP;
            clamp_count += 1;
        }
        losses.push(loss);
        if let Some(exact) = exact_losses.as_mut() {
            exact.push(objective.loss_exact(&params)?);
        }
        circuits_per_epoch = grad.circuits + 1;
        last_sample = sample;
        wallclock_ms.push(started.elapsed().as_secs_f64() * 1e3);
    }

    let synthetic = last_sample
        .iter()
        .flat_map(|&(j, c)| std::iter::repeat(j).take(c as usize))
        .collect();
    Ok(TrainingRecord {
        q_score: q_score(&losses)?,
        losses,
        exact_losses,
        initial_theta,
        final_theta: params.theta().to_vec(),
        reference_loss: reference,
        clamp_count,
        synthetic,
        circuits_per_epoch,
        wallclock_ms,
    })
}
