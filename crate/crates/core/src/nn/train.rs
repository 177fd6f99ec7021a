//! Mini-batch training with Adam and per-epoch held-out evaluation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::loss::cross_entropy_loss;
use super::network::{Network, OutputGrad, Parameters};
use crate::data::{Sample, Split};
use crate::error::{Error, Result};
use crate::image::{FeatureMap, Image};
use crate::metrics::{argmax_labels, mask_labels, miou, SegmentationPair};

/// Floor for the standard deviation in [`network_input`], so flat images stay finite.
const MIN_STD: f64 = 1e-3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Half-cosine decay from the base rate towards zero over the run.
    Cosine,
}

impl LrSchedule {
    /// Learning rate for 1-based `epoch` of `epochs`.
    pub fn lr(self, base: f64, epoch: usize, epochs: usize) -> f64 {
        match self {
            LrSchedule::Constant => base,
            LrSchedule::Cosine => {
                let progress = (epoch - 1) as f64 / epochs as f64;
                base * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    pub schedule: LrSchedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 8,
            seed: 0,
            adam: AdamConfig::default(),
            schedule: LrSchedule::Constant,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean training loss over the epoch.
    pub loss: f64,
    /// Mean per-image MIoU on the evaluation samples after the epoch.
    pub miou: f64,
}

/// Per-image standardization to zero mean and unit variance. Without it the
/// constant part of the image dominates every Hough sum.
pub fn network_input(image: &Image) -> FeatureMap {
    let v = image.values();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    let inv = 1.0 / sd.max(MIN_STD);
    let values = v.iter().map(|x| (x - mean) * inv).collect();
    FeatureMap::from_vec(1, image.height(), image.width(), values).expect("finite values")
}

fn sample_input(sample: &Sample) -> FeatureMap {
    network_input(&sample.image)
}

fn loss_and_grad(net: &Network, params: &Parameters, sample: &Sample) -> Result<(f64, Parameters)> {
    let tape = net.forward(params, &sample_input(sample))?;
    let (loss, g) = cross_entropy_loss(tape.output(), &sample.mask)?;
    let (_, grads) = net.backward(params, &tape, OutputGrad::Logits(g))?;
    Ok((loss, grads))
}

/// Labels predicted for one sample.
pub fn predict_labels(net: &Network, params: &Parameters, sample: &Sample) -> Result<Vec<u8>> {
    Ok(argmax_labels(&net.predict(params, &sample_input(sample))?))
}

/// Mean per-image MIoU.
pub fn evaluate(net: &Network, params: &Parameters, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::argument("no samples to evaluate"));
    }
    let scores = samples
        .par_iter()
        .map(|s| {
            let pred = predict_labels(net, params, s)?;
            let pair = SegmentationPair::new(s.mask.height(), s.mask.width(), pred, mask_labels(s.mask.values()))?;
            Ok(miou(&pair))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Trains on the `Train` samples and evaluates on the `Test` samples after
/// every epoch (on the training samples when there is no test split).
pub fn train(net: &Network, params: &mut Parameters, samples: &[Sample], cfg: &TrainConfig) -> Result<Vec<EpochLog>> {
    train_with(net, params, samples, cfg, |_| {})
}

pub fn train_with(
    net: &Network,
    params: &mut Parameters,
    samples: &[Sample],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<Vec<EpochLog>> {
    if cfg.batch_size == 0 {
        return Err(Error::argument("batch size must be positive"));
    }
    if !(cfg.adam.lr > 0.0 && cfg.adam.lr.is_finite()) {
        return Err(Error::argument("learning rate must be positive"));
    }
    let train_set: Vec<&Sample> = samples.iter().filter(|s| s.split == Split::Train).collect();
    let mut eval_set: Vec<Sample> = samples.iter().filter(|s| s.split == Split::Test).cloned().collect();
    if cfg.epochs == 0 {
        return Ok(Vec::new());
    }
    if train_set.is_empty() {
        return Err(Error::argument("no training samples"));
    }
    if eval_set.is_empty() {
        log::warn!("no test samples, reporting MIoU on the training samples");
        eval_set = train_set.iter().map(|s| (*s).clone()).collect();
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = AdamState::new(params);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut logs = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let adam = AdamConfig {
            lr: cfg.schedule.lr(cfg.adam.lr, epoch, cfg.epochs),
            ..cfg.adam
        };
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let results = batch
                .par_iter()
                .map(|&k| loss_and_grad(net, params, train_set[k]))
                .collect::<Result<Vec<_>>>()?;
            let mut grads = Parameters::zeros_like(params);
            for (loss, g) in &results {
                total += loss;
                grads.add_assign(g);
            }
            grads.scale(1.0 / batch.len() as f64);
            adam_step(params, &grads, &mut state, &adam);
        }
        if !params.all_finite() {
            return Err(Error::argument(format!("training diverged in epoch {epoch}")));
        }
        let log = EpochLog {
            epoch,
            loss: total / train_set.len() as f64,
            miou: evaluate(net, params, &eval_set)?,
        };
        log::info!("epoch {epoch}: loss {:.5} miou {:.4}", log.loss, log.miou);
        on_epoch(&log);
        logs.push(log);
    }
    Ok(logs)
}
