//! Mean intersection-over-union for binary segmentation.

use crate::error::{Error, Result};
use crate::image::FeatureMap;

/// Prediction and ground truth label grids of equal size.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentationPair {
    height: usize,
    width: usize,
    prediction: Vec<u8>,
    truth: Vec<u8>,
}

impl SegmentationPair {
    pub fn new(height: usize, width: usize, prediction: Vec<u8>, truth: Vec<u8>) -> Result<Self> {
        if prediction.len() != height * width || truth.len() != height * width {
            return Err(Error::argument(format!(
                "label grids must both hold {} labels, got {} and {}",
                height * width,
                prediction.len(),
                truth.len()
            )));
        }
        if prediction.iter().chain(&truth).any(|&l| l > 1) {
            return Err(Error::argument("labels must be 0 or 1"));
        }
        Ok(SegmentationPair {
            height,
            width,
            prediction,
            truth,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn prediction(&self) -> &[u8] {
        &self.prediction
    }

    pub fn truth(&self) -> &[u8] {
        &self.truth
    }
}

pub const CLASSES: usize = 2;

/// Mean over background and foreground of `|A ∩ G| / |A ∪ G|`. A class
/// missing from both grids scores 1.
pub fn miou(pair: &SegmentationPair) -> f64 {
    miou_labels(&pair.prediction, &pair.truth, CLASSES)
}

fn miou_labels(prediction: &[u8], truth: &[u8], classes: usize) -> f64 {
    let mut inter = vec![0usize; classes];
    let mut union = vec![0usize; classes];
    for (&p, &g) in prediction.iter().zip(truth) {
        let (p, g) = (p as usize, g as usize);
        if p == g {
            inter[p] += 1;
            union[p] += 1;
        } else {
            union[p] += 1;
            union[g] += 1;
        }
    }
    let total: f64 = inter
        .iter()
        .zip(&union)
        .map(|(&i, &u)| if u == 0 { 1.0 } else { i as f64 / u as f64 })
        .sum();
    total / classes as f64
}

/// Per-pixel argmax over the channels of a probability map; ties go to the
/// lower class.
pub fn argmax_labels(probs: &FeatureMap) -> Vec<u8> {
    let plane = probs.height() * probs.width();
    (0..plane)
        .map(|p| {
            let mut best = 0;
            for c in 1..probs.channels() {
                if probs.channel(c)[p] > probs.channel(best)[p] {
                    best = c;
                }
            }
            best as u8
        })
        .collect()
}

/// Thresholds a `{0, 1}`-valued mask image into labels.
pub fn mask_labels(mask: &[f64]) -> Vec<u8> {
    mask.iter().map(|&v| u8::from(v >= 0.5)).collect()
}
