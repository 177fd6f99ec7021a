use crate::error::{Error, Result};
use crate::image::{FeatureMap, Image};

const PROB_FLOOR: f64 = 1e-12;

/// Mean per-pixel negative log-likelihood of a 2-channel softmax output
/// against a binary mask, with the gradient taken with respect to the
/// logits that produced `probs`: `(probs - onehot) / pixels`.
pub fn cross_entropy_loss(probs: &FeatureMap, mask: &Image) -> Result<(f64, FeatureMap)> {
    let (c, h, w) = probs.shape();
    if c != 2 || (h, w) != (mask.height(), mask.width()) {
        return Err(Error::argument(format!(
            "expected 2x{}x{} probabilities, got {c}x{h}x{w}",
            mask.height(),
            mask.width()
        )));
    }
    let plane = h * w;
    let n = plane as f64;
    let mut loss = 0.0;
    let mut grad = probs.clone();
    let g = grad.values_mut();
    for (px, &m) in mask.values().iter().enumerate() {
        if m != 0.0 && m != 1.0 {
            return Err(Error::argument(format!("mask value {m} is not binary")));
        }
        let label = m as usize;
        loss -= probs.channel(label)[px].max(PROB_FLOOR).ln();
        g[label * plane + px] -= 1.0;
    }
    g.iter_mut().for_each(|v| *v /= n);
    Ok((loss / n, grad))
}
