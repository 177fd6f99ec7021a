use crate::image::FeatureMap;

#[inline]
pub fn softsign(x: f64) -> f64 {
    x / (1.0 + x.abs())
}

#[inline]
pub fn softsign_derivative(x: f64) -> f64 {
    let d = 1.0 + x.abs();
    1.0 / (d * d)
}

pub fn softsign_forward(fm: &FeatureMap) -> FeatureMap {
    let mut out = fm.clone();
    out.values_mut().iter_mut().for_each(|v| *v = softsign(*v));
    out
}

/// Gradient with respect to the pre-activation `input`.
pub fn softsign_backward(input: &FeatureMap, grad_out: &FeatureMap) -> FeatureMap {
    let mut out = grad_out.clone();
    out.values_mut()
        .iter_mut()
        .zip(input.values())
        .for_each(|(g, &x)| *g *= softsign_derivative(x));
    out
}

/// Per-pixel softmax across channels, shifted by the per-pixel maximum.
pub fn softmax_channels(fm: &FeatureMap) -> FeatureMap {
    let (c, h, w) = fm.shape();
    let plane = h * w;
    let src = fm.values();
    let mut out = fm.clone();
    let dst = out.values_mut();
    for p in 0..plane {
        let max = (0..c).map(|k| src[k * plane + p]).fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for k in 0..c {
            let e = (src[k * plane + p] - max).exp();
            dst[k * plane + p] = e;
            total += e;
        }
        for k in 0..c {
            dst[k * plane + p] /= total;
        }
    }
    out
}

/// Vector-Jacobian product of the softmax given its output `probs`.
pub fn softmax_backward(probs: &FeatureMap, grad_out: &FeatureMap) -> FeatureMap {
    let (c, h, w) = probs.shape();
    let plane = h * w;
    let p = probs.values();
    let g = grad_out.values();
    let mut out = grad_out.clone();
    let dst = out.values_mut();
    for px in 0..plane {
        let inner: f64 = (0..c).map(|k| p[k * plane + px] * g[k * plane + px]).sum();
        for k in 0..c {
            dst[k * plane + px] = p[k * plane + px] * (g[k * plane + px] - inner);
        }
    }
    out
}
