//! 3x3 convolution with stride 1 and zero padding 1, optionally preceded by
//! 2x nearest-neighbour upscaling, plus the 2x2 average pooling used to
//! bring the input down to the Hough layer's side.

use crate::error::{Error, Result};
use crate::image::FeatureMap;

pub const KERNEL: usize = 3;
const TAPS: usize = KERNEL * KERNEL;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Softsign,
    Softmax,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    /// Nearest-neighbour pre-upsampling factor, 1 or 2.
    pub upscale: usize,
    pub activation: Activation,
}

impl ConvSpec {
    pub fn new(in_channels: usize, out_channels: usize, activation: Activation) -> Self {
        ConvSpec {
            in_channels,
            out_channels,
            upscale: 1,
            activation,
        }
    }

    pub fn upscaled(mut self) -> Self {
        self.upscale = 2;
        self
    }

    pub fn weight_count(&self) -> usize {
        self.out_channels * self.in_channels * TAPS
    }

    pub fn param_count(&self) -> usize {
        self.weight_count() + self.out_channels
    }
}

/// Weights laid out `[out][in][ky][kx]`, one bias per output channel. Also
/// used to hold the matching gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvParams {
    pub in_channels: usize,
    pub out_channels: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvParams {
    pub fn zeros(in_channels: usize, out_channels: usize) -> Self {
        ConvParams {
            in_channels,
            out_channels,
            weights: vec![0.0; out_channels * in_channels * TAPS],
            bias: vec![0.0; out_channels],
        }
    }

    pub fn weight(&self, o: usize, i: usize, ky: usize, kx: usize) -> f64 {
        self.weights[((o * self.in_channels + i) * KERNEL + ky) * KERNEL + kx]
    }

    pub fn len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.bias)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }
}

/// Nearest-neighbour enlargement by an integer factor.
pub fn upsample_nearest(fm: &FeatureMap, factor: usize) -> FeatureMap {
    if factor == 1 {
        return fm.clone();
    }
    let (c, h, w) = fm.shape();
    let (oh, ow) = (h * factor, w * factor);
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let plane = fm.channel(ch);
        for y in 0..oh {
            let row = &plane[(y / factor) * w..(y / factor + 1) * w];
            out.extend((0..ow).map(|x| row[x / factor]));
        }
    }
    FeatureMap::from_vec(c, oh, ow, out).expect("shape is consistent")
}

/// Adjoint of [`upsample_nearest`]: sums each `factor x factor` block.
pub fn upsample_nearest_backward(grad: &FeatureMap, factor: usize) -> FeatureMap {
    if factor == 1 {
        return grad.clone();
    }
    let (c, h, w) = grad.shape();
    let (oh, ow) = (h / factor, w / factor);
    let mut out = FeatureMap::zeros(c, oh, ow);
    let vals = out.values_mut();
    for ch in 0..c {
        let g = grad.channel(ch);
        for y in 0..h {
            for x in 0..w {
                vals[(ch * oh + y / factor) * ow + x / factor] += g[y * w + x];
            }
        }
    }
    out
}

/// 2x2 average pooling with stride 2.
pub fn avg_pool2(fm: &FeatureMap) -> Result<FeatureMap> {
    let (c, h, w) = fm.shape();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::argument(format!("cannot 2x2-pool a {h}x{w} map")));
    }
    let mut out = upsample_nearest_backward(fm, 2);
    out.values_mut().iter_mut().for_each(|v| *v *= 0.25);
    debug_assert_eq!(out.shape(), (c, h / 2, w / 2));
    Ok(out)
}

pub fn avg_pool2_backward(grad: &FeatureMap) -> FeatureMap {
    let mut out = upsample_nearest(grad, 2);
    out.values_mut().iter_mut().for_each(|v| *v *= 0.25);
    out
}

fn check(input: &FeatureMap, spec: &ConvSpec, params: &ConvParams) -> Result<()> {
    if input.channels() != spec.in_channels {
        return Err(Error::argument(format!(
            "convolution expects {} input channels, got {}",
            spec.in_channels,
            input.channels()
        )));
    }
    if params.in_channels != spec.in_channels || params.out_channels != spec.out_channels {
        return Err(Error::argument("convolution parameters do not match the layer"));
    }
    if !matches!(spec.upscale, 1 | 2) {
        return Err(Error::argument(format!("unsupported upscale {}", spec.upscale)));
    }
    Ok(())
}

/// Pre-activation output of one convolution layer.
pub fn conv2d_forward(input: &FeatureMap, spec: &ConvSpec, params: &ConvParams) -> Result<FeatureMap> {
    check(input, spec, params)?;
    let x = upsample_nearest(input, spec.upscale);
    let (cin, h, w) = x.shape();
    let cout = spec.out_channels;
    let mut out = vec![0.0; cout * h * w];
    for o in 0..cout {
        let dst = &mut out[o * h * w..(o + 1) * h * w];
        dst.iter_mut().for_each(|v| *v = params.bias[o]);
        for i in 0..cin {
            let src = x.channel(i);
            for ky in 0..KERNEL {
                for kx in 0..KERNEL {
                    let k = params.weight(o, i, ky, kx);
                    if k == 0.0 {
                        continue;
                    }
                    // output (y, x) reads input (y + ky - 1, x + kx - 1)
                    let y0 = 1usize.saturating_sub(ky);
                    let y1 = (h + 1 - ky).min(h);
                    let x0 = 1usize.saturating_sub(kx);
                    let x1 = (w + 1 - kx).min(w);
                    for y in y0..y1 {
                        let sy = y + ky - 1;
                        let srow = &src[sy * w..(sy + 1) * w];
                        let drow = &mut dst[y * w..(y + 1) * w];
                        for xx in x0..x1 {
                            drow[xx] += k * srow[xx + kx - 1];
                        }
                    }
                }
            }
        }
    }
    FeatureMap::from_vec(cout, h, w, out)
}

/// Gradients of a convolution layer given the gradient of its
/// pre-activation output and the layer's (pre-upscale) input.
pub fn conv2d_backward(
    grad_out: &FeatureMap,
    input: &FeatureMap,
    spec: &ConvSpec,
    params: &ConvParams,
) -> Result<(FeatureMap, ConvParams)> {
    check(input, spec, params)?;
    let x = upsample_nearest(input, spec.upscale);
    let (cin, h, w) = x.shape();
    if grad_out.shape() != (spec.out_channels, h, w) {
        return Err(Error::argument(format!(
            "gradient shape {:?} does not match output {:?}",
            grad_out.shape(),
            (spec.out_channels, h, w)
        )));
    }
    let mut grads = ConvParams::zeros(cin, spec.out_channels);
    let mut grad_x = vec![0.0; cin * h * w];
    for o in 0..spec.out_channels {
        let g = grad_out.channel(o);
        grads.bias[o] = g.iter().sum();
        for i in 0..cin {
            let src = x.channel(i);
            let gx = &mut grad_x[i * h * w..(i + 1) * h * w];
            for ky in 0..KERNEL {
                for kx in 0..KERNEL {
                    let k = params.weight(o, i, ky, kx);
                    let y0 = 1usize.saturating_sub(ky);
                    let y1 = (h + 1 - ky).min(h);
                    let x0 = 1usize.saturating_sub(kx);
                    let x1 = (w + 1 - kx).min(w);
                    let mut acc = 0.0;
                    for y in y0..y1 {
                        let sy = y + ky - 1;
                        let grow = &g[y * w..(y + 1) * w];
                        let srow = &src[sy * w..(sy + 1) * w];
                        let gxrow = &mut gx[sy * w..(sy + 1) * w];
                        for xx in x0..x1 {
                            acc += grow[xx] * srow[xx + kx - 1];
                            gxrow[xx + kx - 1] += k * grow[xx];
                        }
                    }
                    grads.weights[((o * cin + i) * KERNEL + ky) * KERNEL + kx] = acc;
                }
            }
        }
    }
    let grad_x = FeatureMap::from_vec(cin, h, w, grad_x)?;
    Ok((upsample_nearest_backward(&grad_x, spec.upscale), grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{central_difference, relative_error};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(weights: [f64; 9]) -> ConvParams {
        ConvParams {
            in_channels: 1,
            out_channels: 1,
            weights: weights.to_vec(),
            bias: vec![0.0],
        }
    }

    fn random_map(rng: &mut impl Rng, c: usize, h: usize, w: usize) -> FeatureMap {
        FeatureMap::from_vec(c, h, w, (0..c * h * w).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn box_sum_with_padding() {
        let input = FeatureMap::from_vec(1, 4, 4, vec![1.0; 16]).unwrap();
        let spec = ConvSpec::new(1, 1, Activation::None);
        let out = conv2d_forward(&input, &spec, &single([1.0; 9])).unwrap();
        let expected = [
            4.0, 6.0, 6.0, 4.0, 6.0, 9.0, 9.0, 6.0, 6.0, 9.0, 9.0, 6.0, 4.0, 6.0, 6.0, 4.0,
        ];
        assert_eq!(out.values(), &expected);
    }

    #[test]
    fn identity_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let input = random_map(&mut rng, 1, 5, 6);
        let spec = ConvSpec::new(1, 1, Activation::None);
        let id = single([0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(conv2d_forward(&input, &spec, &id).unwrap(), input);
    }

    #[test]
    fn upscale_runs_on_enlarged_input() {
        let input = FeatureMap::from_vec(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let spec = ConvSpec::new(1, 1, Activation::None).upscaled();
        let id = single([0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let out = conv2d_forward(&input, &spec, &id).unwrap();
        assert_eq!(out.shape(), (1, 4, 4));
        assert_eq!(out.values(), upsample_nearest(&input, 2).values());
        assert_eq!(out.get(0, 3, 1), 3.0);
    }

    #[test]
    fn channel_mismatch() {
        let spec = ConvSpec::new(2, 1, Activation::None);
        let params = ConvParams::zeros(2, 1);
        assert!(conv2d_forward(&FeatureMap::zeros(1, 4, 4), &spec, &params).is_err());
    }

    #[test]
    fn zero_gradient_in_zero_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let input = random_map(&mut rng, 2, 4, 4);
        let spec = ConvSpec::new(2, 3, Activation::None);
        let mut params = ConvParams::zeros(2, 3);
        params.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        let (gx, gp) = conv2d_backward(&FeatureMap::zeros(3, 4, 4), &input, &spec, &params).unwrap();
        assert!(gx.values().iter().chain(gp.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn identity_kernel_routes_single_pixel() {
        let input = FeatureMap::zeros(1, 4, 4);
        let spec = ConvSpec::new(1, 1, Activation::None);
        let id = single([0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let mut g = FeatureMap::zeros(1, 4, 4);
        g.values_mut()[6] = 1.0;
        let (gx, _) = conv2d_backward(&g, &input, &spec, &id).unwrap();
        assert_eq!(gx, g);
    }

    #[test]
    fn matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for spec in [
            ConvSpec::new(2, 3, Activation::None),
            ConvSpec::new(3, 2, Activation::None).upscaled(),
        ] {
            let input = random_map(&mut rng, spec.in_channels, 3, 4);
            let mut params = ConvParams::zeros(spec.in_channels, spec.out_channels);
            params.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
            let probe = random_map(&mut rng, spec.out_channels, 3 * spec.upscale, 4 * spec.upscale);
            let loss = |x: &FeatureMap, p: &ConvParams| conv2d_forward(x, &spec, p).unwrap().dot(&probe);
            let (gx, gp) = conv2d_backward(&probe, &input, &spec, &params).unwrap();

            let fd_x = central_difference(input.values(), 1e-5, |v| {
                loss(&FeatureMap::from_vec(spec.in_channels, 3, 4, v.to_vec()).unwrap(), &params)
            });
            assert!(relative_error(gx.values(), &fd_x) < 1e-4);

            let flat: Vec<f64> = params.iter().copied().collect();
            let fd_p = central_difference(&flat, 1e-5, |v| {
                let mut p = params.clone();
                p.iter_mut().zip(v).for_each(|(a, b)| *a = *b);
                loss(&input, &p)
            });
            let analytic: Vec<f64> = gp.iter().copied().collect();
            assert!(relative_error(&analytic, &fd_p) < 1e-4);
        }
    }

    #[test]
    fn pooling_pair_is_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_map(&mut rng, 2, 6, 4);
        let y = random_map(&mut rng, 2, 3, 2);
        let lhs = avg_pool2(&x).unwrap().dot(&y);
        let rhs = x.dot(&avg_pool2_backward(&y));
        assert!((lhs - rhs).abs() < 1e-12);
        assert!(avg_pool2(&FeatureMap::zeros(1, 3, 4)).is_err());
    }
}
