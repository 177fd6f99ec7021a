//! The segmentation autoencoder: four convolutions, FHT, HRT, four "inner"
//! convolutions in Radon space, RHT, TFHT and four decoder convolutions.
//!
//! Every convolution is 3x3 with stride 1 and padding 1. The encoder halves
//! the resolution twice with 2x2 average pooling (after the second and the
//! fourth convolution) so that the Hough layer sees a `size / 4` square; the
//! two upscaling decoder convolutions restore the input size.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::activation::{softmax_backward, softmax_channels, softsign_backward, softsign_forward};
use super::conv::{
    avg_pool2, avg_pool2_backward, conv2d_backward, conv2d_forward, Activation, ConvParams, ConvSpec,
};
use crate::error::{Error, Result};
use crate::fht::{fht_featuremap, tfht_featuremap};
use crate::image::FeatureMap;
use crate::radon::{radon_width, RadonHoughMap};

/// One row of the reference layer table.
#[derive(Clone, Copy)]
enum Row {
    Conv {
        filters: usize,
        upscale: bool,
        activation: Activation,
    },
    Fht,
    Hrt,
    Rht,
    Tfht,
}

const fn conv(filters: usize) -> Row {
    Row::Conv {
        filters,
        upscale: false,
        activation: Activation::Softsign,
    }
}

const fn conv_up(filters: usize) -> Row {
    Row::Conv {
        filters,
        upscale: true,
        activation: Activation::Softsign,
    }
}

const TABLE: [Row; 16] = [
    conv(4),
    conv(8),
    conv(16),
    conv(16),
    Row::Fht,
    Row::Hrt,
    conv(16),
    conv(16),
    conv(16),
    conv(16),
    Row::Rht,
    Row::Tfht,
    conv_up(8),
    conv_up(4),
    conv(4),
    Row::Conv {
        filters: 2,
        upscale: false,
        activation: Activation::Softmax,
    },
];

/// Table rows followed by a 2x2 average pooling.
const POOL_AFTER: [usize; 2] = [2, 4];
/// Table rows of the convolutions between HRT and RHT.
pub const INNER_ROWS: [usize; 4] = [7, 8, 9, 10];

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    pub input_size: usize,
    /// Number of angles of the HRT layer.
    pub n: usize,
    pub scale_x: f64,
    /// Every convolution width except the 2-class output is divided by this.
    pub width_divisor: usize,
}

impl NetworkSpec {
    /// Full-width network on 256x256 inputs.
    pub fn reference(n: usize, scale_x: f64) -> Self {
        NetworkSpec {
            input_size: 256,
            n,
            scale_x,
            width_divisor: 1,
        }
    }

    /// Quarter-width variant on smaller inputs.
    pub fn reduced(input_size: usize, n: usize, scale_x: f64) -> Self {
        NetworkSpec {
            input_size,
            n,
            scale_x,
            width_divisor: 4,
        }
    }

    /// Side of the square fed to the FHT layer.
    pub fn hough_side(&self) -> usize {
        self.input_size / 4
    }

    pub fn validate(&self) -> Result<()> {
        let side = self.hough_side();
        if !self.input_size.is_multiple_of(4) || side < 2 || !side.is_power_of_two() {
            return Err(Error::argument(format!(
                "input size {} must be four times a power of two >= 2",
                self.input_size
            )));
        }
        if self.n == 0 {
            return Err(Error::argument("angle count n must be positive"));
        }
        if self.width_divisor == 0 {
            return Err(Error::argument("width divisor must be positive"));
        }
        radon_width(side, self.scale_x)?;
        Ok(())
    }

    fn width(&self, filters: usize, activation: Activation) -> usize {
        if activation == Activation::Softmax {
            filters
        } else {
            (filters / self.width_divisor).max(1)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LayerKind {
    Conv { spec: ConvSpec, param: usize },
    AvgPool,
    Fht,
    Hrt,
    Rht,
    Tfht,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// 1-based row of the reference table; `None` for pooling.
    pub row: Option<usize>,
    pub kind: LayerKind,
}

/// Trainable state: one [`ConvParams`] per convolution, in layer order.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters {
    pub convs: Vec<ConvParams>,
}

impl Parameters {
    pub fn zeros_like(other: &Parameters) -> Self {
        Parameters {
            convs: other
                .convs
                .iter()
                .map(|c| ConvParams::zeros(c.in_channels, c.out_channels))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.convs.iter().map(ConvParams::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.convs.iter().flat_map(ConvParams::iter)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.convs.iter_mut().flat_map(ConvParams::iter_mut)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.len());
        self.iter_mut().zip(values).for_each(|(p, v)| *p = *v);
    }

    pub fn add_assign(&mut self, other: &Parameters) {
        self.iter_mut().zip(other.iter()).for_each(|(a, b)| *a += b);
    }

    pub fn scale(&mut self, factor: f64) {
        self.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

/// Values recorded by [`Network::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct Tape {
    inputs: Vec<FeatureMap>,
    pre_activations: Vec<Option<FeatureMap>>,
    output: FeatureMap,
}

impl Tape {
    pub fn output(&self) -> &FeatureMap {
        &self.output
    }

    pub fn into_output(self) -> FeatureMap {
        self.output
    }

    /// Input of layer `k`.
    pub fn layer_input(&self, k: usize) -> &FeatureMap {
        &self.inputs[k]
    }
}

/// Where the incoming gradient of [`Network::backward`] is taken.
pub enum OutputGrad {
    /// Gradient with respect to the network output (after the softmax).
    Output(FeatureMap),
    /// Gradient with respect to the logits of the last layer, as returned by
    /// [`super::cross_entropy_loss`].
    Logits(FeatureMap),
}

#[derive(Clone, Debug)]
pub struct Network {
    spec: NetworkSpec,
    layers: Vec<Layer>,
    map: Arc<RadonHoughMap>,
    corrupt_adjoint: bool,
}

impl Network {
    pub fn new(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let map = Arc::new(RadonHoughMap::build(spec.hough_side(), spec.n, spec.scale_x)?);
        let mut layers = Vec::new();
        let mut channels = 1;
        let mut param = 0;
        for (idx, row) in TABLE.iter().enumerate() {
            let row_no = idx + 1;
            let kind = match *row {
                Row::Conv {
                    filters,
                    upscale,
                    activation,
                } => {
                    let out = spec.width(filters, activation);
                    let mut cs = ConvSpec::new(channels, out, activation);
                    if upscale {
                        cs = cs.upscaled();
                    }
                    channels = out;
                    param += 1;
                    LayerKind::Conv {
                        spec: cs,
                        param: param - 1,
                    }
                }
                Row::Fht => LayerKind::Fht,
                Row::Hrt => LayerKind::Hrt,
                Row::Rht => LayerKind::Rht,
                Row::Tfht => LayerKind::Tfht,
            };
            layers.push(Layer {
                row: Some(row_no),
                kind,
            });
            if POOL_AFTER.contains(&row_no) {
                layers.push(Layer {
                    row: None,
                    kind: LayerKind::AvgPool,
                });
            }
        }
        Ok(Network {
            spec,
            layers,
            map,
            corrupt_adjoint: false,
        })
    }

    /// Negative control for gradient checking: makes the HRT backward pass
    /// drop the contribution of the first angle row.
    #[doc(hidden)]
    pub fn with_corrupted_adjoint(mut self) -> Self {
        self.corrupt_adjoint = true;
        self
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn radon_map(&self) -> &RadonHoughMap {
        &self.map
    }

    pub fn conv_specs(&self) -> Vec<ConvSpec> {
        self.layers
            .iter()
            .filter_map(|l| match l.kind {
                LayerKind::Conv { spec, .. } => Some(spec),
                _ => None,
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.conv_specs().iter().map(ConvSpec::param_count).sum()
    }

    /// Uniform initialisation in `+-sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn init_params(&self, seed: u64) -> Parameters {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let convs = self
            .conv_specs()
            .iter()
            .map(|cs| {
                let mut p = ConvParams::zeros(cs.in_channels, cs.out_channels);
                let fan = ((cs.in_channels + cs.out_channels) * 9) as f64;
                let limit = (6.0 / fan).sqrt();
                p.weights
                    .iter_mut()
                    .for_each(|w| *w = rng.random_range(-limit..limit));
                p
            })
            .collect();
        Parameters { convs }
    }

    fn check_params(&self, params: &Parameters) -> Result<()> {
        let specs = self.conv_specs();
        if specs.len() != params.convs.len()
            || specs.iter().zip(&params.convs).any(|(s, p)| {
                (s.in_channels, s.out_channels) != (p.in_channels, p.out_channels)
                    || p.weights.len() != s.weight_count()
                    || p.bias.len() != s.out_channels
            })
        {
            return Err(Error::argument("parameters do not match the network layout"));
        }
        Ok(())
    }

    /// Shapes `(channels, height, width)` leaving each layer.
    pub fn output_shapes(&self) -> Vec<(usize, usize, usize)> {
        let mut shape = (1, self.spec.input_size, self.spec.input_size);
        let side = self.spec.hough_side();
        self.layers
            .iter()
            .map(|l| {
                shape = match l.kind {
                    LayerKind::Conv { spec, .. } => {
                        (spec.out_channels, shape.1 * spec.upscale, shape.2 * spec.upscale)
                    }
                    LayerKind::AvgPool => (shape.0, shape.1 / 2, shape.2 / 2),
                    LayerKind::Fht | LayerKind::Rht => (shape.0, 4 * side - 3, 2 * side),
                    LayerKind::Hrt => (shape.0, self.map.n(), self.map.width()),
                    LayerKind::Tfht => (shape.0, side, side),
                };
                shape
            })
            .collect()
    }

    /// `(width, height)` of the maps seen by the inner convolutions.
    pub fn inner_size(&self) -> (usize, usize) {
        (self.map.width(), self.map.n())
    }

    pub fn forward(&self, params: &Parameters, input: &FeatureMap) -> Result<Tape> {
        self.check_params(params)?;
        let size = self.spec.input_size;
        if input.shape() != (1, size, size) {
            return Err(Error::argument(format!(
                "network expects a 1x{size}x{size} input, got {:?}",
                input.shape()
            )));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        for layer in &self.layers {
            let (next, pre) = match &layer.kind {
                LayerKind::Conv { spec, param } => {
                    let z = conv2d_forward(&x, spec, &params.convs[*param])?;
                    let a = match spec.activation {
                        Activation::Softsign => softsign_forward(&z),
                        Activation::Softmax => softmax_channels(&z),
                        Activation::None => z.clone(),
                    };
                    (a, Some(z))
                }
                LayerKind::AvgPool => (avg_pool2(&x)?, None),
                LayerKind::Fht => (fht_featuremap(&x)?, None),
                LayerKind::Hrt => (self.map.gather_featuremap(&x)?, None),
                LayerKind::Rht => (self.map.scatter_featuremap(&x)?, None),
                LayerKind::Tfht => (tfht_featuremap(&x)?, None),
            };
            inputs.push(std::mem::replace(&mut x, next));
            pre_activations.push(pre);
        }
        Ok(Tape {
            inputs,
            pre_activations,
            output: x,
        })
    }

    pub fn predict(&self, params: &Parameters, input: &FeatureMap) -> Result<FeatureMap> {
        Ok(self.forward(params, input)?.into_output())
    }

    /// Returns the gradient with respect to the network input and the
    /// parameter gradients. The transform layers have no parameters; their
    /// backward passes are the exact adjoints (TFHT for FHT, RHT for HRT and
    /// the other way round).
    pub fn backward(&self, params: &Parameters, tape: &Tape, grad: OutputGrad) -> Result<(FeatureMap, Parameters)> {
        self.check_params(params)?;
        let mut grads = Parameters::zeros_like(params);
        let (mut g, skip_last_activation) = match grad {
            OutputGrad::Output(g) => (g, false),
            OutputGrad::Logits(g) => (g, true),
        };
        if g.shape() != tape.output.shape() {
            return Err(Error::argument("output gradient has the wrong shape"));
        }
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let x = &tape.inputs[k];
            g = match &layer.kind {
                LayerKind::Conv { spec, param } => {
                    let z = tape.pre_activations[k].as_ref().expect("conv layers record z");
                    let gz = if k == last && skip_last_activation {
                        g
                    } else {
                        match spec.activation {
                            Activation::Softsign => softsign_backward(z, &g),
                            Activation::Softmax => {
                                let out = if k == last {
                                    tape.output.clone()
                                } else {
                                    tape.inputs[k + 1].clone()
                                };
                                softmax_backward(&out, &g)
                            }
                            Activation::None => g,
                        }
                    };
                    let (gx, gp) = conv2d_backward(&gz, x, spec, &params.convs[*param])?;
                    grads.convs[*param] = gp;
                    gx
                }
                LayerKind::AvgPool => avg_pool2_backward(&g),
                LayerKind::Fht => tfht_featuremap(&g)?,
                LayerKind::Hrt => {
                    let mut gx = self.map.scatter_featuremap(&g)?;
                    if self.corrupt_adjoint {
                        corrupt_scatter(&self.map, &g, &mut gx);
                    }
                    gx
                }
                LayerKind::Rht => self.map.gather_featuremap(&g)?,
                LayerKind::Tfht => fht_featuremap(&g)?,
            };
        }
        Ok((g, grads))
    }
}

/// Removes from an HRT backward result the contribution of the first angle
/// row of `g`, as if that row had no source cells.
pub(crate) fn corrupt_scatter(map: &RadonHoughMap, g: &FeatureMap, gx: &mut FeatureMap) {
    let cols = gx.width();
    let plane_in = g.height() * g.width();
    let plane_out = gx.height() * cols;
    for i in 0..map.width() {
        if let Some((r, c)) = map.source(0, i) {
            for ch in 0..g.channels() {
                let v = g.values()[ch * plane_in + i];
                gx.values_mut()[ch * plane_out + r * cols + c] -= v;
            }
        }
    }
}

/// Builds the layer stack and seeded initial parameters.
pub fn build_network(spec: NetworkSpec, seed: u64) -> Result<(Network, Parameters)> {
    let net = Network::new(spec)?;
    let params = net.init_params(seed);
    Ok((net, params))
}
