//! Finite-difference verification of the hand-written backward passes.
//!
//! Errors are norm-wise: `|a - f| / max(|a|, |f|)` over whole gradient
//! vectors, which stays meaningful when individual entries are close to zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fht::{fht_featuremap, hough_shape, tfht_featuremap};
use crate::image::{FeatureMap, Image};
use crate::nn::activation::{softmax_backward, softsign_backward, softsign_forward};
use crate::nn::network::corrupt_scatter;
use crate::nn::{
    build_network, conv2d_backward, conv2d_forward, cross_entropy_loss, softmax_channels, Activation, ConvParams,
    ConvSpec, NetworkSpec, OutputGrad,
};
use crate::radon::RadonHoughMap;

/// Central differences of a scalar function at `point`.
pub fn central_difference(point: &[f64], eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut x = point.to_vec();
    (0..point.len())
        .map(|i| {
            x[i] = point[i] + eps;
            let plus = f(&x);
            x[i] = point[i] - eps;
            let minus = f(&x);
            x[i] = point[i];
            (plus - minus) / (2.0 * eps)
        })
        .collect()
}

pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let scale = norm(analytic).max(norm(numeric));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Outcome of one gradient comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockCheck {
    pub name: &'static str,
    pub error: f64,
    pub tolerance: f64,
}

impl BlockCheck {
    pub fn passed(&self) -> bool {
        self.error < self.tolerance
    }
}

pub const BLOCK_TOLERANCE: f64 = 1e-4;
pub const NETWORK_TOLERANCE: f64 = 1e-3;
const EPS: f64 = 1e-5;

fn random_map(rng: &mut impl Rng, c: usize, h: usize, w: usize) -> FeatureMap {
    FeatureMap::from_vec(c, h, w, (0..c * h * w).map(|_| rng.random_range(-1.0..1.0)).collect())
        .expect("finite values")
}

fn random_mask(rng: &mut impl Rng, size: usize) -> Image {
    Image::from_fn(size, size, |_, _| if rng.random_bool(0.5) { 1.0 } else { 0.0 })
}

fn block(name: &'static str, analytic: &[f64], numeric: &[f64], tolerance: f64) -> BlockCheck {
    BlockCheck {
        name,
        error: relative_error(analytic, numeric),
        tolerance,
    }
}

fn with_values(like: &FeatureMap, values: &[f64]) -> FeatureMap {
    let (c, h, w) = like.shape();
    FeatureMap::from_vec(c, h, w, values.to_vec()).expect("finite values")
}

fn conv_block(rng: &mut impl Rng, size: usize) -> Result<BlockCheck> {
    let spec = ConvSpec::new(2, 3, Activation::None);
    let x = random_map(rng, 2, size, size);
    let mut params = ConvParams::zeros(2, 3);
    params.iter_mut().for_each(|p| *p = rng.random_range(-1.0..1.0));
    let r = random_map(rng, 3, size, size);
    let (gx, gp) = conv2d_backward(&r, &x, &spec, &params)?;

    let nx = x.values().len();
    let mut point = x.values().to_vec();
    point.extend(params.iter());
    let numeric = central_difference(&point, EPS, |v| {
        let mut p = params.clone();
        p.iter_mut().zip(&v[nx..]).for_each(|(a, b)| *a = *b);
        conv2d_forward(&with_values(&x, &v[..nx]), &spec, &p)
            .expect("shapes fixed")
            .dot(&r)
    });
    let mut analytic = gx.into_values();
    analytic.extend(gp.iter());
    Ok(block("conv", &analytic, &numeric, BLOCK_TOLERANCE))
}

fn softsign_block(rng: &mut impl Rng, size: usize) -> BlockCheck {
    let x = random_map(rng, 2, size, size);
    let r = random_map(rng, 2, size, size);
    let analytic = softsign_backward(&x, &r).into_values();
    let numeric = central_difference(x.values(), EPS, |v| softsign_forward(&with_values(&x, v)).dot(&r));
    block("softsign", &analytic, &numeric, BLOCK_TOLERANCE)
}

fn softmax_block(rng: &mut impl Rng, size: usize) -> BlockCheck {
    let x = random_map(rng, 2, size, size);
    let r = random_map(rng, 2, size, size);
    let analytic = softmax_backward(&softmax_channels(&x), &r).into_values();
    let numeric = central_difference(x.values(), EPS, |v| softmax_channels(&with_values(&x, v)).dot(&r));
    block("softmax", &analytic, &numeric, BLOCK_TOLERANCE)
}

fn loss_block(rng: &mut impl Rng, size: usize) -> Result<BlockCheck> {
    let x = random_map(rng, 2, size, size);
    let mask = random_mask(rng, size);
    let (_, g) = cross_entropy_loss(&softmax_channels(&x), &mask)?;
    let numeric = central_difference(x.values(), EPS, |v| {
        cross_entropy_loss(&softmax_channels(&with_values(&x, v)), &mask)
            .expect("shapes fixed")
            .0
    });
    Ok(block("loss", g.values(), &numeric, BLOCK_TOLERANCE))
}

fn path_map(size: usize) -> Result<RadonHoughMap> {
    RadonHoughMap::build(size, 2 * size + 1, 1.0)
}

fn fht_hrt_block(rng: &mut impl Rng, size: usize, corrupt: bool) -> Result<BlockCheck> {
    let map = path_map(size)?;
    let x = random_map(rng, 1, size, size);
    let r = random_map(rng, 1, map.n(), map.width());
    let mut back = map.scatter_featuremap(&r)?;
    if corrupt {
        corrupt_scatter(&map, &r, &mut back);
    }
    let analytic = tfht_featuremap(&back)?.into_values();
    let numeric = central_difference(x.values(), EPS, |v| {
        let hough = fht_featuremap(&with_values(&x, v)).expect("square input");
        map.gather_featuremap(&hough).expect("hough shape").dot(&r)
    });
    Ok(block("fht->hrt", &analytic, &numeric, BLOCK_TOLERANCE))
}

fn rht_tfht_block(rng: &mut impl Rng, size: usize) -> Result<BlockCheck> {
    let map = path_map(size)?;
    let x = random_map(rng, 1, map.n(), map.width());
    let r = random_map(rng, 1, size, size);
    let analytic = map.gather_featuremap(&fht_featuremap(&r)?)?.into_values();
    let numeric = central_difference(x.values(), EPS, |v| {
        let hough = map.scatter_featuremap(&with_values(&x, v)).expect("radon shape");
        tfht_featuremap(&hough).expect("hough shape").dot(&r)
    });
    Ok(block("rht->tfht", &analytic, &numeric, BLOCK_TOLERANCE))
}

/// Angle count used by the end-to-end check.
pub const NETWORK_N: usize = 13;

fn network_block(rng: &mut impl Rng, size: usize, seed: u64, corrupt: bool) -> Result<BlockCheck> {
    let (mut net, params) = build_network(NetworkSpec::reduced(size, NETWORK_N, 1.0), seed)?;
    if corrupt {
        net = net.with_corrupted_adjoint();
    }
    let x = random_map(rng, 1, size, size);
    let mask = random_mask(rng, size);
    let tape = net.forward(&params, &x)?;
    let (_, g) = cross_entropy_loss(tape.output(), &mask)?;
    let (gx, gp) = net.backward(&params, &tape, OutputGrad::Logits(g))?;

    let nx = x.values().len();
    let mut point = x.values().to_vec();
    point.extend(params.iter());
    let numeric = central_difference(&point, EPS, |v| {
        let mut p = params.clone();
        p.set_flat(&v[nx..]);
        let out = net.predict(&p, &with_values(&x, &v[..nx])).expect("shapes fixed");
        cross_entropy_loss(&out, &mask).expect("shapes fixed").0
    });
    let mut analytic = gx.into_values();
    analytic.extend(gp.iter());
    Ok(block("network", &analytic, &numeric, NETWORK_TOLERANCE))
}

/// Runs every block check and the end-to-end check of the reduced network
/// on `size x size` inputs. `corrupt_adjoint` breaks the HRT backward pass
/// so that the checks that go through it must fail.
pub fn run_gradchecks(size: usize, seed: u64, corrupt_adjoint: bool) -> Result<Vec<BlockCheck>> {
    if size < 8 || !size.is_power_of_two() {
        return Err(Error::argument(format!("gradcheck size {size} must be a power of two >= 8")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(vec![
        conv_block(&mut rng, size)?,
        softsign_block(&mut rng, size),
        softmax_block(&mut rng, size),
        loss_block(&mut rng, size)?,
        fht_hrt_block(&mut rng, size, corrupt_adjoint)?,
        rht_tfht_block(&mut rng, size)?,
        network_block(&mut rng, size, seed, corrupt_adjoint)?,
    ])
}

const ADJOINT_FLOOR: f64 = 1e-12;

fn adjoint_gap(
    trials: usize,
    seed: u64,
    domain: (usize, usize, usize),
    range: (usize, usize, usize),
    forward: impl Fn(&FeatureMap) -> Result<FeatureMap>,
    adjoint: impl Fn(&FeatureMap) -> Result<FeatureMap>,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let x = random_map(&mut rng, domain.0, domain.1, domain.2);
        let y = random_map(&mut rng, range.0, range.1, range.2);
        let lhs = forward(&x)?.dot(&y);
        let rhs = x.dot(&adjoint(&y)?);
        worst = worst.max((lhs - rhs).abs() / (lhs.abs() + ADJOINT_FLOOR));
    }
    Ok(worst)
}

/// Worst relative gap `|<Fx, y> - <x, F^T y>| / |<Fx, y>|` of the full FHT
/// over `trials` random pairs.
pub fn fht_adjoint_gap(h: usize, trials: usize, seed: u64) -> Result<f64> {
    let (rows, cols) = hough_shape(h);
    adjoint_gap(trials, seed, (1, h, h), (1, rows, cols), fht_featuremap, tfht_featuremap)
}

/// Same as [`fht_adjoint_gap`] for the HRT/RHT pair.
pub fn hrt_adjoint_gap(map: &RadonHoughMap, trials: usize, seed: u64) -> Result<f64> {
    let (rows, cols) = hough_shape(map.w1());
    adjoint_gap(
        trials,
        seed,
        (1, rows, cols),
        (1, map.n(), map.width()),
        |x| map.gather_featuremap(x),
        |y| map.scatter_featuremap(y),
    )
}
