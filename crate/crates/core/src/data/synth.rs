//! Synthetic document photos: a light convex quad on a darker background
//! with optional noise, highlight, line, blur and darkening distortions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::raster::{rasterize_quad, shoelace_area, QuadAnnotation};
use super::{Sample, Split};
use crate::error::{Error, Result};
use crate::image::Image;

const MIN_AREA: f64 = 0.10;
const MAX_AREA: f64 = 0.80;
const MIN_CONTRAST: f64 = 0.25;

/// Which distortions may be applied. Each enabled one is applied to a
/// sample with probability one half.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Distortions {
    pub noise: bool,
    pub highlight: bool,
    pub lines: bool,
    pub blur: bool,
    pub darkening: bool,
}

impl Distortions {
    pub fn all() -> Self {
        Distortions {
            noise: true,
            highlight: true,
            lines: true,
            blur: true,
            darkening: true,
        }
    }

    pub fn none() -> Self {
        Distortions {
            noise: false,
            highlight: false,
            lines: false,
            blur: false,
            darkening: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub count: usize,
    pub size: usize,
    /// The last `test_count` samples are tagged [`Split::Test`].
    pub test_count: usize,
    pub distortions: Distortions,
}

impl SynthConfig {
    pub fn new(count: usize, size: usize, test_count: usize) -> Self {
        SynthConfig {
            count,
            size,
            test_count,
            distortions: Distortions::all(),
        }
    }
}

pub fn synth_dataset(cfg: &SynthConfig, seed: u64) -> Result<Vec<Sample>> {
    if !cfg.size.is_power_of_two() || cfg.size < 4 {
        return Err(Error::argument(format!("synthetic size {} must be a power of two >= 4", cfg.size)));
    }
    if cfg.test_count > cfg.count {
        return Err(Error::argument("test count exceeds sample count"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..cfg.count)
        .map(|k| {
            let split = if k >= cfg.count - cfg.test_count {
                Split::Test
            } else {
                Split::Train
            };
            let (image, mask) = synth_one(&mut rng, cfg.size, &cfg.distortions);
            Sample {
                id: format!("synth-{k:05}"),
                image,
                mask,
                split,
            }
        })
        .collect())
}

fn random_quad(rng: &mut impl Rng, size: usize) -> QuadAnnotation {
    let s = size as f64;
    let frame = s * s;
    loop {
        let cx = rng.random_range(0.3 * s..0.7 * s);
        let cy = rng.random_range(0.3 * s..0.7 * s);
        let r = rng.random_range(0.25 * s..0.6 * s);
        let phase = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
        let corners = std::array::from_fn(|k| {
            let a = phase + k as f64 * std::f64::consts::FRAC_PI_2 + rng.random_range(-0.35..0.35);
            let rk = r * rng.random_range(0.7..1.0);
            (
                (cx + rk * a.cos()).clamp(0.0, s),
                (cy + rk * a.sin()).clamp(0.0, s),
            )
        });
        let q = QuadAnnotation { corners };
        let area = shoelace_area(&q) / frame;
        if (MIN_AREA..=MAX_AREA).contains(&area) && is_convex(&q) {
            return q;
        }
    }
}

fn is_convex(q: &QuadAnnotation) -> bool {
    let c = &q.corners;
    let cross: Vec<f64> = (0..4)
        .map(|k| {
            let (a, b, d) = (c[k], c[(k + 1) % 4], c[(k + 2) % 4]);
            (b.0 - a.0) * (d.1 - b.1) - (b.1 - a.1) * (d.0 - b.0)
        })
        .collect();
    cross.iter().all(|&v| v > 0.0) || cross.iter().all(|&v| v < 0.0)
}

fn synth_one(rng: &mut impl Rng, size: usize, d: &Distortions) -> (Image, Image) {
    let quad = random_quad(rng, size);
    let mask = rasterize_quad(&quad, size, size).mask;
    // the document is the lighter of the two levels
    let (fg, bg) = loop {
        let a: f64 = rng.random_range(0.05..0.95);
        let b: f64 = rng.random_range(0.05..0.95);
        if (a - b).abs() >= MIN_CONTRAST {
            break (a.max(b), a.min(b));
        }
    };
    let mut v: Vec<f64> = mask.values().iter().map(|&m| if m == 1.0 { fg } else { bg }).collect();
    let s = size as f64;

    if d.lines && rng.random_bool(0.5) {
        for _ in 0..rng.random_range(1..=3) {
            let (x0, y0) = (rng.random_range(0.0..s), rng.random_range(0.0..s));
            let angle = rng.random_range(0.0..std::f64::consts::PI);
            let (nx, ny) = (-angle.sin(), angle.cos());
            let level = rng.random_range(0.0..1.0);
            let half_width = rng.random_range(0.5..1.5);
            for y in 0..size {
                for x in 0..size {
                    let dist = ((x as f64 + 0.5 - x0) * nx + (y as f64 + 0.5 - y0) * ny).abs();
                    if dist <= half_width {
                        v[y * size + x] = level;
                    }
                }
            }
        }
    }
    if d.highlight && rng.random_bool(0.5) {
        let (cx, cy) = (rng.random_range(0.0..s), rng.random_range(0.0..s));
        let (ax, ay) = (rng.random_range(0.1 * s..0.4 * s), rng.random_range(0.1 * s..0.4 * s));
        let strength = rng.random_range(0.3..0.7);
        for y in 0..size {
            for x in 0..size {
                let q = ((x as f64 + 0.5 - cx) / ax).powi(2) + ((y as f64 + 0.5 - cy) / ay).powi(2);
                if q < 1.0 {
                    let p = &mut v[y * size + x];
                    *p += strength * (1.0 - q);
                }
            }
        }
    }
    if d.blur && rng.random_bool(0.5) {
        v = box_blur(&v, size);
    }
    if d.darkening && rng.random_bool(0.5) {
        let f = rng.random_range(0.5..0.9);
        v.iter_mut().for_each(|p| *p *= f);
    }
    if d.noise && rng.random_bool(0.5) {
        let sigma = rng.random_range(0.01..=0.1);
        let normal = Normal::new(0.0, sigma).expect("sigma is positive");
        v.iter_mut().for_each(|p| *p += normal.sample(rng));
    }
    v.iter_mut().for_each(|p| *p = p.clamp(0.0, 1.0));
    (Image::from_raw(size, size, v), mask)
}

/// 3x3 mean with the border replicated.
fn box_blur(v: &[f64], size: usize) -> Vec<f64> {
    let at = |y: isize, x: isize| {
        let c = |i: isize| i.clamp(0, size as isize - 1) as usize;
        v[c(y) * size + c(x)]
    };
    let mut out = vec![0.0; v.len()];
    for y in 0..size as isize {
        for x in 0..size as isize {
            let mut acc = 0.0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    acc += at(y + dy, x + dx);
                }
            }
            out[y as usize * size + x as usize] = acc / 9.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_datasets_are_identical() {
        let cfg = SynthConfig::new(6, 32, 2);
        assert_eq!(synth_dataset(&cfg, 4).unwrap(), synth_dataset(&cfg, 4).unwrap());
        assert_ne!(synth_dataset(&cfg, 4).unwrap(), synth_dataset(&cfg, 5).unwrap());
    }

    #[test]
    fn empty_and_bad_configs() {
        assert!(synth_dataset(&SynthConfig::new(0, 32, 0), 1).unwrap().is_empty());
        assert!(synth_dataset(&SynthConfig::new(3, 24, 0), 1).is_err());
        assert!(synth_dataset(&SynthConfig::new(3, 32, 4), 1).is_err());
    }

    #[test]
    fn samples_are_valid_and_split() {
        let data = synth_dataset(&SynthConfig::new(20, 64, 5), 2).unwrap();
        assert!(data.iter().all(Sample::is_valid));
        assert_eq!(data.iter().filter(|s| s.split == Split::Test).count(), 5);
        assert!(data[15..].iter().all(|s| s.split == Split::Test));
        for s in &data {
            let frac = s.mask.sum() / (64.0 * 64.0);
            // rasterized area tracks the analytic 10%..80% band up to boundary pixels
            assert!((0.07..=0.83).contains(&frac), "{frac}");
        }
    }

    #[test]
    fn clean_images_have_two_levels_matching_the_mask() {
        let cfg = SynthConfig {
            distortions: Distortions::none(),
            ..SynthConfig::new(5, 32, 0)
        };
        for s in synth_dataset(&cfg, 3).unwrap() {
            let fg = s.image.values()[s.mask.values().iter().position(|&m| m == 1.0).unwrap()];
            let bg = s.image.values()[s.mask.values().iter().position(|&m| m == 0.0).unwrap()];
            assert!(fg - bg >= MIN_CONTRAST);
            for (p, m) in s.image.values().iter().zip(s.mask.values()) {
                assert_eq!(*p, if *m == 1.0 { fg } else { bg });
            }
        }
    }

    #[test]
    fn blur_preserves_constants() {
        let v = vec![0.25; 16];
        assert_eq!(box_blur(&v, 4), v);
    }
}
