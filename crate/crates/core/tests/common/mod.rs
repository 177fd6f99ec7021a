//! Test-only oracles shared by the integration suites.
#![allow(dead_code)]

use houghradon::radon::AngleGrid;
use houghradon::Image;
use rand::Rng;

/// Signed distance of pixel `(row, col)` from the line `(rho, phi)`, using
/// the bottom-left-origin, y-up convention of the transforms.
pub fn line_distance(h: usize, row: usize, col: usize, rho: f64, phi: f64) -> f64 {
    let x = col as f64;
    let y = (h - 1 - row) as f64;
    x * phi.cos() + y * phi.sin() - rho
}

/// Image with value 1 on every pixel within half a pixel of the line.
pub fn draw_line(h: usize, rho: f64, phi: f64) -> Image {
    Image::from_fn(h, h, |r, c| {
        if line_distance(h, r, c, rho, phi).abs() <= 0.5 {
            1.0
        } else {
            0.0
        }
    })
}

/// Direct line-integral Radon transform over the original image: each
/// `(j, i)` sums the pixels within half a pixel of `rho = i / scale_x`,
/// `phi = phi_j`.
pub fn direct_radon(img: &Image, n: usize, width: usize, scale_x: f64) -> Image {
    let h = img.height();
    let grid = AngleGrid::new(n).unwrap();
    Image::from_fn(n, width, |j, i| {
        let phi = grid.radians(j);
        let rho = i as f64 / scale_x;
        let mut sum = 0.0;
        for r in 0..h {
            for c in 0..h {
                if line_distance(h, r, c, rho, phi).abs() <= 0.5 {
                    sum += img.get(r, c);
                }
            }
        }
        sum
    })
}

/// `(row, col)` of the first maximum in row-major order.
pub fn argmax(img: &Image) -> (usize, usize) {
    let mut best = (0, 0);
    let mut best_v = f64::NEG_INFINITY;
    for r in 0..img.height() {
        for c in 0..img.width() {
            if img.get(r, c) > best_v {
                best_v = img.get(r, c);
                best = (r, c);
            }
        }
    }
    best
}

/// A line through the central part of an `h x h` image, with its angle on
/// the grid, returned as `(j, rho)`.
pub fn random_central_line(rng: &mut impl Rng, h: usize, grid: &AngleGrid) -> (usize, f64) {
    loop {
        let j = rng.random_range(0..grid.len());
        let phi = grid.radians(j);
        let c = (h - 1) as f64 / 2.0;
        let rho = c * (phi.cos() + phi.sin()) + rng.random_range(-(h as f64) / 4.0..h as f64 / 4.0);
        if rho < 1.0 {
            continue;
        }
        let on = draw_line(h, rho, phi).sum();
        if on >= h as f64 / 2.0 {
            return (j, rho);
        }
    }
}

pub fn rel_gap(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / (lhs.abs() + 1e-12)
}

/// Centroid `(row, col)` of all cells equal to the maximum, rounded. Nearest
/// neighbour resampling repeats one Hough cell over neighbouring Radon cells,
/// so the maximum is usually a small plateau.
pub fn argmax_centroid(img: &Image) -> (usize, usize) {
    let max = img.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut sr, mut sc, mut k) = (0.0, 0.0, 0.0);
    for r in 0..img.height() {
        for c in 0..img.width() {
            if img.get(r, c) == max {
                sr += r as f64;
                sc += c as f64;
                k += 1.0;
            }
        }
    }
    ((sr / k).round() as usize, (sc / k).round() as usize)
}
