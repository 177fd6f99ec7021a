use crate::error::{Error, Result};
use crate::image::Image;

/// Four document corners `(x, y)` in pixel coordinates with the origin at
/// the top-left corner of the frame. Corners may lie outside the frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadAnnotation {
    pub corners: [(f64, f64); 4],
}

impl QuadAnnotation {
    pub fn new(corners: [(f64, f64); 4]) -> Result<Self> {
        if corners.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::argument("quad corners must be finite"));
        }
        Ok(QuadAnnotation { corners })
    }

    pub fn scaled(&self, sx: f64, sy: f64) -> QuadAnnotation {
        QuadAnnotation {
            corners: self.corners.map(|(x, y)| (x * sx, y * sy)),
        }
    }

    pub fn perimeter(&self) -> f64 {
        (0..4)
            .map(|k| {
                let (a, b) = (self.corners[k], self.corners[(k + 1) % 4]);
                (b.0 - a.0).hypot(b.1 - a.1)
            })
            .sum()
    }
}

pub fn shoelace_area(quad: &QuadAnnotation) -> f64 {
    let c = &quad.corners;
    let twice: f64 = (0..4)
        .map(|k| {
            let (a, b) = (c[k], c[(k + 1) % 4]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum();
    twice.abs() / 2.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub mask: Image,
    /// The quad has zero area; `mask` is then all zero.
    pub degenerate: bool,
}

/// Scanline fill: pixel `(y, x)` is set iff its centre `(x + 0.5, y + 0.5)`
/// lies inside the quad (even-odd rule, half-open crossings).
pub fn rasterize_quad(quad: &QuadAnnotation, height: usize, width: usize) -> Raster {
    let mut mask = Image::zeros(height, width);
    if shoelace_area(quad) <= f64::EPSILON {
        return Raster { mask, degenerate: true };
    }
    let c = &quad.corners;
    let mut xs = Vec::with_capacity(4);
    for y in 0..height {
        let yc = y as f64 + 0.5;
        xs.clear();
        for k in 0..4 {
            let (a, b) = (c[k], c[(k + 1) % 4]);
            if (a.1 <= yc) != (b.1 <= yc) {
                xs.push(a.0 + (yc - a.1) * (b.0 - a.0) / (b.1 - a.1));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let first = (pair[0] - 0.5).ceil().max(0.0);
            let end = (pair[1] - 0.5).ceil().min(width as f64);
            if first < end {
                for x in first as usize..end as usize {
                    mask.set(y, x, 1.0);
                }
            }
        }
    }
    Raster { mask, degenerate: false }
}

/// Corners with `0 <= x < width` and `0 <= y < height`.
pub fn corners_inside_count(quad: &QuadAnnotation, height: usize, width: usize) -> usize {
    quad.corners
        .iter()
        .filter(|(x, y)| (0.0..width as f64).contains(x) && (0.0..height as f64).contains(y))
        .count()
}
