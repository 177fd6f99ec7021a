//! Fast Hough Transform over dyadic line patterns.
//!
//! Each of the four angular quadrants is computed by one shared kernel on a
//! re-oriented copy of the input. The kernel sums, for every slope `t` in
//! `[0, h)` and cyclic shift `s` in `[0, 2h)`, the pixels
//! `img_q[y][(s + D(t, y)) mod 2h]` where `D` is the dyadic pattern and
//! columns `>= h` of the re-oriented image are zero. Shifts in `[h, 2h)`
//! therefore stand for negative intercepts `s - 2h`, so every pixel lands in
//! exactly one cell per slope.
//!
//! Re-orientation (`img_q[r][x]` in terms of the stored image `img[row][col]`):
//!
//! | quadrant  | normal angle    | `img_q[r][x]`        |
//! |-----------|-----------------|----------------------|
//! | VertRight | `[-45, 0)` deg  | `img[r][h-1-x]`      |
//! | VertLeft  | `[0, 45)` deg   | `img[r][x]`          |
//! | HorzDown  | `[45, 90)` deg  | `img[x][r]`          |
//! | HorzUp    | `[90, 135)` deg | `img[h-1-x][r]`      |
//!
//! The stitched [`HoughImage`] stacks the quadrants by ascending normal angle.
//! Neighbouring bands share the row holding the 0, 45 and 90 degree line
//! families; the column of each quadrant is remapped so that the shared rows
//! coincide cell for cell.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{FeatureMap, Image};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quadrant {
    /// Normal angle in `[-45, 0)` degrees.
    VertRight,
    /// Normal angle in `[0, 45)` degrees.
    VertLeft,
    /// Normal angle in `[45, 90)` degrees.
    HorzDown,
    /// Normal angle in `[90, 135)` degrees.
    HorzUp,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [
        Quadrant::VertRight,
        Quadrant::VertLeft,
        Quadrant::HorzDown,
        Quadrant::HorzUp,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Quadrant of a normal angle in degrees; ranges are half-open so the
    /// boundary angles belong to the higher quadrant.
    pub fn of_angle_deg(phi: f64) -> Option<Quadrant> {
        match phi {
            p if (-45.0..0.0).contains(&p) => Some(Quadrant::VertRight),
            p if (0.0..45.0).contains(&p) => Some(Quadrant::VertLeft),
            p if (45.0..90.0).contains(&p) => Some(Quadrant::HorzDown),
            p if (90.0..135.0).contains(&p) => Some(Quadrant::HorzUp),
            _ => None,
        }
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, Quadrant::VertRight | Quadrant::VertLeft)
    }

    /// Stitched (row, column) of quadrant-local cell `(t, s)`, `s` taken as a
    /// cyclic column index in `[0, 2h)`.
    pub fn stitched_cell(self, h: usize, t: usize, s: usize) -> (usize, usize) {
        debug_assert!(t < h && s < 2 * h);
        let w = 2 * h;
        let m = h - 1;
        match self {
            Quadrant::VertRight => (m - t, (m + w - s) % w),
            Quadrant::VertLeft => (m + t, s),
            Quadrant::HorzDown => (3 * m - t, (w - s) % w),
            Quadrant::HorzUp => (3 * m + t, (s + w - m) % w),
        }
    }

    /// The quadrant whose kernel output is stored in stitched `row`.
    /// Rows shared by two bands belong to the higher one.
    pub fn owner_of_row(h: usize, row: usize) -> Quadrant {
        Quadrant::ALL[(row / (h - 1)).min(3)]
    }

    fn source_index(self, h: usize, r: usize, x: usize) -> usize {
        let (row, col) = match self {
            Quadrant::VertRight => (r, h - 1 - x),
            Quadrant::VertLeft => (r, x),
            Quadrant::HorzDown => (x, r),
            Quadrant::HorzUp => (h - 1 - x, r),
        };
        row * h + col
    }
}

/// A stitched `(4h - 3) x 2h` Hough map of an `h x h` image.
#[derive(Clone, Debug, PartialEq)]
pub struct HoughImage {
    h: usize,
    grid: Image,
}

pub fn hough_shape(h: usize) -> (usize, usize) {
    (4 * h - 3, 2 * h)
}

impl HoughImage {
    pub fn new(h: usize, grid: Image) -> Result<Self> {
        check_side(h)?;
        if (grid.height(), grid.width()) != hough_shape(h) {
            return Err(Error::argument(format!(
                "Hough map for h={h} must be {}x{}, got {}x{}",
                4 * h - 3,
                2 * h,
                grid.height(),
                grid.width()
            )));
        }
        Ok(HoughImage { h, grid })
    }

    /// Wraps a grid, inferring `h` from its width.
    pub fn from_grid(grid: Image) -> Result<Self> {
        let h = grid.width() / 2;
        HoughImage::new(h, grid)
    }

    pub fn zeros(h: usize) -> Result<Self> {
        check_side(h)?;
        let (r, c) = hough_shape(h);
        Ok(HoughImage {
            h,
            grid: Image::zeros(r, c),
        })
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn grid(&self) -> &Image {
        &self.grid
    }

    pub fn into_grid(self) -> Image {
        self.grid
    }

    pub fn rows(&self) -> usize {
        self.grid.height()
    }

    pub fn cols(&self) -> usize {
        self.grid.width()
    }

    /// Row band `[start, end]` (inclusive) occupied by a quadrant.
    pub fn band(&self, q: Quadrant) -> (usize, usize) {
        let start = q.index() * (self.h - 1);
        (start, start + self.h - 1)
    }
}

fn check_side(h: usize) -> Result<()> {
    if h < 2 || !h.is_power_of_two() {
        return Err(Error::argument(format!(
            "side must be a power of two >= 2, got {h}"
        )));
    }
    Ok(())
}

fn check_input(img: &Image) -> Result<usize> {
    if !img.is_square() {
        return Err(Error::argument(format!(
            "image must be square, got {}x{}",
            img.height(),
            img.width()
        )));
    }
    check_side(img.height())?;
    Ok(img.height())
}

/// Per-row displacements of the dyadic pattern of slope `t` over `h` rows.
///
/// The pattern for `h` is two half-length patterns of slope `t / 2`, the
/// second shifted right by `t / 2 + t % 2`.
pub fn dyadic_pattern(h: usize, t: usize) -> Result<Vec<usize>> {
    if h == 0 || !h.is_power_of_two() {
        return Err(Error::argument(format!("pattern length must be a power of two, got {h}")));
    }
    if t >= h {
        return Err(Error::argument(format!("slope {t} out of range for length {h}")));
    }
    Ok(pattern_rec(h, t))
}

fn pattern_rec(h: usize, t: usize) -> Vec<usize> {
    if h == 1 {
        return vec![0];
    }
    let half = pattern_rec(h / 2, t / 2);
    let offset = t / 2 + t % 2;
    let mut out = half.clone();
    out.extend(half.iter().map(|d| d + offset));
    out
}

/// Re-oriented image for quadrant `q`, zero-padded to `h x 2h`.
fn reoriented(img: &Image, q: Quadrant) -> Vec<f64> {
    let h = img.height();
    let w = 2 * h;
    let src = img.values();
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for x in 0..h {
            out[r * w + x] = src[q.source_index(h, r, x)];
        }
    }
    out
}

/// Butterfly FHT of an `h x 2h` padded buffer, in place. On return row `t`
/// holds the sums for slope `t`.
fn fht_kernel(buf: &mut [f64], h: usize) {
    let w = 2 * h;
    let mut tmp = vec![0.0; buf.len()];
    let mut m = 1;
    while m < h {
        for base in (0..h).step_by(2 * m) {
            for t in 0..2 * m {
                let top = &buf[(base + t / 2) * w..(base + t / 2 + 1) * w];
                let bot = &buf[(base + m + t / 2) * w..(base + m + t / 2 + 1) * w];
                let shift = t / 2 + t % 2;
                let out = &mut tmp[(base + t) * w..(base + t + 1) * w];
                let split = w - shift;
                for s in 0..split {
                    out[s] = top[s] + bot[s + shift];
                }
                for s in split..w {
                    out[s] = top[s] + bot[s - split];
                }
            }
        }
        buf.copy_from_slice(&tmp);
        m *= 2;
    }
}

/// Transposed butterfly: scatters per-slope sums back onto the rows of a
/// padded `h x 2h` buffer, in place.
fn fht_kernel_transposed(buf: &mut [f64], h: usize) {
    let w = 2 * h;
    let mut tmp = vec![0.0; buf.len()];
    let mut m = h / 2;
    while m >= 1 {
        tmp.iter_mut().for_each(|v| *v = 0.0);
        for base in (0..h).step_by(2 * m) {
            for t in 0..2 * m {
                let shift = t / 2 + t % 2;
                let split = w - shift;
                let src_start = (base + t) * w;
                for s in 0..w {
                    let g = buf[src_start + s];
                    tmp[(base + t / 2) * w + s] += g;
                    let bs = if s < split { s + shift } else { s - split };
                    tmp[(base + m + t / 2) * w + bs] += g;
                }
            }
        }
        buf.copy_from_slice(&tmp);
        m /= 2;
    }
}

/// FHT of one quadrant: `h` rows (slope) by `2h` columns (cyclic shift).
pub fn fht_quadrant(img: &Image, q: Quadrant) -> Result<Image> {
    let h = check_input(img)?;
    let mut buf = reoriented(img, q);
    fht_kernel(&mut buf, h);
    Ok(Image::from_raw(h, 2 * h, buf))
}

/// Direct `O(h^3)` evaluation of the same sums as [`fht_quadrant`].
pub fn naive_fht_quadrant(img: &Image, q: Quadrant) -> Result<Image> {
    let h = check_input(img)?;
    let w = 2 * h;
    let src = reoriented(img, q);
    let mut out = Image::zeros(h, w);
    for t in 0..h {
        let pattern = dyadic_pattern(h, t)?;
        for s in 0..w {
            let sum = pattern
                .iter()
                .enumerate()
                .map(|(y, d)| src[y * w + (s + d) % w])
                .sum();
            out.set(t, s, sum);
        }
    }
    Ok(out)
}

/// Stitches four quadrant grids into one Hough map.
pub fn stitch(h: usize, quadrants: [&Image; 4]) -> Result<HoughImage> {
    let mut out = HoughImage::zeros(h)?;
    let cols = 2 * h;
    for (q, grid) in Quadrant::ALL.into_iter().zip(quadrants) {
        if (grid.height(), grid.width()) != (h, cols) {
            return Err(Error::argument("quadrant grid has the wrong shape"));
        }
        for t in 0..h {
            for s in 0..cols {
                let (row, col) = q.stitched_cell(h, t, s);
                out.grid.set(row, col, grid.get(t, s));
            }
        }
    }
    Ok(out)
}

/// Full four-quadrant FHT.
pub fn fht_full(img: &Image) -> Result<HoughImage> {
    let h = check_input(img)?;
    let grids = Quadrant::ALL
        .into_iter()
        .map(|q| fht_quadrant(img, q))
        .collect::<Result<Vec<_>>>()?;
    stitch(h, [&grids[0], &grids[1], &grids[2], &grids[3]])
}

/// Same as [`fht_full`] but built from [`naive_fht_quadrant`].
pub fn naive_fht_full(img: &Image) -> Result<HoughImage> {
    let h = check_input(img)?;
    let grids = Quadrant::ALL
        .into_iter()
        .map(|q| naive_fht_quadrant(img, q))
        .collect::<Result<Vec<_>>>()?;
    stitch(h, [&grids[0], &grids[1], &grids[2], &grids[3]])
}

/// Adjoint of [`fht_full`].
///
/// A shared stitched row is read from exactly one quadrant in the forward
/// direction (its owner), so only the owner's transposed kernel receives it.
pub fn tfht(hough: &HoughImage) -> Image {
    let h = hough.h;
    let w = 2 * h;
    let mut out = vec![0.0; h * h];
    for q in Quadrant::ALL {
        let mut buf = vec![0.0; h * w];
        for t in 0..h {
            for s in 0..w {
                let (row, col) = q.stitched_cell(h, t, s);
                if Quadrant::owner_of_row(h, row) == q {
                    buf[t * w + s] = hough.grid.get(row, col);
                }
            }
        }
        fht_kernel_transposed(&mut buf, h);
        for r in 0..h {
            for x in 0..h {
                out[q.source_index(h, r, x)] += buf[r * w + x];
            }
        }
    }
    Image::from_raw(h, h, out)
}

/// Applies [`fht_full`] to every channel.
pub fn fht_featuremap(fm: &FeatureMap) -> Result<FeatureMap> {
    let planes = (0..fm.channels())
        .into_par_iter()
        .map(|c| fht_full(&fm.channel_image(c)).map(HoughImage::into_grid))
        .collect::<Result<Vec<_>>>()?;
    FeatureMap::from_images(&planes)
}

/// Applies [`tfht`] to every channel of a stitched Hough feature map.
pub fn tfht_featuremap(fm: &FeatureMap) -> Result<FeatureMap> {
    let planes = (0..fm.channels())
        .into_par_iter()
        .map(|c| HoughImage::from_grid(fm.channel_image(c)).map(|hi| tfht(&hi)))
        .collect::<Result<Vec<_>>>()?;
    FeatureMap::from_images(&planes)
}
