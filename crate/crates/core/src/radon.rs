//! Hough-to-Radon resampling (HRT) and its adjoint (RHT).
//!
//! Geometry: `x` is the column and `y = h - 1 - row`, so the origin sits on
//! the centre of the bottom-left pixel and `y` grows upwards. A line with
//! normal angle `phi` and radius `rho` is `x cos(phi) + y sin(phi) = rho`.
//! Output row `j` holds `phi_j = -45 + j * 180 / n` degrees and output column
//! `i` holds `rho = i / scale_x`.
//!
//! With `span = h - 1` (the distance between the first and last pixel
//! centres) the quadrant-local slope is `t = span * tan(phi)` for mostly
//! vertical lines and `t = -span / tan(phi)` for mostly horizontal ones, and
//! `L = rho * sqrt(t^2 + span^2) / span` is the intercept measured along the
//! reference border. The per-quadrant shift that turns `L` into the FHT shift
//! follows from the re-orientation in [`crate::fht`]:
//!
//! | quadrant  | local shift            |
//! |-----------|------------------------|
//! | VertRight | `span - abs(t) - L`    |
//! | VertLeft  | `L - abs(t)`           |
//! | HorzDown  | `span - L`             |
//! | HorzUp    | `L`                    |
//!
//! Both `abs(t)` and the shift are rounded half away from zero; a shift outside
//! `[-h, h)` or a slope above `span` has no Hough cell.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fht::{HoughImage, Quadrant};
use crate::image::{FeatureMap, Image};

/// `n` uniformly spaced normal angles covering `[-45, 135)` degrees.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleGrid {
    n: usize,
}

impl AngleGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::argument("angle count must be positive"));
        }
        Ok(AngleGrid { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step_deg(&self) -> f64 {
        180.0 / self.n as f64
    }

    pub fn degrees(&self, j: usize) -> f64 {
        -45.0 + j as f64 * 180.0 / self.n as f64
    }

    pub fn radians(&self, j: usize) -> f64 {
        self.degrees(j).to_radians()
    }

    pub fn angles_rad(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.radians(j)).collect()
    }

    /// Quadrant of angle `j`, decided in exact integer arithmetic so that
    /// angles landing on 0, 45 or 90 degrees go to the higher quadrant.
    pub fn quadrant(&self, j: usize) -> Quadrant {
        let (j, n) = (j as u64, self.n as u64);
        let idx = [4 * j >= n, 2 * j >= n, 4 * j >= 3 * n]
            .iter()
            .filter(|&&b| b)
            .count();
        Quadrant::ALL[idx]
    }

    /// Index of the grid angle closest to `phi_deg`.
    pub fn nearest(&self, phi_deg: f64) -> usize {
        let j = ((phi_deg + 45.0) / self.step_deg()).round();
        (j.max(0.0) as usize).min(self.n - 1)
    }
}

fn isqrt(v: u64) -> u64 {
    let mut r = (v as f64).sqrt() as u64;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

/// Largest integer radius of a `w1 x w1` image: `floor(w1 * sqrt(2))`.
pub fn max_radius(w1: usize) -> usize {
    isqrt(2 * (w1 as u64) * (w1 as u64)) as usize
}

/// Width of the Radon map: `round(scale_x * floor(w1 * sqrt(2)))`.
pub fn radon_width(w1: usize, scale_x: f64) -> Result<usize> {
    if w1 < 2 {
        return Err(Error::argument(format!("source side must be >= 2, got {w1}")));
    }
    if !(scale_x > 0.0 && scale_x.is_finite()) {
        return Err(Error::argument(format!("scale_x must be positive, got {scale_x}")));
    }
    let width = (scale_x * max_radius(w1) as f64).round() as usize;
    if width == 0 {
        return Err(Error::argument(format!(
            "scale_x {scale_x} leaves no columns for w1={w1}"
        )));
    }
    Ok(width)
}

/// Continuous quadrant-local line parameters before the per-quadrant shift.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineParams {
    /// Intercept along the reference border, `rho * sqrt(t^2 + span^2) / span`.
    pub s: f64,
    /// Signed slope parameter.
    pub t: f64,
    pub quadrant: Quadrant,
}

/// Maps Radon column coordinate `column` (so `rho = column / scale_x`) and
/// normal angle `phi_deg` to continuous Hough parameters.
pub fn map_radon_to_hough(column: f64, phi_deg: f64, w1: usize, scale_x: f64) -> Result<LineParams> {
    let quadrant = Quadrant::of_angle_deg(phi_deg)
        .ok_or_else(|| Error::argument(format!("angle {phi_deg} outside [-45, 135)")))?;
    line_params(column / scale_x, phi_deg.to_radians(), quadrant, w1)
}

fn line_params(rho: f64, phi: f64, quadrant: Quadrant, w1: usize) -> Result<LineParams> {
    if w1 < 2 {
        return Err(Error::argument(format!("source side must be >= 2, got {w1}")));
    }
    let span = (w1 - 1) as f64;
    let t = if quadrant.is_vertical() {
        -span * (-phi).tan()
    } else {
        -span * phi.cos() / phi.sin()
    };
    let s = rho / span * (t * t + span * span).sqrt();
    Ok(LineParams { s, t, quadrant })
}

/// Rounds continuous line parameters to a stitched Hough cell `(row, col)`.
pub fn hough_cell_of(h: usize, p: LineParams) -> Option<(usize, usize)> {
    let span = (h - 1) as f64;
    let slope = p.t.abs();
    let shift = match p.quadrant {
        Quadrant::VertRight => span - slope - p.s,
        Quadrant::VertLeft => p.s - slope,
        Quadrant::HorzDown => span - p.s,
        Quadrant::HorzUp => p.s,
    };
    let t = slope.round();
    let s = shift.round();
    let hf = h as f64;
    if t > span || s < -hf || s >= hf {
        return None;
    }
    let s_idx = (s + 2.0 * hf) as usize % (2 * h);
    Some(p.quadrant.stitched_cell(h, t as usize, s_idx))
}

/// Precomputed gather table from Radon cells to stitched Hough cells.
#[derive(Clone, Debug, PartialEq)]
pub struct RadonHoughMap {
    w1: usize,
    n: usize,
    scale_x: f64,
    width: usize,
    hough_cols: usize,
    /// Row-major over `(j, i)`; flat Hough index or `None` when out of range.
    cells: Vec<Option<u32>>,
}

impl RadonHoughMap {
    pub fn build(w1: usize, n: usize, scale_x: f64) -> Result<Self> {
        if w1 < 2 || !w1.is_power_of_two() {
            return Err(Error::argument(format!(
                "source side must be a power of two >= 2, got {w1}"
            )));
        }
        let grid = AngleGrid::new(n)?;
        let width = radon_width(w1, scale_x)?;
        let hough_cols = 2 * w1;
        let mut cells = Vec::with_capacity(n * width);
        for j in 0..n {
            let q = grid.quadrant(j);
            let phi = grid.radians(j);
            for i in 0..width {
                let p = line_params(i as f64 / scale_x, phi, q, w1)?;
                cells.push(hough_cell_of(w1, p).map(|(r, c)| (r * hough_cols + c) as u32));
            }
        }
        Ok(RadonHoughMap {
            w1,
            n,
            scale_x,
            width,
            hough_cols,
            cells,
        })
    }

    pub fn w1(&self) -> usize {
        self.w1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scale_x(&self) -> f64 {
        self.scale_x
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Hough `(row, col)` feeding Radon cell `(j, i)`.
    pub fn source(&self, j: usize, i: usize) -> Option<(usize, usize)> {
        self.cells[j * self.width + i].map(|k| {
            let k = k as usize;
            (k / self.hough_cols, k % self.hough_cols)
        })
    }

    pub fn in_range_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    fn gather_plane(&self, hough: &[f64]) -> Vec<f64> {
        self.cells
            .iter()
            .map(|c| c.map_or(0.0, |k| hough[k as usize]))
            .collect()
    }

    fn scatter_plane(&self, radon: &[f64]) -> Vec<f64> {
        let (rows, cols) = crate::fht::hough_shape(self.w1);
        let mut out = vec![0.0; rows * cols];
        for (c, v) in self.cells.iter().zip(radon) {
            if let Some(k) = c {
                out[*k as usize] += v;
            }
        }
        out
    }

    pub fn gather(&self, hough: &HoughImage) -> Result<RadonImage> {
        if hough.h() != self.w1 {
            return Err(Error::argument(format!(
                "Hough map is for h={}, table is for w1={}",
                hough.h(),
                self.w1
            )));
        }
        Ok(RadonImage {
            w1: self.w1,
            scale_x: self.scale_x,
            grid: Image::from_raw(self.n, self.width, self.gather_plane(hough.grid().values())),
        })
    }

    pub fn scatter(&self, radon: &RadonImage) -> Result<HoughImage> {
        self.check_radon_shape(radon.grid.height(), radon.grid.width())?;
        if radon.w1 != self.w1 {
            return Err(Error::argument(format!(
                "Radon map is for w1={}, table is for w1={}",
                radon.w1, self.w1
            )));
        }
        let (rows, cols) = crate::fht::hough_shape(self.w1);
        HoughImage::new(
            self.w1,
            Image::from_raw(rows, cols, self.scatter_plane(radon.grid.values())),
        )
    }

    fn check_radon_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if (rows, cols) != (self.n, self.width) {
            return Err(Error::argument(format!(
                "Radon map must be {}x{}, got {rows}x{cols}",
                self.n, self.width
            )));
        }
        Ok(())
    }

    /// Per-channel HRT of a stitched Hough feature map.
    pub fn gather_featuremap(&self, fm: &FeatureMap) -> Result<FeatureMap> {
        let (rows, cols) = crate::fht::hough_shape(self.w1);
        if (fm.height(), fm.width()) != (rows, cols) {
            return Err(Error::argument(format!(
                "Hough feature map must be {rows}x{cols}, got {}x{}",
                fm.height(),
                fm.width()
            )));
        }
        let values: Vec<f64> = (0..fm.channels())
            .into_par_iter()
            .flat_map_iter(|c| self.gather_plane(fm.channel(c)))
            .collect();
        FeatureMap::from_vec(fm.channels(), self.n, self.width, values)
    }

    /// Per-channel RHT of a Radon feature map.
    pub fn scatter_featuremap(&self, fm: &FeatureMap) -> Result<FeatureMap> {
        self.check_radon_shape(fm.height(), fm.width())?;
        let (rows, cols) = crate::fht::hough_shape(self.w1);
        let values: Vec<f64> = (0..fm.channels())
            .into_par_iter()
            .flat_map_iter(|c| self.scatter_plane(fm.channel(c)))
            .collect();
        FeatureMap::from_vec(fm.channels(), rows, cols, values)
    }
}

/// An `n x width` map over `(phi, rho)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadonImage {
    w1: usize,
    scale_x: f64,
    grid: Image,
}

impl RadonImage {
    pub fn new(w1: usize, scale_x: f64, grid: Image) -> Result<Self> {
        let width = radon_width(w1, scale_x)?;
        if grid.width() != width {
            return Err(Error::argument(format!(
                "Radon map for w1={w1}, scale_x={scale_x} must be {width} wide, got {}",
                grid.width()
            )));
        }
        Ok(RadonImage { w1, scale_x, grid })
    }

    pub fn n(&self) -> usize {
        self.grid.height()
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn w1(&self) -> usize {
        self.w1
    }

    pub fn scale_x(&self) -> f64 {
        self.scale_x
    }

    pub fn angles(&self) -> AngleGrid {
        AngleGrid { n: self.n() }
    }

    /// Physical radius of column `i`.
    pub fn rho(&self, i: usize) -> f64 {
        i as f64 / self.scale_x
    }

    pub fn grid(&self) -> &Image {
        &self.grid
    }

    pub fn into_grid(self) -> Image {
        self.grid
    }
}

/// HRT: nearest-neighbour gather of a Hough map onto `n` angles.
pub fn hrt(hough: &HoughImage, n: usize, scale_x: f64) -> Result<RadonImage> {
    RadonHoughMap::build(hough.h(), n, scale_x)?.gather(hough)
}

/// RHT: adjoint scatter-add of [`hrt`].
pub fn rht(radon: &RadonImage, w1: usize) -> Result<HoughImage> {
    if radon.w1 != w1 {
        return Err(Error::argument(format!(
            "Radon map was built for w1={}, not {w1}",
            radon.w1
        )));
    }
    RadonHoughMap::build(w1, radon.n(), radon.scale_x)?.scatter(radon)
}
