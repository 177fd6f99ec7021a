//! MIDV-500 ingestion.
//!
//! Expected layout, one folder per document type:
//!
//! ```text
//! root/01_alb_id/images/CA/CA01_01.tif
//! root/01_alb_id/ground_truth/CA/CA01_01.json   {"quad": [[x, y], ...], ...}
//! ```
//!
//! The leading number of the type folder selects the split: types 1-30
//! train, 31-50 test. Files directly under `images/` (the per-type
//! template scans) are not video frames and are ignored.

use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::{self, FilterType};
use rayon::prelude::*;
use serde::Deserialize;

use super::raster::{corners_inside_count, rasterize_quad, QuadAnnotation};
use super::{Sample, Split};
use crate::error::{Error, Result};
use crate::image::Image;

pub const MIDV_SIZE: usize = 256;
/// Highest document-type index of the training split.
pub const LAST_TRAIN_TYPE: usize = 30;
const MIN_CORNERS_INSIDE: usize = 3;
const IMAGE_EXTENSIONS: [&str; 5] = ["tif", "tiff", "png", "jpg", "jpeg"];

#[derive(Deserialize)]
struct Annotation {
    quad: Vec<[f64; 2]>,
}

#[derive(Debug, Default)]
pub struct IngestReport {
    pub samples: Vec<Sample>,
    /// Frames dropped because the annotation or image could not be read.
    pub skipped: usize,
    /// Frames dropped by the corners-inside rule.
    pub filtered: usize,
}

struct Frame {
    type_index: usize,
    image: PathBuf,
    annotation: PathBuf,
    id: String,
}

enum Outcome {
    Kept(Sample),
    Filtered,
    Skipped,
}

fn type_index(name: &str) -> Option<usize> {
    let digits: String = name.chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    Ok(out)
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn collect_frames(root: &Path) -> Result<Vec<Frame>> {
    let mut frames = Vec::new();
    for type_dir in sorted_entries(root)? {
        let name = type_dir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        let Some(index) = type_index(&name) else { continue };
        let images = type_dir.join("images");
        if !type_dir.is_dir() || !images.is_dir() {
            continue;
        }
        for clip in sorted_entries(&images)?.into_iter().filter(|p| p.is_dir()) {
            let clip_name = clip.file_name().unwrap_or_default().to_owned();
            for image in sorted_entries(&clip)?.into_iter().filter(|p| is_image(p)) {
                let stem = image.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                let annotation = type_dir
                    .join("ground_truth")
                    .join(&clip_name)
                    .join(format!("{stem}.json"));
                frames.push(Frame {
                    type_index: index,
                    id: format!("{name}/{}/{stem}", clip_name.to_string_lossy()),
                    image,
                    annotation,
                });
            }
        }
    }
    Ok(frames)
}

fn read_quad(path: &Path) -> std::result::Result<QuadAnnotation, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let ann: Annotation = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let corners: [[f64; 2]; 4] = ann
        .quad
        .try_into()
        .map_err(|q: Vec<_>| format!("quad has {} points, expected 4", q.len()))?;
    QuadAnnotation::new(corners.map(|[x, y]| (x, y))).map_err(|e| e.to_string())
}

fn load_frame(frame: &Frame, size: usize) -> Outcome {
    let quad = match read_quad(&frame.annotation) {
        Ok(q) => q,
        Err(e) => {
            log::warn!("skipping {}: {}: {e}", frame.id, frame.annotation.display());
            return Outcome::Skipped;
        }
    };
    let decoded = match image::open(&frame.image) {
        Ok(img) => img.to_luma32f(),
        Err(e) => {
            log::warn!("skipping {}: {}: {e}", frame.id, frame.image.display());
            return Outcome::Skipped;
        }
    };
    let (w, h) = decoded.dimensions();
    let scaled = quad.scaled(size as f64 / w as f64, size as f64 / h as f64);
    if corners_inside_count(&scaled, size, size) < MIN_CORNERS_INSIDE {
        return Outcome::Filtered;
    }
    let resized = imageops::resize(&decoded, size as u32, size as u32, FilterType::Nearest);
    let values = resized.pixels().map(|p| (p.0[0] as f64).clamp(0.0, 1.0)).collect();
    Outcome::Kept(Sample {
        id: frame.id.clone(),
        image: Image::from_raw(size, size, values),
        mask: rasterize_quad(&scaled, size, size).mask,
        split: if frame.type_index <= LAST_TRAIN_TYPE {
            Split::Train
        } else {
            Split::Test
        },
    })
}

/// Reads every annotated frame under `root`, resized to `size x size`.
pub fn ingest_midv(root: impl AsRef<Path>, size: usize) -> Result<IngestReport> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::argument(format!("{} is not a directory", root.display())));
    }
    if size == 0 {
        return Err(Error::argument("output size must be positive"));
    }
    let frames = collect_frames(root)?;
    let outcomes: Vec<Outcome> = frames.par_iter().map(|f| load_frame(f, size)).collect();
    let mut report = IngestReport::default();
    for o in outcomes {
        match o {
            Outcome::Kept(s) => report.samples.push(s),
            Outcome::Filtered => report.filtered += 1,
            Outcome::Skipped => report.skipped += 1,
        }
    }
    Ok(report)
}
