//! Training samples: quad rasterization, synthetic document images,
//! MIDV-500 ingestion and a PGM + CSV export format.

mod export;
pub mod midv;
mod raster;
pub mod synth;

pub use export::{read_dataset, write_dataset, INDEX_FILE};
pub use midv::{ingest_midv, IngestReport, MIDV_SIZE};
pub use raster::{corners_inside_count, rasterize_quad, shoelace_area, QuadAnnotation, Raster};
pub use synth::{synth_dataset, Distortions, SynthConfig};

use crate::image::Image;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// A grayscale image in `[0, 1]` and its binary document mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub id: String,
    pub image: Image,
    pub mask: Image,
    pub split: Split,
}

impl Sample {
    /// Checks the shape, value range and mask binarity.
    pub fn is_valid(&self) -> bool {
        self.image.height() == self.mask.height()
            && self.image.width() == self.mask.width()
            && self.image.values().iter().all(|v| (0.0..=1.0).contains(v))
            && self.mask.values().iter().all(|&v| v == 0.0 || v == 1.0)
    }
}
