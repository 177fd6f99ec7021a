//! Datasets on disk: one `<id>.pgm` image and one `<id>_mask.pgm` mask per
//! sample plus an `index.csv` with columns `id,image,mask,split`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Sample, Split};
use crate::error::{Error, Result};
use crate::image::{read_pgm, write_pgm};

pub const INDEX_FILE: &str = "index.csv";

#[derive(Serialize, Deserialize)]
struct IndexRow {
    id: String,
    image: String,
    mask: String,
    split: String,
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format("index", format!("{}: {other:?}", path.display())),
    }
}

/// Images are quantized to 8 bits; masks round-trip exactly.
pub fn write_dataset(dir: impl AsRef<Path>, samples: &[Sample]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let index = dir.join(INDEX_FILE);
    let mut w = csv::Writer::from_path(&index).map_err(|e| csv_error(&index, e))?;
    for s in samples {
        let stem = s.id.replace(['/', '\\'], "_");
        let row = IndexRow {
            image: format!("{stem}.pgm"),
            mask: format!("{stem}_mask.pgm"),
            id: s.id.clone(),
            split: s.split.as_str().to_string(),
        };
        write_pgm(&s.image, dir.join(&row.image))?;
        write_pgm(&s.mask, dir.join(&row.mask))?;
        w.serialize(row).map_err(|e| csv_error(&index, e))?;
    }
    w.flush().map_err(|e| Error::io(&index, e))
}

pub fn read_dataset(dir: impl AsRef<Path>) -> Result<Vec<Sample>> {
    let dir = dir.as_ref();
    let index = dir.join(INDEX_FILE);
    let mut r = csv::Reader::from_path(&index).map_err(|e| csv_error(&index, e))?;
    let mut out = Vec::new();
    for row in r.deserialize::<IndexRow>() {
        let row = row.map_err(|e| csv_error(&index, e))?;
        let split = Split::parse(&row.split)
            .ok_or_else(|| Error::format("split", format!("unknown split {:?}", row.split)))?;
        let image = read_pgm(dir.join(&row.image))?;
        let mask = read_pgm(dir.join(&row.mask))?;
        let sample = Sample {
            id: row.id,
            image,
            mask,
            split,
        };
        if !sample.is_valid() {
            return Err(Error::format("mask", format!("sample {} has a non-binary mask or mismatched sizes", sample.id)));
        }
        out.push(sample);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::{synth_dataset, SynthConfig};

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data = synth_dataset(&SynthConfig::new(4, 16, 1), 8).unwrap();
        write_dataset(dir.path(), &data).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back.len(), 4);
        for (a, b) in data.iter().zip(&back) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.split, b.split);
            assert_eq!(a.mask, b.mask);
            for (x, y) in a.image.values().iter().zip(b.image.values()) {
                assert!((x - y).abs() <= 0.5 / 255.0 + 1e-12);
            }
        }
    }

    #[test]
    fn missing_index_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(Error::Io { .. })));
    }
}
