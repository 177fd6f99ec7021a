//! Binary 8-bit PGM (`P5`) reading and writing.

use std::fs;
use std::path::Path;

use super::Image;
use crate::error::{Error, Result};

struct HeaderCursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, field: &'static str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(field, "expected a decimal number"));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(field, "number out of range"))
    }
}

/// Decodes an in-memory `P5` file. Byte `v` becomes `v / 255`.
pub fn decode_pgm(data: &[u8]) -> Result<Image> {
    if data.len() < 2 {
        return Err(Error::format("magic", "file too short"));
    }
    if &data[..2] != b"P5" {
        return Err(Error::format(
            "magic",
            format!("expected P5, found {:?}", String::from_utf8_lossy(&data[..2])),
        ));
    }
    let mut cur = HeaderCursor { data, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 {
        return Err(Error::format("width", "must be positive"));
    }
    if height == 0 {
        return Err(Error::format("height", "must be positive"));
    }
    if maxval != 255 {
        return Err(Error::format(
            "maxval",
            format!("only 8-bit maxval 255 is supported, found {maxval}"),
        ));
    }
    // exactly one whitespace byte separates the header from the raster
    match data.get(cur.pos) {
        Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::format("header", "missing whitespace before pixel data")),
    }
    let payload = &data[cur.pos..];
    let expected = width * height;
    if payload.len() < expected {
        return Err(Error::format(
            "payload",
            format!("truncated: expected {expected} bytes, found {}", payload.len()),
        ));
    }
    let values = payload[..expected]
        .iter()
        .map(|&b| f64::from(b) / 255.0)
        .collect();
    Image::from_vec(height, width, values)
}

/// Encodes as `P5`: values are clamped to `[0, 1]` and quantised with
/// `round(v * 255)` (ties away from zero).
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(
        img.values()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&data)
}

pub fn write_pgm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field_of(err: Error) -> &'static str {
        match err {
            Error::Format { field, .. } => field,
            other => panic!("expected format error, got {other}"),
        }
    }

    #[test]
    fn byte_mapping() {
        let mut data = b"P5\n2 2\n255\n".to_vec();
        data.extend([0u8, 255, 128, 64]);
        let img = decode_pgm(&data).unwrap();
        assert_eq!((img.height(), img.width()), (2, 2));
        assert_eq!(img.values(), &[0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0]);
    }

    #[test]
    fn ascii_variant_is_rejected() {
        let data = b"P2\n2 2\n255\n0 0 0 0\n";
        assert_eq!(field_of(decode_pgm(data).unwrap_err()), "magic");
    }

    #[test]
    fn truncated_payload() {
        let mut data = b"P5\n4 4\n255\n".to_vec();
        data.extend([7u8; 15]);
        assert_eq!(field_of(decode_pgm(&data).unwrap_err()), "payload");
    }

    #[test]
    fn sixteen_bit_maxval_is_rejected() {
        let mut data = b"P5\n1 1\n65535\n".to_vec();
        data.extend([0u8, 0]);
        assert_eq!(field_of(decode_pgm(&data).unwrap_err()), "maxval");
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut data = b"P5\n# made by hand\n1 # w\n1\n255\n".to_vec();
        data.push(51);
        assert_eq!(decode_pgm(&data).unwrap().values(), &[0.2]);
    }

    #[test]
    fn quantisation_and_clamping() {
        let img = Image::from_vec(1, 5, vec![0.0, 1.0, -0.5, 2.0, 0.5]).unwrap();
        let bytes = encode_pgm(&img);
        assert_eq!(&bytes[bytes.len() - 5..], &[0, 255, 0, 255, 128]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        let img = Image::from_fn(3, 5, |y, x| ((y * 5 + x) * 17 % 256) as f64 / 255.0);
        write_pgm(&img, &path).unwrap();
        assert_eq!(read_pgm(&path).unwrap(), img);
        let missing = read_pgm(dir.path().join("nope.pgm")).unwrap_err();
        assert!(missing.to_string().contains("nope.pgm"));
    }

    proptest! {
        #[test]
        fn round_trip_within_quantisation(
            (h, w, vals) in (1usize..8, 1usize..8)
                .prop_flat_map(|(h, w)| (Just(h), Just(w), prop::collection::vec(0.0f64..=1.0, h * w)))
        ) {
            let img = Image::from_vec(h, w, vals).unwrap();
            let back = decode_pgm(&encode_pgm(&img)).unwrap();
            for (a, b) in img.values().iter().zip(back.values()) {
                prop_assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
            }
            // a second pass is lossless
            prop_assert_eq!(decode_pgm(&encode_pgm(&back)).unwrap(), back);
        }
    }
}
