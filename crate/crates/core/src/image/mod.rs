//! Grid containers shared by every transform and the network.
//!
//! [`Image`] is a single-channel row-major grid (row = y, column = x);
//! [`FeatureMap`] stacks several equally sized channels.

mod pgm;
mod tensor;

pub use pgm::{read_pgm, write_pgm, decode_pgm, encode_pgm};
pub use tensor::{read_tensor, write_tensor, decode_tensor, encode_tensor, TENSOR_MAGIC};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl Image {
    pub fn zeros(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        Image {
            height,
            width,
            values: vec![0.0; height * width],
        }
    }

    /// Builds an image from row-major values, rejecting non-finite entries.
    pub fn from_vec(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::argument(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if values.len() != height * width {
            return Err(Error::argument(format!(
                "{height}x{width} image needs {} values, got {}",
                height * width,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::argument(format!("non-finite value at index {pos}")));
        }
        Ok(Image {
            height,
            width,
            values,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut img = Image::zeros(height, width);
        for y in 0..height {
            for x in 0..width {
                img.values[y * width + x] = f(y, x);
            }
        }
        img
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.values[y * self.width..(y + 1) * self.width]
    }

    pub fn is_square(&self) -> bool {
        self.height == self.width
    }

    /// Elementwise dot product; panics on shape mismatch.
    pub fn dot(&self, other: &Image) -> f64 {
        assert_eq!(
            (self.height, self.width),
            (other.height, other.width),
            "dot product of differently shaped images"
        );
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Wraps values produced by arithmetic on finite data.
    pub(crate) fn from_raw(height: usize, width: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), height * width);
        Image {
            height,
            width,
            values,
        }
    }

    pub(crate) fn set(&mut self, y: usize, x: usize, v: f64) {
        self.values[y * self.width + x] = v;
    }
}

/// A `channels x height x width` activation stack.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        assert!(
            channels > 0 && height > 0 && width > 0,
            "feature map dimensions must be positive"
        );
        FeatureMap {
            channels,
            height,
            width,
            values: vec![0.0; channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::argument(format!(
                "feature map dimensions must be positive, got {channels}x{height}x{width}"
            )));
        }
        if values.len() != channels * height * width {
            return Err(Error::argument(format!(
                "{channels}x{height}x{width} feature map needs {} values, got {}",
                channels * height * width,
                values.len()
            )));
        }
        Ok(FeatureMap {
            channels,
            height,
            width,
            values,
        })
    }

    /// Stacks equally sized images as channels.
    pub fn from_images(images: &[Image]) -> Result<Self> {
        let first = images
            .first()
            .ok_or_else(|| Error::argument("cannot stack zero images"))?;
        let (h, w) = (first.height, first.width);
        let mut values = Vec::with_capacity(images.len() * h * w);
        for img in images {
            if (img.height, img.width) != (h, w) {
                return Err(Error::argument(format!(
                    "channel shape {}x{} differs from {h}x{w}",
                    img.height, img.width
                )));
            }
            values.extend_from_slice(&img.values);
        }
        Ok(FeatureMap {
            channels: images.len(),
            height: h,
            width: w,
            values,
        })
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.values[(c * self.height + y) * self.width + x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let plane = self.height * self.width;
        &self.values[c * plane..(c + 1) * plane]
    }

    pub fn channel_image(&self, c: usize) -> Image {
        Image {
            height: self.height,
            width: self.width,
            values: self.channel(c).to_vec(),
        }
    }

    pub fn to_images(&self) -> Vec<Image> {
        (0..self.channels).map(|c| self.channel_image(c)).collect()
    }

    pub fn dot(&self, other: &FeatureMap) -> f64 {
        assert_eq!(self.shape(), other.shape(), "dot product of differently shaped maps");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }
}

impl From<Image> for FeatureMap {
    fn from(img: Image) -> Self {
        FeatureMap {
            channels: 1,
            height: img.height,
            width: img.width,
            values: img.values,
        }
    }
}
