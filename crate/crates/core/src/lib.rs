//! Fast Hough Transform, Hough-to-Radon resampling and a small segmentation
//! autoencoder that uses both as fixed inner layers.
//!
//! * [`fht`]: four-quadrant dyadic FHT, its stitched layout and its adjoint.
//! * [`radon`]: nearest-neighbour resampling of a Hough map onto a uniform
//!   `(rho, phi)` grid (HRT) and the adjoint scatter (RHT).
//! * [`nn`]: convolution, activations, loss, Adam, the layer stack and
//!   the inner-convolution operation count.
//! * [`metrics`], [`data`]: mean IoU, synthetic documents and MIDV-500 ingestion.

pub mod data;
pub mod error;
pub mod fht;
pub mod gradcheck;
pub mod image;
pub mod metrics;
pub mod nn;
pub mod radon;

pub use error::{Error, Result};
pub use fht::{fht_full, tfht, HoughImage, Quadrant};
pub use image::{FeatureMap, Image};
pub use radon::{hrt, rht, radon_width, AngleGrid, RadonHoughMap, RadonImage};
