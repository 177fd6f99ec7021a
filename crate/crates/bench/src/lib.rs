//! Benchmark inputs shared by the criterion targets.

use houghradon::Image;

/// Deterministic, non-constant `h x h` test pattern.
pub fn pattern(h: usize) -> Image {
    Image::from_fn(h, h, |y, x| ((y * 31 + x * 17) % 23) as f64 / 22.0)
}
