//! Cost model of the inner convolutions.

/// Angle counts of the reference experiment grid.
pub const GRID_N: [usize; 10] = [61, 93, 125, 157, 189, 221, 253, 285, 317, 349];
/// `scale_x` values of the reference experiment grid.
pub const GRID_SCALE_X: [f64; 10] = [0.178, 0.356, 0.533, 0.711, 0.889, 1.067, 1.244, 1.422, 1.6, 1.778];

const INNER_CHANNELS: u64 = 16;
const TAPS: u64 = 9;

/// Multiplications of one 16-to-16 channel 3x3 convolution on a
/// `width x height` map: `width * height * 16 * 16 * 9`.
///
/// This single-layer count is the figure the published operation columns
/// report, even though four inner layers run.
pub fn inner_ops_count(width: usize, height: usize) -> u64 {
    width as u64 * height as u64 * INNER_CHANNELS * INNER_CHANNELS * TAPS
}

/// Formats an operation count in units of `1e7`: one decimal below 10,
/// integers from 10 up.
pub fn format_ops(ops: u64) -> String {
    let v = ops as f64 / 1e7;
    let tenths = (v * 10.0).round() / 10.0;
    if tenths < 10.0 {
        format!("{tenths:.1}")
    } else {
        format!("{}", v.round() as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_examples() {
        assert_eq!(inner_ops_count(128, 253), 74_612_736);
        assert_eq!(format_ops(inner_ops_count(128, 253)), "7.5");
        assert_eq!(format_ops(inner_ops_count(64, 253)), "3.7");
        assert_eq!(inner_ops_count(16, 61), 2_248_704);
        assert_eq!(format_ops(inner_ops_count(16, 61)), "0.2");
    }

    #[test]
    fn display_switches_to_integers_at_ten() {
        assert_eq!(format_ops(99_400_000), "9.9");
        assert_eq!(format_ops(99_600_000), "10");
        assert_eq!(format_ops(105_062_400), "11");
        assert_eq!(format_ops(0), "0.0");
    }
}
