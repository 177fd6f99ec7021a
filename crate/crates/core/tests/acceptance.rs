//! Acceptance suite. Runs each criterion, prints one PASS/FAIL/SKIP line per
//! criterion and exits non-zero if any failed.
//!
//! Criterion 9 needs a real MIDV-500 tree: `MIDV500_ROOT=/path cargo test
//! --test acceptance`.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use houghradon::data::{ingest_midv, synth_dataset, Split, SynthConfig, MIDV_SIZE};
use houghradon::fht::{fht_quadrant, hough_shape, naive_fht_quadrant};
use houghradon::gradcheck::{run_gradchecks, BLOCK_TOLERANCE, NETWORK_TOLERANCE};
use houghradon::metrics::{miou, SegmentationPair};
use houghradon::nn::{
    build_network, format_ops, inner_ops_count, train_with, AdamConfig, LrSchedule, NetworkSpec, TrainConfig,
};
use houghradon::{fht_full, hrt, radon_width, rht, tfht, AngleGrid, HoughImage, Image, Quadrant, RadonHoughMap, RadonImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{argmax_centroid, direct_radon, draw_line, random_central_line, rel_gap};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

const TABLE_N: [usize; 10] = [61, 93, 125, 157, 189, 221, 253, 285, 317, 349];
const TABLE_SCALE_X: [f64; 10] = [0.178, 0.356, 0.533, 0.711, 0.889, 1.067, 1.244, 1.422, 1.6, 1.778];
const TABLE_WIDTHS: [usize; 10] = [16, 32, 48, 64, 80, 96, 112, 128, 144, 160];
// Published op counts in units of 1e7, rows by n, columns by scale_x.
const TABLE_OPS: [[&str; 10]; 10] = [
    ["0.2", "0.4", "0.7", "0.9", "1.1", "1.3", "1.6", "1.8", "2.0", "2.2"],
    ["0.3", "0.7", "1.0", "1.4", "1.7", "2.1", "2.4", "2.7", "3.1", "3.4"],
    ["0.5", "0.9", "1.4", "1.8", "2.3", "2.8", "3.2", "3.7", "4.1", "4.6"],
    ["0.6", "1.2", "1.7", "2.3", "2.9", "3.5", "4.1", "4.6", "5.2", "5.8"],
    ["0.7", "1.4", "2.1", "2.8", "3.5", "4.2", "4.9", "5.6", "6.3", "7.0"],
    ["0.8", "1.6", "2.4", "3.3", "4.1", "4.9", "5.7", "6.5", "7.3", "8.1"],
    ["0.9", "1.9", "2.8", "3.7", "4.7", "5.6", "6.5", "7.5", "8.4", "9.3"],
    ["1.1", "2.1", "3.2", "4.2", "5.3", "6.3", "7.4", "8.4", "9.5", "11"],
    ["1.2", "2.3", "3.5", "4.7", "5.8", "7.0", "8.2", "9.3", "11", "12"],
    ["1.3", "2.6", "3.9", "5.1", "6.4", "7.7", "9.0", "10", "12", "13"],
];
// Side of the inner Hough maps of the full-size network (256 / 4).
const INNER_W1: usize = 64;

fn random_int_image(rng: &mut ChaCha8Rng, h: usize) -> Image {
    Image::from_fn(h, h, |_, _| rng.random_range(0..16) as f64)
}

fn fht_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut compared = 0usize;
    for h in [4, 8, 16, 32] {
        for _ in 0..200 {
            let img = random_int_image(&mut rng, h);
            for q in Quadrant::ALL {
                let fast = fht_quadrant(&img, q).unwrap();
                let naive = naive_fht_quadrant(&img, q).unwrap();
                if fast.values() != naive.values() {
                    return Outcome::Fail(format!("mismatch at h={h}, quadrant {q:?}"));
                }
                compared += 1;
            }
        }
    }
    Outcome::Pass(format!("{compared} quadrant transforms identical"))
}

fn shape_laws() -> Outcome {
    let mut h = 2;
    while h <= 64 {
        let hough = fht_full(&Image::zeros(h, h)).unwrap();
        if (hough.rows(), hough.cols()) != (4 * h - 3, 2 * h) || hough_shape(h) != (4 * h - 3, 2 * h) {
            return Outcome::Fail(format!("fht_full at h={h} gave {}x{}", hough.rows(), hough.cols()));
        }
        h *= 2;
    }
    let hough = HoughImage::zeros(INNER_W1).unwrap();
    let w2 = (INNER_W1 as f64 * 2f64.sqrt()).floor();
    let mut cells = 0;
    for &n in &TABLE_N {
        for (k, &sx) in TABLE_SCALE_X.iter().enumerate() {
            let expected = TABLE_WIDTHS[k];
            let law = (sx * w2).round() as usize;
            let width = radon_width(INNER_W1, sx).unwrap();
            let out = hrt(&hough, n, sx).unwrap();
            if law != expected || width != expected || (out.n(), out.width()) != (n, expected) {
                return Outcome::Fail(format!(
                    "n={n}, scale_x={sx}: law {law}, radon_width {width}, hrt {}x{}, table {expected}",
                    out.n(),
                    out.width()
                ));
            }
            cells += 1;
        }
    }
    check(cells == 100, format!("fht_full h=2..64 and {cells} table size cells match"))
}

fn ops_table() -> Outcome {
    let mut cells = 0;
    for (r, &n) in TABLE_N.iter().enumerate() {
        for (k, &sx) in TABLE_SCALE_X.iter().enumerate() {
            let width = radon_width(INNER_W1, sx).unwrap();
            let got = format_ops(inner_ops_count(width, n));
            if got != TABLE_OPS[r][k] {
                return Outcome::Fail(format!("[{width}; {n}] gave {got}, table {}", TABLE_OPS[r][k]));
            }
            cells += 1;
        }
    }
    // Hough-only encoder: inner maps are the raw stitched FHT map.
    let (rows, cols) = hough_shape(INNER_W1);
    let hough_only = format_ops(inner_ops_count(cols, rows));
    let matched = format_ops(inner_ops_count(radon_width(INNER_W1, 1.422).unwrap(), 253));
    check(
        hough_only == "7.5" && matched == "7.5" && (cols, rows) == (128, 253),
        format!("{cells} table cells; [{cols}; {rows}] -> {hough_only}, radon [128; 253] -> {matched}"),
    )
}

fn random_image(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Image {
    Image::from_fn(h, w, |_, _| rng.random_range(-1.0..1.0))
}

fn adjoints() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst_fht: f64 = 0.0;
    let mut worst_hrt: f64 = 0.0;
    for h in [8, 16] {
        let (rows, cols) = hough_shape(h);
        for _ in 0..100 {
            let x = random_image(&mut rng, h, h);
            let y = HoughImage::new(h, random_image(&mut rng, rows, cols)).unwrap();
            let lhs = fht_full(&x).unwrap().grid().dot(y.grid());
            let rhs = x.dot(&tfht(&y));
            worst_fht = worst_fht.max(rel_gap(lhs, rhs));
        }
        for _ in 0..100 {
            let n = rng.random_range(4..4 * h);
            let sx = rng.random_range(0.3..2.0);
            let map = RadonHoughMap::build(h, n, sx).unwrap();
            let x = HoughImage::new(h, random_image(&mut rng, rows, cols)).unwrap();
            let y = RadonImage::new(h, sx, random_image(&mut rng, n, map.width())).unwrap();
            let lhs = hrt(&x, n, sx).unwrap().grid().dot(y.grid());
            let rhs = x.grid().dot(rht(&y, h).unwrap().grid());
            worst_hrt = worst_hrt.max(rel_gap(lhs, rhs));
        }
    }
    check(
        worst_fht < 1e-9 && worst_hrt < 1e-9,
        format!("worst gap fht {worst_fht:.2e}, hrt {worst_hrt:.2e}"),
    )
}

fn gradients() -> Outcome {
    let checks = run_gradchecks(16, 5, false).unwrap();
    let mut parts = Vec::new();
    let mut ok = checks.len() == 7;
    for c in &checks {
        let limit = if c.name == "network" {
            NETWORK_TOLERANCE
        } else {
            BLOCK_TOLERANCE
        };
        ok &= c.error < limit && c.error.is_finite();
        parts.push(format!("{} {:.1e}", c.name, c.error));
    }
    // A broken adjoint must be caught, or the check proves nothing.
    let corrupt = run_gradchecks(16, 5, true).unwrap();
    let caught = corrupt.iter().any(|c| c.name == "network" && !c.passed());
    ok &= caught;
    parts.push(format!("corrupted adjoint caught: {caught}"));
    check(ok, parts.join(", "))
}

fn geometry() -> Outcome {
    let (h, n, sx) = (32, 125, 1.0);
    let grid = AngleGrid::new(n).unwrap();
    let width = radon_width(h, sx).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let trials = 40;
    let (mut analytic_hits, mut oracle_hits) = (0, 0);
    for _ in 0..trials {
        let (j, rho) = random_central_line(&mut rng, h, &grid);
        let img = draw_line(h, rho, grid.radians(j));
        let radon = hrt(&fht_full(&img).unwrap(), n, sx).unwrap();
        let (pj, pi) = argmax_centroid(radon.grid());
        let near = |a: usize, b: f64| (a as f64 - b).abs() <= 1.0 + 1e-9;
        let analytic = near(pj, j as f64) && near(pi, (rho * sx).round());
        let (oj, oi) = argmax_centroid(&direct_radon(&img, n, width, sx));
        let oracle = near(pj, oj as f64) && near(pi, oi as f64);
        analytic_hits += analytic as usize;
        oracle_hits += oracle as usize;
    }
    let rate = analytic_hits as f64 / trials as f64;
    check(
        rate >= 0.9,
        format!(
            "{analytic_hits}/{trials} peaks within one cell of the line, {oracle_hits}/{trials} of the direct Radon peak"
        ),
    )
}

fn learning() -> Outcome {
    let samples = synth_dataset(&SynthConfig::new(250, 64, 50), 7).unwrap();
    let train_count = samples.iter().filter(|s| s.split == Split::Train).count();
    let test_count = samples.len() - train_count;
    let spec = NetworkSpec {
        input_size: 64,
        n: 61,
        scale_x: 1.0,
        width_divisor: 1,
    };
    let (net, mut params) = build_network(spec, 1).unwrap();
    let cfg = TrainConfig {
        epochs: 30,
        batch_size: 4,
        seed: 3,
        adam: AdamConfig {
            lr: 4e-3,
            ..AdamConfig::default()
        },
        schedule: LrSchedule::Cosine,
    };
    let start = Instant::now();
    let log = train_with(&net, &mut params, &samples, &cfg, |e| {
        eprintln!("  epoch {:>2} loss {:.4} miou {:.4}", e.epoch, e.loss, e.miou);
    })
    .unwrap();
    let last = log.last().unwrap();
    let best = log.iter().map(|e| e.miou).fold(0.0, f64::max);
    check(
        last.miou >= 0.90 && train_count == 200 && test_count == 50,
        format!(
            "{train_count} train / {test_count} test, final MIoU {:.4} (best {best:.4}) after {} epochs in {:.0}s",
            last.miou,
            last.epoch,
            start.elapsed().as_secs_f64()
        ),
    )
}

// Confusion-matrix MIoU written out independently of the library.
fn brute_miou(p: &[u8], g: &[u8]) -> f64 {
    let mut m = [[0usize; 2]; 2];
    for (&a, &b) in p.iter().zip(g) {
        m[b as usize][a as usize] += 1;
    }
    let mut total = 0.0;
    for c in 0..2 {
        let tp = m[c][c];
        let fp = m[1 - c][c];
        let fn_ = m[c][1 - c];
        let union = tp + fp + fn_;
        total += if union == 0 { 1.0 } else { tp as f64 / union as f64 };
    }
    total / 2.0
}

fn metric_suite() -> Outcome {
    let score = |h: usize, w: usize, p: &[u8], g: &[u8]| miou(&SegmentationPair::new(h, w, p.to_vec(), g.to_vec()).unwrap());
    let same = score(2, 2, &[0, 1, 1, 0], &[0, 1, 1, 0]);
    let inverse = score(2, 2, &[1, 0, 0, 1], &[0, 1, 1, 0]);
    let partial = score(2, 2, &[1, 1, 0, 0], &[1, 0, 0, 0]);
    let examples = [(same, 1.0), (inverse, 0.0), (partial, 7.0 / 12.0)];
    if let Some((got, want)) = examples.iter().find(|(got, want)| (got - want).abs() > 1e-12) {
        return Outcome::Fail(format!("example gave {got}, expected {want}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (h, w) = (rng.random_range(1..20), rng.random_range(1..20));
        let bias = rng.random_range(0.0..1.0);
        let p: Vec<u8> = (0..h * w).map(|_| rng.random_bool(bias) as u8).collect();
        let g: Vec<u8> = (0..h * w).map(|_| rng.random_bool(bias) as u8).collect();
        worst = worst.max((score(h, w, &p, &g) - brute_miou(&p, &g)).abs());
    }
    check(worst <= 1e-12, format!("examples exact, 100 random masks worst diff {worst:.1e}"))
}

fn midv() -> Outcome {
    let Ok(root) = std::env::var("MIDV500_ROOT") else {
        return Outcome::Skip("MIDV500_ROOT not set".into());
    };
    let report = ingest_midv(&root, MIDV_SIZE).unwrap();
    let total = report.samples.len();
    let test = report.samples.iter().filter(|s| s.split == Split::Test).count();
    check(
        total == 11965 && test == 4748,
        format!(
            "{total} samples, {test} test ({} skipped, {} filtered)",
            report.skipped, report.filtered
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("FHT oracle equivalence", fht_oracle),
        ("shape laws", shape_laws),
        ("ops table", ops_table),
        ("adjoint identities", adjoints),
        ("gradient checks", gradients),
        ("geometric consistency", geometry),
        ("desk-scale learning", learning),
        ("MIoU unit suite", metric_suite),
        ("MIDV-500 ingestion", midv),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| Outcome::Fail("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Outcome::Pass(d) => println!("PASS criterion {id} ({name}): {d} [{secs:.1}s]"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("FAIL criterion {id} ({name}): {d} [{secs:.1}s]");
            }
            Outcome::Skip(d) => println!("SKIP criterion {id} ({name}): {d}"),
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
