use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use houghradon::data::{ingest_midv, read_dataset, synth_dataset, write_dataset, Distortions, Sample, Split, SynthConfig};
use houghradon::fht::{fht_full, naive_fht_full};
use houghradon::gradcheck::{hrt_adjoint_gap, run_gradchecks};
use houghradon::image::{read_pgm, read_tensor, write_pgm, write_tensor, FeatureMap, Image};
use houghradon::metrics::{mask_labels, miou, SegmentationPair};
use houghradon::nn::opcount::{GRID_N, GRID_SCALE_X};
use houghradon::nn::{
    build_network, format_ops, inner_ops_count, load_checkpoint, predict_labels, save_checkpoint, train_with,
    AdamConfig, LrSchedule, NetworkSpec, TrainConfig,
};
use houghradon::radon::{radon_width, RadonHoughMap};

const ADJOINT_TOLERANCE: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "houghradon", version, about = "Fast Hough Transform, Hough-to-Radon layers and a document segmentation network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full four-quadrant FHT of a square PGM image.
    Fht {
        input: PathBuf,
        output: Option<PathBuf>,
        /// Use the direct O(h^3) summation instead of the fast recursion.
        #[arg(long)]
        naive: bool,
        /// Run both and report whether they agree.
        #[arg(long)]
        compare: bool,
    },
    /// Resample a Hough tensor onto a uniform (rho, phi) grid.
    Hrt {
        input: Option<PathBuf>,
        output: Option<PathBuf>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        scale_x: f64,
        /// Check <Fx, y> = <x, F^T y> on random pairs; needs `--w1`.
        #[arg(long)]
        adjoint_check: bool,
        /// Hough input side, for `--adjoint-check` without an input file.
        #[arg(long)]
        w1: Option<usize>,
    },
    /// Scatter a Radon tensor back onto the Hough grid.
    Rht {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        w1: usize,
        #[arg(long, default_value_t = 1.0)]
        scale_x: f64,
    },
    /// Inner-convolution operation counts over an (n, scale_x) grid.
    Opcount {
        #[arg(long, default_value_t = 64)]
        w1: usize,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        scalex_list: Option<Vec<f64>>,
    },
    /// Train the segmentation network and write a checkpoint.
    Train(TrainArgs),
    /// Mean IoU of a checkpoint (or of stored predictions) on a dataset.
    Eval(EvalArgs),
    /// Compare every backward pass with central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 16)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        corrupt_adjoint: bool,
    },
    /// Write a synthetic dataset as PGM pairs with a CSV index.
    Synth {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Samples tagged as test (taken from the end).
        #[arg(long, default_value_t = 0)]
        test: usize,
        /// Disable all distortions.
        #[arg(long)]
        clean: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Generate this many synthetic samples (the last fifth is held out).
    #[arg(long)]
    synth: Option<usize>,
    /// MIDV-500 root directory.
    #[arg(long)]
    midv: Option<PathBuf>,
    /// Directory written by `synth`.
    #[arg(long)]
    dataset: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 61)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    scale_x: f64,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Network input side.
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 8)]
    batch: usize,
    /// Decay the learning rate along a half cosine.
    #[arg(long)]
    cosine: bool,
    /// Divide every hidden convolution width by this.
    #[arg(long, default_value_t = 1)]
    width_divisor: usize,
    /// Checkpoint directory.
    #[arg(long)]
    out: PathBuf,
    /// CSV log path (defaults to `<out>/log.csv`).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, required_unless_present = "predicted")]
    checkpoint: Option<PathBuf>,
    /// Score stored `<id>_mask.pgm` predictions instead of running a network.
    #[arg(long, conflicts_with = "checkpoint")]
    predicted: Option<PathBuf>,
    /// Restrict to one split.
    #[arg(long)]
    split: Option<String>,
    /// Write predicted masks here.
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Input side for `--synth` and `--midv` (defaults to the checkpoint's).
    #[arg(long)]
    size: Option<usize>,
}

/// Exit status 2: bad flags or unusable input; 1: everything else.
enum Failure {
    Input(String),
    Internal(String),
}

impl From<houghradon::Error> for Failure {
    fn from(e: houghradon::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn input(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

fn load_source(source: &Source, size: usize, seed: u64) -> Result<Vec<Sample>, Failure> {
    if let Some(count) = source.synth {
        let cfg = SynthConfig::new(count, size, count / 5);
        return Ok(synth_dataset(&cfg, seed)?);
    }
    if let Some(root) = &source.midv {
        if !root.is_dir() {
            return Err(input(format!("MIDV-500 root {} does not exist", root.display())));
        }
        let report = ingest_midv(root, size)?;
        if report.skipped > 0 {
            log::warn!("{} frames skipped", report.skipped);
        }
        log::info!(
            "{} frames kept, {} dropped by the corner rule",
            report.samples.len(),
            report.filtered
        );
        return Ok(report.samples);
    }
    let dir = source.dataset.as_ref().expect("clap requires one source");
    Ok(read_dataset(dir)?)
}

fn cmd_fht(input_path: &Path, output: Option<&Path>, naive: bool, compare: bool) -> Outcome {
    let img = read_pgm(input_path)?;
    if !img.is_square() || !img.height().is_power_of_two() || img.height() < 2 {
        return Err(input(format!(
            "{}: FHT needs a square power-of-two image, got {}x{}",
            input_path.display(),
            img.width(),
            img.height()
        )));
    }
    if compare {
        let fast = fht_full(&img)?;
        let slow = naive_fht_full(&img)?;
        let diff = fast
            .grid()
            .values()
            .iter()
            .zip(slow.grid().values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("max abs difference {diff:e}");
        if diff > 1e-9 * (img.height() as f64) {
            return Err(Failure::Internal("fast and naive FHT disagree".into()));
        }
    }
    let hough = if naive { naive_fht_full(&img)? } else { fht_full(&img)? };
    println!("[{}; {}]", hough.cols(), hough.rows());
    if let Some(out) = output {
        write_tensor(&FeatureMap::from(hough.into_grid()), out)?;
    } else if !compare {
        return Err(input("an output path is required unless --compare is given"));
    }
    Ok(())
}

fn hough_from_tensor(fm: FeatureMap) -> Result<(usize, FeatureMap), Failure> {
    let (_, rows, cols) = fm.shape();
    let h = cols / 2;
    if cols % 2 != 0 || h < 2 || !h.is_power_of_two() || rows != 4 * h - 3 {
        return Err(input(format!("tensor of {rows}x{cols} is not a stitched Hough map")));
    }
    Ok((h, fm))
}

fn cmd_hrt(
    input_path: Option<&Path>,
    output: Option<&Path>,
    n: usize,
    scale_x: f64,
    adjoint_check: bool,
    w1: Option<usize>,
) -> Outcome {
    let loaded = match input_path {
        Some(p) => Some(hough_from_tensor(read_tensor(p)?)?),
        None => None,
    };
    let h = match (&loaded, w1) {
        (Some((h, _)), _) => *h,
        (None, Some(w)) => w,
        (None, None) => return Err(input("give an input tensor or --w1")),
    };
    let map = RadonHoughMap::build(h, n, scale_x)?;
    println!("[{}; {}]", map.width(), map.n());
    if adjoint_check {
        let gap = hrt_adjoint_gap(&map, 100, 0)?;
        println!("adjoint gap {gap:e}");
        if gap >= ADJOINT_TOLERANCE {
            return Err(Failure::Internal(format!("adjoint gap {gap:e} exceeds {ADJOINT_TOLERANCE:e}")));
        }
    }
    match (loaded, output) {
        (Some((_, fm)), Some(out)) => write_tensor(&map.gather_featuremap(&fm)?, out)?,
        (Some(_), None) => return Err(input("an output path is required")),
        (None, _) if !adjoint_check => return Err(input("an input tensor is required")),
        _ => {}
    }
    Ok(())
}

fn cmd_rht(input_path: &Path, output: &Path, w1: usize, scale_x: f64) -> Outcome {
    let fm = read_tensor(input_path)?;
    let map = RadonHoughMap::build(w1, fm.height().max(1), scale_x)?;
    if fm.width() != map.width() {
        return Err(input(format!(
            "Radon width {} does not match {} for w1 = {w1}, scale_x = {scale_x}",
            fm.width(),
            map.width()
        )));
    }
    let hough = map.scatter_featuremap(&fm)?;
    println!("[{}; {}]", hough.width(), hough.height());
    write_tensor(&hough, output)?;
    Ok(())
}

fn cmd_opcount(w1: usize, n_list: Option<Vec<usize>>, scalex_list: Option<Vec<f64>>) -> Outcome {
    let ns = n_list.unwrap_or_else(|| GRID_N.to_vec());
    let sxs = scalex_list.unwrap_or_else(|| GRID_SCALE_X.to_vec());
    if ns.contains(&0) {
        return Err(input("n values must be positive"));
    }
    let header: Vec<String> = sxs.iter().map(|s| format!("{s:>14}")).collect();
    println!("{:>5} |{}", "n", header.join(" |"));
    for &n in &ns {
        let cells = sxs
            .iter()
            .map(|&sx| {
                let w = radon_width(w1, sx)?;
                let size = format!("[{w}; {n}]");
                Ok(format!("{size:>10} {:>3}", format_ops(inner_ops_count(w, n))))
            })
            .collect::<Result<Vec<_>, houghradon::Error>>()?;
        println!("{n:>5} |{}", cells.join(" |"));
    }
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> Outcome {
    let spec = NetworkSpec {
        input_size: a.size,
        n: a.n,
        scale_x: a.scale_x,
        width_divisor: a.width_divisor,
    };
    let (net, mut params) = build_network(spec, a.seed)?;
    let samples = load_source(&a.source, a.size, a.seed)?;
    if samples.is_empty() {
        return Err(input("the dataset is empty"));
    }
    if let Some(bad) = samples.iter().find(|s| s.image.height() != a.size || s.image.width() != a.size) {
        return Err(input(format!(
            "sample {} is {}x{}, the network expects {}x{}",
            bad.id,
            bad.image.width(),
            bad.image.height(),
            a.size,
            a.size
        )));
    }
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch,
        seed: a.seed,
        adam: AdamConfig {
            lr: a.lr,
            ..AdamConfig::default()
        },
        schedule: if a.cosine { LrSchedule::Cosine } else { LrSchedule::Constant },
    };
    fs::create_dir_all(&a.out).map_err(|e| input(format!("{}: {e}", a.out.display())))?;
    let log_path = a.log.clone().unwrap_or_else(|| a.out.join("log.csv"));
    let mut log = csv::Writer::from_path(&log_path).map_err(|e| input(format!("{}: {e}", log_path.display())))?;
    let io_err = |e: csv::Error| Failure::Internal(format!("{}: {e}", log_path.display()));
    log.write_record(["epoch", "loss", "miou"]).map_err(io_err)?;
    let mut write_err = None;
    train_with(&net, &mut params, &samples, &cfg, |l| {
        eprintln!("epoch {:>3}  loss {:.6}  miou {:.4}", l.epoch, l.loss, l.miou);
        let row = [l.epoch.to_string(), format!("{:.8}", l.loss), format!("{:.6}", l.miou)];
        if let Err(e) = log.write_record(&row).and_then(|_| log.flush().map_err(Into::into)) {
            write_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = write_err {
        return Err(io_err(e));
    }
    save_checkpoint(&a.out, &net, &params)?;
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Outcome {
    let loaded = match &a.checkpoint {
        Some(dir) => Some(load_checkpoint(dir)?),
        None => None,
    };
    let size = a
        .size
        .or(loaded.as_ref().map(|(net, _)| net.spec().input_size))
        .unwrap_or(256);
    let mut samples = load_source(&a.source, size, a.seed)?;
    if let Some(split) = &a.split {
        let split = Split::parse(split).ok_or_else(|| input(format!("unknown split {split:?}")))?;
        samples.retain(|s| s.split == split);
    }
    if samples.is_empty() {
        return Err(input("the dataset is empty"));
    }
    if let Some(dir) = &a.predictions {
        fs::create_dir_all(dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
    }
    let mut total = 0.0;
    for s in &samples {
        let pred = match (&loaded, &a.predicted) {
            (Some((net, params)), _) => predict_labels(net, params, s)?,
            (None, Some(dir)) => {
                let path = dir.join(format!("{}_mask.pgm", s.id.replace(['/', '\\'], "_")));
                let img = read_pgm(&path)?;
                if (img.height(), img.width()) != (s.mask.height(), s.mask.width()) {
                    return Err(input(format!("{}: prediction size differs from the mask", path.display())));
                }
                mask_labels(img.values())
            }
            (None, None) => unreachable!("clap requires --checkpoint or --predicted"),
        };
        if let Some(dir) = &a.predictions {
            let img = Image::from_vec(s.mask.height(), s.mask.width(), pred.iter().map(|&l| l as f64).collect())?;
            write_pgm(&img, dir.join(format!("{}_mask.pgm", s.id.replace(['/', '\\'], "_"))))?;
        }
        let pair = SegmentationPair::new(s.mask.height(), s.mask.width(), pred, mask_labels(s.mask.values()))?;
        total += miou(&pair);
    }
    println!("MIoU {:.1}", 100.0 * total / samples.len() as f64);
    Ok(())
}

fn cmd_gradcheck(size: usize, seed: u64, corrupt: bool) -> Outcome {
    let checks = run_gradchecks(size, seed, corrupt)?;
    for c in &checks {
        let verdict = if c.passed() { "pass" } else { "FAIL" };
        println!("{:<10} {:.3e}  (< {:.0e})  {verdict}", c.name, c.error, c.tolerance);
    }
    if checks.iter().all(|c| c.passed()) {
        Ok(())
    } else {
        Err(Failure::Internal("gradient check failed".into()))
    }
}

fn cmd_synth(count: usize, size: usize, seed: u64, test: usize, clean: bool, out: &Path) -> Outcome {
    let cfg = SynthConfig {
        distortions: if clean { Distortions::none() } else { Distortions::all() },
        ..SynthConfig::new(count, size, test)
    };
    let samples = synth_dataset(&cfg, seed)?;
    write_dataset(out, &samples)?;
    println!("{} samples written to {}", samples.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Fht {
            input,
            output,
            naive,
            compare,
        } => cmd_fht(&input, output.as_deref(), naive, compare),
        Command::Hrt {
            input,
            output,
            n,
            scale_x,
            adjoint_check,
            w1,
        } => cmd_hrt(input.as_deref(), output.as_deref(), n, scale_x, adjoint_check, w1),
        Command::Rht {
            input,
            output,
            w1,
            scale_x,
        } => cmd_rht(&input, &output, w1, scale_x),
        Command::Opcount {
            w1,
            n_list,
            scalex_list,
        } => cmd_opcount(w1, n_list, scalex_list),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Gradcheck {
            size,
            seed,
            corrupt_adjoint,
        } => cmd_gradcheck(size, seed, corrupt_adjoint),
        Command::Synth {
            count,
            size,
            seed,
            test,
            clean,
            out,
        } => cmd_synth(count, size, seed, test, clean, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
