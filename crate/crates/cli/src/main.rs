//! `gpl`: Gaussian pseudo labels from the command line.

mod number;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gausslabel::io::{
    read_ellipse_csv, read_f32v, read_mask_stack, write_atomic, write_ellipse_csv, write_f32v, write_mask_stack,
};
use gausslabel::losses::check_gradients;
use gausslabel::metrics::evaluate;
use gausslabel::phantom::{generate_phantom, Bulge, PhantomSpec};
use gausslabel::pipeline::{fit_mask_stack, load_cases, pair_cases, pseudo_labels};
use gausslabel::{combined_loss, stack_heatmaps, threshold, variability, DistributionMode, LossWeights};
use serde::Serialize;

use crate::number::format_significant;

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage error (bad flags, argument values or GPL_THREADS)
  3  I/O error (unreadable, malformed or inconsistent files)
  4  numeric or degenerate input (no ellipse fits, shape mismatch, ...)

Set GPL_THREADS to cap the number of worker threads.";

#[derive(Parser)]
#[command(name = "gpl", version, about = "Gaussian pseudo labels for ellipse-like structures", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an ellipse to every non-empty slice of a PGM mask stack.
    Fit { mask_dir: PathBuf, out_csv: PathBuf },
    /// Render ellipse records as a depth x n x n heatmap volume.
    Heatmap {
        in_csv: PathBuf,
        depth: usize,
        n: usize,
        out_f32v: PathBuf,
    },
    /// Fit and render in one go: masks to a pseudo-label volume.
    Pseudo {
        mask_dir: PathBuf,
        out_f32v: PathBuf,
        /// Also write the fitted ellipses.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Binarize a heatmap volume (strictly above t) into a PGM stack.
    Threshold { in_f32v: PathBuf, t: f64, out_dir: PathBuf },
    /// Score predicted mask stacks against ground truth.
    Eval {
        pred_dir: PathBuf,
        gt_dir: PathBuf,
        out_json: PathBuf,
        /// Voxel spacing `sx,sy,sz` used for the Hausdorff distance.
        #[arg(long, default_value = "1,1,1", value_parser = parse_spacing)]
        spacing: [f64; 3],
    },
    /// Print the combined pseudo-label loss between two volumes.
    Loss {
        pred_f32v: PathBuf,
        target_f32v: PathBuf,
        #[arg(long, value_enum, default_value_t = Dist::Kl)]
        dist: Dist,
        #[arg(long, default_value_t = 1.0)]
        w1: f64,
        #[arg(long, default_value_t = 1.0)]
        w2: f64,
    },
    /// Compare analytic loss gradients with finite differences.
    Gradcheck {
        #[arg(default_value_t = 0)]
        seed: u64,
    },
    /// Dice agreement between two annotation sets of the same cases.
    Variability {
        dir_a: PathBuf,
        dir_b: PathBuf,
        out_json: PathBuf,
    },
    /// Generate a synthetic phantom: strong masks, pseudo labels and ellipses.
    Phantom(PhantomArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    /// KL divergence per slice, averaged.
    Kl,
    /// Axis-marginal Wasserstein distance over the volume.
    Wass,
}

#[derive(Args)]
struct PhantomArgs {
    /// Writes `strong/slice_*.pgm`, `pseudo.f32v` and `ellipses.csv` here.
    out_dir: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    depth: usize,
    #[arg(long, default_value_t = 256)]
    size: usize,
    /// Maximum center displacement per slice, px.
    #[arg(long, default_value_t = 1.0)]
    drift: f64,
    /// Semi-major axis range `min,max`, px.
    #[arg(long, default_value = "20,35", value_parser = parse_pair)]
    axis_range: (f64, f64),
    /// Semi-minor / semi-major ratio range `min,max`.
    #[arg(long, default_value = "0.5,0.7", value_parser = parse_pair)]
    minor_ratio: (f64, f64),
    /// Maximum rotation change per slice, rad.
    #[arg(long, default_value_t = 0.05)]
    angle_drift: f64,
    /// Axis dilation `factor,first,last` over a slice range.
    #[arg(long, value_parser = parse_bulge)]
    bulge: Option<Bulge>,
    /// Peak radial deviation of the strong masks from the ellipses, px.
    #[arg(long, default_value_t = 0.0)]
    perturbation: f64,
}

fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

fn parse_spacing(s: &str) -> Result<[f64; 3], String> {
    let v = parse_floats(s)?;
    let spacing: [f64; 3] = v.try_into().map_err(|_| "expected three values sx,sy,sz".to_string())?;
    if spacing.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err("spacing must be positive".into());
    }
    Ok(spacing)
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    match parse_floats(s)?[..] {
        [a, b] => Ok((a, b)),
        _ => Err("expected two values min,max".into()),
    }
}

fn parse_bulge(s: &str) -> Result<Bulge, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [factor, start, end] = parts[..] else {
        return Err("expected factor,first,last".into());
    };
    let index = |p: &str| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}"));
    Ok(Bulge {
        factor: factor.trim().parse().map_err(|e| format!("{factor:?}: {e}"))?,
        start: index(start)?,
        end: index(end)?,
    })
}

enum Failure {
    Usage(String),
    Numeric(String),
    Library(gausslabel::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Numeric(_) => EXIT_NUMERIC,
            Failure::Library(e) if e.is_io() => EXIT_IO,
            Failure::Library(
                gausslabel::Error::InvalidArgument(_)
                | gausslabel::Error::InvalidSpec(_)
                | gausslabel::Error::OutOfRangeThreshold(_),
            ) => EXIT_USAGE,
            Failure::Library(_) => EXIT_NUMERIC,
        }
    }
}

impl From<gausslabel::Error> for Failure {
    fn from(e: gausslabel::Error) -> Self {
        Failure::Library(e)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) => f.write_str(m),
            Failure::Library(e) => write!(f, "{e}"),
        }
    }
}

type Outcome = Result<(), Failure>;

fn write_json<T: Serialize>(value: &T, path: &Path) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).expect("serializable report");
    text.push('\n');
    Ok(write_atomic(path, text.as_bytes())?)
}

fn run_fit(mask_dir: &Path, out_csv: &Path) -> Outcome {
    let masks = read_mask_stack(mask_dir)?;
    Ok(write_ellipse_csv(&fit_mask_stack(&masks)?, out_csv)?)
}

fn run_heatmap(in_csv: &Path, depth: usize, n: usize, out: &Path) -> Outcome {
    let (records, _) = read_ellipse_csv(in_csv)?;
    Ok(write_f32v(&stack_heatmaps(&records, depth, n)?, out)?)
}

fn run_pseudo(mask_dir: &Path, out: &Path, csv: Option<&Path>) -> Outcome {
    let masks = read_mask_stack(mask_dir)?;
    let (records, heatmaps) = pseudo_labels(&masks)?;
    write_f32v(&heatmaps, out)?;
    if let Some(path) = csv {
        write_ellipse_csv(&records, path)?;
    }
    Ok(())
}

fn run_threshold(input: &Path, t: f64, out_dir: &Path) -> Outcome {
    let v = read_f32v(input)?;
    Ok(write_mask_stack(&threshold(&v, t)?, out_dir)?)
}

fn run_eval(pred: &Path, gt: &Path, out: &Path, spacing: [f64; 3]) -> Outcome {
    let cases = pair_cases(load_cases(pred)?, load_cases(gt)?)?;
    write_json(&evaluate(&cases, spacing)?, out)
}

fn run_loss(pred: &Path, target: &Path, dist: Dist, w1: f64, w2: f64) -> Outcome {
    let x = read_f32v(pred)?;
    let g = read_f32v(target)?;
    let mode = match dist {
        Dist::Kl => DistributionMode::Kl2d,
        Dist::Wass => DistributionMode::Wasserstein3d,
    };
    let (v, _) = combined_loss(&g, &x, LossWeights::new(w1, w2)?, mode)?;
    println!(
        "total={} dist={} rec={}",
        format_significant(v.total, 9),
        format_significant(v.distribution_term, 9),
        format_significant(v.reconstruction_term, 9)
    );
    Ok(())
}

const GRADCHECK_STEP: f64 = 1e-3;
const GRADCHECK_TOLERANCE: f64 = 1e-4;

fn run_gradcheck(seed: u64) -> Outcome {
    let r = check_gradients(seed, GRADCHECK_STEP)?;
    println!(
        "kl={} wass={} mae={}",
        format_significant(r.kl, 9),
        format_significant(r.wasserstein, 9),
        format_significant(r.mae, 9)
    );
    if r.max_error() > GRADCHECK_TOLERANCE {
        return Err(Failure::Numeric(format!(
            "gradient mismatch {} exceeds {GRADCHECK_TOLERANCE}",
            r.max_error()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct CaseAgreement {
    id: String,
    dsc: f64,
}

#[derive(Serialize)]
struct VariabilityReport {
    cases: Vec<CaseAgreement>,
    mean: f64,
    std: f64,
}

fn run_variability(dir_a: &Path, dir_b: &Path, out: &Path) -> Outcome {
    let cases = pair_cases(load_cases(dir_a)?, load_cases(dir_b)?)?;
    let (ids, (a, b)): (Vec<String>, (Vec<_>, Vec<_>)) = cases.into_iter().map(|(id, a, b)| (id, (a, b))).unzip();
    let r = variability(&a, &b)?;
    let report = VariabilityReport {
        cases: ids
            .into_iter()
            .zip(r.per_case)
            .map(|(id, dsc)| CaseAgreement { id, dsc })
            .collect(),
        mean: r.mean,
        std: r.std,
    };
    write_json(&report, out)
}

fn run_phantom(args: &PhantomArgs) -> Outcome {
    let spec = PhantomSpec {
        seed: args.seed,
        depth: args.depth,
        size: args.size,
        drift: args.drift,
        axis_range: args.axis_range,
        minor_ratio: args.minor_ratio,
        angle_drift: args.angle_drift,
        bulge: args.bulge,
        perturbation: args.perturbation,
    };
    let phantom = generate_phantom(&spec)?;
    std::fs::create_dir_all(&args.out_dir).map_err(gausslabel::Error::from)?;
    write_mask_stack(&phantom.strong, &args.out_dir.join("strong"))?;
    write_f32v(&phantom.pseudo, &args.out_dir.join("pseudo.f32v"))?;
    write_ellipse_csv(&phantom.records, &args.out_dir.join("ellipses.csv"))?;
    Ok(())
}

fn configure_threads() -> Outcome {
    let Ok(value) = std::env::var("GPL_THREADS") else {
        return Ok(());
    };
    let threads: usize = match value.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => {
            return Err(Failure::Usage(format!(
                "GPL_THREADS must be a positive integer, got {value:?}"
            )))
        }
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot configure {threads} threads: {e}")))
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    match cli.command {
        Command::Fit { mask_dir, out_csv } => run_fit(&mask_dir, &out_csv),
        Command::Heatmap {
            in_csv,
            depth,
            n,
            out_f32v,
        } => run_heatmap(&in_csv, depth, n, &out_f32v),
        Command::Pseudo {
            mask_dir,
            out_f32v,
            csv,
        } => run_pseudo(&mask_dir, &out_f32v, csv.as_deref()),
        Command::Threshold { in_f32v, t, out_dir } => run_threshold(&in_f32v, t, &out_dir),
        Command::Eval {
            pred_dir,
            gt_dir,
            out_json,
            spacing,
        } => run_eval(&pred_dir, &gt_dir, &out_json, spacing),
        Command::Loss {
            pred_f32v,
            target_f32v,
            dist,
            w1,
            w2,
        } => run_loss(&pred_f32v, &target_f32v, dist, w1, w2),
        Command::Gradcheck { seed } => run_gradcheck(seed),
        Command::Variability { dir_a, dir_b, out_json } => run_variability(&dir_a, &dir_b, &out_json),
        Command::Phantom(args) => run_phantom(&args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gpl: {e}");
            ExitCode::from(e.code())
        }
    }
}
