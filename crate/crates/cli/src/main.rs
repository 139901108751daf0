//! `lppad`: padding, padding-error curves, fitting cross-checks and tiling
//! demos from the command line.
//!
//! Exit status is 0 on success, 1 on I/O or numeric failure and 2 on usage
//! errors. Diagnostics go to standard error; data goes to files or standard
//! output. `LP_PAD_THREADS` caps the worker thread count.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use lppad::autocorr::{
    autocorrelation_direct, autocorrelation_fft, covariance_from_autocorrelation, prepare_windowed,
};
use lppad::covariance::{covariance_statistics, solve_general, solve_p1, solve_p2};
use lppad::geometry::valid_region;
use lppad::pad::{pad_with, PadAmounts, PadConfig, PaddingMethod};
use lppad::theory::{log_sigma_grid, nmse_curves, nmse_curves_with_mc, write_nmse_csv, TheoryMethod};
use lppad::tiling::{deviation_against_valid, padding_shell_report, stitch_tiles, ConvPipeline};
use lppad::{
    read_raster, write_raster, ArModel, Direction, ExtendedNeighborhood, Plane, Raster, RasterFormat,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Worst relative error tolerated by `xcorr-check`.
const XCORR_TOLERANCE: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "lppad", version, about = "Linear prediction padding for rasters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pad a raster and print the fitted coefficients.
    Pad(PadArgs),
    /// Write padding NMSE curves for blurred white noise as CSV.
    NmseCurve(NmseArgs),
    /// Cross-check FFT against direct autocorrelation and closed-form
    /// against Cholesky solves on a seeded random plane.
    XcorrCheck(XcorrArgs),
    /// Stitch tiled pipeline outputs and compare them with a valid-only run.
    TilingDemo(TilingArgs),
    /// Time every padding method on a synthetic raster.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Pgm,
    Ppm,
    Raw,
}

impl From<FormatArg> for RasterFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Pgm => RasterFormat::Pgm,
            FormatArg::Ppm => RasterFormat::Ppm,
            FormatArg::Raw => RasterFormat::RawF64,
        }
    }
}

fn parse_method(s: &str) -> Result<PaddingMethod, String> {
    s.parse()
        .map_err(|e| format!("{e}; supported methods: {}", PaddingMethod::supported_names()))
}

#[derive(Args)]
struct PadArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_parser = parse_method)]
    method: PaddingMethod,
    /// Pixels on every side; per-side flags override it.
    #[arg(long)]
    all: Option<usize>,
    #[arg(long)]
    top: Option<usize>,
    #[arg(long)]
    bottom: Option<usize>,
    #[arg(long)]
    left: Option<usize>,
    #[arg(long)]
    right: Option<usize>,
    /// Output format; defaults to the output extension (.pgm, .ppm, else raw).
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct NmseArgs {
    #[arg(long, default_value_t = 0.25)]
    sigma_min: f64,
    #[arg(long, default_value_t = 8.0)]
    sigma_max: f64,
    #[arg(long, default_value_t = 24)]
    points: usize,
    /// Comma-separated methods: zero, repl, extrN, lpN (lp1x1cs, lp2x1, lp3x1, ...).
    #[arg(long, value_delimiter = ',', value_parser = parse_theory_method)]
    methods: Option<Vec<TheoryMethod>>,
    /// Monte-Carlo trials per grid point; 0 disables the estimate columns.
    #[arg(long, default_value_t = 0)]
    mc_trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_theory_method(s: &str) -> Result<TheoryMethod, String> {
    s.parse().map_err(|e: lppad::Error| e.to_string())
}

#[derive(Args)]
struct XcorrArgs {
    #[arg(long, default_value_t = 48, value_parser = clap::value_parser!(u32).range(8..=4096))]
    size: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TilingArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_method, default_value = "zero")]
    method: PaddingMethod,
    #[arg(long, default_value_t = 16)]
    tile: usize,
    /// Output rings removed from every tile.
    #[arg(long, default_value_t = 0)]
    crop: usize,
    #[arg(long)]
    out_prefix: PathBuf,
    #[arg(long, default_value_t = 1)]
    shell_thickness: usize,
    /// Lump everything inside this many shells into the last one.
    #[arg(long)]
    shells: Option<usize>,
    /// Raster format for the stitched output and deviation map.
    #[arg(long, value_enum, default_value = "raw")]
    format: FormatArg,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 48)]
    size: usize,
    #[arg(long, default_value_t = 3)]
    channels: usize,
    #[arg(long, default_value_t = 24)]
    pad: usize,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Pad(a) => cmd_pad(a),
        Command::NmseCurve(a) => cmd_nmse_curve(a),
        Command::XcorrCheck(a) => cmd_xcorr_check(a),
        Command::TilingDemo(a) => cmd_tiling_demo(a),
        Command::Bench(a) => cmd_bench(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("LP_PAD_THREADS") else {
        return Ok(());
    };
    let threads = match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => n,
        _ => return Err(usage(format!("LP_PAD_THREADS must be a positive integer, got `{value}`"))),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}

fn output_format(path: &Path, explicit: Option<FormatArg>) -> RasterFormat {
    explicit.map_or_else(|| RasterFormat::from_path(path), Into::into)
}

fn load(path: &Path) -> anyhow::Result<Raster> {
    read_raster(path).with_context(|| format!("reading {}", path.display()))
}

fn save(raster: &Raster, path: &Path, format: RasterFormat) -> anyhow::Result<()> {
    write_raster(raster, path, format).with_context(|| format!("writing {}", path.display()))
}

fn cmd_pad(a: PadArgs) -> Result<(), Failure> {
    let base = a.all.unwrap_or(0);
    let amounts = PadAmounts {
        top: a.top.unwrap_or(base),
        bottom: a.bottom.unwrap_or(base),
        left: a.left.unwrap_or(base),
        right: a.right.unwrap_or(base),
    };
    if a.all.is_none() && [a.top, a.bottom, a.left, a.right].iter().all(Option::is_none) {
        return Err(usage("give --all or at least one of --top/--bottom/--left/--right"));
    }
    let input = load(&a.input)?;
    let out = pad_with(&input, a.method, amounts, PadConfig::default()).context("padding")?;
    save(&out.raster, &a.output, output_format(&a.output, a.format))?;

    quiet_pipe(write_coefficients(&out.models, io::stdout().lock())).context("writing coefficients")?;
    Ok(())
}

/// A closed standard output (`| head`) is not an error.
fn quiet_pipe(r: io::Result<()>) -> io::Result<()> {
    match r {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => other,
    }
}

/// `channel,direction,i,a_i` rows for every fitted predictor.
fn write_coefficients(models: &[Vec<(Direction, ArModel)>], out: impl Write) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "channel,direction,i,a_i")?;
    for (c, per_channel) in models.iter().enumerate() {
        for (dir, model) in per_channel {
            for (i, coef) in model.coefficients.iter().enumerate() {
                writeln!(w, "{c},{dir},{},{coef:.16e}", i + 1)?;
            }
        }
    }
    w.flush()
}

fn cmd_nmse_curve(a: NmseArgs) -> Result<(), Failure> {
    let grid = log_sigma_grid(a.sigma_min, a.sigma_max, a.points).map_err(|e| usage(e.to_string()))?;
    if a.mc_trials > 0 && a.mc_trials < 100 {
        return Err(usage("--mc-trials must be 0 or at least 100"));
    }
    let methods = a.methods.unwrap_or_else(|| TheoryMethod::DEFAULT_SET.to_vec());
    let curves = if a.mc_trials > 0 {
        nmse_curves_with_mc(&grid, &methods, a.mc_trials, a.seed)
    } else {
        nmse_curves(&grid, &methods)
    }
    .context("evaluating curves")?;
    match &a.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            write_nmse_csv(&curves, &mut w)
                .and_then(|()| w.flush())
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => quiet_pipe(write_nmse_csv(&curves, io::stdout().lock())).context("writing CSV")?,
    }
    Ok(())
}

fn seeded_plane(size: usize, seed: u64) -> Plane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Plane::from_fn(size, size, |_, _| rng.random_range(-1.0..1.0))
}

fn cmd_xcorr_check(a: XcorrArgs) -> Result<(), Failure> {
    let size = a.size as usize;
    let plane = seeded_plane(size, a.seed);
    let mean = plane.mean();
    let plane = plane.map(|v| v - mean);
    let windowed = prepare_windowed(&plane);
    let spectrum = autocorrelation_fft(&windowed);
    let (mut fft_err, mut solve_err) = (0.0f64, 0.0f64);
    let shapes = PaddingMethod::ALL.iter().filter_map(|m| match *m {
        PaddingMethod::Lp { height, width, .. } => Some((height, width)),
        _ => None,
    });
    for (h, w) in shapes {
        for dir in Direction::ALL {
            let nbhd = ExtendedNeighborhood::canonical(h, w).context("neighborhood")?.rotate(dir);
            let direct = autocorrelation_direct(&windowed, &nbhd.lags());
            let r0 = direct.get((0, 0)).unwrap_or(0.0);
            for lag in nbhd.lags() {
                let (d, f) = (direct.get(lag).unwrap_or(f64::NAN), spectrum.get(lag).unwrap_or(f64::NAN));
                fft_err = fft_err.max(relative(d - f, r0));
            }
            if nbhd.order() > 2 {
                continue;
            }
            let stats = [
                covariance_from_autocorrelation(&direct, &nbhd).context("autocorrelation statistics")?,
                covariance_statistics(&plane, &nbhd, &valid_region(&nbhd, size, size))
                    .context("covariance statistics")?,
            ];
            for r in &stats {
                let closed = if nbhd.order() == 1 { solve_p1(r) } else { solve_p2(r) };
                let chol = solve_general(r, 0.0).context("Cholesky solve")?;
                for (c, s) in closed.iter().zip(&chol) {
                    solve_err = solve_err.max(relative(c - s, s.abs().max(1.0)));
                }
            }
        }
    }
    println!("check,max_rel_error");
    println!("fft_vs_direct,{fft_err:.3e}");
    println!("closed_form_vs_cholesky,{solve_err:.3e}");
    if fft_err > XCORR_TOLERANCE || solve_err > XCORR_TOLERANCE {
        return Err(Failure::Runtime(anyhow::anyhow!(
            "cross-check error exceeds {XCORR_TOLERANCE:e}"
        )));
    }
    Ok(())
}

/// `|diff| / scale`, treating NaN as an infinite error.
fn relative(diff: f64, scale: f64) -> f64 {
    let r = diff.abs() / scale.abs();
    if r.is_nan() {
        f64::INFINITY
    } else {
        r
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn extension(format: RasterFormat) -> &'static str {
    match format {
        RasterFormat::Pgm => "pgm",
        RasterFormat::Ppm => "ppm",
        RasterFormat::RawF64 => "raw",
    }
}

fn cmd_tiling_demo(a: TilingArgs) -> Result<(), Failure> {
    let input = load(&a.input)?;
    let pipeline = ConvPipeline::default_fixture();
    let margin = a.crop + pipeline.valid_shrink();
    if a.tile <= 2 * margin {
        return Err(usage(format!("--tile must exceed twice --crop ({})", 2 * margin)));
    }
    if a.shell_thickness == 0 || a.shells == Some(0) {
        return Err(usage("--shell-thickness and --shells must be positive"));
    }
    let stitched = stitch_tiles(&input, &pipeline, a.method, a.tile, a.crop).context("stitching tiles")?;
    let deviation = deviation_against_valid(&input, &pipeline, &stitched, margin).context("deviation map")?;
    let shells = padding_shell_report(&input, &pipeline, a.method, a.crop, a.shell_thickness, a.shells)
        .context("shell report")?;

    let format: RasterFormat = a.format.into();
    let ext = extension(format);
    save(&stitched, &with_suffix(&a.out_prefix, &format!("_stitched.{ext}")), format)?;
    save(&deviation.map, &with_suffix(&a.out_prefix, &format!("_deviation.{ext}")), format)?;
    let csv = with_suffix(&a.out_prefix, "_shells.csv");
    let file = File::create(&csv).with_context(|| format!("creating {}", csv.display()))?;
    let mut w = BufWriter::new(file);
    shells
        .write_csv(&mut w)
        .and_then(|()| w.flush())
        .with_context(|| format!("writing {}", csv.display()))?;
    println!("max_deviation,{:.16e}", deviation.max());
    println!("mean_deviation,{:.16e}", deviation.mean());
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    if a.size == 0 || a.channels == 0 || a.repeats == 0 {
        return Err(usage("--size, --channels and --repeats must be positive"));
    }
    let input = Raster::from_fn(a.size, a.size, a.channels, |y, x, c| {
        (0.13 * y as f64 + 0.07 * x as f64 + c as f64).sin()
    })
    .context("building input")?;
    println!("method,seconds_per_call");
    for m in PaddingMethod::ALL {
        let start = Instant::now();
        for _ in 0..a.repeats {
            pad_with(&input, m, PadAmounts::uniform(a.pad), PadConfig::default())
                .with_context(|| format!("padding with {m}"))?;
        }
        println!("{m},{:.6e}", start.elapsed().as_secs_f64() / a.repeats as f64);
    }
    Ok(())
}
