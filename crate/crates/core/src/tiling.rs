//! Downstream effects of padding, measured with a linear convolution
//! pipeline.
//!
//! Every stage is a depthwise `k x k` correlation applied to each channel
//! with the same kernel. A padded stage pads its input by `k / 2` on every
//! side with the configured method, so it keeps the spatial size; a valid
//! stage shrinks it. Because the pipeline is linear and local, pixels farther
//! than the receptive radius from any padded border are computed with exactly
//! the arithmetic of an all-valid pipeline.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pad::{pad, PadAmounts, PaddingMethod};
use crate::raster::{Plane, Raster};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StagePadding {
    /// Pad with the method passed to [`run_pipeline`].
    Method,
    Valid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvStage {
    size: usize,
    weights: Vec<f64>,
    pub padding: StagePadding,
}

impl ConvStage {
    /// Row-major `size x size` kernel. `size` must be odd.
    pub fn new(size: usize, weights: Vec<f64>, padding: StagePadding) -> Result<Self> {
        if size.is_multiple_of(2) || weights.len() != size * size {
            return Err(Error::InvalidArgument(format!(
                "kernel must be odd-sized and square, got size {size} with {} weights",
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            size,
            weights,
            padding,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvPipeline {
    pub stages: Vec<ConvStage>,
}

impl ConvPipeline {
    pub fn new(stages: Vec<ConvStage>) -> Self {
        Self { stages }
    }

    /// `count` padded stages of `size x size` kernels with seeded random
    /// weights normalized to unit sum.
    pub fn seeded(count: usize, size: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stages = (0..count)
            .map(|_| {
                let mut w: Vec<f64> = (0..size * size).map(|_| rng.random_range(0.05..1.0)).collect();
                let sum: f64 = w.iter().sum();
                w.iter_mut().for_each(|v| *v /= sum);
                ConvStage::new(size, w, StagePadding::Method)
            })
            .collect::<Result<_>>()?;
        Ok(Self { stages })
    }

    /// The standard three-stage `3 x 3` fixture.
    pub fn default_fixture() -> Self {
        Self::seeded(3, 3, 0x7111_4e55).expect("valid fixture")
    }

    /// Sum of stage radii.
    pub fn receptive_radius(&self) -> usize {
        self.stages.iter().map(ConvStage::radius).sum()
    }

    /// Shrink per side already built into the nominal pipeline.
    pub fn valid_shrink(&self) -> usize {
        self.stages
            .iter()
            .filter(|s| s.padding == StagePadding::Valid)
            .map(ConvStage::radius)
            .sum()
    }

    pub fn all_valid(&self) -> Self {
        Self {
            stages: self
                .stages
                .iter()
                .map(|s| ConvStage {
                    padding: StagePadding::Valid,
                    ..s.clone()
                })
                .collect(),
        }
    }
}

fn correlate_valid(plane: &Plane, stage: &ConvStage) -> Result<Plane> {
    let k = stage.size;
    let (h, w) = (plane.height(), plane.width());
    if h < k || w < k {
        return Err(Error::Geometry(format!(
            "{h}x{w} feature map is smaller than a {k}x{k} kernel"
        )));
    }
    let data = plane.data();
    let weights = stage.weights();
    Ok(Plane::from_fn(h + 1 - k, w + 1 - k, |y, x| {
        let mut acc = 0.0;
        for i in 0..k {
            let row = &data[(y + i) * w + x..][..k];
            for (wt, v) in weights[i * k..(i + 1) * k].iter().zip(row) {
                acc += wt * v;
            }
        }
        acc
    }))
}

fn apply_stage(input: &Raster, stage: &ConvStage, padding: StagePadding, method: PaddingMethod) -> Result<Raster> {
    let padded;
    let source = match padding {
        StagePadding::Method if stage.radius() > 0 => {
            padded = pad(input, method, PadAmounts::uniform(stage.radius()))?;
            &padded
        }
        _ => input,
    };
    let planes = source
        .planes()
        .iter()
        .map(|p| correlate_valid(p, stage))
        .collect::<Result<Vec<_>>>()?;
    Raster::from_planes(&planes)
}

/// Runs the pipeline and removes `crop` border rings from its nominal
/// output. The crop is realized by running the last padded stages as valid
/// stages while their radii fit in the crop, then center-cropping the rest.
pub fn run_pipeline(input: &Raster, pipeline: &ConvPipeline, method: PaddingMethod, crop: usize) -> Result<Raster> {
    let nominal = |n: usize| n.checked_sub(2 * pipeline.valid_shrink());
    let (nh, nw) = match (nominal(input.height()), nominal(input.width())) {
        (Some(h), Some(w)) if h > 2 * crop && w > 2 * crop => (h, w),
        _ => {
            return Err(Error::Geometry(format!(
                "{}x{} input leaves no output after cropping {crop} rings",
                input.height(),
                input.width()
            )))
        }
    };
    let mut policy: Vec<StagePadding> = pipeline.stages.iter().map(|s| s.padding).collect();
    let mut remaining = crop;
    for (stage, p) in pipeline.stages.iter().zip(policy.iter_mut()).rev() {
        if *p == StagePadding::Valid {
            continue;
        }
        if stage.radius() > remaining {
            break;
        }
        *p = StagePadding::Valid;
        remaining -= stage.radius();
    }
    let mut x = input.clone();
    for (stage, &p) in pipeline.stages.iter().zip(&policy) {
        x = apply_stage(&x, stage, p, method)?;
    }
    let out = x.crop(remaining, remaining, x.height() - 2 * remaining, x.width() - 2 * remaining)?;
    debug_assert_eq!((out.height(), out.width()), (nh - 2 * crop, nw - 2 * crop));
    Ok(out)
}

/// One stitched block along an axis: output positions `start..end` in input
/// coordinates, produced by the tile starting at `origin`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TileBlock {
    pub start: usize,
    pub end: usize,
    pub origin: usize,
}

/// Splits `margin..len - margin` into blocks whose tiles of length `tile`
/// each lose `margin` pixels per side. The first interior seam sits at
/// `margin + offset`; later seams follow every `tile - 2 margin` pixels. The
/// last tile is pulled back inside the input when it would overhang.
pub fn tile_blocks(len: usize, tile: usize, margin: usize, offset: usize) -> Result<Vec<TileBlock>> {
    let tile = tile.min(len);
    let step = tile
        .checked_sub(2 * margin)
        .filter(|&s| s > 0)
        .ok_or_else(|| {
            Error::Geometry(format!(
                "tile {tile} must exceed twice the margin {margin} (input length {len})"
            ))
        })?;
    let end = len - margin;
    let mut cuts = vec![margin];
    let mut next = margin + offset % step;
    if next == margin {
        next += step;
    }
    while next < end {
        cuts.push(next);
        next += step;
    }
    cuts.push(end);
    Ok(cuts
        .windows(2)
        .map(|c| TileBlock {
            start: c[0],
            end: c[1],
            origin: (c[0] - margin).min(len - tile),
        })
        .collect())
}

/// Runs the pipeline on overlapping tiles and abuts their cropped outputs.
/// The result covers input positions `m..H - m` with
/// `m = crop + pipeline.valid_shrink()`.
pub fn stitch_tiles(
    input: &Raster,
    pipeline: &ConvPipeline,
    method: PaddingMethod,
    tile: usize,
    crop: usize,
) -> Result<Raster> {
    stitch_tiles_with_offset(input, pipeline, method, tile, crop, (0, 0))
}

pub fn stitch_tiles_with_offset(
    input: &Raster,
    pipeline: &ConvPipeline,
    method: PaddingMethod,
    tile: usize,
    crop: usize,
    offset: (usize, usize),
) -> Result<Raster> {
    let margin = crop + pipeline.valid_shrink();
    let (h, w, c) = (input.height(), input.width(), input.channels());
    if h <= 2 * margin || w <= 2 * margin {
        return Err(Error::Geometry(format!(
            "{h}x{w} input is too small for a margin of {margin}"
        )));
    }
    let rows = tile_blocks(h, tile, margin, offset.0)?;
    let cols = tile_blocks(w, tile, margin, offset.1)?;
    let (th, tw) = (tile.min(h), tile.min(w));
    let jobs: Vec<(TileBlock, TileBlock)> = rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&col| (r, col)))
        .collect();
    let outputs = jobs
        .par_iter()
        .map(|(r, col)| {
            let part = input.crop(r.origin, col.origin, th, tw)?;
            run_pipeline(&part, pipeline, method, crop)
        })
        .collect::<Result<Vec<_>>>()?;
    let (oh, ow) = (h - 2 * margin, w - 2 * margin);
    let mut samples = vec![0.0; oh * ow * c];
    for ((r, col), out) in jobs.iter().zip(&outputs) {
        for y in r.start..r.end {
            for x in col.start..col.end {
                // Tile output pixel (0, 0) sits at input (origin + margin).
                let (ty, tx) = (y - r.origin - margin, x - col.origin - margin);
                for ch in 0..c {
                    samples[((y - margin) * ow + (x - margin)) * c + ch] = out.get(ty, tx, ch);
                }
            }
        }
    }
    Raster::new(oh, ow, c, samples)
}

/// Deviation map with its placement in input coordinates.
#[derive(Clone, Debug)]
pub struct DeviationMap {
    pub map: Raster,
    /// Input coordinate of the map's first row and column.
    pub origin: usize,
}

impl DeviationMap {
    pub fn max(&self) -> f64 {
        self.map.samples().iter().copied().fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        let s = self.map.samples();
        s.iter().sum::<f64>() / s.len() as f64
    }
}

/// `|stitched - valid|` where the all-valid reference exists.
pub fn equivariance_deviation(
    input: &Raster,
    pipeline: &ConvPipeline,
    method: PaddingMethod,
    tile: usize,
    crop: usize,
) -> Result<DeviationMap> {
    let stitched = stitch_tiles(input, pipeline, method, tile, crop)?;
    deviation_against_valid(input, pipeline, &stitched, crop + pipeline.valid_shrink())
}

/// Compares an already stitched output (covering `margin..H - margin`) with
/// the all-valid pipeline output.
pub fn deviation_against_valid(
    input: &Raster,
    pipeline: &ConvPipeline,
    stitched: &Raster,
    margin: usize,
) -> Result<DeviationMap> {
    let radius = pipeline.receptive_radius();
    let reference = run_pipeline(input, &pipeline.all_valid(), PaddingMethod::Zero, 0)?;
    let origin = margin.max(radius);
    let (h, w) = (input.height(), input.width());
    if h <= 2 * origin || w <= 2 * origin {
        return Err(Error::Geometry(format!(
            "{h}x{w} input has no pixels beyond {origin} from the border"
        )));
    }
    let (oh, ow) = (h - 2 * origin, w - 2 * origin);
    let map = Raster::from_fn(oh, ow, input.channels(), |y, x, c| {
        let s = stitched.get(y + origin - margin, x + origin - margin, c);
        let r = reference.get(y + origin - radius, x + origin - radius, c);
        (s - r).abs()
    })?;
    Ok(DeviationMap { map, origin })
}

/// Shell MSE of padding against true context. The input's central part,
/// shrunk by the receptive radius, is run through the pipeline with
/// `method`; the target is the all-valid output of the full input, which sees
/// real pixels where the padded run sees padding.
pub fn padding_shell_report(
    input: &Raster,
    pipeline: &ConvPipeline,
    method: PaddingMethod,
    crop: usize,
    thickness: usize,
    max_shells: Option<usize>,
) -> Result<ShellReport> {
    let radius = pipeline.receptive_radius();
    let (h, w) = (input.height(), input.width());
    if h <= 2 * radius || w <= 2 * radius {
        return Err(Error::Geometry(format!(
            "{h}x{w} input leaves nothing inside the receptive radius {radius}"
        )));
    }
    let inner = input.crop(radius, radius, h - 2 * radius, w - 2 * radius)?;
    let padded = run_pipeline(&inner, pipeline, method, crop)?;
    let reference = run_pipeline(input, &pipeline.all_valid(), PaddingMethod::Zero, 0)?;
    let skip = crop + pipeline.valid_shrink();
    let target = reference.crop(skip, skip, padded.height(), padded.width())?;
    shell_mse_capped(&padded, &target, thickness, max_shells)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shell {
    pub pixel_count: usize,
    pub mse: f64,
}

/// Per-ring MSE, index 0 outermost.
#[derive(Clone, Debug, PartialEq)]
pub struct ShellReport {
    pub thickness: usize,
    pub shells: Vec<Shell>,
}

impl ShellReport {
    /// Pixel-count-weighted mean of the shell MSEs.
    pub fn total_mse(&self) -> f64 {
        let n: usize = self.shells.iter().map(|s| s.pixel_count).sum();
        self.shells.iter().map(|s| s.mse * s.pixel_count as f64).sum::<f64>() / n as f64
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "shell_index,pixel_count,mse")?;
        for (i, s) in self.shells.iter().enumerate() {
            writeln!(out, "{i},{},{:.16e}", s.pixel_count, s.mse)?;
        }
        Ok(())
    }
}

pub fn shell_mse(output: &Raster, target: &Raster, thickness: usize) -> Result<ShellReport> {
    shell_mse_capped(output, target, thickness, None)
}

/// Shell MSE with at most `max_shells` shells; everything inside the last
/// one is lumped into it.
pub fn shell_mse_capped(
    output: &Raster,
    target: &Raster,
    thickness: usize,
    max_shells: Option<usize>,
) -> Result<ShellReport> {
    let (h, w, c) = (output.height(), output.width(), output.channels());
    if (target.height(), target.width(), target.channels()) != (h, w, c) {
        return Err(Error::DimensionMismatch(format!(
            "{h}x{w}x{c} output vs {}x{}x{} target",
            target.height(),
            target.width(),
            target.channels()
        )));
    }
    if thickness == 0 || max_shells == Some(0) {
        return Err(Error::InvalidArgument("shell thickness and count must be positive".into()));
    }
    let natural = (h.min(w) - 1) / 2 / thickness + 1;
    let count = max_shells.map_or(natural, |m| m.min(natural));
    let mut sums = vec![0.0; count];
    let mut pixels = vec![0usize; count];
    for y in 0..h {
        for x in 0..w {
            let ring = y.min(x).min(h - 1 - y).min(w - 1 - x);
            let idx = (ring / thickness).min(count - 1);
            pixels[idx] += 1;
            for ch in 0..c {
                let d = output.get(y, x, ch) - target.get(y, x, ch);
                sums[idx] += d * d;
            }
        }
    }
    let shells = sums
        .iter()
        .zip(&pixels)
        .map(|(&s, &n)| Shell {
            pixel_count: n,
            mse: s / (n * c) as f64,
        })
        .collect();
    Ok(ShellReport { thickness, shells })
}
