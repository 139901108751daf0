//! Neighborhood shapes, padding directions and the fitting region.
//!
//! Offsets are `(dy, dx)` pairs. A canonical neighborhood is downward
//! causal: the predicted pixel `h0` sits directly below a `height x width`
//! rectangle of predictors, horizontally centered. Predictors are listed
//! row-major, top to bottom and left to right.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type Offset = (isize, isize);

/// Padding direction: the side of the raster that grows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Down,
    Up,
    Right,
    Left,
}

impl Direction {
    /// Pass order used by the pad engine.
    pub const ALL: [Direction; 4] = [
        Direction::Down,
        Direction::Up,
        Direction::Right,
        Direction::Left,
    ];

    /// Maps a canonical (downward) offset to this direction.
    #[inline]
    pub fn rotate_offset(self, (dy, dx): Offset) -> Offset {
        match self {
            Direction::Down => (dy, dx),
            Direction::Right => (-dx, dy),
            Direction::Up => (-dy, -dx),
            Direction::Left => (dx, -dy),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Down => "down",
            Direction::Up => "up",
            Direction::Right => "right",
            Direction::Left => "left",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "down" => Ok(Direction::Down),
            "up" => Ok(Direction::Up),
            "right" => Ok(Direction::Right),
            "left" => Ok(Direction::Left),
            _ => Err(Error::InvalidArgument(format!("unknown direction `{s}`"))),
        }
    }
}

/// Offset list `[h0, h1, .., hP]`: the predicted pixel followed by its
/// predictors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtendedNeighborhood {
    offsets: Vec<Offset>,
}

impl ExtendedNeighborhood {
    /// Builds a neighborhood from explicit offsets. Offsets must be pairwise
    /// distinct.
    pub fn from_offsets(offsets: Vec<Offset>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::InvalidNeighborhood("no offsets".into()));
        }
        for (i, a) in offsets.iter().enumerate() {
            if offsets[..i].contains(a) {
                return Err(Error::InvalidNeighborhood(format!(
                    "duplicate offset {a:?}"
                )));
            }
        }
        Ok(Self { offsets })
    }

    /// The downward-causal `height x width` rectangle with the predicted
    /// pixel centered below it. Width must be odd.
    pub fn canonical(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidNeighborhood(format!(
                "{height}x{width} has no predictors"
            )));
        }
        if width.is_multiple_of(2) {
            return Err(Error::InvalidNeighborhood(format!(
                "width {width} is even; the predicted pixel cannot be centered"
            )));
        }
        let half = (width / 2) as isize;
        let mut offsets = Vec::with_capacity(height * width + 1);
        offsets.push((height as isize, 0));
        for r in 0..height as isize {
            for c in -half..=half {
                offsets.push((r, c));
            }
        }
        Ok(Self { offsets })
    }

    pub fn offsets(&self) -> &[Offset] {
        &self.offsets
    }

    /// The predicted pixel offset `h0`.
    pub fn target(&self) -> Offset {
        self.offsets[0]
    }

    pub fn predictors(&self) -> &[Offset] {
        &self.offsets[1..]
    }

    /// Number of predictors `P`.
    pub fn order(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Rotates a canonical neighborhood so that it pads in `dir`.
    pub fn rotate(&self, dir: Direction) -> Self {
        Self {
            offsets: self.offsets.iter().map(|&o| dir.rotate_offset(o)).collect(),
        }
    }

    /// Moves the predicted pixel laterally by `shift` while keeping the
    /// predictor rectangle in place. Used near the ends of a padding front so
    /// the rectangle stays inside the known data.
    pub fn corner_variant(&self, shift: isize) -> Result<Self> {
        let (min_dx, max_dx) = self.lateral_span();
        let (ty, tx) = self.target();
        let moved = tx + shift;
        if moved < min_dx || moved > max_dx {
            return Err(Error::InvalidNeighborhood(format!(
                "lateral shift {shift} detaches the predicted pixel from the rectangle \
                 spanning columns {min_dx}..={max_dx}"
            )));
        }
        let mut offsets = self.offsets.clone();
        offsets[0] = (ty, moved);
        Ok(Self { offsets })
    }

    /// Inclusive column range covered by the predictors.
    pub fn lateral_span(&self) -> (isize, isize) {
        let cols = self.predictors().iter().map(|&(_, dx)| dx);
        let min = cols.clone().min().unwrap_or(0);
        let max = cols.max().unwrap_or(0);
        (min, max)
    }

    /// Inclusive `(min_dy, max_dy, min_dx, max_dx)` over all offsets.
    pub fn bounding_box(&self) -> (isize, isize, isize, isize) {
        let ys = self.offsets.iter().map(|o| o.0);
        let xs = self.offsets.iter().map(|o| o.1);
        (
            ys.clone().min().unwrap(),
            ys.max().unwrap(),
            xs.clone().min().unwrap(),
            xs.max().unwrap(),
        )
    }

    /// All differences `h_i - h_j`.
    pub fn lags(&self) -> Vec<Offset> {
        let mut lags: Vec<Offset> = self
            .offsets
            .iter()
            .flat_map(|a| self.offsets.iter().map(move |b| (a.0 - b.0, a.1 - b.1)))
            .collect();
        lags.sort_unstable();
        lags.dedup();
        lags
    }
}

/// Rectangle of origins `(y, x)` for which every `(y, x) + h_i` is inside
/// the raster. Half-open ranges; empty when the raster is too small.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ValidRegion {
    pub y0: isize,
    pub y1: isize,
    pub x0: isize,
    pub x1: isize,
}

impl ValidRegion {
    pub fn rows(&self) -> usize {
        (self.y1 - self.y0).max(0) as usize
    }

    pub fn cols(&self) -> usize {
        (self.x1 - self.x0).max(0) as usize
    }

    pub fn len(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, y: isize, x: isize) -> bool {
        (self.y0..self.y1).contains(&y) && (self.x0..self.x1).contains(&x)
    }

    pub fn iter(&self) -> impl Iterator<Item = (isize, isize)> + '_ {
        let cols = self.x0..self.x1;
        (self.y0..self.y1).flat_map(move |y| cols.clone().map(move |x| (y, x)))
    }
}

/// The maximal origin rectangle keeping all accesses of `nbhd` inside an
/// `height x width` raster.
pub fn valid_region(nbhd: &ExtendedNeighborhood, height: usize, width: usize) -> ValidRegion {
    let (min_dy, max_dy, min_dx, max_dx) = nbhd.bounding_box();
    let y0 = -min_dy;
    let x0 = -min_dx;
    let y1 = (height as isize - max_dy).max(y0);
    let x1 = (width as isize - max_dx).max(x0);
    ValidRegion { y0, y1, x0, x1 }
}
