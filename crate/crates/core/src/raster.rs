//! Multi-channel rasters and single-channel planes.
//!
//! A [`Raster`] stores samples interleaved in row-major `(y, x, c)` order.
//! Padding and fitting work on one channel at a time, so most algorithms take
//! a [`Plane`].

use crate::error::{Error, Result};

/// An `height x width x channels` grid of real samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    height: usize,
    width: usize,
    channels: usize,
    samples: Vec<f64>,
}

impl Raster {
    /// Builds a raster from interleaved samples. Samples must be finite.
    pub fn new(height: usize, width: usize, channels: usize, samples: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::InvalidDimensions {
                height,
                width,
                channels,
            });
        }
        let expected = height * width * channels;
        if samples.len() != expected {
            return Err(Error::SampleCount {
                expected,
                actual: samples.len(),
            });
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            height,
            width,
            channels,
            samples,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::new(height, width, channels, vec![0.0; height * width * channels])
    }

    /// Builds a raster by evaluating `f(y, x, c)` at every sample.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut samples = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    samples.push(f(y, x, c));
                }
            }
        }
        Self::new(height, width, channels, samples)
    }

    /// Interleaves single-channel planes of equal size.
    pub fn from_planes(planes: &[Plane]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::InvalidArgument("no planes given".into()))?;
        let (height, width) = (first.height(), first.width());
        if planes
            .iter()
            .any(|p| p.height() != height || p.width() != width)
        {
            return Err(Error::DimensionMismatch(
                "planes differ in size".to_string(),
            ));
        }
        Self::from_fn(height, width, planes.len(), |y, x, c| planes[c].get(y, x))
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.samples[(y * self.width + x) * self.channels + c]
    }

    /// Copies out one channel.
    pub fn plane(&self, c: usize) -> Plane {
        assert!(c < self.channels, "channel {c} out of range");
        let data = self
            .samples
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect();
        Plane {
            height: self.height,
            width: self.width,
            data,
        }
    }

    pub fn planes(&self) -> Vec<Plane> {
        (0..self.channels).map(|c| self.plane(c)).collect()
    }

    /// Copies the `h x w` block whose top-left corner is at `(y0, x0)`.
    pub fn crop(&self, y0: usize, x0: usize, h: usize, w: usize) -> Result<Self> {
        if y0 + h > self.height || x0 + w > self.width {
            return Err(Error::Geometry(format!(
                "crop {h}x{w} at ({y0}, {x0}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        Self::from_fn(h, w, self.channels, |y, x, c| self.get(y0 + y, x0 + x, c))
    }
}

/// A single channel: `height x width` samples in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimensions {
                height,
                width,
                channels: 1,
            });
        }
        if data.len() != height * width {
            return Err(Error::SampleCount {
                expected: height * width,
                actual: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Signed-coordinate access; `None` outside the plane.
    #[inline]
    pub fn get_signed(&self, y: isize, x: isize) -> Option<f64> {
        if y < 0 || x < 0 || y as usize >= self.height || x as usize >= self.width {
            None
        } else {
            Some(self.get(y as usize, x as usize))
        }
    }

    /// Arithmetic mean, computed relative to the first sample so that a
    /// constant plane yields its value exactly.
    pub fn mean(&self) -> f64 {
        let pivot = self.data[0];
        let offset: f64 = self.data.iter().map(|v| v - pivot).sum();
        pivot + offset / self.data.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn crop(&self, y0: usize, x0: usize, h: usize, w: usize) -> Self {
        assert!(y0 + h <= self.height && x0 + w <= self.width);
        Self::from_fn(h, w, |y, x| self.get(y0 + y, x0 + x))
    }

    /// Rotates by a quarter turn: the result's row `u` is this plane's column
    /// `u`, read bottom to top.
    pub(crate) fn quarter_turn(&self) -> Self {
        let (h, w) = (self.height, self.width);
        Self::from_fn(w, h, |u, v| self.get(h - 1 - v, u))
    }

    pub(crate) fn half_turn(&self) -> Self {
        let (h, w) = (self.height, self.width);
        Self::from_fn(h, w, |u, v| self.get(h - 1 - u, w - 1 - v))
    }

    /// Inverse of [`Plane::quarter_turn`].
    pub(crate) fn quarter_turn_back(&self) -> Self {
        let (h, w) = (self.height, self.width);
        Self::from_fn(w, h, |y, x| self.get(x, w - 1 - y))
    }
}
