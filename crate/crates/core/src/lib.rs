//! Linear prediction padding for multi-channel rasters.
//!
//! Each channel is padded outward with a 2D autoregressive predictor fitted
//! to the channel itself, one pixel layer at a time. Classic padding methods
//! (zero, replication, polynomial extrapolation) share the same interface.
//! The crate also carries the closed-form padding-error theory for blurred
//! white noise and a tiling harness that measures how padding choices leak
//! into a convolution pipeline.
//!
//! ```
//! use lppad::{pad, PadAmounts, PaddingMethod, Raster};
//!
//! let input = Raster::from_fn(16, 16, 1, |y, x, _| ((y * 3 + x) % 7) as f64).unwrap();
//! let method: PaddingMethod = "lp2x3".parse().unwrap();
//! let out = pad(&input, method, PadAmounts::uniform(4)).unwrap();
//! assert_eq!((out.height(), out.width()), (24, 24));
//! assert_eq!(out.get(4, 4, 0), input.get(0, 0, 0));
//! ```

pub mod autocorr;
pub mod covariance;
pub mod error;
pub mod geometry;
pub mod io;
pub mod pad;
pub mod raster;
pub mod stabilize;
pub mod theory;
pub mod tiling;

pub use covariance::{ArModel, CovarianceMatrix};
pub use error::{Error, Result};
pub use geometry::{Direction, ExtendedNeighborhood, Offset, ValidRegion};
pub use io::{read_raster, write_raster, RasterFormat};
pub use pad::{fit_direction, pad, pad_with, FitMethod, PadAmounts, PadConfig, PadOutput, PaddingMethod};
pub use raster::{Plane, Raster};
pub use theory::{LinearPadRule, NmseCurve, TheoryMethod};
pub use tiling::{ConvPipeline, ShellReport};
