//! Raster files: 8-bit binary or ASCII netpbm (PGM, PPM) and a lossless
//! little-endian `f64` format.
//!
//! The `f64` layout is a 24-byte header (the magic `LPRASTR1`, height, width
//! and channel count as `u32` little-endian, four zero bytes) followed by the
//! samples row-major in `(y, x, c)` order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::Raster;

pub const RAW_MAGIC: &[u8; 8] = b"LPRASTR1";
const RAW_HEADER: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RasterFormat {
    Pgm,
    Ppm,
    RawF64,
}

impl RasterFormat {
    /// Guess from the file extension: `.pgm`, `.ppm`, anything else is raw.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
            Some(e) if e == "pgm" => RasterFormat::Pgm,
            Some(e) if e == "ppm" => RasterFormat::Ppm,
            _ => RasterFormat::RawF64,
        }
    }

    /// Netpbm for one or three channels according to `channels`, else raw.
    pub fn netpbm_for(channels: usize) -> Self {
        match channels {
            1 => RasterFormat::Pgm,
            3 => RasterFormat::Ppm,
            _ => RasterFormat::RawF64,
        }
    }
}

/// Reads a raster, detecting the format from its first bytes.
pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster> {
    decode(&fs::read(path)?)
}

pub fn write_raster(raster: &Raster, path: impl AsRef<Path>, format: RasterFormat) -> Result<()> {
    let bytes = encode(raster, format)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn decode(bytes: &[u8]) -> Result<Raster> {
    if bytes.starts_with(RAW_MAGIC) {
        return decode_raw(bytes);
    }
    match bytes.get(..2) {
        Some(b"P5") => decode_netpbm(bytes, 1, true),
        Some(b"P6") => decode_netpbm(bytes, 3, true),
        Some(b"P2") => decode_netpbm(bytes, 1, false),
        Some(b"P3") => decode_netpbm(bytes, 3, false),
        _ => Err(Error::Format("unrecognized raster magic".into())),
    }
}

pub fn encode(raster: &Raster, format: RasterFormat) -> Result<Vec<u8>> {
    let (h, w, c) = (raster.height(), raster.width(), raster.channels());
    match format {
        RasterFormat::RawF64 => {
            let dim = |v: usize| {
                u32::try_from(v).map_err(|_| Error::Format(format!("dimension {v} exceeds u32")))
            };
            let mut out = Vec::with_capacity(RAW_HEADER + 8 * raster.samples().len());
            out.extend_from_slice(RAW_MAGIC);
            for d in [h, w, c] {
                out.extend_from_slice(&dim(d)?.to_le_bytes());
            }
            out.extend_from_slice(&[0; 4]);
            for v in raster.samples() {
                out.extend_from_slice(&v.to_le_bytes());
            }
            Ok(out)
        }
        RasterFormat::Pgm | RasterFormat::Ppm => {
            let (want, magic) = if format == RasterFormat::Pgm { (1, "P5") } else { (3, "P6") };
            if c != want {
                return Err(Error::Format(format!(
                    "{magic} holds {want} channel(s), raster has {c}"
                )));
            }
            let mut out = format!("{magic}\n{w} {h}\n255\n").into_bytes();
            out.extend(raster.samples().iter().map(|&v| quantize(v)));
            Ok(out)
        }
    }
}

/// Clamps to `[0, 1]` and rounds half away from zero to 8 bits.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn decode_raw(bytes: &[u8]) -> Result<Raster> {
    if bytes.len() < RAW_HEADER {
        return Err(Error::Format("truncated raw header".into()));
    }
    let field = |i: usize| {
        let b: [u8; 4] = bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap();
        u32::from_le_bytes(b) as usize
    };
    let (h, w, c) = (field(0), field(1), field(2));
    if field(3) != 0 {
        return Err(Error::Format("reserved raw header bytes are not zero".into()));
    }
    let count = h
        .checked_mul(w)
        .and_then(|n| n.checked_mul(c))
        .ok_or_else(|| Error::Format("raw dimensions overflow".into()))?;
    let payload = &bytes[RAW_HEADER..];
    if payload.len() != count * 8 {
        return Err(Error::Format(format!(
            "raw payload has {} bytes, {h}x{w}x{c} needs {}",
            payload.len(),
            count * 8
        )));
    }
    let samples = payload
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Raster::new(h, w, c, samples)
}

/// Whitespace-separated header tokens with `#` comments.
struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("expected a number at byte {start}")))
    }
}

fn decode_netpbm(bytes: &[u8], channels: usize, binary: bool) -> Result<Raster> {
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let w = cur.number()?;
    let h = cur.number()?;
    let maxval = cur.number()?;
    if maxval != 255 {
        return Err(Error::Format(format!("maxval {maxval} is not supported, only 255")));
    }
    let count = h * w * channels;
    let values: Vec<u8> = if binary {
        // Exactly one whitespace byte separates the header from the payload.
        if !bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(Error::Format("missing separator after maxval".into()));
        }
        let payload = &bytes[cur.pos + 1..];
        if payload.len() < count {
            return Err(Error::Format(format!(
                "payload has {} bytes, {w}x{h}x{channels} needs {count}",
                payload.len()
            )));
        }
        payload[..count].to_vec()
    } else {
        (0..count)
            .map(|_| match cur.number()? {
                v @ 0..=255 => Ok(v as u8),
                v => Err(Error::Format(format!("sample {v} exceeds maxval"))),
            })
            .collect::<Result<_>>()?
    };
    let samples = values.into_iter().map(|v| f64::from(v) / 255.0).collect();
    Raster::new(h, w, channels, samples)
}
