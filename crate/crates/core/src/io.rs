//! Binary PGM (P5, 8-bit) and grayscale PFM (`Pf`) reading and writing.
//!
//! PFM files are written little-endian (scale `-1.0`) with rows stored
//! bottom-to-top, as the format prescribes. Big-endian files are accepted
//! on read.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaveMode {
    /// 8-bit P5; values rounded half away from zero and clamped to `[0, 255]`.
    Pgm8Clamped,
    /// 32-bit float `Pf`; lossless.
    PfmFloat,
}

impl SaveMode {
    /// Picks the mode from a `.pgm` / `.pfm` extension.
    pub fn from_path(path: &Path) -> Option<SaveMode> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "pgm" => Some(SaveMode::Pgm8Clamped),
            "pfm" => Some(SaveMode::PfmFloat),
            _ => None,
        }
    }
}

/// Loads a P5 PGM or a `Pf` PFM, detected from the magic bytes.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match bytes.get(..2) {
        Some(b"P5") => decode_pgm(&bytes).map_err(|msg| Error::format(path, msg)),
        Some(b"Pf") => decode_pfm(&bytes).map_err(|msg| Error::format(path, msg)),
        Some(b"PF") => Err(Error::format(path, "color PFM is not supported")),
        _ => Err(Error::format(
            path,
            "unsupported format (expected binary PGM 'P5' or grayscale PFM 'Pf')",
        )),
    }
}

pub fn save_image(img: &Image, path: impl AsRef<Path>, mode: SaveMode) -> Result<()> {
    let path = path.as_ref();
    let bytes = match mode {
        SaveMode::Pgm8Clamped => encode_pgm(img),
        SaveMode::PfmFloat => encode_pfm(img),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| v.round().clamp(0.0, 255.0) as u8));
    out
}

pub fn encode_pfm(img: &Image) -> Vec<u8> {
    let mut out = format!("Pf\n{} {}\n-1.0\n", img.width(), img.height()).into_bytes();
    out.reserve(img.len() * 4);
    for row in (0..img.height()).rev() {
        for v in img.row(row) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Whitespace-separated header tokens with `#` comments, as used by both formats.
struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        HeaderReader { bytes, pos: 0 }
    }

    fn token(&mut self) -> Option<&'a str> {
        loop {
            match self.bytes.get(self.pos)? {
                b'#' => {
                    while *self.bytes.get(self.pos)? != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|c| !c.is_ascii_whitespace())
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).ok()
    }

    /// Consumes the single whitespace byte that separates header and raster.
    fn raster(&mut self) -> Option<&'a [u8]> {
        if !self.bytes.get(self.pos)?.is_ascii_whitespace() {
            return None;
        }
        Some(&self.bytes[self.pos + 1..])
    }
}

fn decode_pgm(bytes: &[u8]) -> std::result::Result<Image, String> {
    const MALFORMED: &str = "malformed PGM header";
    let mut h = HeaderReader::new(bytes);
    if h.token() != Some("P5") {
        return Err(MALFORMED.into());
    }
    let mut next = || -> std::result::Result<usize, String> {
        h.token()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| MALFORMED.to_string())
    };
    let (width, height, maxval) = (next()?, next()?, next()?);
    if width == 0 || height == 0 || maxval == 0 {
        return Err(MALFORMED.into());
    }
    if maxval > 255 {
        return Err(format!("unsupported PGM maxval {maxval} (only 8-bit files)"));
    }
    let raster = h.raster().ok_or_else(|| MALFORMED.to_string())?;
    let n = width * height;
    if raster.len() < n {
        return Err(format!(
            "truncated PGM raster: {} of {} bytes",
            raster.len(),
            n
        ));
    }
    let data = raster[..n].iter().map(|&b| f32::from(b)).collect();
    Image::new(width, height, data).map_err(|e| e.to_string())
}

fn decode_pfm(bytes: &[u8]) -> std::result::Result<Image, String> {
    const MALFORMED: &str = "malformed PFM header";
    let mut h = HeaderReader::new(bytes);
    if h.token() != Some("Pf") {
        return Err(MALFORMED.into());
    }
    let width: usize = h.token().and_then(|t| t.parse().ok()).ok_or(MALFORMED)?;
    let height: usize = h.token().and_then(|t| t.parse().ok()).ok_or(MALFORMED)?;
    let scale: f32 = h.token().and_then(|t| t.parse().ok()).ok_or(MALFORMED)?;
    if width == 0 || height == 0 || scale == 0.0 || !scale.is_finite() {
        return Err(MALFORMED.into());
    }
    let raster = h.raster().ok_or(MALFORMED)?;
    let n = width * height;
    if raster.len() < 4 * n {
        return Err(format!(
            "truncated PFM raster: {} of {} bytes",
            raster.len(),
            4 * n
        ));
    }
    let little_endian = scale < 0.0;
    let mut data = vec![0.0f32; n];
    for (i, chunk) in raster[..4 * n].chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        };
        // stored bottom row first
        let (file_row, col) = (i / width, i % width);
        data[(height - 1 - file_row) * width + col] = v;
    }
    Image::new(width, height, data).map_err(|e| e.to_string())
}
