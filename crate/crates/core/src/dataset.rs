//! On-disk dataset layout.
//!
//! ```text
//! <dir>/clean.pfm          optional ground truth
//! <dir>/frame_000.pfm ...  frame_{L-1}.pfm, unclamped float frames
//! <dir>/meta.txt           key=value lines: source_id, sigma, L, seed
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::{FrameStack, Image};
use crate::io::{load_image, save_image, SaveMode};

pub const META_FILE: &str = "meta.txt";
pub const CLEAN_FILE: &str = "clean.pfm";

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:03}.pfm")
}

/// A frame stack together with its optional ground truth.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub stack: FrameStack,
    pub clean: Option<Image>,
}

pub fn save_dataset(dir: impl AsRef<Path>, stack: &FrameStack, clean: Option<&Image>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if let Some(clean) = clean {
        save_image(clean, dir.join(CLEAN_FILE), SaveMode::PfmFloat)?;
    }
    for (i, frame) in stack.frames().iter().enumerate() {
        save_image(frame, dir.join(frame_file_name(i)), SaveMode::PfmFloat)?;
    }
    let mut meta = String::new();
    let _ = writeln!(meta, "source_id={}", stack.source_id);
    let _ = writeln!(meta, "sigma={}", stack.sigma);
    let _ = writeln!(meta, "L={}", stack.len());
    let _ = writeln!(meta, "seed={}", stack.seed);
    let path = dir.join(META_FILE);
    fs::write(&path, meta).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let meta_path = dir.join(META_FILE);
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta = Meta::parse(&text).map_err(|msg| Error::format(&meta_path, msg))?;

    let frames = (0..meta.frames)
        .map(|i| {
            let p = dir.join(frame_file_name(i));
            if !p.exists() {
                return Err(Error::format(
                    dir,
                    format!("missing frame file {}", frame_file_name(i)),
                ));
            }
            load_image(p)
        })
        .collect::<Result<Vec<_>>>()?;
    let stack = FrameStack::new(frames, meta.sigma, meta.seed, meta.source_id)?;

    let clean_path: PathBuf = dir.join(CLEAN_FILE);
    let clean = if clean_path.exists() {
        let clean = load_image(&clean_path)?;
        if !clean.same_dims(&stack.frames()[0]) {
            return Err(Error::format(clean_path, "clean image size differs from the frames"));
        }
        Some(clean)
    } else {
        None
    };
    Ok(Dataset { stack, clean })
}

struct Meta {
    source_id: String,
    sigma: f64,
    frames: usize,
    seed: u64,
}

impl Meta {
    fn parse(text: &str) -> std::result::Result<Meta, String> {
        let (mut source_id, mut sigma, mut frames, mut seed) = (None, None, None, None);
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", n + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| format!("line {}: invalid {what} '{value}'", n + 1);
            match key {
                "source_id" => source_id = Some(value.to_string()),
                "sigma" => sigma = Some(value.parse::<f64>().map_err(|_| bad("sigma"))?),
                "L" => frames = Some(value.parse::<usize>().map_err(|_| bad("L"))?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad("seed"))?),
                _ => {}
            }
        }
        let frames = frames.ok_or("missing key L")?;
        if frames == 0 {
            return Err("L must be at least 1".into());
        }
        Ok(Meta {
            source_id: source_id.ok_or("missing key source_id")?,
            sigma: sigma.ok_or("missing key sigma")?,
            frames,
            seed: seed.ok_or("missing key seed")?,
        })
    }
}
