//! Bench configuration files.
//!
//! ```text
//! # paths are relative to this file
//! images = house.pgm, lena.pgm
//! crop = 128
//! sigmas = 80, 100
//! frames = 5, 10
//! seeds = 1, 2, 3
//! methods = BM3D-1, BM3D-2, BM3D-3, BM3D-M
//!
//! [params]
//! step1.lambda3d = 2.7
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use bm3d_core::MethodId;
use ini::Ini;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub images: Vec<PathBuf>,
    /// Side of a centered square crop applied to every image.
    pub crop: Option<usize>,
    pub sigmas: Vec<f64>,
    pub frames: Vec<usize>,
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodId>,
    /// `[params]` overrides, in file order.
    pub params: Vec<(String, String)>,
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| anyhow::anyhow!("{key}: cannot parse '{s}'")))
        .collect()
}

impl BenchConfig {
    /// Parses `text`; relative image paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<BenchConfig> {
        let ini = Ini::load_from_str(text).context("malformed config")?;
        let mut cfg = BenchConfig {
            images: Vec::new(),
            crop: None,
            sigmas: Vec::new(),
            frames: Vec::new(),
            seeds: Vec::new(),
            methods: Vec::new(),
            params: Vec::new(),
        };
        for (section, props) in ini.iter() {
            match section {
                None => {
                    for (key, value) in props.iter() {
                        match key {
                            "images" => {
                                cfg.images = list::<String>(key, value)?
                                    .into_iter()
                                    .map(|p| base.join(p))
                                    .collect()
                            }
                            "crop" => {
                                cfg.crop = Some(value.trim().parse().with_context(|| format!("crop: cannot parse '{value}'"))?)
                            }
                            "sigmas" => cfg.sigmas = list(key, value)?,
                            "frames" => cfg.frames = list(key, value)?,
                            "seeds" => cfg.seeds = list(key, value)?,
                            "methods" => {
                                cfg.methods = value
                                    .split(',')
                                    .map(str::trim)
                                    .filter(|s| !s.is_empty())
                                    .map(|s| s.parse::<MethodId>())
                                    .collect::<Result<_, _>>()?
                            }
                            other => bail!("unknown key '{other}'"),
                        }
                    }
                }
                Some("params") => {
                    cfg.params
                        .extend(props.iter().map(|(k, v)| (k.to_string(), v.trim().to_string())));
                }
                Some(other) => bail!("unknown section [{other}]"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let empty = [
            ("images", self.images.is_empty()),
            ("sigmas", self.sigmas.is_empty()),
            ("frames", self.frames.is_empty()),
            ("seeds", self.seeds.is_empty()),
            ("methods", self.methods.is_empty()),
        ];
        if let Some((key, _)) = empty.iter().find(|(_, e)| *e) {
            bail!("'{key}' must list at least one value");
        }
        if self.frames.contains(&0) {
            bail!("frames must be at least 1");
        }
        if self.sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            bail!("sigmas must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# desk grid
images = a.pgm, sub/b.pgm
crop = 128
sigmas = 80, 100
frames = 5
seeds = 1,2,3
methods = BM3D-1, bm3d-m

[params]
step1.lambda3d = 2.9
step2.window = 21
";

    #[test]
    fn parses_sample() {
        let cfg = BenchConfig::parse(SAMPLE, Path::new("/data")).unwrap();
        assert_eq!(cfg.images, vec![PathBuf::from("/data/a.pgm"), PathBuf::from("/data/sub/b.pgm")]);
        assert_eq!(cfg.crop, Some(128));
        assert_eq!(cfg.sigmas, vec![80.0, 100.0]);
        assert_eq!(cfg.frames, vec![5]);
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
        assert_eq!(cfg.methods, vec![MethodId::Bm3d1, MethodId::Bm3dM]);
        assert_eq!(
            cfg.params,
            vec![
                ("step1.lambda3d".to_string(), "2.9".to_string()),
                ("step2.window".to_string(), "21".to_string())
            ]
        );
    }

    #[test]
    fn rejects_empty_methods() {
        let text = SAMPLE.replace("methods = BM3D-1, bm3d-m", "methods =");
        let err = BenchConfig::parse(&text, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("methods"), "{err}");
    }

    #[test]
    fn rejects_unknown_keys_and_methods() {
        assert!(BenchConfig::parse(&format!("{SAMPLE}\n[extra]\nx=1\n"), Path::new(".")).is_err());
        let text = SAMPLE.replace("crop = 128", "corp = 128");
        assert!(BenchConfig::parse(&text, Path::new(".")).is_err());
        let text = SAMPLE.replace("BM3D-1,", "BM3D-7,");
        assert!(BenchConfig::parse(&text, Path::new(".")).is_err());
    }
}
