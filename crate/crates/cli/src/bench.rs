//! Grid runs over images x sigmas x frame counts x seeds x methods.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bm3d_core::metrics::{psnr_from_mse, write_records};
use bm3d_core::{load_image, make_dataset, run_method, Bm3dParams, EvalRecord, Image, MethodId, Parallelism};

use crate::config::BenchConfig;

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_MD: &str = "summary.md";

pub struct BenchOutcome {
    pub records: Vec<EvalRecord>,
    pub failed: usize,
}

fn source_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_clean(path: &Path, crop: Option<usize>) -> Result<Image> {
    let img = load_image(path)?;
    Ok(match crop {
        Some(side) if side < img.width() || side < img.height() => img.center_crop(side)?,
        _ => img,
    })
}

/// Runs every cell; a failing cell is logged and counted, the rest still run.
pub fn run_bench(cfg: &BenchConfig, params: &Bm3dParams, par: &Parallelism, timing: bool) -> BenchOutcome {
    let mut records = Vec::new();
    let mut failed = 0;
    let cells_per_image = cfg.sigmas.len() * cfg.frames.len() * cfg.seeds.len() * cfg.methods.len();
    for path in &cfg.images {
        let id = source_id(path);
        let clean = match load_clean(path, cfg.crop) {
            Ok(c) => c,
            Err(e) => {
                log::error!("{}: {e:#}", path.display());
                failed += cells_per_image;
                continue;
            }
        };
        for &sigma in &cfg.sigmas {
            for &frames in &cfg.frames {
                for &seed in &cfg.seeds {
                    let stack = match make_dataset(&clean, sigma, frames, seed, id.clone()) {
                        Ok(s) => s,
                        Err(e) => {
                            log::error!("{id} sigma={sigma} L={frames} seed={seed}: {e}");
                            failed += cfg.methods.len();
                            continue;
                        }
                    };
                    for &method in &cfg.methods {
                        match run_method(method, &stack, params, Some(&clean), par) {
                            Ok(run) => {
                                for w in &run.warnings {
                                    log::warn!("{id} {method}: {w}");
                                }
                                let mse = match bm3d_core::mse(&run.image, &clean) {
                                    Ok(m) => m,
                                    Err(e) => {
                                        log::error!("{id} {method}: {e}");
                                        failed += 1;
                                        continue;
                                    }
                                };
                                log::info!(
                                    "{id} sigma={sigma} L={frames} seed={seed} {method}: mse={mse:.2} ({:.1}s)",
                                    run.wall_time
                                );
                                records.push(EvalRecord {
                                    source_id: id.clone(),
                                    method: method.to_string(),
                                    sigma,
                                    frames,
                                    seed,
                                    mse,
                                    psnr: psnr_from_mse(mse),
                                    wall_time: if timing { run.wall_time } else { 0.0 },
                                });
                            }
                            Err(e) => {
                                log::error!("{id} sigma={sigma} L={frames} seed={seed} {method}: {e}");
                                failed += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    BenchOutcome { records, failed }
}

/// Row key of the pivot: image, sigma, frame count.
type RowKey = (String, u64, usize);
type Row = (RowKey, Vec<Option<f64>>);

/// Mean MSE over seeds per (image, sigma, L) row and method, rows in first-seen order.
pub fn pivot(records: &[EvalRecord], methods: &[MethodId]) -> Vec<Row> {
    let mut order: Vec<RowKey> = Vec::new();
    let mut sums: BTreeMap<(RowKey, String), (f64, usize)> = BTreeMap::new();
    for r in records {
        let key = (r.source_id.clone(), r.sigma.to_bits(), r.frames);
        if !order.contains(&key) {
            order.push(key.clone());
        }
        let e = sums.entry((key, r.method.clone())).or_insert((0.0, 0));
        e.0 += r.mse;
        e.1 += 1;
    }
    order
        .into_iter()
        .map(|key| {
            let cells = methods
                .iter()
                .map(|m| {
                    sums.get(&(key.clone(), m.to_string()))
                        .map(|(s, n)| s / *n as f64)
                })
                .collect();
            (key, cells)
        })
        .collect()
}

pub fn summary_csv(rows: &[Row], methods: &[MethodId]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["source_id".to_string(), "sigma".to_string(), "L".to_string()];
    header.extend(methods.iter().map(|m| m.to_string()));
    w.write_record(&header)?;
    for ((id, sigma, frames), cells) in rows {
        let mut rec = vec![id.clone(), f64::from_bits(*sigma).to_string(), frames.to_string()];
        rec.extend(cells.iter().map(|c| c.map_or(String::new(), |v| format!("{v:.4}"))));
        w.write_record(&rec)?;
    }
    Ok(w.into_inner()?)
}

/// One Markdown table per frame count; the best cell of each row in bold.
pub fn summary_markdown(rows: &[Row], methods: &[MethodId]) -> String {
    let mut by_frames: BTreeMap<usize, Vec<&Row>> = BTreeMap::new();
    for row in rows {
        by_frames.entry(row.0 .2).or_default().push(row);
    }
    let mut out = String::from("# Mean MSE over seeds\n");
    for (frames, rows) in by_frames {
        let _ = writeln!(out, "\n## {frames}-image datasets\n");
        let _ = write!(out, "| Image (sigma) |");
        for m in methods {
            let _ = write!(out, " {m} |");
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(methods.len()));
        out.push('\n');
        for ((id, sigma, _), cells) in rows {
            let best = cells.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            let _ = write!(out, "| {id} ({}) |", f64::from_bits(*sigma));
            for c in cells {
                match c {
                    Some(v) if *v == best => {
                        let _ = write!(out, " **{v:.2}** |");
                    }
                    Some(v) => {
                        let _ = write!(out, " {v:.2} |");
                    }
                    None => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Writes the raw records and both pivot tables into `dir`.
pub fn write_outputs(dir: &Path, records: &[EvalRecord], methods: &[MethodId]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let results = dir.join(RESULTS_FILE);
    let file = fs::File::create(&results).with_context(|| format!("creating {}", results.display()))?;
    write_records(file, records)?;

    let rows = pivot(records, methods);
    let csv_path = dir.join(SUMMARY_CSV);
    fs::write(&csv_path, summary_csv(&rows, methods)?).with_context(|| format!("writing {}", csv_path.display()))?;
    let md_path = dir.join(SUMMARY_MD);
    fs::write(&md_path, summary_markdown(&rows, methods)).with_context(|| format!("writing {}", md_path.display()))?;
    Ok(vec![results, csv_path, md_path])
}
