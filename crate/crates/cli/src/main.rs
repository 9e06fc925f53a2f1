//! `bm3d`: dataset generation, denoising, benchmarking and evaluation.

mod bench;
mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use bm3d_core::metrics::{append_records, psnr_from_mse};
use bm3d_core::{
    load_dataset, load_image, make_dataset, mse, run_method, save_dataset, save_image, Bm3dParams, EvalRecord, Image,
    MethodId, Parallelism, SaveMode,
};
use clap::{Parser, Subcommand};

use crate::config::BenchConfig;

#[derive(Parser)]
#[command(name = "bm3d", version, about = "Multi-frame BM3D denoising experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corrupt a clean image into a stack of noisy frames.
    Gen {
        /// Clean image (PGM or PFM).
        clean: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dataset directory to create.
        #[arg(long)]
        out: PathBuf,
    },
    /// Denoise a dataset directory with one method.
    Denoise {
        dataset: PathBuf,
        #[arg(long, value_parser = parse_method)]
        method: MethodId,
        /// Parameter override, e.g. `step1.lambda3d=2.7`; repeatable.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        #[arg(long)]
        threads: Option<usize>,
        /// Output image; a `.pgm` preview is written next to it.
        #[arg(long)]
        out: PathBuf,
        /// CSV the evaluation record is appended to (default: results.csv next to the output).
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Run a benchmark grid described by a config file.
    Bench {
        config: PathBuf,
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory for results.csv, summary.csv and summary.md.
        #[arg(long)]
        out: PathBuf,
        /// Write 0 instead of the measured wall time, for byte-stable output.
        #[arg(long)]
        no_timing: bool,
    },
    /// Print MSE and PSNR between two images.
    Eval { a: PathBuf, b: PathBuf },
}

/// Error in the command line rather than in the run; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl fmt::Display) -> anyhow::Error {
    Usage(msg.to_string()).into()
}

fn parse_method(s: &str) -> std::result::Result<MethodId, String> {
    s.parse().map_err(|e: bm3d_core::Error| e.to_string())
}

fn parallelism(threads: Option<usize>) -> Result<Parallelism> {
    Parallelism::with_threads(threads.unwrap_or(0)).map_err(usage)
}

fn apply_params<'a>(params: &mut Bm3dParams, overrides: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
    for (key, value) in overrides {
        params.set(key, value).map_err(usage)?;
    }
    params.validate().map_err(usage)
}

fn split_overrides(raw: &[String]) -> Result<Vec<(&str, &str)>> {
    raw.iter()
        .map(|kv| {
            kv.split_once('=')
                .ok_or_else(|| usage(format!("--param expects KEY=VALUE, got '{kv}'")))
        })
        .collect()
}

fn source_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

/// Writes `img` as PFM at `path` (extension replaced) plus a PGM preview.
fn save_pair(img: &Image, path: &Path) -> Result<PathBuf> {
    let pfm = path.with_extension("pfm");
    save_image(img, &pfm, SaveMode::PfmFloat)?;
    save_image(img, path.with_extension("pgm"), SaveMode::Pgm8Clamped)?;
    Ok(pfm)
}

fn cmd_gen(clean: &Path, sigma: f64, frames: usize, seed: u64, out: &Path) -> Result<()> {
    if frames == 0 {
        return Err(usage("--frames must be at least 1"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(usage("--sigma must be positive"));
    }
    let img = load_image(clean)?;
    let stack = make_dataset(&img, sigma, frames, seed, source_id(clean))?;
    save_dataset(out, &stack, Some(&img))?;
    println!("wrote {frames} frames to {}", out.display());
    Ok(())
}

fn cmd_denoise(
    dataset: &Path,
    method: MethodId,
    raw_params: &[String],
    threads: Option<usize>,
    out: &Path,
    results: Option<&Path>,
) -> Result<()> {
    let ds = load_dataset(dataset)?;
    let mut params = Bm3dParams::new(ds.stack.sigma);
    apply_params(&mut params, split_overrides(raw_params)?)?;
    let par = parallelism(threads)?;
    let run = run_method(method, &ds.stack, &params, ds.clean.as_ref(), &par)?;
    for w in &run.warnings {
        log::warn!("{w}");
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    for r in &run.per_reference {
        let stem = out.file_stem().unwrap_or_default().to_string_lossy();
        let path = out.with_file_name(format!("{stem}_ref{:03}", r.ref_index));
        save_pair(&r.image, &path)?;
    }
    let written = save_pair(&run.image, out)?;
    match run.chosen_reference {
        Some(best) => println!(
            "wrote {} (best of {} references: frame {})",
            written.display(),
            run.per_reference.len(),
            run.per_reference[best].ref_index
        ),
        None => println!("wrote {}", written.display()),
    }

    if let Some(clean) = &ds.clean {
        let err = mse(&run.image, clean)?;
        let record = EvalRecord {
            source_id: ds.stack.source_id.clone(),
            method: method.to_string(),
            sigma: ds.stack.sigma,
            frames: ds.stack.len(),
            seed: ds.stack.seed,
            mse: err,
            psnr: psnr_from_mse(err),
            wall_time: run.wall_time,
        };
        let csv_path = results
            .map(Path::to_path_buf)
            .unwrap_or_else(|| out.with_file_name(bench::RESULTS_FILE));
        append_records(&csv_path, &[record])?;
        println!("mse={err:.4} psnr={:.4} dB", psnr_from_mse(err));
    }
    Ok(())
}

fn cmd_bench(config: &Path, raw_params: &[String], threads: Option<usize>, out: &Path, no_timing: bool) -> Result<bool> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let base = config.parent().unwrap_or(Path::new("."));
    let cfg = BenchConfig::parse(&text, base).map_err(|e| usage(format!("{}: {e:#}", config.display())))?;
    let mut params = Bm3dParams::new(cfg.sigmas[0]);
    let overrides = split_overrides(raw_params)?;
    apply_params(
        &mut params,
        cfg.params
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .chain(overrides),
    )?;
    let par = parallelism(threads)?;
    let outcome = bench::run_bench(&cfg, &params, &par, !no_timing);
    for path in bench::write_outputs(out, &outcome.records, &cfg.methods)? {
        println!("wrote {}", path.display());
    }
    if outcome.failed > 0 {
        log::error!("{} cell(s) failed", outcome.failed);
    }
    Ok(outcome.failed == 0)
}

fn cmd_eval(a: &Path, b: &Path) -> Result<()> {
    let (a, b) = (load_image(a)?, load_image(b)?);
    let err = mse(&a, &b)?;
    println!("mse={err:.6}");
    println!("psnr={:.4}", psnr_from_mse(err));
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen {
            clean,
            sigma,
            frames,
            seed,
            out,
        } => cmd_gen(&clean, sigma, frames, seed, &out).map(|_| true),
        Command::Denoise {
            dataset,
            method,
            params,
            threads,
            out,
            results,
        } => cmd_denoise(&dataset, method, &params, threads, &out, results.as_deref()).map(|_| true),
        Command::Bench {
            config,
            params,
            threads,
            out,
            no_timing,
        } => cmd_bench(&config, &params, threads, &out, no_timing),
        Command::Eval { a, b } => cmd_eval(&a, &b).map(|_| true),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
