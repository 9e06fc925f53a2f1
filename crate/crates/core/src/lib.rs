//! BM3D denoising of additive white Gaussian noise, for single images and
//! for stacks of pre-registered frames of one scene.
//!
//! The multi-frame strategies are:
//!
//! * **BM3D-1**: average the frames, denoise the average.
//! * **BM3D-2**: denoise every frame, average the results.
//! * **BM3D-3**: pick a reference frame; step-1 groups draw patches from all frames.
//! * **BM3D-M**: every frame is a reference in both steps, groups draw from
//!   all frames, and the final aggregation pools every frame's estimates.
//!
//! ```no_run
//! use bm3d_core::{make_dataset, run_method, Bm3dParams, Image, MethodId, Parallelism};
//!
//! let clean = Image::filled(64, 64, 128.0);
//! let stack = make_dataset(&clean, 80.0, 5, 42, "flat").unwrap();
//! let params = Bm3dParams::new(stack.sigma);
//! let run = run_method(MethodId::Bm3dM, &stack, &params, Some(&clean), &Parallelism::sequential()).unwrap();
//! println!("{:.2}", bm3d_core::mse(&run.image, &clean).unwrap());
//! ```

pub mod dataset;
pub mod error;
pub mod filter;
pub mod group;
pub mod image;
pub mod io;
pub mod matching;
pub mod metrics;
pub mod noise;
pub mod parallel;
pub mod pipeline;
pub mod transforms;

pub use dataset::{load_dataset, save_dataset, Dataset};
pub use error::{Error, Result};
pub use group::{Group3D, PatchMatch, PatchRef};
pub use image::{FrameStack, Image, NoiseSpec};
pub use io::{load_image, save_image, SaveMode};
pub use metrics::{mse, psnr, EvalRecord};
pub use noise::{add_awgn, make_dataset};
pub use parallel::Parallelism;
pub use pipeline::{bm3d_1, bm3d_2, bm3d_3, bm3d_m, bm3d_single, run_method, Bm3dParams, MeanSigma, MethodId, MethodRun};
