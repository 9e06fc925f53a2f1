//! Seeded additive white Gaussian noise and multi-frame dataset synthesis.
//!
//! The generator is ChaCha12 (`rand_chacha`, whose output stream is
//! value-stable across releases) keyed with 32 bytes expanded from the
//! 64-bit seed by SplitMix64. Uniforms take the top 53 bits of each word;
//! normals come from the Box–Muller transform, both outputs of each pair
//! consumed in order. Frame `i` of a dataset uses [`subseed`]`(seed, i)`.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::image::{FrameStack, Image, NoiseSpec};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of frame `index` within a dataset generated from `seed`.
pub fn subseed(seed: u64, index: usize) -> u64 {
    splitmix64(seed.wrapping_add((index as u64).wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Standard normal stream.
pub struct GaussianStream {
    rng: ChaCha12Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(GOLDEN_GAMMA);
            chunk.copy_from_slice(&splitmix64(state).to_le_bytes());
        }
        GaussianStream {
            rng: ChaCha12Rng::from_seed(key),
            spare: None,
        }
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u lies in (0, 1], so the log is finite
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// `img + n` with `n` iid `N(0, sigma^2)`; the result is not clamped.
pub fn add_awgn(img: &Image, spec: NoiseSpec) -> Image {
    assert!(spec.sigma > 0.0, "noise sigma must be positive");
    let mut g = GaussianStream::new(spec.seed);
    let data = img
        .data()
        .iter()
        .map(|&v| (f64::from(v) + spec.sigma * g.next_normal()) as f32)
        .collect();
    Image::new(img.width(), img.height(), data).expect("noise kept the image finite")
}

/// `frames` independent noisy realizations of `clean`.
pub fn make_dataset(
    clean: &Image,
    sigma: f64,
    frames: usize,
    seed: u64,
    source_id: impl Into<String>,
) -> Result<FrameStack> {
    if frames == 0 {
        return Err(Error::invalid("a dataset needs at least one frame"));
    }
    let noisy = (0..frames)
        .map(|i| NoiseSpec::new(sigma, subseed(seed, i)).map(|spec| add_awgn(clean, spec)))
        .collect::<Result<Vec<_>>>()?;
    FrameStack::new(noisy, sigma, seed, source_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::mse;

    #[test]
    fn vanishing_sigma_is_identity() {
        let im = Image::from_fn(16, 16, |r, c| (r * 16 + c) as f32);
        let out = add_awgn(&im, NoiseSpec::new(1e-9, 7).unwrap());
        for (a, b) in im.data().iter().zip(out.data()) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn deterministic() {
        let im = Image::filled(32, 32, 100.0);
        let spec = NoiseSpec::new(25.0, 99).unwrap();
        assert_eq!(add_awgn(&im, spec), add_awgn(&im, spec));
        let other = add_awgn(&im, NoiseSpec::new(25.0, 100).unwrap());
        assert_ne!(add_awgn(&im, spec), other);
    }

    #[test]
    fn noise_field_does_not_depend_on_content() {
        let spec = NoiseSpec::new(30.0, 3).unwrap();
        let a = Image::filled(20, 20, 0.0);
        let b = Image::from_fn(20, 20, |r, c| ((r * 7 + c * 3) % 256) as f32);
        let na = add_awgn(&a, spec);
        let nb = add_awgn(&b, spec);
        for i in 0..a.len() {
            let ea = na.data()[i] - a.data()[i];
            let eb = nb.data()[i] - b.data()[i];
            assert!((ea - eb).abs() < 1e-4, "pixel {i}: {ea} vs {eb}");
        }
    }

    #[test]
    fn sample_moments_at_sigma_80() {
        let im = Image::filled(512, 512, 128.0);
        let out = add_awgn(&im, NoiseSpec::new(80.0, 2024).unwrap());
        let n = im.len() as f64;
        let diffs: Vec<f64> = out.data().iter().map(|&v| f64::from(v) - 128.0).collect();
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 1.0, "mean {mean}");
        assert!((var.sqrt() - 80.0).abs() < 1.5, "std {}", var.sqrt());
    }

    #[test]
    fn dataset_frames() {
        let clean = Image::from_fn(256, 256, |r, c| ((r + c) % 256) as f32);
        let one = make_dataset(&clean, 80.0, 1, 42, "ramp").unwrap();
        let expected = add_awgn(&clean, NoiseSpec::new(80.0, subseed(42, 0)).unwrap());
        assert_eq!(one.frames()[0], expected);

        let five = make_dataset(&clean, 80.0, 5, 42, "ramp").unwrap();
        assert_eq!(five.len(), 5);
        assert_ne!(five.frames()[0], five.frames()[1]);
        for f in five.frames() {
            let m = mse(f, &clean).unwrap();
            assert!((m - 6400.0).abs() < 0.05 * 6400.0, "mse {m}");
        }
        assert!(make_dataset(&clean, 80.0, 0, 42, "ramp").is_err());
    }

    #[test]
    fn subseeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| subseed(5, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(subseed(5, 0), subseed(6, 0));
    }
}
