//! Collaborative filtering of 3D groups and weighted aggregation.
//!
//! Each filtered group carries one weight: `1 / (sigma^2 N)` after hard
//! thresholding (`N` retained coefficients) and `1 / (sigma^2 ||w||^2)`
//! after empirical Wiener shrinkage. Aggregation accumulates
//! `weight * kaiser * value` and `weight * kaiser` per pixel and divides.

use crate::error::{Error, Result};
use crate::group::{Group3D, PatchMatch};
use crate::image::Image;
use crate::transforms::GroupTransform;

/// Default Kaiser shape parameter.
pub const KAISER_BETA: f64 = 2.0;

/// Floor applied to `||w||^2` in the Wiener weight.
pub const WIENER_NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FilteredGroup {
    pub group: Group3D,
    pub weight: f64,
}

/// Zeroes every coefficient with `|c| < threshold` except `coeffs[0]` and
/// returns how many nonzero coefficients survive.
pub fn hard_threshold_coeffs(coeffs: &mut [f64], threshold: f64) -> usize {
    let mut retained = usize::from(coeffs[0] != 0.0);
    for c in &mut coeffs[1..] {
        if c.abs() < threshold {
            *c = 0.0;
        } else if *c != 0.0 {
            retained += 1;
        }
    }
    retained
}

pub fn hard_threshold_weight(retained: usize, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    if retained >= 1 {
        1.0 / (s2 * retained as f64)
    } else {
        1.0 / s2
    }
}

/// Hard thresholding at `lambda3d * sigma` in the 3D transform domain.
///
/// The DC coefficient (first spatial coefficient of the first
/// Walsh–Hadamard slice) is always kept.
pub fn hard_threshold_filter(g: &Group3D, sigma: f64, lambda3d: f64, transform: &GroupTransform) -> Result<FilteredGroup> {
    check_sigma(sigma)?;
    check_shape(g, transform)?;
    let (k, members, mut data) = g.clone().into_parts();
    let weight = hard_threshold_in_place(&mut data, sigma, lambda3d, transform, &mut Vec::new());
    Ok(FilteredGroup {
        group: Group3D::new(k, members, data)?,
        weight,
    })
}

pub(crate) fn hard_threshold_in_place(
    data: &mut [f64],
    sigma: f64,
    lambda3d: f64,
    transform: &GroupTransform,
    scratch: &mut Vec<f64>,
) -> f64 {
    transform.forward_in_place(data, scratch);
    let retained = hard_threshold_coeffs(data, lambda3d * sigma);
    transform.inverse_in_place(data, scratch);
    hard_threshold_weight(retained, sigma)
}

/// Empirical Wiener shrinkage of `noisy` steered by `pilot`, which must hold
/// the same patch positions.
///
/// Each coefficient is scaled by `p^2 / (p^2 + sigma^2)`, `p` being the pilot
/// coefficient, except the DC coefficient, which passes unscaled unless the
/// pilot DC is exactly zero. Constant images are therefore a fixed point.
pub fn wiener_filter(noisy: &Group3D, pilot: &Group3D, sigma: f64, transform: &GroupTransform) -> Result<FilteredGroup> {
    check_sigma(sigma)?;
    check_shape(noisy, transform)?;
    if pilot.k() != noisy.k()
        || pilot.size() != noisy.size()
        || pilot
            .members()
            .iter()
            .zip(noisy.members())
            .any(|(a, b)| a.at != b.at)
    {
        return Err(Error::invalid(
            "pilot and noisy groups must cover the same patch positions",
        ));
    }
    let (k, members, mut data) = noisy.clone().into_parts();
    let mut pilot_data = pilot.data().to_vec();
    let weight = wiener_in_place(&mut data, &mut pilot_data, sigma, transform, &mut Vec::new());
    Ok(FilteredGroup {
        group: Group3D::new(k, members, data)?,
        weight,
    })
}

/// `noisy` is overwritten with the estimate, `pilot` with its coefficients.
pub(crate) fn wiener_in_place(
    noisy: &mut [f64],
    pilot: &mut [f64],
    sigma: f64,
    transform: &GroupTransform,
    scratch: &mut Vec<f64>,
) -> f64 {
    transform.forward_in_place(noisy, scratch);
    transform.forward_in_place(pilot, scratch);
    let s2 = sigma * sigma;
    let mut norm = 0.0;
    for (i, (c, &p)) in noisy.iter_mut().zip(pilot.iter()).enumerate() {
        let p2 = p * p;
        let w = if i == 0 && p != 0.0 { 1.0 } else { p2 / (p2 + s2) };
        *c *= w;
        norm += w * w;
    }
    transform.inverse_in_place(noisy, scratch);
    1.0 / (s2 * norm.max(WIENER_NORM_FLOOR))
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

fn check_shape(g: &Group3D, t: &GroupTransform) -> Result<()> {
    if g.k() != t.k() {
        return Err(Error::invalid(format!(
            "group patch side {} does not match transform side {}",
            g.k(),
            t.k()
        )));
    }
    Ok(())
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let (mut term, mut sum) = (1.0, 1.0);
    for m in 1..64 {
        term *= q / (m * m) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Separable `k`x`k` Kaiser window, row-major.
pub fn kaiser_window(k: usize, beta: f64) -> Vec<f64> {
    let w1: Vec<f64> = if k == 1 {
        vec![1.0]
    } else {
        let norm = bessel_i0(beta);
        (0..k)
            .map(|n| {
                let t = 2.0 * n as f64 / (k - 1) as f64 - 1.0;
                bessel_i0(beta * (1.0 - t * t).max(0.0).sqrt()) / norm
            })
            .collect()
    };
    let mut w = Vec::with_capacity(k * k);
    for &a in &w1 {
        w.extend(w1.iter().map(|&b| a * b));
    }
    w
}

/// Per-pixel weighted sums over one image domain.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationBuffer {
    width: usize,
    height: usize,
    numerator: Vec<f64>,
    denominator: Vec<f64>,
}

impl AggregationBuffer {
    pub fn new(width: usize, height: usize) -> Self {
        AggregationBuffer {
            width,
            height,
            numerator: vec![0.0; width * height],
            denominator: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn numerator(&self) -> &[f64] {
        &self.numerator
    }

    pub fn denominator(&self) -> &[f64] {
        &self.denominator
    }

    /// Adds one `k`x`k` patch estimate at `(row, col)`.
    pub fn push_patch(&mut self, row: usize, col: usize, values: &[f64], weight: f64, window: &[f64]) -> Result<()> {
        let kk = values.len();
        let k = (kk as f64).sqrt() as usize;
        if k * k != kk || window.len() != kk {
            return Err(Error::invalid("patch and window sizes disagree"));
        }
        if row + k > self.height || col + k > self.width {
            return Err(Error::invalid(format!(
                "patch at ({row}, {col}) of side {k} leaves the {}x{} aggregation domain",
                self.width, self.height
            )));
        }
        for i in 0..k {
            let o = (row + i) * self.width + col;
            let num = &mut self.numerator[o..o + k];
            let den = &mut self.denominator[o..o + k];
            let vals = &values[i * k..(i + 1) * k];
            let win = &window[i * k..(i + 1) * k];
            for j in 0..k {
                let w = weight * win[j];
                num[j] += w * vals[j];
                den[j] += w;
            }
        }
        Ok(())
    }

    /// Adds another buffer's sums into this one.
    pub fn merge(&mut self, other: &AggregationBuffer) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::invalid("cannot merge aggregation buffers of different sizes"));
        }
        for (a, b) in self.numerator.iter_mut().zip(&other.numerator) {
            *a += b;
        }
        for (a, b) in self.denominator.iter_mut().zip(&other.denominator) {
            *a += b;
        }
        Ok(())
    }
}

/// Result of dividing the aggregation sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Finalized {
    pub image: Image,
    /// Pixels no patch covered, copied from the fallback image.
    pub fallback_pixels: usize,
}

pub fn finalize(buf: &AggregationBuffer, fallback: &Image) -> Result<Finalized> {
    if fallback.width() != buf.width || fallback.height() != buf.height {
        return Err(Error::invalid("fallback image does not match the aggregation domain"));
    }
    let mut fallback_pixels = 0;
    let out: Vec<f64> = buf
        .numerator
        .iter()
        .zip(&buf.denominator)
        .zip(fallback.data())
        .map(|((&n, &d), &f)| {
            if d > 0.0 {
                n / d
            } else {
                fallback_pixels += 1;
                f64::from(f)
            }
        })
        .collect();
    Ok(Finalized {
        image: Image::from_f64(buf.width, buf.height, &out),
        fallback_pixels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationTarget {
    /// Every member accumulates into one image domain, whatever its frame.
    SingleImage,
    /// Each member accumulates into the buffer of its own frame.
    PerFrame,
}

/// One or several aggregation buffers plus the Kaiser window.
#[derive(Debug, Clone)]
pub struct Aggregator {
    target: AggregationTarget,
    k: usize,
    window: Vec<f64>,
    buffers: Vec<AggregationBuffer>,
}

impl Aggregator {
    pub fn new(target: AggregationTarget, frames: usize, width: usize, height: usize, k: usize, kaiser_beta: f64) -> Self {
        let count = match target {
            AggregationTarget::SingleImage => 1,
            AggregationTarget::PerFrame => frames.max(1),
        };
        Aggregator {
            target,
            k,
            window: kaiser_window(k, kaiser_beta),
            buffers: vec![AggregationBuffer::new(width, height); count],
        }
    }

    pub fn buffers(&self) -> &[AggregationBuffer] {
        &self.buffers
    }

    pub fn push(&mut self, fg: &FilteredGroup) -> Result<()> {
        self.push_raw(fg.group.members(), fg.group.data(), fg.weight)
    }

    pub(crate) fn push_raw(&mut self, members: &[PatchMatch], data: &[f64], weight: f64) -> Result<()> {
        let kk = self.k * self.k;
        if data.len() != members.len() * kk {
            return Err(Error::invalid("group patch side does not match the aggregator"));
        }
        for (m, values) in members.iter().zip(data.chunks_exact(kk)) {
            let buf = match self.target {
                AggregationTarget::SingleImage => &mut self.buffers[0],
                AggregationTarget::PerFrame => self.buffers.get_mut(m.at.frame).ok_or_else(|| {
                    Error::invalid(format!("patch frame {} has no aggregation buffer", m.at.frame))
                })?,
            };
            buf.push_patch(m.at.row, m.at.col, values, weight, &self.window)?;
        }
        Ok(())
    }

    /// One image per buffer; `fallbacks[i]` fills pixels buffer `i` never saw.
    pub fn finalize(&self, fallbacks: &[Image]) -> Result<Vec<Finalized>> {
        if fallbacks.len() != self.buffers.len() {
            return Err(Error::invalid("one fallback image per aggregation buffer is required"));
        }
        self.buffers
            .iter()
            .zip(fallbacks)
            .map(|(b, f)| finalize(b, f))
            .collect()
    }
}

pub fn aggregate_push(agg: &mut Aggregator, fg: &FilteredGroup) -> Result<()> {
    agg.push(fg)
}
