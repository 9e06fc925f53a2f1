//! Separable patch transforms and the 1D Walsh–Hadamard transform applied
//! along the stacking axis of a group.
//!
//! Every spatial transform is held as a short list of small dense matrices,
//! one per decomposition level, applied to the top-left `n`x`n` block of a
//! `k`x`k` patch as `X <- M X M^T`. The DCT has one level; the bior1.5
//! wavelet has `log2 k` levels (full dyadic Mallat decomposition with
//! periodic extension).

use crate::error::{Error, Result};
use crate::group::{Group3D, PatchMatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spatial {
    /// Bi-orthogonal spline wavelet 1.5.
    Bior15,
    /// Orthonormal DCT-II.
    Dct,
}

/// A square `k`x`k` block of pixels or coefficients, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub k: usize,
    pub data: Vec<f64>,
}

impl Patch {
    pub fn new(k: usize, data: Vec<f64>) -> Result<Self> {
        if k == 0 || data.len() != k * k {
            return Err(Error::invalid(format!(
                "patch of side {k} needs {} values, got {}",
                k * k,
                data.len()
            )));
        }
        Ok(Patch { k, data })
    }

    pub fn filled(k: usize, value: f64) -> Self {
        Patch {
            k,
            data: vec![value; k * k],
        }
    }
}

/// Orthonormal Walsh–Hadamard transform in natural (Hadamard) order, in place.
///
/// The normalized transform is symmetric and orthogonal, hence its own inverse.
pub fn fwht_in_place(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    v.iter_mut().for_each(|x| *x *= scale);
}

pub fn wht_1d(v: &[f64], _direction: Direction) -> Result<Vec<f64>> {
    if !v.len().is_power_of_two() {
        return Err(Error::invalid(format!(
            "Walsh-Hadamard length {} is not a power of two",
            v.len()
        )));
    }
    let mut out = v.to_vec();
    fwht_in_place(&mut out);
    Ok(out)
}

const BIOR15_SCALE: f64 = std::f64::consts::FRAC_1_SQRT_2 / 128.0;
/// bior1.5 decomposition low-pass taps (times 128/sqrt2).
const BIOR15_DEC_LO: [f64; 10] = [3.0, -3.0, -22.0, 22.0, 128.0, 128.0, 22.0, -22.0, -3.0, 3.0];
/// bior1.5 decomposition high-pass taps (times 128/sqrt2).
const BIOR15_DEC_HI: [f64; 10] = [0.0, 0.0, 0.0, 0.0, -128.0, 128.0, 0.0, 0.0, 0.0, 0.0];
const BIOR15_REC_LO: [f64; 10] = [0.0, 0.0, 0.0, 0.0, 128.0, 128.0, 0.0, 0.0, 0.0, 0.0];
const BIOR15_REC_HI: [f64; 10] = [3.0, 3.0, -22.0, -22.0, 128.0, -128.0, 22.0, 22.0, -3.0, -3.0];
// Tap alignment: analysis output i reads x[2i + 5 - j], synthesis writes x[2i - 4 + j].
const BIOR15_DEC_SHIFT: isize = 5;
const BIOR15_REC_SHIFT: isize = -4;

/// One-level periodized bior1.5 analysis on length `n`: rows `0..n/2` give
/// the approximation, rows `n/2..n` the detail.
pub fn bior15_analysis_matrix(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    let half = n / 2;
    for i in 0..half {
        for j in 0..BIOR15_DEC_LO.len() {
            let x = (2 * i as isize + BIOR15_DEC_SHIFT - j as isize).rem_euclid(n as isize) as usize;
            m[i * n + x] += BIOR15_DEC_LO[j] * BIOR15_SCALE;
            m[(half + i) * n + x] += BIOR15_DEC_HI[j] * BIOR15_SCALE;
        }
    }
    m
}

/// One-level periodized bior1.5 synthesis on length `n` (maps coefficients back to samples).
pub fn bior15_synthesis_matrix(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    let half = n / 2;
    for i in 0..half {
        for j in 0..BIOR15_REC_LO.len() {
            let x = (2 * i as isize + BIOR15_REC_SHIFT + j as isize).rem_euclid(n as isize) as usize;
            m[x * n + i] += BIOR15_REC_LO[j] * BIOR15_SCALE;
            m[x * n + half + i] += BIOR15_REC_HI[j] * BIOR15_SCALE;
        }
    }
    m
}

/// Orthonormal DCT-II matrix: `C[u][x] = a(u) cos(pi (2x + 1) u / 2n)`.
pub fn dct_matrix(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for u in 0..n {
        let a = if u == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        for x in 0..n {
            m[u * n + x] =
                a * (std::f64::consts::PI * (2 * x + 1) as f64 * u as f64 / (2 * n) as f64).cos();
        }
    }
    m
}

fn transpose(m: &[f64], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            t[c * n + r] = m[r * n + c];
        }
    }
    t
}

struct Level {
    n: usize,
    forward: Vec<f64>,
    inverse: Vec<f64>,
}

/// Precomputed 2D transform for `k`x`k` patches.
pub struct SpatialTransform {
    kind: Spatial,
    k: usize,
    levels: Vec<Level>,
}

impl SpatialTransform {
    pub fn new(kind: Spatial, k: usize) -> Result<Self> {
        let levels = match kind {
            Spatial::Bior15 => {
                if k < 2 || !k.is_power_of_two() {
                    return Err(Error::invalid(format!(
                        "the bior1.5 transform needs a power-of-two patch size, got {k}"
                    )));
                }
                let mut levels = Vec::new();
                let mut n = k;
                while n >= 2 {
                    levels.push(Level {
                        n,
                        forward: bior15_analysis_matrix(n),
                        inverse: bior15_synthesis_matrix(n),
                    });
                    n /= 2;
                }
                levels
            }
            Spatial::Dct => {
                if k < 2 {
                    return Err(Error::invalid(format!(
                        "the DCT needs a patch size of at least 2, got {k}"
                    )));
                }
                let c = dct_matrix(k);
                vec![Level {
                    n: k,
                    inverse: transpose(&c, k),
                    forward: c,
                }]
            }
        };
        Ok(SpatialTransform { kind, k, levels })
    }

    pub fn kind(&self) -> Spatial {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// In place on one row-major patch; `scratch` is resized as needed.
    pub fn forward_in_place(&self, patch: &mut [f64], scratch: &mut Vec<f64>) {
        debug_assert_eq!(patch.len(), self.k * self.k);
        for level in &self.levels {
            apply_separable(patch, self.k, level.n, &level.forward, scratch);
        }
    }

    pub fn inverse_in_place(&self, patch: &mut [f64], scratch: &mut Vec<f64>) {
        debug_assert_eq!(patch.len(), self.k * self.k);
        for level in self.levels.iter().rev() {
            apply_separable(patch, self.k, level.n, &level.inverse, scratch);
        }
    }

    pub fn apply(&self, patch: &Patch, direction: Direction) -> Result<Patch> {
        if patch.k != self.k || patch.data.len() != self.k * self.k {
            return Err(Error::invalid(format!(
                "transform built for side {} applied to a patch of side {}",
                self.k, patch.k
            )));
        }
        let mut out = patch.data.clone();
        let mut scratch = Vec::new();
        match direction {
            Direction::Forward => self.forward_in_place(&mut out, &mut scratch),
            Direction::Inverse => self.inverse_in_place(&mut out, &mut scratch),
        }
        Ok(Patch { k: self.k, data: out })
    }
}

/// `X[..n, ..n] <- M X[..n, ..n] M^T` inside a `k`-wide buffer.
fn apply_separable(x: &mut [f64], k: usize, n: usize, m: &[f64], scratch: &mut Vec<f64>) {
    scratch.clear();
    scratch.resize(n * n, 0.0);
    // tmp = X M^T, row by row
    for r in 0..n {
        let row = &x[r * k..r * k + n];
        for i in 0..n {
            let mi = &m[i * n..(i + 1) * n];
            scratch[r * n + i] = mi.iter().zip(row).map(|(a, b)| a * b).sum();
        }
    }
    // X = M tmp
    for i in 0..n {
        let out = &mut x[i * k..i * k + n];
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, &mij) in m[i * n..(i + 1) * n].iter().enumerate() {
            if mij == 0.0 {
                continue;
            }
            for (o, &t) in out.iter_mut().zip(&scratch[j * n..(j + 1) * n]) {
                *o += mij * t;
            }
        }
    }
}

pub fn bior15_2d(p: &Patch, direction: Direction) -> Result<Patch> {
    SpatialTransform::new(Spatial::Bior15, p.k)?.apply(p, direction)
}

pub fn dct_2d(p: &Patch, direction: Direction) -> Result<Patch> {
    SpatialTransform::new(Spatial::Dct, p.k)?.apply(p, direction)
}

/// Coefficients of a group: index `[t][s]` with `t` along the Walsh–Hadamard
/// axis and `s` the row-major spatial coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedGroup {
    pub k: usize,
    pub members: Vec<PatchMatch>,
    pub coeffs: Vec<f64>,
}

impl TransformedGroup {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Spatial transform of every patch followed by the WHT across patches.
pub struct GroupTransform {
    spatial: SpatialTransform,
}

impl GroupTransform {
    pub fn new(kind: Spatial, k: usize) -> Result<Self> {
        Ok(GroupTransform {
            spatial: SpatialTransform::new(kind, k)?,
        })
    }

    pub fn spatial(&self) -> &SpatialTransform {
        &self.spatial
    }

    pub fn k(&self) -> usize {
        self.spatial.k
    }

    fn check(&self, k: usize, size: usize, len: usize) -> Result<()> {
        if k != self.spatial.k {
            return Err(Error::invalid(format!(
                "group patches have side {k}, transform expects {}",
                self.spatial.k
            )));
        }
        if !size.is_power_of_two() || len != size * k * k {
            return Err(Error::invalid("inconsistent group shape"));
        }
        Ok(())
    }

    /// Forward 3D transform of a `size * k * k` patch stack, in place.
    pub fn forward_in_place(&self, data: &mut [f64], scratch: &mut Vec<f64>) {
        let kk = self.spatial.k * self.spatial.k;
        for patch in data.chunks_exact_mut(kk) {
            self.spatial.forward_in_place(patch, scratch);
        }
        wht_across(data, kk);
    }

    pub fn inverse_in_place(&self, data: &mut [f64], scratch: &mut Vec<f64>) {
        let kk = self.spatial.k * self.spatial.k;
        wht_across(data, kk);
        for patch in data.chunks_exact_mut(kk) {
            self.spatial.inverse_in_place(patch, scratch);
        }
    }

    pub fn forward(&self, g: &Group3D) -> Result<TransformedGroup> {
        self.check(g.k(), g.size(), g.data().len())?;
        let mut coeffs = g.data().to_vec();
        self.forward_in_place(&mut coeffs, &mut Vec::new());
        Ok(TransformedGroup {
            k: g.k(),
            members: g.members().to_vec(),
            coeffs,
        })
    }

    pub fn inverse(&self, t: TransformedGroup) -> Result<Group3D> {
        self.check(t.k, t.members.len(), t.coeffs.len())?;
        let TransformedGroup {
            k,
            members,
            mut coeffs,
        } = t;
        self.inverse_in_place(&mut coeffs, &mut Vec::new());
        Group3D::new(k, members, coeffs)
    }
}

/// Normalized WHT along the stacking axis of `data.len() / stride` blocks.
fn wht_across(data: &mut [f64], stride: usize) {
    let n = data.len() / stride;
    debug_assert!(n.is_power_of_two());
    if n == 1 {
        return;
    }
    let mut h = 1;
    while h < n {
        for block in data.chunks_exact_mut(2 * h * stride) {
            let (lo, hi) = block.split_at_mut(h * stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    data.iter_mut().for_each(|x| *x *= scale);
}

pub fn transform_group(g: &Group3D, spatial: Spatial) -> Result<TransformedGroup> {
    GroupTransform::new(spatial, g.k())?.forward(g)
}

pub fn inverse_transform_group(t: TransformedGroup, spatial: Spatial) -> Result<Group3D> {
    GroupTransform::new(spatial, t.k)?.inverse(t)
}
