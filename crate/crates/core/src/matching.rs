//! Block matching: ranking the patches of a search window by normalized
//! squared L2 distance to a reference patch and keeping the best
//! power-of-two many of them. No distance threshold is applied.
//!
//! Squared differences are accumulated per patch column and the column
//! sums added in column order. [`patch_distance`] and the window search
//! share this order, so a distance is the same bit pattern whichever way
//! it was computed.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::group::{Group3D, PatchMatch, PatchRef};
use crate::image::Image;
use crate::transforms::Patch;

/// Largest patch side the matcher supports.
pub const MAX_PATCH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchScope {
    /// Candidates come from the reference patch's own frame.
    ReferenceFrame,
    /// The same window is searched in every frame of the stack.
    AllFrames,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    /// Patch side.
    pub k: usize,
    /// Maximum group size (a power of two).
    pub max_group: usize,
    /// Candidate positions per axis, centred on the reference.
    pub window: usize,
    /// Stride of the reference-patch grid.
    pub step: usize,
    pub scope: SearchScope,
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > MAX_PATCH {
            return Err(Error::invalid(format!(
                "patch size must be in 1..={MAX_PATCH}, got {}",
                self.k
            )));
        }
        if !self.max_group.is_power_of_two() {
            return Err(Error::invalid(format!(
                "maximum group size must be a power of two, got {}",
                self.max_group
            )));
        }
        if self.window < self.k {
            return Err(Error::invalid(format!(
                "search window {} is smaller than the patch size {}",
                self.window, self.k
            )));
        }
        if self.step == 0 {
            return Err(Error::invalid("reference step must be at least 1"));
        }
        Ok(())
    }
}

/// Reference positions along one axis of length `n`: multiples of `step`,
/// plus the last valid position so the border is always covered.
pub fn reference_axis(n: usize, k: usize, step: usize) -> Vec<usize> {
    if n < k || step == 0 {
        return Vec::new();
    }
    let last = n - k;
    let mut v: Vec<usize> = (0..=last).step_by(step).collect();
    if v.last() != Some(&last) {
        v.push(last);
    }
    v
}

/// Reference grid as `(row, col)` pairs in row-major order.
pub fn enumerate_references(width: usize, height: usize, k: usize, step: usize) -> Vec<(usize, usize)> {
    let rows = reference_axis(height, k, step);
    let cols = reference_axis(width, k, step);
    rows.iter()
        .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
        .collect()
}

/// `||p - q||^2 / k^2`.
pub fn patch_distance(p: &Patch, q: &Patch) -> Result<f64> {
    if p.k != q.k || p.data.len() != q.data.len() {
        return Err(Error::invalid(format!(
            "cannot compare patches of side {} and {}",
            p.k, q.k
        )));
    }
    let k = p.k;
    if k > MAX_PATCH {
        return Err(Error::invalid(format!("patch side {k} exceeds {MAX_PATCH}")));
    }
    let mut lanes = [0.0f64; MAX_PATCH];
    for (pr, qr) in p.data.chunks_exact(k).zip(q.data.chunks_exact(k)) {
        for ((l, a), b) in lanes.iter_mut().zip(pr).zip(qr) {
            let d = a - b;
            *l += d * d;
        }
    }
    Ok(lanes[..k].iter().sum::<f64>() / (k * k) as f64)
}

/// Distance between two patches addressed inside frames, abandoning once the
/// running value reaches `give_up` (the returned value is then a lower bound).
#[inline]
#[allow(clippy::too_many_arguments)]
fn window_distance(a: &Image, ar: usize, ac: usize, b: &Image, br: usize, bc: usize, k: usize, give_up: f64) -> f64 {
    let norm = (k * k) as f64;
    let mut lanes = [0.0f64; MAX_PATCH];
    let lanes = &mut lanes[..k];
    for i in 0..k {
        let ra = &a.row(ar + i)[ac..ac + k];
        let rb = &b.row(br + i)[bc..bc + k];
        for ((l, &x), &y) in lanes.iter_mut().zip(ra).zip(rb) {
            let d = f64::from(x) - f64::from(y);
            *l += d * d;
        }
        if i + 1 < k && i % 2 == 1 {
            let partial = lanes.iter().sum::<f64>() / norm;
            if partial >= give_up {
                return partial;
            }
        }
    }
    lanes.iter().sum::<f64>() / norm
}

#[derive(Clone, Copy)]
struct Ranked {
    distance: f64,
    at: PatchRef,
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then_with(|| self.at.cmp(&other.at))
    }
}

/// Inclusive range of candidate positions along one axis.
fn window_range(center: usize, window: usize, n: usize, k: usize) -> (usize, usize) {
    let lo = center.saturating_sub((window - 1) / 2);
    let hi = (center + window / 2).min(n - k);
    (lo, hi)
}

/// Ranked members of the group for `reference`, reference first.
///
/// Candidates are ordered by distance, ties broken by `(frame, row, col)`.
/// The group size is the largest power of two not above
/// `min(max_group, candidate count)`.
pub fn search_matches(frames: &[Image], reference: PatchRef, params: &SearchParams) -> Result<Vec<PatchMatch>> {
    params.validate()?;
    let k = params.k;
    let ref_frame = frames.get(reference.frame).ok_or_else(|| {
        Error::invalid(format!(
            "reference frame {} out of range ({} frames)",
            reference.frame,
            frames.len()
        ))
    })?;
    let (width, height) = (ref_frame.width(), ref_frame.height());
    if frames.iter().any(|f| f.width() != width || f.height() != height) {
        return Err(Error::invalid("frames in a search differ in size"));
    }
    if !reference.fits(k, width, height) {
        return Err(Error::invalid(format!(
            "reference patch at ({}, {}) of side {k} leaves a {width}x{height} frame",
            reference.row, reference.col
        )));
    }

    let (r0, r1) = window_range(reference.row, params.window, height, k);
    let (c0, c1) = window_range(reference.col, params.window, width, k);
    let scope = match params.scope {
        SearchScope::ReferenceFrame => reference.frame..reference.frame + 1,
        SearchScope::AllFrames => 0..frames.len(),
    };
    let candidates = scope.len() * (r1 - r0 + 1) * (c1 - c0 + 1);
    let group_size = prev_power_of_two(params.max_group.min(candidates));
    let keep = group_size - 1;

    // max-heap of the best `keep` non-reference candidates; candidates are
    // visited in (frame, row, col) order, so a later one never wins a tie
    let mut best: BinaryHeap<Ranked> = BinaryHeap::with_capacity(keep + 1);
    if keep > 0 {
        for frame in scope {
            let cand = &frames[frame];
            for row in r0..=r1 {
                for col in c0..=c1 {
                    let at = PatchRef::new(frame, row, col);
                    if at == reference {
                        continue;
                    }
                    let give_up = if best.len() == keep {
                        best.peek().map_or(f64::INFINITY, |w| w.distance)
                    } else {
                        f64::INFINITY
                    };
                    let distance = window_distance(
                        ref_frame,
                        reference.row,
                        reference.col,
                        cand,
                        row,
                        col,
                        k,
                        give_up,
                    );
                    if distance >= give_up {
                        continue;
                    }
                    best.push(Ranked { distance, at });
                    if best.len() > keep {
                        best.pop();
                    }
                }
            }
        }
    }

    let mut members = Vec::with_capacity(group_size);
    members.push(PatchMatch {
        at: reference,
        distance: 0.0,
    });
    members.extend(best.into_sorted_vec().into_iter().map(|r| PatchMatch {
        at: r.at,
        distance: r.distance,
    }));
    Ok(members)
}

/// Searches and extracts the group for `reference` from `frames`.
pub fn search_group(frames: &[Image], reference: PatchRef, params: &SearchParams) -> Result<Group3D> {
    let members = search_matches(frames, reference, params)?;
    Group3D::extract(frames, params.k, members)
}

fn prev_power_of_two(n: usize) -> usize {
    debug_assert!(n > 0);
    1 << (usize::BITS - 1 - n.leading_zeros())
}
