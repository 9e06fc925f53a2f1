//! Patch locations and 3D groups of stacked patches.

use crate::error::{Error, Result};
use crate::image::Image;

/// Top-left corner of a `k`x`k` patch in frame `frame` of a stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatchRef {
    pub frame: usize,
    pub row: usize,
    pub col: usize,
}

impl PatchRef {
    pub const fn new(frame: usize, row: usize, col: usize) -> Self {
        PatchRef { frame, row, col }
    }

    /// Whether a `k`x`k` patch here fits inside a `width`x`height` frame.
    pub fn fits(&self, k: usize, width: usize, height: usize) -> bool {
        self.row + k <= height && self.col + k <= width
    }
}

/// A group member and its normalized distance to the group's reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchMatch {
    pub at: PatchRef,
    pub distance: f64,
}

/// `K` patches of side `k` stacked along a third axis, reference first.
///
/// `data` holds the patches back to back, each row-major (`K * k * k` values).
#[derive(Debug, Clone, PartialEq)]
pub struct Group3D {
    k: usize,
    members: Vec<PatchMatch>,
    data: Vec<f64>,
}

impl Group3D {
    pub fn new(k: usize, members: Vec<PatchMatch>, data: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("patch size must be positive"));
        }
        if !members.len().is_power_of_two() {
            return Err(Error::invalid(format!(
                "group size {} is not a power of two",
                members.len()
            )));
        }
        if data.len() != members.len() * k * k {
            return Err(Error::invalid(format!(
                "group of {} patches of side {k} needs {} values, got {}",
                members.len(),
                members.len() * k * k,
                data.len()
            )));
        }
        Ok(Group3D { k, members, data })
    }

    /// Copies the member patches out of `frames`.
    pub fn extract(frames: &[Image], k: usize, members: Vec<PatchMatch>) -> Result<Self> {
        let mut data = Vec::with_capacity(members.len() * k * k);
        for m in &members {
            let frame = frames.get(m.at.frame).ok_or_else(|| {
                Error::invalid(format!("patch frame {} is out of range", m.at.frame))
            })?;
            if !m.at.fits(k, frame.width(), frame.height()) {
                return Err(Error::invalid(format!(
                    "patch at ({}, {}) of side {k} leaves a {}x{} frame",
                    m.at.row,
                    m.at.col,
                    frame.width(),
                    frame.height()
                )));
            }
            for r in m.at.row..m.at.row + k {
                data.extend(frame.row(r)[m.at.col..m.at.col + k].iter().map(|&v| f64::from(v)));
            }
        }
        Group3D::new(k, members, data)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of stacked patches.
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[PatchMatch] {
        &self.members
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn patch(&self, i: usize) -> &[f64] {
        let kk = self.k * self.k;
        &self.data[i * kk..(i + 1) * kk]
    }

    pub(crate) fn into_parts(self) -> (usize, Vec<PatchMatch>, Vec<f64>) {
        (self.k, self.members, self.data)
    }
}
