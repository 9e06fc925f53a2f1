//! Grayscale images, noise descriptions and multi-frame stacks.

use crate::error::{Error, Result};

/// A grayscale image stored row-major.
///
/// Intensities nominally live in `[0, 255]` but are never clamped: noisy
/// frames at high sigma routinely leave that range.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "image data has {} values, expected {}x{} = {}",
                data.len(),
                width,
                height,
                width * height
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite intensity {} at row {}, col {}",
                data[i],
                i / width,
                i % width
            )));
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    /// Constant image.
    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        assert!(width > 0 && height > 0 && value.is_finite());
        Image {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds an image from `f(row, col)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Image::new(width, height, data).expect("from_fn produced an invalid image")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn same_dims(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Rectangular sub-image with top-left corner at `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, width: usize, height: usize) -> Result<Image> {
        if width == 0 || height == 0 || row + height > self.height || col + width > self.width {
            return Err(Error::invalid(format!(
                "crop {width}x{height} at ({row}, {col}) does not fit a {}x{} image",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(width * height);
        for r in row..row + height {
            data.extend_from_slice(&self.row(r)[col..col + width]);
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    /// Central `size`x`size` crop (offsets rounded down).
    pub fn center_crop(&self, size: usize) -> Result<Image> {
        if size > self.width || size > self.height {
            return Err(Error::invalid(format!(
                "cannot crop {size}x{size} from a {}x{} image",
                self.width, self.height
            )));
        }
        self.crop(
            (self.height - size) / 2,
            (self.width - size) / 2,
            size,
            size,
        )
    }

    /// Pixelwise mean of equally sized images, accumulated in f64.
    pub fn mean_of(images: &[Image]) -> Result<Image> {
        let first = images
            .first()
            .ok_or_else(|| Error::invalid("cannot average an empty image list"))?;
        if images.iter().any(|im| !im.same_dims(first)) {
            return Err(Error::invalid("cannot average images of different sizes"));
        }
        if images.len() == 1 {
            return Ok(first.clone());
        }
        let mut acc = vec![0.0f64; first.len()];
        for im in images {
            for (a, &v) in acc.iter_mut().zip(&im.data) {
                *a += f64::from(v);
            }
        }
        let n = images.len() as f64;
        let data = acc.into_iter().map(|a| (a / n) as f32).collect();
        Ok(Image {
            width: first.width,
            height: first.height,
            data,
        })
    }

    pub(crate) fn from_f64(width: usize, height: usize, data: &[f64]) -> Image {
        debug_assert_eq!(data.len(), width * height);
        Image {
            width,
            height,
            data: data.iter().map(|&v| v as f32).collect(),
        }
    }
}

/// Additive white Gaussian noise: standard deviation in intensity units and
/// the seed of the generator that realizes it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "noise sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(NoiseSpec { sigma, seed })
    }
}

/// Pre-registered noisy observations of one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStack {
    frames: Vec<Image>,
    pub sigma: f64,
    pub seed: u64,
    pub source_id: String,
}

impl FrameStack {
    pub fn new(frames: Vec<Image>, sigma: f64, seed: u64, source_id: impl Into<String>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::invalid("a frame stack needs at least one frame"))?;
        if let Some(i) = frames.iter().position(|f| !f.same_dims(first)) {
            return Err(Error::invalid(format!(
                "frame {i} is {}x{} but frame 0 is {}x{}",
                frames[i].width(),
                frames[i].height(),
                first.width(),
                first.height()
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "stack sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(FrameStack {
            frames,
            sigma,
            seed,
            source_id: source_id.into(),
        })
    }

    pub fn frames(&self) -> &[Image] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    /// Same stack with frames reordered; `order[i]` is the old index of new frame `i`.
    pub fn permuted(&self, order: &[usize]) -> Result<FrameStack> {
        let mut seen = vec![false; self.len()];
        for &i in order {
            if i >= self.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid("frame order is not a permutation"));
            }
        }
        if order.len() != self.len() {
            return Err(Error::invalid("frame order is not a permutation"));
        }
        let frames = order.iter().map(|&i| self.frames[i].clone()).collect();
        FrameStack::new(frames, self.sigma, self.seed, self.source_id.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_length_and_nan() {
        assert!(Image::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Image::new(2, 1, vec![0.0, f32::NAN]).is_err());
        assert!(Image::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn crop_and_center_crop() {
        let im = Image::from_fn(4, 4, |r, c| (r * 4 + c) as f32);
        let c = im.center_crop(2).unwrap();
        assert_eq!(c.data(), &[5.0, 6.0, 9.0, 10.0]);
        assert!(im.crop(3, 3, 2, 2).is_err());
    }

    #[test]
    fn mean_of_identical_frames_is_the_frame() {
        let im = Image::from_fn(5, 3, |r, c| (r as f32 * 1.5) - c as f32);
        let m = Image::mean_of(&[im.clone(), im.clone(), im.clone()]).unwrap();
        assert_eq!(m, im);
    }

    #[test]
    fn stack_validation() {
        let a = Image::filled(4, 4, 1.0);
        let b = Image::filled(5, 4, 1.0);
        assert!(FrameStack::new(vec![], 10.0, 0, "x").is_err());
        assert!(FrameStack::new(vec![a.clone(), b], 10.0, 0, "x").is_err());
        assert!(FrameStack::new(vec![a.clone()], 0.0, 0, "x").is_err());
        let s = FrameStack::new(vec![a.clone(), Image::filled(4, 4, 2.0)], 10.0, 0, "x").unwrap();
        assert_eq!(s.permuted(&[1, 0]).unwrap().frames()[0], Image::filled(4, 4, 2.0));
        assert!(s.permuted(&[0, 0]).is_err());
    }
}
