//! Two-step BM3D and its multi-frame variants.
//!
//! | method  | grouping                                   | aggregation                      |
//! |---------|--------------------------------------------|----------------------------------|
//! | BM3D    | one frame                                  | that frame                       |
//! | BM3D-1  | mean of the frames, sigma / sqrt(L)        | the mean image                   |
//! | BM3D-2  | every frame on its own                     | per frame, results averaged      |
//! | BM3D-3  | reference frame, step 1 searches all frames| reference frame only             |
//! | BM3D-M  | every frame, both steps search all frames  | step 1 per frame, step 2 pooled  |
//!
//! Every reference patch is processed independently: groups are searched
//! and filtered on the worker pool, then pushed into the aggregation
//! buffers on the calling thread in reference order, so the output does not
//! depend on the number of threads.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::filter::{hard_threshold_in_place, wiener_in_place, AggregationTarget, Aggregator, KAISER_BETA};
use crate::group::{Group3D, PatchMatch, PatchRef};
use crate::image::{FrameStack, Image};
use crate::matching::{enumerate_references, search_matches, SearchParams, SearchScope};
use crate::metrics::mse;
use crate::parallel::Parallelism;
use crate::transforms::{GroupTransform, Spatial};

/// References handed to the pool at once; bounds the memory held by
/// filtered-but-not-yet-aggregated groups.
const REFERENCE_BATCH: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardStepParams {
    pub k: usize,
    pub max_group: usize,
    pub window: usize,
    pub step: usize,
    pub lambda3d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerStepParams {
    pub k: usize,
    pub max_group: usize,
    pub window: usize,
    pub step: usize,
}

/// Noise level BM3D-1 assumes for the averaged frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeanSigma {
    /// `sigma / sqrt(L)`, the actual noise level of the mean.
    #[default]
    Scaled,
    /// The per-frame `sigma`, as if averaging had not reduced the noise.
    Input,
}

impl FromStr for MeanSigma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "scaled" => Ok(MeanSigma::Scaled),
            "input" => Ok(MeanSigma::Input),
            _ => Err(Error::invalid(format!("expected 'scaled' or 'input', got '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm3dParams {
    pub step1: HardStepParams,
    pub step2: WienerStepParams,
    /// Noise level assumed by [`bm3d_single`]; the stack methods use the stack's sigma.
    pub sigma: f64,
    pub kaiser_beta: f64,
    pub mean_sigma: MeanSigma,
}

impl Bm3dParams {
    pub fn new(sigma: f64) -> Self {
        Bm3dParams {
            step1: HardStepParams {
                k: 8,
                max_group: 16,
                window: 39,
                step: 3,
                lambda3d: 2.7,
            },
            step2: WienerStepParams {
                k: 8,
                max_group: 32,
                window: 39,
                step: 3,
            },
            sigma,
            kaiser_beta: KAISER_BETA,
            mean_sigma: MeanSigma::Scaled,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    /// Overrides one field by dotted name, e.g. `step1.lambda3d`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("invalid value '{value}' for {key}")))
        }
        match key.trim() {
            "sigma" => self.sigma = parse(key, value)?,
            "kaiser_beta" => self.kaiser_beta = parse(key, value)?,
            "step1.k" => self.step1.k = parse(key, value)?,
            "step1.kmax" | "step1.max_group" => self.step1.max_group = parse(key, value)?,
            "step1.window" => self.step1.window = parse(key, value)?,
            "step1.step" => self.step1.step = parse(key, value)?,
            "step1.lambda3d" => self.step1.lambda3d = parse(key, value)?,
            "step2.k" => self.step2.k = parse(key, value)?,
            "step2.kmax" | "step2.max_group" => self.step2.max_group = parse(key, value)?,
            "step2.window" => self.step2.window = parse(key, value)?,
            "step2.step" => self.step2.step = parse(key, value)?,
            "bm3d1.sigma" => self.mean_sigma = value.parse()?,
            other => return Err(Error::invalid(format!("unknown parameter '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.kaiser_beta >= 0.0 && self.kaiser_beta.is_finite()) {
            return Err(Error::invalid("kaiser_beta must be non-negative"));
        }
        if !(self.step1.lambda3d >= 0.0 && self.step1.lambda3d.is_finite()) {
            return Err(Error::invalid("step1.lambda3d must be non-negative"));
        }
        if !self.step1.k.is_power_of_two() || self.step1.k < 2 {
            return Err(Error::invalid(format!(
                "step1.k must be a power of two for the wavelet, got {}",
                self.step1.k
            )));
        }
        if self.step2.k < 2 {
            return Err(Error::invalid("step2.k must be at least 2"));
        }
        self.search1(SearchScope::ReferenceFrame).validate()?;
        self.search2(SearchScope::ReferenceFrame).validate()
    }

    fn search1(&self, scope: SearchScope) -> SearchParams {
        SearchParams {
            k: self.step1.k,
            max_group: self.step1.max_group,
            window: self.step1.window,
            step: self.step1.step,
            scope,
        }
    }

    fn search2(&self, scope: SearchScope) -> SearchParams {
        SearchParams {
            k: self.step2.k,
            max_group: self.step2.max_group,
            window: self.step2.window,
            step: self.step2.step,
            scope,
        }
    }

    fn check_image(&self, width: usize, height: usize) -> Result<()> {
        let k = self.step1.k.max(self.step2.k);
        if width < k || height < k {
            return Err(Error::invalid(format!(
                "a {width}x{height} image is smaller than the {k}x{k} patch"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodId {
    Bm3d,
    Bm3d1,
    Bm3d2,
    Bm3d3,
    Bm3dM,
}

impl MethodId {
    pub const ALL: [MethodId; 5] = [
        MethodId::Bm3d,
        MethodId::Bm3d1,
        MethodId::Bm3d2,
        MethodId::Bm3d3,
        MethodId::Bm3dM,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Bm3d => "BM3D",
            MethodId::Bm3d1 => "BM3D-1",
            MethodId::Bm3d2 => "BM3D-2",
            MethodId::Bm3d3 => "BM3D-3",
            MethodId::Bm3dM => "BM3D-M",
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('_', "-");
        let id = match norm.as_str() {
            "BM3D" => MethodId::Bm3d,
            "BM3D-1" | "BM-1" => MethodId::Bm3d1,
            "BM3D-2" | "BM-2" => MethodId::Bm3d2,
            "BM3D-3" | "BM-3" => MethodId::Bm3d3,
            "BM3D-M" | "BM-M" => MethodId::Bm3dM,
            _ => {
                return Err(Error::invalid(format!(
                    "unknown method '{s}' (expected BM3D, BM3D-1, BM3D-2, BM3D-3 or BM3D-M)"
                )))
            }
        };
        Ok(id)
    }
}

/// Shared machinery for one denoising run.
struct Engine<'a> {
    params: &'a Bm3dParams,
    par: &'a Parallelism,
    hard: GroupTransform,
    wiener: GroupTransform,
}

struct Filtered {
    members: Vec<PatchMatch>,
    data: Vec<f64>,
    weight: f64,
}

impl<'a> Engine<'a> {
    fn new(params: &'a Bm3dParams, par: &'a Parallelism) -> Result<Self> {
        params.validate()?;
        Ok(Engine {
            params,
            par,
            hard: GroupTransform::new(Spatial::Bior15, params.step1.k)?,
            wiener: GroupTransform::new(Spatial::Dct, params.step2.k)?,
        })
    }

    fn references(&self, frames: &[usize], width: usize, height: usize, k: usize, step: usize) -> Vec<PatchRef> {
        let grid = enumerate_references(width, height, k, step);
        frames
            .iter()
            .flat_map(|&f| grid.iter().map(move |&(r, c)| PatchRef::new(f, r, c)))
            .collect()
    }

    fn run_batches(
        &self,
        refs: &[PatchRef],
        agg: &mut Aggregator,
        filter: impl Fn(&mut Vec<f64>, PatchRef) -> Result<Filtered> + Sync + Send,
    ) -> Result<()> {
        for batch in refs.chunks(REFERENCE_BATCH) {
            let results = self.par.map_init(batch, Vec::new, |scratch, &r| filter(scratch, r));
            for fg in results {
                let fg = fg?;
                agg.push_raw(&fg.members, &fg.data, fg.weight)?;
            }
        }
        Ok(())
    }

    /// Hard-thresholding pass: groups searched in `noisy`, references taken
    /// from `ref_frames`.
    fn hard_step(&self, noisy: &[Image], ref_frames: &[usize], scope: SearchScope, target: AggregationTarget, sigma: f64) -> Result<Aggregator> {
        let p = &self.params.step1;
        let (w, h) = (noisy[0].width(), noisy[0].height());
        let search = self.params.search1(scope);
        let mut agg = Aggregator::new(target, noisy.len(), w, h, p.k, self.params.kaiser_beta);
        let refs = self.references(ref_frames, w, h, p.k, p.step);
        self.run_batches(&refs, &mut agg, |scratch, r| {
            let members = search_matches(noisy, r, &search)?;
            let (_, members, mut data) = Group3D::extract(noisy, p.k, members)?.into_parts();
            let weight = hard_threshold_in_place(&mut data, sigma, p.lambda3d, &self.hard, scratch);
            Ok(Filtered { members, data, weight })
        })?;
        Ok(agg)
    }

    /// Wiener pass: groups searched in `basic`, noisy patches read from
    /// `noisy` at the same positions.
    fn wiener_step(&self, noisy: &[Image], basic: &[Image], ref_frames: &[usize], scope: SearchScope, target: AggregationTarget, sigma: f64) -> Result<Aggregator> {
        let p = &self.params.step2;
        let (w, h) = (basic[0].width(), basic[0].height());
        let search = self.params.search2(scope);
        let mut agg = Aggregator::new(target, basic.len(), w, h, p.k, self.params.kaiser_beta);
        let refs = self.references(ref_frames, w, h, p.k, p.step);
        self.run_batches(&refs, &mut agg, |scratch, r| {
            let members = search_matches(basic, r, &search)?;
            let (_, _, mut pilot) = Group3D::extract(basic, p.k, members.clone())?.into_parts();
            let (_, members, mut data) = Group3D::extract(noisy, p.k, members)?.into_parts();
            let weight = wiener_in_place(&mut data, &mut pilot, sigma, &self.wiener, scratch);
            Ok(Filtered { members, data, weight })
        })?;
        Ok(agg)
    }

    /// BM3D-3 with reference frame `r`; plain BM3D when there is one frame.
    fn reference_frame(&self, noisy: &[Image], r: usize, sigma: f64) -> Result<Image> {
        let step1 = self.hard_step(noisy, &[r], SearchScope::AllFrames, AggregationTarget::SingleImage, sigma)?;
        let basic = step1.finalize(std::slice::from_ref(&noisy[r]))?.remove(0).image;
        let basic = [basic];
        let step2 = self.wiener_step(
            std::slice::from_ref(&noisy[r]),
            &basic,
            &[0],
            SearchScope::ReferenceFrame,
            AggregationTarget::SingleImage,
            sigma,
        )?;
        Ok(step2.finalize(&basic)?.remove(0).image)
    }

    fn all_frames(&self, noisy: &[Image], sigma: f64) -> Result<Image> {
        let frames: Vec<usize> = (0..noisy.len()).collect();
        let step1 = self.hard_step(noisy, &frames, SearchScope::AllFrames, AggregationTarget::PerFrame, sigma)?;
        let basic: Vec<Image> = step1.finalize(noisy)?.into_iter().map(|f| f.image).collect();
        let step2 = self.wiener_step(noisy, &basic, &frames, SearchScope::AllFrames, AggregationTarget::SingleImage, sigma)?;
        let fallback = Image::mean_of(&basic)?;
        Ok(step2.finalize(&[fallback])?.remove(0).image)
    }
}

/// Two-step BM3D of one image at noise level `params.sigma`.
pub fn bm3d_single(noisy: &Image, params: &Bm3dParams, par: &Parallelism) -> Result<Image> {
    params.check_image(noisy.width(), noisy.height())?;
    let engine = Engine::new(params, par)?;
    engine.reference_frame(std::slice::from_ref(noisy), 0, params.sigma)
}

/// Average the frames, then denoise the mean at `sigma / sqrt(L)` (or at
/// `sigma` with [`MeanSigma::Input`]).
pub fn bm3d_1(stack: &FrameStack, params: &Bm3dParams, par: &Parallelism) -> Result<Image> {
    let mean = Image::mean_of(stack.frames())?;
    let sigma = match params.mean_sigma {
        MeanSigma::Scaled => stack.sigma / (stack.len() as f64).sqrt(),
        MeanSigma::Input => stack.sigma,
    };
    bm3d_single(&mean, &params.with_sigma(sigma), par)
}

/// Denoise every frame, then average the results.
pub fn bm3d_2(stack: &FrameStack, params: &Bm3dParams, par: &Parallelism) -> Result<Image> {
    let params = params.with_sigma(stack.sigma);
    let denoised = stack
        .frames()
        .iter()
        .map(|f| bm3d_single(f, &params, par))
        .collect::<Result<Vec<_>>>()?;
    Image::mean_of(&denoised)
}

/// Reference frame `ref_index`; step-1 groups draw patches from every frame.
pub fn bm3d_3(stack: &FrameStack, ref_index: usize, params: &Bm3dParams, par: &Parallelism) -> Result<Image> {
    if ref_index >= stack.len() {
        return Err(Error::invalid(format!(
            "reference frame {ref_index} out of range for {} frames",
            stack.len()
        )));
    }
    let params = params.with_sigma(stack.sigma);
    params.check_image(stack.width(), stack.height())?;
    Engine::new(&params, par)?.reference_frame(stack.frames(), ref_index, stack.sigma)
}

/// Every frame is a reference frame in both steps; step 1 yields one basic
/// estimate per frame and step 2 pools all filtered patches into one image.
pub fn bm3d_m(stack: &FrameStack, params: &Bm3dParams, par: &Parallelism) -> Result<Image> {
    let params = params.with_sigma(stack.sigma);
    params.check_image(stack.width(), stack.height())?;
    Engine::new(&params, par)?.all_frames(stack.frames(), stack.sigma)
}

#[derive(Debug, Clone)]
pub struct ReferenceRun {
    pub ref_index: usize,
    pub image: Image,
    pub mse: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: MethodId,
    pub image: Image,
    /// Seconds spent in the method, all BM3D-3 references included.
    pub wall_time: f64,
    pub warnings: Vec<String>,
    /// BM3D-3 only: one result per reference frame.
    pub per_reference: Vec<ReferenceRun>,
    /// BM3D-3 only: index into `per_reference` of the returned image.
    pub chosen_reference: Option<usize>,
}

/// Runs `method` on `stack`. BM3D-3 is run for every reference frame; the
/// result with the lowest error against `clean` is returned, or reference 0
/// without ground truth.
pub fn run_method(method: MethodId, stack: &FrameStack, params: &Bm3dParams, clean: Option<&Image>, par: &Parallelism) -> Result<MethodRun> {
    let start = Instant::now();
    let mut warnings = Vec::new();
    let mut per_reference = Vec::new();
    let mut chosen_reference = None;
    let image = match method {
        MethodId::Bm3d => {
            if stack.len() > 1 {
                warnings.push(format!(
                    "BM3D is a single-image method; denoising frame 0 of {}",
                    stack.len()
                ));
            }
            bm3d_single(&stack.frames()[0], &params.with_sigma(stack.sigma), par)?
        }
        MethodId::Bm3d1 => bm3d_1(stack, params, par)?,
        MethodId::Bm3d2 => bm3d_2(stack, params, par)?,
        MethodId::Bm3d3 => {
            for r in 0..stack.len() {
                let image = bm3d_3(stack, r, params, par)?;
                let err = clean.map(|c| mse(&image, c)).transpose()?;
                per_reference.push(ReferenceRun {
                    ref_index: r,
                    image,
                    mse: err,
                });
            }
            let best = per_reference
                .iter()
                .enumerate()
                .filter_map(|(i, run)| run.mse.map(|m| (i, m)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map_or(0, |(i, _)| i);
            chosen_reference = Some(best);
            per_reference[best].image.clone()
        }
        MethodId::Bm3dM => bm3d_m(stack, params, par)?,
    };
    Ok(MethodRun {
        method,
        image,
        wall_time: start.elapsed().as_secs_f64(),
        warnings,
        per_reference,
        chosen_reference,
    })
}
