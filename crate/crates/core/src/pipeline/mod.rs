//! Ordered stage lists and their execution.

mod matrix;
mod presets;
mod text;

use std::fmt;

pub use matrix::{import_parameter_matrix, parse_matrix_rows};
pub use presets::{preset, preset_names, preset_text};
pub use text::{parse, serialize};

use crate::codec::{expand, BlockAverageImage};
use crate::deconv::{deconvolve, DeconvSettings, MAX_GAMMA, MIN_GAMMA};
use crate::error::{Error, Result};
use crate::interp::{conditional_pass, Geometry, ThresholdTriple};
use crate::raster::{resize_to, RasterImage, ResizeMethod};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    /// Block scale, using the codec step.
    One,
    /// Pixel scale, on 2x2 cells.
    Two,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum StageGeometry {
    #[default]
    Even,
    /// The asymmetric 3x3 split; requires codec step 3.
    Step3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stage {
    CondInterp {
        level: Level,
        geometry: StageGeometry,
        t: ThresholdTriple,
    },
    Magnify {
        gamma: f64,
    },
    /// `settings.gamma` must be 1; magnification is its own stage.
    Deconvolve(DeconvSettings),
}

impl Stage {
    pub fn level1(p2: u8, p3: u8, p4: u8) -> Self {
        Stage::CondInterp {
            level: Level::One,
            geometry: StageGeometry::Even,
            t: ThresholdTriple::new(p2, p3, p4),
        }
    }

    pub fn level1_step3(p2: u8, p3: u8, p4: u8) -> Self {
        Stage::CondInterp {
            level: Level::One,
            geometry: StageGeometry::Step3,
            t: ThresholdTriple::new(p2, p3, p4),
        }
    }

    pub fn level2(p2: u8, p3: u8, p4: u8) -> Self {
        Stage::CondInterp {
            level: Level::Two,
            geometry: StageGeometry::Even,
            t: ThresholdTriple::new(p2, p3, p4),
        }
    }

    /// LEVEL 1 with every threshold at 255.
    pub fn presmooth() -> Self {
        Self::level1(255, 255, 255)
    }

    pub fn magnify(gamma: f64) -> Self {
        Stage::Magnify { gamma }
    }

    pub fn deconvolve(settings: DeconvSettings) -> Self {
        Stage::Deconvolve(settings)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&text::stage_line(self))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelineSpec {
    pub name: String,
    pub stages: Vec<Stage>,
}

impl PipelineSpec {
    pub fn new(name: impl Into<String>, stages: Vec<Stage>) -> Self {
        Self {
            name: name.into(),
            stages,
        }
    }

    /// Product of all magnification factors (1 when there are none).
    pub fn gamma(&self) -> f64 {
        self.stages
            .iter()
            .filter_map(|s| match s {
                Stage::Magnify { gamma } => Some(*gamma),
                _ => None,
            })
            .product()
    }

    pub fn validate(&self) -> Result<()> {
        let mut magnified = false;
        let mut deconvolved = false;
        for (i, stage) in self.stages.iter().enumerate() {
            let at = |msg: String| Error::Pipeline(format!("stage {}: {msg}", i + 1));
            match stage {
                Stage::CondInterp { level, geometry, .. } => {
                    if *level == Level::Two && *geometry == StageGeometry::Step3 {
                        return Err(at("step3 geometry is only valid for LEVEL 1".into()));
                    }
                }
                Stage::Magnify { gamma } => {
                    if !(MIN_GAMMA..=MAX_GAMMA).contains(gamma) {
                        return Err(at(format!("gamma {gamma} outside [{MIN_GAMMA}, {MAX_GAMMA}]")));
                    }
                    if *gamma > 1.0 {
                        if magnified {
                            return Err(at("only one magnification above 1 is allowed".into()));
                        }
                        if deconvolved {
                            return Err(at("magnification must precede the first deconvolution".into()));
                        }
                        magnified = true;
                    }
                }
                Stage::Deconvolve(s) => {
                    s.validate().map_err(|e| at(e.to_string()))?;
                    if s.gamma != 1.0 {
                        return Err(at("deconvolution stages take gamma=1; use a magnify stage".into()));
                    }
                    deconvolved = true;
                }
            }
        }
        Ok(())
    }

    /// [`validate`](Self::validate), plus every LEVEL 1 stage must fit the
    /// codec `step`.
    pub fn validate_for_step(&self, step: usize) -> Result<()> {
        self.validate()?;
        for (i, stage) in self.stages.iter().enumerate() {
            if let Stage::CondInterp { level, geometry, .. } = *stage {
                if stage_geometry(level, geometry, step).is_err() {
                    return Err(Error::Pipeline(format!(
                        "stage {}: {geometry:?} LEVEL 1 geometry does not fit codec step {step}",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Edge-replicates `image` up to the next multiple of `block` on each axis.
pub(crate) fn pad_to_multiple(image: &RasterImage, block: usize) -> Result<RasterImage> {
    let (w, h) = (image.width(), image.height());
    if w % block == 0 && h % block == 0 {
        return Ok(image.clone());
    }
    let (pw, ph) = (w.div_ceil(block) * block, h.div_ceil(block) * block);
    RasterImage::from_fn(pw, ph, image.channels(), |c, x, y| {
        image.get(c, x.min(w - 1), y.min(h - 1))
    })
}

/// Runs a conditional pass on an image whose size may not be a multiple of
/// the block size: the image is edge-padded up to the next multiple and the
/// result cropped back.
fn padded_pass(image: &RasterImage, geometry: Geometry, t: ThresholdTriple) -> Result<RasterImage> {
    let s = geometry.block_size();
    let (w, h) = (image.width(), image.height());
    if w % s == 0 && h % s == 0 {
        return conditional_pass(image, geometry, t);
    }
    let out = conditional_pass(&pad_to_multiple(image, s)?, geometry, t)?;
    RasterImage::from_fn(w, h, image.channels(), |c, x, y| out.get(c, x, y))
}

/// The pass geometry a stage uses for a given codec step.
pub(crate) fn stage_geometry(level: Level, geometry: StageGeometry, step: usize) -> Result<Geometry> {
    match (level, geometry) {
        (Level::Two, _) => Ok(Geometry::Even(2)),
        (Level::One, StageGeometry::Step3) if step == 3 => Ok(Geometry::Step3),
        (Level::One, StageGeometry::Even) if step.is_multiple_of(2) => Ok(Geometry::Even(step)),
        (Level::One, g) => Err(Error::Pipeline(format!(
            "{g:?} LEVEL 1 geometry does not fit codec step {step}"
        ))),
    }
}

fn apply_stage(image: &RasterImage, stage: &Stage, step: usize) -> Result<RasterImage> {
    match *stage {
        Stage::CondInterp { level, geometry, t } => {
            padded_pass(image, stage_geometry(level, geometry, step)?, t)
        }
        Stage::Magnify { gamma } => {
            let w = (gamma * image.width() as f64).round() as usize;
            let h = (gamma * image.height() as f64).round() as usize;
            resize_to(image, w, h, ResizeMethod::Bilinear)
        }
        Stage::Deconvolve(ref s) => deconvolve(image, s),
    }
}

/// Applies `stages` to an already-expanded raster.
pub fn run_stages(image: &RasterImage, stages: &[Stage], step: usize) -> Result<RasterImage> {
    let mut current = image.clone();
    for stage in stages {
        current = apply_stage(&current, stage, step)?;
    }
    Ok(current)
}

/// Expands the input and applies every stage in order.
pub fn run(spec: &PipelineSpec, input: &BlockAverageImage) -> Result<RasterImage> {
    spec.validate()?;
    run_stages(&expand(input), &spec.stages, input.step())
}

/// Like [`run`], also returning the output area-averaged back to the
/// original image size.
pub fn run_with_view(spec: &PipelineSpec, input: &BlockAverageImage) -> Result<(RasterImage, RasterImage)> {
    let out = run(spec, input)?;
    let view = resize_to(&out, input.orig_width(), input.orig_height(), ResizeMethod::AreaAverage)?;
    Ok((out, view))
}
