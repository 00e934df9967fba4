//! Directional interpolation: magnify, then deconvolve with a linear-motion
//! kernel. Sweeping the kernel over (length, angle) exposes the angle at
//! which detail appears.

mod psf;
pub mod restore;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

pub use psf::{motion_psf, MotionKernel, MAX_LENGTH};

use crate::error::{Error, Result};
use crate::raster::{resize_to, RasterImage, RealPlane, ResizeMethod};
use crate::search::{objective, ObjectiveBreakdown};

/// Optics model for the kernel. `Ofc` softens the kernel with a 3x3
/// Gaussian (sigma 0.5) before use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    #[default]
    Dvc,
    Ofc,
}

/// Noise prefilter applied before deconvolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NoiseMode {
    #[default]
    No,
    /// 3x3 median on the whole plane.
    Yes,
    /// Median only where the pixel is below the plane mean.
    DarkOnly,
    /// Median only where the pixel is above the plane mean.
    LightOnly,
    /// Same as `Yes`.
    Auto,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Dvc => "DVC",
            Source::Ofc => "OFC",
        })
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DVC" => Ok(Source::Dvc),
            "OFC" => Ok(Source::Ofc),
            _ => Err(Error::InvalidArgument(format!("unknown source {s:?}"))),
        }
    }
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseMode::No => "NO",
            NoiseMode::Yes => "YES",
            NoiseMode::DarkOnly => "DO",
            NoiseMode::LightOnly => "LO",
            NoiseMode::Auto => "AUTO",
        })
    }
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NO" => Ok(NoiseMode::No),
            "YES" => Ok(NoiseMode::Yes),
            "DO" => Ok(NoiseMode::DarkOnly),
            "LO" => Ok(NoiseMode::LightOnly),
            "AUTO" => Ok(NoiseMode::Auto),
            _ => Err(Error::InvalidArgument(format!("unknown noise mode {s:?}"))),
        }
    }
}

pub const MIN_GAMMA: f64 = 1.0;
pub const MAX_GAMMA: f64 = 4.0;
pub const MAX_AMOUNT: u32 = 300;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeconvSettings {
    pub gamma: f64,
    pub length: u32,
    pub theta: f64,
    pub source: Source,
    /// Percent; every 25% is one Richardson-Lucy iteration (at least one).
    pub amount: u32,
    pub noise: NoiseMode,
}

impl Default for DeconvSettings {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            length: 0,
            theta: 0.0,
            source: Source::Dvc,
            amount: 100,
            noise: NoiseMode::No,
        }
    }
}

impl DeconvSettings {
    pub fn motion(length: u32, theta: f64) -> Self {
        Self {
            length,
            theta,
            ..Self::default()
        }
    }

    pub fn with_amount(mut self, amount: u32) -> Self {
        self.amount = amount;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn iterations(&self) -> usize {
        ((f64::from(self.amount) / 25.0).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_GAMMA..=MAX_GAMMA).contains(&self.gamma) {
            return Err(Error::InvalidArgument(format!(
                "gamma {} outside [{MIN_GAMMA}, {MAX_GAMMA}]",
                self.gamma
            )));
        }
        if self.length > MAX_LENGTH {
            return Err(Error::InvalidArgument(format!(
                "length {} exceeds {MAX_LENGTH}",
                self.length
            )));
        }
        if !(self.theta.is_finite() && (0.0..180.0).contains(&self.theta)) {
            return Err(Error::InvalidArgument(format!(
                "theta {} outside [0, 180)",
                self.theta
            )));
        }
        if self.amount > MAX_AMOUNT {
            return Err(Error::InvalidArgument(format!(
                "amount {} exceeds {MAX_AMOUNT}",
                self.amount
            )));
        }
        Ok(())
    }

    /// The kernel actually used: the motion PSF, softened for `Ofc`.
    pub fn kernel(&self) -> Result<MotionKernel> {
        let k = motion_psf(self.length, self.theta)?;
        Ok(match self.source {
            Source::Dvc => k,
            Source::Ofc => k.soften(0.5),
        })
    }
}

pub fn prefilter(plane: &RealPlane, mode: NoiseMode) -> RealPlane {
    let select: fn(f64, f64) -> bool = match mode {
        NoiseMode::No => return plane.clone(),
        NoiseMode::Yes | NoiseMode::Auto => |_, _| true,
        NoiseMode::DarkOnly => |v, mean| v < mean,
        NoiseMode::LightOnly => |v, mean| v > mean,
    };
    let median = restore::median3(plane);
    let mean = plane.mean();
    let values = plane
        .values
        .iter()
        .zip(median)
        .map(|(&v, m)| if select(v, mean) { m } else { v })
        .collect();
    RealPlane {
        values,
        ..*plane
    }
}

fn magnified_size(width: usize, height: usize, gamma: f64) -> (usize, usize) {
    (
        ((gamma * width as f64).round() as usize).max(1),
        ((gamma * height as f64).round() as usize).max(1),
    )
}

/// Magnifies by `gamma` (bilinear), prefilters, and runs Richardson-Lucy
/// against the motion kernel on every channel.
pub fn deconvolve(image: &RasterImage, s: &DeconvSettings) -> Result<RasterImage> {
    s.validate()?;
    if image.width() == 0 || image.height() == 0 {
        return Err(Error::InvalidImage("empty image".into()));
    }
    let magnified = if s.gamma != 1.0 {
        let (w, h) = magnified_size(image.width(), image.height(), s.gamma);
        resize_to(image, w, h, ResizeMethod::Bilinear)?
    } else {
        image.clone()
    };
    let kernel = s.kernel()?;
    if kernel.is_identity() && s.noise == NoiseMode::No {
        return Ok(magnified);
    }
    let iterations = s.iterations();
    let planes: Vec<RealPlane> = magnified
        .to_real_planes()
        .iter()
        .map(|p| {
            let filtered = prefilter(p, s.noise);
            let values = restore::richardson_lucy(&filtered, &kernel, iterations);
            RealPlane::new(p.width, p.height, values).expect("size preserved")
        })
        .collect();
    RasterImage::from_real_planes(&planes)
}

#[derive(Clone, Debug)]
pub struct SweepCell {
    pub length: u32,
    pub theta: f64,
    pub image: RasterImage,
    pub objective: Option<ObjectiveBreakdown>,
}

/// Deconvolution results over a length x angle grid, row-major by length.
#[derive(Clone, Debug)]
pub struct SweepGrid {
    pub lengths: Vec<u32>,
    pub thetas: Vec<f64>,
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn cell(&self, row: usize, col: usize) -> &SweepCell {
        &self.cells[row * self.thetas.len() + col]
    }

    /// Cell with the smallest objective total; ties go to the earliest cell.
    pub fn best(&self) -> Option<&SweepCell> {
        self.cells
            .iter()
            .filter_map(|c| c.objective.map(|o| (c, o.total)))
            .fold(None, |best: Option<(&SweepCell, f64)>, (c, t)| match best {
                Some((_, bt)) if bt <= t => best,
                _ => Some((c, t)),
            })
            .map(|(c, _)| c)
    }
}

/// Fixed parameters shared by every sweep cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepSettings {
    pub gamma: f64,
    pub source: Source,
    pub amount: u32,
    pub noise: NoiseMode,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            source: Source::Dvc,
            amount: 100,
            noise: NoiseMode::No,
        }
    }
}

/// The default length range 0..=20.
pub fn default_lengths() -> Vec<u32> {
    (0..=MAX_LENGTH).collect()
}

/// The default angle range 0..=175 in steps of 5 degrees.
pub fn default_thetas() -> Vec<f64> {
    (0..36).map(|i| 5.0 * i as f64).collect()
}

/// One deconvolution per (length, angle) cell. With a reference image each
/// cell also carries its objective value at regularization weight `lambda`.
pub fn sweep(
    image: &RasterImage,
    lengths: &[u32],
    thetas: &[f64],
    fixed: &SweepSettings,
    reference: Option<(&RasterImage, f64)>,
) -> Result<SweepGrid> {
    if lengths.is_empty() || thetas.is_empty() {
        return Err(Error::InvalidArgument("sweep ranges must be nonempty".into()));
    }
    let coords: Vec<(u32, f64)> = lengths
        .iter()
        .flat_map(|&l| thetas.iter().map(move |&t| (l, t)))
        .collect();
    let cells = coords
        .par_iter()
        .map(|&(length, theta)| {
            let settings = DeconvSettings {
                gamma: fixed.gamma,
                length,
                theta,
                source: fixed.source,
                amount: fixed.amount,
                noise: fixed.noise,
            };
            let image = deconvolve(image, &settings)?;
            let objective = reference
                .map(|(r, lambda)| objective(&image, r, lambda))
                .transpose()?;
            Ok(SweepCell {
                length,
                theta,
                image,
                objective,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepGrid {
        lengths: lengths.to_vec(),
        thetas: thetas.to_vec(),
        cells,
    })
}
