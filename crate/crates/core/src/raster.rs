//! Raster types, resampling, distance metrics and the block-average
//! observation model.

use std::io::Cursor;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// 8-bit raster with one (gray) or three (R, G, B) planes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RasterImage {
    width: usize,
    height: usize,
    planes: Vec<Vec<u8>>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::filled(width, height, channels, 0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        check_channels(channels)?;
        Ok(Self {
            width,
            height,
            planes: vec![vec![value; width * height]; channels],
        })
    }

    pub fn from_planes(width: usize, height: usize, planes: Vec<Vec<u8>>) -> Result<Self> {
        check_channels(planes.len())?;
        if let Some(p) = planes.iter().find(|p| p.len() != width * height) {
            return Err(Error::InvalidImage(format!(
                "plane has {} entries, expected {}x{}",
                p.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            planes,
        })
    }

    pub fn gray(width: usize, height: usize, values: Vec<u8>) -> Result<Self> {
        Self::from_planes(width, height, vec![values])
    }

    /// Builds an image by evaluating `f(channel, x, y)` for every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> u8,
    ) -> Result<Self> {
        check_channels(channels)?;
        let planes = (0..channels)
            .map(|c| {
                let mut plane = Vec::with_capacity(width * height);
                for y in 0..height {
                    for x in 0..width {
                        plane.push(f(c, x, y));
                    }
                }
                plane
            })
            .collect();
        Ok(Self {
            width,
            height,
            planes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn planes(&self) -> &[Vec<u8>] {
        &self.planes
    }

    pub fn plane(&self, channel: usize) -> &[u8] {
        &self.planes[channel]
    }

    pub fn plane_mut(&mut self, channel: usize) -> &mut [u8] {
        &mut self.planes[channel]
    }

    pub fn into_planes(self) -> Vec<Vec<u8>> {
        self.planes
    }

    #[inline]
    pub fn get(&self, channel: usize, x: usize, y: usize) -> u8 {
        self.planes[channel][y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, x: usize, y: usize, value: u8) {
        self.planes[channel][y * self.width + x] = value;
    }

    pub fn same_shape(&self, other: &RasterImage) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.channels() == other.channels()
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::decode_png(&bytes)
    }

    pub fn decode_png(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?;
        let (width, height) = (img.width() as usize, img.height() as usize);
        if img.color().has_color() {
            let rgb = img.to_rgb8();
            let mut planes: Vec<Vec<u8>> = (0..3).map(|_| Vec::with_capacity(width * height)).collect();
            for px in rgb.pixels() {
                for (c, plane) in planes.iter_mut().enumerate() {
                    plane.push(px.0[c]);
                }
            }
            Self::from_planes(width, height, planes)
        } else {
            Self::gray(width, height, img.to_luma8().into_raw())
        }
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = Cursor::new(Vec::new());
        let (w, h) = (self.width as u32, self.height as u32);
        match self.channels() {
            1 => image::GrayImage::from_raw(w, h, self.planes[0].clone())
                .expect("plane size checked at construction")
                .write_to(&mut out, image::ImageFormat::Png)?,
            _ => {
                let mut interleaved = Vec::with_capacity(self.width * self.height * 3);
                for i in 0..self.width * self.height {
                    interleaved.extend(self.planes.iter().map(|p| p[i]));
                }
                image::RgbImage::from_raw(w, h, interleaved)
                    .expect("plane size checked at construction")
                    .write_to(&mut out, image::ImageFormat::Png)?
            }
        }
        Ok(out.into_inner())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.encode_png()?)?;
        Ok(())
    }

    pub fn to_real_planes(&self) -> Vec<RealPlane> {
        self.planes
            .iter()
            .map(|p| RealPlane::from_intensities(self.width, self.height, p))
            .collect()
    }

    pub fn from_real_planes(planes: &[RealPlane]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::InvalidImage("no planes".into()))?;
        Self::from_planes(
            first.width,
            first.height,
            planes.iter().map(RealPlane::to_intensities).collect(),
        )
    }
}

fn check_channels(channels: usize) -> Result<()> {
    if channels == 1 || channels == 3 {
        Ok(())
    } else {
        Err(Error::InvalidImage(format!(
            "{channels} channels (expected 1 or 3)"
        )))
    }
}

/// A single channel at real precision, normalized so that 0..255 maps to
/// 0..1.
#[derive(Clone, Debug, PartialEq)]
pub struct RealPlane {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl RealPlane {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {}x{} plane",
                values.len(),
                width,
                height
            )));
        }
        let mut plane = Self {
            width,
            height,
            values,
        };
        plane.clamp();
        Ok(plane)
    }

    pub fn from_intensities(width: usize, height: usize, samples: &[u8]) -> Self {
        Self {
            width,
            height,
            values: samples.iter().map(|&v| f64::from(v) / 255.0).collect(),
        }
    }

    pub fn to_intensities(&self) -> Vec<u8> {
        self.values.iter().map(|&v| quantize(v * 255.0)).collect()
    }

    /// Clamps every value into [0, 1]; non-finite values become 0.
    pub fn clamp(&mut self) {
        for v in &mut self.values {
            *v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len().max(1) as f64
    }
}

/// Rounds half away from zero and saturates into 0..=255.
#[inline]
pub fn quantize(v: f64) -> u8 {
    if !v.is_finite() {
        return 0;
    }
    v.round().clamp(0.0, 255.0) as u8
}

/// Integer mean `sum / count` rounded half away from zero (inputs are
/// nonnegative).
#[inline]
pub fn rounded_mean(sum: u64, count: u64) -> u8 {
    ((2 * sum + count) / (2 * count)) as u8
}

/// Which pixels of a block contribute to its stored mean.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BlockMean {
    /// All pixels of the block.
    #[default]
    Full,
    /// The centered sub-square of side `step - 2 * (step / 4)`; for a 4x4
    /// block this is the central 2x2.
    CentralSquare,
}

impl BlockMean {
    /// Offset and side length of the averaged window inside a block.
    pub fn window(self, step: usize) -> (usize, usize) {
        match self {
            BlockMean::Full => (0, step),
            BlockMean::CentralSquare => {
                let off = step / 4;
                (off, step - 2 * off)
            }
        }
    }
}

pub fn check_step(step: usize) -> Result<()> {
    if (2..=4).contains(&step) {
        Ok(())
    } else {
        Err(Error::UnsupportedStep(step))
    }
}

/// Parameters of the observation model: box blur over `step`x`step` blocks,
/// subsampling by `step`, and additive Gaussian noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservationParams {
    pub step: usize,
    pub noise_sigma: f64,
    pub block_mean: BlockMean,
}

impl ObservationParams {
    pub fn new(step: usize) -> Self {
        Self {
            step,
            noise_sigma: 0.0,
            block_mean: BlockMean::Full,
        }
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }
}

/// Produces the low-resolution observation of `image`: each output pixel is
/// the mean of a `step`x`step` source block, plus optional Gaussian noise,
/// rounded once at the end.
pub fn forward_observe(
    image: &RasterImage,
    params: &ObservationParams,
    seed: u64,
) -> Result<RasterImage> {
    let step = params.step;
    check_step(step)?;
    if !image.width.is_multiple_of(step) || !image.height.is_multiple_of(step) {
        return Err(Error::NotDivisible {
            width: image.width,
            height: image.height,
            step,
        });
    }
    if !(params.noise_sigma >= 0.0 && params.noise_sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise sigma {} must be a finite value >= 0",
            params.noise_sigma
        )));
    }
    let (ow, oh) = (image.width / step, image.height / step);
    let (off, side) = params.block_mean.window(step);
    let noise = if params.noise_sigma > 0.0 {
        Some((
            Normal::new(0.0, params.noise_sigma).expect("sigma validated"),
            ChaCha8Rng::seed_from_u64(seed),
        ))
    } else {
        None
    };
    let mut noise = noise;

    let mut planes = Vec::with_capacity(image.channels());
    for src in image.planes() {
        let mut out = Vec::with_capacity(ow * oh);
        for by in 0..oh {
            for bx in 0..ow {
                let mut sum = 0u64;
                for y in by * step + off..by * step + off + side {
                    let start = y * image.width + bx * step + off;
                    sum += src[start..start + side].iter().map(|&v| u64::from(v)).sum::<u64>();
                }
                let count = (side * side) as u64;
                let value = match noise.as_mut() {
                    None => rounded_mean(sum, count),
                    Some((dist, rng)) => {
                        quantize(sum as f64 / count as f64 + dist.sample(rng))
                    }
                };
                out.push(value);
            }
        }
        planes.push(out);
    }
    RasterImage::from_planes(ow, oh, planes)
}

/// Repeats every pixel of `image` into a `step`x`step` block.
pub fn block_expand(image: &RasterImage, step: usize) -> RasterImage {
    let (w, h) = (image.width * step, image.height * step);
    RasterImage::from_fn(w, h, image.channels(), |c, x, y| {
        image.get(c, x / step, y / step)
    })
    .expect("channel count preserved")
}

/// L2 norm of `forward_observe(candidate) - observation` over all channels.
pub fn reconstruction_residual(
    candidate: &RasterImage,
    observation: &RasterImage,
    step: usize,
) -> Result<f64> {
    if candidate.width != observation.width * step
        || candidate.height != observation.height * step
        || candidate.channels() != observation.channels()
    {
        return Err(Error::ShapeMismatch(format!(
            "candidate {}x{}x{} does not match observation {}x{}x{} at step {}",
            candidate.width,
            candidate.height,
            candidate.channels(),
            observation.width,
            observation.height,
            observation.channels(),
            step
        )));
    }
    let observed = forward_observe(candidate, &ObservationParams::new(step), 0)?;
    Ok(l2_distance(&observed, observation)?.sqrt())
}

/// Squared L2 distance: the sum of squared intensity differences over all
/// channels and pixels.
pub fn l2_distance(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width,
            a.height,
            a.channels(),
            b.width,
            b.height,
            b.channels()
        )));
    }
    let sum: u64 = a
        .planes
        .iter()
        .zip(&b.planes)
        .flat_map(|(pa, pb)| pa.iter().zip(pb))
        .map(|(&x, &y)| {
            let d = i64::from(x) - i64::from(y);
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64)
}

/// Peak signal-to-noise ratio in dB; infinite for identical images.
pub fn psnr(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    let n = (a.width * a.height * a.channels()).max(1) as f64;
    let mse = l2_distance(a, b)? / n;
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResizeMethod {
    Nearest,
    Bilinear,
    /// Exact box-overlap averaging.
    AreaAverage,
}

pub fn resize_to(
    image: &RasterImage,
    target_w: usize,
    target_h: usize,
    method: ResizeMethod,
) -> Result<RasterImage> {
    if target_w == 0 || target_h == 0 {
        return Err(Error::InvalidArgument(format!(
            "target size {target_w}x{target_h} has a zero dimension"
        )));
    }
    if image.width == 0 || image.height == 0 {
        return Err(Error::InvalidImage("cannot resize an empty image".into()));
    }
    if target_w == image.width && target_h == image.height {
        return Ok(image.clone());
    }
    let planes = match method {
        ResizeMethod::Nearest => {
            let xs: Vec<usize> = (0..target_w)
                .map(|x| (x * image.width / target_w).min(image.width - 1))
                .collect();
            let ys: Vec<usize> = (0..target_h)
                .map(|y| (y * image.height / target_h).min(image.height - 1))
                .collect();
            image
                .planes
                .iter()
                .map(|p| {
                    let mut out = Vec::with_capacity(target_w * target_h);
                    for &sy in &ys {
                        out.extend(xs.iter().map(|&sx| p[sy * image.width + sx]));
                    }
                    out
                })
                .collect()
        }
        ResizeMethod::Bilinear => {
            let xs = bilinear_taps(image.width, target_w);
            let ys = bilinear_taps(image.height, target_h);
            image
                .planes
                .iter()
                .map(|p| {
                    let mut out = Vec::with_capacity(target_w * target_h);
                    for &(y0, y1, fy) in &ys {
                        for &(x0, x1, fx) in &xs {
                            let at = |x: usize, y: usize| f64::from(p[y * image.width + x]);
                            let top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
                            let bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
                            out.push(quantize(top * (1.0 - fy) + bottom * fy));
                        }
                    }
                    out
                })
                .collect()
        }
        ResizeMethod::AreaAverage => {
            let xs = area_weights(image.width, target_w);
            let ys = area_weights(image.height, target_h);
            image
                .planes
                .iter()
                .map(|p| {
                    // separable: rows first into a real buffer
                    let mut tmp = vec![0.0f64; target_w * image.height];
                    for y in 0..image.height {
                        let row = &p[y * image.width..(y + 1) * image.width];
                        for (x, taps) in xs.iter().enumerate() {
                            tmp[y * target_w + x] =
                                taps.iter().map(|&(i, w)| f64::from(row[i]) * w).sum();
                        }
                    }
                    let mut out = Vec::with_capacity(target_w * target_h);
                    for taps in &ys {
                        for x in 0..target_w {
                            let v: f64 = taps.iter().map(|&(i, w)| tmp[i * target_w + x] * w).sum();
                            out.push(quantize(v));
                        }
                    }
                    out
                })
                .collect()
        }
    };
    RasterImage::from_planes(target_w, target_h, planes)
}

/// Half-pixel-center sample positions, clamped to the source grid.
fn bilinear_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// Normalized overlap weights of each destination cell over source cells.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    // Work in units of 1/(src*dst) so that cell edges are integers.
    (0..dst)
        .map(|i| {
            let lo = i * src;
            let hi = (i + 1) * src;
            let first = lo / dst;
            let last = (hi - 1) / dst;
            (first..=last)
                .filter_map(|j| {
                    let a = lo.max(j * dst);
                    let b = hi.min((j + 1) * dst);
                    (b > a).then(|| (j, (b - a) as f64 / src as f64))
                })
                .collect()
        })
        .collect()
}
