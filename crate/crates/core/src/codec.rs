//! Block-average compression and the `.lab` container.
//!
//! A `.lab` stream is an 11-byte little-endian header followed by the raw
//! block means:
//!
//! ```text
//! 0..4   magic "LAB1"
//! 4      version (1)
//! 5..7   original width  (u16)
//! 7..9   original height (u16)
//! 9      channels (1 or 3)
//! 10     step (2, 3 or 4)
//! 11..   per channel, row-major block means, one byte each
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::raster::{check_step, rounded_mean, BlockMean, RasterImage};

pub const LAB_MAGIC: &[u8; 4] = b"LAB1";
pub const LAB_VERSION: u8 = 1;
pub const LAB_HEADER_LEN: usize = 11;

/// Compressed image: one rounded mean per `step`x`step` block per channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockAverageImage {
    orig_width: usize,
    orig_height: usize,
    step: usize,
    means: Vec<Vec<u8>>,
}

impl BlockAverageImage {
    pub fn new(
        orig_width: usize,
        orig_height: usize,
        step: usize,
        means: Vec<Vec<u8>>,
    ) -> Result<Self> {
        check_step(step)?;
        if means.len() != 1 && means.len() != 3 {
            return Err(Error::InvalidImage(format!(
                "{} channels (expected 1 or 3)",
                means.len()
            )));
        }
        let expected = orig_width.div_ceil(step) * orig_height.div_ceil(step);
        if means.iter().any(|m| m.len() != expected) {
            return Err(Error::InvalidImage(format!(
                "mean grid must hold {expected} entries per channel"
            )));
        }
        Ok(Self {
            orig_width,
            orig_height,
            step,
            means,
        })
    }

    /// Interprets a low-resolution raster as the block means of an image
    /// `step` times larger.
    pub fn from_observation(observation: &RasterImage, step: usize) -> Result<Self> {
        Self::new(
            observation.width() * step,
            observation.height() * step,
            step,
            observation.planes().to_vec(),
        )
    }

    pub fn orig_width(&self) -> usize {
        self.orig_width
    }

    pub fn orig_height(&self) -> usize {
        self.orig_height
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn channels(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[Vec<u8>] {
        &self.means
    }

    /// (columns, rows) of the mean grid.
    pub fn grid_size(&self) -> (usize, usize) {
        (
            self.orig_width.div_ceil(self.step),
            self.orig_height.div_ceil(self.step),
        )
    }

    /// The mean grid as a small raster.
    pub fn to_observation(&self) -> RasterImage {
        let (gw, gh) = self.grid_size();
        RasterImage::from_planes(gw, gh, self.means.clone()).expect("validated at construction")
    }

    pub fn payload_len(&self) -> usize {
        let (gw, gh) = self.grid_size();
        self.channels() * gw * gh
    }
}

pub fn compress(image: &RasterImage, step: usize) -> Result<BlockAverageImage> {
    compress_with(image, step, BlockMean::Full)
}

/// Block-averages `image`. Partial edge blocks average only the pixels that
/// exist; the central-square window is clipped the same way.
pub fn compress_with(
    image: &RasterImage,
    step: usize,
    mode: BlockMean,
) -> Result<BlockAverageImage> {
    check_step(step)?;
    let (w, h) = (image.width(), image.height());
    let (gw, gh) = (w.div_ceil(step), h.div_ceil(step));
    let (off, side) = mode.window(step);
    let means = image
        .planes()
        .iter()
        .map(|plane| {
            let mut out = Vec::with_capacity(gw * gh);
            for by in 0..gh {
                for bx in 0..gw {
                    let (y0, x0) = (by * step, bx * step);
                    let ys = (y0 + off).min(h)..(y0 + off + side).min(h);
                    let xs = (x0 + off).min(w)..(x0 + off + side).min(w);
                    // a clipped central window can be empty on tiny edge blocks
                    let (ys, xs) = if ys.is_empty() || xs.is_empty() {
                        (y0..(y0 + step).min(h), x0..(x0 + step).min(w))
                    } else {
                        (ys, xs)
                    };
                    let count = (ys.len() * xs.len()) as u64;
                    let sum: u64 = ys
                        .flat_map(|y| xs.clone().map(move |x| u64::from(plane[y * w + x])))
                        .sum();
                    out.push(rounded_mean(sum, count));
                }
            }
            out
        })
        .collect();
    BlockAverageImage::new(w, h, step, means)
}

/// Renders the block-constant raster at the original size.
pub fn expand(b: &BlockAverageImage) -> RasterImage {
    let (gw, _) = b.grid_size();
    let step = b.step;
    RasterImage::from_fn(b.orig_width, b.orig_height, b.channels(), |c, x, y| {
        b.means[c][(y / step) * gw + x / step]
    })
    .expect("channel count validated")
}

pub fn write_lab(b: &BlockAverageImage, sink: &mut impl Write) -> Result<()> {
    let width = u16::try_from(b.orig_width)
        .map_err(|_| Error::InvalidHeader(format!("width {} exceeds 65535", b.orig_width)))?;
    let height = u16::try_from(b.orig_height)
        .map_err(|_| Error::InvalidHeader(format!("height {} exceeds 65535", b.orig_height)))?;
    let mut header = [0u8; LAB_HEADER_LEN];
    header[..4].copy_from_slice(LAB_MAGIC);
    header[4] = LAB_VERSION;
    header[5..7].copy_from_slice(&width.to_le_bytes());
    header[7..9].copy_from_slice(&height.to_le_bytes());
    header[9] = b.channels() as u8;
    header[10] = b.step as u8;
    sink.write_all(&header)?;
    for plane in &b.means {
        sink.write_all(plane)?;
    }
    Ok(())
}

pub fn read_lab(source: &mut impl Read) -> Result<BlockAverageImage> {
    let mut header = [0u8; LAB_HEADER_LEN];
    read_exact(source, &mut header)?;
    if &header[..4] != LAB_MAGIC {
        return Err(Error::BadMagic);
    }
    if header[4] != LAB_VERSION {
        return Err(Error::UnsupportedVersion(header[4]));
    }
    let width = usize::from(u16::from_le_bytes([header[5], header[6]]));
    let height = usize::from(u16::from_le_bytes([header[7], header[8]]));
    let channels = usize::from(header[9]);
    let step = usize::from(header[10]);
    if channels != 1 && channels != 3 {
        return Err(Error::InvalidHeader(format!("{channels} channels")));
    }
    if check_step(step).is_err() {
        return Err(Error::InvalidHeader(format!("step {step}")));
    }
    let per_channel = width.div_ceil(step) * height.div_ceil(step);
    let mut means = Vec::with_capacity(channels);
    for _ in 0..channels {
        let mut plane = vec![0u8; per_channel];
        read_exact(source, &mut plane)?;
        means.push(plane);
    }
    BlockAverageImage::new(width, height, step, means)
}

pub fn to_lab_bytes(b: &BlockAverageImage) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(LAB_HEADER_LEN + b.payload_len());
    write_lab(b, &mut out)?;
    Ok(out)
}

fn read_exact(source: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    source.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Truncated,
        _ => Error::Io(e),
    })
}
