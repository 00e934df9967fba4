//! Threshold-gated conditional interpolation.
//!
//! Every block is split into four regions. The top-left region (B1) is never
//! touched. The top-right (B2), bottom-left (B3) and bottom-right (B4)
//! regions take the rounded average of the block and its right, lower and
//! diagonal neighbour respectively, provided the two block values differ by
//! at most the matching threshold. Block values are the rounded means of the
//! blocks in the input image, and all decisions read the input only.

use std::fmt;

use crate::error::{Error, Result};
use crate::raster::{rounded_mean, RasterImage};

/// Thresholds for the right, lower and diagonal neighbours. 0 disables the
/// average, 255 always applies it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThresholdTriple {
    pub p2: u8,
    pub p3: u8,
    pub p4: u8,
}

impl ThresholdTriple {
    pub const NEVER: Self = Self::new(0, 0, 0);
    pub const ALWAYS: Self = Self::new(255, 255, 255);

    pub const fn new(p2: u8, p3: u8, p4: u8) -> Self {
        Self { p2, p3, p4 }
    }

    pub fn as_array(self) -> [u8; 3] {
        [self.p2, self.p3, self.p4]
    }

    /// Componentwise `self <= other`.
    pub fn le(self, other: Self) -> bool {
        self.p2 <= other.p2 && self.p3 <= other.p3 && self.p4 <= other.p4
    }
}

impl fmt::Display for ThresholdTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.p2, self.p3, self.p4)
    }
}

#[inline]
fn passes(block: u8, neighbour: u8, threshold: u8) -> bool {
    threshold != 0 && block.abs_diff(neighbour) <= threshold
}

/// How a block is carved into its four regions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Geometry {
    /// `step`x`step` blocks split into four `step/2` squares.
    Even(usize),
    /// 3x3 blocks: 2x2 B1, 2x1 B2 column, 1x2 B3 row, single-pixel B4.
    Step3,
}

impl Geometry {
    pub fn block_size(self) -> usize {
        match self {
            Geometry::Even(step) => step,
            Geometry::Step3 => 3,
        }
    }

    /// Size of the B1 region along each axis; the other regions cover the
    /// remainder of the block.
    fn split(self) -> usize {
        match self {
            Geometry::Even(step) => step / 2,
            Geometry::Step3 => 2,
        }
    }

    fn validate(self, width: usize, height: usize) -> Result<()> {
        if let Geometry::Even(step) = self {
            if step < 2 || step % 2 != 0 {
                return Err(Error::InvalidArgument(format!(
                    "level-1 pass needs an even step, got {step}"
                )));
            }
        }
        let s = self.block_size();
        if !width.is_multiple_of(s) || !height.is_multiple_of(s) {
            return Err(Error::NotDivisible {
                width,
                height,
                step: s,
            });
        }
        Ok(())
    }
}

/// LEVEL 1 pass on `step`x`step` blocks (even `step`).
pub fn level1_pass(image: &RasterImage, step: usize, t: ThresholdTriple) -> Result<RasterImage> {
    conditional_pass(image, Geometry::Even(step), t)
}

/// LEVEL 2 pass: the same rule applied to 2x2 cells, i.e. at pixel scale.
pub fn level2_pass(image: &RasterImage, t: ThresholdTriple) -> Result<RasterImage> {
    conditional_pass(image, Geometry::Even(2), t)
}

/// LEVEL 1 pass on 3x3 blocks with the asymmetric region split.
pub fn level1_step3_pass(image: &RasterImage, t: ThresholdTriple) -> Result<RasterImage> {
    conditional_pass(image, Geometry::Step3, t)
}

pub fn conditional_pass(
    image: &RasterImage,
    geometry: Geometry,
    t: ThresholdTriple,
) -> Result<RasterImage> {
    geometry.validate(image.width(), image.height())?;
    let s = geometry.block_size();
    let q = geometry.split();
    let (w, h) = (image.width(), image.height());
    let (gw, gh) = (w / s, h / s);
    let mut out = image.clone();

    for c in 0..image.channels() {
        let reps = block_representatives(image.plane(c), w, s, gw, gh);
        let plane = out.plane_mut(c);
        for by in 0..gh {
            for bx in 0..gw {
                let b = reps[by * gw + bx];
                let right = (bx + 1 < gw).then(|| reps[by * gw + bx + 1]);
                let below = (by + 1 < gh).then(|| reps[(by + 1) * gw + bx]);
                let diag = (bx + 1 < gw && by + 1 < gh).then(|| reps[(by + 1) * gw + bx + 1]);
                let (x0, y0) = (bx * s, by * s);
                let regions = [
                    (right, t.p2, (x0 + q, x0 + s), (y0, y0 + q)),
                    (below, t.p3, (x0, x0 + q), (y0 + q, y0 + s)),
                    (diag, t.p4, (x0 + q, x0 + s), (y0 + q, y0 + s)),
                ];
                for (neighbour, threshold, xs, ys) in regions {
                    let Some(n) = neighbour else { continue };
                    if !passes(b, n, threshold) {
                        continue;
                    }
                    let avg = rounded_mean(u64::from(b) + u64::from(n), 2);
                    for y in ys.0..ys.1 {
                        plane[y * w + xs.0..y * w + xs.1].fill(avg);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn block_representatives(plane: &[u8], w: usize, s: usize, gw: usize, gh: usize) -> Vec<u8> {
    let mut reps = Vec::with_capacity(gw * gh);
    for by in 0..gh {
        for bx in 0..gw {
            let mut sum = 0u64;
            for y in by * s..(by + 1) * s {
                sum += plane[y * w + bx * s..y * w + (bx + 1) * s]
                    .iter()
                    .map(|&v| u64::from(v))
                    .sum::<u64>();
            }
            reps.push(rounded_mean(sum, (s * s) as u64));
        }
    }
    reps
}

/// Which regions a pass would average: indexed `[channel][block][region]`
/// with regions ordered B2, B3, B4.
pub fn decision_mask(
    image: &RasterImage,
    geometry: Geometry,
    t: ThresholdTriple,
) -> Result<Vec<Vec<[bool; 3]>>> {
    geometry.validate(image.width(), image.height())?;
    let s = geometry.block_size();
    let (gw, gh) = (image.width() / s, image.height() / s);
    Ok((0..image.channels())
        .map(|c| {
            let reps = block_representatives(image.plane(c), image.width(), s, gw, gh);
            let mut mask = Vec::with_capacity(gw * gh);
            for by in 0..gh {
                for bx in 0..gw {
                    let b = reps[by * gw + bx];
                    let at = |dx: usize, dy: usize, p: u8| {
                        bx + dx < gw && by + dy < gh && passes(b, reps[(by + dy) * gw + bx + dx], p)
                    };
                    mask.push([at(1, 0, t.p2), at(0, 1, t.p3), at(1, 1, t.p4)]);
                }
            }
            mask
        })
        .collect())
}

/// All absolute block differences a pass would compare, per direction
/// (right, below, diagonal), across channels. Two thresholds that admit the
/// same subset of these values produce identical passes.
pub fn neighbour_differences(image: &RasterImage, geometry: Geometry) -> Result<[Vec<u8>; 3]> {
    geometry.validate(image.width(), image.height())?;
    let s = geometry.block_size();
    let (gw, gh) = (image.width() / s, image.height() / s);
    let mut diffs: [Vec<u8>; 3] = Default::default();
    for c in 0..image.channels() {
        let reps = block_representatives(image.plane(c), image.width(), s, gw, gh);
        for by in 0..gh {
            for bx in 0..gw {
                let b = reps[by * gw + bx];
                for (k, (dx, dy)) in [(1, 0), (0, 1), (1, 1)].into_iter().enumerate() {
                    if bx + dx < gw && by + dy < gh {
                        diffs[k].push(b.abs_diff(reps[(by + dy) * gw + bx + dx]));
                    }
                }
            }
        }
    }
    for d in &mut diffs {
        d.sort_unstable();
        d.dedup();
    }
    Ok(diffs)
}
