//! Linear-motion point spread functions.

use crate::error::{Error, Result};

/// Largest motion length on the sweep grid.
pub const MAX_LENGTH: u32 = 20;

/// Normalized, nonnegative 2-D kernel with odd dimensions, stored row-major
/// with the anchor at the center tap.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionKernel {
    pub length: u32,
    /// Degrees counterclockwise from the horizontal axis, reduced to [0, 180).
    pub theta: f64,
    pub width: usize,
    pub height: usize,
    pub taps: Vec<f64>,
}

impl MotionKernel {
    pub fn identity() -> Self {
        Self {
            length: 0,
            theta: 0.0,
            width: 1,
            height: 1,
            taps: vec![1.0],
        }
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.taps[row * self.width + col]
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }

    pub fn is_identity(&self) -> bool {
        self.taps.len() == 1
    }

    pub fn transpose(&self) -> Self {
        let mut taps = Vec::with_capacity(self.taps.len());
        for c in 0..self.width {
            for r in 0..self.height {
                taps.push(self.at(r, c));
            }
        }
        Self {
            width: self.height,
            height: self.width,
            taps,
            ..self.clone()
        }
    }

    /// Full 2-D convolution with a 3x3 Gaussian of the given sigma; the
    /// kernel grows by one tap on every side.
    pub fn soften(&self, sigma: f64) -> Self {
        let g: Vec<f64> = (-1i32..=1).map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp()).collect();
        let gsum: f64 = g.iter().sum();
        let g: Vec<f64> = g.iter().map(|v| v / gsum).collect();
        let (w, h) = (self.width + 2, self.height + 2);
        let mut taps = vec![0.0; w * h];
        for r in 0..self.height {
            for c in 0..self.width {
                let v = self.at(r, c);
                if v == 0.0 {
                    continue;
                }
                for (dr, gr) in g.iter().enumerate() {
                    for (dc, gc) in g.iter().enumerate() {
                        taps[(r + dr) * w + c + dc] += v * gr * gc;
                    }
                }
            }
        }
        Self {
            length: self.length,
            theta: self.theta,
            width: w,
            height: h,
            taps,
        }
    }

    /// Nonzero taps as (row offset, column offset, weight) from the center.
    pub fn support(&self) -> Vec<(isize, isize, f64)> {
        let (cy, cx) = ((self.height / 2) as isize, (self.width / 2) as isize);
        let mut out = Vec::new();
        for r in 0..self.height {
            for c in 0..self.width {
                let v = self.at(r, c);
                if v != 0.0 {
                    out.push((r as isize - cy, c as isize - cx, v));
                }
            }
        }
        out
    }
}

/// Kernel for linear motion of `length` pixels at `theta` degrees.
///
/// The line segment passes through the kernel center. Each tap is weighted
/// by `1 - d`, where `d` is its distance to the segment (perpendicular
/// inside the segment, to the nearest end point beyond it), and taps further
/// than one pixel get zero. One half of the kernel is computed and the other
/// half is its 180 degree rotation, so the result is point symmetric.
pub fn motion_psf(length: u32, theta: f64) -> Result<MotionKernel> {
    if !theta.is_finite() || theta < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "motion angle {theta} must be finite and >= 0"
        )));
    }
    let theta = theta % 180.0;
    if length <= 1 {
        return Ok(MotionKernel {
            length,
            theta,
            ..MotionKernel::identity()
        });
    }
    const LINE_WIDTH: f64 = 1.0;
    let len = f64::from(length);
    let half = (len - 1.0) / 2.0;
    let phi = theta.to_radians();
    let (sin, cos) = phi.sin_cos();
    let xsign: f64 = if cos < 0.0 { -1.0 } else { 1.0 };
    let eps = f64::EPSILON;

    // extent of the quarter grid, shrunk by a hair so exact axis angles do
    // not pick up an empty extra column
    let sx = (half * cos + LINE_WIDTH * xsign - len * eps).trunc();
    let sy = (half * sin + LINE_WIDTH - len * eps).trunc();
    let nx = sx.abs() as usize + 1;
    let ny = sy as usize + 1;

    // quarter[y][i] at (x = xsign * i, y)
    let mut quarter = vec![0.0f64; nx * ny];
    for yi in 0..ny {
        for xi in 0..nx {
            let x = xsign * xi as f64;
            let y = yi as f64;
            let mut dist = y * cos - x * sin;
            let rad = (x * x + y * y).sqrt();
            if rad >= half && dist.abs() <= LINE_WIDTH {
                let along = half - ((x + dist * sin) / cos).abs();
                dist = (dist * dist + along * along).sqrt();
            }
            quarter[yi * nx + xi] = (LINE_WIDTH + eps - dist.abs()).max(0.0);
        }
    }

    // The quarter sits at offset (+y, +x) from the center and its 180 degree
    // rotation at (-y, -x); right-leaning lines are flipped vertically.
    let (w, h) = (2 * nx - 1, 2 * ny - 1);
    let mut taps = vec![0.0f64; w * h];
    let (cy, cx) = (ny - 1, nx - 1);
    let flip = cos > 0.0;
    for yi in 0..ny {
        for xi in 0..nx {
            let v = quarter[yi * nx + xi];
            let r = if flip { cy - yi } else { cy + yi };
            let c = cx + xi;
            taps[r * w + c] = v;
            taps[(2 * cy - r) * w + (2 * cx - c)] = v;
        }
    }
    let total: f64 = taps.iter().sum::<f64>() + eps * len * len;
    for t in &mut taps {
        *t /= total;
    }
    Ok(MotionKernel {
        length,
        theta,
        width: w,
        height: h,
        taps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_lengths_are_identity() {
        for l in [0, 1] {
            let k = motion_psf(l, 37.0).unwrap();
            assert_eq!((k.width, k.height), (1, 1));
            assert_eq!(k.taps, vec![1.0]);
        }
    }

    #[test]
    fn horizontal_line_is_uniform() {
        let k = motion_psf(5, 0.0).unwrap();
        assert_eq!((k.width, k.height), (5, 1));
        for &t in &k.taps {
            assert!((t - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn even_length_has_half_weight_ends() {
        let k = motion_psf(4, 0.0).unwrap();
        let expected = [0.125, 0.25, 0.25, 0.25, 0.125];
        assert_eq!(k.width, 5);
        for (t, e) in k.taps.iter().zip(expected) {
            assert!((t - e).abs() < 1e-12);
        }
    }

    #[test]
    fn vertical_is_transpose_of_horizontal() {
        for l in 0..=MAX_LENGTH {
            let h = motion_psf(l, 0.0).unwrap();
            let v = motion_psf(l, 90.0).unwrap();
            let t = h.transpose();
            assert_eq!((v.width, v.height), (t.width, t.height), "L={l}");
            for (a, b) in v.taps.iter().zip(&t.taps) {
                assert!((a - b).abs() < 1e-12, "L={l}");
            }
        }
    }

    #[test]
    fn angle_is_unsigned() {
        for l in [3, 9, 13, 20] {
            for th in [0.0, 35.0, 105.0, 170.0] {
                assert_eq!(motion_psf(l, th).unwrap(), motion_psf(l, th + 180.0).unwrap());
            }
        }
    }

    #[test]
    fn grid_kernels_are_normalized_and_symmetric() {
        for l in 0..=MAX_LENGTH {
            for step in 0..36 {
                let k = motion_psf(l, 5.0 * step as f64).unwrap();
                assert!((k.sum() - 1.0).abs() <= 1e-6);
                assert!(k.taps.iter().all(|&t| t >= 0.0));
                let n = k.taps.len();
                for i in 0..n {
                    assert_eq!(k.taps[i], k.taps[n - 1 - i]);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_angle() {
        assert!(motion_psf(5, f64::NAN).is_err());
        assert!(motion_psf(5, -5.0).is_err());
    }

    #[test]
    fn soften_keeps_mass_and_symmetry() {
        let k = motion_psf(9, 45.0).unwrap().soften(0.5);
        assert!((k.sum() - 1.0).abs() < 1e-12);
        let n = k.taps.len();
        for i in 0..n {
            assert!((k.taps[i] - k.taps[n - 1 - i]).abs() < 1e-15);
        }
    }
}
