//! Plane-level filters: replicate-boundary convolution, Richardson-Lucy and
//! the median-based noise prefilters.

use super::psf::MotionKernel;
use crate::raster::RealPlane;

/// Floor applied to the reblurred estimate before dividing.
pub const DIVISION_GUARD: f64 = 1e-6;

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Convolution with edge replication. Kernels here are point symmetric, so
/// correlation and convolution coincide.
pub fn convolve(values: &[f64], width: usize, height: usize, kernel: &MotionKernel) -> Vec<f64> {
    let support = kernel.support();
    convolve_support(values, width, height, &support)
}

fn convolve_support(
    values: &[f64],
    width: usize,
    height: usize,
    support: &[(isize, isize, f64)],
) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    let interior = |y: usize, x: usize| {
        support.iter().all(|&(dy, dx, _)| {
            let (yy, xx) = (y as isize + dy, x as isize + dx);
            yy >= 0 && xx >= 0 && (yy as usize) < height && (xx as usize) < width
        })
    };
    let max_dy = support.iter().map(|s| s.0.unsigned_abs()).max().unwrap_or(0);
    let max_dx = support.iter().map(|s| s.1.unsigned_abs()).max().unwrap_or(0);
    for y in 0..height {
        for x in 0..width {
            let fast = y >= max_dy && y + max_dy < height && x >= max_dx && x + max_dx < width;
            let mut acc = 0.0;
            if fast {
                debug_assert!(interior(y, x));
                for &(dy, dx, w) in support {
                    let idx = (y as isize + dy) as usize * width + (x as isize + dx) as usize;
                    acc += w * values[idx];
                }
            } else {
                for &(dy, dx, w) in support {
                    let yy = clamp_index(y as isize + dy, height);
                    let xx = clamp_index(x as isize + dx, width);
                    acc += w * values[yy * width + xx];
                }
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// One Richardson-Lucy update `x <- x * K^T (y / max(K x, guard))`.
pub fn richardson_lucy_step(
    estimate: &mut [f64],
    observed: &[f64],
    width: usize,
    height: usize,
    support: &[(isize, isize, f64)],
) {
    let reblurred = convolve_support(estimate, width, height, support);
    let ratio: Vec<f64> = observed
        .iter()
        .zip(&reblurred)
        .map(|(&o, &b)| o / b.max(DIVISION_GUARD))
        .collect();
    // K^T is K rotated by 180 degrees, which is K itself for motion kernels
    let correction = convolve_support(&ratio, width, height, support);
    for (e, c) in estimate.iter_mut().zip(correction) {
        *e *= c;
    }
}

/// Runs `iterations` Richardson-Lucy steps starting from the observation.
/// The result is not clamped.
pub fn richardson_lucy(observed: &RealPlane, kernel: &MotionKernel, iterations: usize) -> Vec<f64> {
    let mut estimate = observed.values.clone();
    if kernel.is_identity() {
        return estimate;
    }
    let support = kernel.support();
    for _ in 0..iterations {
        richardson_lucy_step(
            &mut estimate,
            &observed.values,
            observed.width,
            observed.height,
            &support,
        );
    }
    estimate
}

/// 3x3 median with edge replication.
pub fn median3(plane: &RealPlane) -> Vec<f64> {
    let (w, h) = (plane.width, plane.height);
    let mut out = Vec::with_capacity(w * h);
    let mut window = [0.0f64; 9];
    for y in 0..h {
        for x in 0..w {
            let mut k = 0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let yy = clamp_index(y as isize + dy, h);
                    let xx = clamp_index(x as isize + dx, w);
                    window[k] = plane.values[yy * w + xx];
                    k += 1;
                }
            }
            window.sort_unstable_by(f64::total_cmp);
            out.push(window[4]);
        }
    }
    out
}
