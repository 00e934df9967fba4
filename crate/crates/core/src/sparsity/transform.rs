//! Separable 2-D transforms with whole-sample symmetric extension.
//!
//! Coefficients use the usual nested layout: after each level the low-low
//! band occupies the top-left quarter of the region transformed at that
//! level.

use super::filters::WaveletFilterPair;
use crate::error::{Error, Result};
use crate::raster::RealPlane;

/// Reflects an index into `0..n` about both end samples (period 2n - 2).
#[inline]
fn fold(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let i = i.rem_euclid(period);
    if i < n as isize {
        i as usize
    } else {
        (period - i) as usize
    }
}

/// One analysis level on an even-length signal.
pub fn analyze(f: &WaveletFilterPair, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let correlate = |taps: &[f64], center: isize| -> f64 {
        let m = (taps.len() / 2) as isize;
        taps.iter()
            .enumerate()
            .map(|(j, &t)| t * x[fold(center - (j as isize - m), n)])
            .sum()
    };
    let lo = (0..half).map(|k| correlate(&f.analysis_low, 2 * k as isize)).collect();
    let hi = (0..half).map(|k| correlate(&f.analysis_high, 2 * k as isize + 1)).collect();
    (lo, hi)
}

/// Inverse of [`analyze`]: lows sit on even samples, highs on odd ones.
pub fn synthesize(f: &WaveletFilterPair, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let n = lo.len() + hi.len();
    let mut out = vec![0.0; n];
    let upsampled = |band: &[f64], p: usize, odd: bool| -> f64 {
        if (p % 2 == 1) == odd {
            band[p / 2]
        } else {
            0.0
        }
    };
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        let m0 = (f.synthesis_low.len() / 2) as isize;
        for (j, &t) in f.synthesis_low.iter().enumerate() {
            acc += t * upsampled(lo, fold(i as isize - (j as isize - m0), n), false);
        }
        let m1 = (f.synthesis_high.len() / 2) as isize;
        for (j, &t) in f.synthesis_high.iter().enumerate() {
            acc += t * upsampled(hi, fold(i as isize - (j as isize - m1), n), true);
        }
        *o = acc;
    }
    out
}

/// Exact adjoint of [`synthesize`] as a linear map from (lo, hi) to the
/// signal.
pub fn synthesize_adjoint(f: &WaveletFilterPair, r: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = r.len();
    let mut lo = vec![0.0; n / 2];
    let mut hi = vec![0.0; n / 2];
    for (i, &ri) in r.iter().enumerate() {
        let m0 = (f.synthesis_low.len() / 2) as isize;
        for (j, &t) in f.synthesis_low.iter().enumerate() {
            let p = fold(i as isize - (j as isize - m0), n);
            if p.is_multiple_of(2) {
                lo[p / 2] += t * ri;
            }
        }
        let m1 = (f.synthesis_high.len() / 2) as isize;
        for (j, &t) in f.synthesis_high.iter().enumerate() {
            let p = fold(i as isize - (j as isize - m1), n);
            if p % 2 == 1 {
                hi[p / 2] += t * ri;
            }
        }
    }
    (lo, hi)
}

/// Wavelet coefficients of one plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients {
    pub width: usize,
    pub height: usize,
    pub levels: usize,
    pub values: Vec<f64>,
}

impl Coefficients {
    /// Size of the coarsest low-low band.
    pub fn approximation_size(&self) -> (usize, usize) {
        (self.width >> self.levels, self.height >> self.levels)
    }
}

/// Deepest level count for which both sides stay whole.
pub fn max_levels(width: usize, height: usize) -> usize {
    let mut levels = 0;
    let (mut w, mut h) = (width, height);
    while w % 2 == 0 && h % 2 == 0 && w >= 2 && h >= 2 {
        w /= 2;
        h /= 2;
        levels += 1;
    }
    levels
}

fn check_levels(width: usize, height: usize, levels: usize) -> Result<()> {
    if levels == 0 || levels > max_levels(width, height) {
        return Err(Error::InvalidArgument(format!(
            "{width}x{height} does not support {levels} transform levels (max {})",
            max_levels(width, height)
        )));
    }
    Ok(())
}

type Step1d<'a> = dyn Fn(&[f64]) -> Vec<f64> + 'a;

/// Applies `op` to every row, then every column, of the top-left w x h
/// region.
fn separable(values: &mut [f64], stride: usize, w: usize, h: usize, rows: &Step1d<'_>, cols: &Step1d<'_>, rows_first: bool) {
    let do_rows = |values: &mut [f64]| {
        for y in 0..h {
            let out = rows(&values[y * stride..y * stride + w]);
            values[y * stride..y * stride + w].copy_from_slice(&out);
        }
    };
    let do_cols = |values: &mut [f64]| {
        let mut col = vec![0.0; h];
        for x in 0..w {
            for y in 0..h {
                col[y] = values[y * stride + x];
            }
            let out = cols(&col);
            for y in 0..h {
                values[y * stride + x] = out[y];
            }
        }
    };
    if rows_first {
        do_rows(values);
        do_cols(values);
    } else {
        do_cols(values);
        do_rows(values);
    }
}

fn concat((a, b): (Vec<f64>, Vec<f64>)) -> Vec<f64> {
    let mut a = a;
    a.extend(b);
    a
}

/// Forward transform of raw values.
pub fn forward(f: &WaveletFilterPair, values: &[f64], width: usize, height: usize, levels: usize) -> Result<Coefficients> {
    check_levels(width, height, levels)?;
    let mut v = values.to_vec();
    let step = |x: &[f64]| concat(analyze(f, x));
    for l in 0..levels {
        separable(&mut v, width, width >> l, height >> l, &step, &step, true);
    }
    Ok(Coefficients {
        width,
        height,
        levels,
        values: v,
    })
}

/// Inverse transform to raw (unclamped) values.
pub fn inverse(f: &WaveletFilterPair, c: &Coefficients) -> Vec<f64> {
    let mut v = c.values.clone();
    let step = |x: &[f64]| {
        let half = x.len() / 2;
        synthesize(f, &x[..half], &x[half..])
    };
    for l in (0..c.levels).rev() {
        separable(&mut v, c.width, c.width >> l, c.height >> l, &step, &step, false);
    }
    v
}

/// Adjoint of [`inverse`].
pub fn inverse_adjoint(f: &WaveletFilterPair, values: &[f64], width: usize, height: usize, levels: usize) -> Coefficients {
    let mut v = values.to_vec();
    let step = |x: &[f64]| concat(synthesize_adjoint(f, x));
    for l in 0..levels {
        separable(&mut v, width, width >> l, height >> l, &step, &step, true);
    }
    Coefficients {
        width,
        height,
        levels,
        values: v,
    }
}

pub fn dwt2(plane: &RealPlane, f: &WaveletFilterPair, levels: usize) -> Result<Coefficients> {
    forward(f, &plane.values, plane.width, plane.height, levels)
}

pub fn idwt2(c: &Coefficients, f: &WaveletFilterPair) -> RealPlane {
    RealPlane::new(c.width, c.height, inverse(f, c)).expect("finite coefficients")
}
