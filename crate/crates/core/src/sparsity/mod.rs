//! Wavelet sparsity baselines: top-k approximation, coefficient decay,
//! L1 inpainting, and coherence / RIP estimates for small matrices.

mod filters;
mod transform;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub use filters::{builtin_filters, filter, parse_filters, WaveletFilterPair};
pub use transform::{dwt2, forward, idwt2, inverse, inverse_adjoint, max_levels, Coefficients};

use crate::error::{Error, Result};

/// Dense real matrix used by the sensing estimates.
pub type Matrix = DMatrix<f64>;
use crate::raster::{RasterImage, RealPlane};

/// Level count used for approximations: 3, or fewer if the size demands.
pub fn default_levels(width: usize, height: usize) -> usize {
    max_levels(width, height).min(3)
}

fn levels_for(image: &RasterImage) -> Result<usize> {
    match default_levels(image.width(), image.height()) {
        0 => Err(Error::InvalidArgument(format!(
            "{}x{} image cannot be transformed",
            image.width(),
            image.height()
        ))),
        l => Ok(l),
    }
}

/// Keeps the `round(percent / 100 * N)` largest coefficients of each
/// channel (N coefficients per channel) and reconstructs.
pub fn topk_approx(image: &RasterImage, basis: &WaveletFilterPair, percent: f64) -> Result<RasterImage> {
    if !(percent > 0.0 && percent <= 100.0) {
        return Err(Error::InvalidArgument(format!("percent {percent} outside (0, 100]")));
    }
    let levels = levels_for(image)?;
    let planes = image
        .to_real_planes()
        .iter()
        .map(|p| {
            let mut c = dwt2(p, basis, levels)?;
            let k = (percent / 100.0 * c.values.len() as f64).round() as usize;
            keep_largest(&mut c.values, k);
            Ok(idwt2(&c, basis))
        })
        .collect::<Result<Vec<_>>>()?;
    RasterImage::from_real_planes(&planes)
}

/// Zeroes all but the `k` largest magnitudes; ties keep the lower index.
fn keep_largest(values: &mut [f64], k: usize) {
    if k >= values.len() {
        return;
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    for &i in &order[k..] {
        values[i] = 0.0;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayRow {
    pub rank: usize,
    pub magnitude: f64,
    pub cumulative: f64,
}

/// Coefficient magnitudes of all channels at full depth, largest first,
/// with running sums.
pub fn decay_curve(image: &RasterImage, basis: &WaveletFilterPair) -> Result<Vec<DecayRow>> {
    let levels = max_levels(image.width(), image.height());
    if levels == 0 {
        return Err(Error::InvalidArgument("image sides must be even".into()));
    }
    let mut mags = Vec::new();
    for p in image.to_real_planes() {
        mags.extend(dwt2(&p, basis, levels)?.values.iter().map(|v| v.abs()));
    }
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    Ok(mags
        .into_iter()
        .enumerate()
        .map(|(i, magnitude)| {
            cumulative += magnitude;
            DecayRow {
                rank: i + 1,
                magnitude,
                cumulative,
            }
        })
        .collect())
}

pub fn decay_csv(rows: &[DecayRow]) -> String {
    let mut out = String::from("rank,magnitude,cumulative\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.rank, r.magnitude, r.cumulative));
    }
    out
}

/// Inpainting from a subset of known pixels.
#[derive(Clone, Debug)]
pub struct SparseProblem {
    /// Row-major, true where the pixel is known.
    pub mask: Vec<bool>,
    /// Values at unknown positions are ignored.
    pub observed: RasterImage,
    pub basis: WaveletFilterPair,
    pub levels: usize,
    pub mu: f64,
    pub iterations: usize,
}

impl SparseProblem {
    pub fn new(mask: Vec<bool>, observed: RasterImage, basis: WaveletFilterPair) -> Result<Self> {
        let levels = levels_for(&observed)?;
        Ok(Self {
            mask,
            observed,
            basis,
            levels,
            mu: 1e-2,
            iterations: 500,
        })
    }

    fn validate(&self) -> Result<()> {
        let n = self.observed.width() * self.observed.height();
        if self.mask.len() != n {
            return Err(Error::ShapeMismatch(format!("mask has {} entries, image {n}", self.mask.len())));
        }
        if !self.mask.iter().any(|&m| m) {
            return Err(Error::InvalidArgument("mask has no known pixels".into()));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu {} must be positive", self.mu)));
        }
        Ok(())
    }
}

fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// Largest eigenvalue of `S^T S` for the synthesis operator S, by power
/// iteration.
fn synthesis_norm_sq(basis: &WaveletFilterPair, w: usize, h: usize, levels: usize) -> f64 {
    let mut v: Vec<f64> = (0..w * h).map(|i| 1.0 + ((i * 7) % 13) as f64 / 13.0).collect();
    let mut lambda = 0.0;
    for _ in 0..100 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let c = Coefficients { width: w, height: h, levels, values: v.clone() };
        let img = inverse(basis, &c);
        v = inverse_adjoint(basis, &img, w, h, levels).values;
        lambda = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    lambda
}

/// Per-channel objective values `0.5 ||M S s - y||^2 + mu ||s||_1` after
/// each iteration, plus the reconstruction.
pub fn ista_inpaint_with_trace(p: &SparseProblem) -> Result<(RasterImage, Vec<Vec<f64>>)> {
    p.validate()?;
    let (w, h) = (p.observed.width(), p.observed.height());
    let step = 1.0 / (1.01 * synthesis_norm_sq(&p.basis, w, h, p.levels));
    let mut traces = Vec::new();
    let mut planes = Vec::new();
    for y in p.observed.to_real_planes() {
        let known: Vec<f64> = y.values.iter().zip(&p.mask).filter(|(_, &m)| m).map(|(v, _)| *v).collect();
        let fill = known.iter().sum::<f64>() / known.len() as f64;
        let start: Vec<f64> = y.values.iter().zip(&p.mask).map(|(&v, &m)| if m { v } else { fill }).collect();
        let mut s = forward(&p.basis, &start, w, h, p.levels)?;
        let mut trace = Vec::with_capacity(p.iterations);
        for _ in 0..p.iterations {
            let x = inverse(&p.basis, &s);
            let residual: Vec<f64> = x
                .iter()
                .zip(&y.values)
                .zip(&p.mask)
                .map(|((xv, yv), &m)| if m { xv - yv } else { 0.0 })
                .collect();
            let grad = inverse_adjoint(&p.basis, &residual, w, h, p.levels);
            for (c, g) in s.values.iter_mut().zip(&grad.values) {
                *c = soft(*c - step * g, step * p.mu);
            }
            trace.push(ista_objective(p, &s, &y.values));
        }
        let x = inverse(&p.basis, &s);
        let values = x
            .iter()
            .zip(&y.values)
            .zip(&p.mask)
            .map(|((xv, yv), &m)| if m { *yv } else { *xv })
            .collect();
        planes.push(RealPlane::new(w, h, values)?);
        traces.push(trace);
    }
    Ok((RasterImage::from_real_planes(&planes)?, traces))
}

fn ista_objective(p: &SparseProblem, s: &Coefficients, y: &[f64]) -> f64 {
    let x = inverse(&p.basis, s);
    let fit: f64 = x
        .iter()
        .zip(y)
        .zip(&p.mask)
        .filter(|(_, &m)| m)
        .map(|((a, b), _)| (a - b) * (a - b))
        .sum();
    0.5 * fit + p.mu * s.values.iter().map(|v| v.abs()).sum::<f64>()
}

/// Iterative soft thresholding in the synthesis basis; known pixels are
/// copied into the result.
pub fn ista_inpaint(p: &SparseProblem) -> Result<RasterImage> {
    ista_inpaint_with_trace(p).map(|(img, _)| img)
}

/// Row-major mask where each pixel is known with probability `fraction`.
pub fn random_mask(len: usize, fraction: f64, seed: u64) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!("fraction {fraction} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..len).map(|_| rng.random::<f64>() < fraction).collect())
}

/// `rows x cols` matrix with entries drawn from N(0, 1/rows), filled
/// column by column.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Result<DMatrix<f64>> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(format!("{rows}x{cols} matrix is empty")));
    }
    let normal = Normal::new(0.0, 1.0 / (rows as f64).sqrt()).expect("positive deviation");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(DMatrix::from_fn(rows, cols, |_, _| normal.sample(&mut rng)))
}

/// Dense matrix from text: one row per line, entries separated by commas,
/// semicolons or whitespace. Blank lines and `#` comments are skipped.
pub fn parse_dense_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Syntax {
                    line: i + 1,
                    column: line.find(t).unwrap_or(0) + 1,
                    message: format!("{t:?} is not a finite number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::ShapeMismatch(format!(
                    "line {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument("matrix is empty".into()));
    }
    let cols = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

/// Largest normalized absolute inner product between distinct columns.
pub fn coherence(theta: &DMatrix<f64>) -> Result<f64> {
    if theta.ncols() < 2 {
        return Err(Error::InvalidArgument("coherence needs at least two columns".into()));
    }
    let norms: Vec<f64> = theta.column_iter().map(|c| c.norm()).collect();
    if let Some(j) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::InvalidArgument(format!("column {j} is zero")));
    }
    let mut mu: f64 = 0.0;
    for i in 0..theta.ncols() {
        for j in i + 1..theta.ncols() {
            let dot = theta.column(i).dot(&theta.column(j));
            mu = mu.max(dot.abs() / (norms[i] * norms[j]));
        }
    }
    Ok(mu.min(1.0))
}

pub const MAX_RIP_COLUMNS: usize = 16;

/// Smallest delta with `(1-d)|x|^2 <= |Ax|^2 <= (1+d)|x|^2` over every
/// `k`-column support, by enumerating supports.
pub fn estimate_rip_delta(matrix: &DMatrix<f64>, k: usize) -> Result<f64> {
    let n = matrix.ncols();
    if n > MAX_RIP_COLUMNS {
        return Err(Error::InvalidArgument(format!("{n} columns exceeds {MAX_RIP_COLUMNS}")));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k={k} outside 1..={n}")));
    }
    let mut delta: f64 = 0.0;
    let mut support: Vec<usize> = (0..k).collect();
    loop {
        let sub = DMatrix::from_fn(matrix.nrows(), k, |r, c| matrix[(r, support[c])]);
        let sv = sub.singular_values();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for &s in sv.iter() {
            lo = lo.min(s);
            hi = hi.max(s);
        }
        // fewer rows than columns leaves zero singular values implicit
        if sv.len() < k {
            lo = 0.0;
        }
        delta = delta.max(hi * hi - 1.0).max(1.0 - lo * lo);
        // next combination in lexicographic order
        let Some(i) = (0..k).rev().find(|&i| support[i] < n - k + i) else {
            break;
        };
        support[i] += 1;
        for j in i + 1..k {
            support[j] = support[j - 1] + 1;
        }
    }
    Ok(delta.max(0.0))
}
