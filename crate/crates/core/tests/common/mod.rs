#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resonant_sr::deconv::{motion_psf, restore};
use resonant_sr::raster::{RasterImage, RealPlane};
use resonant_sr::sparsity::{inverse, Coefficients, WaveletFilterPair};

/// The published 13x5 kernel for length 13 at 105 degrees, row by row.
pub const PRINTED_KERNEL: [[f64; 5]; 13] = [
    [0.0384, 0.0310, 0.0, 0.0, 0.0],
    [0.0273, 0.0507, 0.0, 0.0, 0.0],
    [0.0078, 0.0703, 0.0, 0.0, 0.0],
    [0.0, 0.0612, 0.0169, 0.0, 0.0],
    [0.0, 0.0416, 0.0364, 0.0, 0.0],
    [0.0, 0.0221, 0.0560, 0.0, 0.0],
    [0.0, 0.0026, 0.0755, 0.0026, 0.0],
    [0.0, 0.0, 0.0560, 0.0221, 0.0],
    [0.0, 0.0, 0.0364, 0.0416, 0.0],
    [0.0, 0.0, 0.0169, 0.0612, 0.0],
    [0.0, 0.0, 0.0, 0.0703, 0.0078],
    [0.0, 0.0, 0.0, 0.0507, 0.0273],
    [0.0, 0.0, 0.0, 0.0310, 0.0384],
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize, channels: usize) -> RasterImage {
    let planes = (0..channels)
        .map(|_| (0..w * h).map(|_| rng.random()).collect())
        .collect();
    RasterImage::from_planes(w, h, planes).unwrap()
}

/// Disk, checkered quadrant and a diagonal bar on a dark ground.
pub fn shapes(size: usize) -> RasterImage {
    let n = size as f64;
    RasterImage::from_fn(size, size, 1, |_, x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let d = ((xf - 0.3 * n).powi(2) + (yf - 0.6 * n).powi(2)).sqrt();
        if d < 0.15 * n {
            220
        } else if x > size / 2 && y < size / 2 && (x / 8 + y / 8) % 2 == 0 {
            200
        } else if (xf - yf - 0.4 * n).abs() < 1.5 && y > size / 2 {
            170
        } else {
            50
        }
    })
    .unwrap()
}

/// Piecewise-constant card: flat patches, a ramp-free step edge pattern.
pub fn test_card(size: usize) -> RasterImage {
    RasterImage::from_fn(size, size, 1, |_, x, y| {
        let patch = ((x * 4 / size) + 2 * (y * 4 / size)) % 5;
        [30, 90, 150, 200, 240][patch]
    })
    .unwrap()
}

pub fn blur(image: &RasterImage, length: u32, theta: f64) -> RasterImage {
    let k = motion_psf(length, theta).unwrap();
    let planes: Vec<RealPlane> = image
        .to_real_planes()
        .iter()
        .map(|p| RealPlane::new(p.width, p.height, restore::convolve(&p.values, p.width, p.height, &k)).unwrap())
        .collect();
    RasterImage::from_real_planes(&planes).unwrap()
}

/// A plane that is exactly `k`-sparse in `basis` at full depth: one DC
/// coefficient at mid-gray plus `k - 1` coarse-band coefficients scaled so
/// every pixel stays in [0.1, 0.9].
pub fn sparse_plane(basis: &WaveletFilterPair, size: usize, k: usize, seed: u64) -> (Vec<f64>, Coefficients) {
    let levels = resonant_sr::sparsity::max_levels(size, size);
    let mut r = rng(seed);
    let band = (size >> levels) * 8;
    let mut values = vec![0.0; size * size];
    let mut placed = 1;
    while placed < k {
        let (x, y) = (r.random_range(0..band), r.random_range(0..band));
        if (x, y) != (0, 0) && values[y * size + x] == 0.0 {
            let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
            values[y * size + x] = sign * r.random_range(0.5..1.0);
            placed += 1;
        }
    }
    let detail = inverse(basis, &Coefficients { width: size, height: size, levels, values: values.clone() });
    let peak = detail.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    values.iter_mut().for_each(|v| *v *= 0.4 / peak);
    // a constant plane c has the single coefficient c * 2^levels
    values[0] = 0.5 * (1u64 << levels) as f64;
    let c = Coefficients { width: size, height: size, levels, values };
    (inverse(basis, &c), c)
}
