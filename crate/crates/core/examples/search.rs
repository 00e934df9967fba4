//! Fit a pipeline to a reference by alternating grid search, on small grids
//! so it finishes in a few seconds.

use resonant_sr::deconv::{motion_psf, restore, NoiseMode};
use resonant_sr::pipeline::serialize;
use resonant_sr::search::{optimize_with_progress, SearchConfig};
use resonant_sr::{compress, RasterImage, RealPlane};

fn main() -> resonant_sr::Result<()> {
    let sharp = RasterImage::from_fn(32, 32, 1, |_, x, y| match (x / 8 + y / 8) % 3 {
        0 => 40,
        1 => 140,
        _ => 230,
    })?;
    let k = motion_psf(5, 30.0)?;
    let p = &sharp.to_real_planes()[0];
    let blurred = RasterImage::from_real_planes(&[RealPlane::new(32, 32, restore::convolve(&p.values, 32, 32, &k))?])?;
    let input = compress(&blurred, 4)?;

    let cfg = SearchConfig {
        lambda: 0.1,
        thresholds: vec![0, 10, 30, 90, 255],
        lengths: vec![0, 3, 5, 7],
        thetas: (0..12).map(|i| 15.0 * i as f64).collect(),
        amounts: vec![50, 100, 150],
        noises: vec![NoiseMode::No, NoiseMode::Auto],
        first_gammas: vec![1.0, 2.0],
        ..SearchConfig::default()
    };
    let state = optimize_with_progress(&input, &sharp, &cfg, |s| {
        let row = s.trace.last().unwrap();
        println!("trace row {}: total {:.1}", row.iteration, row.total);
    })?;
    print!("\n{}", state.trace_csv());
    print!("\n{}", serialize(&state.spec));
    Ok(())
}
