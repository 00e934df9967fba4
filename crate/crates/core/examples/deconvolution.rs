//! Blur a test pattern along a known direction, then recover it with
//! Richardson-Lucy and locate the blur with a length x angle sweep.

use resonant_sr::deconv::{deconvolve, motion_psf, restore, sweep, DeconvSettings, NoiseMode, Source, SweepSettings};
use resonant_sr::raster::psnr;
use resonant_sr::{RasterImage, RealPlane};

fn blur(image: &RasterImage, length: u32, theta: f64) -> resonant_sr::Result<RasterImage> {
    let k = motion_psf(length, theta)?;
    let planes: Vec<RealPlane> = image
        .to_real_planes()
        .iter()
        .map(|p| RealPlane::new(p.width, p.height, restore::convolve(&p.values, p.width, p.height, &k)))
        .collect::<resonant_sr::Result<_>>()?;
    RasterImage::from_real_planes(&planes)
}

fn main() -> resonant_sr::Result<()> {
    let sharp = RasterImage::from_fn(48, 48, 1, |_, x, y| {
        let disk = (x as f64 - 16.0).powi(2) + (y as f64 - 30.0).powi(2) < 60.0;
        let checker = x > 24 && y < 24 && (x / 6 + y / 6) % 2 == 0;
        if disk { 220 } else if checker { 200 } else { 50 }
    })?;
    let blurred = blur(&sharp, 9, 45.0)?;
    println!("blurred: {:.2} dB", psnr(&blurred, &sharp)?);

    for settings in [
        DeconvSettings::motion(9, 45.0),
        DeconvSettings::motion(9, 135.0),
        DeconvSettings { amount: 200, ..DeconvSettings::motion(9, 45.0) },
        DeconvSettings { source: Source::Ofc, noise: NoiseMode::Auto, ..DeconvSettings::motion(9, 45.0) },
    ] {
        let out = deconvolve(&blurred, &settings)?;
        println!(
            "L={} theta={} {} {}% noise={}: {:.2} dB",
            settings.length,
            settings.theta,
            settings.source,
            settings.amount,
            settings.noise,
            psnr(&out, &sharp)?
        );
    }

    let lengths: Vec<u32> = (5..=13).collect();
    let thetas: Vec<f64> = (0..36).map(|i| 5.0 * i as f64).collect();
    let grid = sweep(&blurred, &lengths, &thetas, &SweepSettings::default(), Some((&sharp, 0.0)))?;
    let best = grid.best().expect("reference given");
    println!(
        "sweep over {} cells: best L={} theta={} (fidelity {})",
        grid.cells.len(),
        best.length,
        best.theta,
        best.objective.unwrap().fidelity
    );
    Ok(())
}
