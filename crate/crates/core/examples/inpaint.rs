//! Fill in missing pixels with ISTA in a wavelet basis.

use resonant_sr::raster::psnr;
use resonant_sr::sparsity::{filter, ista_inpaint_with_trace, random_mask, SparseProblem};
use resonant_sr::RasterImage;

fn main() -> resonant_sr::Result<()> {
    let image = RasterImage::from_fn(32, 32, 1, |_, x, y| {
        let d = ((x as f64 - 12.0).powi(2) + (y as f64 - 18.0).powi(2)).sqrt();
        if d < 8.0 { 210 } else { 60 + (x * 3) as u8 }
    })?;
    let basis = filter("villasenor-1")?;

    for fraction in [1.0, 0.6, 0.3] {
        let mask = random_mask(32 * 32, fraction, 5)?;
        let known = mask.iter().filter(|&&m| m).count();
        let p = SparseProblem { iterations: 300, ..SparseProblem::new(mask, image.clone(), basis.clone())? };
        let (out, traces) = ista_inpaint_with_trace(&p)?;
        println!(
            "{:>3.0}% known ({known} px): {:.2} dB, objective {:.3} -> {:.3}",
            fraction * 100.0,
            psnr(&out, &image)?.min(99.0),
            traces[0].first().copied().unwrap_or_default(),
            traces[0].last().copied().unwrap_or_default()
        );
    }
    Ok(())
}
