//! Threshold-gated conditional interpolation on an expanded block image,
//! at LEVEL 1, LEVEL 2 and with the 3x3 split.

use resonant_sr::interp::{conditional_pass, decision_mask, level1_pass, level2_pass};
use resonant_sr::{compress, expand, Geometry, RasterImage, ThresholdTriple};

fn changed(a: &RasterImage, b: &RasterImage) -> usize {
    a.plane(0).iter().zip(b.plane(0)).filter(|(x, y)| x != y).count()
}

fn main() -> resonant_sr::Result<()> {
    let sharp = RasterImage::from_fn(32, 32, 1, |_, x, y| if x + y < 32 { 60 } else { 190 })?;
    let blocky = expand(&compress(&sharp, 4)?);

    for t in [ThresholdTriple::NEVER, ThresholdTriple::new(20, 20, 20), ThresholdTriple::ALWAYS] {
        let once = level1_pass(&blocky, 4, t)?;
        let smoothed = level2_pass(&level1_pass(&once, 4, ThresholdTriple::ALWAYS)?, ThresholdTriple::ALWAYS)?;
        let mask = decision_mask(&blocky, Geometry::Even(4), t)?;
        let averaged: usize = mask[0].iter().map(|m| m.iter().filter(|&&b| b).count()).sum();
        println!(
            "t={t}: {averaged} regions averaged, {} pixels changed, {} after presmooth + LEVEL 2",
            changed(&blocky, &once),
            changed(&blocky, &smoothed)
        );
    }

    let step3 = expand(&compress(&RasterImage::from_fn(30, 30, 1, |_, x, y| (x * 8 + y) as u8)?, 3)?);
    let out = conditional_pass(&step3, Geometry::Step3, ThresholdTriple::new(30, 30, 30))?;
    println!("3x3 split: {} pixels changed", changed(&step3, &out));
    Ok(())
}
