//! Run every shipped preset on a block-averaged input and show the
//! pipeline text format.

use resonant_sr::pipeline::{parse, preset, preset_names, run_with_view, serialize};
use resonant_sr::{compress, RasterImage, Stage};

fn main() -> resonant_sr::Result<()> {
    let face = RasterImage::from_fn(32, 32, 1, |_, x, y| {
        let d = ((x as f64 - 16.0).powi(2) + (y as f64 - 15.0).powi(2)).sqrt();
        if d < 11.0 { 180 + (y % 7) as u8 * 5 } else { 40 }
    })?;
    let input = compress(&face, 4)?;

    for name in preset_names() {
        let spec = preset(name)?;
        let (out, view) = run_with_view(&spec, &input)?;
        println!(
            "{name:<18} {:>2} stages  gamma {:<4}  output {}x{}  view {}x{}",
            spec.stages.len(),
            spec.gamma(),
            out.width(),
            out.height(),
            view.width(),
            view.height()
        );
    }

    let mut spec = preset("marie-bonneau-1")?;
    spec.name = "edited".into();
    spec.stages.truncate(4);
    spec.stages.push(Stage::level2(255, 255, 255));
    let text = serialize(&spec);
    println!("\n{text}");
    assert_eq!(parse(&text)?, spec);
    Ok(())
}
