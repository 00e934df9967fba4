//! Block-average a synthetic image, write it as `.lab`, read it back and
//! expand it to a block-constant raster.

use std::fs::File;
use std::io::BufReader;

use resonant_sr::raster::reconstruction_residual;
use resonant_sr::{compress, expand, read_lab, write_lab, RasterImage};

fn main() -> resonant_sr::Result<()> {
    let out_dir = std::env::temp_dir().join("resonant-sr-examples");
    std::fs::create_dir_all(&out_dir)?;

    // a soft radial gradient in three channels
    let image = RasterImage::from_fn(48, 48, 3, |c, x, y| {
        let d = ((x as f64 - 24.0).powi(2) + (y as f64 - 24.0).powi(2)).sqrt();
        (255.0 - d * (4.0 + c as f64)).clamp(0.0, 255.0) as u8
    })?;

    for step in [2, 3, 4] {
        let lab = compress(&image, step)?;
        let path = out_dir.join(format!("gradient-step{step}.lab"));
        write_lab(&lab, &mut File::create(&path)?)?;
        let back = read_lab(&mut BufReader::new(File::open(&path)?))?;
        assert_eq!(back, lab);

        let expanded = expand(&back);
        let residual = reconstruction_residual(&expanded, &back.to_observation(), step)?;
        println!(
            "step {step}: {}x{} grid, {} bytes on disk, expand residual {residual}",
            back.grid_size().0,
            back.grid_size().1,
            std::fs::metadata(&path)?.len()
        );
        expanded.save_png(out_dir.join(format!("gradient-step{step}.png")))?;
    }
    println!("wrote files to {}", out_dir.display());
    Ok(())
}
