//! Registered wavelet bases: perfect reconstruction, best-k approximation
//! and coefficient decay on a piecewise-constant card.

use resonant_sr::raster::psnr;
use resonant_sr::sparsity::{builtin_filters, decay_curve, dwt2, idwt2, topk_approx};
use resonant_sr::RasterImage;

fn main() -> resonant_sr::Result<()> {
    let card = RasterImage::from_fn(64, 64, 1, |_, x, y| [30, 90, 150, 200, 240][(x / 16 + 2 * (y / 16)) % 5])?;
    let plane = &card.to_real_planes()[0];

    for f in builtin_filters() {
        let back = idwt2(&dwt2(plane, &f, 3)?, &f);
        let err = plane.values.iter().zip(&back.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let decay = decay_curve(&card, &f)?;
        let head: f64 = decay.iter().take(10).map(|r| r.magnitude).sum::<f64>() / 10.0;
        print!("{:<14} PR err {err:.1e}  top-10 mean {head:.3}  |", f.name);
        for pct in [1.0, 5.0, 20.0] {
            let approx = topk_approx(&card, &f, pct)?;
            print!("  {pct}%: {:.1} dB", psnr(&approx, &card)?.min(99.0));
        }
        println!();
    }
    Ok(())
}
