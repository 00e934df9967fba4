//! Generate linear-motion kernels and print one as a table.

use resonant_sr::deconv::motion_psf;

fn main() -> resonant_sr::Result<()> {
    let k = motion_psf(13, 105.0)?;
    println!("L=13 theta=105: {}x{} taps, sum {:.6}", k.height, k.width, k.sum());
    for r in 0..k.height {
        let row: Vec<String> = (0..k.width).map(|c| format!("{:.4}", k.at(r, c))).collect();
        println!("  {}", row.join(" "));
    }

    for (length, theta) in [(0, 0.0), (1, 45.0), (5, 0.0), (5, 90.0), (9, 45.0), (20, 170.0)] {
        let k = motion_psf(length, theta)?;
        println!("L={length:>2} theta={theta:>5}: {}x{}", k.height, k.width);
    }
    Ok(())
}
