//! Image grids and a small log-log plot for the figure commands.

use resonant_sr::sparsity::DecayRow;
use resonant_sr::{RasterImage, Result};

const GAP: usize = 2;
const BACKGROUND: u8 = 255;
const PALETTE: [[u8; 3]; 5] = [[31, 119, 180], [214, 39, 40], [44, 160, 44], [148, 103, 189], [255, 127, 14]];

/// Tiles row-major `images` into `cols` columns separated by white gaps.
/// Cells may differ in size; each column and row takes its largest member.
pub fn tile(images: &[RasterImage], cols: usize) -> Result<RasterImage> {
    let cols = cols.max(1);
    let rows = images.len().div_ceil(cols);
    let channels = images.iter().map(RasterImage::channels).max().unwrap_or(1);
    let mut col_w = vec![0; cols];
    let mut row_h = vec![0; rows];
    for (i, img) in images.iter().enumerate() {
        col_w[i % cols] = col_w[i % cols].max(img.width());
        row_h[i / cols] = row_h[i / cols].max(img.height());
    }
    let offsets = |sizes: &[usize]| -> Vec<usize> {
        sizes
            .iter()
            .scan(0, |at, s| {
                let start = *at;
                *at += s + GAP;
                Some(start)
            })
            .collect()
    };
    let (xs, ys) = (offsets(&col_w), offsets(&row_h));
    let width = (col_w.iter().sum::<usize>() + GAP * (cols - 1)).max(1);
    let height = (row_h.iter().sum::<usize>() + GAP * rows.saturating_sub(1)).max(1);
    let mut out = RasterImage::filled(width, height, channels, BACKGROUND)?;
    for (i, img) in images.iter().enumerate() {
        let (ox, oy) = (xs[i % cols], ys[i / cols]);
        for c in 0..channels {
            let src = c.min(img.channels() - 1);
            for y in 0..img.height() {
                for x in 0..img.width() {
                    out.set(c, ox + x, oy + y, img.get(src, x, y));
                }
            }
        }
    }
    Ok(out)
}

/// Log-log plot of coefficient magnitude against rank, one colored curve
/// per series, on a white `width x height` canvas with black axes.
pub fn decay_plot(series: &[(String, Vec<DecayRow>)], width: usize, height: usize) -> Result<RasterImage> {
    let mut out = RasterImage::filled(width, height, 3, BACKGROUND)?;
    let margin = 8;
    let (pw, ph) = (width - 2 * margin, height - 2 * margin);
    for x in margin..width - margin {
        for c in 0..3 {
            out.set(c, x, height - margin, 0);
        }
    }
    for y in margin..=height - margin {
        for c in 0..3 {
            out.set(c, margin, y, 0);
        }
    }
    let positive = |rows: &[DecayRow]| rows.iter().filter(|r| r.magnitude > 0.0).map(|r| r.magnitude).collect::<Vec<_>>();
    let all: Vec<f64> = series.iter().flat_map(|(_, rows)| positive(rows)).collect();
    let (Some(&lo), Some(&hi)) = (
        all.iter().min_by(|a, b| a.total_cmp(b)),
        all.iter().max_by(|a, b| a.total_cmp(b)),
    ) else {
        return Ok(out);
    };
    let (llo, lhi) = (lo.log10(), hi.log10().max(lo.log10() + 1e-9));
    for (k, (_, rows)) in series.iter().enumerate() {
        let mags = positive(rows);
        if mags.is_empty() {
            continue;
        }
        let color = PALETTE[k % PALETTE.len()];
        let n = mags.len() as f64;
        let mut last_y = None;
        for px in 0..=pw {
            // rank grows geometrically across the axis
            let rank = n.powf(px as f64 / pw as f64).round().clamp(1.0, n) as usize;
            let t = (mags[rank - 1].log10() - llo) / (lhi - llo);
            let y = margin + ((1.0 - t) * ph as f64).round() as usize;
            let from = last_y.unwrap_or(y);
            // vertical run joins this column to the previous point
            for yy in from.min(y)..=from.max(y) {
                for (c, &v) in color.iter().enumerate() {
                    out.set(c, margin + px, yy, v);
                }
            }
            last_y = Some(y);
        }
    }
    Ok(out)
}
