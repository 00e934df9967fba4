use crate::error::{Error, Result};
use crate::raster::{l2_distance, resize_to, RasterImage, ResizeMethod};

/// Side of the square contrast windows.
pub const CONTRAST_WINDOW: usize = 8;

/// Fidelity plus weighted regularizer, kept apart for reporting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveBreakdown {
    /// Squared L2 distance to the reference.
    pub fidelity: f64,
    /// Raw regularizer value R (may be infinite).
    pub regularizer: f64,
    /// `lambda * R`, or exactly 0 when `lambda` is 0.
    pub regularizer_term: f64,
    pub total: f64,
}

/// Inverse of the summed Michelson contrasts of all 8x8 windows, summed
/// over channels. A window whose extremes are both 0 contributes 0; a zero
/// sum yields `f64::INFINITY`.
pub fn contrast_regularizer(h: &RasterImage) -> Result<f64> {
    let (w, ht) = (h.width(), h.height());
    if w % CONTRAST_WINDOW != 0 || ht % CONTRAST_WINDOW != 0 || w == 0 || ht == 0 {
        return Err(Error::NotDivisible {
            width: w,
            height: ht,
            step: CONTRAST_WINDOW,
        });
    }
    // numerators of (max - min) / (max + min), grouped by denominator, so
    // windows sharing a denominator are summed in integers
    let mut numerators = [0u64; 511];
    for plane in h.planes() {
        for wy in (0..ht).step_by(CONTRAST_WINDOW) {
            for wx in (0..w).step_by(CONTRAST_WINDOW) {
                let (mut lo, mut hi) = (u8::MAX, u8::MIN);
                for y in wy..wy + CONTRAST_WINDOW {
                    for &v in &plane[y * w + wx..y * w + wx + CONTRAST_WINDOW] {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                let (lo, hi) = (u64::from(lo), u64::from(hi));
                numerators[(hi + lo) as usize] += hi - lo;
            }
        }
    }
    let total: f64 = numerators
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &n)| n > 0)
        .map(|(d, &n)| n as f64 / d as f64)
        .sum();
    Ok(if total == 0.0 { f64::INFINITY } else { 1.0 / total })
}

/// Scores `candidate` against `reference` after an area-average resize to
/// the reference size.
pub fn objective(
    candidate: &RasterImage,
    reference: &RasterImage,
    lambda: f64,
) -> Result<ObjectiveBreakdown> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} must be finite and >= 0")));
    }
    if candidate.channels() != reference.channels() {
        return Err(Error::ShapeMismatch(format!(
            "candidate has {} channels, reference {}",
            candidate.channels(),
            reference.channels()
        )));
    }
    let view = resize_to(
        candidate,
        reference.width(),
        reference.height(),
        ResizeMethod::AreaAverage,
    )?;
    let fidelity = l2_distance(&view, reference)?;
    let regularizer = contrast_regularizer(&view)?;
    let regularizer_term = if lambda == 0.0 { 0.0 } else { lambda * regularizer };
    Ok(ObjectiveBreakdown {
        fidelity,
        regularizer,
        regularizer_term,
        total: fidelity + regularizer_term,
    })
}
