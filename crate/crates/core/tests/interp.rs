mod common;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use resonant_sr::interp::{conditional_pass, decision_mask};
use resonant_sr::{Geometry, RasterImage, ThresholdTriple};

const CASES: usize = 1000;

fn random_case(r: &mut ChaCha8Rng) -> (RasterImage, Geometry) {
    let geometry = [Geometry::Even(2), Geometry::Even(4), Geometry::Step3][r.random_range(0..3)];
    let s = geometry.block_size();
    let (gw, gh) = (r.random_range(1..=6), r.random_range(1..=6));
    let channels = if r.random_range(0..4) == 0 { 3 } else { 1 };
    // narrow value ranges make threshold decisions go both ways
    let spread = [8u8, 40, 255][r.random_range(0..3)];
    let base: u8 = r.random_range(0..=255 - spread);
    let planes = (0..channels)
        .map(|_| (0..gw * s * gh * s).map(|_| base + r.random_range(0..=spread)).collect())
        .collect();
    (RasterImage::from_planes(gw * s, gh * s, planes).unwrap(), geometry)
}

fn random_triple(r: &mut ChaCha8Rng) -> ThresholdTriple {
    ThresholdTriple::new(r.random(), r.random(), r.random())
}

/// Straight-line restatement of the always-average rule.
fn always_oracle(img: &RasterImage, geometry: Geometry) -> RasterImage {
    let s = geometry.block_size();
    let q = if s == 3 { 2 } else { s / 2 };
    let (gw, gh) = (img.width() / s, img.height() / s);
    let mut out = img.clone();
    for c in 0..img.channels() {
        let mean = |bx: usize, by: usize| {
            let mut sum = 0.0;
            for y in 0..s {
                for x in 0..s {
                    sum += img.get(c, bx * s + x, by * s + y) as f64;
                }
            }
            (sum / (s * s) as f64).round()
        };
        for by in 0..gh {
            for bx in 0..gw {
                for (dx, dy) in [(1, 0), (0, 1), (1, 1)] {
                    if bx + dx >= gw || by + dy >= gh {
                        continue;
                    }
                    let v = ((mean(bx, by) + mean(bx + dx, by + dy)) / 2.0).round() as u8;
                    let xs = if dx == 1 { q..s } else { 0..q };
                    let ys = if dy == 1 { q..s } else { 0..q };
                    for y in ys.clone() {
                        for x in xs.clone() {
                            out.set(c, bx * s + x, by * s + y, v);
                        }
                    }
                }
            }
        }
    }
    out
}

#[test]
fn zero_thresholds_are_the_identity() {
    let mut r = common::rng(10);
    for _ in 0..CASES {
        let (img, g) = random_case(&mut r);
        assert_eq!(conditional_pass(&img, g, ThresholdTriple::NEVER).unwrap(), img);
    }
}

#[test]
fn full_thresholds_match_oracle() {
    let mut r = common::rng(11);
    for i in 0..CASES {
        let (img, g) = random_case(&mut r);
        let got = conditional_pass(&img, g, ThresholdTriple::ALWAYS).unwrap();
        assert_eq!(got, always_oracle(&img, g), "case {i} {g:?}");
    }
}

#[test]
fn top_left_region_is_never_written() {
    let mut r = common::rng(12);
    for _ in 0..CASES {
        let (img, g) = random_case(&mut r);
        let out = conditional_pass(&img, g, random_triple(&mut r)).unwrap();
        let s = g.block_size();
        let q = if s == 3 { 2 } else { s / 2 };
        for c in 0..img.channels() {
            for y in 0..img.height() {
                for x in 0..img.width() {
                    if x % s < q && y % s < q {
                        assert_eq!(out.get(c, x, y), img.get(c, x, y));
                    }
                }
            }
        }
    }
}

#[test]
fn larger_thresholds_average_a_superset() {
    let mut r = common::rng(13);
    for _ in 0..CASES {
        let (img, g) = random_case(&mut r);
        let (a, b) = (random_triple(&mut r), random_triple(&mut r));
        let lo = ThresholdTriple::new(a.p2.min(b.p2), a.p3.min(b.p3), a.p4.min(b.p4));
        let hi = ThresholdTriple::new(a.p2.max(b.p2), a.p3.max(b.p3), a.p4.max(b.p4));
        let (ml, mh) = (decision_mask(&img, g, lo).unwrap(), decision_mask(&img, g, hi).unwrap());
        for (pl, ph) in ml.iter().zip(&mh) {
            for (bl, bh) in pl.iter().zip(ph) {
                for k in 0..3 {
                    assert!(!bl[k] || bh[k]);
                }
            }
        }
    }
}

#[test]
fn masks_agree_with_pass_output() {
    let mut r = common::rng(14);
    for _ in 0..200 {
        let (img, g) = random_case(&mut r);
        let t = random_triple(&mut r);
        let out = conditional_pass(&img, g, t).unwrap();
        let mask = decision_mask(&img, g, t).unwrap();
        let s = g.block_size();
        let q = if s == 3 { 2 } else { s / 2 };
        let gw = img.width() / s;
        for (c, m) in mask.iter().enumerate() {
            for (i, regions) in m.iter().enumerate() {
                let (bx, by) = (i % gw, i / gw);
                for (k, (ox, oy)) in [(q, 0), (0, q), (q, q)].into_iter().enumerate() {
                    if regions[k] {
                        continue;
                    }
                    // a region left alone keeps its input pixels
                    let (x, y) = (bx * s + ox, by * s + oy);
                    assert_eq!(out.get(c, x, y), img.get(c, x, y));
                }
            }
        }
    }
}

#[test]
fn mismatched_sizes_are_rejected() {
    let img = RasterImage::filled(6, 6, 1, 0).unwrap();
    assert!(conditional_pass(&img, Geometry::Even(4), ThresholdTriple::ALWAYS).is_err());
    assert!(conditional_pass(&img, Geometry::Even(3), ThresholdTriple::ALWAYS).is_err());
    assert!(conditional_pass(&img, Geometry::Step3, ThresholdTriple::ALWAYS).is_ok());
}
