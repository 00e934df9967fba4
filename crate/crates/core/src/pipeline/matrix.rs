//! Import of the three-column parameter matrix.
//!
//! Rows are classified by content. A row naming a source (DVC or OFC)
//! describes a deconvolution and must directly follow a numeric
//! `gamma L theta` row. Every other numeric row is a LEVEL 1 threshold row.
//! When the matrix ends in two all-255 threshold rows, the last one becomes
//! the LEVEL 2 pass.

use super::{PipelineSpec, Stage};
use crate::deconv::{DeconvSettings, NoiseMode, Source};
use crate::error::{Error, Result};

/// Splits matrix text into rows of three cells. Cells may be separated by
/// commas, semicolons, `&` or whitespace; `#` starts a comment.
pub fn parse_matrix_rows(text: &str) -> Result<Vec<[String; 3]>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim().trim_end_matches('\\');
        let cells: Vec<&str> = content
            .split(|c: char| c == ',' || c == ';' || c == '&' || c.is_whitespace())
            .filter(|c| !c.is_empty())
            .collect();
        match cells.len() {
            0 => continue,
            3 => rows.push([cells[0].to_string(), cells[1].to_string(), cells[2].to_string()]),
            n => {
                return Err(Error::Matrix {
                    row: i + 1,
                    message: format!("expected 3 cells, found {n}"),
                })
            }
        }
    }
    Ok(rows)
}

enum Row {
    Numbers([f64; 3]),
    Source(Source, u32, NoiseMode),
}

fn number(cell: &str) -> Option<f64> {
    let cell = cell
        .trim_end_matches("^{\\circ}")
        .trim_end_matches('°')
        .trim_end_matches("deg");
    cell.parse().ok().filter(|v: &f64| v.is_finite())
}

fn classify(row: usize, cells: &[String; 3]) -> Result<Row> {
    let err = |message: String| Error::Matrix { row, message };
    let sources: Vec<Source> = cells.iter().filter_map(|c| c.parse().ok()).collect();
    if sources.is_empty() {
        let mut nums = [0.0; 3];
        for (slot, cell) in nums.iter_mut().zip(cells) {
            *slot = number(cell).ok_or_else(|| err(format!("{cell:?} is neither a number nor a source")))?;
        }
        return Ok(Row::Numbers(nums));
    }
    if sources.len() > 1 {
        return Err(err("more than one source cell".into()));
    }
    let mut amount = None;
    let mut noise = None;
    for cell in cells {
        if cell.parse::<Source>().is_ok() {
            continue;
        }
        if let Ok(n) = cell.parse::<NoiseMode>() {
            noise = Some(n);
        } else if let Some(a) = number(cell.trim_end_matches('%')) {
            if a.fract() != 0.0 || !(0.0..=f64::from(crate::deconv::MAX_AMOUNT)).contains(&a) {
                return Err(err(format!("amount {cell:?} out of range")));
            }
            amount = Some(a as u32);
        } else {
            return Err(err(format!("unrecognized cell {cell:?}")));
        }
    }
    match (amount, noise) {
        (Some(a), Some(n)) => Ok(Row::Source(sources[0], a, n)),
        _ => Err(err("a source row needs source, amount and noise".into())),
    }
}

fn threshold(row: usize, v: f64) -> Result<u8> {
    if v.fract() == 0.0 && (0.0..=255.0).contains(&v) {
        Ok(v as u8)
    } else {
        Err(Error::Matrix {
            row,
            message: format!("threshold {v} is not an integer in 0..=255"),
        })
    }
}

/// Converts matrix rows into a stage list. Deconvolution rows with gamma
/// other than 1 emit a separate magnify stage first.
pub fn import_parameter_matrix(name: &str, rows: &[[String; 3]]) -> Result<PipelineSpec> {
    let classified: Vec<Row> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| classify(i + 1, r))
        .collect::<Result<_>>()?;
    let mut stages = Vec::new();
    let mut last_thresholds: Vec<(usize, [u8; 3])> = Vec::new();
    let mut i = 0;
    while i < classified.len() {
        let row = i + 1;
        match (&classified[i], classified.get(i + 1)) {
            (Row::Numbers([gamma, length, theta]), Some(Row::Source(source, amount, noise))) => {
                if length.fract() != 0.0 || *length < 0.0 {
                    return Err(Error::Matrix {
                        row,
                        message: format!("length {length} is not a nonnegative integer"),
                    });
                }
                let settings = DeconvSettings {
                    gamma: 1.0,
                    length: *length as u32,
                    theta: *theta,
                    source: *source,
                    amount: *amount,
                    noise: *noise,
                };
                settings.validate().map_err(|e| Error::Matrix {
                    row,
                    message: e.to_string(),
                })?;
                if *gamma != 1.0 {
                    stages.push(Stage::magnify(*gamma));
                }
                stages.push(Stage::deconvolve(settings));
                i += 2;
            }
            (Row::Numbers(p), _) => {
                let t = [threshold(row, p[0])?, threshold(row, p[1])?, threshold(row, p[2])?];
                last_thresholds.push((stages.len(), t));
                stages.push(Stage::level1(t[0], t[1], t[2]));
                i += 1;
            }
            (Row::Source(..), _) => {
                return Err(Error::Matrix {
                    row,
                    message: "source row without a preceding gamma/L/theta row".into(),
                })
            }
        }
    }
    // trailing pair of presmooth rows: the last one runs at pixel scale
    let n = stages.len();
    if let [.., (a, ta), (b, tb)] = last_thresholds[..] {
        if b + 1 == n && a + 1 == b && ta == [255; 3] && tb == [255; 3] {
            stages[b] = Stage::level2(255, 255, 255);
        }
    }
    let spec = PipelineSpec::new(name, stages);
    spec.validate()?;
    Ok(spec)
}
