use crate::error::{Error, Result};

const BUILTIN: &str = include_str!("../../filters/wavelets.txt");

/// A symmetric biorthogonal filter bank. Taps are stored in full, centered.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletFilterPair {
    pub name: String,
    pub analysis_low: Vec<f64>,
    pub synthesis_low: Vec<f64>,
    pub analysis_high: Vec<f64>,
    pub synthesis_high: Vec<f64>,
}

fn mirror(half: &[f64]) -> Vec<f64> {
    half.iter().rev().chain(&half[1..]).copied().collect()
}

/// Alternates signs outward from the center tap.
fn modulate(taps: &[f64]) -> Vec<f64> {
    let m = taps.len() / 2;
    taps.iter()
        .enumerate()
        .map(|(j, &t)| if (j + m).is_multiple_of(2) { t } else { -t })
        .collect()
}

impl WaveletFilterPair {
    /// Builds a pair from center-first half filters and checks perfect
    /// reconstruction.
    pub fn from_half_taps(name: &str, analysis: &[f64], synthesis: &[f64]) -> Result<Self> {
        if analysis.is_empty() || synthesis.is_empty() {
            return Err(Error::Filter {
                name: name.into(),
                message: "empty tap list".into(),
            });
        }
        if analysis.iter().chain(synthesis).any(|t| !t.is_finite()) {
            return Err(Error::Filter {
                name: name.into(),
                message: "non-finite tap".into(),
            });
        }
        let analysis_low = mirror(analysis);
        let synthesis_low = mirror(synthesis);
        let pair = Self {
            name: name.into(),
            analysis_high: modulate(&synthesis_low),
            synthesis_high: modulate(&analysis_low),
            analysis_low,
            synthesis_low,
        };
        pair.check_reconstruction()?;
        Ok(pair)
    }

    fn check_reconstruction(&self) -> Result<()> {
        for n in [2usize, 4, 8, 16, 32] {
            // deterministic, irregular test signal
            let x: Vec<f64> = (0..n).map(|i| ((i * 7919 + 13) % 101) as f64 / 101.0).collect();
            let (lo, hi) = super::transform::analyze(self, &x);
            let y = super::transform::synthesize(self, &lo, &hi);
            let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if err > 1e-6 {
                return Err(Error::Filter {
                    name: self.name.clone(),
                    message: format!("reconstruction error {err:e} at length {n}"),
                });
            }
        }
        Ok(())
    }
}

/// Parses `name; analysis half taps; synthesis half taps` lines.
pub fn parse_filters(text: &str) -> Result<Vec<WaveletFilterPair>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(';').map(str::trim).collect();
        let bad = |message: String| Error::Filter {
            name: parts[0].to_string(),
            message: format!("line {}: {message}", i + 1),
        };
        if parts.len() != 3 || parts[0].is_empty() {
            return Err(bad("expected `name; analysis taps; synthesis taps`".into()));
        }
        let taps = |field: &str| -> Result<Vec<f64>> {
            field
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(format!("bad tap {t:?}"))))
                .collect()
        };
        out.push(WaveletFilterPair::from_half_taps(parts[0], &taps(parts[1])?, &taps(parts[2])?)?);
    }
    Ok(out)
}

/// Filters shipped with the crate.
pub fn builtin_filters() -> Vec<WaveletFilterPair> {
    parse_filters(BUILTIN).expect("shipped filters are valid")
}

pub fn filter(name: &str) -> Result<WaveletFilterPair> {
    builtin_filters()
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::Filter {
            name: name.into(),
            message: "not registered".into(),
        })
}
