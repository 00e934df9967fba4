//! Line-oriented stage format.
//!
//! ```text
//! # name: example
//! interp1 p2=135 p3=10 p4=20
//! magnify gamma=2.25
//! deconv L=13 theta=105 source=DVC amount=100 noise=DO
//! interp2 p2=255 p3=255 p4=255
//! ```

use super::{Level, PipelineSpec, Stage, StageGeometry};
use crate::deconv::{DeconvSettings, NoiseMode, Source, MAX_AMOUNT, MAX_GAMMA, MAX_LENGTH, MIN_GAMMA};
use crate::error::{Error, Result};
use crate::interp::ThresholdTriple;

const NAME_PREFIX: &str = "name:";
const MAX_THETA: f64 = 175.0;

pub(super) fn stage_line(stage: &Stage) -> String {
    match stage {
        Stage::CondInterp { level, geometry, t } => {
            let head = match level {
                Level::One => "interp1",
                Level::Two => "interp2",
            };
            let geom = match geometry {
                StageGeometry::Even => "",
                StageGeometry::Step3 => " geom=step3",
            };
            format!("{head} p2={} p3={} p4={}{geom}", t.p2, t.p3, t.p4)
        }
        Stage::Magnify { gamma } => format!("magnify gamma={gamma}"),
        Stage::Deconvolve(s) => format!(
            "deconv L={} theta={} source={} amount={} noise={}",
            s.length, s.theta, s.source, s.amount, s.noise
        ),
    }
}

pub fn serialize(spec: &PipelineSpec) -> String {
    let mut out = String::new();
    if !spec.name.is_empty() {
        out.push_str(&format!("# {NAME_PREFIX} {}\n", spec.name));
    }
    for stage in &spec.stages {
        out.push_str(&stage_line(stage));
        out.push('\n');
    }
    out
}

struct Field<'a> {
    key: &'a str,
    value: &'a str,
    column: usize,
}

struct Line<'a> {
    number: usize,
    end_column: usize,
    fields: Vec<Field<'a>>,
}

impl<'a> Line<'a> {
    fn syntax(&self, column: usize, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: self.number,
            column,
            message: message.into(),
        }
    }

    fn take(&mut self, key: &str) -> Result<Field<'a>> {
        match self.fields.iter().position(|f| f.key == key) {
            Some(i) => Ok(self.fields.remove(i)),
            None => Err(self.syntax(self.end_column, format!("missing {key}="))),
        }
    }

    fn take_optional(&mut self, key: &str) -> Option<Field<'a>> {
        let i = self.fields.iter().position(|f| f.key == key)?;
        Some(self.fields.remove(i))
    }

    fn finish(self) -> Result<()> {
        match self.fields.first() {
            Some(f) => Err(self.syntax(f.column, format!("unexpected field {:?}", f.key))),
            None => Ok(()),
        }
    }

    fn range(&self, f: &Field<'_>, expected: &str) -> Error {
        Error::Range {
            line: self.number,
            field: f.key.to_string(),
            value: f.value.to_string(),
            expected: expected.to_string(),
        }
    }

    fn int(&mut self, key: &str, max: u32) -> Result<u32> {
        let f = self.take(key)?;
        let v: i64 = f
            .value
            .parse()
            .map_err(|_| self.syntax(f.column, format!("{key} expects an integer, got {:?}", f.value)))?;
        if !(0..=i64::from(max)).contains(&v) {
            return Err(self.range(&f, &format!("0..={max}")));
        }
        Ok(v as u32)
    }

    fn real(&mut self, key: &str, lo: f64, hi: f64) -> Result<f64> {
        let f = self.take(key)?;
        let v: f64 = f
            .value
            .parse()
            .map_err(|_| self.syntax(f.column, format!("{key} expects a number, got {:?}", f.value)))?;
        if !(lo..=hi).contains(&v) {
            return Err(self.range(&f, &format!("{lo}..={hi}")));
        }
        Ok(v)
    }

    fn keyword<T: std::str::FromStr>(&mut self, key: &str, choices: &str) -> Result<T> {
        let f = self.take(key)?;
        f.value
            .parse()
            .map_err(|_| self.range(&f, choices))
    }

    fn triple(&mut self) -> Result<ThresholdTriple> {
        let p2 = self.int("p2", 255)? as u8;
        let p3 = self.int("p3", 255)? as u8;
        let p4 = self.int("p4", 255)? as u8;
        Ok(ThresholdTriple::new(p2, p3, p4))
    }
}

fn parse_stage(number: usize, raw: &str) -> Result<Option<Stage>> {
    let content = raw.split('#').next().unwrap_or("");
    let mut words = Vec::new();
    let mut offset = 0;
    for word in content.split_whitespace() {
        let start = content[offset..].find(word).expect("word comes from content") + offset;
        offset = start + word.len();
        words.push((start + 1, word));
    }
    let Some(&(head_col, head)) = words.first() else {
        return Ok(None);
    };
    let mut line = Line {
        number,
        end_column: content.trim_end().len() + 1,
        fields: Vec::new(),
    };
    for &(column, word) in &words[1..] {
        let Some((key, value)) = word.split_once('=') else {
            return Err(line.syntax(column, format!("expected key=value, got {word:?}")));
        };
        if key.is_empty() || value.is_empty() {
            return Err(line.syntax(column, format!("expected key=value, got {word:?}")));
        }
        if line.fields.iter().any(|f| f.key == key) {
            return Err(line.syntax(column, format!("duplicate field {key:?}")));
        }
        line.fields.push(Field { key, value, column });
    }

    let stage = match head {
        "interp1" | "interp2" => {
            let t = line.triple()?;
            let geometry = match line.take_optional("geom") {
                None => StageGeometry::Even,
                Some(f) if f.value == "step3" && head == "interp1" => StageGeometry::Step3,
                Some(f) if f.value == "even" => StageGeometry::Even,
                Some(f) => return Err(line.range(&f, "step3 (interp1 only) or even")),
            };
            let level = if head == "interp1" { Level::One } else { Level::Two };
            Stage::CondInterp { level, geometry, t }
        }
        "magnify" => Stage::Magnify {
            gamma: line.real("gamma", MIN_GAMMA, MAX_GAMMA)?,
        },
        "deconv" => {
            let length = line.int("L", MAX_LENGTH)?;
            let theta = line.real("theta", 0.0, MAX_THETA)?;
            let source: Source = line.keyword("source", "DVC|OFC")?;
            let amount = line.int("amount", MAX_AMOUNT)?;
            let noise: NoiseMode = line.keyword("noise", "NO|YES|DO|LO|AUTO")?;
            Stage::Deconvolve(DeconvSettings {
                gamma: 1.0,
                length,
                theta,
                source,
                amount,
                noise,
            })
        }
        other => return Err(line.syntax(head_col, format!("unknown stage {other:?}"))),
    };
    line.finish()?;
    Ok(Some(stage))
}

/// Parses the stage format. A leading `# name: ...` comment sets the name.
pub fn parse(text: &str) -> Result<PipelineSpec> {
    let mut spec = PipelineSpec::default();
    let mut seen_stage = false;
    for (i, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if !seen_stage && spec.name.is_empty() {
            if let Some(name) = trimmed
                .strip_prefix('#')
                .and_then(|c| c.trim_start().strip_prefix(NAME_PREFIX))
            {
                spec.name = name.trim().to_string();
                continue;
            }
        }
        if let Some(stage) = parse_stage(i + 1, raw)? {
            spec.stages.push(stage);
            seen_stage = true;
        }
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let spec = PipelineSpec::new(
            "demo",
            vec![
                Stage::level1(135, 10, 20),
                Stage::level1_step3(1, 2, 3),
                Stage::magnify(2.25),
                Stage::deconvolve(DeconvSettings {
                    gamma: 1.0,
                    length: 13,
                    theta: 105.0,
                    source: Source::Ofc,
                    amount: 125,
                    noise: NoiseMode::Auto,
                }),
                Stage::level2(255, 255, 255),
            ],
        );
        let text = serialize(&spec);
        assert_eq!(parse(&text).unwrap(), spec);
        assert!(text.contains("deconv L=13 theta=105 source=OFC amount=125 noise=AUTO"));
    }

    #[test]
    fn range_error_names_field() {
        match parse("interp1 p2=300 p3=0 p4=0") {
            Err(Error::Range { line, field, value, .. }) => {
                assert_eq!((line, field.as_str(), value.as_str()), (1, "p2", "300"));
            }
            other => panic!("{other:?}"),
        }
        match parse("\ndeconv L=13 theta=180 source=DVC amount=100 noise=NO") {
            Err(Error::Range { line, field, .. }) => assert_eq!((line, field.as_str()), (2, "theta")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_columns() {
        let err = parse("interp1 p2=1 p3=2 p4=3\n  blur x=1").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, column: 3, .. }), "{err:?}");
        let err = parse("interp1 p2=1 p3=2 p4=3 extra=9").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, column: 24, .. }), "{err:?}");
        let err = parse("interp1 p2=1 p3=2").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, .. }), "{err:?}");
        let err = parse("magnify gamma").unwrap_err();
        assert!(matches!(err, Error::Syntax { column: 9, .. }), "{err:?}");
    }

    #[test]
    fn comments_and_blank_lines() {
        let spec = parse("# name: x\n\n# note\ninterp2 p2=1 p3=1 p4=1 # trailing\n").unwrap();
        assert_eq!(spec.name, "x");
        assert_eq!(spec.stages, vec![Stage::level2(1, 1, 1)]);
    }
}
