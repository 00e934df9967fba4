use super::{parse, PipelineSpec};
use crate::error::{Error, Result};

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        const PRESETS: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../../presets/", $name, ".txt")))),*
        ];
    };
}

presets!(
    "google-brain-1",
    "google-brain-2",
    "google-brain-3",
    "marie-bonneau-1",
    "marie-bonneau-2",
    "ellie-goulding",
    "ariana-grande",
    "shailene-woodley",
    "man",
    "eye",
    "meghan-markle",
);

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// The preset file as shipped, comments included.
pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset(name: &str) -> Result<PipelineSpec> {
    let text = preset_text(name)
        .ok_or_else(|| Error::InvalidArgument(format!("no preset named {name:?}")))?;
    parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses_and_validates() {
        assert_eq!(preset_names().count(), 11);
        for name in preset_names() {
            let spec = preset(name).unwrap();
            assert_eq!(spec.name, name);
            spec.validate().unwrap();
        }
        assert!(preset("nobody").is_err());
    }
}
