mod common;

use proptest::prelude::*;
use rand::Rng;
use resonant_sr::deconv::{DeconvSettings, NoiseMode, Source};
use resonant_sr::pipeline::{
    import_parameter_matrix, parse, parse_matrix_rows, preset, preset_names, preset_text, run, run_with_view,
    serialize,
};
use resonant_sr::{compress, BlockAverageImage, Error, PipelineSpec, Stage};

fn input_8x8(seed: u64) -> BlockAverageImage {
    let mut r = common::rng(seed);
    compress(&common::random_image(&mut r, 32, 32, 1), 4).unwrap()
}

#[test]
fn eleven_presets_ship() {
    assert_eq!(preset_names().count(), 11);
}

#[test]
fn every_preset_runs_and_has_the_expected_size() {
    let input = input_8x8(3);
    for name in preset_names() {
        let spec = preset(name).unwrap();
        let out = run(&spec, &input).unwrap();
        let side = (spec.gamma() * 32.0).round() as usize;
        assert_eq!((out.width(), out.height()), (side, side), "{name}");
    }
}

#[test]
fn marie_bonneau_magnifies_to_72() {
    let (out, view) = run_with_view(&preset("marie-bonneau-1").unwrap(), &input_8x8(4)).unwrap();
    assert_eq!((out.width(), out.height()), (72, 72));
    assert_eq!((view.width(), view.height()), (32, 32));
}

#[test]
fn preset_text_round_trips() {
    for name in preset_names() {
        let spec = preset(name).unwrap();
        assert_eq!(spec.name, name);
        let again = parse(&serialize(&spec)).unwrap();
        assert_eq!(again, spec, "{name}");
        assert_eq!(serialize(&again), serialize(&spec));
        assert!(preset_text(name).unwrap().starts_with("# name:"));
    }
}

#[test]
fn worked_matrices_import_to_the_shipped_presets() {
    let matrices = [
        ("google-brain-1", include_str!("../presets/matrices/google-brain-1.csv")),
        ("google-brain-2", include_str!("../presets/matrices/google-brain-2.csv")),
        ("marie-bonneau-1", include_str!("../presets/matrices/marie-bonneau-1.csv")),
    ];
    for (name, csv) in matrices {
        let rows = parse_matrix_rows(csv).unwrap();
        let spec = import_parameter_matrix(name, &rows).unwrap();
        assert_eq!(spec, preset(name).unwrap(), "{name}");
    }
}

#[test]
fn matrix_separators_and_degree_marks_are_accepted() {
    let text = "135 & 10 & 20\n255;255;255\n2.25, 13°, 105^{\\circ}\ndo DVC 100%\n255 255 255\n255 255 255\n";
    let spec = import_parameter_matrix("m", &parse_matrix_rows(text).unwrap()).unwrap();
    assert_eq!(spec.stages.len(), 6);
    assert_eq!(spec.stages[2], Stage::magnify(2.25));
    let Stage::Deconvolve(d) = spec.stages[3] else { panic!("{:?}", spec.stages[3]) };
    assert_eq!((d.length, d.theta, d.noise), (13, 105.0, NoiseMode::DarkOnly));
}

#[test]
fn out_of_range_threshold_names_its_field() {
    let err = parse("interp1 p2=256 p3=0 p4=0\n").unwrap_err();
    match err {
        Error::Range { line, field, .. } => assert_eq!((line, field.as_str()), (1, "p2")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn syntax_errors_carry_line_and_column() {
    let err = parse("# name: x\nmagnify gamma=2\nwobble L=3\n").unwrap_err();
    assert!(matches!(err, Error::Syntax { line: 3, column: 1, .. }), "{err:?}");
}

#[test]
fn invalid_orderings_are_rejected() {
    let d = Stage::deconvolve(DeconvSettings::motion(3, 0.0));
    let bad = [
        vec![d, Stage::magnify(2.0)],
        vec![Stage::magnify(2.0), Stage::magnify(1.5)],
        vec![Stage::deconvolve(DeconvSettings::motion(3, 0.0).with_gamma(2.0))],
        vec![Stage::level2(1, 1, 1), Stage::magnify(5.0)],
    ];
    for stages in bad {
        assert!(PipelineSpec::new("x", stages.clone()).validate().is_err(), "{stages:?}");
    }
    let ok = PipelineSpec::new("x", vec![Stage::magnify(2.0), d, Stage::magnify(1.0)]);
    ok.validate().unwrap();
}

#[test]
fn step3_geometry_needs_step3_input() {
    let spec = PipelineSpec::new("x", vec![Stage::level1_step3(9, 9, 9)]);
    assert!(run(&spec, &input_8x8(1)).is_err());
    let mut r = common::rng(2);
    let three = compress(&common::random_image(&mut r, 24, 24, 3), 3).unwrap();
    assert_eq!(run(&spec, &three).unwrap().width(), 24);
}

fn arb_stage() -> impl Strategy<Value = Stage> {
    let t = (any::<u8>(), any::<u8>(), any::<u8>());
    prop_oneof![
        t.prop_map(|(a, b, c)| Stage::level1(a, b, c)),
        t.prop_map(|(a, b, c)| Stage::level1_step3(a, b, c)),
        t.prop_map(|(a, b, c)| Stage::level2(a, b, c)),
        (0u32..=80).prop_map(|q| Stage::magnify(1.0 + q as f64 / 40.0)),
        (0u32..=20, 0u32..36, any::<bool>(), 0u32..=12, 0usize..5).prop_map(|(l, th, ofc, a, n)| {
            Stage::deconvolve(DeconvSettings {
                length: l,
                theta: 5.0 * th as f64,
                source: if ofc { Source::Ofc } else { Source::Dvc },
                amount: 25 * a,
                noise: [NoiseMode::No, NoiseMode::Yes, NoiseMode::DarkOnly, NoiseMode::LightOnly, NoiseMode::Auto][n],
                ..DeconvSettings::default()
            })
        }),
    ]
}

proptest! {
    #[test]
    fn serialized_text_parses_back(stages in prop::collection::vec(arb_stage(), 0..12)) {
        let spec = PipelineSpec::new("prop", stages);
        prop_assert_eq!(parse(&serialize(&spec)).unwrap(), spec);
    }
}

#[test]
fn runs_are_deterministic_on_rgb() {
    let mut r = common::rng(9);
    let img = common::random_image(&mut r, 32, 32, 3);
    let input = compress(&img, 4).unwrap();
    let name = preset_names().nth(r.random_range(0..11)).unwrap();
    let spec = preset(name).unwrap();
    assert_eq!(run(&spec, &input).unwrap(), run(&spec, &input).unwrap());
}
