//! Runs every example binary that `cargo test` builds alongside the tests.

use std::path::PathBuf;
use std::process::Command;

const EXAMPLES: [&str; 10] = [
    "codec",
    "interpolation",
    "motion_psf",
    "deconvolution",
    "presets",
    "matrix_import",
    "search",
    "wavelets",
    "inpaint",
    "sensing",
];

fn example_dir() -> PathBuf {
    // target/<profile>/deps/examples-<hash> -> target/<profile>/examples
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().join("examples")
}

#[test]
fn every_example_runs() {
    let dir = example_dir();
    for name in EXAMPLES {
        let path = dir.join(format!("{name}{}", std::env::consts::EXE_SUFFIX));
        assert!(path.exists(), "{} was not built", path.display());
        let out = Command::new(&path).output().unwrap();
        assert!(
            out.status.success(),
            "{name} failed:\n{}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stdout.is_empty(), "{name} printed nothing");
    }
}

#[test]
fn example_list_matches_directory() {
    let src = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples");
    let mut found: Vec<String> = std::fs::read_dir(src)
        .unwrap()
        .filter_map(|e| e.unwrap().path().file_stem().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    found.sort();
    let mut listed: Vec<String> = EXAMPLES.iter().map(|s| s.to_string()).collect();
    listed.sort();
    assert_eq!(found, listed);
}
