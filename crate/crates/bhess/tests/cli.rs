use std::fs;
use std::path::Path;
use std::process::Command;

use bhess::io::load_trace_csv;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("bhess").chain(args.iter().copied());
    let code = bhess::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn small(out: &Path, seed: &str) -> Vec<String> {
    ["--n", "12", "--realizations", "3", "--seed", seed, "--max-iters", "30", "--step-rule", "newton", "--no-plots", "--out"]
        .iter()
        .map(|s| s.to_string())
        .chain([out.display().to_string()])
        .collect()
}

#[test]
fn verify_passes() {
    let (code, out, _) = run(&["verify"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.lines().count() >= 10 && !out.contains("FAIL"));
}

#[test]
fn invalid_invocations_exit_with_two() {
    let (code, _, err) = run(&["--n", "0"]);
    assert_eq!(code, 2);
    assert!(err.contains("at least 1"), "{err}");
    assert_eq!(run(&["--no-such-flag"]).0, 2);
    assert_eq!(run(&["--solver", "newton"]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_bhess");
    assert_eq!(Command::new(bin).arg("verify").output().unwrap().status.code(), Some(0));
    assert_eq!(Command::new(bin).args(["--n", "0"]).output().unwrap().status.code(), Some(2));
}

#[test]
fn same_seed_gives_byte_identical_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for (p, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        let args = small(p, seed);
        let (code, out, err) = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(code, 0, "{out}{err}");
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 8 + 2, "{names:?}");
    let mut differs = false;
    for name in &names {
        let bytes = fs::read(a.join(name)).unwrap();
        assert_eq!(bytes, fs::read(b.join(name)).unwrap(), "{name:?}");
        differs |= bytes != fs::read(c.join(name)).unwrap();
    }
    assert!(differs, "a different seed should change the results");
    let rows = load_trace_csv(&a.join("median_bh-cg_newton.csv")).unwrap();
    assert_eq!(rows[0].iter, 0);
    assert!(rows.iter().all(|r| r.seconds.is_none()));
    assert!(rows.windows(2).all(|w| w[1].f <= w[0].f));
}

#[test]
fn solver_selection_expands_beta_rules() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = small(dir.path(), "1");
    args.extend(["--solver", "cg", "--beta-rule", "daniel", "--beta-rule", "hz", "--timing"].map(String::from));
    let (code, out, err) = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("bh-cg") && out.contains("cg-hz") && !out.contains("cg-fr") && !out.contains("bh-gd"));
    let rows = load_trace_csv(&dir.path().join("median_cg-hz_newton.csv")).unwrap();
    assert!(rows.iter().all(|r| r.seconds.is_some()));
}

#[test]
fn plots_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let args = ["--n", "12", "--realizations", "2", "--max-iters", "10", "--solver", "gd", "--solver", "qn", "--out", &out];
    let (code, stdout, err) = run(&args);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("wrote"));
    for name in ["convergence_newton.svg", "convergence_grid.svg", "convergence_overlay.svg", "step_overlay.svg"] {
        let svg = fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("<text"), "{name}");
    }
    assert!(dir.path().join("manifest.txt").exists());
}
