use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qkrate::protocols::b92_symmetric;
use qkrate::tables::{table1_csv, table3_csv, table5_csv};
use qkrate::PsiMode;

fn qkrate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkrate")).args(args).output().expect("spawn qkrate")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_stdout(args: &[&str], path: &Path) {
    fs::write(path, stdout(&qkrate(args))).unwrap();
}

/// The `rate` column of the single report row.
fn rate(csv: &str) -> f64 {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|&h| h == "rate").unwrap();
    row[k].parse().unwrap()
}

#[test]
fn pipeline_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("d.stats");
    let gram = dir.path().join("d.gram");
    write_stdout(&["stats", "--channel", "depolarizing:0.05"], &stats);
    write_stdout(&["estimate", stats.to_str().unwrap()], &gram);

    let lib = b92_symmetric(0.05, 0.342, PsiMode::Psi4).unwrap().rate;
    let from_stats =
        rate(&stdout(&qkrate(&["keyrate", "b92", "--stats", stats.to_str().unwrap(), "--alpha-key", "0.342"])));
    let from_gram =
        rate(&stdout(&qkrate(&["keyrate", "b92", "--gram", gram.to_str().unwrap(), "--alpha-key", "0.342"])));
    let symmetric = rate(&stdout(&qkrate(&["keyrate", "b92", "--symmetric", "0.05", "--alpha-key", "0.342"])));
    for r in [from_stats, from_gram, symmetric] {
        assert!((r - lib).abs() < 1e-9, "{r} vs {lib}");
    }

    // Psi3 on a Psi4 file drops the |b> statistics
    let psi3 = rate(&stdout(&qkrate(&["keyrate", "bb84", "--stats", stats.to_str().unwrap(), "--psi", "3"])));
    let lib3 = b92_symmetric(0.05, 0.0, PsiMode::Psi3).unwrap().rate;
    assert!((psi3 - lib3).abs() < 1e-9);
}

#[test]
fn two_way_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("t.stats");
    write_stdout(&["stats", "--channel", "two-way-depolarizing:0.05", "--psi", "3"], &stats);
    let r = rate(&stdout(&qkrate(&["keyrate", "sqkd", "--stats", stats.to_str().unwrap()])));
    let sym = rate(&stdout(&qkrate(&["keyrate", "sqkd", "--symmetric", "0.05", "--scenario", "independent"])));
    assert!((r - sym).abs() < 1e-7, "{r} vs {sym}");
}

#[test]
fn tables_match_library() {
    assert_eq!(stdout(&qkrate(&["table", "1"])), table1_csv().unwrap());
    assert_eq!(stdout(&qkrate(&["table", "3"])), table3_csv().unwrap());
    assert_eq!(stdout(&qkrate(&["table", "5"])), table5_csv().unwrap());
}

#[test]
fn deterministic_outputs() {
    let args = ["stats", "--channel", "random:3:4", "--samples", "100000", "--seed", "9"];
    assert_eq!(stdout(&qkrate(&args)), stdout(&qkrate(&args)));
    let opt = ["optimize", "--symmetric", "0.08", "--budget", "600", "--seed", "2"];
    assert_eq!(stdout(&qkrate(&opt)), stdout(&qkrate(&opt)));
}

#[test]
fn threshold_row() {
    let out = stdout(&qkrate(&["threshold", "bb84", "--psi", "3"]));
    let q: f64 = out.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!((q - 0.110).abs() < 0.001, "{q}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.stats");
    fs::write(&bad, "not a stats file\n").unwrap();
    let missing = dir.path().join("missing.stats");
    let partial = dir.path().join("partial.stats");
    fs::write(&partial, "psi=3\nalpha=0.7\nbeta=0.7\nqa=0.05\n").unwrap();

    let code = |args: &[&str]| qkrate(args).status.code();
    assert_eq!(code(&["keyrate", "bb84", "--symmetric", "0.7"]), Some(2));
    assert_eq!(code(&["estimate", missing.to_str().unwrap()]), Some(2));
    assert_eq!(code(&["estimate", bad.to_str().unwrap()]), Some(2));
    assert_eq!(code(&["keyrate", "nonsense"]), Some(2));
    assert_eq!(code(&["optimize", "--symmetric", "0.05", "--budget", "0"]), Some(2));
    assert_eq!(code(&["keyrate", "sqkd", "--stats", partial.to_str().unwrap()]), Some(3));
    assert_eq!(code(&["--help"]), Some(0));
}
