use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bogd::data::{Dataset, Manifest};
use bogd::harness::REPORT_HEADER;
use bogd::synthetic;

fn bogd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bogd"))
        .args(args)
        .output()
        .expect("spawn bogd")
}

fn write_fixture(dir: &Path) -> std::path::PathBuf {
    let ds: Dataset = synthetic::noisy_stream(120, 3, 0.1, 11);
    let mut text = Vec::new();
    ds.write_sparse_text(&mut text).unwrap();
    fs::write(dir.join("toy.svm"), text).unwrap();
    fs::write(
        dir.join("grid.toml"),
        "eta = [0.5, 1.0]\nlambda = [1.0]\nlambda_rule = \"tlinear\"\ngamma = [1.0, 2.0]\n",
    )
    .unwrap();
    let manifest = dir.join("manifest.toml");
    fs::write(&manifest, "[datasets]\ntoy = \"toy.svm\"\n").unwrap();
    manifest
}

#[test]
fn run_writes_report_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_fixture(dir.path());
    let out = dir.path().join("report.csv");
    let grid = dir.path().join("grid.toml");
    let status = bogd(&[
        "run",
        "--dataset",
        "toy",
        "--algo",
        "bogd++",
        "--budget",
        "10",
        "--budget",
        "5",
        "--grid",
        grid.to_str().unwrap(),
        "--runs",
        "3",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );

    let report = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], REPORT_HEADER);
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("toy,BOGD++,5,"), "{}", lines[1]);
    assert!(lines[2].starts_with("toy,BOGD++,10,"), "{}", lines[2]);
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), REPORT_HEADER.split(',').count());
        assert_eq!(fields[10], "3");
        let pct: f64 = fields[3].parse().unwrap();
        assert!((0.0..=100.0).contains(&pct));
    }

    let log = fs::read_to_string(out.with_extension("log")).unwrap();
    assert!(log.contains("toy.svm"), "{log}");
}

#[test]
fn run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_fixture(dir.path());
    let reports: Vec<Vec<String>> = ["a.csv", "b.csv"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let status = bogd(&[
                "run",
                "--dataset",
                "toy",
                "--algo",
                "perceptron",
                "--runs",
                "4",
                "--seed",
                "7",
                "--manifest",
                manifest.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ]);
            assert!(status.status.success());
            // Drop the timing column.
            fs::read_to_string(out)
                .unwrap()
                .lines()
                .map(|l| {
                    let mut f: Vec<&str> = l.split(',').collect();
                    f.remove(6);
                    f.join(",")
                })
                .collect()
        })
        .collect();
    assert_eq!(reports[0], reports[1]);
    assert!(reports[0][1].ends_with(",-,-,-,4"), "{}", reports[0][1]);
}

#[test]
fn run_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_fixture(dir.path());
    let out = dir.path().join("r.csv");
    let base = [
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];

    let unknown = bogd(&[&["run", "--dataset", "nope", "--algo", "ogd"], &base[..]].concat());
    assert_eq!(unknown.status.code(), Some(2));

    let budget_for_ogd = bogd(
        &[
            &["run", "--dataset", "toy", "--algo", "ogd", "--budget", "5"],
            &base[..],
        ]
        .concat(),
    );
    assert_eq!(budget_for_ogd.status.code(), Some(2));

    let no_default_budget =
        bogd(&[&["run", "--dataset", "toy", "--algo", "rbp"], &base[..]].concat());
    assert_eq!(no_default_budget.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn verify_passes() {
    let out = bogd(&["verify"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("0 failed"), "{stdout}");
    assert!(!stdout.contains("[FAIL]"));
}

#[test]
fn bundled_german_data() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let manifest = Manifest::from_path(&dir.join("manifest.toml")).unwrap();
    assert_eq!(manifest.names().collect::<Vec<_>>(), ["german"]);
    let german = manifest.load("german").unwrap();
    assert_eq!(german.len(), 1000);
    assert_eq!(german.dimension, 24);
    let positives = german
        .instances
        .iter()
        .filter(|i| i.label.sign() > 0.0)
        .count();
    assert_eq!(positives, 700);
}
