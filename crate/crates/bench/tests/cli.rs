use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use spam_bench::{parse_csv, MatrixSource, CSV_COLUMNS};
use spam_core::linop::sym_eig;

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spam-bench")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bench(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().skip_while(|l| *l != CSV_COLUMNS);
    lines.next().expect("column header present");
    lines.map(|l| l.split(',').map(String::from).collect()).collect()
}

fn largest_eigenvalue(matrix: &str) -> f64 {
    let problem = matrix.parse::<MatrixSource>().unwrap().load().unwrap();
    sym_eig(&problem.a.to_dense().unwrap()).unwrap().values.max()
}

#[test]
fn reaction_diffusion_final_value_matches_dense_solve() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&[
        "run", "--matrix", "builtin:rd1d:64", "--approx", "natural-reaction", "--method", "fullspam", "--start",
        "eigvec", "--out", out,
    ]);
    let summary = parse_csv(&dir.path().join("fullspam.csv")).unwrap();
    assert!(summary.converged);
    let lam = largest_eigenvalue("builtin:rd1d:64");
    assert!((summary.final_value - lam).abs() <= 1e-10 * lam.abs().max(1.0));
}

#[test]
fn shared_start_gives_identical_first_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&[
        "run", "--matrix", "builtin:banded:32,5,0.5", "--approx", "band:1", "--method", "lanczos", "--method",
        "fullspam", "--method", "spam1", "--start", "eigvec", "--out", out,
    ]);
    let first: Vec<String> =
        ["lanczos", "fullspam", "spam1"].iter().map(|m| rows(&dir.path().join(format!("{m}.csv")))[0][1].clone()).collect();
    assert_eq!(first[0], first[1]);
    assert_eq!(first[1], first[2]);
    assert!(dir.path().join("comparison.csv").exists());
}

#[test]
fn generated_file_runs_like_the_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("banded.mtx");
    ok(&["gen", "--matrix", "builtin:banded:24,3,0.5", "--out", mtx.to_str().unwrap()]);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let common = ["--approx", "diag", "--method", "spam1", "--start", "random:3"];
    let mut args = vec!["run", "--matrix", "builtin:banded:24,3,0.5", "--out", a.to_str().unwrap()];
    args.extend(common);
    ok(&args);
    let mut args = vec!["run", "--matrix", mtx.to_str().unwrap(), "--out", b.to_str().unwrap()];
    args.extend(common);
    ok(&args);
    let (x, y) = (rows(&a.join("spam1.csv")), rows(&b.join("spam1.csv")));
    assert_eq!(x.len(), y.len());
    for (rx, ry) in x.iter().zip(&y) {
        let (vx, vy): (f64, f64) = (rx[1].parse().unwrap(), ry[1].parse().unwrap());
        assert!((vx - vy).abs() <= 1e-12 * vx.abs().max(1.0));
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "run", "--matrix", "builtin:banded:32,5,0.5", "--approx", "lowrank:3", "--method", "jd1:2", "--method",
        "spam1l:2", "--start", "random:11", "--out", out,
    ];
    ok(&args);
    let first = (fs::read(dir.path().join("jd1-2.csv")).unwrap(), fs::read(dir.path().join("spam1l-2.csv")).unwrap());
    ok(&args);
    let second = (fs::read(dir.path().join("jd1-2.csv")).unwrap(), fs::read(dir.path().join("spam1l-2.csv")).unwrap());
    assert_eq!(first, second);
}

#[test]
fn replay_reproduces_the_records() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&[
        "run", "--matrix", "builtin:banded:20,2,0.4", "--approx", "alphaI:0.5", "--method", "jd:2", "--target",
        "smallest:4", "--start", "random:5", "--out", a.to_str().unwrap(),
    ]);
    let csv = a.join("jd-2.csv");
    ok(&["run", "--replay", csv.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(rows(&csv), rows(&b.join("jd-2.csv")));
}

#[test]
fn configuration_errors_exit_with_two() {
    assert_eq!(bench(&["run", "--matrix", "builtin:banded:8,2,0.5", "--method", "nope"]).status.code(), Some(2));
    assert_eq!(bench(&["run", "--matrix", "/no/such/file.mtx", "--method", "lanczos"]).status.code(), Some(2));
    assert_eq!(bench(&["run", "--matrix", "builtin:banded:8,2,0.5"]).status.code(), Some(2));
    assert_eq!(bench(&["compare", "/no/such.csv"]).status.code(), Some(2));
    assert_eq!(bench(&["--help"]).status.code(), Some(0));
}

#[test]
fn compare_summarizes_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&[
        "run", "--matrix", "builtin:banded:32,5,0.5", "--approx", "band:1", "--method", "lanczos", "--method",
        "fullspam", "--max-outer", "8", "--start", "eigvec", "--out", out,
    ]);
    let table = dir.path().join("summary.csv");
    let text = ok(&[
        "compare",
        dir.path().join("lanczos.csv").to_str().unwrap(),
        dir.path().join("fullspam.csv").to_str().unwrap(),
        "--csv",
        table.to_str().unwrap(),
    ]);
    let lanczos = text.lines().find(|l| l.starts_with("lanczos")).unwrap();
    let fullspam = text.lines().find(|l| l.starts_with("fullspam")).unwrap();
    assert!(lanczos.contains("8*"), "{text}");
    assert!(!fullspam.contains('*'), "{text}");
    assert_eq!(fs::read_to_string(&table).unwrap().lines().count(), 3);
}
