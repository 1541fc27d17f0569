use std::fs;
use std::path::Path;

use prootkit::bench::read_summary_csv;
use prootkit::cli::{run_cli, EXIT_IO, EXIT_NO_CONVERGENCE, EXIT_OK, EXIT_USAGE};
use prootkit::costmodel::read_cost_csv;
use prootkit::mmio::read_matrix_market;
use prootkit::{ConvergenceReport, Matrix};
use tempfile::tempdir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("prootkit").chain(args.iter().copied());
    let code = run_cli(argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn root_of_identity_is_identity() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("x.mtx");
    let rec = dir.path().join("rec.mtx");
    let rep = dir.path().join("r.csv");
    let r = cli(&[
        "root", "--input", "identity:4", "--p", "7", "--method", "variant",
        "--out", path_str(&out), "--report", path_str(&rep),
        "--recover", "--recover-out", path_str(&rec),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert!(ConvergenceReport::load(&rep).unwrap().final_residual() <= 1e-13);
    // The iteration runs on A~ = I/2, whose root is I/2^(1/7).
    let y = read_matrix_market(&out).unwrap();
    assert!(y.max_abs_diff(&Matrix::identity(4).scaled(0.5f64.powf(1.0 / 7.0))) < 1e-12);
    assert!(read_matrix_market(&rec).unwrap().max_abs_diff(&Matrix::identity(4)) < 1e-12);
}

#[test]
fn root_of_identity_without_preconditioning_is_immediate() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("x.mtx");
    let r = cli(&[
        "root", "--input", "identity:4", "--p", "7", "--precondition", "false",
        "--out", path_str(&out),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert!(r.stdout.contains("iterations=0"), "{}", r.stdout);
    assert_eq!(read_matrix_market(&out).unwrap(), Matrix::identity(4));
}

#[test]
fn scalar_fourth_root_recovered() {
    let dir = tempdir().unwrap();
    let rec = dir.path().join("rec.mtx");
    let r = cli(&[
        "root", "--input", "diag:0.0625", "--p", "4", "--recover",
        "--recover-out", path_str(&rec),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let x = read_matrix_market(&rec).unwrap();
    assert!((x[(0, 0)] - 0.5).abs() < 1e-12);
}

#[test]
fn random_spd_p59_report_round_trips() {
    let dir = tempdir().unwrap();
    let rep = dir.path().join("r.csv");
    let r = cli(&[
        "root", "--input", "random-spd:20,380,42", "--p", "59", "--method", "variant",
        "--tol", "1e-12", "--report", path_str(&rep),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}{}", r.stdout, r.stderr);
    let report = ConvergenceReport::load(&rep).unwrap();
    assert!(report.final_residual() < 1e-12);
    assert_eq!(report.label, "random-spd:20,380,42");
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    assert_eq!(ConvergenceReport::read_csv(&buf[..]).unwrap().rows.len(), report.rows.len());
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&["root", "--p", "3"]).code, EXIT_USAGE);
    assert_eq!(cli(&["root", "--input", "identity:2", "--p", "3", "--method", "nope"]).code, EXIT_USAGE);
    assert_eq!(cli(&["root", "--input", "identity:2", "--p", "1"]).code, EXIT_USAGE);
    assert_eq!(cli(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(cli(&["--help"]).code, EXIT_OK);
    assert_eq!(cli(&["root", "--input", "/no/such/file.mtx", "--p", "3"]).code, EXIT_IO);
}

#[test]
fn failed_run_still_writes_report() {
    let dir = tempdir().unwrap();
    let rep = dir.path().join("r.csv");
    let r = cli(&[
        "root", "--input", "random-spd:10,100,1", "--p", "5", "--max-iter", "2",
        "--report", path_str(&rep),
    ]);
    assert_eq!(r.code, EXIT_NO_CONVERGENCE);
    let report = ConvergenceReport::load(&rep).unwrap();
    assert_eq!(report.iterations(), 2);
}

#[test]
fn malformed_matrix_market_is_io_error_with_line() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("bad.mtx");
    fs::write(&path, "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1.0\n").unwrap();
    let r = cli(&["root", "--input", path_str(&path), "--p", "3"]);
    assert_eq!(r.code, EXIT_IO);
    assert!(r.stderr.contains(":3:"), "{}", r.stderr);
}

#[test]
fn bench_identity_summary_is_well_formed() {
    let dir = tempdir().unwrap();
    let r = cli(&[
        "bench", "--input", "identity:5", "--p", "59", "--repeats", "1",
        "--precondition", "false", "--report-dir", path_str(dir.path()),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let rows = read_summary_csv(fs::File::open(dir.path().join("summary.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.iterations == 0));
    for m in ["in", "variant", "iter39"] {
        ConvergenceReport::load(&dir.path().join(format!("{m}.csv"))).unwrap();
    }
}

#[test]
fn decompose_examples() {
    let r = cli(&["decompose", "--d", "57"]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stdout.contains("{[(X^32+X^16+I)(X^16+X^8)+I][X^4+I][X^4+X^2]+I}{X+I}"), "{}", r.stdout);
    assert!(r.stdout.contains("9 multiplications"));

    let r = cli(&["decompose", "--d", "1"]);
    assert!(r.stdout.contains("X+I") && r.stdout.contains("0 multiplications"), "{}", r.stdout);

    let r = cli(&["decompose", "--p", "100"]);
    assert!(r.stdout.contains("11 multiplications\n"), "{}", r.stdout);
    assert!(r.stdout.contains("13 multiplications per iteration"));

    assert_eq!(cli(&["decompose"]).code, EXIT_USAGE);
    assert_eq!(cli(&["decompose", "--d", "3", "--p", "5"]).code, EXIT_USAGE);
}

#[test]
fn cost_csv() {
    let r = cli(&["cost"]);
    assert_eq!(r.code, EXIT_OK);
    let rows = read_cost_csv(r.stdout.as_bytes()).unwrap();
    assert_eq!(rows.len(), 96);
    let disagree: Vec<usize> = rows.iter().filter(|r| !r.agrees()).map(|r| r.p).collect();
    assert_eq!(disagree, [24, 47, 48, 92, 93, 94, 95, 96]);

    let r = cli(&["cost", "--p-min", "59", "--p-max", "59"]);
    assert!(r.stdout.contains("(118+10/3)n^3"));
    assert!(r.stdout.contains("(22+8/3)n^3"));
    assert!(r.stdout.contains("(20+8/3)n^3"));

    let dir = tempdir().unwrap();
    let out = dir.path().join("c.csv");
    assert_eq!(cli(&["cost", "--p-min", "5", "--p-max", "5", "--out", path_str(&out)]).code, EXIT_OK);
    let rows = read_cost_csv(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows[0].variant_coeff, num_rational::Rational64::new(32, 3));
}
