use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn warpcurv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_warpcurv")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_spec(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn spec(side: &str, kappa: &str, base: &str, expr: &str, zeros: &str, fiber: &str, grid: usize) -> String {
    format!(
        "side = \"{side}\"\nkappa = {kappa}\nseed = 2\n\
         [base]\nkind = \"{base}\"\n\
         [warp]\nexpr = \"{expr}\"\nlipschitz = 1\nzeros = {zeros}\n\
         [fiber]\nkind = \"{fiber}\"\n\
         [budget]\nquadruples = 2000\ngrid = {grid}\n"
    )
}

fn distance_value(out: &str) -> f64 {
    let field = out.split_whitespace().find_map(|w| w.strip_prefix("value=")).expect("value field");
    field.parse().unwrap()
}

#[test]
fn flat_cone_distance_unrolls() {
    let dir = TempDir::new().unwrap();
    let s = write_spec(dir.path(), "cone.toml", &spec("CAT", "0", "ray", "t", "[[0]]", "line", 128));
    let o = warpcurv(&["distance", &s, "--from", "1,0", "--to", "1,pi/2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((distance_value(&stdout(&o)) - 2f64.sqrt()).abs() <= 1e-3);
}

#[test]
fn suspension_poles_are_pi_apart() {
    let dir = TempDir::new().unwrap();
    let body = spec("CBB", "1", "interval(0,pi)", "sin(t)", "[[0],[\"pi\"]]", "circle(2*pi)", 128);
    let s = write_spec(dir.path(), "s2.toml", &body);
    let o = warpcurv(&["distance", &s, "--from", "0,0", "--to", "pi,1"]);
    assert!((distance_value(&stdout(&o)) - PI).abs() <= 1e-3);
}

#[test]
fn product_distance_is_pythagorean() {
    let dir = TempDir::new().unwrap();
    let s = write_spec(dir.path(), "flat.toml", &spec("CAT", "0", "interval(0,3)", "1", "\"empty\"", "line", 128));
    let out = dir.path().join("g.tsv");
    let o = warpcurv(&["distance", &s, "--from", "0,0", "--to", "3,4", "--geodesic", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!((distance_value(&stdout(&o)) - 5.0).abs() <= 1e-3);
    let tsv = fs::read_to_string(out).unwrap();
    let mut lines = tsv.lines();
    assert_eq!(lines.next(), Some("t\tb0\tfiber\tv_B\tv_F\tf"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split('\t').map(|v| v.parse().unwrap()).collect()).collect();
    assert!(rows.len() > 2);
    // Straight line: the fiber coordinate is 4/3 of the base coordinate.
    for r in &rows {
        assert!((r[2] - 4.0 / 3.0 * r[1]).abs() <= 1e-2, "{r:?}");
    }
}

#[test]
fn sample_verbs() {
    let o = warpcurv(&["sample", "circle(2*pi+0.5)", "--kind", "CAT", "--kappa", "0", "-n", "2000", "--seed", "1"]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(1));
    assert!(out.contains("RESULT FAIL"));
    assert_eq!(out.lines().filter(|l| l.starts_with("WITNESS")).count(), 4);

    let o = warpcurv(&["sample", "interval(0,2)", "--kind", "CBB", "--kappa", "0", "-n", "2000"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("RESULT PASS"));

    let o = warpcurv(&["sample", "tripod(3,1)", "--kind", "CBB", "--kappa", "0", "-n", "2000"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sample_accepts_spec_files() {
    let dir = TempDir::new().unwrap();
    let body = spec("CBB", "1", "interval(0,pi)", "sin(t)", "[[0],[\"pi\"]]", "circle(2*pi)", 128);
    let s = write_spec(dir.path(), "s2.toml", &body);
    let o = warpcurv(&["sample", &s, "--kind", "CBB", "--kappa", "1", "-n", "2000"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn certify_cone_duality() {
    let dir = TempDir::new().unwrap();
    let cases = [("0.9", "CAT", 1), ("0.9", "CBB", 0), ("1.1", "CAT", 0), ("1.1", "CBB", 1)];
    for (factor, side, code) in cases {
        let body = spec(side, "0", "ray", "t", "[[0]]", &format!("circle(2*pi*{factor})"), 128);
        let s = write_spec(dir.path(), &format!("{side}{factor}.toml"), &body);
        let o = warpcurv(&["certify", &s]);
        let out = stdout(&o);
        assert_eq!(o.status.code(), Some(code), "{side} {factor}\n{out}");
        assert!(out.trim_end().ends_with("OVERALL CONSISTENT"));
    }
}

#[test]
fn machine_report_grammar() {
    let dir = TempDir::new().unwrap();
    let body = spec("CBB", "1", "interval(0,pi)", "sin(t)", "[[0],[\"pi\"]]", "circle(2*pi)", 128);
    let s = write_spec(dir.path(), "s2.toml", &body);
    let o = warpcurv(&["certify", &s, "--format", "machine"]);
    let out = stdout(&o);
    let mut conditions = 0;
    for line in out.lines() {
        let mut words = line.split_whitespace();
        match words.next() {
            Some("INFO") => assert!(words.next().is_some_and(|kv| kv.contains('='))),
            Some("CONDITION") => {
                conditions += 1;
                let rest: Vec<&str> = words.collect();
                assert_eq!(rest.len(), 4, "{line}");
                assert!(rest[1] == "PASS" || rest[1] == "FAIL");
                assert!(rest[2].strip_prefix("margin=").unwrap().parse::<f64>().is_ok());
                assert!(rest[3].strip_prefix("slack=").unwrap().parse::<f64>().is_ok());
            }
            Some("OVERALL") => assert_eq!(words.next(), Some("CONSISTENT")),
            other => panic!("unexpected record {other:?}"),
        }
    }
    assert!(conditions >= 5);
    assert_eq!(out.lines().last().map(|l| l.starts_with("OVERALL")), Some(true));
}

#[test]
fn report_defaults_to_text() {
    let dir = TempDir::new().unwrap();
    let s = write_spec(dir.path(), "cone.toml", &spec("CBB", "0", "ray", "t", "[[0]]", "circle(2*pi*0.9)", 128));
    let o = warpcurv(&["report", &s]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("[pass] fiber_cbb"));
    assert!(out.contains("consistent"));
}

#[test]
fn engine_backed_certification_is_consistent() {
    let dir = TempDir::new().unwrap();
    for (side, code) in [("CAT", 1), ("CBB", 0)] {
        let s = write_spec(
            dir.path(),
            &format!("{side}.toml"),
            &spec(side, "0", "interval(0,1)", "1", "\"empty\"", "circle(3)", 32),
        );
        let o = warpcurv(&["certify", &s]);
        assert_eq!(o.status.code(), Some(code), "{}", stdout(&o));
        assert!(stdout(&o).contains("OVERALL CONSISTENT"));
    }
}

#[test]
fn reports_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let s = write_spec(dir.path(), "cone.toml", &spec("CAT", "0", "ray", "t", "[[0]]", "circle(2*pi*0.9)", 128));
    let a = warpcurv(&["certify", &s]);
    let b = warpcurv(&["certify", &s]);
    assert_eq!(a.stdout, b.stdout);
    let args = ["sample", "circle(2*pi-0.1)", "--kind", "CAT", "--kappa", "1", "-n", "500", "--seed", "4"];
    assert_eq!(warpcurv(&args).stdout, warpcurv(&args).stdout);
}

#[test]
fn input_errors_exit_with_three() {
    let dir = TempDir::new().unwrap();
    assert_eq!(warpcurv(&["certify", "/nonexistent/spec.toml"]).status.code(), Some(3));
    let bad = write_spec(dir.path(), "bad.toml", "side = \"CAT\"\nkappa = 0\n");
    assert_eq!(warpcurv(&["certify", &bad]).status.code(), Some(3));
    let typo = write_spec(dir.path(), "typo.toml", &spec("CAT", "0", "ray", "t", "[[0]]", "circel(3)", 64));
    assert_eq!(warpcurv(&["certify", &typo]).status.code(), Some(3));
    assert_eq!(warpcurv(&["sample", "blob(1)", "--kind", "CAT", "--kappa", "0"]).status.code(), Some(3));
    assert_eq!(warpcurv(&["sample", "circle(3)", "--kind", "XYZ", "--kappa", "0"]).status.code(), Some(3));
    let cone = write_spec(dir.path(), "cone.toml", &spec("CAT", "0", "ray", "t", "[[0]]", "line", 64));
    assert_eq!(warpcurv(&["distance", &cone, "--from", "-1,0", "--to", "1,0"]).status.code(), Some(3));
}
