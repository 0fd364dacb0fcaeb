use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const TANH_HALF_PI: f64 = 0.917_152_335_667_274_3;
const COTH_HALF_PI: f64 = 1.090_331_410_727_920_7;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn lres(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lres"))
        .args(args)
        .output()
        .expect("run lres")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn entry(m: &Value, i: usize, j: usize) -> (f64, f64) {
    let z = &m[i][j];
    (z[0].as_f64().unwrap(), z[1].as_f64().unwrap())
}

fn temp_file(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn monodromy_of_the_free_system() {
    let fs = data("fs.json");
    let out = lres(&["monodromy", "--spec", path_str(&fs), "--lambda", "0.5+0i", "--lambda", "0+0i"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    let rot = &doc["records"][0]["U"];
    let expected = [[0.0, 1.0], [-1.0, 0.0]];
    for i in 0..2 {
        for j in 0..2 {
            let (re, im) = entry(rot, i, j);
            assert!((re - expected[i][j]).abs() < 1e-14 && im.abs() < 1e-14);
        }
    }
    let id = &doc["records"][1]["U"];
    assert_eq!(entry(id, 0, 0), (1.0, 0.0));
    assert_eq!(entry(id, 0, 1), (0.0, 0.0));
}

#[test]
fn malformed_spec_exits_with_schema_record() {
    let bad = temp_file(r#"{"p": 2, "length": 1.0, "J": [[0, -1], [1, 0]], "segments": [{"t_end": 1.0, "F": [[0, 0]]}]}"#);
    let out = lres(&["monodromy", "--spec", path_str(bad.path()), "--lambda", "0+0i"]);
    assert_eq!(out.status.code(), Some(1));
    let doc = json_of(&out);
    assert_eq!(doc["records"][0]["error"], "SchemaError");
}

#[test]
fn invariant_violation_in_spec_exits_2() {
    let neg = temp_file(r#"{"p": 2, "length": 1.0, "J": [[0, -1], [1, 0]], "segments": [{"t_end": 1.0, "F": [[0, 0], [0, 0]], "H": [[1, 0], [0, -1]]}]}"#);
    let out = lres(&["weyl", "--spec", path_str(neg.path()), "--lambda", "i"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["records"][0]["error"], "InvariantViolation");
}

#[test]
fn usage_errors_exit_1() {
    let fs = data("fs.json");
    assert_eq!(lres(&["weyl", "--spec", path_str(&fs), "--lambda", "x"]).status.code(), Some(1));
    assert_eq!(lres(&["weyl", "--spec", path_str(&fs)]).status.code(), Some(1));
    assert_eq!(lres(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(lres(&["weyl", "--spec", "/nonexistent.json", "--lambda", "i"]).status.code(), Some(1));
    assert_eq!(lres(&["--help"]).status.code(), Some(0));
}

#[test]
fn weyl_points_and_spectral_records() {
    let fs = data("fs.json");
    let out = lres(&["weyl", "--spec", path_str(&fs), "--lambda", "0+1i", "--lambda", "1+0i"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    let m = &doc["records"][0]["M"];
    let (re, im) = entry(m, 0, 0);
    assert!(re.abs() < 1e-12 && (im - TANH_HALF_PI).abs() < 1e-12);
    assert!(entry(m, 0, 1).0.abs() < 1e-12);
    let hit = &doc["records"][1];
    assert_eq!(hit["error"], "SpectrumOfA0");
    assert!(hit.get("M").is_none());
    assert!(hit["det"].as_f64().unwrap() < 1e-12);
}

#[test]
fn weyl_grid_is_herglotz_and_ordered() {
    let fs = data("fs.json");
    let out = lres(&["weyl", "--spec", path_str(&fs), "--grid", "0.1:2:5,0.1:2:5", "--check"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    let records = doc["records"].as_array().unwrap();
    assert_eq!(records.len(), 25);
    for (k, r) in records.iter().enumerate() {
        assert_eq!(r["index"].as_u64().unwrap() as usize, k);
        assert!(r["im_min_eigenvalue"].as_f64().unwrap() >= -1e-9);
    }
    // row-major: the imaginary part varies fastest
    assert_eq!(records[1]["lambda"][0].as_f64(), Some(0.1));
    assert!((records[1]["lambda"][1].as_f64().unwrap() - 0.575).abs() < 1e-15);
}

#[test]
fn resolvent_matrices() {
    let fs = data("fs.json");
    let out = lres(&["resmatrix", "--spec", path_str(&fs), "--lambda", "0", "--side", "left", "--check"]);
    let doc = json_of(&out);
    let w = &doc["records"][0]["W"];
    for i in 0..4 {
        for j in 0..4 {
            let expected = match (i, j) {
                (0, 2) | (1, 3) => 1.0,
                (2, 0) | (3, 1) => -1.0,
                _ => 0.0,
            };
            assert_eq!(entry(w, i, j), (expected, 0.0), "W[{i}][{j}]");
        }
    }
    assert!(doc["records"][0]["jp_residual"].as_f64().unwrap() <= 1e-8);

    // right at lambda is the adjoint of left at conj lambda
    let right = json_of(&lres(&["resmatrix", "--spec", path_str(&fs), "--lambda", "0.3+0.7i"]));
    let left = json_of(&lres(&["resmatrix", "--spec", path_str(&fs), "--lambda", "0.3-0.7i", "--side", "left"]));
    for i in 0..4 {
        for j in 0..4 {
            let (a, b) = entry(&right["records"][0]["W"], i, j);
            let (c, d) = entry(&left["records"][0]["W"], j, i);
            assert!((a - c).abs() < 1e-14 && (b + d).abs() < 1e-14);
        }
    }
}

#[test]
fn l_resolvents_of_constant_pairs() {
    let fs = data("fs.json");
    for (pair, expected) in [("dirichlet.json", TANH_HALF_PI), ("neumann.json", COTH_HALF_PI)] {
        let p = data(pair);
        let out = lres(&["lres", "--spec", path_str(&fs), "--pair", path_str(&p), "--lambda", "i"]);
        assert_eq!(out.status.code(), Some(0));
        let rec = &json_of(&out)["records"][0];
        let (re, im) = entry(&rec["r"], 1, 1);
        assert!(re.abs() < 1e-10 && (im - expected).abs() < 1e-10, "{pair}: {im}");
        assert!(rec["route_residual"].as_f64().unwrap() <= 1e-8);
        assert_eq!(rec["routes"], 3);
    }
    let asym = data("asymmetric.json");
    let out = lres(&["lres", "--spec", path_str(&fs), "--pair", path_str(&asym), "--lambda", "i"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["records"][0]["error"], "InvariantViolation");
}

#[test]
fn callable_pair_on_the_random_system() {
    let rs = data("rs7.json");
    let pair = data("lambda_sq.json");
    let out = lres(&["lres", "--spec", path_str(&rs), "--pair", path_str(&pair), "--grid", "-1:1:3,0.5:1:2"]);
    assert_eq!(out.status.code(), Some(0));
    for r in json_of(&out)["records"].as_array().unwrap() {
        assert!(r["route_residual"].as_f64().unwrap() <= 1e-8);
        // -2i (C D^* - D C^*) = 8 Re(lambda) Im(lambda) for (lambda^2, 1): the
        // (A, B) route applies only where Re lambda >= 0
        let expected = if r["lambda"][0].as_f64().unwrap() < 0.0 { 2 } else { 3 };
        assert_eq!(r["routes"], expected);
    }
}

#[test]
fn kernel_inertia_is_positive_on_the_free_system() {
    let fs = data("fs.json");
    let pair = data("neumann.json");
    let out = lres(&["kernel-inertia", "--spec", path_str(&fs), "--pair", path_str(&pair), "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let records = json_of(&out)["records"].as_array().unwrap().clone();
    assert_eq!(records.len(), 4);
    for r in records {
        assert_eq!(r["n_neg"], 0, "{r}");
        assert_eq!(r["points"], 10);
    }
    // real points coincide with their own conjugates
    let out = lres(&["kernel-inertia", "--spec", path_str(&fs), "--lambda", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["records"][0]["error"], "ConfluentPoint");
}

#[test]
fn verify_passes_and_is_deterministic() {
    for (spec, seed) in [("fs.json", "42"), ("rs7.json", "7")] {
        let s = data(spec);
        let a = lres(&["verify", "--spec", path_str(&s), "--seed", seed]);
        assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
        let b = lres(&["verify", "--spec", path_str(&s), "--seed", seed]);
        assert_eq!(a.stdout, b.stdout);
        let doc = json_of(&a);
        let records = doc["records"].as_array().unwrap();
        assert!(records.len() >= 20);
        assert!(records.iter().all(|r| r["pass"] == true));
    }
}

#[test]
fn verify_warns_on_marginal_definiteness() {
    let marginal = temp_file(r#"{"p": 2, "length": 1.0, "J": [[0, -1], [1, 0]], "segments": [{"t_end": 1.0, "F": [[0, 0], [0, 0]], "H": [[1, 0], [0, 1e-7]]}]}"#);
    let out = lres(&["verify", "--spec", path_str(marginal.path())]);
    let doc = json_of(&out);
    assert_eq!(doc["records"][0]["name"], "warning");
    assert!(doc["records"].as_array().unwrap().len() > 20);
}

#[test]
fn csv_and_json_share_the_payload() {
    let rs = data("rs7.json");
    let args = ["weyl", "--spec", path_str(&rs), "--grid", "-1:1:3,-1:1:2"];
    let js = json_of(&lres(&args));
    let csv_out = lres(&[&args[..], &["--format", "csv"]].concat());
    let text = String::from_utf8(csv_out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|&h| h == "M_21").unwrap();
    for (k, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        let (re, im) = cells[col].split_once(';').unwrap();
        let (jre, jim) = entry(&js["records"][k]["M"], 1, 0);
        assert_eq!(re.parse::<f64>().unwrap(), jre);
        assert_eq!(im.parse::<f64>().unwrap(), jim);
    }
    // and a repeated CSV sweep is byte-identical
    let again = lres(&[&args[..], &["--format", "csv"]].concat());
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}
