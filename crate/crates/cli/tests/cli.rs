use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn dgff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgff"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_p4() {
    let out = dgff(&[
        "validate",
        "--graph",
        path(&fixture("p4.edges")),
        "--foliation",
        path(&fixture("p4.foliation.json")),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["ok"], true);
    assert_eq!(doc["depth"], 1);
}

#[test]
fn skipped_layer_is_a_locality_violation() {
    let dir = tempfile::tempdir().unwrap();
    let fol = dir.path().join("skip.json");
    std::fs::write(&fol, r#"{"layers": [["v2"], ["v1"], ["v3"]]}"#).unwrap();
    let out = dgff(&[
        "validate",
        "--graph",
        path(&fixture("p5.edges")),
        "--foliation",
        path(&fol),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let doc = json(&out);
    assert_eq!(doc["ok"], false);
    assert_eq!(doc["code"], "LocalityViolation");
}

#[test]
fn missing_file_is_an_io_error() {
    let out = dgff(&[
        "validate",
        "--graph",
        "/nonexistent/graph.edges",
        "--roots",
        "v1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["code"], "IoError");
}

#[test]
fn cluster_out_of_range() {
    let out = dgff(&[
        "green",
        "--graph",
        path(&fixture("p4.edges")),
        "--roots",
        "v1",
        "--cluster",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["code"], "IndexOutOfRange");
}

#[test]
fn foliate_matches_shipped_grid_foliation() {
    let out = dgff(&[
        "foliate",
        "--graph",
        path(&fixture("grid5.json")),
        "--roots",
        "g2_2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let shipped: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("grid5.foliation.json")).unwrap())
            .unwrap();
    assert_eq!(json(&out)["layers"], shipped["layers"]);
}

#[test]
fn green_csv_for_p4() {
    let out = dgff(&[
        "green",
        "--graph",
        path(&fixture("p4.edges")),
        "--roots",
        "v1",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("vertex,v1,v2"));
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((row[0] - 2.0 / 3.0).abs() <= 1e-12);
    assert!((row[1] - 1.0 / 3.0).abs() <= 1e-12);
}

#[test]
fn poisson_json_for_p4() {
    let out = dgff(&[
        "poisson",
        "--graph",
        path(&fixture("p4.edges")),
        "--roots",
        "v1",
    ]);
    let doc = json(&out);
    assert_eq!(doc["columns"], serde_json::json!(["v2"]));
    assert!((doc["matrix"][0][0].as_f64().unwrap() - 0.5).abs() <= 1e-15);
    assert_eq!(doc["matrix"][1][0].as_f64().unwrap(), 1.0);
}

#[test]
fn hadamard_writes_matrices_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dgff(&[
        "hadamard",
        "--graph",
        path(&fixture("grid5.json")),
        "--foliation",
        path(&fixture("grid5.foliation.json")),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for f in ["q.csv", "qqt.csv", "gram.csv", "summary.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    for key in [
        "identity_residual",
        "isometry_residual",
        "variation_residual",
    ] {
        assert!(summary[key].as_f64().unwrap() <= 1e-10, "{key}");
    }
}

fn read_sample(p: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(p).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn samples_are_reproducible_and_telescope() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |dir: &Path| {
        dgff(&[
            "sample",
            "--graph",
            path(&fixture("grid5.json")),
            "--foliation",
            path(&fixture("grid5.foliation.json")),
            "--n-samples",
            "3",
            "--seed",
            "7",
            "--out",
            path(dir),
        ])
    };
    assert_eq!(run(a.path()).status.code(), Some(0));
    assert_eq!(run(b.path()).status.code(), Some(0));
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "manifest.json",
            "sample_0000.csv",
            "sample_0001.csv",
            "sample_0002.csv"
        ]
    );
    for name in &names {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    for name in &names[1..] {
        let (header, rows) = read_sample(&a.path().join(name));
        assert_eq!(
            header,
            ["vertex", "psi_0", "psi_1", "psi_2", "inc_1", "inc_2"]
        );
        for r in &rows {
            let telescoped = r[0] + r[3] + r[4];
            assert!((telescoped - r[2]).abs() <= 1e-12, "{name}: {r:?}");
        }
    }
    let c = tempfile::tempdir().unwrap();
    let other = dgff(&[
        "sample",
        "--graph",
        path(&fixture("grid5.json")),
        "--roots",
        "g2_2",
        "--n-samples",
        "1",
        "--seed",
        "8",
        "--out",
        path(c.path()),
    ]);
    assert_eq!(other.status.code(), Some(0));
    assert_ne!(
        std::fs::read(a.path().join("sample_0000.csv")).unwrap(),
        std::fs::read(c.path().join("sample_0000.csv")).unwrap()
    );
}

fn verify(graph: &str, foliation: &Path, extra: &[&str]) -> (Option<i32>, Value) {
    let mut args = vec!["verify", "--graph", graph, "--foliation", path(foliation)];
    args.extend_from_slice(extra);
    let out = dgff(&args);
    (out.status.code(), json(&out))
}

fn first_failure(report: &Value) -> Option<String> {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap().to_string())
}

#[test]
fn verify_p4_passes() {
    let (code, report) = verify(
        path(&fixture("p4.edges")),
        &fixture("p4.foliation.json"),
        &["--seed", "42", "--trials", "100000"],
    );
    assert_eq!(first_failure(&report), None);
    assert_eq!(code, Some(0));
    assert_eq!(report["schema"], 1);
    assert_eq!(report["checks"].as_array().unwrap().len(), 24);
}

#[test]
fn verify_grid_passes() {
    let (code, report) = verify(
        path(&fixture("grid5.json")),
        &fixture("grid5.foliation.json"),
        &[],
    );
    assert_eq!(first_failure(&report), None);
    assert_eq!(code, Some(0));
}

#[test]
fn sign_flipped_conductance_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("grid5.json")).unwrap();
    let mut doc: Value = serde_json::from_str(&text).unwrap();
    let edge = doc["edges"]
        .as_array_mut()
        .unwrap()
        .iter_mut()
        .find(|e| e["u"] == "g2_1" && e["v"] == "g2_2")
        .unwrap();
    edge["c"] = serde_json::json!(-1.0);
    let graph = dir.path().join("tampered.json");
    std::fs::write(&graph, doc.to_string()).unwrap();

    let checked = dgff(&["validate", "--graph", path(&graph), "--roots", "g2_2"]);
    assert_eq!(checked.status.code(), Some(2));
    assert_eq!(json(&checked)["code"], "NonPositiveConductance");

    let (code, report) = verify(
        path(&graph),
        &fixture("grid5.foliation.json"),
        &["--unchecked", "--skip-monte-carlo"],
    );
    assert_eq!(code, Some(4));
    // The construction stays algebraically consistent, so the Poisson
    // bounds are what break.
    assert_eq!(first_failure(&report).as_deref(), Some("poisson_bounds"));
}

#[test]
fn sign_flip_on_path_breaks_construction() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("p4.edges");
    std::fs::write(
        &graph,
        "!exterior v0 v3\nv0 v1 -1.0\nv1 v2 1.0\nv2 v3 1.0\n",
    )
    .unwrap();
    let (code, report) = verify(
        path(&graph),
        &fixture("p4.foliation.json"),
        &["--unchecked"],
    );
    assert_eq!(code, Some(3));
    assert_eq!(report["code"], "NotPD");
}

#[test]
fn wrong_layer_assignment_fails_poisson_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let fol = dir.path().join("wrong.json");
    std::fs::write(&fol, r#"{"layers": [["v1"], ["v3"], ["v2"]]}"#).unwrap();
    let (code, report) = verify(
        path(&fixture("p5.edges")),
        &fol,
        &["--unchecked", "--trials", "1000"],
    );
    assert_eq!(code, Some(4));
    assert_eq!(first_failure(&report).as_deref(), Some("poisson_bounds"));
}

#[test]
fn nonpositive_tolerance_is_rejected() {
    let out = dgff(&[
        "verify",
        "--graph",
        path(&fixture("p4.edges")),
        "--roots",
        "v1",
        "--tol-exact",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
