use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ndfm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ndfm")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name).to_string_lossy().into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_fields_slices_and_matrix() {
    let tmp = tempfile::tempdir().unwrap();
    let dump = tmp.path().join("a.txt");
    let o = ndfm(&["run", &scenario("ex5_regular.json"), "--out", s(tmp.path()), "--dump-matrix", s(&dump), "--cond"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("converged") && out.contains("cond2"), "{out}");
    for f in ["ex5.csv", "ex5.vtk", "ex5_slice0.csv", "ex5_slice1.csv"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let lines: Vec<String> = fs::read_to_string(&dump).unwrap().lines().map(String::from).collect();
    let first: Vec<&str> = lines[0].split_whitespace().collect();
    assert_eq!(first.len(), 3);
    assert_eq!(first[0], "1");
}

#[test]
fn gen_mesh_then_degenerate_check() {
    let tmp = tempfile::tempdir().unwrap();
    let mesh = tmp.path().join("grid.mesh");
    let o = ndfm(&["gen-mesh", "rect-tri", "--nx", "8", "--ny", "8", "-o", s(&mesh)]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("128 cells, 81 vertices"));
    let cfg = tmp.path().join("conf.json");
    fs::write(
        &cfg,
        r#"{
            "mesh": {"kind": "tri3", "path": "grid.mesh"},
            "fractures": {"inline": ["SEG 0.125 0.5 0.875 0.5 1e-3 1e5", "SEG 0.25 0.25 0.75 0.75 1e-3 1e4"]},
            "bc": {"1": {"kind": "dirichlet", "expr": "1"}, "2": {"kind": "dirichlet", "expr": "0"},
                   "3": {"kind": "neumann", "expr": "0"}, "4": {"kind": "neumann", "expr": "0"}}
        }"#,
    )
    .unwrap();
    let o = ndfm(&["degenerate-check", s(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("degenerates to the classical DFM"));
}

#[test]
fn convergence_prints_a_table() {
    let o = ndfm(&["convergence", "--theta", "0", "--meshes", "8,16"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3, "{out}");
    assert!(out.lines().nth(2).unwrap().trim_start().starts_with("16x16"));
}

#[test]
fn consistency_prints_a_row_per_delta() {
    let o = ndfm(&["consistency", &scenario("ex2_circle.json"), "--deltas", "1e-3,1e-6"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn oracle_reports_each_slice() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ndfm(&[
        "oracle",
        &scenario("ex1_cross.json"),
        "--resolution",
        "201",
        "--width",
        "2e-2",
        "--out",
        s(tmp.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("slice ")).count(), 3);
    assert!(tmp.path().join("ex1_oracle_slice2.csv").exists());
}

#[test]
fn bad_inputs_fail_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, r#"{"mesh": {"kind": "quad4", "nx": 4, "ny": 4}, "bc": {}, "colour": 1}"#).unwrap();
    let o = ndfm(&["run", s(&cfg)]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    let o = ndfm(&["oracle", &scenario("ex1_cross.json"), "--resolution", "51", "--width", "1e-2"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least"));
}
