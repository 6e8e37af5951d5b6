use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fsl::experiments::{REPORT_CSV, REPORT_JSON};
use fsl::geometry::{make_family, CompactSet, FamilyKind};
use fsl::mesh::parse_dump;
use fsl::solver::parse_field_csv;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn fsl(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsl"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn hausdorff_of_the_fourth_slit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("ex1_n4.toml");
    let o = fsl(&["hausdorff", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let d: f64 = stdout(&o).trim().parse().unwrap();
    assert!((d - 0.25).abs() <= 2.0 / 256.0);
    let written = json(&dir.path().join("hausdorff.json"));
    assert_eq!(written["distance"].as_f64().unwrap(), d);

    // --n overrides the family index
    let o = fsl(&["hausdorff", "--config", cfg.to_str().unwrap(), "--n", "8"], dir.path());
    let d: f64 = stdout(&o).trim().parse().unwrap();
    assert!((d - 0.125).abs() <= 2.0 / 256.0);
}

const CONSTANT_SOLVE: &str = r#"
schema = 1
h = 0.0625

[geometry]
family = "example1"
n = 4
dim = 2

[source]
kind = "constant"
value = 1.0
"#;

#[test]
fn solve_reproduces_constant_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSTANT_SOLVE);
    for p in ["1.5", "2", "3"] {
        let out = dir.path().join(p);
        let o = fsl(&["solve", "--config", cfg.to_str().unwrap(), "--p", p], &out);
        assert!(o.status.success(), "{}", stderr(&o));
        let u = parse_field_csv(&std::fs::read_to_string(out.join("field.csv")).unwrap()).unwrap();
        assert!(!u.is_empty());
        assert!(u.iter().all(|v| (v - 1.0).abs() <= 1e-12), "p = {p}");
        assert_eq!(json(&out.join("solve.json"))["p"].as_f64().unwrap(), p.parse::<f64>().unwrap());
        assert!(out.join("field.vtk").exists());
    }
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("ex1_n4.toml");
    let mut runs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = fsl(&["solve", "--config", cfg.to_str().unwrap(), "--h", "0.0625"], &out);
        assert!(o.status.success(), "{}", stderr(&o));
        let files: Vec<Vec<u8>> = ["field.csv", "field.vtk", "solve.json"]
            .iter()
            .map(|f| std::fs::read(out.join(f)).unwrap())
            .collect();
        runs.push((stdout(&o), files));
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn mesh_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("ex1_n4.toml");
    let o = fsl(&["mesh", "--config", cfg.to_str().unwrap(), "--h", "0.125"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));

    let text = std::fs::read_to_string(dir.path().join("geometry.json")).unwrap();
    let k: CompactSet = serde_json::from_str(&text).unwrap();
    assert_eq!(k, make_family(FamilyKind::Example1, 4, 3).unwrap().0);

    let dump = parse_dump(&std::fs::read_to_string(dir.path().join("mesh.dump")).unwrap()).unwrap();
    let summary = json(&dir.path().join("mesh.json"));
    assert_eq!(summary["nodes"].as_u64().unwrap() as usize, dump.nodes.len());
    assert_eq!(summary["elements"].as_u64().unwrap() as usize, dump.elements.len());
    assert_eq!(summary["duplicated_nodes"].as_u64().unwrap() as usize, dump.twins.len());
    assert_eq!(summary["components"].as_u64().unwrap(), 1);
    assert_eq!(stdout(&o).trim(), format!("nodes={} elements={}", dump.nodes.len(), dump.elements.len()));
}

#[test]
fn plates_violate_the_planarity_clause() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("ex2_ccond.toml");
    let o = fsl(&["check-ccond", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("violation clause=b n=8"), "{}", stdout(&o));
    let report = json(&dir.path().join("ccond.json"));
    assert_eq!(report["outcome"]["outcome"], "violation");
    assert_eq!(report["outcome"]["clause"], "b");
    assert_eq!(report["checked"], serde_json::json!([4]));
}

#[test]
fn geometry_commands_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, cfg, file) in [
        ("decompose", "l_shape_decompose.toml", "decomposition.json"),
        ("classify", "ex1_classify.toml", "classification.json"),
    ] {
        let out = dir.path().join(cmd);
        let o = fsl(&[cmd, "--config", configs().join(cfg).to_str().unwrap()], &out);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        json(&out.join(file));
    }
}

#[test]
fn small_experiment_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
schema = 1

[experiment]
family = "constant_plane"
indices = [2, 4, 8, 16]
p = 2.0
h = 0.0625
dim = 2
source = { kind = "region", name = "s2" }
"#,
    );
    let o = fsl(&["experiment", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "verdict=stable");
    let csv = std::fs::read_to_string(dir.path().join(REPORT_CSV)).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert_eq!(json(&dir.path().join(REPORT_JSON))["verdict"], "stable");
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = fsl(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    let cfg = write_config(dir.path(), "schema = 1\neps = 0.25\n");
    let o = fsl(&["hausdorff", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error kind=argument"), "{}", stderr(&o));
    assert!(stderr(&o).contains("geometry"));

    let cfg = write_config(dir.path(), "schema = 1\nepsilon = 0.25\n");
    let o = fsl(&["hausdorff", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error kind="));

    let missing = dir.path().join("nope.toml");
    let o = fsl(&["mesh", "--config", missing.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error kind="));
}

#[test]
fn non_convergence_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{CONSTANT_SOLVE}\n[solver]\nmax_iter = 1\n")
        .replace("kind = \"constant\"\nvalue = 1.0", "kind = \"region\"\nname = \"s2\"");
    let cfg = write_config(dir.path(), &text);
    let o = fsl(&["solve", "--config", cfg.to_str().unwrap(), "--p", "3"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error kind="));
}
