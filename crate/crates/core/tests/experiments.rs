use fsl::experiments::{
    emit_report, run_experiment, ExperimentSpec, Region, SourceSpec, Verdict, REPORT_CSV,
};
use fsl::geometry::FamilyKind;

fn planar(family: FamilyKind, indices: Vec<usize>, h: f64) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(family, indices, 2.0, h, SourceSpec::Region { name: Region::S2 });
    spec.dim = 2;
    spec
}

#[test]
fn hausdorff_column_halves() {
    for family in [FamilyKind::Example1, FamilyKind::Example2] {
        let r = run_experiment(&planar(family, vec![4, 8, 16, 32], 1.0 / 32.0)).unwrap();
        for w in r.rows.windows(2) {
            let q = w[1].hausdorff / w[0].hausdorff;
            assert!((q - 0.5).abs() <= 0.05, "{family:?}: {q}");
        }
    }
}

#[test]
fn translating_plane_is_stable_at_both_resolutions() {
    for h in [1.0 / 32.0, 1.0 / 64.0] {
        let r = run_experiment(&planar(FamilyKind::TranslatingPlane, vec![4, 8, 16, 32], h)).unwrap();
        assert_eq!(r.verdict, Verdict::Stable, "h = {h}: {:?}", r.rule);
        assert!(r.rows.iter().all(|row| row.residual.is_finite()));
    }
}

#[test]
fn plates_are_not_stable_in_the_plane() {
    let mut spec = planar(FamilyKind::Example2, vec![4, 8, 16, 32], 1.0 / 32.0);
    spec.source = SourceSpec::Region { name: Region::S1 };
    let r = run_experiment(&spec).unwrap();
    assert_eq!(r.verdict, Verdict::NonStable, "{:?}", r.rule);
    assert_eq!(r.limit.components, 2);
}

#[test]
fn reports_do_not_depend_on_threads() {
    let spec = planar(FamilyKind::Example1, vec![4, 8, 16], 1.0 / 16.0);
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        std::env::set_var("FSL_THREADS", threads);
        let r = run_experiment(&spec).unwrap();
        let sub = dir.path().join(threads);
        let (csv, json) = emit_report(&r, &sub).unwrap();
        outputs.push((std::fs::read(csv).unwrap(), std::fs::read(json).unwrap()));
    }
    std::env::set_var("FSL_THREADS", "zero");
    assert_eq!(run_experiment(&spec).unwrap_err().kind(), "argument");
    std::env::remove_var("FSL_THREADS");
    assert_eq!(outputs[0], outputs[1]);
    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.path().join("1").join(REPORT_CSV).exists());
}

#[test]
fn invalid_specs_are_rejected() {
    let bad = [
        planar(FamilyKind::Example1, vec![8, 4], 1.0 / 16.0),
        planar(FamilyKind::Example1, vec![4, 8, 32], 1.0 / 16.0),
        planar(FamilyKind::Example1, vec![4, 6], 1.0 / 16.0),
        ExperimentSpec {
            p: 1.0,
            ..planar(FamilyKind::Example1, vec![4], 1.0 / 16.0)
        },
    ];
    for spec in &bad {
        assert_eq!(run_experiment(spec).unwrap_err().kind(), "argument", "{spec:?}");
    }
}

#[test]
fn spec_parses_from_json() {
    let text = r#"{
        "family": "example2",
        "indices": [4, 8],
        "p": 1.5,
        "h": 0.125,
        "dim": 2,
        "source": {"kind": "region", "name": "s1"}
    }"#;
    let spec: ExperimentSpec = serde_json::from_str(text).unwrap();
    assert_eq!(spec.threshold, 0.5);
    assert!(spec.validate().is_ok());
    assert!(serde_json::from_str::<ExperimentSpec>(&text.replace("\"dim\"", "\"dims\"")).is_err());
}
