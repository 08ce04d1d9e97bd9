//! Pipeline and batch runs over project files on disk.

use std::path::Path;

use speedkit_core::bench::{self, Outcome};
use speedkit_core::pipeline::{self, EstimateError};
use speedkit_core::synth::{self, Roadside, SyntheticScene};
use speedkit_core::timing;

fn write_scene(dir: &Path, name: &str, scene: &SyntheticScene) {
    scene.project.save(dir.join(name)).unwrap();
    if let Some(times) = &scene.sidecar {
        std::fs::write(dir.join(synth::SIDECAR_NAME), timing::format_sidecar(times)).unwrap();
    }
}

#[test]
fn file_estimate_equals_in_memory_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let spec = Roadside { m: 2, noise_px: 1.5, timestamp_jitter_s: 0.003, seed: 4, ..Roadside::default() }.scene();
    let scene = synth::generate_scene(&spec).unwrap();
    assert!(scene.sidecar.is_some());
    write_scene(dir.path(), "pass.fsp", &scene);
    let from_file = pipeline::estimate_file(&dir.path().join("pass.fsp")).unwrap();
    let in_memory = scene.estimate().unwrap();
    assert_eq!(from_file.to_json(), in_memory.to_json());
    assert!(from_file.estimate.contains(spec.vehicle.speed_mps));
}

#[test]
fn missing_sidecar_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let spec = Roadside { timestamp_jitter_s: 0.002, ..Roadside::default() }.scene();
    let scene = synth::generate_scene(&spec).unwrap();
    scene.project.save(dir.path().join("pass.fsp")).unwrap();
    let err = pipeline::estimate_file(&dir.path().join("pass.fsp")).unwrap_err();
    assert!(matches!(err, EstimateError::Timing(timing::TimingError::Io { .. })));
}

#[test]
fn incomplete_project_lists_missing_pieces() {
    let scene = synth::generate_scene(&Roadside::default().scene()).unwrap();
    let mut p = scene.project.clone();
    p.grid = None;
    p.path.cps.truncate(1);
    match pipeline::estimate_project(&p, None) {
        Err(EstimateError::IncompleteAnnotation(missing)) => {
            assert_eq!(missing, vec!["grid", "path (at least 2 contact points)"]);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn batch_over_synthetic_projects() {
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = String::from("# synthetic batch\n");
    for (i, angle) in [12.0, 35.0, 58.0].into_iter().enumerate() {
        let spec = Roadside { road_angle_deg: angle, m: 2, noise_px: 2.0, seed: i as u64, ..Roadside::default() }.scene();
        let scene = synth::generate_scene(&spec).unwrap();
        let sub = dir.path().join(format!("cam{i}"));
        std::fs::create_dir_all(&sub).unwrap();
        write_scene(&sub, "T1P2.fsp", &scene);
        manifest.push_str(&format!(
            "[[entry]]\ncamera = \"cam{i}\"\nstream = \"cam{i}/main/avi\"\npass_id = \"T{}P2\"\nproject = \"cam{i}/T1P2.fsp\"\ngt_mph = {:?}\n\n",
            if angle < 30.0 { 1 } else { 2 },
            spec.vehicle.speed_mps / speedkit_core::model::MPS_PER_MPH
        ));
    }
    let mut broken = synth::generate_scene(&Roadside::default().scene()).unwrap();
    broken.project.grid = None;
    write_scene(dir.path(), "nogrid.fsp", &broken);
    manifest.push_str("[[entry]]\ncamera = \"broken\"\npass_id = \"T1P1\"\nproject = \"nogrid.fsp\"\n");
    std::fs::write(dir.path().join("batch.toml"), &manifest).unwrap();

    let m = bench::ingest_manifest(&dir.path().join("batch.toml")).unwrap();
    let records = bench::run_bench(&m);
    assert_eq!(records.len(), 4);
    for r in &records[..3] {
        assert!(r.measured().unwrap().covered, "{r:?}");
    }
    assert_eq!(records[3].outcome, Outcome::Excluded("no rectification reference".into()));
    assert_eq!(records[3].gt_mph, 29.0);
    assert_eq!(records.iter().map(|r| r.camera.as_str()).collect::<Vec<_>>(), ["cam0", "cam1", "cam2", "broken"]);

    let out = dir.path().join("report");
    let report = bench::write_report(&records, &out, true).unwrap().unwrap();
    assert_eq!((report.total, report.excluded, report.all.n), (4, 1, 3));
    for f in ["records.csv", "summary.txt", "dv_hist_low.csv", "dv_hist_strong.csv", "dv_hist_low.svg"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let csv = std::fs::read_to_string(out.join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn empty_batch_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    assert!(bench::write_report(&[], dir.path(), false).unwrap().is_none());
    let csv = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn overall_mean_is_average_of_split_means() {
    use bench::{EvalRecord, Measurement, PassId, Perspective};
    let mk = |p: Perspective, err: f64| EvalRecord {
        camera: "c".into(),
        pass_id: PassId { test: if p == Perspective::Low { 1 } else { 2 }, pass: 1 },
        perspective: p,
        gt_mph: 30.0,
        outcome: Outcome::Measured(Measurement::new(30.0 + err, 1.0, 30.0)),
    };
    let mut recs: Vec<EvalRecord> = (0..89).map(|_| mk(Perspective::Low, -0.93)).collect();
    recs.extend((0..180).map(|_| mk(Perspective::Strong, -0.99)));
    let rep = bench::aggregate(&recs).unwrap();
    assert!((rep.mean_of_split_means().unwrap() + 0.96).abs() < 1e-12);
    let pooled = (89.0 * -0.93 + 180.0 * -0.99) / 269.0;
    assert!((rep.all.mean_signed_error_mph - pooled).abs() < 1e-12);
}
