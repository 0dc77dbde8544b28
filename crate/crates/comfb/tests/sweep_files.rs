use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::process::Command;

use comfb::exit;
use comfb::runner::{run_sweep, RunError, RunOptions, CHECKPOINT_FILE};
use comfb_core::measures::Measure;
use comfb_core::pipeline::PipelineSettings;
use comfb_core::sweep::{Axis, ParamPath, SweepSpec};
use comfb_core::SystemParams;

fn comfb(args: &[&str]) -> i32 {
    let o = Command::new(env!("CARGO_BIN_EXE_comfb")).args(args).env_remove("COMFB_PLOTTER").output().unwrap();
    o.status.code().unwrap()
}

/// Every output file except the checkpoint log, which records wall times.
fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != CHECKPOINT_FILE)
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn small_spec() -> SweepSpec {
    SweepSpec {
        name: "small".into(),
        base: SystemParams::paper_defaults(),
        axis1: Axis::linspace(ParamPath::Rb, 0.0, 0.3, 3),
        axis2: Some(Axis::linspace(ParamPath::GmOverGc, 1.0, 2.0, 2)),
        outputs: Measure::ALL.to_vec(),
        budget_secs: 60.0,
        settings: PipelineSettings::default(),
    }
}

#[test]
fn worker_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("w1"), tmp.path().join("w3"));
    let base = ["figure", "fig4", "--grid", "4x3", "--no-plot"];
    let mut one = base.to_vec();
    one.extend(["--workers", "1", "--out", a.to_str().unwrap()]);
    let mut three = base.to_vec();
    three.extend(["--workers", "3", "--out", b.to_str().unwrap()]);
    assert_eq!(comfb(&one), exit::OK);
    assert_eq!(comfb(&three), exit::OK);
    let (x, y) = (outputs(&a), outputs(&b));
    assert_eq!(x.keys().collect::<Vec<_>>(), y.keys().collect::<Vec<_>>());
    for (name, bytes) in &x {
        assert!(bytes == &y[name], "{name} differs between worker counts");
    }
}

#[test]
fn resume_after_interruption_matches_uninterrupted_run() {
    let tmp = tempfile::tempdir().unwrap();
    let (whole, split) = (tmp.path().join("whole"), tmp.path().join("split"));
    let base = ["figure", "fig3b", "--grid", "3x3", "--no-plot", "--workers", "2"];
    let mut w = base.to_vec();
    w.extend(["--out", whole.to_str().unwrap()]);
    assert_eq!(comfb(&w), exit::OK);

    let mut s = base.to_vec();
    s.extend(["--out", split.to_str().unwrap()]);
    let mut first = s.clone();
    first.extend(["--stop-after", "4"]);
    assert_eq!(comfb(&first), exit::INCOMPLETE);
    // A writer killed mid-line leaves a torn record behind.
    let mut log = OpenOptions::new().append(true).open(split.join(CHECKPOINT_FILE)).unwrap();
    log.write_all(b"{\"wall_secs\":0.1,\"cell\":{\"ind").unwrap();
    drop(log);
    assert_eq!(comfb(&s), exit::OK);

    let (x, y) = (outputs(&whole), outputs(&split));
    for (name, bytes) in &x {
        assert!(bytes == &y[name], "{name} differs after resume");
    }
}

#[test]
fn checkpoint_from_another_sweep_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let mut opts = RunOptions { checkpoint_dir: Some(tmp.path().to_path_buf()), ..RunOptions::default() };
    let spec = small_spec();
    run_sweep(&spec, &RunOptions { stop_after: Some(1), ..opts.clone() }).unwrap();

    let mut other = spec.clone();
    other.base.r_b = 0.05;
    other.axis1 = Axis::linspace(ParamPath::DeltaA, 0.9, 1.1, 3);
    assert!(matches!(run_sweep(&other, &opts), Err(RunError::ForeignCheckpoint(_))));
    opts.fresh = true;
    let outcome = run_sweep(&other, &opts).unwrap();
    assert_eq!(outcome.resumed, 0);
    assert!(outcome.result.is_some());
}

#[test]
fn grid_files_follow_the_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    assert_eq!(comfb(&["figure", "fig4", "--grid", "5x4", "--no-plot", "--out", out.to_str().unwrap()]), exit::OK);

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["kind"], "sweep");
    assert_eq!(manifest["grid"]["shape"], serde_json::json!([5, 4]));
    assert_eq!(manifest["grid"]["axis1"]["path"], "omega_m/delta_c");
    assert_eq!(manifest["grid"]["axis2"]["path"], "r_b");
    assert!(manifest["base_params"]["drive"].is_number());
    assert!(manifest["tolerances"]["integrator"]["rtol"].is_number());
    assert!(manifest["code_version"].as_str().unwrap().starts_with("comfb "));
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();

    for name in &outputs {
        let text = fs::read_to_string(out.join(format!("{name}.csv"))).unwrap();
        let mut lines = text.lines();
        let comment = lines.next().unwrap();
        assert!(comment.starts_with("# schema_version=1 "), "{comment}");
        assert!(comment.contains(&format!("measure={name} ")));
        assert_eq!(lines.next().unwrap(), "axis1,axis2,value,verdict");
        let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
        assert_eq!(rows.len(), 20);
        for (k, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), 4);
            let x1: f64 = row[0].parse().unwrap();
            let x2: f64 = row[1].parse().unwrap();
            let want1 = manifest["grid"]["axis1"]["values"][k % 5].as_f64().unwrap();
            let want2 = manifest["grid"]["axis2"]["values"][k / 5].as_f64().unwrap();
            assert_eq!((x1, x2), (want1, want2));
            assert!(["ok", "unstable", "not-converged", "quasi-periodic", "unphysical"].contains(&row[3]), "{}", row[3]);
            assert_eq!(row[2].is_empty(), row[3] != "ok");
        }
    }

    let contours = fs::read_to_string(out.join("contours.csv")).unwrap();
    assert_eq!(contours.lines().nth(1).unwrap(), "measure,level,polyline,vertex,axis1,axis2,closed");
    let cells = fs::read_to_string(out.join("cells.csv")).unwrap();
    let header = cells.lines().nth(1).unwrap();
    for col in ["verdict", "poincare_residual", "power_balance_residual", "cooperativity", "dominant_phonon_re", "E_N_max"] {
        assert!(header.split(',').any(|c| c == col), "{col}");
    }
    assert_eq!(cells.lines().count(), 22);
}
