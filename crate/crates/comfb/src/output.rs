//! Output files read by the plotting component.
//!
//! Every CSV starts with one `#` line carrying `schema_version` and context
//! keys, followed by a header row. JSON files carry a `schema_version` field.
//! No file contains timestamps, so identical runs give identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use comfb_core::measures::{CorrelationRecord, Measure};
use comfb_core::pipeline::PointResult;
use comfb_core::sweep::SweepResult;
use comfb_core::integrate::Sample;
use comfb_core::SystemParams;
use serde::Serialize;
use serde_json::json;

use crate::runner::hash_json;
use crate::SCHEMA_VERSION;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CELLS_FILE: &str = "cells.csv";
pub const CONTOURS_FILE: &str = "contours.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const CYCLE_FILE: &str = "cycle.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// File name of the per-measure grid.
pub fn measure_file(m: Measure) -> String {
    format!("{}.csv", m.name())
}

/// Shortest round-trip text of `x`; empty for missing or non-finite values.
pub fn num(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v}"),
        _ => String::new(),
    }
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> io::Error + '_ {
    move |e| io::Error::new(e.kind(), format!("{}: {e}", path.display()))
}

fn write_csv(path: &Path, comment: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(format!("# {comment}\n").as_bytes());
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    fs::write(path, buf).map_err(io_at(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text).map_err(io_at(path))
}

/// Where a run came from, recorded in its manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunContext {
    pub command: String,
    pub preset: Option<String>,
    pub params_file: Option<String>,
    /// Overrides in application order.
    pub overrides: Vec<String>,
    /// Effective parameter-file entries.
    pub entries: BTreeMap<String, String>,
}

fn code_version() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

/// Writes the per-measure grids, the cell diagnostics, the steering
/// contours and the manifest. Returns the written paths.
pub fn write_sweep(dir: &Path, result: &SweepResult, ctx: &RunContext) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_at(dir))?;
    let spec = &result.spec;
    let a1 = spec.axis1.path.name();
    let a2 = spec.axis2.as_ref().map_or("", |a| a.path.name());
    let mut written = Vec::new();

    for &m in &spec.outputs {
        let path = dir.join(measure_file(m));
        let comment = format!("schema_version={SCHEMA_VERSION} measure={} axis1={a1} axis2={a2}", m.name());
        let rows = result.cells.iter().map(|c| {
            vec![num(Some(c.x1)), num(c.x2), num(c.value(m)), c.verdict.as_str().to_string()]
        });
        write_csv(&path, &comment, &["axis1", "axis2", "value", "verdict"], rows)?;
        written.push(path);
    }

    let path = dir.join(CELLS_FILE);
    let mut header = vec![
        "index", "i1", "i2", "axis1", "axis2", "snap", "verdict", "period", "cooperativity",
        "power_balance_residual", "mean_abs_alpha", "mean_photon_number", "dominant_phonon_re",
        "max_re_eig", "growth_rate", "poincare_residual", "min_symplectic", "max_asymmetry", "t_final", "steps",
    ];
    let measure_cols: Vec<String> = Measure::ALL.iter().flat_map(|m| [format!("{}_max", m.name()), format!("{}_t", m.name())]).collect();
    header.extend(measure_cols.iter().map(String::as_str));
    let rows = result.cells.iter().map(|c| {
        let d = &c.diagnostics;
        let mut row = vec![
            c.index.to_string(),
            c.i1.to_string(),
            c.i2.to_string(),
            num(Some(c.x1)),
            num(c.x2),
            num(Some(c.snap)),
            c.verdict.as_str().to_string(),
            num(c.period),
            num(d.cooperativity),
            num(d.power_balance_residual),
            num(d.mean_abs_alpha),
            num(d.mean_photon_number),
            num(d.dominant_phonon_re),
            num(d.max_re_eig),
            num(d.growth_rate),
            num(d.poincare_residual),
            num(d.min_symplectic),
            num(d.max_asymmetry),
            num(Some(d.t_final)),
            d.steps.to_string(),
        ];
        for m in Measure::ALL {
            let peak = c.maxima.map(|mx| mx.get(m));
            row.push(num(peak.map(|p| p.value)));
            row.push(num(peak.map(|p| p.t)));
        }
        row
    });
    write_csv(&path, &format!("schema_version={SCHEMA_VERSION} axis1={a1} axis2={a2}"), &header, rows)?;
    written.push(path);

    let path = dir.join(CONTOURS_FILE);
    let mut rows = Vec::new();
    for set in &result.contours {
        for (k, line) in set.polylines.iter().enumerate() {
            for (v, &(x, y)) in line.points.iter().enumerate() {
                rows.push(vec![
                    set.measure.name().to_string(),
                    num(Some(set.level)),
                    k.to_string(),
                    v.to_string(),
                    num(Some(x)),
                    num(Some(y)),
                    line.closed.to_string(),
                ]);
            }
        }
    }
    write_csv(
        &path,
        &format!("schema_version={SCHEMA_VERSION} axis1={a1} axis2={a2}"),
        &["measure", "level", "polyline", "vertex", "axis1", "axis2", "closed"],
        rows,
    )?;
    written.push(path);

    let counts: BTreeMap<&str, usize> = result.verdict_counts().into_iter().map(|(v, n)| (v.as_str(), n)).collect();
    let files: Vec<String> = written.iter().filter_map(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned()).collect();
    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "sweep",
        "name": spec.name,
        "code_version": code_version(),
        "context": ctx,
        "params_hash": hash_json(&spec.base),
        "spec_hash": hash_json(spec),
        "grid": {
            "axis1": { "path": a1, "values": spec.axis1.values },
            "axis2": spec.axis2.as_ref().map(|a| json!({ "path": a.path.name(), "values": a.values })),
            "shape": [spec.shape().0, spec.shape().1],
            "order": "axis1 fastest",
        },
        "outputs": spec.outputs.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "tolerances": spec.settings,
        "budget_secs": spec.budget_secs,
        "base_params": spec.base,
        "verdict_counts": counts,
        "files": files,
    });
    let path = dir.join(MANIFEST_FILE);
    write_json(&path, &manifest)?;
    written.push(path);
    Ok(written)
}

const SERIES_HEADER: [&str; 21] = [
    "t", "re_alpha", "im_alpha", "abs_alpha", "re_beta", "im_beta", "E_N", "G_ab", "G_ba", "S_b", "mu_b",
    "V00", "V01", "V02", "V03", "V11", "V12", "V13", "V22", "V23", "V33",
];

fn series_row(s: &Sample) -> Vec<String> {
    let rec = CorrelationRecord::from_covariance(&s.cov, s.mean.t).ok();
    let m = |f: fn(&CorrelationRecord) -> f64| num(rec.as_ref().map(f));
    let v = s.cov.entries();
    let mut row = vec![
        num(Some(s.mean.t)),
        num(Some(s.mean.alpha.re)),
        num(Some(s.mean.alpha.im)),
        num(Some(s.mean.alpha.norm())),
        num(Some(s.mean.beta.re)),
        num(Some(s.mean.beta.im)),
        m(|r| r.e_n),
        m(|r| r.g_ab),
        m(|r| r.g_ba),
        m(|r| r.s_b),
        m(|r| r.mu_b),
    ];
    for (i, j) in [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)] {
        row.push(num(Some(v[i][j])));
    }
    row
}

/// Time series with the params hash in its leading comment.
pub fn write_series(path: &Path, params: &SystemParams, samples: &[Sample]) -> io::Result<()> {
    let comment = format!("schema_version={SCHEMA_VERSION} params_hash={}", hash_json(params));
    write_csv(path, &comment, &SERIES_HEADER, samples.iter().map(series_row))
}

/// Summary of a single-point run.
pub fn write_summary(path: &Path, params: &SystemParams, r: &PointResult, ctx: &RunContext, extra: serde_json::Value) -> io::Result<()> {
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "simulate",
        "code_version": code_version(),
        "context": ctx,
        "params_hash": hash_json(params),
        "params": params,
        "verdict": r.verdict,
        "period": r.period,
        "samples_per_period": r.samples_per_period,
        "maxima": r.maxima,
        "stability": r.stability,
        "diagnostics": r.diagnostics,
        "note": r.note,
        "extra": extra,
    });
    write_json(path, &summary)
}

/// JSON manifest for non-grid commands.
pub fn write_manifest(dir: &Path, kind: &str, ctx: &RunContext, body: serde_json::Value) -> io::Result<PathBuf> {
    fs::create_dir_all(dir).map_err(io_at(dir))?;
    let path = dir.join(MANIFEST_FILE);
    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "code_version": code_version(),
        "context": ctx,
        "body": body,
    });
    write_json(&path, &manifest)?;
    Ok(path)
}
