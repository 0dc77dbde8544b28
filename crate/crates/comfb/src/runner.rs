//! Parallel sweep execution with a resumable checkpoint log.
//!
//! Cells run on a rayon pool; a single writer appends each finished cell to
//! `checkpoint.jsonl` as one JSON line. On restart, cells already in the log
//! are reused when the log was written for the same spec.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use comfb_core::sweep::{run_cell, CellResult, SweepResult, SweepSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::SCHEMA_VERSION;

pub const CHECKPOINT_FILE: &str = "checkpoint.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid sweep: {0}")]
    Spec(#[from] comfb_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("checkpoint {0} belongs to a different sweep; remove it or pass --fresh")]
    ForeignCheckpoint(PathBuf),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

/// Hex SHA-256 of the canonical JSON of `value`.
pub fn hash_json<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("serialisable value");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    spec_hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    wall_secs: f64,
    cell: CellResult,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub workers: usize,
    /// Directory holding the checkpoint log; `None` runs without one.
    pub checkpoint_dir: Option<PathBuf>,
    /// Discard an existing checkpoint instead of resuming from it.
    pub fresh: bool,
    /// Stop scheduling after this many newly finished cells (the sweep is
    /// left incomplete, as after a kill).
    pub stop_after: Option<usize>,
    /// Progress lines on stderr.
    pub progress: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { workers: 1, checkpoint_dir: None, fresh: false, stop_after: None, progress: false }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    /// `None` when the run stopped before every cell finished.
    pub result: Option<SweepResult>,
    /// Wall time per cell index, for cells computed or resumed.
    pub wall_secs: BTreeMap<usize, f64>,
    pub resumed: usize,
    pub computed: usize,
}

/// Reads the cells of a checkpoint written for `spec_hash`. A torn last
/// line (from a killed writer) is dropped.
fn read_checkpoint(path: &Path, spec_hash: &str) -> Result<Vec<Entry>, RunError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut lines = BufReader::new(file).lines();
    let header: Option<Header> = match lines.next() {
        Some(line) => serde_json::from_str(&line.map_err(io_err(path))?).ok(),
        None => return Ok(Vec::new()),
    };
    match header {
        Some(h) if h.spec_hash == spec_hash && h.schema_version == SCHEMA_VERSION => {}
        _ => return Err(RunError::ForeignCheckpoint(path.to_path_buf())),
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line.map_err(io_err(path))?;
        match serde_json::from_str::<Entry>(&line) {
            Ok(e) => out.push(e),
            Err(_) => break,
        }
    }
    Ok(out)
}

fn write_line<T: Serialize>(w: &mut File, value: &T, path: &Path) -> Result<(), RunError> {
    let mut line = serde_json::to_vec(value).expect("serialisable value");
    line.push(b'\n');
    w.write_all(&line).and_then(|_| w.flush()).map_err(io_err(path))
}

/// Runs every cell of `spec` not already present in the checkpoint.
pub fn run_sweep(spec: &SweepSpec, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let cells = spec.expand()?;
    let spec_hash = hash_json(spec);
    let mut done: BTreeMap<usize, Entry> = BTreeMap::new();

    let mut log = match &opts.checkpoint_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            let path = dir.join(CHECKPOINT_FILE);
            if path.exists() && !opts.fresh {
                for e in read_checkpoint(&path, &spec_hash)? {
                    if e.cell.index < cells.len() {
                        done.insert(e.cell.index, e);
                    }
                }
            }
            // Rewrite the log from its valid entries so appends start on a
            // clean line.
            let mut f = File::create(&path).map_err(io_err(&path))?;
            write_line(&mut f, &Header { schema_version: SCHEMA_VERSION, spec_hash: spec_hash.clone() }, &path)?;
            for e in done.values() {
                write_line(&mut f, e, &path)?;
            }
            drop(f);
            let f = OpenOptions::new().append(true).open(&path).map_err(io_err(&path))?;
            Some((f, path))
        }
        None => None,
    };
    let resumed = done.len();
    let pending: Vec<_> = cells.iter().filter(|c| !done.contains_key(&c.index)).collect();
    let total = cells.len();

    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.workers.max(1)).build()?;
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<Entry>();
    let mut computed = 0usize;
    let mut write_error = None;

    std::thread::scope(|scope| {
        let stop = &stop;
        let pending = &pending;
        let pool = &pool;
        scope.spawn(move || {
            pool.install(|| {
                pending.par_iter().for_each_with(tx, |tx, cell| {
                    if stop.load(Ordering::Relaxed) {
                        return;
                    }
                    let start = Instant::now();
                    let budget = spec.budget_secs;
                    let mut abort = |_t: f64| start.elapsed().as_secs_f64() > budget;
                    let cell = run_cell(cell, &spec.settings, &mut abort);
                    let _ = tx.send(Entry { wall_secs: start.elapsed().as_secs_f64(), cell });
                });
            });
        });

        for entry in rx {
            computed += 1;
            if let Some((f, path)) = log.as_mut() {
                if let Err(e) = write_line(f, &entry, path) {
                    write_error.get_or_insert(e);
                    stop.store(true, Ordering::Relaxed);
                }
            }
            if opts.progress {
                eprintln!(
                    "[{}/{}] cell {} ({}, {:.2}s)",
                    resumed + computed,
                    total,
                    entry.cell.index,
                    entry.cell.verdict.as_str(),
                    entry.wall_secs
                );
            }
            done.insert(entry.cell.index, entry);
            if opts.stop_after.is_some_and(|k| computed >= k) {
                stop.store(true, Ordering::Relaxed);
            }
        }
    });
    if let Some(e) = write_error {
        return Err(e);
    }

    let wall_secs = done.iter().map(|(k, e)| (*k, e.wall_secs)).collect();
    let result = if done.len() == total {
        let cells = done.into_values().map(|e| e.cell).collect();
        Some(SweepResult::assemble(spec.clone(), cells)?)
    } else {
        None
    };
    Ok(RunOutcome { result, wall_secs, resumed, computed })
}
