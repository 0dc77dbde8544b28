//! Command-line interface.

use std::path::{Path, PathBuf};
use std::process::Command as Process;

use clap::{Args, Parser, Subcommand};
use comfb_core::cycle::samples_per_period;
use comfb_core::integrate::{integrate, InitialCondition};
use comfb_core::model::{delay_validity, SystemParams, DELAY_THRESHOLD};
use comfb_core::pipeline::{run_point, PipelineSettings, Verdict};
use comfb_core::presets::{figure_preset, Grid, DEFAULT_BUDGET_SECS, DEFAULT_GRID_2D, PRESET_NAMES};
use comfb_core::stability::instantaneous_stability;
use comfb_core::sweep::{parse_outputs, Axis, ParamPath, SweepSpec};
use serde_json::json;

use crate::config::{self, ConfigError, Resolved};
use crate::output::{self, RunContext};
use crate::runner::{self, RunOptions};
use crate::{exit, OUT_ENV, PLOTTER_ENV};

const AFTER_HELP: &str = "\
Examples:
  comfb validate --set r_b=0.35
  comfb simulate --set r_b=0.15 --out runs/rb015
  comfb sweep --axis1 r_b=0:0.35:36 --outputs E_N,G_ab --workers 4
  comfb figure fig2
  comfb figure fig3a --grid 41x41 --workers 8
  comfb figure fig4 --grid 21 --budget-secs 60

Output goes to --out, else $COMFB_OUT/<name>, else ./comfb-out/<name>.
Exit status: 0 ok, 1 runtime error, 2 bad input, 3 unstable, 4 not converged,
5 quasi-periodic, 6 unphysical, 7 sweep incomplete (rerun to resume).";

#[derive(Debug, Parser)]
#[command(name = "comfb", version, about = "Limit-cycle correlations of a fed-back optomechanical system", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Flat TOML parameter file.
    #[arg(long, value_name = "FILE")]
    pub params: Option<PathBuf>,
    /// Override one parameter; repeatable, applied in order.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Relative integrator tolerance (absolute tolerance is 1e-3 of it).
    #[arg(long, value_name = "REL")]
    pub tol: Option<f64>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct GridArgs {
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Grid resolution, `N` or `N1xN2`.
    #[arg(long, value_name = "N1[xN2]")]
    pub grid: Option<String>,
    /// Wall-clock budget per cell in seconds.
    #[arg(long, value_name = "S")]
    pub budget_secs: Option<f64>,
    /// Ignore an existing checkpoint instead of resuming.
    #[arg(long)]
    pub fresh: bool,
    /// Report every finished cell on stderr.
    #[arg(long, short)]
    pub verbose: bool,
    /// Stop after this many new cells, leaving a resumable checkpoint.
    #[arg(long, hide = true)]
    pub stop_after: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one parameter point to its limit cycle.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// End of the written trajectory (default: time the cycle was reached).
        #[arg(long)]
        t_end: Option<f64>,
        /// Most rows in trajectory.csv; the series is thinned to fit.
        #[arg(long, default_value_t = 100_000)]
        max_rows: usize,
    },
    /// Run a 1D or 2D grid. Axes are `PATH=LO:HI:N` or `PATH=V1,V2,...`.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_name = "AXIS")]
        axis1: String,
        #[arg(long, value_name = "AXIS")]
        axis2: Option<String>,
        /// Measures to write, comma separated.
        #[arg(long, default_value = "E_N,G_ab,G_ba,S_b,mu_b")]
        outputs: String,
        /// Sweep name, used for the default output directory.
        #[arg(long, default_value = "sweep")]
        name: String,
    },
    /// Instantaneous drift-matrix stability, optionally along one axis.
    Stability {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "AXIS")]
        axis: Option<String>,
    },
    /// Run a figure preset (fig2, fig3a, fig3b, fig4, fig4cd, fig5, fig6a, fig6b, fig7a, fig7bc).
    Figure {
        name: String,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        /// Write data only, even if a plotter is available.
        #[arg(long)]
        no_plot: bool,
    },
    /// Print derived quantities and the stability verdict at t = 0.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Feedback-loop delay in seconds.
        #[arg(long, default_value_t = 1e-9)]
        delay_secs: f64,
        /// Also integrate to the limit cycle and report its cooperativity.
        #[arg(long)]
        with_cycle: bool,
    },
}

/// A failure with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn spec(msg: impl ToString) -> Self {
        Self { code: exit::SPEC, message: msg.to_string() }
    }

    fn io(msg: impl ToString) -> Self {
        Self { code: exit::FAILURE, message: msg.to_string() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::spec(e)
    }
}

impl From<runner::RunError> for Failure {
    fn from(e: runner::RunError) -> Self {
        match e {
            runner::RunError::Spec(_) | runner::RunError::ForeignCheckpoint(_) => Failure::spec(e),
            _ => Failure::io(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::io(e)
    }
}

pub fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Ok => exit::OK,
        Verdict::Unstable => exit::UNSTABLE,
        Verdict::NotConverged => exit::NOT_CONVERGED,
        Verdict::QuasiPeriodic => exit::QUASI_PERIODIC,
        Verdict::Unphysical => exit::UNPHYSICAL,
    }
}

fn out_dir(common: &Common, name: &str) -> PathBuf {
    if let Some(o) = &common.out {
        return o.clone();
    }
    let root = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("comfb-out"));
    root.join(name)
}

fn apply_tol(settings: &mut PipelineSettings, tol: Option<f64>) -> Result<(), Failure> {
    if let Some(t) = tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(Failure::spec("--tol must lie in (0, 1)"));
        }
        settings.integrator.rtol = t;
        settings.integrator.atol = t * 1e-3;
    }
    Ok(())
}

fn resolve(common: &Common, base: SystemParams, settings: PipelineSettings) -> Result<Resolved, Failure> {
    let mut r = config::load_onto(common.params.as_deref(), &common.set, base, settings)?;
    apply_tol(&mut r.settings, common.tol)?;
    Ok(r)
}

fn context(command: &str, preset: Option<&str>, common: &Common, r: &Resolved) -> RunContext {
    RunContext {
        command: command.to_string(),
        preset: preset.map(str::to_string),
        params_file: common.params.as_ref().map(|p| p.display().to_string()),
        overrides: r.overrides.clone(),
        entries: r.entries.clone(),
    }
}

/// Parses `N` or `N1xN2`.
pub fn parse_grid(s: &str) -> Result<Grid, Failure> {
    let parse = |t: &str| t.trim().parse::<usize>().ok().filter(|n| *n > 0);
    let (a, b) = match s.split_once(['x', 'X']) {
        Some((a, b)) => (parse(a), parse(b)),
        None => (parse(s), parse(s)),
    };
    match (a, b) {
        (Some(n1), Some(n2)) => Ok(Grid { n1, n2 }),
        _ => Err(Failure::spec(format!("bad --grid `{s}`; expected N or N1xN2"))),
    }
}

/// Parses `PATH=LO:HI:N`, `PATH=LO:HI` (with `default_n` points) or
/// `PATH=V1,V2,...`.
pub fn parse_axis(s: &str, default_n: usize) -> Result<Axis, Failure> {
    let (path, rest) = s.split_once('=').ok_or_else(|| Failure::spec(format!("axis `{s}` is not PATH=VALUES")))?;
    let path = ParamPath::parse(path).map_err(Failure::spec)?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Failure::spec(format!("bad number `{t}` in axis `{s}`")));
    if rest.contains(':') {
        let parts: Vec<&str> = rest.split(':').collect();
        let n = match parts.len() {
            2 => default_n,
            3 => parts[2].trim().parse().map_err(|_| Failure::spec(format!("bad count in axis `{s}`")))?,
            _ => return Err(Failure::spec(format!("axis `{s}` should be PATH=LO:HI[:N]"))),
        };
        Ok(Axis::linspace(path, num(parts[0])?, num(parts[1])?, n))
    } else {
        let values = rest.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
        Ok(Axis { path, values })
    }
}

pub fn run(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Simulate { common, t_end, max_rows } => simulate(&common, t_end, max_rows),
        Command::Sweep { common, grid, axis1, axis2, outputs, name } => {
            let r = resolve(&common, SystemParams::paper_defaults(), PipelineSettings::default())?;
            let g = grid.grid.as_deref().map(parse_grid).transpose()?;
            let spec = SweepSpec {
                name: name.clone(),
                base: r.params,
                axis1: parse_axis(&axis1, g.map_or(DEFAULT_GRID_2D, |g| g.n1))?,
                axis2: axis2.as_deref().map(|a| parse_axis(a, g.map_or(DEFAULT_GRID_2D, |g| g.n2))).transpose()?,
                outputs: parse_outputs(&outputs).map_err(Failure::spec)?,
                budget_secs: grid.budget_secs.unwrap_or(DEFAULT_BUDGET_SECS),
                settings: r.settings,
            };
            let ctx = context("sweep", None, &common, &r);
            sweep(&spec, &grid, &out_dir(&common, &name), &ctx).map(|(code, _)| code)
        }
        Command::Stability { common, axis } => stability(&common, axis.as_deref()),
        Command::Figure { name, common, grid, no_plot } => figure(&name, &common, &grid, no_plot),
        Command::Validate { common, delay_secs, with_cycle } => validate(&common, delay_secs, with_cycle),
    }
}

/// Runs a resolved sweep into `dir`; returns the exit status and the
/// manifest path when the grid completed.
pub fn sweep(spec: &SweepSpec, grid: &GridArgs, dir: &Path, ctx: &RunContext) -> Result<(i32, Option<PathBuf>), Failure> {
    spec.validate().map_err(Failure::spec)?;
    if let Some(b) = grid.budget_secs {
        if !(b > 0.0) {
            return Err(Failure::spec("--budget-secs must be positive"));
        }
    }
    let opts = RunOptions {
        workers: grid.workers.max(1),
        checkpoint_dir: Some(dir.to_path_buf()),
        fresh: grid.fresh,
        stop_after: grid.stop_after,
        progress: grid.verbose,
    };
    eprintln!("{spec}: {} cells, {} worker(s) -> {}", spec.cell_count(), opts.workers, dir.display());
    let outcome = runner::run_sweep(spec, &opts)?;
    if outcome.resumed > 0 {
        eprintln!("resumed {} cell(s) from checkpoint", outcome.resumed);
    }
    let Some(result) = outcome.result else {
        eprintln!("stopped after {} new cell(s); rerun to resume", outcome.computed);
        return Ok((exit::INCOMPLETE, None));
    };
    output::write_sweep(dir, &result, ctx)?;
    for (v, n) in result.verdict_counts() {
        if n > 0 {
            println!("{:>15}: {n}", v.as_str());
        }
    }
    for m in &spec.outputs {
        let best = result.cells.iter().filter(|c| c.verdict == Verdict::Ok).filter_map(|c| c.value(*m)).fold(f64::NAN, f64::max);
        println!("{:>15}: max {}", format!("{}_max", m.name()), output::num(Some(best)));
    }
    Ok((exit::OK, Some(dir.join(output::MANIFEST_FILE))))
}

fn figure(name: &str, common: &Common, grid: &GridArgs, no_plot: bool) -> Result<i32, Failure> {
    let g = grid.grid.as_deref().map(parse_grid).transpose()?;
    let mut spec = figure_preset(name, g).map_err(|e| Failure::spec(format!("{e}; presets: {}", PRESET_NAMES.join(", "))))?;
    let r = resolve(common, spec.base, spec.settings)?;
    spec.base = r.params;
    spec.settings = r.settings;
    if let Some(b) = grid.budget_secs {
        spec.budget_secs = b;
    }
    let ctx = context("figure", Some(&spec.name), common, &r);
    let dir = out_dir(common, &spec.name);
    let (code, manifest) = sweep(&spec, grid, &dir, &ctx)?;
    if let (Some(manifest), false) = (manifest, no_plot) {
        plot(&manifest);
    }
    Ok(code)
}

/// Hands the manifest to the external plotter, if one is installed.
fn plot(manifest: &Path) {
    let plotter = std::env::var_os(PLOTTER_ENV).map(PathBuf::from).or_else(|| find_on_path("comfb-plot"));
    let Some(plotter) = plotter else {
        eprintln!("no plotter found (set {PLOTTER_ENV}); data only");
        return;
    };
    match Process::new(&plotter).arg(manifest).status() {
        Ok(s) if s.success() => {}
        Ok(s) => eprintln!("plotter {} exited with {s}; data files are complete", plotter.display()),
        Err(e) => eprintln!("cannot run plotter {}: {e}; data files are complete", plotter.display()),
    }
}

fn find_on_path(name: &str) -> Option<PathBuf> {
    std::env::split_paths(&std::env::var_os("PATH")?).map(|d| d.join(name)).find(|p| p.is_file())
}

fn simulate(common: &Common, t_end: Option<f64>, max_rows: usize) -> Result<i32, Failure> {
    let r = resolve(common, SystemParams::paper_defaults(), PipelineSettings::default())?;
    let mut settings = r.settings;
    settings.keep_cycle = true;
    let res = run_point(&r.params, &settings, &mut |_| false);
    let dir = out_dir(common, "simulate");
    std::fs::create_dir_all(&dir)?;

    if let Some(cycle) = &res.cycle {
        output::write_series(&dir.join(output::CYCLE_FILE), &r.params, &cycle.samples)?;
    }
    // Full trajectory from t = 0 on the cycle's sampling grid, thinned to
    // at most `max_rows` rows.
    let n = if res.samples_per_period > 0 { res.samples_per_period } else { samples_per_period(&r.params, 2.0 * std::f64::consts::PI) };
    let period = res.period.unwrap_or(2.0 * std::f64::consts::PI);
    let t_stop = t_end.unwrap_or(res.diagnostics.t_final).max(period);
    let mut stride = period / n as f64;
    let rows = (t_stop / stride).ceil() as usize + 1;
    if rows > max_rows.max(2) {
        stride *= (rows as f64 / max_rows.max(2) as f64).ceil();
    }
    let traj = integrate(&r.params, t_stop, stride, &settings.integrator);
    let traj_note = match &traj {
        Ok(t) => {
            output::write_series(&dir.join(output::TRAJECTORY_FILE), &r.params, &t.samples)?;
            None
        }
        Err(e) => Some(e.to_string()),
    };
    let ctx = context("simulate", None, common, &r);
    let extra = json!({
        "trajectory": { "t_end": t_stop, "stride": stride, "error": traj_note },
        "initial": match settings.integrator.initial { InitialCondition::Thermal => "thermal", InitialCondition::Displaced => "displaced" },
    });
    output::write_summary(&dir.join(output::SUMMARY_FILE), &r.params, &res, &ctx, extra)?;

    println!("verdict: {}", res.verdict.as_str());
    if let Some(p) = res.period {
        println!("period: {p}");
    }
    if let Some(m) = res.maxima {
        for (name, v) in [("E_N", m.e_n), ("G_ab", m.g_ab), ("G_ba", m.g_ba), ("S_b", m.s_b), ("mu_b", m.mu_b)] {
            println!("{name}_max: {} (t = {})", v.value, v.t);
        }
    }
    if let Some(note) = &res.note {
        println!("note: {note}");
    }
    println!("output: {}", dir.display());
    Ok(verdict_code(res.verdict))
}

fn stability(common: &Common, axis: Option<&str>) -> Result<i32, Failure> {
    let r = resolve(common, SystemParams::paper_defaults(), PipelineSettings::default())?;
    let axis = axis.map(|a| parse_axis(a, DEFAULT_GRID_2D)).transpose()?;
    let points: Vec<(Option<f64>, SystemParams)> = match &axis {
        None => vec![(None, r.params)],
        Some(a) => a
            .values
            .iter()
            .map(|&v| {
                let mut p = r.params;
                a.path.set(&mut p, v);
                (Some(v), p)
            })
            .collect(),
    };
    let dir = out_dir(common, "stability");
    std::fs::create_dir_all(&dir)?;
    let mut rows = Vec::new();
    let mut all_stable = true;
    for (x, p) in &points {
        p.validate().map_err(Failure::spec)?;
        let d = p.derived();
        // Static mean field of the undriven pumps: the state the drift
        // matrix is linearised about at t = 0.
        let start = InitialCondition::Displaced.sample(p);
        let st = instantaneous_stability(p, &start.mean);
        let stable = st.stable && d.kappa_fb > 0.0;
        all_stable &= stable;
        rows.push(json!({
            "axis": x, "kappa_fb": d.kappa_fb, "delta_fb": d.delta_fb,
            "max_re_eig": st.max_re_eig, "dominant_phonon_re": st.dominant_phonon_re, "stable": stable,
        }));
        println!(
            "{}kappa_fb={} max_re_eig={} {}",
            x.map(|v| format!("{}={v} ", axis.as_ref().map_or("", |a| a.path.name()))).unwrap_or_default(),
            d.kappa_fb,
            st.max_re_eig,
            if stable { "stable" } else { "unstable" }
        );
    }
    let ctx = context("stability", None, common, &r);
    output::write_manifest(&dir, "stability", &ctx, json!({ "axis": axis.as_ref().map(|a| a.path.name()), "points": rows }))?;
    Ok(if all_stable { exit::OK } else { exit::UNSTABLE })
}

fn validate(common: &Common, delay_secs: f64, with_cycle: bool) -> Result<i32, Failure> {
    let r = resolve(common, SystemParams::paper_defaults(), PipelineSettings::default())?;
    let p = &r.params;
    let d = p.derived();
    let n_b = p.n_b();
    let delay = delay_validity(p.kappa_a * p.omega_b, p.r_b, delay_secs, DELAY_THRESHOLD);
    // Linearised about the static mean field, as in `stability`.
    let st = instantaneous_stability(p, &InitialCondition::Displaced.sample(p).mean);
    println!("kappa_fb: {}{}", d.kappa_fb, if d.kappa_fb <= 0.0 { "  (gain regime: kappa_fb <= 0)" } else { "" });
    println!("delta_fb: {}", d.delta_fb);
    println!("t_b: {}", d.t_b);
    println!("N_b: {n_b}");
    println!("delay ratio: {} ({})", delay.ratio, if delay.valid { "negligible" } else { "NOT negligible" });
    println!("stability at t=0: {} (max Re lambda = {})", if st.stable && d.kappa_fb > 0.0 { "stable" } else { "unstable" }, st.max_re_eig);
    let mut body = json!({
        "kappa_fb": d.kappa_fb, "delta_fb": d.delta_fb, "t_b": d.t_b, "N_b": n_b,
        "delay_secs": delay_secs, "delay_ratio": delay.ratio, "delay_valid": delay.valid,
        "max_re_eig_t0": st.max_re_eig, "stable_t0": st.stable && d.kappa_fb > 0.0,
    });
    if with_cycle {
        let res = run_point(p, &r.settings, &mut |_| false);
        println!("limit cycle: {}", res.verdict.as_str());
        match res.diagnostics.cooperativity {
            Some(c) => println!("C_LC: {c}"),
            None => println!("C_LC: unavailable"),
        }
        body["verdict"] = json!(res.verdict);
        body["C_LC"] = json!(res.diagnostics.cooperativity);
    }
    if common.out.is_some() || std::env::var_os(OUT_ENV).is_some() {
        let ctx = context("validate", None, common, &r);
        output::write_manifest(&out_dir(common, "validate"), "validate", &ctx, body)?;
    }
    Ok(exit::OK)
}
