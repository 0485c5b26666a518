//! Turning configs into artifacts: single runs, the named scenario presets,
//! and the parallel parameter sweep.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{InitialSpec, ModeChoice, NamedInitial, RunConfig};
use crate::dynamics::{integrate, Trajectory};
use crate::error::{Result, SimError};
use crate::output::{self, RunPaths};
use crate::types::TimeSeriesRow;

/// Run one config end to end and write its artifacts into `out_dir`.
/// `force_svg` adds the SVG preview even when the config does not ask for
/// it; `notes` land in the meta file's `run_info.notes`.
pub fn run_scenario(
    cfg: &RunConfig,
    out_dir: &Path,
    force_svg: bool,
    notes: &[String],
) -> Result<(Trajectory, RunPaths)> {
    cfg.validate()?;
    let traj = integrate(
        &cfg.system_params(),
        &cfg.initial_state()?,
        &cfg.integrator_config(),
        cfg.mode(),
    )?;
    let paths = output::write_run_outputs(&traj, cfg, out_dir, force_svg, notes)?;
    Ok((traj, paths))
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

pub const PRESET_KEYS: [&str; 5] = ["fig1", "fig2", "fig3", "fig4", "fig5"];

/// fig1 and fig2 run the library defaults untouched. At exact resonance the
/// separable start rises, dies suddenly, and revives, which is what those
/// presets exist to show.
fn default_base() -> (RunConfig, String) {
    (
        RunConfig::default(),
        "library default parameters (exact resonance)".to_string(),
    )
}

/// fig3, fig4 and fig5 put the moving and frozen treatments side by side,
/// and three parameters are adjusted from the defaults (and recorded in the
/// meta notes) to make that comparison sharp. The detuning omega_a = 0.4
/// keeps the Bell-start concurrence minima strictly positive, so the floors
/// of the two curves can be compared at all. p0 = -1 launches the atom
/// toward the antinode at x = 0, so the moving coupling g cos x(t) climbs
/// above the frozen g cos x0 and the moving curve leads rather than trails.
/// omega_r = 0.3 speeds the center-of-mass motion up enough that the lead
/// is visible well inside the run window.
fn comparison_base() -> (RunConfig, String) {
    let cfg = RunConfig {
        omega_a: 0.4,
        p0: -1.0,
        omega_r: 0.3,
        ..RunConfig::default()
    };
    let note = "adjusted from defaults for the moving-vs-frozen comparison: omega_a = 0.4 \
                (keeps the Bell-start concurrence minima strictly positive), p0 = -1 (atom \
                launched toward the antinode, so the moving coupling exceeds the frozen \
                one), omega_r = 0.3 (faster center-of-mass motion)"
        .to_string();
    (cfg, note)
}

fn preset_run(
    key: &str,
    base: &(RunConfig, String),
    mode: ModeChoice,
    initial: NamedInitial,
    label: &str,
    extra_note: Option<&str>,
) -> (RunConfig, Vec<String>) {
    let (mut cfg, base_note) = base.clone();
    cfg.mode = mode;
    cfg.initial = InitialSpec::Named(initial);
    cfg.name = format!("{key}-{label}");
    let mut notes = vec![base_note];
    if let Some(n) = extra_note {
        notes.push(n.to_string());
    }
    (cfg, notes)
}

/// The runs a preset key expands to, with their meta notes.
pub fn preset_runs(key: &str) -> Result<Vec<(RunConfig, Vec<String>)>> {
    use ModeChoice::{Nrw, Rw};
    use NamedInitial::{Bell, Separable};
    let defaults = default_base();
    let comparison = comparison_base();
    let runs = match key {
        // Moving atom, both initial states.
        "fig1" => vec![
            preset_run(key, &defaults, Rw, Separable, "rw-separable", None),
            preset_run(key, &defaults, Rw, Bell, "rw-bell", None),
        ],
        // Frozen atom, both initial states.
        "fig2" => vec![
            preset_run(key, &defaults, Nrw, Separable, "nrw-separable", None),
            preset_run(key, &defaults, Nrw, Bell, "nrw-bell", None),
        ],
        // Moving vs frozen from the separable start.
        "fig3" => vec![
            preset_run(key, &comparison, Rw, Separable, "rw", None),
            preset_run(key, &comparison, Nrw, Separable, "nrw", None),
        ],
        // Moving vs frozen from the Bell start.
        "fig4" => vec![
            preset_run(key, &comparison, Rw, Bell, "rw", None),
            preset_run(key, &comparison, Nrw, Bell, "nrw", None),
        ],
        // Distinguishability view of the Bell-start pair; the payload is the
        // trace_distance column.
        "fig5" => {
            let note = "this preset is read through the trace_distance column";
            vec![
                preset_run(key, &comparison, Rw, Bell, "rw", Some(note)),
                preset_run(key, &comparison, Nrw, Bell, "nrw", Some(note)),
            ]
        }
        other => {
            return Err(SimError::config(format!(
                "unknown preset {other:?}; available: {}",
                PRESET_KEYS.join(", ")
            )))
        }
    };
    Ok(runs)
}

/// Execute every run of a preset, with SVG previews, returning the paths.
pub fn run_preset(key: &str, out_dir: &Path) -> Result<Vec<RunPaths>> {
    preset_runs(key)?
        .iter()
        .map(|(cfg, notes)| run_scenario(cfg, out_dir, true, notes).map(|(_, paths)| paths))
        .collect()
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// A concurrence at or below this counts as zero for the crossing scan.
const ZERO_CROSS_TOL: f64 = 1e-9;
/// The crossing scan arms once the concurrence has exceeded this, so runs
/// that merely *start* at zero do not report t = 0.
const ZERO_CROSS_ARM: f64 = 1e-6;

/// Digest of one sweep run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub min_concurrence: f64,
    pub max_concurrence: f64,
    /// First sampled time at which the concurrence, having been above
    /// `ZERO_CROSS_ARM` earlier, falls to `ZERO_CROSS_TOL` or below.
    pub first_zero_crossing: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub axis: String,
    pub rows: Vec<SweepRow>,
    /// Where the summary table was written.
    pub path: PathBuf,
}

fn first_zero_crossing(rows: &[TimeSeriesRow]) -> Option<f64> {
    let mut armed = false;
    for row in rows {
        if armed && row.concurrence <= ZERO_CROSS_TOL {
            return Some(row.t);
        }
        if row.concurrence > ZERO_CROSS_ARM {
            armed = true;
        }
    }
    None
}

fn digest(value: f64, traj: &Trajectory) -> SweepRow {
    let series = traj.concurrence_series();
    SweepRow {
        value,
        min_concurrence: series.iter().cloned().fold(f64::INFINITY, f64::min),
        max_concurrence: series.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        first_zero_crossing: first_zero_crossing(&traj.rows),
    }
}

fn parse_thread_cap(raw: &str) -> Result<usize> {
    raw.trim().parse::<usize>().map_err(|_| {
        SimError::config(format!(
            "CAVITY_SIM_THREADS must be a nonnegative integer (0 = automatic), got {raw:?}"
        ))
    })
}

/// Sweep one numeric axis over the given values.
///
/// Every run gets its own `<base-name>-<axis>-<value>` artifact set; the
/// summary table lands in `<base-name>-sweep-<axis>.csv`. Runs execute in
/// parallel (capped by the `CAVITY_SIM_THREADS` environment variable), but
/// the summary is assembled in the caller's value order, so output is
/// deterministic regardless of scheduling. If some runs fail, the summary
/// for the successful ones is still written before the first failure (in
/// value order) is returned.
pub fn run_sweep(
    base: &RunConfig,
    axis: &str,
    values: &[f64],
    out_dir: &Path,
) -> Result<SweepSummary> {
    if values.is_empty() {
        return Err(SimError::config("sweep needs at least one value".to_string()));
    }
    // Fail fast on a bad axis name before spawning anything.
    base.clone().set_axis(axis, values[0])?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("CAVITY_SIM_THREADS") {
        builder = builder.num_threads(parse_thread_cap(&raw)?);
    }
    let pool = builder
        .build()
        .map_err(|e| SimError::config(format!("could not start sweep thread pool: {e}")))?;

    let results: Vec<Result<SweepRow>> = pool.install(|| {
        values
            .par_iter()
            .map(|&value| {
                let mut cfg = base.clone();
                cfg.set_axis(axis, value)?;
                cfg.name = format!("{}-{}-{}", base.name, axis, value);
                let (traj, _) = run_scenario(&cfg, out_dir, false, &[])?;
                Ok(digest(value, &traj))
            })
            .collect()
    });

    let mut table = String::from("value,min_concurrence,max_concurrence,first_zero_crossing\n");
    let mut rows = Vec::new();
    let mut first_err = None;
    for result in results {
        match result {
            Ok(row) => {
                table.push_str(&format!(
                    "{},{},{},{}\n",
                    output::format_float(row.value),
                    output::format_float(row.min_concurrence),
                    output::format_float(row.max_concurrence),
                    row.first_zero_crossing
                        .map_or_else(|| "none".to_string(), output::format_float),
                ));
                rows.push(row);
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    let path = out_dir.join(format!("{}-sweep-{}.csv", base.name, axis));
    output::atomic_write(&path, table.as_bytes())?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(SweepSummary {
            axis: axis.to_string(),
            rows,
            path,
        }),
    }
}
