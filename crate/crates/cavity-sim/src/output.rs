//! File emission: CSV time series, TOML meta sidecars, and a small SVG
//! preview plot. All writes are whole-file atomic (temp file in the target
//! directory, then rename), and all float formatting is fixed-width
//! scientific with 17 significant digits so every f64 round-trips exactly
//! and identical runs produce identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::dynamics::Trajectory;
use crate::error::{Result, SimError};
use crate::types::TimeSeriesRow;

/// Column layout of every trajectory CSV. The c11..c22 slots follow the
/// 4-slot manifold layout; 2-slot runs put their amplitudes in c11/c22,
/// write zeros for the cross slots, and leave x and p empty.
pub const CSV_HEADER: &str = "t,re_c11,im_c11,re_c12,im_c12,re_c21,im_c21,re_c22,im_c22,\
                              norm,concurrence,trace_distance,x,p";

/// 17-significant-digit scientific notation: enough that parsing the text
/// recovers the original f64 bit for bit.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Render a trajectory as CSV text (header, one line per sample, trailing
/// newline).
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(64 + traj.rows.len() * 260);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &traj.rows {
        push_csv_row(&mut out, row);
    }
    out
}

fn push_csv_row(out: &mut String, row: &TimeSeriesRow) {
    let zero = || format_float(0.0);
    let amp_cols: [String; 8] = match row.amps.as_slice() {
        [c1, c2] => [
            format_float(c1.re),
            format_float(c1.im),
            zero(),
            zero(),
            zero(),
            zero(),
            format_float(c2.re),
            format_float(c2.im),
        ],
        [c11, c12, c21, c22] => [
            format_float(c11.re),
            format_float(c11.im),
            format_float(c12.re),
            format_float(c12.im),
            format_float(c21.re),
            format_float(c21.im),
            format_float(c22.re),
            format_float(c22.im),
        ],
        other => unreachable!("trajectory rows always hold 2 or 4 amplitudes, got {}", other.len()),
    };
    let (x_col, p_col) = match row.motion {
        Some(m) => (format_float(m.x), format_float(m.p)),
        None => (String::new(), String::new()),
    };
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{}",
        format_float(row.t),
        amp_cols.join(","),
        format_float(row.norm),
        format_float(row.concurrence),
        format_float(row.trace_distance),
        x_col,
        p_col,
    );
}

/// Write `bytes` to `path` atomically: the file either keeps its old content
/// or has the new content in full, never a torn mixture.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let dir = dir.unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let tmp = tempfile::Builder::new()
        .prefix(".tmp-")
        .tempfile_in(dir)
        .map_err(|e| SimError::io(dir, e))?;
    std::io::Write::write_all(&mut tmp.as_file(), bytes).map_err(|e| SimError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| SimError::io(path, e.error))?;
    Ok(())
}

/// The TOML sidecar: the full effective config (defaults resolved), then a
/// `[run_info]` table with a digest of the produced series and any notes the
/// scenario wants on record.
pub fn meta_document(cfg: &RunConfig, traj: &Trajectory, notes: &[String]) -> Result<String> {
    let mut out = cfg.to_toml_string()?;
    let concurrence = traj.concurrence_series();
    let min_c = concurrence.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_c = concurrence.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    out.push_str("\n[run_info]\n");
    let _ = writeln!(out, "rows = {}", traj.rows.len());
    let _ = writeln!(out, "t_first = {}", format_float(traj.rows.first().map_or(0.0, |r| r.t)));
    let _ = writeln!(out, "t_last = {}", format_float(traj.rows.last().map_or(0.0, |r| r.t)));
    let _ = writeln!(out, "min_concurrence = {}", format_float(min_c));
    let _ = writeln!(out, "max_concurrence = {}", format_float(max_c));
    let _ = writeln!(out, "mode = \"{}\"", traj.mode.name());
    if !notes.is_empty() {
        out.push_str("notes = [\n");
        for note in notes {
            let _ = writeln!(out, "    {:?},", note);
        }
        out.push_str("]\n");
    }
    Ok(out)
}

/// Minimal SVG preview: concurrence and trace distance against time, both
/// living in [0, 1]. This is a quick-look artifact, not a plotting library.
pub fn svg_plot(traj: &Trajectory, title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const ML: f64 = 56.0; // left margin
    const MR: f64 = 16.0;
    const MT: f64 = 32.0;
    const MB: f64 = 44.0;
    let t_max = traj.rows.last().map_or(1.0, |r| r.t).max(f64::MIN_POSITIVE);
    let x_of = |t: f64| ML + (W - ML - MR) * (t / t_max);
    let y_of = |v: f64| H - MB - (H - MT - MB) * v.clamp(0.0, 1.0);
    let polyline = |values: &mut dyn Iterator<Item = (f64, f64)>, color: &str| -> String {
        let mut pts = String::new();
        for (t, v) in values {
            let _ = write!(pts, "{:.2},{:.2} ", x_of(t), y_of(v));
        }
        format!(
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.trim_end()
        )
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{:.2}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        ML + (W - ML - MR) / 2.0,
        xml_escape(title)
    );
    // Axes.
    let _ = writeln!(
        svg,
        "  <line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{:.2}\" stroke=\"black\"/>",
        H - MB
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{ML}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
        H - MB,
        W - MR,
        H - MB
    );
    for (v, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
        let _ = writeln!(
            svg,
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{label}</text>",
            ML - 6.0,
            y_of(v) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "  <text x=\"{ML}\" y=\"{:.2}\">0</text>",
        H - MB + 16.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{t_max}</text>",
        W - MR,
        H - MB + 16.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">t</text>",
        ML + (W - ML - MR) / 2.0,
        H - 8.0
    );
    svg.push_str(&polyline(
        &mut traj.rows.iter().map(|r| (r.t, r.concurrence)),
        "#1f6fb4",
    ));
    svg.push_str(&polyline(
        &mut traj.rows.iter().map(|r| (r.t, r.trace_distance)),
        "#c2422d",
    ));
    let _ = writeln!(
        svg,
        "  <text x=\"{:.2}\" y=\"{MT}\" fill=\"#1f6fb4\">concurrence</text>",
        ML + 8.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{:.2}\" y=\"{:.2}\" fill=\"#c2422d\">trace distance</text>",
        ML + 8.0,
        MT + 16.0
    );
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Paths produced by [`write_run_outputs`].
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub csv: PathBuf,
    pub meta: PathBuf,
    pub svg: Option<PathBuf>,
}

/// Write `<name>.csv` and `<name>.meta` (plus `<name>.svg` when asked) into
/// `out_dir`.
pub fn write_run_outputs(
    traj: &Trajectory,
    cfg: &RunConfig,
    out_dir: &Path,
    svg: bool,
    notes: &[String],
) -> Result<RunPaths> {
    let csv = out_dir.join(format!("{}.csv", cfg.name));
    atomic_write(&csv, trajectory_to_csv(traj).as_bytes())?;
    let meta = out_dir.join(format!("{}.meta", cfg.name));
    atomic_write(&meta, meta_document(cfg, traj, notes)?.as_bytes())?;
    let svg_path = if svg || cfg.emit_svg {
        let path = out_dir.join(format!("{}.svg", cfg.name));
        atomic_write(&path, svg_plot(traj, &cfg.name).as_bytes())?;
        Some(path)
    } else {
        None
    };
    Ok(RunPaths {
        csv,
        meta,
        svg: svg_path,
    })
}
