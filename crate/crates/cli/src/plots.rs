//! Hand-written SVG log-log plots of scaling rows.
//!
//! Each plot is 640x480 with a 70px margin, logarithmic axes ticked at
//! 1, 2 and 5 times powers of ten, one-sigma error bars, filled markers for
//! rows used in the fit and hollow red markers for flagged rows. The dashed
//! line is the least-squares power law over unflagged rows; its slope is
//! printed in the top-left corner.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use trapwalk_core::stats::{LineFit, MeanErr};

use crate::error::{io_err, CliError, CliResult};
use crate::scaling::{fit_rows, ScalingRow};

const W: f64 = 640.0;
const H: f64 = 480.0;
const M: f64 = 70.0;

pub struct Series {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub y: Vec<MeanErr>,
    pub flagged: Vec<bool>,
    pub fit: Option<LineFit>,
    pub expected_slope: Option<f64>,
}

pub fn slope_annotation(fit: Option<&LineFit>) -> String {
    match fit {
        Some(f) => format!("slope = {:.4} ± {:.4}", f.slope, f.slope_err),
        None => "slope: fewer than 2 unflagged rows".to_string(),
    }
}

fn tick_label(v: f64) -> String {
    if (1e-3..1e5).contains(&v.abs()) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:e}")
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for k in (lo.floor() as i32 - 1)..=(hi.ceil() as i32) {
        for m in [1.0, 2.0, 5.0] {
            let v = m * 10f64.powi(k);
            if v.log10() >= lo && v.log10() <= hi {
                out.push(v);
            }
        }
    }
    out
}

fn padded(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals.filter(|v| *v > 0.0 && v.is_finite()) {
        lo = lo.min(v.log10());
        hi = hi.max(v.log10());
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.08).max(0.05);
    (lo - pad, hi + pad)
}

pub fn render_svg(s: &Series) -> String {
    let (x0, x1) = padded(s.x.iter().copied());
    let (y0, y1) = padded(s.y.iter().flat_map(|e| [e.mean - e.err, e.mean + e.err, e.mean]));
    let px = |v: f64| M + (v.log10() - x0) / (x1 - x0) * (W - 2.0 * M);
    let py = |v: f64| H - M - (v.max(1e-300).log10() - y0) / (y1 - y0) * (H - 2.0 * M);
    let mut o = String::new();
    let _ = writeln!(o, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(o, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(o, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, s.title);
    let _ = writeln!(o, r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#, W - 2.0 * M, H - 2.0 * M);
    for t in ticks(x0, x1) {
        let x = px(t);
        let _ = writeln!(o, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, H - M, H - M + 5.0);
        let _ = writeln!(o, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, H - M + 18.0, tick_label(t));
    }
    for t in ticks(y0, y1) {
        let y = py(t);
        let _ = writeln!(o, r#"<line x1="{}" y1="{y:.2}" x2="{M}" y2="{y:.2}" stroke="black"/>"#, M - 5.0);
        let _ = writeln!(o, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, M - 8.0, y + 4.0, tick_label(t));
    }
    let _ = writeln!(o, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 20.0, s.x_label);
    let _ = writeln!(
        o,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        s.y_label
    );
    if let Some(f) = &s.fit {
        let (a, b) = (10f64.powf(x0), 10f64.powf(x1));
        let line = |x: f64| (f.intercept + f.slope * x.ln()).exp();
        let _ = writeln!(
            o,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="steelblue" stroke-dasharray="6 4"/>"#,
            px(a),
            py(line(a)),
            px(b),
            py(line(b))
        );
    }
    for i in 0..s.x.len() {
        let (x, e) = (px(s.x[i]), s.y[i]);
        let lo = py((e.mean - e.err).max(e.mean * 1e-3));
        let hi = py(e.mean + e.err);
        let color = if s.flagged[i] { "firebrick" } else { "black" };
        let fill = if s.flagged[i] { "none" } else { "black" };
        let _ = writeln!(o, r#"<line x1="{x:.2}" y1="{lo:.2}" x2="{x:.2}" y2="{hi:.2}" stroke="{color}"/>"#);
        let _ = writeln!(o, r#"<circle cx="{x:.2}" cy="{:.2}" r="4" fill="{fill}" stroke="{color}"/>"#, py(e.mean));
    }
    let mut note = slope_annotation(s.fit.as_ref());
    if let Some(t) = s.expected_slope {
        let _ = write!(note, " (expected {t:.4})");
    }
    let _ = writeln!(o, r#"<text x="{}" y="{}">{note}</text>"#, M + 10.0, M + 18.0);
    if s.flagged.iter().any(|f| *f) {
        let _ = writeln!(o, r#"<text x="{}" y="{}" fill="firebrick">hollow red: flagged, excluded from fit</text>"#, M + 10.0, M + 34.0);
    }
    o += "</svg>\n";
    o
}

/// The three scaling plots: range against `N`, boundary against
/// `ρ_N^{d-1}` and covering radius against `ρ_N`.
pub fn plot_series(rows: &[ScalingRow], d: usize) -> Vec<(&'static str, Series)> {
    let flagged: Vec<bool> = rows.iter().map(|r| r.flagged).collect();
    let df = d as f64;
    let boundary_x = |r: &ScalingRow| r.rho_n.powf(df - 1.0);
    vec![
        (
            "range_vs_n.svg",
            Series {
                title: "mean range size against N".into(),
                x_label: "N".into(),
                y_label: "|range|".into(),
                x: rows.iter().map(|r| r.n as f64).collect(),
                y: rows.iter().map(|r| r.range).collect(),
                flagged: flagged.clone(),
                fit: fit_rows(rows, |r| r.n as f64, |r| r.range),
                expected_slope: Some(df / (df + 2.0)),
            },
        ),
        (
            "boundary_vs_rho.svg",
            Series {
                title: "mean boundary size against rho_N^(d-1)".into(),
                x_label: "rho_N^(d-1)".into(),
                y_label: "|boundary of range|".into(),
                x: rows.iter().map(boundary_x).collect(),
                y: rows.iter().map(|r| r.boundary).collect(),
                flagged: flagged.clone(),
                fit: fit_rows(rows, boundary_x, |r| r.boundary),
                expected_slope: Some(1.0),
            },
        ),
        (
            "covering_vs_rho.svg",
            Series {
                title: "mean covering radius against rho_N".into(),
                x_label: "rho_N".into(),
                y_label: "covering radius".into(),
                x: rows.iter().map(|r| r.rho_n).collect(),
                y: rows.iter().map(|r| r.covering_radius).collect(),
                flagged,
                fit: fit_rows(rows, |r| r.rho_n, |r| r.covering_radius),
                expected_slope: Some(1.0),
            },
        ),
    ]
}

pub fn emit_plots(rows: &[ScalingRow], d: usize, dir: &Path) -> CliResult<Vec<PathBuf>> {
    if rows.len() < 2 {
        return Err(CliError::Config(format!("plots need at least 2 rows, got {}", rows.len())));
    }
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut out = Vec::new();
    for (name, series) in plot_series(rows, d) {
        let path = dir.join(name);
        std::fs::write(&path, render_svg(&series)).map_err(io_err(&path))?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn synthetic_rows() -> Vec<ScalingRow> {
        [1e4, 4e4, 1.6e5]
            .iter()
            .map(|&n: &f64| ScalingRow {
                n: n as usize,
                rho_n: n.powf(0.25),
                optimal_radius: n.powf(0.25),
                samples: 10,
                range: MeanErr { mean: n.powf(0.5), err: 0.01 * n.powf(0.5) },
                boundary: MeanErr { mean: n.powf(0.25), err: 0.1 },
                covering_radius: MeanErr { mean: n.powf(0.25), err: 0.1 },
                covering_deficit: vec![(0.8, MeanErr { mean: 0.5, err: 0.01 })],
                crossings: MeanErr { mean: 1.0, err: 0.0 },
                truly_open: None,
                center_histogram: vec![0; crate::scaling::CENTER_BINS + 1],
                tau_max: 1.0,
                cross_chain_z: 0.0,
                flagged: false,
                flag_reason: String::new(),
            })
            .collect()
    }

    #[test]
    fn exact_power_law_annotation() {
        let rows = synthetic_rows();
        let series = plot_series(&rows, 2);
        let fit = series[0].1.fit.unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-6);
        assert!(render_svg(&series[0].1).contains("slope = 0.5000"));
    }

    #[test]
    fn flagged_rows_are_excluded_and_marked() {
        let mut rows = synthetic_rows();
        rows[2].flagged = true;
        rows[2].range.mean *= 10.0;
        let series = plot_series(&rows, 2);
        assert!((series[0].1.fit.unwrap().slope - 0.5).abs() < 1e-6);
        assert!(render_svg(&series[0].1).contains("firebrick"));
    }

    #[test]
    fn three_files_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let rows = synthetic_rows();
        let a = emit_plots(&rows, 2, dir.path()).unwrap();
        assert_eq!(a.len(), 3);
        let first: Vec<Vec<u8>> = a.iter().map(|p| std::fs::read(p).unwrap()).collect();
        emit_plots(&rows, 2, dir.path()).unwrap();
        let second: Vec<Vec<u8>> = a.iter().map(|p| std::fs::read(p).unwrap()).collect();
        assert_eq!(first, second);
        assert!(emit_plots(&rows[..1], 2, dir.path()).is_err());
    }
}
