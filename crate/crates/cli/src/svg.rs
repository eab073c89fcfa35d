//! Static SVG plot of `η₁, η₂, η₃` and `H` against `t`.

use std::fmt::Write as _;
use std::path::Path;

use betaflow::Trajectory;

use crate::CliError;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

const SERIES: [(&str, &str); 4] = [("eta1", "#1f77b4"), ("eta2", "#ff7f0e"), ("eta3", "#2ca02c"), ("H", "#d62728")];

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// The SVG document for `trajectory`.
pub fn render_svg(trajectory: &Trajectory) -> Result<String, CliError> {
    let samples = &trajectory.samples;
    if samples.len() < 2 {
        return Err(CliError::EmptyTrajectory(samples.len()));
    }
    let columns: [Vec<f64>; 4] = [
        samples.iter().map(|s| s.eta.eta1).collect(),
        samples.iter().map(|s| s.eta.eta2).collect(),
        samples.iter().map(|s| s.eta.eta3).collect(),
        samples.iter().map(|s| s.hamiltonian).collect(),
    ];
    let (t0, t1) = range(samples.iter().map(|s| s.t));
    let (y0, y1) = range(columns.iter().flatten().copied());
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |t: f64| LEFT + (t - t0) / (t1 - t0) * plot_w;
    let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{} flow</text>"#,
        LEFT + plot_w / 2.0,
        trajectory.model
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black" stroke-width="1"/>"#
    );

    for k in 0..=TICKS {
        let frac = k as f64 / TICKS as f64;
        let t = t0 + frac * (t1 - t0);
        let x = px(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{t:.3}</text>"#,
            TOP + plot_h + 20.0
        );
        let y = y0 + frac * (y1 - y0);
        let yy = py(y);
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{yy:.2}" x2="{LEFT}" y2="{yy:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{y:.3}</text>"#,
            LEFT - 8.0,
            yy + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="14" text-anchor="middle">t</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );

    for ((name, colour), column) in SERIES.iter().zip(&columns) {
        let points: Vec<String> = samples
            .iter()
            .zip(column)
            .filter(|(s, v)| s.t.is_finite() && v.is_finite())
            .map(|(s, &v)| format!("{:.2},{:.2}", px(s.t), py(v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline id="{name}" fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
    }

    let legend_x = WIDTH - RIGHT + 20.0;
    for (k, (name, colour)) in SERIES.iter().enumerate() {
        let y = TOP + 20.0 + 22.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{legend_x}" y1="{y}" x2="{:.1}" y2="{y}" stroke="{colour}" stroke-width="3"/>"#,
            legend_x + 25.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13">{name}</text>"#,
            legend_x + 32.0,
            y + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes [`render_svg`] to `path`.
pub fn emit_svg(trajectory: &Trajectory, path: &Path) -> Result<(), CliError> {
    let doc = render_svg(trajectory)?;
    std::fs::write(path, doc)?;
    Ok(())
}
