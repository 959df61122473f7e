//! Minimal line-chart writer: axes, ticks and one polyline per series on
//! a fixed 800×500 viewport.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, CliResult};

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points }
    }
}

fn bounds(series: &[Series]) -> Option<[f64; 4]> {
    let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    for &(x, y) in series.iter().flat_map(|s| &s.points) {
        if x.is_finite() && y.is_finite() {
            b = [b[0].min(x), b[1].max(x), b[2].min(y), b[3].max(y)];
        }
    }
    if !b[0].is_finite() {
        return None;
    }
    for k in [0, 2] {
        if b[k + 1] - b[k] <= 0.0 {
            let pad = b[k].abs().max(1.0) * 0.5;
            b[k] -= pad;
            b[k + 1] += pad;
        }
    }
    Some(b)
}

/// Render the chart as a standalone SVG document. Non-finite points are
/// dropped.
pub fn render_svg(series: &[Series], x_label: &str, y_label: &str) -> CliResult<String> {
    let b = bounds(series).ok_or_else(|| CliError::Usage("nothing to plot: every series is empty".into()))?;
    let sx = |x: f64| MARGIN + (x - b[0]) / (b[1] - b[0]) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - b[2]) / (b[3] - b[2]) * (HEIGHT - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (tx, ty) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(s, r#"<line x1="{tx:.2}" y1="{y0}" x2="{tx:.2}" y2="{:.2}"/>"#, y0 + 5.0);
        let _ = writeln!(s, r#"<line x1="{x0}" y1="{ty:.2}" x2="{:.2}" y2="{ty:.2}"/>"#, x0 - 5.0);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="12">"#);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (tx, ty) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(s, r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y0 + 20.0, tick(b[0] + f * (b[1] - b[0])));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, ty + 4.0, tick(b[2] + f * (b[3] - b[2])));
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 15.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" fill="{color}">{}</text>"#, x1 - 150.0, y1 + 16.0 * k as f64, escape(&ser.name));
    }
    let _ = writeln!(s, "</g>");
    for (k, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            COLORS[k % COLORS.len()],
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_svg(series: &[Series], x_label: &str, y_label: &str, path: &Path) -> CliResult<()> {
    let doc = render_svg(series, x_label, y_label)?;
    std::fs::write(path, doc).map_err(CliError::io(path))
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_series_rejected() {
        assert!(render_svg(&[], "t", "h").is_err());
        assert!(render_svg(&[Series::new("a", vec![])], "t", "h").is_err());
        assert!(render_svg(&[Series::new("a", vec![(f64::NAN, 1.0)])], "t", "h").is_err());
    }

    #[test]
    fn single_point_and_escape() {
        let s = render_svg(&[Series::new("a<b", vec![(1.0, 1.0)])], "x & y", "z").unwrap();
        assert!(s.contains("a&lt;b") && s.contains("x &amp; y"));
        assert!(s.contains(r#"viewBox="0 0 800 500""#));
    }
}
