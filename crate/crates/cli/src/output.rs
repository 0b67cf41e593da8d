//! Deterministic text output: numbers, CSV tables, JSON files and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use exciton_fcs::ChannelSelector;
use serde::Serialize;

use crate::error::CliError;

/// Shortest round-trip decimal, switching to exponent form for very large or
/// small magnitudes. Non-finite input is a bug upstream and yields `None`.
pub fn number(x: f64) -> Option<String> {
    if !x.is_finite() {
        return None;
    }
    let a = x.abs();
    if x == 0.0 {
        Some(String::from("0"))
    } else if (1e-4..1e15).contains(&a) {
        Some(format!("{x}"))
    } else {
        Some(format!("{x:e}"))
    }
}

/// File-name fragment for a temperature, e.g. `T77` or `T77.5`.
pub fn temperature_slug(t: f64) -> String {
    format!("T{t}")
}

/// File-name fragment for a selector, e.g. `down_a3-a2`.
pub fn channel_slug(sel: &ChannelSelector) -> String {
    sel.to_string()
        .replace("<->", "-")
        .replace("->", "-")
        .replace(':', "_")
}

/// A CSV table with leading `#` metadata, a header row and a trailing
/// `#` footer.
#[derive(Debug, Clone, Default)]
pub struct Table {
    meta: Vec<String>,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    footer: Vec<String>,
}

impl Table {
    /// Empty table with column names (units in the names).
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            ..Self::default()
        }
    }

    /// Adds a `# key=value` line above the header.
    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) {
        self.meta.push(format!("{key}={value}"));
    }

    /// Adds a footer comment.
    pub fn footer(&mut self, line: impl Into<String>) {
        self.footer.push(line.into());
    }

    /// Appends a numeric row; refuses non-finite values.
    pub fn row(&mut self, values: &[f64]) -> Result<(), CliError> {
        assert_eq!(values.len(), self.header.len(), "row width");
        let cells = values
            .iter()
            .map(|&v| {
                number(v).ok_or_else(|| {
                    CliError::Config(format!("refusing to write non-finite value {v}"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.rows.push(cells);
        Ok(())
    }

    /// Number of data rows.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Whether there are no data rows.
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rendered text.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for m in &self.meta {
            let _ = writeln!(out, "# {m}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        for f in &self.footer {
            let _ = writeln!(out, "# {f}");
        }
        out
    }
}

/// Creates `dir` if needed.
pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Output {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes `contents` to `dir/name` and returns the path.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Output {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Pretty JSON with a trailing newline.
pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

/// One panel of an SVG figure.
pub struct Panel<'a> {
    /// Title above the panel.
    pub title: String,
    /// x-axis label.
    pub x_label: &'a str,
    /// y-axis label.
    pub y_label: &'a str,
    /// Points in drawing order.
    pub points: Vec<(f64, f64)>,
}

const PANEL_W: f64 = 560.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 40.0;

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        String::from("0.000")
    } else {
        s
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Stacked line plots, one per panel, with plain axes and min/max ticks.
pub fn svg(panels: &[Panel<'_>]) -> String {
    let width = MARGIN_L + PANEL_W + 20.0;
    let height = panels.len() as f64 * (MARGIN_T + PANEL_H + MARGIN_B);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    for (k, p) in panels.iter().enumerate() {
        let top = k as f64 * (MARGIN_T + PANEL_H + MARGIN_B) + MARGIN_T;
        let finite: Vec<(f64, f64)> = p
            .points
            .iter()
            .copied()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = finite.iter().fold(
            (
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
            ),
            |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
        );
        if finite.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            let pad = y0.abs().max(1.0) * 0.5;
            y0 -= pad;
            y1 += pad;
        }
        let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * PANEL_W;
        let sy = |y: f64| top + PANEL_H - (y - y0) / (y1 - y0) * PANEL_H;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN_L + PANEL_W / 2.0,
            top - 10.0,
            esc(&p.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{MARGIN_L}" y="{top}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="black"/>"#
        );
        if y0 < 0.0 && y1 > 0.0 {
            let z = sy(0.0);
            let _ = writeln!(
                out,
                r#"<line x1="{MARGIN_L}" y1="{z:.2}" x2="{}" y2="{z:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
                MARGIN_L + PANEL_W
            );
        }
        let pts: Vec<String> = finite
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let bottom = top + PANEL_H;
        for (x, anchor) in [(x0, "start"), (x1, "end")] {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{}" text-anchor="{anchor}">{}</text>"#,
                sx(x),
                bottom + 15.0,
                fmt_tick(x)
            );
        }
        for y in [y0, y1] {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                MARGIN_L - 5.0,
                sy(y) + 4.0,
                fmt_tick(y)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN_L + PANEL_W / 2.0,
            bottom + 32.0,
            esc(p.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"#,
            top + PANEL_H / 2.0,
            top + PANEL_H / 2.0,
            esc(p.y_label)
        );
    }
    out.push_str("</svg>\n");
    out
}
