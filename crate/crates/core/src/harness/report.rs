//! Tabular reports and their CSV, JSON and SVG outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

/// A pass/fail assertion attached to a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Statistical trend checks are only enforced on request.
    pub statistical: bool,
}

/// A line plot: one or more named series over a shared x axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<(String, Vec<(f64, f64)>)>,
}

/// One experiment's output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    /// File stem of the outputs.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Extra structured content for the JSON output.
    pub summary: Value,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub plot: Option<Plot>,
    /// Additional text files `(file name, contents)`.
    #[serde(skip)]
    pub extra_files: Vec<(String, String)>,
}

impl Report {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
            summary: Value::Null,
            checks: Vec::new(),
            plot: None,
            extra_files: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
            statistical: false,
        });
    }

    pub fn statistical_check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
            statistical: true,
        });
    }

    /// Column `name` of every row.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    /// Rows as JSON objects keyed by the header, with numbers where they parse.
    pub fn json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj = self
                        .header
                        .iter()
                        .zip(row)
                        .map(|(h, v)| (h.clone(), cell_value(v)))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = serde_json::json!({
            "name": self.name,
            "rows": self.json_rows(),
            "summary": self.summary,
            "checks": self.checks,
        });
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

fn cell_value(s: &str) -> Value {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null),
        Ok(_) => Value::String(s.to_string()),
        Err(_) => match s {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            "" => Value::Null,
            _ => Value::String(s.to_string()),
        },
    }
}

/// Shortest round-trip decimal form, so outputs are reproducible byte for byte.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Write every report into `dir` as `<name>.csv`, `<name>.json` and, when a
/// plot is attached, `<name>.svg`. Nothing is created for an empty list.
pub fn emit_outputs(reports: &[Report], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if reports.is_empty() {
        return Ok(written);
    }
    fs::create_dir_all(dir)?;
    for r in reports {
        let csv_path = dir.join(format!("{}.csv", r.name));
        fs::write(&csv_path, r.to_csv()?)?;
        written.push(csv_path);
        let json_path = dir.join(format!("{}.json", r.name));
        fs::write(&json_path, r.to_json()?)?;
        written.push(json_path);
        if let Some(plot) = &r.plot {
            let svg_path = dir.join(format!("{}.svg", r.name));
            fs::write(&svg_path, render_svg(plot))?;
            written.push(svg_path);
        }
        for (file, contents) in &r.extra_files {
            let p = dir.join(file);
            fs::write(&p, contents)?;
            written.push(p);
        }
    }
    Ok(written)
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// A minimal SVG line chart.
pub fn render_svg(plot: &Plot) -> String {
    let (w, h, margin) = (640.0, 400.0, 60.0);
    let tx = |x: f64| if plot.log_x { x.log10() } else { x };
    let ty = |y: f64| if plot.log_y { y.log10() } else { y };
    let points: Vec<(f64, f64)> = plot
        .series
        .iter()
        .flat_map(|(_, s)| s.iter().map(|&(x, y)| (tx(x), ty(y))))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, w / 2.0, escape(&plot.title));
    if points.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in &points {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| margin + (x - x0) / (x1 - x0) * (w - 2.0 * margin);
    let py = |y: f64| h - margin - (y - y0) / (y1 - y0) * (h - 2.0 * margin);
    let _ = writeln!(
        svg,
        r#"<polyline points="{m},{t} {m},{b} {r},{b}" fill="none" stroke="black"/>"#,
        m = margin,
        t = margin,
        b = h - margin,
        r = w - margin
    );
    let axis = |v: f64, log: bool| if log { format!("1e{v:.2}") } else { format!("{v:.4}") };
    let _ = writeln!(svg, r#"<text x="{margin}" y="{}" font-size="11">{}</text>"#, h - margin + 16.0, axis(x0, plot.log_x));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#, w - margin, h - margin + 16.0, axis(x1, plot.log_x));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#, margin - 4.0, h - margin, axis(y0, plot.log_y));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#, margin - 4.0, margin + 4.0, axis(y1, plot.log_y));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#, w / 2.0, h - 16.0, escape(&plot.x_label));
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(&plot.y_label)
    );
    for (k, (name, series)) in plot.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = series
            .iter()
            .map(|&(x, y)| (tx(x), ty(y)))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, pts.join(" "));
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12" fill="{color}">{}</text>"#,
            w - margin - 150.0,
            margin + 16.0 * (k as f64 + 1.0),
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
