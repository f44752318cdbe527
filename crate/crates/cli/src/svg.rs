//! Minimal SVG line charts rendered from output tables.
//!
//! Columns are named `<chain label>/<series>`; one panel is drawn per
//! series, one line per chain. Color encodes the model (probit red, robit
//! with small `nu` gray, robit with large `nu` blue) and the dash pattern the
//! chain kind (solid DA, dashed sandwich).

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::table::Table;

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 260.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 230.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 40.0;

/// `nu` at or below this is drawn as a small-`nu` robit.
pub const SMALL_NU_MAX: f64 = 10.0;

pub fn line_color(chain_label: &str) -> &'static str {
    if chain_label.starts_with("probit") {
        return "#d62728";
    }
    let nu = chain_label
        .strip_prefix("robit-")
        .and_then(|rest| rest.split('-').next())
        .and_then(|v| v.parse::<f64>().ok());
    match nu {
        Some(nu) if nu <= SMALL_NU_MAX => "#7f7f7f",
        _ => "#1f77b4",
    }
}

pub fn is_sandwich(chain_label: &str) -> bool {
    chain_label.contains("-sandwich")
}

fn split_name(name: &str) -> (&str, &str) {
    name.rsplit_once('/').unwrap_or((name, ""))
}

fn nice_ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / count as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 1e-3 && v.abs() < 1e5) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

/// Renders every series panel of `table` into one SVG document.
pub fn render(table: &Table, title: &str) -> String {
    let mut panels: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (c, name) in table.names.iter().enumerate() {
        panels.entry(split_name(name).1).or_default().push(c);
    }
    let total_w = MARGIN_L + PANEL_W + MARGIN_R;
    let panel_total = MARGIN_T + PANEL_H + MARGIN_B;
    let total_h = 20.0 + panel_total * panels.len().max(1) as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{total_h}" viewBox="0 0 {total_w} {total_h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="16" font-size="14" text-anchor="middle">{}</text>"#, total_w / 2.0, escape(title));

    let xs: Vec<f64> = table.index.iter().map(|&i| i as f64).collect();
    let (x_lo, x_hi) = bounds(&xs);
    for (k, (series, cols)) in panels.iter().enumerate() {
        let top = 20.0 + k as f64 * panel_total + MARGIN_T;
        let ys: Vec<f64> = cols.iter().flat_map(|&c| table.columns[c].iter().copied()).filter(|v| v.is_finite()).collect();
        let (mut y_lo, mut y_hi) = bounds(&ys);
        if y_hi - y_lo < 1e-12 * y_hi.abs().max(1.0) {
            y_lo -= 0.5;
            y_hi += 0.5;
        }
        let px = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo).max(f64::MIN_POSITIVE) * PANEL_W;
        let py = |y: f64| top + PANEL_H - (y - y_lo) / (y_hi - y_lo) * PANEL_H;

        let _ = writeln!(svg, r#"<g class="panel">"#);
        let _ = writeln!(svg, r#"<rect x="{MARGIN_L}" y="{top}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="black"/>"#);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, MARGIN_L + PANEL_W / 2.0, top - 6.0, escape(series));
        for t in nice_ticks(x_lo, x_hi, 6) {
            let x = px(t);
            let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{b2}" stroke="black"/><text x="{x:.2}" y="{ty}" text-anchor="middle">{}</text>"#, fmt_tick(t), b = top + PANEL_H, b2 = top + PANEL_H + 4.0, ty = top + PANEL_H + 16.0);
        }
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, MARGIN_L + PANEL_W / 2.0, top + PANEL_H + 32.0, escape(&table.index_name));
        for t in nice_ticks(y_lo, y_hi, 5) {
            let y = py(t);
            let _ = writeln!(svg, r#"<line x1="{a}" y1="{y:.2}" x2="{MARGIN_L}" y2="{y:.2}" stroke="black"/><text x="{tx}" y="{ty:.2}" text-anchor="end">{}</text>"#, fmt_tick(t), a = MARGIN_L - 4.0, tx = MARGIN_L - 6.0, ty = y + 4.0);
        }
        for (j, &c) in cols.iter().enumerate() {
            let chain = split_name(&table.names[c]).0;
            let mut points = String::new();
            for (x, y) in xs.iter().zip(&table.columns[c]) {
                if y.is_finite() {
                    let _ = write!(points, "{:.2},{:.2} ", px(*x), py(*y));
                }
            }
            let dash = if is_sandwich(chain) { r#" stroke-dasharray="6,4""# } else { "" };
            let color = line_color(chain);
            let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.2"{dash} points="{}"/>"#, points.trim_end());
            let ly = top + 12.0 + 16.0 * j as f64;
            let lx = MARGIN_L + PANEL_W + 12.0;
            let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="1.5"{dash}/><text x="{}" y="{}">{}</text>"#, lx + 28.0, lx + 34.0, ly + 4.0, escape(chain));
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() && hi.is_finite() { (lo, hi) } else { (0.0, 1.0) }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
