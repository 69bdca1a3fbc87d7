//! Minimal SVG charts built from lines, circles, rectangles and text.

use std::fmt::Write;

use finenet::metrics::DynamicityReport;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn header(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Line chart with one polyline and marker set per series.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut out = String::new();
    header(&mut out, W, H);
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{b}" stroke="black"/>"#,
        b = H - MARGIN,
        r = W - MARGIN
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{fx:.1}</text><text x="{:.1}" y="{:.1}" text-anchor="end">{fy:.1}</text>"#,
            sx(fx),
            H - MARGIN + 16.0,
            MARGIN - 6.0,
            sy(fy) + 4.0
        );
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, path.join(" "));
        for &(x, y) in pts {
            let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, sx(x), sy(y));
        }
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            W - MARGIN - 150.0,
            ly - 9.0,
            W - MARGIN - 135.0,
            ly,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// One bar chart of normalised bin mass per attribute, side by side.
pub fn histogram_panels(title: &str, report: &DynamicityReport) -> String {
    let panel_w = 300.0;
    let panel_h = 220.0;
    let (w, h) = (2.0 * panel_w + 40.0, 2.0 * panel_h + 80.0);
    let mut out = String::new();
    header(&mut out, w, h);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, w / 2.0, escape(title));
    for (i, (name, stats)) in report.attributes().iter().enumerate() {
        let ox = 20.0 + (i % 2) as f64 * panel_w;
        let oy = 40.0 + (i / 2) as f64 * (panel_h + 20.0);
        let fractions = stats.histogram.normalized();
        let peak = fractions.iter().copied().fold(0.0, f64::max).max(1e-9);
        let bar_w = (panel_w - 40.0) / fractions.len() as f64;
        let base = oy + panel_h - 30.0;
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, ox + panel_w / 2.0, oy + 12.0, name);
        let _ = writeln!(out, r#"<line x1="{ox:.1}" y1="{base:.1}" x2="{:.1}" y2="{base:.1}" stroke="black"/>"#, ox + panel_w - 30.0);
        for (k, f) in fractions.iter().enumerate() {
            let bh = f / peak * (panel_h - 60.0);
            let _ = writeln!(
                out,
                r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{bh:.1}" fill="{}"/>"#,
                ox + k as f64 * bar_w,
                base - bh,
                (bar_w - 2.0).max(1.0),
                COLORS[i % COLORS.len()]
            );
        }
        let edges = stats.histogram.edges();
        for (k, (lo, _)) in edges.iter().enumerate().step_by(2) {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="9">{lo}</text>"#,
                ox + k as f64 * bar_w,
                base + 12.0
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
