//! Standalone SVG line charts: one series per arm × class over the λ₁
//! sweep, with 95% CI whiskers.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use routerq::scenario::{MetricsReport, TOTAL_LABEL};
use routerq::Metric;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 220.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// (λ₁, mean, lo, hi), sorted by λ₁
    pub points: Vec<(f64, f64, f64, f64)>,
}

/// Series for `metric`, per-class only (the aggregate row is left out).
pub fn series_for(report: &MetricsReport, metric: Metric) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for arm in report.arms() {
        let mut classes: Vec<String> = Vec::new();
        for r in report.rows.iter().filter(|r| r.arm == arm && r.metric == metric && r.class != TOTAL_LABEL) {
            if !classes.contains(&r.class) {
                classes.push(r.class.clone());
            }
        }
        classes.sort_by(|a, b| class_rank(a).cmp(&class_rank(b)).then(a.cmp(b)));
        for class in classes {
            let mut points: Vec<_> = report
                .rows
                .iter()
                .filter(|r| r.arm == arm && r.metric == metric && r.class == class)
                .map(|r| (r.lambda1, r.estimate.mean, r.estimate.ci95_lo, r.estimate.ci95_hi))
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            out.push(Series {
                label: format!("{class} {arm}"),
                points,
            });
        }
    }
    out
}

fn class_rank(class: &str) -> usize {
    match class {
        "VT" => 0,
        "FF" => 1,
        _ => 2,
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if (1e-2..1e4).contains(&v.abs()) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

pub fn render_svg(report: &MetricsReport, metric: Metric) -> Result<String> {
    let series = series_for(report, metric);
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        bail!("report has no {} rows", metric.name());
    }
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (x_min, x_max) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let ys = series.iter().flat_map(|s| s.points.iter().flat_map(|p| [p.2, p.3, p.1]));
    let (mut y_min, mut y_max) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
    y_min = y_min.min(0.0);
    if y_max <= y_min {
        y_max = y_min + 1.0;
    }
    y_max += (y_max - y_min) * 0.05;
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_min) / x_span * plot_w;
    let sy = |y: f64| TOP + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let title = format!("Scenario {}: {}", report.scenario, metric.description());
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(&title)
    );

    // axes and grid
    let _ = writeln!(
        svg,
        r#"<g stroke="black" stroke-width="1"><line x1="{LEFT}" y1="{:.1}" x2="{:.1}" y2="{:.1}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}"/></g>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h,
        TOP + plot_h
    );
    for i in 0..=5 {
        let y = y_min + (y_max - y_min) * i as f64 / 5.0;
        let py = sy(y);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            py + 4.0,
            tick_label(y)
        );
    }
    let mut x_ticks: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    x_ticks.sort_by(f64::total_cmp);
    x_ticks.dedup();
    for x in &x_ticks {
        let px = sx(*x);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0,
            tick_label(x / 1e5)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">λ₁ (×10⁵ packets/s)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(metric.description())
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = if i / PALETTE.len() % 2 == 1 { r#" stroke-dasharray="6 3""# } else { "" };
        let points: Vec<String> = s.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
        let _ = writeln!(svg, r#"<g class="series" stroke="{color}" fill="{color}">"#);
        let _ = writeln!(svg, r#"<title>{}</title>"#, escape(&s.label));
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke-width="2"{dash} points="{}"/>"#,
            points.join(" ")
        );
        for p in &s.points {
            let (px, lo, hi) = (sx(p.0), sy(p.2), sy(p.3));
            let _ = writeln!(
                svg,
                r#"<line x1="{px:.2}" y1="{lo:.2}" x2="{px:.2}" y2="{hi:.2}" stroke-width="1"/><line x1="{:.2}" y1="{lo:.2}" x2="{:.2}" y2="{lo:.2}"/><line x1="{:.2}" y1="{hi:.2}" x2="{:.2}" y2="{hi:.2}"/><circle cx="{px:.2}" cy="{:.2}" r="3"/>"#,
                px - 3.0,
                px + 3.0,
                px - 3.0,
                px + 3.0,
                sy(p.1)
            );
        }
        let _ = writeln!(svg, "</g>");
        let ly = TOP + 10.0 + i as f64 * 20.0;
        let lx = WIDTH - RIGHT + 20.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{}</text></g>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_chart(report: &MetricsReport, metric: Metric, path: &Path) -> Result<()> {
    let svg = render_svg(report, metric)?;
    std::fs::write(path, svg).with_context(|| format!("writing {}", path.display()))
}
