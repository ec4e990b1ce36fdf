//! Static SVG line charts of normalized sweep metrics.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::experiment::{Metric, SweepResult};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 48.0;
const BOTTOM: f64 = 56.0;

/// Stroke colour and dash pattern per series, cycled.
const STYLES: [(&str, Option<&str>); 6] = [
    ("#1f77b4", None),
    ("#7f7f7f", Some("7 4")),
    ("#d62728", Some("2 3")),
    ("#2ca02c", Some("9 3 2 3")),
    ("#9467bd", Some("12 4")),
    ("#ff7f0e", Some("1 2")),
];

pub struct PlotSeries<'a> {
    pub label: String,
    pub result: &'a SweepResult,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn render_svg(series: &[PlotSeries<'_>], metric: Metric) -> Result<String, String> {
    if series.is_empty() {
        return Err("nothing to plot".into());
    }
    let alphas = series.iter().flat_map(|s| s.result.rows.iter().map(|r| r.alpha));
    let (lo, hi) = alphas.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
        (lo.min(a), hi.max(a))
    });
    if !lo.is_finite() {
        return Err("series have no rows".into());
    }
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |a: f64| LEFT + (a - lo) / (hi - lo) * plot_w;
    let py = |v: f64| TOP + (1.0 - v.clamp(0.0, 1.0)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">Normalized total {metric}</text>"#,
        WIDTH / 2.0
    );

    // horizontal grid and y ticks
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let y = py(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.1}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    // x ticks every half unit of alpha
    let first = (lo * 2.0).ceil() as i64;
    let last = (hi * 2.0).floor() as i64;
    for k in first..=last {
        let a = k as f64 / 2.0;
        let x = px(a);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444"/>"##,
            TOP + plot_h,
            TOP + plot_h + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{a:.1}</text>"#,
            TOP + plot_h + 19.0
        );
    }
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#444"/>"##
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">alpha</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">normalized {metric}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let (color, dash) = STYLES[i % STYLES.len()];
        let points: Vec<String> = s
            .result
            .rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(r.alpha), py(r.normalized(metric))))
            .collect();
        let dash_attr = dash
            .map(|d| format!(r#" stroke-dasharray="{d}""#))
            .unwrap_or_default();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-label="{}" fill="none" stroke="{color}" stroke-width="2"{dash_attr} points="{}"/>"#,
            escape(&s.label),
            points.join(" ")
        );
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w - 170.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash_attr}/>"#,
            lx + 28.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 34.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn write_plot(series: &[PlotSeries<'_>], metric: Metric, path: &Path) -> io::Result<()> {
    let svg = render_svg(series, metric).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    fs::write(path, svg)
}
