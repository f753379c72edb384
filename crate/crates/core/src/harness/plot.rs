//! Static SVG line charts of recovery rate against α.

use std::fmt::Write as _;

use crate::ensemble::{recovery_curves, AggregateRow};
use crate::error::{Error, Result};

use super::files::format_real;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 220.0;
const TOP: f64 = 28.0;
const BOTTOM: f64 = 56.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Tick positions covering `[lo, hi]` with a 1/2/5 step.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 8.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

/// One series per (method, p, ρ multiplier): DCL solid, PWG dashed, a
/// marker at every point.
pub fn render_svg(rows: &[AggregateRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::invalid("nothing to plot: no aggregate rows"));
    }
    let curves = recovery_curves(rows);
    let (mut lo, mut hi) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.alpha), b.max(r.alpha)));
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |a: f64| LEFT + (a - lo) / (hi - lo) * plot_w;
    let sy = |r: f64| TOP + (1.0 - r) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    for i in 0..=5 {
        let r = i as f64 / 5.0;
        let y = sy(r);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{r:.1}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for a in ticks(lo, hi) {
        let x = sx(a);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000000"/>"##,
            TOP + plot_h,
            TOP + plot_h + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            format_real((a * 1e9).round() / 1e9)
        );
    }
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#000000"/>"##
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">alpha (n = alpha k ln(p - k))</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">exact support recovery rate</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let mut legend_y = TOP + 8.0;
    for (ci, curve) in curves.iter().enumerate() {
        let color = PALETTE[ci % PALETTE.len()];
        for (method, dash) in [("DCL", ""), ("PWG", r#" stroke-dasharray="6 4""#)] {
            let pts: Vec<(f64, f64)> = curve
                .points
                .iter()
                .map(|pt| {
                    let rate = if method == "DCL" { pt.dcl_rate } else { pt.pwg_rate };
                    (sx(pt.alpha), sy(rate))
                })
                .collect();
            if pts.len() > 1 {
                let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
                    coords.join(" ")
                );
            }
            for (x, y) in &pts {
                let marker = if method == "DCL" {
                    format!(r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#)
                } else {
                    format!(
                        r#"<rect x="{:.2}" y="{:.2}" width="6" height="6" fill="white" stroke="{color}"/>"#,
                        x - 3.0,
                        y - 3.0
                    )
                };
                let _ = writeln!(svg, "{marker}");
            }
            let label = format!(
                "{method} p={} rho={}sqrt(n)",
                curve.p,
                format_real(curve.rho_multiplier)
            );
            let lx = LEFT + plot_w + 14.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx:.2}" y1="{legend_y:.2}" x2="{:.2}" y2="{legend_y:.2}" stroke="{color}" stroke-width="2"{dash}/>"#,
                lx + 24.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 30.0,
                legend_y + 4.0,
                escape(&label)
            );
            legend_y += 18.0;
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
