//! Self-contained SVG log-log plots.

use std::fmt::Write as _;

use crate::experiments::{ExperimentTable, SweepVariable};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Dashed reference line `y ∝ x^slope` through the first point of the
/// first series.
#[derive(Debug, Clone, PartialEq)]
pub struct Guide {
    pub slope: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogLogPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub guides: Vec<Guide>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn decades(lo: f64, hi: f64) -> (f64, f64) {
    let (a, b) = (lo.log10().floor(), hi.log10().ceil());
    if a == b {
        (a - 0.5, b + 0.5)
    } else {
        (a, b)
    }
}

impl LogLogPlot {
    pub fn to_svg(&self) -> String {
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .filter(|&(x, y)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())
            .collect();
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        if pts.is_empty() {
            svg.push_str("</svg>\n");
            return svg;
        }
        let fold = |f: fn(f64, f64) -> f64, init: f64, by: fn(&(f64, f64)) -> f64| {
            pts.iter().map(by).fold(init, f)
        };
        let (x0, x1) = decades(
            fold(f64::min, f64::INFINITY, |p| p.0),
            fold(f64::max, 0.0, |p| p.0),
        );
        let (y0, y1) = decades(
            fold(f64::min, f64::INFINITY, |p| p.1),
            fold(f64::max, 0.0, |p| p.1),
        );
        let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
        let sx = |x: f64| LEFT + (x.log10() - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y.log10()) / (y1 - y0) * ph;

        let _ = writeln!(
            svg,
            r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>"##
        );
        let mut e = x0.ceil();
        while e <= x1 {
            let x = LEFT + (e - x0) / (x1 - x0) * pw;
            let _ = writeln!(
                svg,
                r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#ddd"/><text x="{x:.2}" y="{}" text-anchor="middle">1e{e}</text>"##,
                TOP + ph,
                TOP + ph + 18.0
            );
            e += 1.0;
        }
        let mut e = y0.ceil();
        while e <= y1 {
            let y = TOP + (y1 - e) / (y1 - y0) * ph;
            let _ = writeln!(
                svg,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0
            );
            e += 1.0;
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        let _ = writeln!(
            svg,
            r#"<clipPath id="plot-area"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath>"#
        );
        let anchor = self
            .series
            .first()
            .and_then(|s| s.points.iter().find(|p| p.0 > 0.0 && p.1 > 0.0))
            .copied();
        let mut legend = 0;
        if let Some((ax, ay)) = anchor {
            let (lx0, lx1) = (10f64.powf(x0), 10f64.powf(x1));
            for g in &self.guides {
                let y_at = |x: f64| ay * (x / ax).powf(g.slope);
                let _ = writeln!(
                    svg,
                    r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#777" stroke-dasharray="6 4" clip-path="url(#plot-area)"/>"##,
                    sx(lx0),
                    sy(y_at(lx0)),
                    sx(lx1),
                    sy(y_at(lx1))
                );
                let _ = writeln!(
                    svg,
                    r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#777" stroke-dasharray="6 4"/><text x="{}" y="{}">{}</text>"##,
                    LEFT + pw - 150.0,
                    TOP + 16.0 + 16.0 * legend as f64,
                    LEFT + pw - 120.0,
                    TOP + 16.0 + 16.0 * legend as f64,
                    LEFT + pw - 114.0,
                    TOP + 20.0 + 16.0 * legend as f64,
                    escape(&g.label)
                );
                legend += 1;
            }
        }
        for (i, s) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let path: Vec<String> = s
                .points
                .iter()
                .filter(|p| p.0 > 0.0 && p.1 > 0.0)
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            );
            for p in &path {
                let (x, y) = p.split_once(',').unwrap_or(("0", "0"));
                let _ = writeln!(svg, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
            }
            let ly = TOP + 16.0 + 16.0 * legend as f64;
            let _ = writeln!(
                svg,
                r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="1.5"/><text x="{}" y="{}">{}</text>"#,
                LEFT + pw - 150.0,
                LEFT + pw - 120.0,
                LEFT + pw - 114.0,
                ly + 4.0,
                escape(&s.label)
            );
            legend += 1;
        }
        svg.push_str("</svg>\n");
        svg
    }
}

/// Default figure for one or more tables of the same sweep: errors against
/// `T` or `dt`, `1/λ_min` against `T`, `λ_max/λ_min` against `α²`.
pub fn tables_plot(tables: &[&ExperimentTable]) -> LogLogPlot {
    let first = tables.first().map(|t| (t.command, t.config.sweep));
    let label =
        |t: &ExperimentTable| format!("{} {}", t.config.system.name(), t.config.scheme.as_str());
    let series = |f: &dyn Fn(&crate::experiments::TableRow) -> Option<f64>| -> Vec<Series> {
        tables
            .iter()
            .map(|t| Series {
                label: label(t),
                points: t
                    .rows
                    .iter()
                    .filter_map(|r| Some((r.value, f(r)?)))
                    .collect(),
            })
            .collect()
    };
    let guide = |slope: f64, label: &str| Guide {
        slope,
        label: label.to_string(),
    };
    match first {
        Some(("sweep-cond", SweepVariable::Alpha2)) => LogLogPlot {
            title: "Condition number against time dilation weight".into(),
            x_label: "alpha^2".into(),
            y_label: "lambda_max / lambda_min".into(),
            series: series(&|r| r.condition()),
            guides: vec![],
        },
        Some(("sweep-cond", _)) => LogLogPlot {
            title: "Inverse smallest eigenvalue of L_H".into(),
            x_label: "T".into(),
            y_label: "1 / lambda_min".into(),
            series: series(&|r| r.inv_lambda_min()),
            guides: vec![guide(0.0, "bounded")],
        },
        Some((_, SweepVariable::TimeStep)) => LogLogPlot {
            title: "Sensitivity error against time step".into(),
            x_label: "dt".into(),
            y_label: "|mean dJ/ds - reference|".into(),
            series: series(&|r| r.abs_mean_error),
            guides: vec![guide(1.0, "O(dt)"), guide(2.0, "O(dt^2)")],
        },
        _ => LogLogPlot {
            title: "Sensitivity error against window length".into(),
            x_label: "T".into(),
            y_label: "|mean dJ/ds - reference|".into(),
            series: series(&|r| r.abs_mean_error),
            guides: vec![guide(-1.0, "O(1/T)"), guide(-0.5, "O(1/sqrt T)")],
        },
    }
}
