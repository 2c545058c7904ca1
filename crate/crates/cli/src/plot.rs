//! Minimal SVG charts drawn from a result CSV alone.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, CliResult};
use crate::table::{format_float, Table};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Style {
    Line,
    Markers,
}

#[derive(Clone, Debug)]
struct Series {
    label: Option<String>,
    points: Vec<(f64, f64)>,
    /// Optional `(lower, upper)` envelope around `points`.
    band: Option<Vec<(f64, f64)>>,
}

#[derive(Clone, Debug)]
struct Chart {
    title: String,
    x_label: String,
    y_label: String,
    style: Style,
    series: Vec<Series>,
}

/// Renders the chart for a result CSV, picking the layout from its header.
pub fn plot_csv(text: &str, origin: &Path) -> CliResult<String> {
    let table = Table::from_csv(text, origin)?;
    let chart = chart_for(&table).ok_or_else(|| {
        CliError::Io(format!(
            "{}: unrecognized result columns [{}]",
            origin.display(),
            table.headers.join(", ")
        ))
    })?;
    Ok(render(&chart))
}

fn col(t: &Table, name: &str) -> Vec<f64> {
    t.column(name).expect("header checked")
}

fn group_by(t: &Table, key: &str, x: &str, y: &str, label: impl Fn(f64) -> String) -> Vec<Series> {
    let (keys, xs, ys) = (col(t, key), col(t, x), col(t, y));
    let mut out: Vec<(f64, Series)> = Vec::new();
    for ((k, x), y) in keys.into_iter().zip(xs).zip(ys) {
        match out.iter_mut().find(|(key, _)| *key == k) {
            Some((_, s)) => s.points.push((x, y)),
            None => out.push((
                k,
                Series {
                    label: Some(label(k)),
                    points: vec![(x, y)],
                    band: None,
                },
            )),
        }
    }
    out.into_iter().map(|(_, s)| s).collect()
}

fn single(xs: Vec<f64>, ys: Vec<f64>) -> Vec<Series> {
    vec![Series {
        label: None,
        points: xs.into_iter().zip(ys).collect(),
        band: None,
    }]
}

fn chart_for(t: &Table) -> Option<Chart> {
    let h: Vec<&str> = t.headers.iter().map(String::as_str).collect();
    let chart = |title: &str, x: &str, y: &str, style, series| Chart {
        title: title.into(),
        x_label: x.into(),
        y_label: y.into(),
        style,
        series,
    };
    Some(match h.as_slice() {
        ["alpha", "mean_rel_err", "std_rel_err"] => {
            let (a, mean, std) = (
                col(t, "alpha"),
                col(t, "mean_rel_err"),
                col(t, "std_rel_err"),
            );
            let band = mean.iter().zip(&std).map(|(m, s)| (m - s, m + s)).collect();
            let mut series = single(a, mean);
            series[0].band = Some(band);
            chart(
                "Recovery error vs sampling rate",
                "sampling rate α",
                "relative error",
                Style::Line,
                series,
            )
        }
        ["index", "i", "j", "k", "abs_gap"] => chart(
            "Entrywise reconstruction gap",
            "linear index",
            "|X − F|",
            Style::Markers,
            single(col(t, "index"), col(t, "abs_gap")),
        ),
        ["T", "sigma", "mean_rel_err"] => chart(
            "Recovery error vs number of time samples",
            "T",
            "relative error",
            Style::Line,
            group_by(t, "sigma", "T", "mean_rel_err", |s| {
                format!("σ = {}", format_float(s))
            }),
        ),
        ["T", "K"] => chart(
            "Condition number vs number of time samples",
            "T",
            "K",
            Style::Line,
            single(col(t, "T"), col(t, "K")),
        ),
        ["excluded_j", "rel_err"] => chart(
            "Error with one lateral slice removed",
            "excluded j",
            "relative error",
            Style::Markers,
            single(col(t, "excluded_j"), col(t, "rel_err")),
        ),
        ["mode", "excluded_index", "rel_err"] => chart(
            "Error with one slab removed",
            "excluded index",
            "relative error",
            Style::Markers,
            group_by(t, "mode", "excluded_index", "rel_err", |m| {
                format!("mode {m}")
            }),
        ),
        _ => return None,
    })
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn map(&self, v: f64, from: f64, to: f64) -> f64 {
        let (v, lo, hi) = if self.log {
            (
                v.clamp(self.lo, self.hi).log10(),
                self.lo.log10(),
                self.hi.log10(),
            )
        } else {
            (v, self.lo, self.hi)
        };
        let frac = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        from + frac * (to - from)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (
                self.lo.log10().floor() as i32,
                self.hi.log10().ceil() as i32,
            );
            let stride = ((b - a) / 8).max(1);
            (a..=b)
                .step_by(stride as usize)
                .map(|e| 10f64.powi(e))
                .collect()
        } else {
            let span = (self.hi - self.lo).max(f64::MIN_POSITIVE);
            let raw = span / 6.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .into_iter()
                .map(|s| s * mag)
                .find(|s| *s >= raw)
                .unwrap_or(10.0 * mag);
            let first = (self.lo / step).ceil() as i64;
            let last = (self.hi / step).floor() as i64;
            (first..=last).map(|i| i as f64 * step).collect()
        }
    }
}

fn x_axis(xs: &[f64]) -> Axis {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        (lo - 1.0, hi + 1.0)
    };
    Axis { lo, hi, log: false }
}

// Nonpositive values sit on the floor of the axis, infinite ones on the ceiling.
fn y_axis(ys: &[f64]) -> Axis {
    let pos: Vec<f64> = ys
        .iter()
        .copied()
        .filter(|v| *v > 0.0 && v.is_finite())
        .collect();
    let lo = pos.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return Axis {
            lo: 1e-17,
            hi: 1.0,
            log: true,
        };
    }
    let lo = 10f64.powf(lo.log10().floor());
    let hi = 10f64.powf(hi.log10().ceil()).max(lo * 10.0);
    Axis { lo, hi, log: true }
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        format!("1e{}", v.log10().round() as i32)
    } else {
        format_float((v * 1e9).round() / 1e9)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn render(chart: &Chart) -> String {
    let xs: Vec<f64> = chart
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .collect();
    let mut ys: Vec<f64> = chart
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .collect();
    for s in &chart.series {
        if let Some(band) = &s.band {
            ys.extend(band.iter().map(|b| b.1));
        }
    }
    let (xa, ya) = (x_axis(&xs), y_axis(&ys));
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let px = |v: f64| xa.map(v, x0, x1);
    let py = |v: f64| ya.map(v, y0, y1);

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&chart.title)
    );
    for t in xa.ticks() {
        let x = px(t);
        let _ = writeln!(
            w,
            r##"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}" stroke="#e5e5e5"/>"##
        );
        let _ = writeln!(
            w,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 16.0,
            tick_label(t, false)
        );
    }
    for t in ya.ticks() {
        let y = py(t);
        let _ = writeln!(
            w,
            r##"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#e5e5e5"/>"##
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            y + 4.0,
            tick_label(t, true)
        );
    }
    let _ = writeln!(
        w,
        r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 18.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(&chart.y_label)
    );

    for (s, color) in chart.series.iter().zip(COLORS.iter().cycle()) {
        if let Some(band) = &s.band {
            let upper = s.points.iter().zip(band).map(|(p, b)| (px(p.0), py(b.1)));
            let lower = s
                .points
                .iter()
                .zip(band)
                .rev()
                .map(|(p, b)| (px(p.0), py(b.0)));
            let pts: Vec<String> = upper
                .chain(lower)
                .map(|(x, y)| format!("{x:.2},{y:.2}"))
                .collect();
            let _ = writeln!(
                w,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
                pts.join(" ")
            );
        }
        if chart.style == Style::Line && s.points.len() > 1 {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1)))
                .collect();
            let _ = writeln!(
                w,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
        }
        for p in &s.points {
            let _ = writeln!(
                w,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                px(p.0),
                py(p.1)
            );
        }
    }
    let labelled: Vec<_> = chart
        .series
        .iter()
        .zip(COLORS.iter().cycle())
        .filter_map(|(s, c)| s.label.as_ref().map(|l| (l, c)))
        .collect();
    for (row, (label, color)) in labelled.into_iter().enumerate() {
        let y = y1 + 14.0 + 16.0 * row as f64;
        let _ = writeln!(
            w,
            r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{color}"/>"#,
            x1 - 110.0,
            y - 9.0
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{y:.2}">{}</text>"#,
            x1 - 95.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
