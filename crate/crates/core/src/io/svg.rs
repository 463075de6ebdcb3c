//! Minimal self-contained log-log SVG plots.

use std::fmt::Write;

use super::csv::parse_csv;
use super::ParseError;
use crate::analysis::{default_window, fit_power_law, PowerLawFit};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Points,
    Line,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    pub color: &'static str,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LogLogPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub annotation: Vec<String>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl LogLogPlot {
    fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let pts = self.series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| *x > 0.0 && *y > 0.0);
        let mut b: Option<(f64, f64, f64, f64)> = None;
        for &(x, y) in pts {
            let (lx, ly) = (x.log10(), y.log10());
            b = Some(match b {
                None => (lx, lx, ly, ly),
                Some((a, c, d, e)) => (a.min(lx), c.max(lx), d.min(ly), e.max(ly)),
            });
        }
        // widen to whole decades
        b.map(|(x0, x1, y0, y1)| {
            let (x0, mut x1) = (x0.floor(), x1.ceil());
            let (y0, mut y1) = (y0.floor(), y1.ceil());
            if x1 <= x0 {
                x1 = x0 + 1.0;
            }
            if y1 <= y0 {
                y1 = y0 + 1.0;
            }
            (x0, x1, y0, y1)
        })
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(&self.title));
        let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);

        if let Some((x0, x1, y0, y1)) = self.bounds() {
            let px = |x: f64| LEFT + (x.log10() - x0) / (x1 - x0) * pw;
            let py = |y: f64| TOP + ph - (y.log10() - y0) / (y1 - y0) * ph;
            for d in (x0 as i32)..=(x1 as i32) {
                let x = LEFT + (f64::from(d) - x0) / (x1 - x0) * pw;
                let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##, TOP + ph);
                let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"#, TOP + ph + 18.0);
            }
            for d in (y0 as i32)..=(y1 as i32) {
                let y = TOP + ph - (f64::from(d) - y0) / (y1 - y0) * ph;
                let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
                let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#, LEFT - 6.0, y + 4.0);
            }
            for series in &self.series {
                let pts: Vec<(f64, f64)> =
                    series.points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|&(x, y)| (px(x), py(y))).collect();
                match series.style {
                    Style::Points => {
                        for (x, y) in pts {
                            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{}"/>"#, series.color);
                        }
                    }
                    Style::Line => {
                        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                        let _ = writeln!(
                            s,
                            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                            path.join(" "),
                            series.color
                        );
                    }
                }
            }
        }

        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 14.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        let lines = self.series.iter().map(|x| (x.label.as_str(), Some(x.color))).chain(self.annotation.iter().map(|a| (a.as_str(), None)));
        for (i, (text, color)) in lines.enumerate() {
            let y = TOP + 18.0 + 16.0 * i as f64;
            if let Some(c) = color {
                let _ = writeln!(s, r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{c}"/>"#, LEFT + pw - 200.0, y - 9.0);
            }
            let _ = writeln!(s, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, LEFT + pw - 185.0, escape(text));
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Data points plus the fitted power law over `window`.
pub fn power_law_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    ys: &[f64],
    fit: Option<&PowerLawFit>,
) -> LogLogPlot {
    let mut series = vec![Series {
        label: y_label.to_string(),
        points: xs.iter().copied().zip(ys.iter().copied()).collect(),
        style: Style::Points,
        color: "#1f77b4",
    }];
    let mut annotation = Vec::new();
    if let Some(f) = fit {
        let (lo, hi) = f.window;
        series.push(Series {
            label: format!("fit slope {:.4}", f.slope),
            points: vec![(lo, f.eval(lo)), (hi, f.eval(hi))],
            style: Style::Line,
            color: "#d62728",
        });
        annotation.push(format!("R^2 = {:.5}, window [{}, {}]", f.r_squared, lo, hi));
    }
    LogLogPlot { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), series, annotation }
}

/// Builds the plot for columns `x`/`y` of a CSV table. With `fit` set, a
/// power law is refitted inside `window` (default: the upper decade of `x`) and drawn
/// when the fit succeeds. Identical inputs give identical SVG text.
pub fn svg_from_csv(csv_text: &str, x: &str, y: &str, fit: bool, window: Option<(f64, f64)>) -> Result<String, ParseError> {
    let table = parse_csv(csv_text)?;
    let (xs, ys) = table.xy(x, y)?;
    let fit = if fit { fit_power_law(&xs, &ys, window.or_else(|| default_window(&xs))).ok() } else { None };
    Ok(power_law_plot(&format!("{y} vs {x}"), x, y, &xs, &ys, fit.as_ref()).render())
}
