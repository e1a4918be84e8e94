//! Static SVG line plots.

use std::fmt::Write as _;

use anyhow::{bail, Result};

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Log axes plot `log10 |v|` and skip zeros.
    pub log_log: bool,
    pub width: f64,
    pub height: f64,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            title: String::new(),
            x_label: "t (s)".into(),
            y_label: "z (cm)".into(),
            log_log: false,
            width: 640.0,
            height: 420.0,
        }
    }
}

/// Maps data coordinates to pixels.
#[derive(Debug, Clone, Copy)]
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT
            + (x - self.x0) / (self.x1 - self.x0) * (self.width - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        self.height
            - MARGIN_BOTTOM
            - (y - self.y0) / (self.y1 - self.y0) * (self.height - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn transform(points: &[(f64, f64)], log_log: bool) -> Vec<(f64, f64)> {
    points
        .iter()
        .filter_map(|&(x, y)| {
            if log_log {
                (x.abs() > 0.0 && y.abs() > 0.0).then(|| (x.abs().log10(), y.abs().log10()))
            } else {
                Some((x, y))
            }
        })
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect()
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    }
}

/// Tick positions: whole decades on log axes, otherwise five even steps.
fn ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let first = lo.ceil() as i64;
        let last = hi.floor() as i64;
        if last >= first && last - first <= 20 {
            return (first..=last).map(|d| d as f64).collect();
        }
    }
    (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        if v.fract() == 0.0 {
            format!("1e{}", v as i64)
        } else {
            format!("{:.3e}", 10f64.powf(v))
        }
    } else {
        format!("{v:.3e}")
    }
}

/// Renders the series as one polyline each, with axes, ticks and a legend.
/// Axis ranges are the exact data extents, so output depends only on the
/// input.
pub fn render_plot(series: &[Series], style: &PlotStyle) -> Result<String> {
    if series.is_empty() {
        bail!("nothing to plot: no series");
    }
    let data: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| transform(&s.points, style.log_log))
        .collect();
    if data.iter().all(|d| d.is_empty()) {
        bail!("nothing to plot: every series is empty");
    }
    let all = data.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (x0, x1) = padded(x0, x1);
    let (y0, y1) = padded(y0, y1);
    let frame = Frame {
        x0,
        x1,
        y0,
        y1,
        width: style.width,
        height: style.height,
    };

    let (w, h) = (style.width, style.height);
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    )?;
    writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#)?;
    let (left, right) = (MARGIN_LEFT, w - MARGIN_RIGHT);
    let (top, bottom) = (MARGIN_TOP, h - MARGIN_BOTTOM);
    writeln!(
        svg,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    )?;
    if !style.title.is_empty() {
        writeln!(
            svg,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            w / 2.0,
            escape(&style.title)
        )?;
    }
    for t in ticks(x0, x1, style.log_log) {
        let x = frame.px(t);
        writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            bottom + 5.0
        )?;
        writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 18.0,
            tick_label(t, style.log_log)
        )?;
    }
    for t in ticks(y0, y1, style.log_log) {
        let y = frame.py(t);
        writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="black"/>"#,
            left - 5.0
        )?;
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 8.0,
            y + 4.0,
            tick_label(t, style.log_log)
        )?;
    }
    let axis_note = if style.log_log { " (log10 |.|)" } else { "" };
    writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}{axis_note}</text>"#,
        (left + right) / 2.0,
        h - 12.0,
        escape(&style.x_label)
    )?;
    writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}{axis_note}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(&style.y_label)
    )?;

    for (i, (s, points)) in series.iter().zip(&data).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        )?;
        let ly = top + 16.0 + 16.0 * i as f64;
        writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"/>"#,
            left + 10.0,
            left + 30.0
        )?;
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            left + 36.0,
            ly + 4.0,
            escape(&s.label)
        )?;
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polylines(svg: &str) -> Vec<Vec<(f64, f64)>> {
        svg.lines()
            .filter_map(|l| {
                l.strip_prefix("<polyline")
                    .map(|rest| rest.split("points=\"").nth(1).unwrap())
            })
            .map(|p| {
                p.trim_end_matches("\"/>")
                    .split(' ')
                    .map(|xy| {
                        let (x, y) = xy.split_once(',').unwrap();
                        (x.parse().unwrap(), y.parse().unwrap())
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn two_points_one_polyline() {
        let svg = render_plot(
            &[Series::new("a", vec![(0.0, 0.0), (1.0, -1.0)])],
            &PlotStyle::default(),
        )
        .unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn deterministic() {
        let s = [Series::new(
            "z4 <bottom>",
            (0..50).map(|i| (i as f64, (i as f64).sin())).collect(),
        )];
        let style = PlotStyle {
            title: "a & b".into(),
            ..PlotStyle::default()
        };
        let a = render_plot(&s, &style).unwrap();
        assert_eq!(a, render_plot(&s, &style).unwrap());
        assert!(a.contains("z4 &lt;bottom&gt;") && a.contains("a &amp; b"));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(render_plot(&[], &PlotStyle::default()).is_err());
        assert!(render_plot(&[Series::new("e", vec![])], &PlotStyle::default()).is_err());
    }

    #[test]
    fn log_log_power_law_is_straight_with_its_exponent() {
        let points: Vec<(f64, f64)> = (1..=100)
            .map(|i| {
                let t = 1e-3 * i as f64;
                (t, -4.5e6 * t.powi(8))
            })
            .collect();
        let style = PlotStyle {
            log_log: true,
            ..PlotStyle::default()
        };
        let svg = render_plot(&[Series::new("z4", points.clone())], &style).unwrap();
        let line = &polylines(&svg)[0];
        let decades_x = points.last().unwrap().0.log10() - points[0].0.log10();
        let decades_y = 8.0 * decades_x;
        let px_per_decade_x = (style.width - MARGIN_LEFT - MARGIN_RIGHT) / decades_x;
        let px_per_decade_y = (style.height - MARGIN_TOP - MARGIN_BOTTOM) / decades_y;
        let coarse: Vec<(f64, f64)> = line.iter().step_by(10).copied().collect();
        for w in coarse.windows(2) {
            let slope =
                -(w[1].1 - w[0].1) / px_per_decade_y / ((w[1].0 - w[0].0) / px_per_decade_x);
            assert!((slope - 8.0).abs() < 0.05, "{slope}");
        }
    }
}
