//! Minimal standalone SVG line plots: mean polyline, translucent std band,
//! axes and legend. Output bytes depend only on the input.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 48.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// `(x, mean, std)` rows, plotted in the given order.
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl LinePlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        LinePlot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
        }
    }

    pub fn with_series(mut self, label: &str, points: Vec<(f64, f64, f64)>) -> Self {
        self.series.push(Series {
            label: label.into(),
            points,
        });
        self
    }

    /// Builds one series per distinct value of `group_col` (or a single
    /// series when `None`) from a CSV table.
    pub fn from_csv(
        path: &Path,
        x_col: &str,
        y_col: &str,
        std_col: &str,
        group_col: Option<&str>,
    ) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::InvalidArgument(format!("column {name} not in {}", path.display())))
        };
        let (xi, yi, si) = (col(x_col)?, col(y_col)?, col(std_col)?);
        let gi = group_col.map(col).transpose()?;
        let mut plot = LinePlot::new("", x_col, y_col);
        for rec in rdr.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("not a number: {}", &rec[i])))
            };
            let label = gi.map_or_else(|| y_col.to_owned(), |g| rec[g].to_owned());
            let point = (num(xi)?, num(yi)?, num(si)?);
            match plot.series.iter_mut().find(|s| s.label == label) {
                Some(s) => s.points.push(point),
                None => plot.series.push(Series {
                    label,
                    points: vec![point],
                }),
            }
        }
        Ok(plot)
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders `plot` as SVG text.
pub fn render_svg(plot: &LinePlot) -> Result<String> {
    let all: Vec<&(f64, f64, f64)> = plot.series.iter().flat_map(|s| &s.points).collect();
    if all.is_empty() {
        return Err(Error::InvalidArgument("nothing to plot: empty table".into()));
    }
    if all.iter().any(|(x, y, s)| !(x.is_finite() && y.is_finite() && s.is_finite())) {
        return Err(Error::InvalidArgument("non-finite value in plot table".into()));
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y, s) in &all {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(y - s.abs());
        y1 = y1.max(y + s.abs());
    }
    if x1 == x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        fmt(MARGIN_L + pw / 2.0),
        escape(&plot.title)
    );
    // axes
    let _ = writeln!(
        svg,
        r#"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{l}" y1="{t}" x2="{l}" y2="{b}" stroke="black"/>"#,
        l = fmt(MARGIN_L),
        r = fmt(MARGIN_L + pw),
        t = fmt(MARGIN_T),
        b = fmt(MARGIN_T + ph)
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            fmt(sx(fx)),
            fmt(MARGIN_T + ph + 16.0),
            format_tick(fx)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            fmt(MARGIN_L - 6.0),
            fmt(sy(fy) + 4.0),
            format_tick(fy)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        fmt(MARGIN_L + pw / 2.0),
        fmt(HEIGHT - 10.0),
        escape(&plot.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        fmt(MARGIN_T + ph / 2.0),
        fmt(MARGIN_T + ph / 2.0),
        escape(&plot.y_label)
    );

    for (k, s) in plot.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let upper = s.points.iter().map(|(x, y, sd)| format!("{},{}", fmt(sx(*x)), fmt(sy(y + sd.abs()))));
        let lower = s
            .points
            .iter()
            .rev()
            .map(|(x, y, sd)| format!("{},{}", fmt(sx(*x)), fmt(sy(y - sd.abs()))));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            svg,
            r#"<path class="band" d="M {} Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.join(" L ")
        );
        let line: Vec<String> = s
            .points
            .iter()
            .map(|(x, y, _)| format!("{},{}", fmt(sx(*x)), fmt(sy(*y))))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            line.join(" ")
        );
        let ly = MARGIN_T + 14.0 * k as f64 + 6.0;
        let lx = WIDTH - MARGIN_R + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            fmt(lx),
            fmt(ly),
            fmt(lx + 16.0),
            fmt(ly),
            fmt(lx + 20.0),
            fmt(ly + 4.0),
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Renders `plot` and writes it to `path`.
pub fn emit_svg_lineplot(plot: &LinePlot, path: &Path) -> Result<()> {
    let svg = render_svg(plot)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(svg: &str, open: &str) -> Vec<String> {
        svg.lines()
            .filter_map(|l| l.split_once(open).map(|(_, rest)| rest.split('"').next().unwrap().to_owned()))
            .collect()
    }

    #[test]
    fn two_points_one_polyline() {
        let p = LinePlot::new("t", "x", "y").with_series("s", vec![(0.0, 1.0, 0.1), (1.0, 2.0, 0.2)]);
        let svg = render_svg(&p).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let pts = coords(&svg, "points=\"");
        assert_eq!(pts[0].split(' ').count(), 2);
        assert_eq!(svg, render_svg(&p).unwrap());
    }

    #[test]
    fn zero_std_band_coincides_with_line() {
        let p = LinePlot::new("t", "x", "y").with_series("s", vec![(0.0, 1.0, 0.0), (1.0, 3.0, 0.0), (2.0, 2.0, 0.0)]);
        let svg = render_svg(&p).unwrap();
        let line: Vec<String> = coords(&svg, "points=\"")[0].split(' ').map(str::to_owned).collect();
        let band = coords(&svg, "d=\"M ")[0].trim_end_matches(" Z").to_owned();
        let band: Vec<String> = band.split(" L ").map(str::to_owned).collect();
        let mut forward = line.clone();
        let mut back = line.clone();
        back.reverse();
        forward.extend(back);
        assert_eq!(band, forward);
    }

    #[test]
    fn empty_table_is_an_error() {
        assert!(render_svg(&LinePlot::new("t", "x", "y")).is_err());
    }
}
