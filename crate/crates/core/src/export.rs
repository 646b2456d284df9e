//! Deterministic CSV and SVG emission. The SVG writer generates plain
//! polyline/circle markup in a fixed 800x600 viewport with 60 px margins,
//! so output bytes are stable for golden-file comparisons.

use crate::bank::BankCurve;

pub const SVG_WIDTH: f64 = 800.0;
pub const SVG_HEIGHT: f64 = 600.0;
pub const SVG_MARGIN: f64 = 60.0;

/// Fixed-precision float for CSV cells; parses back to f64 exactly enough
/// for round-trip checks.
pub fn fmt_cell(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn curve_to_csv(curve: &BankCurve) -> String {
    let param_cols = curve.points.first().map_or(0, |p| p.param.len());
    let mut header = String::from("E1,E2");
    for i in 0..param_cols {
        header.push_str(&format!(",param{i}"));
    }
    let mut out = header;
    out.push('\n');
    for p in &curve.points {
        out.push_str(&fmt_cell(p.e1));
        out.push(',');
        out.push_str(&fmt_cell(p.e2));
        for v in &p.param {
            out.push(',');
            out.push_str(&fmt_cell(*v));
        }
        out.push('\n');
    }
    out
}

pub fn table_to_csv(headers: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = headers.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_cell(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses a CSV produced by this module back into headers and rows.
pub fn parse_csv(text: &str) -> Option<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let headers: Vec<String> = lines.next()?.split(',').map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for cell in line.split(',') {
            row.push(cell.parse::<f64>().ok()?);
        }
        rows.push(row);
    }
    Some((headers, rows))
}

pub enum SeriesKind {
    Line,
    Scatter,
    Marker,
}

pub struct SvgSeries {
    pub points: Vec<(f64, f64)>,
    pub kind: SeriesKind,
    pub color: &'static str,
}

/// Renders series into an axis-labelled chart. Coordinates are mapped onto
/// the fixed viewport and printed with three decimals.
pub fn svg_chart(series: &[SvgSeries], x_label: &str, y_label: &str) -> String {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in series {
        for &(x, y) in &s.points {
            xs.push(x);
            ys.push(y);
        }
    }
    let (x_lo, x_hi) = padded_range(&xs);
    let (y_lo, y_hi) = padded_range(&ys);
    let map_x = |x: f64| SVG_MARGIN + (x - x_lo) / (x_hi - x_lo) * (SVG_WIDTH - 2.0 * SVG_MARGIN);
    let map_y =
        |y: f64| SVG_HEIGHT - SVG_MARGIN - (y - y_lo) / (y_hi - y_lo) * (SVG_HEIGHT - 2.0 * SVG_MARGIN);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" viewBox=\"0 0 {SVG_WIDTH} {SVG_HEIGHT}\">\n"
    ));
    out.push_str("<rect width=\"800\" height=\"600\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = SVG_MARGIN,
        b = SVG_HEIGHT - SVG_MARGIN,
        r = SVG_WIDTH - SVG_MARGIN
    ));
    out.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = SVG_MARGIN,
        t = SVG_MARGIN,
        b = SVG_HEIGHT - SVG_MARGIN
    ));
    out.push_str(&format!(
        "<text x=\"{x}\" y=\"{y}\" text-anchor=\"middle\" font-size=\"14\">{x_label}</text>\n",
        x = SVG_WIDTH / 2.0,
        y = SVG_HEIGHT - 20.0
    ));
    out.push_str(&format!(
        "<text x=\"20\" y=\"{y}\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 20 {y})\">{y_label}</text>\n",
        y = SVG_HEIGHT / 2.0
    ));
    // Min/max tick labels.
    out.push_str(&format!(
        "<text x=\"{m}\" y=\"{y}\" font-size=\"10\">{lo:.3}</text>\n<text x=\"{r}\" y=\"{y}\" text-anchor=\"end\" font-size=\"10\">{hi:.3}</text>\n",
        m = SVG_MARGIN,
        r = SVG_WIDTH - SVG_MARGIN,
        y = SVG_HEIGHT - SVG_MARGIN + 16.0,
        lo = x_lo,
        hi = x_hi
    ));
    out.push_str(&format!(
        "<text x=\"{x}\" y=\"{b}\" font-size=\"10\">{lo:.3}</text>\n<text x=\"{x}\" y=\"{t}\" font-size=\"10\">{hi:.3}</text>\n",
        x = SVG_MARGIN - 50.0,
        b = SVG_HEIGHT - SVG_MARGIN,
        t = SVG_MARGIN + 10.0,
        lo = y_lo,
        hi = y_hi
    ));
    for s in series {
        match s.kind {
            SeriesKind::Line => {
                let pts: Vec<String> = s
                    .points
                    .iter()
                    .map(|&(x, y)| format!("{:.3},{:.3}", map_x(x), map_y(y)))
                    .collect();
                out.push_str(&format!(
                    "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                    s.color,
                    pts.join(" ")
                ));
            }
            SeriesKind::Scatter => {
                for &(x, y) in &s.points {
                    out.push_str(&format!(
                        "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"2\" fill=\"{}\"/>\n",
                        map_x(x),
                        map_y(y),
                        s.color
                    ));
                }
            }
            SeriesKind::Marker => {
                for &(x, y) in &s.points {
                    out.push_str(&format!(
                        "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"5\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                        map_x(x),
                        map_y(y),
                        s.color
                    ));
                }
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

fn padded_range(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let span = (hi - lo).max(1e-9);
    (lo - 0.05 * span, hi + 0.05 * span)
}
