//! Minimal self-contained SVG line charts of sweep gaps.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::CliError;
use crate::table::read_csv;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Which CSV columns to draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x: String,
    pub series: Vec<String>,
    /// Splits every series by the values of this column.
    pub group: Option<String>,
}

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

fn column(header: &[String], name: &str) -> Result<usize, CliError> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Input(format!("csv has no column `{name}`")))
}

fn parse(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn collect_series(
    header: &[String],
    rows: &[Vec<String>],
    spec: &PlotSpec,
) -> Result<Vec<Series>, CliError> {
    let xi = column(header, &spec.x)?;
    let gi = spec
        .group
        .as_deref()
        .map(|g| column(header, g))
        .transpose()?;
    let mut out = Vec::new();
    for name in &spec.series {
        let si = column(header, name)?;
        // group labels in first-appearance order
        let mut groups: Vec<String> = Vec::new();
        let mut points: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
        for row in rows {
            let label = gi.map(|g| row[g].clone()).unwrap_or_default();
            let slot = match groups.iter().position(|l| *l == label) {
                Some(i) => i,
                None => {
                    groups.push(label);
                    groups.len() - 1
                }
            };
            if let (Some(x), Some(y)) = (parse(&row[xi]), parse(&row[si])) {
                points.entry(slot).or_default().push((x, y));
            }
        }
        for (slot, label) in groups.iter().enumerate() {
            let series_name = match &spec.group {
                Some(g) => format!("{name} {g}={}", short(label)),
                None => name.clone(),
            };
            out.push(Series {
                name: series_name,
                points: points.remove(&slot).unwrap_or_default(),
            });
        }
    }
    Ok(out)
}

fn short(label: &str) -> String {
    parse(label).map_or_else(|| label.to_string(), tick_label)
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * (1.0 + lo.abs()) {
        let pad = 0.5 * lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the chosen columns of a CSV document as an SVG line chart.
pub fn render_gap_plot(csv_text: &str, spec: &PlotSpec) -> Result<String, CliError> {
    let (header, rows) = read_csv(csv_text)?;
    if rows.is_empty() {
        return Err(CliError::Input("csv has no data rows to plot".into()));
    }
    let series = collect_series(&header, &rows, spec)?;
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) = span(all().map(|p| p.0));
    let (y0, y1) = span(all().map(|p| p.1).chain(std::iter::once(0.0)));
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut svg = String::new();
    let w = &mut svg;
    // writing to a String cannot fail
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        w,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="22" font-size="14" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&spec.title)
    );
    let _ = writeln!(
        w,
        r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#444"/>"##
    );
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            w,
            r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#444"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            w,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT:.2}" y2="{py:.2}" stroke="#444"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            w,
            r##"<line x1="{LEFT:.2}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
            sy(0.0),
            LEFT + pw
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0,
        escape(&spec.x)
    );
    for (k, s) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        if s.points.len() > 1 {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
                .collect();
            let _ = writeln!(
                w,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
        }
        for (x, y) in &s.points {
            let _ = writeln!(
                w,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{colour}"/>"#,
                sx(*x),
                sy(*y)
            );
        }
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 18.0,
            lx + 24.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(series: &[&str], group: Option<&str>) -> PlotSpec {
        PlotSpec {
            title: "gaps".into(),
            x: "p".into(),
            series: series.iter().map(|s| s.to_string()).collect(),
            group: group.map(str::to_string),
        }
    }

    #[test]
    fn single_row_gives_markers_only() {
        let svg = render_gap_plot("p,gap\n1,0.5\n", &spec(&["gap"], None)).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn groups_split_series() {
        let csv = "p,alpha,g\n1,0.5,1\n2,0.5,0.5\n1,1,2\n2,1,1\n";
        let svg = render_gap_plot(csv, &spec(&["g"], Some("alpha"))).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("g alpha=0.5") && svg.contains("g alpha=1"));
    }

    #[test]
    fn rejects_empty_and_unknown() {
        assert!(render_gap_plot("p,gap\n", &spec(&["gap"], None)).is_err());
        assert!(render_gap_plot("p,gap\n1,2\n", &spec(&["nope"], None)).is_err());
    }

    #[test]
    fn deterministic() {
        let csv = "p,a,b\n1,0.3,0.2\n2,0.1,0.05\n3,0.02,0.01\n";
        let s = spec(&["a", "b"], None);
        assert_eq!(
            render_gap_plot(csv, &s).unwrap(),
            render_gap_plot(csv, &s).unwrap()
        );
    }
}
