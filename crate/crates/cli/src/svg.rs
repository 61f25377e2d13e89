//! Minimal SVG line plots.

use std::fmt::Write;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub dashed: bool,
    pub markers: bool,
    pub label: Option<String>,
}

impl Series {
    pub fn line(points: Vec<(f64, f64)>, color: &'static str) -> Self {
        Series {
            points,
            color,
            dashed: false,
            markers: false,
            label: None,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }

    pub fn with_markers(mut self) -> Self {
        self.markers = true;
        self
    }

    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
    /// Same scale on both axes (shapes) or independent (graphs).
    pub equal_aspect: bool,
    pub x_label: String,
    pub y_label: String,
}

impl Panel {
    pub fn shape(title: impl Into<String>, series: Vec<Series>) -> Self {
        Panel {
            title: title.into(),
            series,
            equal_aspect: true,
            x_label: String::new(),
            y_label: String::new(),
        }
    }

    pub fn graph(title: impl Into<String>, x_label: &str, y_label: &str, series: Vec<Series>) -> Self {
        Panel {
            title: title.into(),
            series,
            equal_aspect: false,
            x_label: x_label.into(),
            y_label: y_label.into(),
        }
    }
}

const CELL: f64 = 320.0;
const MARGIN: f64 = 40.0;

/// Lays panels out on a grid with `columns` columns.
pub fn render(panels: &[Panel], columns: usize) -> String {
    let columns = columns.max(1).min(panels.len().max(1));
    let rows = panels.len().div_ceil(columns).max(1);
    let (w, h) = (CELL * columns as f64, CELL * rows as f64);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        let ox = CELL * (i % columns) as f64;
        let oy = CELL * (i / columns) as f64;
        draw_panel(&mut s, p, ox, oy);
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(panel: &Panel) -> (f64, f64, f64, f64) {
    let pts = panel.series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |a: f64, b: f64| if b - a > 0.0 { (a, b) } else { (a - 0.5, b + 0.5) };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    (x0, x1, y0, y1)
}

fn draw_panel(s: &mut String, panel: &Panel, ox: f64, oy: f64) {
    let (x0, x1, y0, y1) = bounds(panel);
    let inner = CELL - 2.0 * MARGIN;
    let (mut sx, mut sy) = (inner / (x1 - x0), inner / (y1 - y0));
    let (mut cx, mut cy) = (0.0, 0.0);
    if panel.equal_aspect {
        let k = sx.min(sy);
        cx = 0.5 * (inner - k * (x1 - x0));
        cy = 0.5 * (inner - k * (y1 - y0));
        sx = k;
        sy = k;
    }
    let map = |x: f64, y: f64| (ox + MARGIN + cx + (x - x0) * sx, oy + CELL - MARGIN - cy - (y - y0) * sy);
    let _ = writeln!(
        s,
        r##"<rect x="{:.2}" y="{:.2}" width="{inner:.2}" height="{inner:.2}" fill="none" stroke="#bbbbbb"/>"##,
        ox + MARGIN,
        oy + MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        ox + CELL / 2.0,
        oy + MARGIN - 12.0,
        escape(&panel.title)
    );
    if !panel.equal_aspect {
        let (bx, by) = (ox + MARGIN, oy + CELL - MARGIN);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, bx, by + 14.0, short(x0));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, bx + inner, by + 14.0, short(x1));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, bx - 3.0, by, short(y0));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, bx - 3.0, oy + MARGIN + 8.0, short(y1));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            ox + CELL / 2.0,
            by + 28.0,
            escape(&panel.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" transform="rotate(-90 {:.2} {:.2})" text-anchor="middle">{}</text>"#,
            ox + 12.0,
            oy + CELL / 2.0,
            ox + 12.0,
            oy + CELL / 2.0,
            escape(&panel.y_label)
        );
    }
    let mut legend_y = oy + MARGIN + 14.0;
    for series in &panel.series {
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in &series.points {
            if !(x.is_finite() && y.is_finite()) {
                pen_down = false;
                continue;
            }
            let (px, py) = map(x, y);
            let _ = write!(d, "{}{px:.2},{py:.2} ", if pen_down { "L" } else { "M" });
            pen_down = true;
        }
        let dash = if series.dashed { r#" stroke-dasharray="5,3""# } else { "" };
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
            d.trim_end(),
            series.color
        );
        if series.markers {
            for &(x, y) in series.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
                let (px, py) = map(x, y);
                let _ = writeln!(s, r#"<circle cx="{px:.2}" cy="{py:.2}" r="2.5" fill="{}"/>"#, series.color);
            }
        }
        if let Some(label) = &series.label {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{legend_y:.2}" fill="{}">{}</text>"#,
                ox + MARGIN + 6.0,
                series.color,
                escape(label)
            );
            legend_y += 13.0;
        }
    }
}

fn short(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_every_panel_and_breaks_on_gaps() {
        let a = Panel::shape("a & b", vec![Series::line(vec![(0.0, 0.0), (1.0, 1.0)], PALETTE[0]).with_markers()]);
        let b = Panel::graph(
            "g",
            "x",
            "y",
            vec![Series::line(vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 3.0)], PALETTE[1])],
        );
        let svg = render(&[a, b], 2);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a &amp; b"));
        assert_eq!(svg.matches("<path").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg.matches(" M").count() + svg.matches("\"M").count(), 3);
    }
}
