//! Static SVG figures: stacked line panels and top/side path views.

use std::path::Path;

use plotters::prelude::*;

#[derive(Debug, Clone, Default)]
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

#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Outlines `(cx, cy, r)` drawn in data coordinates.
    pub circles: Vec<(f64, f64, f64)>,
    /// Same scale on both axes (path views).
    pub equal_aspect: bool,
}

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(255, 127, 14),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

const PANEL_W: u32 = 900;
const PANEL_H: u32 = 300;

fn bounds(panel: &Panel) -> ((f64, f64), (f64, f64)) {
    let mut x = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y = (f64::INFINITY, f64::NEG_INFINITY);
    let mut take = |px: f64, py: f64| {
        if px.is_finite() && py.is_finite() {
            x = (x.0.min(px), x.1.max(px));
            y = (y.0.min(py), y.1.max(py));
        }
    };
    for s in &panel.series {
        for &(px, py) in &s.points {
            take(px, py);
        }
    }
    for &(cx, cy, r) in &panel.circles {
        take(cx - r, cy - r);
        take(cx + r, cy + r);
    }
    if !x.0.is_finite() {
        return ((0.0, 1.0), (0.0, 1.0));
    }
    let pad = |(lo, hi): (f64, f64)| {
        let span = (hi - lo).max(1e-9);
        (lo - 0.05 * span, hi + 0.05 * span)
    };
    let (mut x, mut y) = (pad(x), pad(y));
    if panel.equal_aspect {
        let half = 0.5 * (x.1 - x.0).max((y.1 - y.0) * 3.0);
        let cx = 0.5 * (x.0 + x.1);
        x = (cx - half, cx + half);
        let half_y = half / 3.0;
        let cy = 0.5 * (y.0 + y.1);
        y = (cy - half_y, cy + half_y);
    }
    (x, y)
}

fn draw_panel<DB: DrawingBackend>(
    area: &DrawingArea<DB, plotters::coord::Shift>,
    panel: &Panel,
) -> Result<(), String> {
    let err = |e: DrawingAreaErrorKind<DB::ErrorType>| e.to_string();
    let ((x0, x1), (y0, y1)) = bounds(panel);
    let mut chart = ChartBuilder::on(area)
        .caption(&panel.title, ("sans-serif", 16))
        .margin(8)
        .x_label_area_size(32)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(err)?;
    chart
        .configure_mesh()
        .x_desc(panel.x_label.as_str())
        .y_desc(panel.y_label.as_str())
        .light_line_style(WHITE)
        .draw()
        .map_err(err)?;
    for &(cx, cy, r) in &panel.circles {
        let ring: Vec<(f64, f64)> = (0..=64)
            .map(|k| {
                let a = k as f64 * std::f64::consts::TAU / 64.0;
                (cx + r * a.cos(), cy + r * a.sin())
            })
            .collect();
        chart
            .draw_series(LineSeries::new(ring, BLACK.mix(0.6)))
            .map_err(err)?;
    }
    for (i, s) in panel.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(
                s.points.iter().copied(),
                color.stroke_width(1),
            ))
            .map_err(err)?
            .label(s.label.as_str())
            .legend(move |(x, y)| PathElement::new([(x, y), (x + 16, y)], color));
    }
    if panel.series.iter().any(|s| !s.label.is_empty()) {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(err)?;
    }
    Ok(())
}

/// Writes the panels stacked top to bottom into one SVG file.
pub fn write_panels(path: &Path, panels: &[Panel]) -> Result<(), String> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    }
    let n = panels.len().max(1) as u32;
    let root = SVGBackend::new(path, (PANEL_W, PANEL_H * n)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| e.to_string())?;
    let areas = root.split_evenly((n as usize, 1));
    for (area, panel) in areas.iter().zip(panels) {
        draw_panel(area, panel)?;
    }
    root.present().map_err(|e| e.to_string())
}

/// Decimates long series to at most `max` points for compact figures.
pub fn thin(points: Vec<(f64, f64)>, max: usize) -> Vec<(f64, f64)> {
    if points.len() <= max || max < 2 {
        return points;
    }
    let stride = points.len().div_ceil(max);
    let last = *points.last().unwrap();
    let mut out: Vec<(f64, f64)> = points.into_iter().step_by(stride).collect();
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_svg() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.svg");
        let panel = Panel {
            title: "sine".into(),
            x_label: "t (s)".into(),
            y_label: "y".into(),
            series: vec![Series::new(
                "a",
                (0..100)
                    .map(|k| (k as f64 * 0.1, (k as f64 * 0.1).sin()))
                    .collect(),
            )],
            circles: vec![(5.0, 0.0, 0.5)],
            equal_aspect: false,
        };
        write_panels(&p, &[panel.clone(), panel]).unwrap();
        let s = std::fs::read_to_string(&p).unwrap();
        assert!(s.starts_with("<svg"));
        assert!(s.contains("polyline"));
    }

    #[test]
    fn thinning_keeps_ends() {
        let pts: Vec<(f64, f64)> = (0..1001).map(|k| (k as f64, 0.0)).collect();
        let t = thin(pts, 100);
        assert!(t.len() <= 102);
        assert_eq!(t[0].0, 0.0);
        assert_eq!(t.last().unwrap().0, 1000.0);
    }
}
