//! SVG time-series plots with event markers.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{CliError, CliResult};

/// Above this many points a series is reduced to per-bucket min and max.
const MAX_POINTS: usize = 8000;

fn envelope(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if points.len() <= MAX_POINTS {
        return points.to_vec();
    }
    let per = points.len().div_ceil(MAX_POINTS / 2);
    let mut out = Vec::with_capacity(MAX_POINTS + 2);
    for chunk in points.chunks(per) {
        let lo = chunk.iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty chunk");
        let hi = chunk.iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty chunk");
        if lo.0 <= hi.0 {
            out.extend([*lo, *hi]);
        } else {
            out.extend([*hi, *lo]);
        }
    }
    out
}

/// Writes one line plot. `markers` are event times drawn as vertical lines.
pub fn time_series(path: &Path, title: &str, y_desc: &str, points: &[(f64, f64)], markers: &[f64]) -> CliResult<()> {
    let fail = |e: String| CliError::io(path, std::io::Error::other(e));
    let pts = envelope(points);
    let (x0, x1) = match (pts.first(), pts.last()) {
        (Some(a), Some(b)) if b.0 > a.0 => (a.0, b.0),
        (Some(a), _) => (a.0, a.0 + 1.0),
        _ => (0.0, 1.0),
    };
    let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let (y0, y1) = if lo.is_finite() && hi > lo {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    } else if lo.is_finite() {
        (lo - 0.5, lo + 0.5)
    } else {
        (0.0, 1.0)
    };

    let root = SVGBackend::new(path, (1200, 400)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| fail(e.to_string()))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 18))
        .margin(10)
        .x_label_area_size(35)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| fail(e.to_string()))?;
    chart
        .configure_mesh()
        .x_desc("time (s)")
        .y_desc(y_desc)
        .draw()
        .map_err(|e| fail(e.to_string()))?;
    let marker_style = RED.mix(0.4);
    for &m in markers.iter().filter(|m| (x0..=x1).contains(*m)) {
        chart
            .draw_series(LineSeries::new([(m, y0), (m, y1)], marker_style))
            .map_err(|e| fail(e.to_string()))?;
    }
    chart.draw_series(LineSeries::new(pts, &BLUE)).map_err(|e| fail(e.to_string()))?;
    root.present().map_err(|e| fail(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_keeps_extremes() {
        let pts: Vec<(f64, f64)> = (0..100_000).map(|i| (i as f64, if i == 54_321 { 9.0 } else { 0.0 })).collect();
        let e = envelope(&pts);
        assert!(e.len() <= MAX_POINTS + 2);
        assert!(e.iter().any(|p| p.1 == 9.0));
        assert!(e.windows(2).all(|w| w[0].0 <= w[1].0));
    }
}
