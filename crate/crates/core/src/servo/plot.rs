//! Minimal SVG line charts for servo traces.

use std::fmt::Write;

use super::ServoTrace;
use crate::camera::{CameraIntrinsics, PixelPoint};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    /// Whether y grows downward on screen (image coordinates).
    y_down: bool,
}

impl Axes {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let sx = MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN);
        let t = (y - self.y0) / (self.y1 - self.y0);
        let t = if self.y_down { t } else { 1.0 - t };
        (sx, MARGIN + t * (HEIGHT - 2.0 * MARGIN))
    }

    fn polyline(&self, svg: &mut String, pts: impl Iterator<Item = (f64, f64)>, style: &str) {
        let coords: Vec<String> = pts
            .map(|(x, y)| {
                let (sx, sy) = self.map(x, y);
                format!("{sx:.2},{sy:.2}")
            })
            .collect();
        let _ = writeln!(svg, r#"<polyline fill="none" {style} points="{}"/>"#, coords.join(" "));
    }

    fn frame(&self, svg: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            svg,
            r##"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="25" text-anchor="middle" font-size="15">{title}</text>"#,
            WIDTH / 2.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{xlabel}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 12.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">{ylabel}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0
        );
        let (lo_x, lo_y) = if self.y_down {
            (self.x0, self.y1)
        } else {
            (self.x0, self.y0)
        };
        let _ = writeln!(
            svg,
            r#"<text x="{MARGIN}" y="{}" font-size="10">{lo_x:.3}</text><text x="{}" y="{}" font-size="10" text-anchor="end">{:.3}</text>"#,
            HEIGHT - MARGIN + 14.0,
            WIDTH - MARGIN,
            HEIGHT - MARGIN + 14.0,
            self.x1
        );
        let top = if self.y_down { self.y0 } else { self.y1 };
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{lo_y:.1}</text><text x="{}" y="{}" font-size="10" text-anchor="end">{top:.1}</text>"#,
            MARGIN - 4.0,
            HEIGHT - MARGIN,
            MARGIN - 4.0,
            MARGIN + 10.0
        );
    }
}

fn open() -> String {
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="100%" height="100%" fill="white"/>
"#
    )
}

fn closed_quad(points: &[PixelPoint]) -> impl Iterator<Item = (f64, f64)> + '_ {
    points.iter().chain(points.first()).map(|p| (p.u, p.v))
}

/// Feature paths on the image plane, start polygon in black and goal in red.
pub fn trajectory_svg(trace: &ServoTrace, k: &CameraIntrinsics) -> String {
    let axes = Axes {
        x0: 0.0,
        x1: f64::from(k.width),
        y0: 0.0,
        y1: f64::from(k.height),
        y_down: true,
    };
    let mut svg = open();
    axes.frame(&mut svg, "Keypoint pixel trajectories", "u (px)", "v (px)");
    if let Some(first) = trace.records.first() {
        axes.polyline(&mut svg, closed_quad(&first.pixels), r#"stroke="black" stroke-width="1.5""#);
    }
    axes.polyline(
        &mut svg,
        closed_quad(&trace.desired.points),
        r#"stroke="red" stroke-width="1.5""#,
    );
    for i in 0..trace.desired.len() {
        let style = format!(r#"stroke="{}" stroke-width="1""#, COLORS[i % COLORS.len()]);
        axes.polyline(
            &mut svg,
            trace.records.iter().map(|r| (r.pixels[i].u, r.pixels[i].v)),
            &style,
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Per-feature and total pixel-error norms over time.
pub fn error_svg(trace: &ServoTrace) -> String {
    let t_end = trace.records.last().map(|r| r.time).unwrap_or(0.0).max(1e-9);
    let e_max = trace
        .records
        .iter()
        .map(|r| r.total_error)
        .fold(0.0_f64, f64::max)
        .max(1e-9);
    let axes = Axes {
        x0: 0.0,
        x1: t_end,
        y0: 0.0,
        y1: e_max,
        y_down: false,
    };
    let mut svg = open();
    axes.frame(&mut svg, "Pixel error norm", "t (s)", "error (px)");
    for i in 0..trace.desired.len() {
        let style = format!(r#"stroke="{}" stroke-width="1""#, COLORS[i % COLORS.len()]);
        axes.polyline(
            &mut svg,
            trace.records.iter().map(|r| (r.time, r.feature_errors[i])),
            &style,
        );
    }
    axes.polyline(
        &mut svg,
        trace.records.iter().map(|r| (r.time, r.total_error)),
        r#"stroke="black" stroke-width="1.5" stroke-dasharray="4 3""#,
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::servo::{run_servo, scene::nominal_goal, ServoConfig, ServoRig};
    use nalgebra::Vector4;

    #[test]
    fn charts_contain_one_path_per_series() {
        let rig = ServoRig::default();
        let goal = nominal_goal();
        let cfg = ServoConfig {
            iterations: 50,
            ..Default::default()
        };
        let trace = run_servo(&cfg, &rig, &(goal + Vector4::new(0.05, 0.0, 0.0, 0.0)), &goal).unwrap();
        let traj = trajectory_svg(&trace, &rig.intrinsics);
        assert_eq!(traj.matches("<polyline").count(), 2 + 4);
        assert!(traj.starts_with("<svg") && traj.ends_with("</svg>\n"));
        let err = error_svg(&trace);
        assert_eq!(err.matches("<polyline").count(), 4 + 1);
    }
}
