//! Standalone SVG scatter plots of eigenvalues with the limiting ellipse.

use std::fmt::Write as _;
use std::path::Path;

use elliptic_core::law::{boundary_polyline, EllipticLawParams, BOUNDARY_POINTS};
use elliptic_core::Complex64;

const SIZE: f64 = 640.0;
const MARGIN: f64 = 48.0;

/// Maps the square `[-extent, extent]^2` onto the drawing area, `y` up.
#[derive(Debug, Clone, Copy)]
pub struct PlotFrame {
    pub extent: f64,
}

impl PlotFrame {
    /// Smallest integer extent covering every point with 10% padding.
    pub fn covering(points: impl IntoIterator<Item = Complex64>) -> Self {
        let reach = points.into_iter().fold(1.0f64, |m, z| m.max(z.re.abs()).max(z.im.abs()));
        Self { extent: (1.1 * reach).ceil() }
    }

    pub fn to_px(&self, z: Complex64) -> (f64, f64) {
        let scale = (SIZE - 2.0 * MARGIN) / (2.0 * self.extent);
        (MARGIN + (z.re + self.extent) * scale, MARGIN + (self.extent - z.im) * scale)
    }
}

pub fn render_svg(eigenvalues: &[Complex64], law: &EllipticLawParams, title: &str) -> String {
    let ellipse = boundary_polyline(law, BOUNDARY_POINTS);
    let frame = PlotFrame::covering(eigenvalues.iter().chain(&ellipse).copied());
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#, SIZE / 2.0, escape(title));

    // axes through the origin with unit ticks
    let e = frame.extent;
    let (x0, y0) = frame.to_px(Complex64::new(-e, 0.0));
    let (x1, _) = frame.to_px(Complex64::new(e, 0.0));
    let (ox, top) = frame.to_px(Complex64::new(0.0, e));
    let (_, bottom) = frame.to_px(Complex64::new(0.0, -e));
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/>"#);
    let _ = writeln!(s, r#"<line x1="{ox:.2}" y1="{top:.2}" x2="{ox:.2}" y2="{bottom:.2}"/>"#);
    let ticks = e as i64;
    for k in -ticks..=ticks {
        let (tx, _) = frame.to_px(Complex64::new(k as f64, 0.0));
        let (_, ty) = frame.to_px(Complex64::new(0.0, k as f64));
        let _ = writeln!(s, r#"<line x1="{tx:.2}" y1="{:.2}" x2="{tx:.2}" y2="{:.2}"/>"#, y0 - 4.0, y0 + 4.0);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{ty:.2}" x2="{:.2}" y2="{ty:.2}"/>"#, ox - 4.0, ox + 4.0);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="10" fill="black">"#);
    for k in -ticks..=ticks {
        if k == 0 {
            continue;
        }
        let (tx, _) = frame.to_px(Complex64::new(k as f64, 0.0));
        let (_, ty) = frame.to_px(Complex64::new(0.0, k as f64));
        let _ = writeln!(s, r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle">{k}</text>"#, y0 + 16.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{k}</text>"#, ox - 6.0, ty + 3.0);
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r##"<g fill="#1f3f8f" fill-opacity="0.8">"##);
    for &z in eigenvalues {
        let (cx, cy) = frame.to_px(z);
        let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="1.6"/>"#);
    }
    let _ = writeln!(s, "</g>");

    let mut points = String::new();
    for z in ellipse.iter().chain(ellipse.first()) {
        let (px, py) = frame.to_px(*z);
        let _ = write!(points, "{px:.2},{py:.2} ");
    }
    let _ = writeln!(s, r#"<polyline fill="none" stroke="red" stroke-width="1.5" points="{}"/>"#, points.trim_end());
    let _ = writeln!(s, "</svg>");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn emit_figure(eigenvalues: &[Complex64], law: &EllipticLawParams, title: &str, path: &Path) -> std::io::Result<()> {
    if eigenvalues.is_empty() {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "no eigenvalues to plot"));
    }
    std::fs::write(path, render_svg(eigenvalues, law, title))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn polyline_points(svg: &str) -> Vec<(f64, f64)> {
        let start = svg.find("points=\"").unwrap() + 8;
        let end = start + svg[start..].find('"').unwrap();
        svg[start..end]
            .split(' ')
            .map(|p| {
                let (x, y) = p.split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect()
    }

    #[test]
    fn one_dot_per_eigenvalue() {
        let law = EllipticLawParams::with_rho(0.25, 0.0).unwrap();
        let eigs = [Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.5), Complex64::new(-1.0, 0.2)];
        let svg = render_svg(&eigs, &law, "three");
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(!svg.contains("href"));
    }

    #[test]
    fn overlay_passes_through_the_major_vertex() {
        let law = EllipticLawParams::with_rho(0.25, 0.0).unwrap();
        let eigs = [Complex64::new(0.1, 0.0)];
        let svg = render_svg(&eigs, &law, "vertex");
        let frame = PlotFrame::covering(eigs.iter().chain(&boundary_polyline(&law, BOUNDARY_POINTS)).copied());
        let (vx, vy) = frame.to_px(Complex64::new(1.25, 0.0));
        let pts = polyline_points(&svg);
        assert!(pts.iter().any(|&(x, y)| (x - vx).abs() < 0.01 && (y - vy).abs() < 0.01));
        assert_eq!(pts.len(), BOUNDARY_POINTS + 1);
    }

    #[test]
    fn rotated_overlay() {
        // e^{i pi/4} E_{0.5}: the major vertex sits at 1.5 e^{i pi/4}
        let law = EllipticLawParams::new(0.5, FRAC_PI_2, 0.0, 1.0).unwrap();
        let eigs = [Complex64::new(0.0, 0.0)];
        let svg = render_svg(&eigs, &law, "rotated");
        let frame = PlotFrame::covering(eigs.iter().chain(&boundary_polyline(&law, BOUNDARY_POINTS)).copied());
        let (vx, vy) = frame.to_px(Complex64::from_polar(1.5, FRAC_PI_2 / 2.0));
        let pts = polyline_points(&svg);
        assert!(pts.iter().any(|&(x, y)| (x - vx).abs() < 0.01 && (y - vy).abs() < 0.01));
    }

    #[test]
    fn frame_extent_is_integral() {
        let f = PlotFrame::covering([Complex64::new(1.2, -2.3)]);
        assert_eq!(f.extent, 3.0);
        let (x, y) = f.to_px(Complex64::new(0.0, 0.0));
        assert!((x - SIZE / 2.0).abs() < 1e-12 && (y - SIZE / 2.0).abs() < 1e-12);
    }
}
