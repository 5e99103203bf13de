//! Diagnostic plots emitted as plain SVG text.

use std::fmt::Write as _;

use deformfield::disk::mu_to_ellipse;
use deformfield::likelihood::DilatationScaleField;
use deformfield::{ComplexGrid, Grid};
use num_complex::Complex64;

const SIZE: f64 = 600.0;
const PAD: f64 = 24.0;

/// World-to-pixel transform preserving aspect ratio, y up.
struct Frame {
    lo: Complex64,
    scale: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = Complex64>) -> Self {
        let (mut lo, mut hi) =
            (Complex64::new(f64::INFINITY, f64::INFINITY), Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in points {
            lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        let span = (hi.re - lo.re).max(hi.im - lo.im).max(1e-12);
        Self { lo, scale: (SIZE - 2.0 * PAD) / span }
    }

    fn px(&self, z: Complex64) -> (f64, f64) {
        (PAD + (z.re - self.lo.re) * self.scale, SIZE - PAD - (z.im - self.lo.im) * self.scale)
    }
}

fn open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n\
         <title>{title}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// One ellipse per block with axis ratio `K` and the inclination of the
/// dilatation, plus a tick along the major axis.
pub fn ellipse_glyphs(field: &DilatationScaleField, title: &str) -> String {
    let frame = Frame::fit(field.centers.iter().copied());
    let spacing = if field.bx > 1 { (field.centers[1] - field.centers[0]).norm() } else { 1.0 };
    let r = 0.35 * spacing * frame.scale;
    let mut s = open(title);
    for k in 0..field.len() {
        if !field.is_available(k) {
            continue;
        }
        let Ok(e) = mu_to_ellipse(field.mu[k]) else { continue };
        let (x, y) = frame.px(field.centers[k]);
        let deg = -e.inclination.to_degrees();
        let _ = writeln!(
            s,
            "<ellipse cx=\"{x:.2}\" cy=\"{y:.2}\" rx=\"{:.2}\" ry=\"{:.2}\" transform=\"rotate({deg:.2} {x:.2} {y:.2})\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>",
            r,
            r / e.eccentricity
        );
        let (dx, dy) = (r * e.inclination.cos(), -r * e.inclination.sin());
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"firebrick\" stroke-width=\"1\"/>",
            x - dx,
            y - dy,
            x + dx,
            y + dy
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Images of every `stride`-th lattice row and column.
pub fn warped_grid(map: &ComplexGrid, stride: usize, title: &str) -> String {
    let l = *map.lattice();
    let stride = stride.max(1);
    let frame = Frame::fit(map.values().iter().copied());
    let mut s = open(title);
    let mut poly = |pts: Vec<Complex64>| {
        let coords: Vec<String> = pts
            .into_iter()
            .map(|z| {
                let (x, y) = frame.px(z);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"navy\" stroke-width=\"0.8\"/>",
            coords.join(" ")
        );
    };
    let lines = |n: usize| {
        let mut v: Vec<usize> = (0..n).step_by(stride).chain(std::iter::once(n - 1)).collect();
        v.dedup();
        v
    };
    let (rows, cols) = (lines(l.ny), lines(l.nx));
    for &j in &rows {
        poly((0..l.nx).map(|i| map.at(i, j)).collect());
    }
    for &i in &cols {
        poly((0..l.ny).map(|j| map.at(i, j)).collect());
    }
    s.push_str("</svg>\n");
    s
}

/// Blue-white-red ramp on `t in [0, 1]`.
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let u = t / 0.5;
        (u, u, 1.0)
    } else {
        let u = (t - 0.5) / 0.5;
        (1.0, 1.0 - u, 1.0 - u)
    };
    format!("#{:02x}{:02x}{:02x}", (r * 255.0) as u8, (g * 255.0) as u8, (b * 255.0) as u8)
}

/// Colored cells of a real grid, linearly scaled between its extremes.
pub fn heatmap(grid: &Grid, title: &str) -> String {
    let l = *grid.lattice();
    let frame = Frame::fit([l.point(0, 0), l.point(l.nx - 1, l.ny - 1)].into_iter());
    let (lo, hi) = grid.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (w, h) = (l.dx * frame.scale, l.dy * frame.scale);
    let mut s = open(title);
    for j in 0..l.ny {
        for i in 0..l.nx {
            let (x, y) = frame.px(l.point(i, j));
            let _ = writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                x - w / 2.0,
                y - h / 2.0,
                w + 0.3,
                h + 0.3,
                ramp((grid.at(i, j) - lo) / span)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Values drawn as colored dots at arbitrary locations.
pub fn scatter(points: &[Complex64], values: &[f64], title: &str) -> String {
    let frame = Frame::fit(points.iter().copied());
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut s = open(title);
    for (&p, &v) in points.iter().zip(values) {
        let (x, y) = frame.px(p);
        let _ = writeln!(s, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2\" fill=\"{}\"/>", ramp((v - lo) / span));
    }
    s.push_str("</svg>\n");
    s
}
