//! SVG rendering of orbit traces.
//!
//! Rotating frame: one polyline per site, one fixed hue per site. Non-rotating
//! frame: the site curves drawn with the hue interpolated along arclength, so
//! a choreography shows a single closed curve with gradually changing color.
//! The viewbox is fitted to the trace with a 5% margin; output is
//! deterministic for identical inputs.

use num_complex::Complex64;

use crate::bvp::RotatingOrbit;
use crate::choreography::NonrotatingTrace;
use crate::Result;

const CANVAS: f64 = 900.0;

struct Fit {
    x0: f64,
    y0: f64,
    scale: f64,
}

fn fit_viewbox(points: impl Iterator<Item = Complex64>) -> Fit {
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for p in points {
        xmin = xmin.min(p.re);
        xmax = xmax.max(p.re);
        ymin = ymin.min(p.im);
        ymax = ymax.max(p.im);
    }
    if !xmin.is_finite() {
        (xmin, xmax, ymin, ymax) = (-1.0, 1.0, -1.0, 1.0);
    }
    let w = (xmax - xmin).max(1e-9);
    let h = (ymax - ymin).max(1e-9);
    let span = w.max(h) * 1.10; // 5% margin on each side
    let cx = 0.5 * (xmin + xmax);
    let cy = 0.5 * (ymin + ymax);
    Fit {
        x0: cx - span / 2.0,
        y0: cy - span / 2.0,
        scale: CANVAS / span,
    }
}

impl Fit {
    fn map(&self, p: Complex64) -> (f64, f64) {
        // SVG y-axis points down
        (
            (p.re - self.x0) * self.scale,
            CANVAS - (p.im - self.y0) * self.scale,
        )
    }
}

fn svg_open(out: &mut String) {
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {CANVAS} {CANVAS}\" \
         width=\"{CANVAS}\" height=\"{CANVAS}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    ));
}

fn polyline(out: &mut String, pts: &[(f64, f64)], color: &str, width: f64) {
    out.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"{width:.2}\" points=\""
    ));
    for (x, y) in pts {
        out.push_str(&format!("{x:.3},{y:.3} "));
    }
    out.push_str("\"/>\n");
}

fn site_hue(j: usize, n: usize) -> f64 {
    360.0 * j as f64 / n as f64
}

/// Rotating-frame portrait of one period: `n` closed curves, one hue per site.
pub fn render_rotating_svg(orbit: &RotatingOrbit, n_samples: usize) -> Result<String> {
    let n = orbit.params.n;
    let trace = orbit.sample(n_samples.max(64))?;
    let fit = fit_viewbox(trace.states.iter().flat_map(|s| s.sites()));
    let mut out = String::new();
    svg_open(&mut out);
    for j in 0..n {
        let mut pts: Vec<(f64, f64)> = trace.states.iter().map(|s| fit.map(s.site(j))).collect();
        pts.push(pts[0]);
        let color = format!("hsl({:.1},85%,45%)", site_hue(j, n));
        polyline(&mut out, &pts, &color, 1.6);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Non-rotating-frame portrait over the choreography period, hue interpolated
/// along the traversal.
pub fn render_nonrotating_svg(trace: &NonrotatingTrace) -> String {
    let n = trace.n_sites();
    let fit = fit_viewbox(trace.sites.iter().flat_map(|s| s.iter().copied()));
    let mut out = String::new();
    svg_open(&mut out);
    // segment chunks with hue advancing along the curve
    let chunks = 240usize;
    let len = trace.sites[0].len();
    let per = (len / chunks).max(2);
    for j in 0..n {
        let series = &trace.sites[j];
        let mut start = 0usize;
        while start < len {
            let end = (start + per).min(len);
            let mut pts: Vec<(f64, f64)> =
                (start..end).map(|i| fit.map(series[i])).collect();
            if end == len {
                pts.push(fit.map(series[0]));
            } else {
                pts.push(fit.map(series[end]));
            }
            let progress = start as f64 / len as f64;
            let hue = (site_hue(j, n) + 300.0 * progress) % 360.0;
            polyline(&mut out, &pts, &format!("hsl({hue:.1},85%,45%)"), 1.3);
            start = end;
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{polygonal_equilibrium, LatticeParams};

    #[test]
    fn equilibrium_renders_one_polygonal_ring() {
        let params = LatticeParams::from_dispersion(6, 0.5, 1).unwrap();
        let eq = polygonal_equilibrium(6, 0.5, 1).unwrap();
        let orbit = crate::bvp::RotatingOrbit::constant(params, &eq, 6, 3, 2.0).unwrap();
        let svg = render_rotating_svg(&orbit, 128).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 6);
        // deterministic bytes
        assert_eq!(svg, render_rotating_svg(&orbit, 128).unwrap());
    }
}
