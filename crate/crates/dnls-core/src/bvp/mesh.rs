//! Mesh adaptation by equidistribution of an interpolation-error indicator.
//!
//! The local polynomial of degree `m` has a constant `m`-th derivative per
//! interval; differences of those across junctions estimate `u^{(m+1)}`,
//! which drives both the error estimate `‖u − Πu‖ ~ h^{m+1} u^{(m+1)}` and
//! the equidistributing density `ρ ~ |u^{(m+1)}|^{1/(m+1)}`.

use super::orbit::RotatingOrbit;
use crate::Result;

/// Estimated `max |u^{(m+1)}|` per interval (cyclic junction differences).
fn high_deriv_indicator(orbit: &RotatingOrbit) -> Vec<f64> {
    let basis = orbit.basis();
    let gamma = basis.mth_deriv_coeffs();
    let m = orbit.degree;
    let n_int = orbit.mesh_intervals();
    let dim = orbit.dim();

    // constant m-th derivative on each interval
    let mut dm: Vec<Vec<f64>> = Vec::with_capacity(n_int);
    for j in 0..n_int {
        let h = orbit.mesh[j + 1] - orbit.mesh[j];
        let scale = 1.0 / h.powi(m as i32);
        let mut v = vec![0.0; dim];
        for i in 0..=m {
            let pt = &orbit.points[j * m + i];
            for c in 0..dim {
                v[c] += gamma[i] * pt[c] * scale;
            }
        }
        dm.push(v);
    }

    // junction estimates of the (m+1)-st derivative, wrapped periodically
    let mut junction = vec![0.0; n_int];
    for j in 0..n_int {
        let jn = (j + 1) % n_int;
        let hj = orbit.mesh[j + 1] - orbit.mesh[j];
        let hn = orbit.mesh[(jn + 1).min(orbit.mesh.len() - 1)] - orbit.mesh[jn];
        let gap = 0.5 * (hj + hn);
        let mut worst: f64 = 0.0;
        for c in 0..dim {
            worst = worst.max((dm[jn][c] - dm[j][c]).abs() / gap);
        }
        junction[j] = worst;
    }

    // The divided differences amplify roundoff by h^{-(m+1)}; anything below
    // that noise level is indistinguishable from an exact polynomial.
    let scale_pts = orbit
        .points
        .iter()
        .map(|p| p.amax())
        .fold(0.0, f64::max)
        .max(1e-30);
    let h_min = orbit
        .mesh
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let noise = 1e5 * f64::EPSILON * scale_pts / h_min.powi(m as i32 + 1);
    (0..n_int)
        .map(|j| {
            let c = junction[j].max(junction[(j + n_int - 1) % n_int]);
            if c <= noise {
                0.0
            } else {
                c
            }
        })
        .collect()
}

/// Per-interval and global interpolation-error estimates.
#[derive(Debug, Clone)]
pub struct ErrorEstimate {
    pub per_interval: Vec<f64>,
    pub global: f64,
}

pub fn error_estimate(orbit: &RotatingOrbit) -> ErrorEstimate {
    let m = orbit.degree as i32;
    let d = high_deriv_indicator(orbit);
    let per_interval: Vec<f64> = d
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let h = orbit.mesh[j + 1] - orbit.mesh[j];
            // ‖u − Πu‖_∞ ≤ h^{m+1} |u^{(m+1)}| / (4 (m+1))
            c * h.powi(m + 1) / (4.0 * (m + 1) as f64)
        })
        .collect();
    let global = per_interval.iter().fold(0.0, |a: f64, b| a.max(*b));
    ErrorEstimate {
        per_interval,
        global,
    }
}

/// Re-mesh the orbit onto the same number of intervals, equidistributing the
/// indicator density. Solution values are transferred by interpolation, so
/// they change by no more than the discretization error.
pub fn adapt_mesh(orbit: &RotatingOrbit) -> Result<RotatingOrbit> {
    let n_int = orbit.mesh_intervals();
    let m = orbit.degree as i32;
    let d = high_deriv_indicator(orbit);

    // density ρ_j = |u^{(m+1)}|^{1/(m+1)} with a floor so a constant solution
    // keeps its mesh
    let mut rho: Vec<f64> = d.iter().map(|c| c.powf(1.0 / (m as f64 + 1.0))).collect();
    let top = rho.iter().fold(0.0, |a: f64, b| a.max(*b));
    if top == 0.0 {
        return Ok(orbit.clone());
    }
    let floor = top * 1e-3;
    for r in rho.iter_mut() {
        *r = r.max(floor);
    }
    // one smoothing pass against mesh oscillation
    let smoothed: Vec<f64> = (0..n_int)
        .map(|j| {
            let prev = rho[(j + n_int - 1) % n_int];
            let next = rho[(j + 1) % n_int];
            0.25 * prev + 0.5 * rho[j] + 0.25 * next
        })
        .collect();

    // cumulative distribution and its uniform quantiles
    let mut cum = vec![0.0];
    for j in 0..n_int {
        let h = orbit.mesh[j + 1] - orbit.mesh[j];
        cum.push(cum[j] + smoothed[j] * h);
    }
    let total = cum[n_int];
    let mut mesh = vec![0.0; n_int + 1];
    mesh[n_int] = 1.0;
    let mut j = 0usize;
    for (i, slot) in mesh.iter_mut().enumerate().take(n_int).skip(1) {
        let target = total * i as f64 / n_int as f64;
        while j + 1 < n_int && cum[j + 1] < target {
            j += 1;
        }
        let local = (target - cum[j]) / (cum[j + 1] - cum[j]);
        *slot = orbit.mesh[j] + local * (orbit.mesh[j + 1] - orbit.mesh[j]);
    }

    orbit.reinterpolate(&mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{polygonal_equilibrium, LatticeParams};
    use nalgebra::DVector;

    #[test]
    fn constant_solution_keeps_uniform_mesh() {
        let params = LatticeParams::from_dispersion(4, 0.3, 1).unwrap();
        let eq = polygonal_equilibrium(4, 0.3, 1).unwrap();
        let orbit = RotatingOrbit::constant(params, &eq, 12, 4, 2.0).unwrap();
        let adapted = adapt_mesh(&orbit).unwrap();
        for (a, b) in adapted.mesh.iter().zip(orbit.mesh.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(adapted.mesh_intervals(), 12);
    }

    #[test]
    fn adapted_orbit_stays_within_error_estimate() {
        // sharp localized feature: mesh should concentrate there and the
        // re-represented orbit should match the original within the estimate
        let params = LatticeParams::from_dispersion(3, 0.3, 1).unwrap();
        let f = |t: f64| {
            let bump = (-(t - 0.5) * (t - 0.5) * 160.0).exp();
            DVector::from_fn(6, |i, _| bump + 0.1 * i as f64 + 0.05 * (std::f64::consts::TAU * t).cos())
        };
        let orbit = RotatingOrbit::from_fn(params, 24, 4, 1.0, &f).unwrap();
        let est = error_estimate(&orbit).global;
        let adapted = adapt_mesh(&orbit).unwrap();
        assert_eq!(adapted.mesh_intervals(), orbit.mesh_intervals());

        let mut worst: f64 = 0.0;
        for i in 0..1000 {
            let t = i as f64 / 999.0;
            let a = adapted.evaluate(t).unwrap();
            let b = orbit.evaluate(t).unwrap();
            worst = worst.max((a.0 - b.0).amax());
        }
        assert!(
            worst <= 10.0 * est,
            "re-interpolation moved {worst:.3e} vs estimate {est:.3e}"
        );

        // the fine region should have received smaller intervals
        let h_mid = adapted
            .mesh
            .windows(2)
            .filter(|w| w[0] >= 0.4 && w[1] <= 0.6)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let h_edge = adapted.mesh[1] - adapted.mesh[0];
        assert!(h_mid < h_edge);
    }
}
