//! Collocation representation of a periodic orbit on scaled time `[0, 1]`.

use nalgebra::DVector;

use super::basis::Basis;
use crate::lattice::{LatticeParams, State, Trace};
use crate::{Error, Result};

/// A periodic solution in the rotating frame: a piecewise polynomial of
/// degree `degree` on the mesh, with the period `T` and the unfolding
/// parameters carried along. The polynomial on each interval is represented
/// by its values at `degree + 1` uniformly spaced points; interval endpoints
/// are shared, giving `N·degree + 1` stored points of dimension `2n`.
#[derive(Debug, Clone)]
pub struct RotatingOrbit {
    pub params: LatticeParams,
    /// Breakpoints `0 = t_0 < … < t_N = 1`.
    pub mesh: Vec<f64>,
    pub degree: usize,
    /// Point values, `mesh_intervals() · degree + 1` vectors of length `2n`.
    pub points: Vec<DVector<f64>>,
    /// Period in time units.
    pub t_period: f64,
    pub p1: f64,
    pub p2: f64,
    /// Pinning target / tracked value of `x_n(0)`.
    pub xn0: f64,
    /// Mode index of the Lyapunov family this orbit came from, if known.
    pub mode_k: Option<usize>,
}

impl RotatingOrbit {
    pub fn mesh_intervals(&self) -> usize {
        self.mesh.len() - 1
    }

    pub fn dim(&self) -> usize {
        2 * self.params.n
    }

    pub fn n_points(&self) -> usize {
        self.mesh_intervals() * self.degree + 1
    }

    pub fn basis(&self) -> Basis {
        Basis::new(self.degree)
    }

    /// Build an orbit by sampling `value_at(t)` on a uniform mesh.
    pub fn from_fn(
        params: LatticeParams,
        n_intervals: usize,
        degree: usize,
        t_period: f64,
        value_at: &dyn Fn(f64) -> DVector<f64>,
    ) -> Result<Self> {
        if n_intervals < 2 {
            return Err(Error::InvalidArgument("need at least 2 mesh intervals".into()));
        }
        if !(1..=7).contains(&degree) {
            return Err(Error::InvalidArgument(format!("degree {degree} outside 1..=7")));
        }
        let mesh: Vec<f64> = (0..=n_intervals)
            .map(|i| i as f64 / n_intervals as f64)
            .collect();
        let mut points = Vec::with_capacity(n_intervals * degree + 1);
        for j in 0..n_intervals {
            for i in 0..degree {
                let t = mesh[j] + (i as f64 / degree as f64) * (mesh[j + 1] - mesh[j]);
                points.push(value_at(t));
            }
        }
        points.push(value_at(1.0));
        let xn0 = points_xn0(&points, params.n);
        Ok(RotatingOrbit {
            params,
            mesh,
            degree,
            points,
            t_period,
            p1: 0.0,
            p2: 0.0,
            xn0,
            mode_k: None,
        })
    }

    /// Constant orbit at a fixed state (used for equilibria).
    pub fn constant(
        params: LatticeParams,
        state: &State,
        n_intervals: usize,
        degree: usize,
        t_period: f64,
    ) -> Result<Self> {
        Self::from_fn(params, n_intervals, degree, t_period, &|_t| state.0.clone())
    }

    /// Interval index containing scaled time `t` and the local coordinate.
    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.mesh_intervals();
        let mut lo = 0usize;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if t >= self.mesh[mid] {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let j = lo.min(n - 1);
        let h = self.mesh[j + 1] - self.mesh[j];
        ((j), ((t - self.mesh[j]) / h).clamp(0.0, 1.0))
    }

    /// Evaluate the piecewise polynomial at scaled time `t ∈ [0, 1]`.
    pub fn evaluate(&self, t: f64) -> Result<State> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("t = {t} outside [0, 1]")));
        }
        let basis = self.basis();
        let (j, s) = self.locate(t);
        let vals = basis.values_at(s);
        let mut out = DVector::zeros(self.dim());
        for (i, v) in vals.iter().enumerate() {
            out.axpy(*v, &self.points[j * self.degree + i], 1.0);
        }
        Ok(State(out))
    }

    /// Evaluate the scaled-time derivative `du/dt` at `t ∈ [0, 1]`.
    pub fn evaluate_deriv(&self, t: f64) -> Result<State> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("t = {t} outside [0, 1]")));
        }
        let basis = self.basis();
        let (j, s) = self.locate(t);
        let h = self.mesh[j + 1] - self.mesh[j];
        let der = basis.derivs_at(s);
        let mut out = DVector::zeros(self.dim());
        for (i, d) in der.iter().enumerate() {
            out.axpy(*d / h, &self.points[j * self.degree + i], 1.0);
        }
        Ok(State(out))
    }

    /// Sample one period into a physical-time trace with `count` points
    /// (excluding the duplicate endpoint).
    pub fn sample(&self, count: usize) -> Result<Trace> {
        let mut times = Vec::with_capacity(count);
        let mut states = Vec::with_capacity(count);
        for i in 0..count {
            let t = i as f64 / count as f64;
            times.push(t * self.t_period);
            states.push(self.evaluate(t)?);
        }
        Ok(Trace { times, states })
    }

    /// Integration weight of each stored point: `∫₀¹ v(t) dt = Σ_p w_p v_p`
    /// for any function `v` in the piecewise-polynomial space.
    pub fn point_weights(&self) -> Vec<f64> {
        let basis = self.basis();
        let m = self.degree;
        let mut w = vec![0.0; self.n_points()];
        for j in 0..self.mesh_intervals() {
            let h = self.mesh[j + 1] - self.mesh[j];
            for i in 0..=m {
                w[j * m + i] += h * basis.quad[i];
            }
        }
        w
    }

    /// Exact integral of one solution component over `[0, 1]`.
    pub fn integral_of_component(&self, comp: usize) -> f64 {
        self.point_weights()
            .iter()
            .enumerate()
            .map(|(p, w)| w * self.points[p][comp])
            .sum()
    }

    /// Max-norm distance of the point values of two orbits on the same mesh.
    pub fn point_distance(&self, other: &RotatingOrbit) -> f64 {
        self.points
            .iter()
            .zip(other.points.iter())
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }

    /// Re-represent this orbit on a new mesh (same degree, same interval count
    /// unless stated otherwise) by interpolation.
    pub fn reinterpolate(&self, mesh: &[f64]) -> Result<RotatingOrbit> {
        let m = self.degree;
        let n_int = mesh.len() - 1;
        let mut points = Vec::with_capacity(n_int * m + 1);
        for j in 0..n_int {
            for i in 0..m {
                let t = mesh[j] + (i as f64 / m as f64) * (mesh[j + 1] - mesh[j]);
                points.push(self.evaluate(t)?.0);
            }
        }
        points.push(self.evaluate(1.0)?.0);
        Ok(RotatingOrbit {
            params: self.params,
            mesh: mesh.to_vec(),
            degree: m,
            points,
            t_period: self.t_period,
            p1: self.p1,
            p2: self.p2,
            xn0: self.xn0,
            mode_k: self.mode_k,
        })
    }

    /// Monitored quantities at this orbit.
    pub fn monitors(&self) -> OrbitMonitors {
        let u0 = State(self.points[0].clone());
        let pair = crate::lattice::ConservedPair::of(&u0, &self.params);
        let t0 = self.params.t0();
        OrbitMonitors {
            a: self.params.a,
            t_period: self.t_period,
            t0,
            ratio: self.t_period / t0,
            energy: pair.energy,
            amplitude_norm: pair.amplitude_norm,
            xn0: self.points[0][2 * (self.params.n - 1)],
            p1: self.p1,
            p2: self.p2,
        }
    }
}

fn points_xn0(points: &[DVector<f64>], n: usize) -> f64 {
    points[0][2 * (n - 1)]
}

/// Scalar quantities tracked along branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitMonitors {
    pub a: f64,
    pub t_period: f64,
    pub t0: f64,
    pub ratio: f64,
    pub energy: f64,
    pub amplitude_norm: f64,
    pub xn0: f64,
    pub p1: f64,
    pub p2: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::polygonal_equilibrium;

    #[test]
    fn evaluate_reproduces_polynomials() {
        // a cubic is represented exactly at degree 3
        let params = LatticeParams::from_dispersion(3, 0.5, 1).unwrap();
        let f = |t: f64| {
            DVector::from_fn(6, |i, _| (i as f64 + 1.0) * t.powi(3) - 0.3 * t + 0.1 * i as f64)
        };
        let orbit = RotatingOrbit::from_fn(params, 5, 3, 1.0, &f).unwrap();
        for &t in &[0.0, 0.137, 0.5, 0.81, 1.0] {
            let got = orbit.evaluate(t).unwrap();
            assert!((got.0 - f(t)).amax() < 1e-12, "t = {t}");
            let want_d = DVector::from_fn(6, |i, _| 3.0 * (i as f64 + 1.0) * t * t - 0.3);
            assert!((orbit.evaluate_deriv(t).unwrap().0 - want_d).amax() < 1e-10);
        }
        assert!(orbit.evaluate(-0.1).is_err());
        assert!(orbit.evaluate(1.1).is_err());
    }

    #[test]
    fn integral_weights_are_exact_for_the_space() {
        let params = LatticeParams::from_dispersion(3, 0.5, 1).unwrap();
        let f = |t: f64| DVector::from_fn(6, |i, _| t.powi(4) + i as f64);
        let orbit = RotatingOrbit::from_fn(params, 7, 4, 1.0, &f).unwrap();
        // component 0 integrates t⁴: exactly 1/5 since degree-4 interpolation is exact
        assert!((orbit.integral_of_component(0) - 0.2).abs() < 1e-13);
        let w = orbit.point_weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn constant_orbit_monitors() {
        let params = LatticeParams::from_dispersion(9, 0.651774, 1).unwrap();
        let eq = polygonal_equilibrium(9, 0.651774, 1).unwrap();
        let orbit = RotatingOrbit::constant(params, &eq, 10, 4, 5.0).unwrap();
        let mon = orbit.monitors();
        assert!((mon.energy - (-9.0 * 0.651774f64.powi(4) / 4.0)).abs() < 1e-12);
        assert!((mon.amplitude_norm - 9.0 * 0.651774f64.powi(2)).abs() < 1e-12);
        assert!((mon.ratio - 5.0 / params.t0()).abs() < 1e-15);
    }
}
