//! Monodromy matrices, Floquet multipliers, and a-posteriori verification.
//!
//! The monodromy matrix is the fundamental solution of the variational
//! equation `v' = T · D[vector_field](u(t)) · v` over the scaled period.
//! The default route extracts it from the collocation discretization (the
//! ordered product of the per-interval transfer matrices); the cross-check
//! route integrates the variational system with an adaptive Runge–Kutta
//! method. Multipliers come in symplectic pairs `{λ, 1/λ}`, with unit
//! multipliers forced by the phase and rotation symmetries and their
//! conserved quantities.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bvp::{transfer_matrices, RotatingOrbit};
use crate::integrate::{dopri5, dopri5_observed};
use crate::lattice::{amplitude_norm, hamiltonian, jac_vector_field, vector_field, State};
use crate::{Error, Result};

/// Which route computes the monodromy matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonodromyMethod {
    /// Block elimination of the collocation discretization (default).
    Collocation,
    /// High-accuracy integration of the variational system from `u(0)`.
    Variational,
}

/// Monodromy matrix of a converged orbit.
pub fn monodromy(orbit: &RotatingOrbit, method: MonodromyMethod) -> Result<DMatrix<f64>> {
    match method {
        MonodromyMethod::Collocation => {
            let transfers = transfer_matrices(orbit)?;
            let dim = orbit.dim();
            let mut m = DMatrix::identity(dim, dim);
            for t in transfers {
                m = t * m;
            }
            Ok(m)
        }
        MonodromyMethod::Variational => {
            let dim = orbit.dim();
            let p = orbit.params;
            let t_period = orbit.t_period;
            let mut y0 = DVector::zeros(dim + dim * dim);
            y0.rows_mut(0, dim).copy_from(&orbit.points[0]);
            for i in 0..dim {
                y0[dim + i * dim + i] = 1.0;
            }
            let f = |_t: f64, y: &DVector<f64>| {
                let u = State(y.rows(0, dim).into_owned());
                let du = vector_field(&u, &p);
                let jac = jac_vector_field(&u, &p);
                let mut out = DVector::zeros(dim + dim * dim);
                out.rows_mut(0, dim).copy_from(&(t_period * du.0));
                for col in 0..dim {
                    let v = y.rows(dim + col * dim, dim);
                    let dv = t_period * (&jac * v);
                    out.rows_mut(dim + col * dim, dim).copy_from(&dv);
                }
                out
            };
            let yf = dopri5(&f, 0.0, 1.0, y0, 1e-12, 1e-12)?;
            let mut m = DMatrix::zeros(dim, dim);
            for col in 0..dim {
                m.column_mut(col).copy_from(&yf.rows(dim + col * dim, dim));
            }
            Ok(m)
        }
    }
}

/// Stability classes; Table-style reporting groups `Stable` and
/// `AlmostStable` under "S".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityClass {
    Stable,
    AlmostStable,
    Unstable,
}

impl StabilityClass {
    pub fn flag(&self) -> &'static str {
        match self {
            StabilityClass::Stable => "S",
            StabilityClass::AlmostStable => "A",
            StabilityClass::Unstable => "U",
        }
    }

    /// Binary grouping used in tabulated comparisons.
    pub fn is_stable_like(&self) -> bool {
        !matches!(self, StabilityClass::Unstable)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub n_unstable: usize,
    pub class: StabilityClass,
}

/// Floquet multipliers with their classification.
#[derive(Debug, Clone)]
pub struct FloquetSpectrum {
    /// All `2n` multipliers, sorted by decreasing modulus.
    pub multipliers: Vec<Complex64>,
    /// Count of multipliers within `tol_unit` of `+1` (capped at 4); these are
    /// removed from classification as symmetry-forced.
    pub n_trivial: usize,
    /// Non-trivial multipliers with `|λ| > 1 + tol_stab`.
    pub n_unstable: usize,
    pub classification: StabilityClass,
}

impl FloquetSpectrum {
    pub fn summary(&self) -> StabilitySummary {
        StabilitySummary {
            n_unstable: self.n_unstable,
            class: self.classification,
        }
    }
}

/// Classify the eigenvalues of a monodromy matrix.
///
/// Multipliers within `tol_unit` of `+1` (up to 4: phase and rotation
/// symmetry, each paired with a conserved quantity) are trivial and excluded.
/// The rest classify the orbit: `Stable` when every modulus is within
/// `tol_stab` of 1, `AlmostStable` within `10·tol_stab`, `Unstable` otherwise.
pub fn multipliers(m: &DMatrix<f64>, tol_unit: f64, tol_stab: f64) -> Result<FloquetSpectrum> {
    if m.nrows() != m.ncols() || m.nrows() % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "monodromy must be square of even dimension, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut eigs: Vec<Complex64> = crate::eig::complex_eigenvalues_robust(m)?;
    eigs.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(a.im.total_cmp(&b.im)));

    // greedy removal of the unit multipliers
    let mut dist: Vec<(usize, f64)> = eigs
        .iter()
        .enumerate()
        .map(|(i, l)| (i, (l - Complex64::new(1.0, 0.0)).norm()))
        .collect();
    dist.sort_by(|a, b| a.1.total_cmp(&b.1));
    let detected = dist.iter().filter(|(_, d)| *d <= tol_unit).count().min(4);
    let trivial: Vec<usize> = dist.iter().take(detected).map(|(i, _)| *i).collect();

    let mut n_unstable = 0usize;
    let mut worst: f64 = 0.0;
    for (i, l) in eigs.iter().enumerate() {
        if trivial.contains(&i) {
            continue;
        }
        let dev = (l.norm() - 1.0).abs();
        worst = worst.max(dev);
        if l.norm() > 1.0 + tol_stab {
            n_unstable += 1;
        }
    }
    let classification = if worst <= tol_stab {
        StabilityClass::Stable
    } else if worst <= 10.0 * tol_stab {
        StabilityClass::AlmostStable
    } else {
        StabilityClass::Unstable
    };
    Ok(FloquetSpectrum {
        multipliers: eigs,
        n_trivial: detected,
        n_unstable,
        classification,
    })
}

/// Default tolerances of the stability classification.
pub const TOL_UNIT_DEFAULT: f64 = 1e-4;
pub const TOL_STAB_DEFAULT: f64 = 1e-3;

/// Floquet spectrum of an orbit via the default (collocation) route.
pub fn floquet_spectrum(orbit: &RotatingOrbit) -> Result<FloquetSpectrum> {
    let m = monodromy(orbit, MonodromyMethod::Collocation)?;
    multipliers(&m, TOL_UNIT_DEFAULT, TOL_STAB_DEFAULT)
}

/// Report of the a-posteriori integration check.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VerifyReport {
    pub n_periods: usize,
    /// Max distance from the stored orbit curve over the run (aligned in
    /// phase by searching a window around the expected scaled time).
    pub max_distance: f64,
    /// Relative drift of the Hamiltonian.
    pub de_rel: f64,
    /// Relative drift of the amplitude norm.
    pub da_rel: f64,
}

/// Integrate the lattice equations from `u(0)` over `n_periods · T` and
/// report conservation drifts and the maximal phase-aligned distance from
/// the stored orbit.
pub fn integrate_verify(orbit: &RotatingOrbit, n_periods: usize, tol: f64) -> Result<VerifyReport> {
    if n_periods < 1 {
        return Err(Error::InvalidArgument("n_periods must be at least 1".into()));
    }
    let p = orbit.params;
    let t_period = orbit.t_period;
    let u0 = State(orbit.points[0].clone());
    let e0 = hamiltonian(&u0, &p);
    let a0 = amplitude_norm(&u0);

    // dense curve table for distance checks
    let n_samples = (orbit.n_points() * 4).max(1024);
    let mut curve = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let t = i as f64 / n_samples as f64;
        curve.push(orbit.evaluate(t)?.0);
    }

    let f = |_t: f64, y: &DVector<f64>| vector_field(&State(y.clone()), &p).0;

    let mut max_distance: f64 = 0.0;
    let mut de: f64 = 0.0;
    let mut da: f64 = 0.0;
    let window = (n_samples / 50).max(2);
    let checks_per_period = 64.0;
    let mut next_check = 0.0;
    let mut observe = |t: f64, y: &DVector<f64>| {
        if t < next_check {
            return;
        }
        next_check = t + t_period / checks_per_period;
        let u = State(y.clone());
        de = de.max((hamiltonian(&u, &p) - e0).abs());
        da = da.max((amplitude_norm(&u) - a0).abs());
        let phase = (t / t_period).rem_euclid(1.0);
        let center = (phase * n_samples as f64) as usize;
        let mut best = f64::INFINITY;
        let mut best_idx = center % n_samples;
        for off in 0..=2 * window {
            let idx = (center + n_samples + off - window) % n_samples;
            let d = (y - &curve[idx]).norm();
            if d < best {
                best = d;
                best_idx = idx;
            }
        }
        // sub-sample phase alignment by golden-section around the best sample
        let mut lo = (best_idx as f64 - 1.0) / n_samples as f64;
        let mut hi = (best_idx as f64 + 1.0) / n_samples as f64;
        let dist_at = |s: f64| -> f64 {
            let u = orbit
                .evaluate(s.rem_euclid(1.0))
                .expect("wrapped phase in range");
            (y - &u.0).norm()
        };
        let inv_phi = 0.618_033_988_749_894_9_f64;
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = dist_at(x1);
        let mut f2 = dist_at(x2);
        for _ in 0..40 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = dist_at(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = dist_at(x2);
            }
        }
        max_distance = max_distance.max(best.min(f1.min(f2)));
    };
    dopri5_observed(
        &f,
        0.0,
        n_periods as f64 * t_period,
        orbit.points[0].clone(),
        tol,
        tol * 1e-2,
        &mut observe,
    )?;
    Ok(VerifyReport {
        n_periods,
        max_distance,
        de_rel: de / e0.abs().max(1e-300),
        da_rel: da / a0.max(1e-300),
    })
}
