//! Resonance arithmetic and non-rotating-frame verification.
//!
//! An orbit of the mode-`k` family with `T/T₀ = ℓ/m` (coprime) closes up in
//! the non-rotating frame after `m` rotating-frame periods. With
//! `s = kℓ − αm` and `g = gcd(|s|, n)` the sites arrange into `n/g` closed
//! curves of `g` sites each; `g = n` is the full choreography, where
//!
//! ```text
//! q_j(t) = q_n(t + j k̃ ζ),    k̃ = k − (kℓ − αm) ℓ*,
//! ```
//!
//! with `ℓ*` the `m`-modular inverse of `ℓ`. The curve is invariant under
//! rotation by `2π/m` and winds `ℓ` times around its center.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bvp::RotatingOrbit;
use crate::continuation::gcd;
use crate::{Error, Result};

/// Arithmetic data of an `ℓ:m` resonance on mode `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResonanceLabel {
    pub ell: i64,
    pub m: i64,
    pub k: usize,
    pub alpha: usize,
    /// `r = (kℓ − αm)/n`; integral only for full choreographies, `None` on
    /// partial labels.
    pub r: Option<i64>,
    /// `m`-modular inverse of `ℓ` (0 when `m = 1`).
    pub ell_star: i64,
    /// Site shift of the choreography identity `q_j(t) = q_n(t + j k̃ ζ)`
    /// (holding on the site subgroup for partial choreographies).
    pub k_tilde: i64,
}

/// `m`-modular inverse: the unique `x ∈ [0, m)` with `ℓx ≡ 1 (mod m)`;
/// by convention 0 when `m = 1`.
pub fn modular_inverse(ell: i64, m: i64) -> Result<i64> {
    if m <= 0 {
        return Err(Error::InvalidArgument(format!("modulus m = {m}")));
    }
    if m == 1 {
        return Ok(0);
    }
    let r = ell.rem_euclid(m);
    if gcd(r as u64, m as u64) != 1 {
        return Err(Error::NotCoprime { ell, m });
    }
    // extended Euclid on (r, m)
    let (mut old_r, mut rr) = (r, m);
    let (mut old_s, mut s) = (1i64, 0i64);
    while rr != 0 {
        let q = old_r / rr;
        (old_r, rr) = (rr, old_r - q * rr);
        (old_s, s) = (s, old_s - q * s);
    }
    Ok(old_s.rem_euclid(m))
}

/// Completes the resonance arithmetic when `n | kℓ − αm`; `None` otherwise.
pub fn resonance_admissible(
    n: usize,
    k: usize,
    alpha: usize,
    ell: i64,
    m: i64,
) -> Result<Option<ResonanceLabel>> {
    if m <= 0 {
        return Err(Error::InvalidArgument(format!("m = {m}, need m > 0")));
    }
    if gcd(ell.unsigned_abs(), m as u64) != 1 {
        return Err(Error::NotCoprime { ell, m });
    }
    let s = k as i64 * ell - alpha as i64 * m;
    if s.rem_euclid(n as i64) != 0 {
        return Ok(None);
    }
    let r = s / n as i64;
    let ell_star = modular_inverse(ell, m)?;
    let k_tilde = k as i64 - s * ell_star;
    Ok(Some(ResonanceLabel {
        ell,
        m,
        k,
        alpha,
        r: Some(r),
        ell_star,
        k_tilde,
    }))
}

/// Label for any `ℓ:m` resonance on mode `k`, full or partial; `r` is set
/// only when `n | kℓ − αm`.
pub fn orbit_label(n: usize, k: usize, alpha: usize, ell: i64, m: i64) -> Result<ResonanceLabel> {
    if m <= 0 {
        return Err(Error::InvalidArgument(format!("m = {m}, need m > 0")));
    }
    if gcd(ell.unsigned_abs(), m as u64) != 1 {
        return Err(Error::NotCoprime { ell, m });
    }
    let s = k as i64 * ell - alpha as i64 * m;
    let ell_star = modular_inverse(ell, m)?;
    Ok(ResonanceLabel {
        ell,
        m,
        k,
        alpha,
        r: (s.rem_euclid(n as i64) == 0).then(|| s / n as i64),
        ell_star,
        k_tilde: k as i64 - s * ell_star,
    })
}

/// Topology of the non-rotating orbit of one resonance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitClass {
    /// One closed curve traversed by all sites.
    Full,
    /// `curves` closed curves, each traversed by `n / curves` sites.
    Partial { curves: usize },
}

/// Classify by the site-identification arithmetic: with `g = gcd(|kℓ − αm|, n)`
/// the sites form `n/g` curves (`g = n`: full choreography; `g = 1`: `n`
/// separate curves).
pub fn classify_orbit(n: usize, k: usize, alpha: usize, ell: i64, m: i64) -> Result<OrbitClass> {
    if gcd(ell.unsigned_abs(), m.unsigned_abs()) != 1 {
        return Err(Error::NotCoprime { ell, m });
    }
    let s = k as i64 * ell - alpha as i64 * m;
    let g = gcd(s.unsigned_abs(), n as u64) as usize;
    if g == n {
        Ok(OrbitClass::Full)
    } else {
        Ok(OrbitClass::Partial { curves: n / g })
    }
}

/// Sampled non-rotating-frame orbit over one choreography period `m·T`.
#[derive(Debug, Clone)]
pub struct NonrotatingTrace {
    pub label: ResonanceLabel,
    /// Scaled phases `θ ∈ [0, 2πm)`, uniform.
    pub theta: Vec<f64>,
    /// Per-site complex time series, outer index the site.
    pub sites: Vec<Vec<Complex64>>,
    /// Choreography period `m · T` in time units.
    pub period: f64,
    /// Ratio `ω/ν` actually used for the frame rotation.
    pub ratio: f64,
    orbit: RotatingOrbit,
}

impl NonrotatingTrace {
    /// Exact evaluation of `q_j` at an arbitrary scaled phase (wrapped onto
    /// `[0, 2πm)`).
    pub fn eval_site(&self, j: usize, theta: f64) -> Complex64 {
        let m = self.label.m as f64;
        let th = theta.rem_euclid(std::f64::consts::TAU * m);
        let t_scaled = (th / std::f64::consts::TAU).rem_euclid(1.0);
        let u = self
            .orbit
            .evaluate(t_scaled)
            .expect("wrapped phase is inside [0,1]");
        Complex64::from_polar(1.0, self.ratio * th) * u.site(j)
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Time-averaged centroid of site `j`.
    pub fn centroid(&self, j: usize) -> Complex64 {
        let s: Complex64 = self.sites[j].iter().sum();
        s / self.sites[j].len() as f64
    }

    /// Worst closure gap `‖q(mT) − q(0)‖` relative to the curve amplitude.
    pub fn closure_residual(&self) -> f64 {
        let m = self.label.m as f64;
        let mut worst: f64 = 0.0;
        for j in 0..self.n_sites() {
            let a = self.eval_site(j, 0.0);
            // evaluate just inside the wrap to measure the true end point
            let rot = Complex64::from_polar(1.0, self.ratio * std::f64::consts::TAU * m);
            let b = rot * self.orbit.evaluate(1.0).expect("t=1").site(j);
            worst = worst.max((b - a).norm());
        }
        worst
    }
}

/// Sample the non-rotating frame over one choreography period.
///
/// Requires `|T/T₀ − ℓ/m| ≤ 1e-9` (the locked-orbit contract); the rotation
/// uses the orbit's actual ratio.
pub fn build_nonrotating(
    orbit: &RotatingOrbit,
    label: &ResonanceLabel,
    n_samples: usize,
) -> Result<NonrotatingTrace> {
    let mon = orbit.monitors();
    let target = label.ell as f64 / label.m as f64;
    let delta = (mon.ratio - target).abs();
    if delta > 1e-9 {
        return Err(Error::RatioMismatch {
            ell: label.ell,
            m: label.m,
            found: mon.ratio,
            delta,
        });
    }
    let n = orbit.params.n;
    let m = label.m as f64;
    let mut theta = Vec::with_capacity(n_samples);
    let mut sites = vec![Vec::with_capacity(n_samples); n];
    for i in 0..n_samples {
        let th = std::f64::consts::TAU * m * i as f64 / n_samples as f64;
        let t_scaled = (th / std::f64::consts::TAU).rem_euclid(1.0);
        let u = orbit.evaluate(t_scaled)?;
        let rot = Complex64::from_polar(1.0, mon.ratio * th);
        for (j, series) in sites.iter_mut().enumerate() {
            series.push(rot * u.site(j));
        }
        theta.push(th);
    }
    Ok(NonrotatingTrace {
        label: *label,
        theta,
        sites,
        period: m * orbit.t_period,
        ratio: mon.ratio,
        orbit: orbit.clone(),
    })
}

/// Max deviation from the choreography identity `q_j(θ) = q_n(θ + j k̃ ζ)`
/// over all sites and sampled phases.
pub fn choreography_residual(trace: &NonrotatingTrace) -> f64 {
    residual_over_sites(trace, 1)
}

/// Same identity restricted to the site subgroup `j ≡ 0 (mod stride)`; for a
/// partial choreography with `n/g` curves the identity holds on the subgroup
/// of stride `n/g`.
pub fn subgroup_residual(trace: &NonrotatingTrace, stride: usize) -> f64 {
    residual_over_sites(trace, stride.max(1))
}

fn residual_over_sites(trace: &NonrotatingTrace, stride: usize) -> f64 {
    let n = trace.n_sites();
    let zeta = std::f64::consts::TAU / n as f64;
    let ref_slot = n - 1; // storage slot of site n
    let mut worst: f64 = 0.0;
    for jj in (stride..=n).step_by(stride) {
        // site index j = 1..n stored at slot j−1
        let slot = jj - 1;
        if slot == ref_slot {
            continue;
        }
        let shift = jj as f64 * trace.label.k_tilde as f64 * zeta;
        for (i, th) in trace.theta.iter().enumerate() {
            let expected = trace.eval_site(ref_slot, th + shift);
            let got = trace.sites[slot][i];
            worst = worst.max((got - expected).norm());
        }
    }
    worst
}

/// Signed winding number of site `n`'s curve about `center`, by summed
/// argument increments over one choreography period.
pub fn winding_number(trace: &NonrotatingTrace, center: Complex64) -> Result<i64> {
    let series = &trace.sites[trace.n_sites() - 1];
    let mut total = 0.0;
    let mut min_dist = f64::INFINITY;
    for i in 0..series.len() {
        let a = series[i] - center;
        let b = series[(i + 1) % series.len()] - center;
        min_dist = min_dist.min(a.norm());
        let cross = a.re * b.im - a.im * b.re;
        let dot = a.re * b.re + a.im * b.im;
        total += cross.atan2(dot);
    }
    if min_dist < 1e-12 {
        return Err(Error::CenterOnCurve { min_dist });
    }
    let w = total / std::f64::consts::TAU;
    Ok(w.round() as i64)
}

fn point_segment_dist(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a).re * ab.re + (p - a).im * ab.im) / len2).clamp(0.0, 1.0);
    (p - (a + t * ab)).norm()
}

/// Symmetric Hausdorff distance between two sampled closed curves, measured
/// point-to-polyline so the sampling phase does not register as distance.
pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let directed = |p: &[Complex64], q: &[Complex64]| -> f64 {
        p.iter()
            .map(|x| {
                (0..q.len())
                    .map(|i| point_segment_dist(*x, q[i], q[(i + 1) % q.len()]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Error of the `2π/m` rotation symmetry of site `n`'s curve: an upper bound
/// on the Hausdorff distance between the curve and its rotated copy.
///
/// The rotation corresponds to the exact time shift `θ ↦ θ + 2πℓ*` (from the
/// `q_n(t − 2π) = e^{−2πiℓ/m} q_n(t)` symmetry), so the bound is the largest
/// pointwise mismatch under that shift, free of sampling artifacts.
pub fn rotation_symmetry_error(trace: &NonrotatingTrace) -> f64 {
    let slot = trace.n_sites() - 1;
    let rot = Complex64::from_polar(1.0, std::f64::consts::TAU / trace.label.m as f64);
    let shift = std::f64::consts::TAU * trace.label.ell_star as f64;
    let mut worst: f64 = 0.0;
    for (i, th) in trace.theta.iter().enumerate() {
        let moved = trace.eval_site(slot, th + shift);
        let rotated = rot * trace.sites[slot][i];
        worst = worst.max((moved - rotated).norm());
    }
    worst
}

/// Winding of the rotating-frame loop of site `n` about the origin over one
/// period. Non-zero when the loop encloses the frame center, in which case the
/// non-rotating winding about the rosette center is `ℓ + m · frame_winding`.
pub fn frame_winding(orbit: &RotatingOrbit, n_samples: usize) -> Result<i64> {
    let slot = orbit.params.n - 1;
    let mut total = 0.0;
    let mut min_dist = f64::INFINITY;
    let count = n_samples.max(256);
    let mut prev = orbit.evaluate(0.0)?.site(slot);
    for i in 1..=count {
        let t = (i % count) as f64 / count as f64;
        let cur = orbit.evaluate(t)?.site(slot);
        min_dist = min_dist.min(prev.norm());
        let cross = prev.re * cur.im - prev.im * cur.re;
        let dot = prev.re * cur.re + prev.im * cur.im;
        total += cross.atan2(dot);
        prev = cur;
    }
    if min_dist < 1e-12 {
        return Err(Error::CenterOnCurve { min_dist });
    }
    Ok((total / std::f64::consts::TAU).round() as i64)
}

/// Cluster the site curves by symmetric Hausdorff distance: the geometric
/// count of distinct closed curves (oracle for [`classify_orbit`]).
///
/// Probe points are coarse but distances are measured against finely sampled
/// polylines, keeping the sagitta error of the polyline below the tolerance.
pub fn cluster_curves(trace: &NonrotatingTrace, tol: f64) -> usize {
    let n = trace.n_sites();
    let len = trace.theta.len();
    let probe_stride = (len / 512).max(1);
    let probes: Vec<Vec<Complex64>> = (0..n)
        .map(|j| trace.sites[j].iter().step_by(probe_stride).copied().collect())
        .collect();
    let fine_stride = (len / 16384).max(1);
    let fine: Vec<Vec<Complex64>> = (0..n)
        .map(|j| trace.sites[j].iter().step_by(fine_stride).copied().collect())
        .collect();
    // the polyline cannot resolve distances below its own sagitta; floor the
    // tolerance by the measured worst deviation-from-chord
    let mut sagitta: f64 = 0.0;
    for curve in &fine {
        let s = curve.len();
        for i in 0..s {
            let dev = point_segment_dist(curve[(i + 1) % s], curve[i], curve[(i + 2) % s]);
            sagitta = sagitta.max(dev);
        }
    }
    let tol = tol.max(1.5 * sagitta);
    let dist = |a: usize, b: usize| -> f64 {
        let directed = |p: &[Complex64], q: &[Complex64]| -> f64 {
            p.iter()
                .map(|x| {
                    (0..q.len())
                        .map(|i| point_segment_dist(*x, q[i], q[(i + 1) % q.len()]))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        directed(&probes[a], &fine[b]).max(directed(&probes[b], &fine[a]))
    };
    let mut assign = vec![usize::MAX; n];
    let mut n_clusters = 0usize;
    for j in 0..n {
        for c in 0..n_clusters {
            let rep = assign.iter().position(|&a| a == c).unwrap();
            if dist(j, rep) <= tol {
                assign[j] = c;
                break;
            }
        }
        if assign[j] == usize::MAX {
            assign[j] = n_clusters;
            n_clusters += 1;
        }
    }
    n_clusters
}
