//! Pseudo-arclength continuation of orbit families.
//!
//! Branches are traced with a secant predictor (first step: branch tangent
//! from the null space of the continuation Jacobian) and a Newton corrector
//! augmented with the arclength equation. The ratio `T/T₀` is monitored at
//! every point; coprime rational values of the ratio are the resonances at
//! which the orbit closes up in the non-rotating frame.

use nalgebra::DVector;

use crate::bvp::{
    branch_tangent, newton_solve, ConstraintSet, FreeParam, LinearScalarEq, RotatingOrbit, Target,
};
use crate::floquet::StabilitySummary;
use crate::{Error, Result};

/// Stepper settings.
#[derive(Debug, Clone)]
pub struct ContinuationSettings {
    pub ds0: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_steps: usize,
    /// Newton tolerance (max norm) per corrector solve.
    pub tol: f64,
    pub max_iter: usize,
    /// Re-mesh cadence in accepted steps; 0 disables adaptation.
    pub adapt_every: usize,
    /// Parameter whose sign fixes the initial direction.
    pub primary: FreeParam,
    /// +1: primary increases along the first step; −1: decreases.
    pub direction: f64,
    /// Weight of the period `T` in the arclength metric. Orbits whose period
    /// grows by orders of magnitude along the branch (ratios far from 1)
    /// need a small weight so steps measure the orbit shape, not `T`.
    pub period_metric_weight: f64,
    pub stop: Vec<StopPredicate>,
}

impl ContinuationSettings {
    pub fn new(primary: FreeParam, direction: f64) -> Self {
        ContinuationSettings {
            ds0: 0.01,
            ds_min: 1e-6,
            ds_max: 0.05,
            max_steps: 500,
            tol: 1e-10,
            max_iter: 10,
            adapt_every: 0,
            primary,
            direction,
            period_metric_weight: 1.0,
            stop: Vec::new(),
        }
    }
}

/// Halt conditions checked between consecutive accepted points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopPredicate {
    /// `x_n(0)` crosses the value.
    Xn0Reaches(f64),
    /// The amplitude parameter `a` crosses the value.
    AmplitudeReaches(f64),
    /// The ratio `T/T₀` crosses the value.
    RatioReaches(f64),
}

impl StopPredicate {
    fn monitor(&self, p: &BranchPoint) -> f64 {
        match self {
            StopPredicate::Xn0Reaches(_) => p.monitors.xn0,
            StopPredicate::AmplitudeReaches(_) => p.monitors.a,
            StopPredicate::RatioReaches(_) => p.monitors.ratio,
        }
    }

    fn target(&self) -> f64 {
        match self {
            StopPredicate::Xn0Reaches(v)
            | StopPredicate::AmplitudeReaches(v)
            | StopPredicate::RatioReaches(v) => *v,
        }
    }
}

/// Monitored quantities of one branch point.
#[derive(Debug, Clone)]
pub struct BranchMonitors {
    pub a: f64,
    pub t_period: f64,
    pub t0: f64,
    pub ratio: f64,
    pub energy: f64,
    pub amplitude_norm: f64,
    pub xn0: f64,
    pub p1: f64,
    pub p2: f64,
    pub stability: Option<StabilitySummary>,
}

#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub orbit: RotatingOrbit,
    pub monitors: BranchMonitors,
    pub arclength: f64,
}

impl BranchPoint {
    pub fn new(orbit: RotatingOrbit, arclength: f64) -> Self {
        let m = orbit.monitors();
        BranchPoint {
            monitors: BranchMonitors {
                a: m.a,
                t_period: m.t_period,
                t0: m.t0,
                ratio: m.ratio,
                energy: m.energy,
                amplitude_norm: m.amplitude_norm,
                xn0: m.xn0,
                p1: m.p1,
                p2: m.p2,
                stability: None,
            },
            orbit,
            arclength,
        }
    }
}

/// How a branch trace ended.
#[derive(Debug, Clone, PartialEq)]
pub enum BranchStatus {
    MaxSteps,
    StopHit(StopPredicate),
    /// Step size fell below `ds_min` with Newton failing; the branch holds
    /// every point computed before the stall.
    Stalled {
        steps: usize,
        ds_min: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub constraint_stage: String,
    pub status: BranchStatus,
}

impl Branch {
    pub fn last(&self) -> &BranchPoint {
        self.points.last().expect("branch has at least the start")
    }
}

/// Direction in the combined (orbit, parameters) space.
#[derive(Clone)]
struct ContVec {
    points: Vec<DVector<f64>>,
    params: Vec<f64>,
}

impl ContVec {
    fn weighted_dot(&self, other: &ContVec, pw: &[f64], qw: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((a, b), w) in self.points.iter().zip(other.points.iter()).zip(pw.iter()) {
            s += w * a.dot(b);
        }
        for ((a, b), w) in self.params.iter().zip(other.params.iter()).zip(qw.iter()) {
            s += w * a * b;
        }
        s
    }

    fn weighted_norm(&self, pw: &[f64], qw: &[f64]) -> f64 {
        self.weighted_dot(self, pw, qw).sqrt()
    }

    fn scale(&mut self, s: f64) {
        for p in self.points.iter_mut() {
            *p *= s;
        }
        for q in self.params.iter_mut() {
            *q *= s;
        }
    }
}

fn cont_vec_of(orbit: &RotatingOrbit, cs: &ConstraintSet) -> ContVec {
    ContVec {
        points: orbit.points.clone(),
        params: cs
            .free
            .iter()
            .map(|p| crate::bvp::constraints::param_value(orbit, *p))
            .collect(),
    }
}

fn difference(a: &RotatingOrbit, b: &RotatingOrbit, cs: &ConstraintSet) -> ContVec {
    let va = cont_vec_of(a, cs);
    let vb = cont_vec_of(b, cs);
    ContVec {
        points: va
            .points
            .iter()
            .zip(vb.points.iter())
            .map(|(x, y)| x - y)
            .collect(),
        params: va
            .params
            .iter()
            .zip(vb.params.iter())
            .map(|(x, y)| x - y)
            .collect(),
    }
}

fn predict(orbit: &RotatingOrbit, cs: &ConstraintSet, tau: &ContVec, ds: f64) -> RotatingOrbit {
    let mut out = orbit.clone();
    for (p, d) in out.points.iter_mut().zip(tau.points.iter()) {
        p.axpy(ds, d, 1.0);
    }
    let mut tracked = crate::bvp::TrackedTargets::from_orbit(orbit);
    for (q, p) in cs.free.iter().enumerate() {
        crate::bvp::system::add_param(&mut out, &mut tracked, *p, ds * tau.params[q]);
    }
    out
}

fn param_weights(cs: &ConstraintSet, period_weight: f64) -> Vec<f64> {
    cs.free
        .iter()
        .map(|p| if *p == FreeParam::Period { period_weight } else { 1.0 })
        .collect()
}

fn arclength_row(
    anchor: &RotatingOrbit,
    cs: &ConstraintSet,
    tau: &ContVec,
    pw: &[f64],
    qw: &[f64],
    ds: f64,
) -> LinearScalarEq {
    let anchor_vec = cont_vec_of(anchor, cs);
    let w_points: Vec<DVector<f64>> = tau
        .points
        .iter()
        .zip(pw.iter())
        .map(|(t, w)| t * *w)
        .collect();
    let w_params: Vec<f64> = tau
        .params
        .iter()
        .zip(qw.iter())
        .map(|(t, w)| t * w)
        .collect();
    let rhs = tau.weighted_dot(&anchor_vec, pw, qw) + ds;
    LinearScalarEq {
        w_points,
        w_params,
        rhs,
    }
}

/// Constraint set that lands exactly on a stop predicate's hyperplane: the
/// tracked quantity is pinned and the matching freedom removed, giving a
/// square Newton solve.
fn landing_set(cs: &ConstraintSet, stop: &StopPredicate) -> ConstraintSet {
    let mut out = cs.clone();
    match stop {
        StopPredicate::Xn0Reaches(v) => {
            out.pin_xn0 = Some(Target::Fixed(*v));
            out.free.retain(|p| *p != FreeParam::Xn0);
        }
        StopPredicate::AmplitudeReaches(_) => {
            out.free.retain(|p| *p != FreeParam::Amplitude);
        }
        StopPredicate::RatioReaches(v) => {
            out.fix_ratio = Some(Target::Fixed(*v));
            out.free.retain(|p| *p != FreeParam::Ratio);
        }
    }
    out
}

fn land_on(
    seed: &RotatingOrbit,
    cs: &ConstraintSet,
    stop: &StopPredicate,
    settings: &ContinuationSettings,
) -> Result<RotatingOrbit> {
    let lcs = landing_set(cs, stop);
    let mut seed = seed.clone();
    if let StopPredicate::AmplitudeReaches(v) = stop {
        seed.params = seed.params.at_amplitude(*v);
    }
    let (orbit, _) = newton_solve(&seed, &lcs, None, settings.tol, settings.max_iter + 5)?;
    Ok(orbit)
}

/// Trace a branch from a converged start under the given constraint set.
pub fn continue_branch(
    start: &RotatingOrbit,
    cs: &ConstraintSet,
    settings: &ContinuationSettings,
    stage: &str,
) -> Result<Branch> {
    cs.validate(true, stage)?;
    let res0 = crate::bvp::assemble_residual(start, cs)?.amax();
    if res0 > 100.0 * settings.tol {
        return Err(Error::InvalidArgument(format!(
            "continuation start is not converged (residual {res0:.3e})"
        )));
    }

    let mut points = vec![BranchPoint::new(start.clone(), 0.0)];
    let mut pw = start.point_weights();
    let qw = param_weights(cs, settings.period_metric_weight);

    // first tangent from the Jacobian null space, oriented along `primary`
    let (tp, tq) = branch_tangent(start, cs, settings.primary)?;
    let mut tau = ContVec {
        points: tp,
        params: tq,
    };
    let qi = cs
        .free
        .iter()
        .position(|p| *p == settings.primary)
        .expect("validated");
    let nrm = tau.weighted_norm(&pw, &qw);
    if !(nrm.is_finite()) || nrm == 0.0 {
        return Err(Error::SingularJacobian {
            detail: "degenerate branch tangent".into(),
        });
    }
    tau.scale(1.0 / nrm);
    if tau.params[qi] * settings.direction < 0.0 {
        tau.scale(-1.0);
    }

    let mut ds = settings.ds0;
    let mut since_adapt = 0usize;
    let mut steps = 0usize;
    while steps < settings.max_steps {
        let prev = points.last().unwrap().orbit.clone();
        let pred = predict(&prev, cs, &tau, ds);
        let row = arclength_row(&prev, cs, &tau, &pw, &qw, ds);
        match newton_solve(&pred, cs, Some(&row), settings.tol, settings.max_iter) {
            Ok((orbit, report)) => {
                steps += 1;
                let s = points.last().unwrap().arclength + ds;
                let new_point = BranchPoint::new(orbit, s);

                // stop predicates: bracketed crossing between prev and new
                let prev_point = points.last().unwrap();
                for stop in &settings.stop {
                    let m0 = stop.monitor(prev_point) - stop.target();
                    let m1 = stop.monitor(&new_point) - stop.target();
                    if m0 == 0.0 && points.len() == 1 {
                        continue; // starting exactly on the target is not a crossing
                    }
                    if m0 * m1 <= 0.0 {
                        let seed = if m0.abs() <= m1.abs() {
                            &prev_point.orbit
                        } else {
                            &new_point.orbit
                        };
                        let landed = land_on(seed, cs, stop, settings)?;
                        let frac = if (m1 - m0).abs() > 0.0 {
                            (0.0 - m0) / (m1 - m0)
                        } else {
                            1.0
                        };
                        let s_land = points.last().unwrap().arclength + frac * ds;
                        points.push(BranchPoint::new(landed, s_land));
                        return Ok(Branch {
                            points,
                            constraint_stage: stage.into(),
                            status: BranchStatus::StopHit(*stop),
                        });
                    }
                }

                // secant tangent for the next step
                let mut sec = difference(&new_point.orbit, &points.last().unwrap().orbit, cs);
                let nrm = sec.weighted_norm(&pw, &qw);
                if nrm > 0.0 {
                    sec.scale(1.0 / nrm);
                    tau = sec;
                }
                points.push(new_point);

                if report.iterations <= 3 {
                    ds = (ds * 1.3).min(settings.ds_max);
                }

                // periodic mesh adaptation; the previous point moves to the
                // new mesh so the secant stays consistent
                since_adapt += 1;
                if settings.adapt_every > 0 && since_adapt >= settings.adapt_every {
                    since_adapt = 0;
                    let last = points.last().unwrap().orbit.clone();
                    let adapted = crate::bvp::adapt_mesh(&last)?;
                    let n_prev = points.len() - 2;
                    let prev_re = points[n_prev].orbit.reinterpolate(&adapted.mesh)?;
                    let mut sec = difference(&adapted, &prev_re, cs);
                    pw = adapted.point_weights();
                    let nrm = sec.weighted_norm(&pw, &qw);
                    if nrm > 0.0 {
                        sec.scale(1.0 / nrm);
                        tau = sec;
                    }
                    points.last_mut().unwrap().orbit = adapted;
                }
            }
            Err(Error::NoConvergence { .. }) | Err(Error::SingularJacobian { .. }) => {
                ds *= 0.5;
                if ds < settings.ds_min {
                    return Ok(Branch {
                        points,
                        constraint_stage: stage.into(),
                        status: BranchStatus::Stalled {
                            steps,
                            ds_min: settings.ds_min,
                        },
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Branch {
        points,
        constraint_stage: stage.into(),
        status: BranchStatus::MaxSteps,
    })
}

/// Coprime fractions `ℓ/m` with `1 ≤ m ≤ max_den` inside `[lo, hi]`,
/// enumerated in lowest terms (signed numerators allowed).
pub fn farey_fractions_in(lo: f64, hi: f64, max_den: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for m in 1..=max_den {
        let l_lo = (lo * m as f64).ceil() as i64;
        let l_hi = (hi * m as f64).floor() as i64;
        for ell in l_lo..=l_hi {
            if gcd(ell.unsigned_abs(), m.unsigned_abs()) == 1 {
                out.push((ell, m));
            }
        }
    }
    out.sort_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1)).then(a.1.cmp(&b.1)));
    out
}

/// Greatest common divisor (used by the resonance arithmetic).
pub fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// A rational ratio value crossed between two consecutive branch points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResonanceHit {
    pub ell: i64,
    pub m: i64,
    /// Indices of the bracketing branch points.
    pub lo: usize,
    pub hi: usize,
}

/// Every coprime `ℓ:m` with `m ≤ max_den` whose value `ℓ/m` is crossed by the
/// ratio monitor between consecutive branch points.
pub fn detect_resonances(branch: &Branch, max_den: i64) -> Vec<ResonanceHit> {
    let mut out = Vec::new();
    for i in 1..branch.points.len() {
        let r0 = branch.points[i - 1].monitors.ratio;
        let r1 = branch.points[i].monitors.ratio;
        let (lo, hi) = if r0 <= r1 { (r0, r1) } else { (r1, r0) };
        for (ell, m) in farey_fractions_in(lo, hi, max_den) {
            out.push(ResonanceHit {
                ell,
                m,
                lo: i - 1,
                hi: i,
            });
        }
    }
    out
}

/// Solve for the branch point at a given fraction between two bracketing
/// points, using the secant chord as the arclength direction.
fn chord_point(
    a: &RotatingOrbit,
    b: &RotatingOrbit,
    cs: &ConstraintSet,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<RotatingOrbit> {
    let b_re = if b.mesh == a.mesh {
        b.clone()
    } else {
        b.reinterpolate(&a.mesh)?
    };
    let pw = a.point_weights();
    let qw = vec![1.0; cs.free.len()];
    let mut chord = difference(&b_re, a, cs);
    let len = chord.weighted_norm(&pw, &qw);
    if len == 0.0 {
        return Ok(a.clone());
    }
    chord.scale(1.0 / len);
    let pred = predict(a, cs, &chord, lambda * len);
    let row = arclength_row(a, cs, &chord, &pw, &qw, lambda * len);
    let (orbit, _) = newton_solve(&pred, cs, Some(&row), tol, max_iter)?;
    Ok(orbit)
}

fn monitor_ratio(o: &RotatingOrbit) -> f64 {
    o.monitors().ratio
}

fn monitor_amp(o: &RotatingOrbit) -> f64 {
    o.params.a
}

/// Secant iteration on arclength between two bracketing branch points, with
/// full Newton re-solves at every trial point, then a square polish that pins
/// the located quantity exactly.
fn locate_on_segment(
    a: &RotatingOrbit,
    b: &RotatingOrbit,
    cs: &ConstraintSet,
    monitor: &dyn Fn(&RotatingOrbit) -> f64,
    target: f64,
    stop: &StopPredicate,
    settings: &ContinuationSettings,
) -> Result<RotatingOrbit> {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut flo = monitor(a) - target;
    let fhi = monitor(b) - target;
    if flo * fhi > 0.0 {
        return Err(Error::NoBracket { target });
    }
    let mut best = if flo.abs() < fhi.abs() { a.clone() } else { b.clone() };
    let mut f_prev = flo;
    let mut x_prev = lo;
    let mut f_hi = fhi;
    for _ in 0..60 {
        // secant trial, safeguarded into the bracket
        let denom = f_hi - f_prev;
        let mut x = if denom.abs() > 0.0 {
            x_prev - f_prev * (hi - x_prev) / denom
        } else {
            0.5 * (lo + hi)
        };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let trial = chord_point(a, b, cs, x, settings.tol, settings.max_iter + 5)?;
        let f = monitor(&trial) - target;
        if f.abs() < f_prev.abs() {
            best = trial.clone();
        }
        if f.abs() <= 1e-8 * (1.0 + target.abs()) {
            best = trial;
            break;
        }
        if flo * f <= 0.0 {
            hi = x;
            f_hi = f;
        } else {
            lo = x;
            flo = f;
        }
        x_prev = x;
        f_prev = f;
        if hi - lo < 1e-14 {
            break;
        }
    }
    // square polish pinning the quantity exactly
    land_on(&best, cs, stop, settings)
}

fn bracket_orbits<'a>(branch: &'a Branch, hit_lo: usize, hit_hi: usize) -> (&'a RotatingOrbit, &'a RotatingOrbit) {
    (&branch.points[hit_lo].orbit, &branch.points[hit_hi].orbit)
}

/// Locate the orbit with `T/T₀ = ℓ/m` exactly, given a branch that brackets
/// the crossing; `|ratio − ℓ/m| ≤ 1e-10` at the result.
pub fn locate_resonance(
    branch: &Branch,
    cs: &ConstraintSet,
    settings: &ContinuationSettings,
    ell: i64,
    m: i64,
) -> Result<RotatingOrbit> {
    if m <= 0 {
        return Err(Error::InvalidArgument(format!("m = {m}, need m > 0")));
    }
    if gcd(ell.unsigned_abs(), m as u64) != 1 {
        return Err(Error::NotCoprime { ell, m });
    }
    let target = ell as f64 / m as f64;
    let hit = detect_resonances(branch, m)
        .into_iter()
        .find(|h| h.ell == ell && h.m == m)
        .ok_or(Error::NoBracket { target })?;
    let (a, b) = bracket_orbits(branch, hit.lo, hit.hi);
    let stop = StopPredicate::RatioReaches(target);
    let orbit = locate_on_segment(a, b, cs, &monitor_ratio, target, &stop, settings)?;
    let got = orbit.monitors().ratio;
    if (got - target).abs() > 1e-10 {
        return Err(Error::RatioMismatch {
            ell,
            m,
            found: got,
            delta: (got - target).abs(),
        });
    }
    Ok(orbit)
}

/// Locate the branch point with amplitude parameter `a = target` exactly.
pub fn locate_amplitude(
    branch: &Branch,
    cs: &ConstraintSet,
    settings: &ContinuationSettings,
    target: f64,
) -> Result<RotatingOrbit> {
    let hit = branch
        .points
        .windows(2)
        .position(|w| {
            (w[0].monitors.a - target) * (w[1].monitors.a - target) <= 0.0
        })
        .ok_or(Error::NoBracket { target })?;
    let (a, b) = bracket_orbits(branch, hit, hit + 1);
    let stop = StopPredicate::AmplitudeReaches(target);
    locate_on_segment(a, b, cs, &monitor_amp, target, &stop, settings)
}

/// Continue a located resonant orbit with the ratio locked at `ℓ/m` and the
/// amplitude free: the choreography continuum of that resonance.
pub fn lock_ratio_continue(
    start: &RotatingOrbit,
    ell: i64,
    m: i64,
    settings: &ContinuationSettings,
) -> Result<Branch> {
    if m <= 0 {
        return Err(Error::InvalidArgument(format!("m = {m}, need m > 0")));
    }
    if gcd(ell.unsigned_abs(), m as u64) != 1 {
        return Err(Error::NotCoprime { ell, m });
    }
    let target = ell as f64 / m as f64;
    let got = start.monitors().ratio;
    if (got - target).abs() > 1e-10 {
        return Err(Error::RatioMismatch {
            ell,
            m,
            found: got,
            delta: (got - target).abs(),
        });
    }
    let cs = ConstraintSet::basic(&[
        FreeParam::Period,
        FreeParam::Amplitude,
        FreeParam::P1,
        FreeParam::P2,
    ])
    .with_ratio(Target::Fixed(target));
    continue_branch(start, &cs, settings, "lock")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::StabilityClass;

    fn synthetic_branch(ratios: &[f64]) -> Branch {
        // monitor-only branch for detection tests
        let params = crate::lattice::LatticeParams::from_dispersion(3, 0.3, 3).unwrap();
        let eq = crate::lattice::polygonal_equilibrium(3, 0.3, 3).unwrap();
        let orbit = RotatingOrbit::constant(params, &eq, 2, 1, 1.0).unwrap();
        let points = ratios
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut p = BranchPoint::new(orbit.clone(), i as f64);
                p.monitors.ratio = *r;
                p
            })
            .collect();
        Branch {
            points,
            constraint_stage: "synthetic".into(),
            status: BranchStatus::MaxSteps,
        }
    }

    #[test]
    fn detects_simple_crossings() {
        let b = synthetic_branch(&[0.09, 0.11]);
        let hits = detect_resonances(&b, 10);
        assert!(hits.iter().any(|h| h.ell == 1 && h.m == 10));

        let b = synthetic_branch(&[0.15, 0.15, 0.15]);
        assert!(detect_resonances(&b, 32).is_empty() || detect_resonances(&b, 32).iter().all(|h| (h.ell as f64 / h.m as f64 - 0.15).abs() < 1e-12));

        let b = synthetic_branch(&[22.9, 23.1]);
        let hits = detect_resonances(&b, 1);
        assert!(hits.iter().any(|h| h.ell == 23 && h.m == 1));

        // negative ratios carry signed numerators
        let b = synthetic_branch(&[-0.93, -0.85]);
        let hits = detect_resonances(&b, 9);
        assert!(hits.iter().any(|h| h.ell == -8 && h.m == 9));
    }

    #[test]
    fn farey_enumeration_density() {
        // Farey counting: roughly (3/π²) w M² fractions of denominator ≤ M in
        // an interval of width w
        let (lo, hi) = (0.30, 0.45);
        for m in [8i64, 12, 16] {
            let hits = farey_fractions_in(lo, hi, m);
            let w = hi - lo;
            let expect = (w * (m * m) as f64 * 3.0 / std::f64::consts::PI.powi(2)).floor() as usize / 2;
            assert!(
                hits.len() >= expect,
                "only {} fractions with m ≤ {m}, expected ≥ {expect}",
                hits.len()
            );
            // all in lowest terms, sorted, within range
            for win in hits.windows(2) {
                assert!(
                    (win[0].0 as f64 / win[0].1 as f64) <= (win[1].0 as f64 / win[1].1 as f64)
                );
            }
            for (ell, den) in &hits {
                assert_eq!(gcd(ell.unsigned_abs(), den.unsigned_abs()), 1);
                let v = *ell as f64 / *den as f64;
                assert!(v >= lo && v <= hi);
            }
        }
    }

    #[test]
    fn stability_summary_is_optional_payload() {
        let b = synthetic_branch(&[0.1]);
        assert!(b.points[0].monitors.stability.is_none());
        let mut b = b;
        b.points[0].monitors.stability = Some(StabilitySummary {
            n_unstable: 0,
            class: StabilityClass::Stable,
        });
        assert!(b.points[0].monitors.stability.is_some());
    }
}
