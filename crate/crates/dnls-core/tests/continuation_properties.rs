//! Branch-level properties of the pseudo-arclength stepper on a small, fast
//! lattice (n = 3 with α = n, the smallest case with admissible modes).

use dnls_core::bvp::{assemble_residual, newton_solve, ConstraintSet, FreeParam, Target};
use dnls_core::continuation::{
    continue_branch, lock_ratio_continue, BranchStatus, ContinuationSettings, StopPredicate,
};
use dnls_core::io::branch_to_csv;
use dnls_core::lattice::{omega_of_a, LatticeParams};
use dnls_core::spectral::{lyapunov_starter, normal_modes};

fn small_start() -> (dnls_core::bvp::RotatingOrbit, ConstraintSet) {
    let p = LatticeParams::from_dispersion(3, 0.3, 3).unwrap();
    let spec = normal_modes(&p).unwrap();
    let k = spec.admissible_ks()[0];
    let starter = lyapunov_starter(&p, k, 1e-3 * 0.3, 16, 4).unwrap();
    let refine = ConstraintSet::basic(&[FreeParam::Period, FreeParam::P1, FreeParam::P2])
        .with_pin(Target::Fixed(starter.xn0));
    let (orbit, _) = newton_solve(&starter, &refine, None, 1e-11, 10).unwrap();
    let cs = ConstraintSet::basic(&[
        FreeParam::Period,
        FreeParam::Xn0,
        FreeParam::P1,
        FreeParam::P2,
    ])
    .with_pin(Target::Tracked);
    (orbit, cs)
}

#[test]
fn branch_points_remain_converged_and_monitors_consistent() {
    let (start, cs) = small_start();
    let mut settings = ContinuationSettings::new(FreeParam::Xn0, -1.0);
    settings.ds0 = 5e-4;
    settings.ds_max = 2e-3;
    settings.max_steps = 12;
    let branch = continue_branch(&start, &cs, &settings, "test").unwrap();
    assert!(branch.points.len() >= 10);
    for (i, p) in branch.points.iter().enumerate() {
        // no silent drift: every stored point satisfies the solve tolerance
        let res = assemble_residual(&p.orbit, &cs).unwrap().amax();
        assert!(res <= 1e-9, "point {i}: residual {res:.3e}");
        // monitor consistency against recomputation
        let mon = p.orbit.monitors();
        let t0 = std::f64::consts::TAU / omega_of_a(3, p.monitors.a, 3);
        assert!((p.monitors.t0 - t0).abs() <= 1e-10 * t0.abs());
        assert!((p.monitors.ratio - p.monitors.t_period / p.monitors.t0).abs() <= 1e-12);
        assert!((p.monitors.energy - mon.energy).abs() <= 1e-10);
        assert!((p.monitors.amplitude_norm - mon.amplitude_norm).abs() <= 1e-10);
        // unfolding parameters vanish at every converged point
        assert!(p.monitors.p1.abs() <= 1e-8 && p.monitors.p2.abs() <= 1e-8);
    }
}

#[test]
fn identical_settings_give_bit_identical_branches() {
    let (start, cs) = small_start();
    let mut settings = ContinuationSettings::new(FreeParam::Xn0, -1.0);
    settings.ds0 = 1e-3;
    settings.max_steps = 8;
    let b1 = continue_branch(&start, &cs, &settings, "det").unwrap();
    let b2 = continue_branch(&start, &cs, &settings, "det").unwrap();
    assert_eq!(branch_to_csv(&b1), branch_to_csv(&b2));
}

#[test]
fn reversing_direction_retraces_the_branch() {
    // non-degenerate Lyapunov family (n = 5, α = 1, distinct frequencies);
    // fixed small step, retrace offset scales with curvature × ds²
    let p = LatticeParams::from_dispersion(5, 0.3, 1).unwrap();
    let spec = normal_modes(&p).unwrap();
    let k = spec.admissible_ks()[0];
    let starter = lyapunov_starter(&p, k, 1e-3 * 0.3, 16, 4).unwrap();
    let refine = ConstraintSet::basic(&[FreeParam::Period, FreeParam::P1, FreeParam::P2])
        .with_pin(Target::Fixed(starter.xn0));
    let (start, _) = newton_solve(&starter, &refine, None, 1e-12, 12).unwrap();
    let cs = ConstraintSet::basic(&[
        FreeParam::Period,
        FreeParam::Xn0,
        FreeParam::P1,
        FreeParam::P2,
    ])
    .with_pin(Target::Tracked);

    let mut settings = ContinuationSettings::new(FreeParam::Xn0, -1.0);
    settings.ds0 = 1e-5;
    settings.ds_min = 1e-5;
    settings.ds_max = 1e-5;
    settings.max_steps = 5;
    settings.tol = 1e-12;
    let fwd = continue_branch(&start, &cs, &settings, "fwd").unwrap();
    assert_eq!(fwd.points.len(), 6);

    let mut back = settings.clone();
    back.direction = 1.0;
    let rev = continue_branch(&fwd.last().orbit, &cs, &back, "rev").unwrap();
    assert_eq!(rev.points.len(), 6);
    for i in 0..6 {
        let a = &fwd.points[5 - i].orbit;
        let b = &rev.points[i].orbit;
        assert!(
            a.point_distance(b) <= 1e-8,
            "retrace point {i} differs by {:.3e}",
            a.point_distance(b)
        );
        assert!((a.t_period - b.t_period).abs() <= 1e-8);
    }
}

#[test]
fn stop_predicate_lands_exactly_on_target() {
    let (start, cs) = small_start();
    let target = start.xn0 - 2e-3;
    let mut settings = ContinuationSettings::new(FreeParam::Xn0, -1.0);
    settings.ds0 = 1e-3;
    settings.max_steps = 200;
    settings.stop = vec![StopPredicate::Xn0Reaches(target)];
    let branch = continue_branch(&start, &cs, &settings, "land").unwrap();
    assert!(matches!(branch.status, BranchStatus::StopHit(_)));
    let landed = branch.last();
    assert!(
        (landed.monitors.xn0 - target).abs() <= 1e-8,
        "landed at {} vs {target}",
        landed.monitors.xn0
    );
}

#[test]
fn locking_at_start_keeps_the_first_point() {
    // build a resonant-ish orbit by landing on a rational ratio first
    let (start, cs) = small_start();
    let r0 = start.monitors().ratio;
    let target = find_nearby_rational(r0);
    let mut settings = ContinuationSettings::new(FreeParam::Xn0, -1.0);
    settings.ds0 = 1e-3;
    settings.max_steps = 400;
    settings.stop = vec![StopPredicate::RatioReaches(target.0 as f64 / target.1 as f64)];
    let branch = continue_branch(&start, &cs, &settings, "to-ratio").unwrap();
    assert!(
        matches!(branch.status, BranchStatus::StopHit(_)),
        "no rational crossing found near ratio {r0}"
    );
    let located = branch.last().orbit.clone();

    let mut lock = ContinuationSettings::new(FreeParam::Amplitude, 1.0);
    lock.ds0 = 1e-3;
    lock.max_steps = 3;
    let locked = lock_ratio_continue(&located, target.0, target.1, &lock).unwrap();
    assert!(locked.points[0].orbit.point_distance(&located) == 0.0);
    for p in &locked.points {
        assert!(
            (p.monitors.ratio - target.0 as f64 / target.1 as f64).abs() <= 1e-9,
            "ratio drifted to {}",
            p.monitors.ratio
        );
    }
}

fn find_nearby_rational(r0: f64) -> (i64, i64) {
    // nearest fraction just above r0: the family's ratio rises from the
    // starter, so a short continuation brackets it
    let mut best = (0i64, 1i64);
    let mut gap = f64::INFINITY;
    for m in 1..=64i64 {
        let ell = (r0 * m as f64).ceil() as i64;
        if dnls_core::continuation::gcd(ell.unsigned_abs(), m as u64) != 1 {
            continue;
        }
        let g = ell as f64 / m as f64 - r0;
        if g > 1e-5 && g < gap {
            gap = g;
            best = (ell, m);
        }
    }
    best
}

#[test]
fn collocation_convergence_order() {
    // Defect against a tight integration oracle: solve the same orbit on
    // meshes N and 2N, integrate from each solution's own u(0), and compare
    // at 1000 uniform scaled times. The observed order sits between degree+1
    // (interior interpolation) and 2·degree (mesh-point superconvergence).
    use dnls_core::integrate::dopri5;
    use dnls_core::lattice::{vector_field, State};

    let degree = 3usize;
    let p = LatticeParams::from_dispersion(3, 0.3, 3).unwrap();
    let spec = normal_modes(&p).unwrap();
    let k = spec.admissible_ks()[0];
    // amplitude far enough from the equilibrium that the defect dominates roundoff
    let starter = lyapunov_starter(&p, k, 0.05, 24, degree).unwrap();
    let refine = ConstraintSet::basic(&[FreeParam::Period, FreeParam::P1, FreeParam::P2])
        .with_pin(Target::Fixed(starter.xn0));
    let (fine, _) = newton_solve(&starter, &refine, None, 1e-12, 14).unwrap();

    let defect = |n_int: usize| -> f64 {
        let coarse = fine.reinterpolate(
            &(0..=n_int).map(|i| i as f64 / n_int as f64).collect::<Vec<_>>(),
        )
        .unwrap();
        let coarse = {
            let mut o = coarse;
            o.mesh = (0..=n_int).map(|i| i as f64 / n_int as f64).collect();
            let (solved, _) = newton_solve(&o, &refine, None, 1e-13, 14).unwrap();
            solved
        };
        let f = |_t: f64, y: &nalgebra::DVector<f64>| vector_field(&State(y.clone()), &p).0;
        let mut worst: f64 = 0.0;
        let mut y = coarse.points[0].clone();
        let mut t_prev = 0.0;
        for i in 1..=1000 {
            let t = i as f64 / 1000.0;
            y = dopri5(&f, t_prev * coarse.t_period, t * coarse.t_period, y, 1e-13, 1e-13).unwrap();
            t_prev = t;
            let u = coarse.evaluate(t).unwrap();
            worst = worst.max((u.0 - y.clone()).amax());
        }
        worst
    };
    let e1 = defect(6);
    let e2 = defect(12);
    let order = (e1 / e2).log2();
    assert!(
        order >= degree as f64 + 0.5 && order <= 2.0 * degree as f64 + 0.5,
        "measured order {order:.2} (defects {e1:.3e} → {e2:.3e})"
    );
}
