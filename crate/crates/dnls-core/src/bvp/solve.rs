//! Bordered block elimination and the Newton driver.
//!
//! The collocation Jacobian is almost block diagonal: the equations of mesh
//! interval `j` couple only that interval's points and the free parameters.
//! Taking `v₀ = P₀` and the free parameters as border columns, and the
//! periodicity conditions, scalar constraints, and arclength row as border
//! rows, the remaining core is block bidiagonal with square diagonal blocks
//! of size `m·2n`. One forward elimination per Newton step expresses every
//! interior unknown through the border, leaving a small dense bordered
//! system; back-substitution recovers the full update in `O(N)` work.

use nalgebra::{DMatrix, DVector};

use super::constraints::ConstraintSet;
use super::orbit::RotatingOrbit;
use super::system::{
    assemble_border, assemble_interval, assemble_residual_with, add_param, Layout,
    LinearScalarEq, TrackedTargets,
};
use crate::{Error, Result};

/// Result bookkeeping of a Newton solve.
#[derive(Debug, Clone, Copy)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
}

/// One Newton update in structured form.
struct NewtonDelta {
    points: Vec<DVector<f64>>,
    params: Vec<f64>,
}

fn newton_step(
    orbit: &RotatingOrbit,
    tracked: &TrackedTargets,
    cs: &ConstraintSet,
    extra: Option<&LinearScalarEq>,
) -> Result<NewtonDelta> {
    let lay = Layout::new(orbit, cs, extra.is_some());
    if lay.b_r != lay.b_c {
        return Err(Error::UnbalancedConstraints {
            stage: "newton".into(),
            detail: format!("border {}x{} not square", lay.b_r, lay.b_c),
        });
    }
    let basis = orbit.basis();
    let (dim, m) = (lay.dim, lay.m);
    let block = m * dim;

    let border = assemble_border(orbit, tracked, cs, extra, &lay, &basis)?;

    // forward elimination: express each group through the border unknowns
    let mut s_total = DMatrix::zeros(lay.b_r, lay.b_c);
    s_total.view_mut((0, 0), (lay.b_r, dim)).copy_from(&border.on_v0);
    s_total
        .view_mut((0, dim), (lay.b_r, lay.n_q))
        .copy_from(&border.on_q);
    let mut rhs_b = -border.values.clone();

    // v_j = c_j + V_j x_b
    let mut c_prev = DVector::zeros(dim);
    let mut v_prev = DMatrix::zeros(dim, lay.b_c);
    for r in 0..dim {
        v_prev[(r, r)] = 1.0; // v₀ is itself part of the border
    }

    let mut phis: Vec<DVector<f64>> = Vec::with_capacity(lay.n_int);
    let mut gammas: Vec<DMatrix<f64>> = Vec::with_capacity(lay.n_int);

    for j in 0..lay.n_int {
        let ib = assemble_interval(orbit, cs, &lay, &basis, j, true)?;
        // right-hand sides: [ −(f + A c_prev) | −(A V_prev + C_border) ]
        let mut rhs = DMatrix::zeros(block, 1 + lay.b_c);
        let ac = &ib.a * &c_prev;
        for r in 0..block {
            rhs[(r, 0)] = -(ib.f[r] + ac[r]);
        }
        let av = &ib.a * &v_prev;
        for r in 0..block {
            for cc in 0..lay.b_c {
                let mut v = -av[(r, cc)];
                if cc >= dim {
                    v -= ib.c[(r, cc - dim)];
                }
                rhs[(r, cc + 1)] = v;
            }
        }
        let lu = ib.b.clone().lu();
        let sol = lu.solve(&rhs).ok_or(Error::SingularJacobian {
            detail: format!("collocation block of interval {j}"),
        })?;
        if sol.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularJacobian {
                detail: format!("non-finite elimination at interval {j}"),
            });
        }
        let phi = sol.column(0).into_owned();
        let gamma = sol.columns(1, lay.b_c).into_owned();

        // border-row accumulation
        let rg = &border.on_group[j];
        s_total += rg * &gamma;
        rhs_b -= rg * &phi;

        // recursion to the next interval's left endpoint
        c_prev = phi.rows((m - 1) * dim, dim).into_owned();
        v_prev = gamma.rows((m - 1) * dim, dim).into_owned();

        phis.push(phi);
        gammas.push(gamma);
    }

    let lu = s_total.lu();
    let xb = lu.solve(&rhs_b).ok_or(Error::SingularJacobian {
        detail: "bordered system".into(),
    })?;
    if xb.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularJacobian {
            detail: "non-finite bordered solve".into(),
        });
    }

    // back substitution
    let n_pts = orbit.n_points();
    let mut points = vec![DVector::zeros(dim); n_pts];
    points[0] = xb.rows(0, dim).into_owned();
    for j in 0..lay.n_int {
        let g = &phis[j] + &gammas[j] * &xb;
        for i in 1..=m {
            points[j * m + i] = g.rows((i - 1) * dim, dim).into_owned();
        }
    }
    let params = (0..lay.n_q).map(|q| xb[dim + q]).collect();
    Ok(NewtonDelta { points, params })
}

fn apply_delta(
    orbit: &mut RotatingOrbit,
    tracked: &mut TrackedTargets,
    cs: &ConstraintSet,
    delta: &NewtonDelta,
    damping: f64,
) {
    for (p, d) in orbit.points.iter_mut().zip(delta.points.iter()) {
        p.axpy(damping, d, 1.0);
    }
    for (q, p) in cs.free.iter().enumerate() {
        add_param(orbit, tracked, *p, damping * delta.params[q]);
    }
}

/// Newton-solve the collocation system.
///
/// Without `extra` the constraint set must be square (as many free parameters
/// as scalar constraints). With `extra` (the pseudo-arclength closure) it must
/// carry one additional free parameter. Full steps with one halving retry per
/// iteration; converged when the max-norm residual is at most `tol`.
pub fn newton_solve(
    orbit: &RotatingOrbit,
    cs: &ConstraintSet,
    extra: Option<&LinearScalarEq>,
    tol: f64,
    max_iter: usize,
) -> Result<(RotatingOrbit, NewtonReport)> {
    cs.validate(extra.is_some(), "newton_solve")?;
    let mut work = orbit.clone();
    let mut tracked = TrackedTargets::from_orbit(&work);
    let mut res = assemble_residual_with(&work, &tracked, cs, extra)?.amax();
    if res <= tol {
        return Ok((
            work,
            NewtonReport {
                iterations: 0,
                residual: res,
            },
        ));
    }
    for it in 1..=max_iter {
        let delta = newton_step(&work, &tracked, cs, extra)?;
        let mut trial = work.clone();
        let mut trial_tracked = tracked;
        apply_delta(&mut trial, &mut trial_tracked, cs, &delta, 1.0);
        let mut trial_res = if trial.t_period <= 0.0 {
            f64::INFINITY
        } else {
            assemble_residual_with(&trial, &trial_tracked, cs, extra)?.amax()
        };
        if !trial_res.is_finite() || (trial_res > res && res > 10.0 * tol) {
            // one halved retry
            let mut half = work.clone();
            let mut half_tracked = tracked;
            apply_delta(&mut half, &mut half_tracked, cs, &delta, 0.5);
            let half_res = if half.t_period <= 0.0 {
                f64::INFINITY
            } else {
                assemble_residual_with(&half, &half_tracked, cs, extra)?.amax()
            };
            if half_res < trial_res {
                trial = half;
                trial_tracked = half_tracked;
                trial_res = half_res;
            }
        }
        work = trial;
        tracked = trial_tracked;
        res = trial_res;
        if !res.is_finite() {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: res,
            });
        }
        if res <= tol {
            work.xn0 = work.points[0][2 * (work.params.n - 1)];
            return Ok((
                work,
                NewtonReport {
                    iterations: it,
                    residual: res,
                },
            ));
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: res,
    })
}

/// Tangent of the solution branch at a converged point: the null direction of
/// the continuation Jacobian, normalized so the component of `primary` is 1.
/// Returned as (point part, parameter part aligned with the free list).
pub fn branch_tangent(
    orbit: &RotatingOrbit,
    cs: &ConstraintSet,
    primary: super::constraints::FreeParam,
) -> Result<(Vec<DVector<f64>>, Vec<f64>)> {
    cs.validate(true, "tangent")?;
    let qi = cs
        .free
        .iter()
        .position(|p| *p == primary)
        .ok_or_else(|| Error::InvalidArgument(format!("{primary:?} is not free")))?;
    let tracked = TrackedTargets::from_orbit(orbit);
    let n_pts = orbit.n_points();
    let mut w_params = vec![0.0; cs.free.len()];
    w_params[qi] = 1.0;
    // at a converged point the step against this row solves J τ = e_last,
    // i.e. the branch tangent with τ_primary = 1
    let row = LinearScalarEq {
        w_points: vec![DVector::zeros(orbit.dim()); n_pts],
        w_params,
        rhs: super::system::get_param(orbit, &tracked, primary) + 1.0,
    };
    let delta = newton_step(orbit, &tracked, cs, Some(&row))?;
    Ok((delta.points, delta.params))
}

/// Per-interval transfer matrices of the linearized (variational) flow on the
/// converged orbit: `δv_{j+1} = T_j δv_j`. Their ordered product is the
/// monodromy matrix of the scaled period.
pub fn transfer_matrices(orbit: &RotatingOrbit) -> Result<Vec<DMatrix<f64>>> {
    // free-parameter list is irrelevant here; use an empty border
    let cs = ConstraintSet::basic(&[
        super::constraints::FreeParam::P1,
        super::constraints::FreeParam::P2,
    ]);
    let lay = Layout::new(orbit, &cs, false);
    let basis = orbit.basis();
    let (dim, m) = (lay.dim, lay.m);
    let mut out = Vec::with_capacity(lay.n_int);
    for j in 0..lay.n_int {
        let ib = assemble_interval(orbit, &cs, &lay, &basis, j, true)?;
        let lu = ib.b.clone().lu();
        let x = lu.solve(&ib.a).ok_or(Error::SingularJacobian {
            detail: format!("variational block of interval {j}"),
        })?;
        out.push(-x.rows((m - 1) * dim, dim).into_owned());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvp::constraints::{FreeParam, Target};
    use crate::lattice::LatticeParams;
    use crate::spectral::{lyapunov_starter, normal_modes};

    fn starter_problem(n: usize, a: f64, eps: f64) -> (RotatingOrbit, ConstraintSet) {
        let p = LatticeParams::from_dispersion(n, a, 1).unwrap();
        let spec = normal_modes(&p).unwrap();
        let k = spec.admissible_ks()[0];
        let orbit = lyapunov_starter(&p, k, eps, 20, 4).unwrap();
        let cs = ConstraintSet::basic(&[FreeParam::Period, FreeParam::P1, FreeParam::P2])
            .with_pin(Target::Fixed(orbit.xn0));
        (orbit, cs)
    }

    #[test]
    fn starter_refinement_converges_quickly() {
        let (orbit, cs) = starter_problem(9, 0.55, 1e-4);
        let (refined, report) = newton_solve(&orbit, &cs, None, 1e-10, 10).unwrap();
        assert!(report.iterations <= 5, "took {} iterations", report.iterations);
        assert!(report.residual <= 1e-10);
        assert!(refined.p1.abs() <= 1e-8 && refined.p2.abs() <= 1e-8);
        // converged orbit returned unchanged in 0 iterations
        let (again, report2) = newton_solve(&refined, &cs, None, 1e-9, 10).unwrap();
        assert_eq!(report2.iterations, 0);
        assert!(again.point_distance(&refined) == 0.0);
    }

    #[test]
    fn structured_and_dense_solvers_agree() {
        // n=3 admissible modes need α=n (the inequality's denominator is
        // negative at α=1 for n=3)
        let p = LatticeParams::from_dispersion(3, 0.3, 3).unwrap();
        let spec = normal_modes(&p).unwrap();
        let k = spec.admissible_ks()[0];
        let orbit = lyapunov_starter(&p, k, 1e-2, 6, 3).unwrap();
        let cs = ConstraintSet::basic(&[FreeParam::Period, FreeParam::P1, FreeParam::P2])
            .with_pin(Target::Fixed(orbit.xn0));
        let tracked = TrackedTargets::from_orbit(&orbit);

        let delta = newton_step(&orbit, &tracked, &cs, None).unwrap();

        let jac = super::super::system::assemble_dense_jacobian(&orbit, &tracked, &cs, None).unwrap();
        let f = assemble_residual_with(&orbit, &tracked, &cs, None).unwrap();
        let dense = jac.lu().solve(&(-f)).unwrap();

        let dim = orbit.dim();
        for (pidx, dp) in delta.points.iter().enumerate() {
            for c in 0..dim {
                let want = dense[pidx * dim + c];
                assert!(
                    (dp[c] - want).abs() <= 1e-9 * (1.0 + want.abs()),
                    "point {pidx} comp {c}"
                );
            }
        }
        let q0 = orbit.n_points() * dim;
        for (q, dq) in delta.params.iter().enumerate() {
            let want = dense[q0 + q];
            assert!((dq - want).abs() <= 1e-9 * (1.0 + want.abs()), "param {q}");
        }
    }

    #[test]
    fn unbalanced_sets_are_rejected() {
        let (orbit, _) = starter_problem(9, 0.55, 1e-4);
        let cs = ConstraintSet::basic(&[
            FreeParam::Period,
            FreeParam::Xn0,
            FreeParam::P1,
            FreeParam::P2,
        ])
        .with_pin(Target::Tracked);
        // continuation-balanced set used without the arclength row
        assert!(matches!(
            newton_solve(&orbit, &cs, None, 1e-10, 5),
            Err(Error::UnbalancedConstraints { .. })
        ));
    }
}
