//! Residual and Jacobian assembly of the collocation system.
//!
//! Unknowns: the stored point values (`N·m + 1` vectors of dimension `2n`)
//! plus the free parameters. Equations: `m` collocation conditions per
//! interval (at the Gauss points), the `2n` periodicity conditions, the
//! active scalar constraints, and optionally one extra linear equation
//! (the pseudo-arclength closure).

use nalgebra::{DMatrix, DVector};

use super::basis::Basis;
use super::constraints::{ConstraintSet, EnergyConvention, FreeParam, PhaseCondition, Target};
use super::orbit::RotatingOrbit;
use crate::lattice::{extended_rhs, jac_extended_rhs, State};
use crate::{Error, Result};

/// One extra linear scalar equation
/// `Σ_p w_points[p] · X_p + Σ_q w_params[q] · q − rhs = 0`
/// appended to the system (used for the pseudo-arclength closure).
#[derive(Debug, Clone)]
pub struct LinearScalarEq {
    pub w_points: Vec<DVector<f64>>,
    /// Aligned with the canonical order of the constraint set's free list.
    pub w_params: Vec<f64>,
    pub rhs: f64,
}

/// Current values of tracked constraint targets (they are unknowns of the
/// solve; `x_n⁰` is tracked on the orbit itself).
#[derive(Debug, Clone, Copy)]
pub struct TrackedTargets {
    pub energy: f64,
    pub norm: f64,
    pub ratio: f64,
}

impl TrackedTargets {
    pub fn from_orbit(orbit: &RotatingOrbit) -> Self {
        let mon = orbit.monitors();
        TrackedTargets {
            energy: energy_expression_at_zero(orbit),
            norm: mon.amplitude_norm,
            ratio: mon.ratio,
        }
    }
}

pub(crate) fn get_param(orbit: &RotatingOrbit, tr: &TrackedTargets, p: FreeParam) -> f64 {
    match p {
        FreeParam::Period => orbit.t_period,
        FreeParam::Amplitude => orbit.params.a,
        FreeParam::Xn0 => orbit.xn0,
        FreeParam::Energy => tr.energy,
        FreeParam::Norm => tr.norm,
        FreeParam::Ratio => tr.ratio,
        FreeParam::P1 => orbit.p1,
        FreeParam::P2 => orbit.p2,
    }
}

pub(crate) fn add_param(orbit: &mut RotatingOrbit, tr: &mut TrackedTargets, p: FreeParam, dv: f64) {
    match p {
        FreeParam::Period => orbit.t_period += dv,
        FreeParam::Amplitude => {
            let a = orbit.params.a + dv;
            orbit.params = orbit.params.at_amplitude(a);
        }
        FreeParam::Xn0 => orbit.xn0 += dv,
        FreeParam::Energy => tr.energy += dv,
        FreeParam::Norm => tr.norm += dv,
        FreeParam::Ratio => tr.ratio += dv,
        FreeParam::P1 => orbit.p1 += dv,
        FreeParam::P2 => orbit.p2 += dv,
    }
}

/// `Σ_k |u_k − u_{k+1}|² − |u_k|⁴ − ω|u_k|²` at a state.
pub(crate) fn energy_expression(u: &DVector<f64>, n: usize, omega: f64) -> f64 {
    let mut e = 0.0;
    for k in 0..n {
        let kp = (k + 1) % n;
        let dx = u[2 * k] - u[2 * kp];
        let dy = u[2 * k + 1] - u[2 * kp + 1];
        let nk = u[2 * k] * u[2 * k] + u[2 * k + 1] * u[2 * k + 1];
        e += dx * dx + dy * dy - nk * nk - omega * nk;
    }
    e
}

/// Gradient of [`energy_expression`] with respect to the state; the second
/// return value is `∂/∂a` through `ω(a)` (`ω' = −2a`).
fn energy_expression_grad(u: &DVector<f64>, n: usize, omega: f64, a: f64) -> (DVector<f64>, f64) {
    let mut g = DVector::zeros(2 * n);
    let mut sum_nk = 0.0;
    for k in 0..n {
        let kp = (k + 1) % n;
        let km = (k + n - 1) % n;
        let x = u[2 * k];
        let y = u[2 * k + 1];
        let nk = x * x + y * y;
        sum_nk += nk;
        g[2 * k] = 2.0 * (2.0 * x - u[2 * kp] - u[2 * km]) - 4.0 * nk * x - 2.0 * omega * x;
        g[2 * k + 1] =
            2.0 * (2.0 * y - u[2 * kp + 1] - u[2 * km + 1]) - 4.0 * nk * y - 2.0 * omega * y;
    }
    (g, 2.0 * a * sum_nk)
}

/// The energy expression of the fixing constraint, summed over sites
/// at `t = 0`.
pub fn energy_expression_at_zero(orbit: &RotatingOrbit) -> f64 {
    energy_expression(&orbit.points[0], orbit.params.n, orbit.params.omega)
}

/// Index bookkeeping shared by the assembly passes.
pub(crate) struct Layout {
    pub n: usize,
    pub dim: usize,
    pub m: usize,
    pub n_int: usize,
    pub n_q: usize,
    /// border rows: dim (periodicity) + scalar constraints + extra
    pub b_r: usize,
    /// border columns: dim (v₀) + n_q
    pub b_c: usize,
}

impl Layout {
    pub fn new(orbit: &RotatingOrbit, cs: &ConstraintSet, with_extra: bool) -> Self {
        let dim = orbit.dim();
        let n_q = cs.free.len();
        let n_c = cs.n_scalar_constraints();
        Layout {
            n: orbit.params.n,
            dim,
            m: orbit.degree,
            n_int: orbit.mesh_intervals(),
            n_q,
            b_r: dim + n_c + usize::from(with_extra),
            b_c: dim + n_q,
        }
    }

    pub fn total_rows(&self) -> usize {
        self.n_int * self.m * self.dim + self.b_r
    }

    #[cfg(test)]
    pub fn total_cols(&self) -> usize {
        (self.n_int * self.m + 1) * self.dim + self.n_q
    }
}

/// Border-row data: coefficients of the periodicity conditions, scalar
/// constraints, and the optional extra equation, organised per mesh interval.
pub(crate) struct BorderRows {
    /// per-interval coefficients on the group unknowns (local points 1..=m)
    pub on_group: Vec<DMatrix<f64>>,
    /// coefficients on `v₀ = P₀`
    pub on_v0: DMatrix<f64>,
    /// coefficients on the free parameters
    pub on_q: DMatrix<f64>,
    /// residual values of the border equations
    pub values: DVector<f64>,
}

pub(crate) struct BorderAssembler<'a> {
    lay: &'a Layout,
    pub rows: BorderRows,
}

impl<'a> BorderAssembler<'a> {
    fn new(lay: &'a Layout) -> Self {
        BorderAssembler {
            lay,
            rows: BorderRows {
                on_group: (0..lay.n_int)
                    .map(|_| DMatrix::zeros(lay.b_r, lay.m * lay.dim))
                    .collect(),
                on_v0: DMatrix::zeros(lay.b_r, lay.dim),
                on_q: DMatrix::zeros(lay.b_r, lay.n_q),
                values: DVector::zeros(lay.b_r),
            },
        }
    }

    /// Add a gradient entry on global point `p`, component `c`.
    fn add_point(&mut self, row: usize, p: usize, c: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        let m = self.lay.m;
        if p == 0 {
            self.rows.on_v0[(row, c)] += v;
        } else if p % m == 0 {
            let group = p / m - 1;
            self.rows.on_group[group][(row, (m - 1) * self.lay.dim + c)] += v;
        } else {
            let group = p / m;
            let i = p % m;
            self.rows.on_group[group][(row, (i - 1) * self.lay.dim + c)] += v;
        }
    }
}

/// Assemble all border rows (pass 1).
pub(crate) fn assemble_border(
    orbit: &RotatingOrbit,
    tracked: &TrackedTargets,
    cs: &ConstraintSet,
    extra: Option<&LinearScalarEq>,
    lay: &Layout,
    basis: &Basis,
) -> Result<BorderRows> {
    let mut asm = BorderAssembler::new(lay);
    let (n, dim, m) = (lay.n, lay.dim, lay.m);
    let n_pts = orbit.n_points();
    let ix_n = 2 * (n - 1);
    let iy_n = 2 * (n - 1) + 1;

    // periodicity rows 0..dim: P_last − P_0
    let last = n_pts - 1;
    for r in 0..dim {
        asm.add_point(r, last, r, 1.0);
        asm.rows.on_v0[(r, r)] -= 1.0;
        asm.rows.values[r] = orbit.points[last][r] - orbit.points[0][r];
    }

    let q_index = |p: FreeParam| cs.free.iter().position(|x| *x == p);
    let mut row = dim;

    // phase condition
    match &cs.phase {
        PhaseCondition::PointwiseYn0 => {
            asm.add_point(row, 0, iy_n, 1.0);
            asm.rows.values[row] = orbit.points[0][iy_n];
        }
        PhaseCondition::Integral { reference } => {
            if reference.mesh.len() != orbit.mesh.len()
                || reference.degree != orbit.degree
                || reference.n_points() != n_pts
            {
                return Err(Error::InvalidArgument(
                    "integral phase reference must share mesh and degree".into(),
                ));
            }
            let mut value = 0.0;
            for j in 0..lay.n_int {
                let h = orbit.mesh[j + 1] - orbit.mesh[j];
                for l in 0..m {
                    // reference derivative at the collocation point
                    let mut xd = 0.0;
                    let mut yd = 0.0;
                    let mut xc = 0.0;
                    let mut yc = 0.0;
                    for i in 0..=m {
                        let pref = &reference.points[j * m + i];
                        let pcur = &orbit.points[j * m + i];
                        xd += basis.deriv[l][i] / h * pref[ix_n];
                        yd += basis.deriv[l][i] / h * pref[iy_n];
                        xc += basis.eval[l][i] * pcur[ix_n];
                        yc += basis.eval[l][i] * pcur[iy_n];
                    }
                    let wq = h * basis.gauss_w[l];
                    value += wq * (xc * xd + yc * yd);
                    for i in 0..=m {
                        let g = wq * basis.eval[l][i];
                        asm.add_point(row, j * m + i, ix_n, g * xd);
                        asm.add_point(row, j * m + i, iy_n, g * yd);
                    }
                }
            }
            asm.rows.values[row] = value;
        }
    }
    row += 1;

    // rotation lock ∫ y_n dt = 0
    if cs.rotation_lock {
        let w = orbit.point_weights();
        let mut value = 0.0;
        for p in 0..n_pts {
            asm.add_point(row, p, iy_n, w[p]);
            value += w[p] * orbit.points[p][iy_n];
        }
        asm.rows.values[row] = value;
        row += 1;
    }

    // pin x_n(0)
    if let Some(target) = &cs.pin_xn0 {
        asm.add_point(row, 0, ix_n, 1.0);
        let tv = match target {
            Target::Fixed(v) => *v,
            Target::Tracked => {
                let q = q_index(FreeParam::Xn0).expect("validated");
                asm.rows.on_q[(row, q)] = -1.0;
                orbit.xn0
            }
        };
        asm.rows.values[row] = orbit.points[0][ix_n] - tv;
        row += 1;
    }

    // energy expression constraint
    if let Some(target) = &cs.fix_energy {
        let tv = match target {
            Target::Fixed(v) => *v,
            Target::Tracked => {
                let q = q_index(FreeParam::Energy).expect("validated");
                asm.rows.on_q[(row, q)] = -1.0;
                tracked.energy
            }
        };
        match cs.energy_convention {
            EnergyConvention::AtZero => {
                let (g, da) =
                    energy_expression_grad(&orbit.points[0], n, orbit.params.omega, orbit.params.a);
                for c in 0..dim {
                    asm.add_point(row, 0, c, g[c]);
                }
                if let Some(q) = q_index(FreeParam::Amplitude) {
                    asm.rows.on_q[(row, q)] += da;
                }
                asm.rows.values[row] =
                    energy_expression(&orbit.points[0], n, orbit.params.omega) - tv;
            }
            EnergyConvention::TimeAveraged => {
                let mut value = 0.0;
                let mut da_total = 0.0;
                for j in 0..lay.n_int {
                    let h = orbit.mesh[j + 1] - orbit.mesh[j];
                    for l in 0..m {
                        let mut u = DVector::zeros(dim);
                        for i in 0..=m {
                            u.axpy(basis.eval[l][i], &orbit.points[j * m + i], 1.0);
                        }
                        let wq = h * basis.gauss_w[l];
                        value += wq * energy_expression(&u, n, orbit.params.omega);
                        let (g, da) =
                            energy_expression_grad(&u, n, orbit.params.omega, orbit.params.a);
                        da_total += wq * da;
                        for i in 0..=m {
                            let s = wq * basis.eval[l][i];
                            for c in 0..dim {
                                asm.add_point(row, j * m + i, c, s * g[c]);
                            }
                        }
                    }
                }
                if let Some(q) = q_index(FreeParam::Amplitude) {
                    asm.rows.on_q[(row, q)] += da_total;
                }
                asm.rows.values[row] = value - tv;
            }
        }
        row += 1;
    }

    // amplitude-norm constraint at t = 0
    if let Some(target) = &cs.fix_norm {
        let tv = match target {
            Target::Fixed(v) => *v,
            Target::Tracked => {
                let q = q_index(FreeParam::Norm).expect("validated");
                asm.rows.on_q[(row, q)] = -1.0;
                tracked.norm
            }
        };
        let u0 = &orbit.points[0];
        let mut value = 0.0;
        for c in 0..dim {
            asm.add_point(row, 0, c, 2.0 * u0[c]);
        }
        for k in 0..n {
            value += u0[2 * k] * u0[2 * k] + u0[2 * k + 1] * u0[2 * k + 1];
        }
        asm.rows.values[row] = value - tv;
        row += 1;
    }

    // ratio constraint T ω(a) / 2π − r = 0
    if let Some(target) = &cs.fix_ratio {
        let tau = std::f64::consts::TAU;
        let tv = match target {
            Target::Fixed(v) => *v,
            Target::Tracked => {
                let q = q_index(FreeParam::Ratio).expect("validated");
                asm.rows.on_q[(row, q)] = -1.0;
                tracked.ratio
            }
        };
        if let Some(q) = q_index(FreeParam::Period) {
            asm.rows.on_q[(row, q)] += orbit.params.omega / tau;
        }
        if let Some(q) = q_index(FreeParam::Amplitude) {
            asm.rows.on_q[(row, q)] += orbit.t_period * (-2.0 * orbit.params.a) / tau;
        }
        asm.rows.values[row] = orbit.t_period * orbit.params.omega / tau - tv;
        row += 1;
    }

    // extra linear equation (arclength closure)
    if let Some(eq) = extra {
        if eq.w_points.len() != n_pts || eq.w_params.len() != lay.n_q {
            return Err(Error::InvalidArgument(
                "arclength row dimensions do not match the system".into(),
            ));
        }
        let mut value = -eq.rhs;
        for (p, w) in eq.w_points.iter().enumerate() {
            for c in 0..dim {
                asm.add_point(row, p, c, w[c]);
            }
            value += w.dot(&orbit.points[p]);
        }
        for (qi, (wq, p)) in eq.w_params.iter().zip(cs.free.iter()).enumerate() {
            asm.rows.on_q[(row, qi)] += wq;
            value += wq * get_param(orbit, tracked, *p);
        }
        asm.rows.values[row] = value;
        row += 1;
    }

    debug_assert_eq!(row, lay.b_r);
    Ok(asm.rows)
}

/// Collocation blocks of one mesh interval.
pub(crate) struct IntervalBlocks {
    /// rows × `dim`: coupling to the interval's left endpoint `v_j`
    pub a: DMatrix<f64>,
    /// rows × `m·dim`: coupling to the interval's remaining points
    pub b: DMatrix<f64>,
    /// rows × `n_q`: coupling to the free parameters
    pub c: DMatrix<f64>,
    /// residual values
    pub f: DVector<f64>,
}

/// Assemble the collocation equations of interval `j` (pass 2 building block).
pub(crate) fn assemble_interval(
    orbit: &RotatingOrbit,
    cs: &ConstraintSet,
    lay: &Layout,
    basis: &Basis,
    j: usize,
    with_jacobian: bool,
) -> Result<IntervalBlocks> {
    let (dim, m) = (lay.dim, lay.m);
    let h = orbit.mesh[j + 1] - orbit.mesh[j];
    let rows = m * dim;
    let mut a = DMatrix::zeros(if with_jacobian { rows } else { 0 }, if with_jacobian { dim } else { 0 });
    let mut b = DMatrix::zeros(if with_jacobian { rows } else { 0 }, if with_jacobian { m * dim } else { 0 });
    let mut c = DMatrix::zeros(if with_jacobian { rows } else { 0 }, if with_jacobian { lay.n_q } else { 0 });
    let mut f = DVector::zeros(rows);

    for l in 0..m {
        let mut u = DVector::zeros(dim);
        let mut du = DVector::zeros(dim);
        for i in 0..=m {
            let pt = &orbit.points[j * m + i];
            u.axpy(basis.eval[l][i], pt, 1.0);
            du.axpy(basis.deriv[l][i], pt, 1.0);
        }
        let state = State(u.clone());
        let rhs = extended_rhs(&state, orbit.t_period, &orbit.params, orbit.p1, orbit.p2)?;
        let r0 = l * dim;
        for rloc in 0..dim {
            f[r0 + rloc] = du[rloc] - h * rhs.0[rloc];
        }
        if with_jacobian {
            let jac = jac_extended_rhs(&state, orbit.t_period, &orbit.params, orbit.p1, orbit.p2);
            for i in 0..=m {
                let (w, d) = (basis.eval[l][i], basis.deriv[l][i]);
                // D δ − h W J δ
                let target_col = if i == 0 { None } else { Some((i - 1) * dim) };
                for rloc in 0..dim {
                    for cloc in 0..dim {
                        let val = if rloc == cloc { d } else { 0.0 } - h * w * jac.d_state[(rloc, cloc)];
                        if val != 0.0 {
                            match target_col {
                                None => a[(r0 + rloc, cloc)] += val,
                                Some(c0) => b[(r0 + rloc, c0 + cloc)] += val,
                            }
                        }
                    }
                }
            }
            for (qi, p) in cs.free.iter().enumerate() {
                let col = match p {
                    FreeParam::Period => Some(&jac.d_t),
                    FreeParam::Amplitude => Some(&jac.d_a),
                    FreeParam::P1 => Some(&jac.d_p1),
                    FreeParam::P2 => Some(&jac.d_p2),
                    _ => None,
                };
                if let Some(colv) = col {
                    for rloc in 0..dim {
                        c[(r0 + rloc, qi)] -= h * colv[rloc];
                    }
                }
            }
        }
    }
    Ok(IntervalBlocks { a, b, c, f })
}

/// The stacked residual of the full system: collocation equations, the
/// periodicity conditions, the active scalar constraints, and the optional
/// extra equation.
pub fn assemble_residual(orbit: &RotatingOrbit, cs: &ConstraintSet) -> Result<DVector<f64>> {
    let tracked = TrackedTargets::from_orbit(orbit);
    assemble_residual_with(orbit, &tracked, cs, None)
}

pub(crate) fn assemble_residual_with(
    orbit: &RotatingOrbit,
    tracked: &TrackedTargets,
    cs: &ConstraintSet,
    extra: Option<&LinearScalarEq>,
) -> Result<DVector<f64>> {
    let lay = Layout::new(orbit, cs, extra.is_some());
    let basis = orbit.basis();
    let mut out = DVector::zeros(lay.total_rows());
    let block = lay.m * lay.dim;
    for j in 0..lay.n_int {
        let ib = assemble_interval(orbit, cs, &lay, &basis, j, false)?;
        out.rows_mut(j * block, block).copy_from(&ib.f);
    }
    let border = assemble_border(orbit, tracked, cs, extra, &lay, &basis)?;
    out.rows_mut(lay.n_int * block, lay.b_r)
        .copy_from(&border.values);
    Ok(out)
}

/// Dense Jacobian of the full system; for small cross-check problems.
#[cfg(test)]
pub(crate) fn assemble_dense_jacobian(
    orbit: &RotatingOrbit,
    tracked: &TrackedTargets,
    cs: &ConstraintSet,
    extra: Option<&LinearScalarEq>,
) -> Result<DMatrix<f64>> {
    let lay = Layout::new(orbit, cs, extra.is_some());
    let basis = orbit.basis();
    let (dim, m) = (lay.dim, lay.m);
    let mut jac = DMatrix::zeros(lay.total_rows(), lay.total_cols());
    let q0 = (lay.n_int * m + 1) * dim;
    let block = m * dim;
    for j in 0..lay.n_int {
        let ib = assemble_interval(orbit, cs, &lay, &basis, j, true)?;
        let r0 = j * block;
        for r in 0..block {
            for cc in 0..dim {
                jac[(r0 + r, j * m * dim + cc)] += ib.a[(r, cc)];
            }
            for cc in 0..block {
                jac[(r0 + r, (j * m + 1) * dim + cc)] += ib.b[(r, cc)];
            }
            for q in 0..lay.n_q {
                jac[(r0 + r, q0 + q)] += ib.c[(r, q)];
            }
        }
    }
    let border = assemble_border(orbit, tracked, cs, extra, &lay, &basis)?;
    let br0 = lay.n_int * block;
    for r in 0..lay.b_r {
        for cc in 0..dim {
            jac[(br0 + r, cc)] += border.on_v0[(r, cc)];
        }
        for (g, mat) in border.on_group.iter().enumerate() {
            for cc in 0..block {
                jac[(br0 + r, (g * m + 1) * dim + cc)] += mat[(r, cc)];
            }
        }
        for q in 0..lay.n_q {
            jac[(br0 + r, q0 + q)] += border.on_q[(r, q)];
        }
    }
    Ok(jac)
}
