//! Linearization at the polygonal equilibrium and Lyapunov starters.
//!
//! The linearized flow is `u̇ = 𝒥 D²H_ω(a) u` with the real `2n × 2n`
//! stability matrix `M = 𝒥 D²H`. A mode index `k ∈ {1, …, n−1}` is admissible
//! when
//!
//! ```text
//! a² / (2 cos(αζ) sin²(kπ/n)) < 1      (positive denominator required)
//! ```
//!
//! and then `M` carries an imaginary eigenvalue pair `±iν_k` whose eigenvector
//! generates a family of periodic orbits (`u_j(t) = e^{ijαζ} u_n(νt + jkζ)`).
//!
//! Frequencies are extracted numerically from `M`. Writing perturbations as
//! `δu_j = e^{ijαζ} z_j`, the Fourier modes `ẑ_k, ẑ_{−k}` of `z` span an exact
//! invariant subspace of `M` (4 real dimensions, or 2 when `2k ≡ 0 mod n`).
//! Restricting `M` to that subspace gives a small eigenproblem per mode pair,
//! which keeps the `k`-labeling of eigenvalues deterministic even when
//! frequencies of different modes collide.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bvp::RotatingOrbit;
use crate::lattice::{polygonal_equilibrium, LatticeParams, State};
use crate::{Error, Result};

/// Hessian `D²H_ω(u)`, a symmetric real `2n × 2n` matrix.
pub fn hessian(u: &State, p: &LatticeParams) -> DMatrix<f64> {
    let n = u.n_sites();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        let x = u.0[2 * k];
        let y = u.0[2 * k + 1];
        let nk = x * x + y * y;
        let kp = (k + 1) % n;
        let km = (k + n - 1) % n;
        h[(2 * k, 2 * k)] = nk + 2.0 * x * x + p.omega - 2.0;
        h[(2 * k + 1, 2 * k + 1)] = nk + 2.0 * y * y + p.omega - 2.0;
        h[(2 * k, 2 * k + 1)] = 2.0 * x * y;
        h[(2 * k + 1, 2 * k)] = 2.0 * x * y;
        h[(2 * k, 2 * kp)] += 1.0;
        h[(2 * k, 2 * km)] += 1.0;
        h[(2 * k + 1, 2 * kp + 1)] += 1.0;
        h[(2 * k + 1, 2 * km + 1)] += 1.0;
    }
    h
}

/// Apply the symplectic form: rows of `𝒥 S` from rows of symmetric `S`,
/// with `𝒥 (x, y) = (y, −x)` per site.
pub fn apply_j_rows(s: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = s.nrows();
    let mut m = DMatrix::zeros(dim, dim);
    for k in 0..dim / 2 {
        for c in 0..dim {
            m[(2 * k, c)] = s[(2 * k + 1, c)];
            m[(2 * k + 1, c)] = -s[(2 * k, c)];
        }
    }
    m
}

/// Stability matrix `𝒥 D²H_ω(u)`.
pub fn stability_matrix(u: &State, p: &LatticeParams) -> DMatrix<f64> {
    apply_j_rows(&hessian(u, p))
}

/// The admissibility inequality for mode `k` at amplitude `a`. Returns `false`
/// whenever the denominator `2 cos(αζ) sin²(kπ/n)` is not strictly positive;
/// such modes are outside the hypothesis of the inequality.
pub fn mode_condition(p: &LatticeParams, k: usize) -> bool {
    if k == 0 || k >= p.n {
        return false;
    }
    let denom = mode_condition_denominator(p, k);
    denom > 0.0 && p.a * p.a / denom < 1.0
}

fn mode_condition_denominator(p: &LatticeParams, k: usize) -> f64 {
    let s = (k as f64 * std::f64::consts::PI / p.n as f64).sin();
    2.0 * (p.alpha as f64 * p.zeta()).cos() * s * s
}

/// Whether the hypothesis of the admissibility inequality holds at all
/// (`cos(αζ) > 0`). Modes of lattices with `cos(αζ) ≤ 0` are reported as
/// outside the hypothesis rather than admissible. A small tolerance covers
/// the degenerate perpendicular case `αζ = π/2`.
pub fn mode_hypothesis_ok(p: &LatticeParams) -> bool {
    (p.alpha as f64 * p.zeta()).cos() > 1e-9
}

/// One normal mode of the equilibrium.
#[derive(Debug, Clone)]
pub struct Mode {
    pub k: usize,
    pub admissible: bool,
    /// Frequency `ν_k > 0`; present only for admissible modes.
    pub nu: Option<f64>,
    /// Unit eigenvector of the stability matrix for `+iν_k`, largest component
    /// rotated real-positive. Present only for admissible modes.
    pub eigenvector: Option<DVector<Complex64>>,
}

/// Normal-mode table of the polygonal equilibrium.
#[derive(Debug, Clone)]
pub struct ModeSpectrum {
    pub params: LatticeParams,
    pub modes: Vec<Mode>,
}

impl ModeSpectrum {
    pub fn mode(&self, k: usize) -> Option<&Mode> {
        self.modes.iter().find(|m| m.k == k)
    }

    pub fn admissible_ks(&self) -> Vec<usize> {
        self.modes
            .iter()
            .filter(|m| m.admissible)
            .map(|m| m.k)
            .collect()
    }
}

/// Positive-frequency content of the invariant subspace spanned by Fourier
/// modes `±k` of the frame-relative perturbation.
struct BlockMode {
    label: usize,
    nu: f64,
    eigenvector: DVector<Complex64>,
}

/// Compute all normal modes of the equilibrium of `p`.
pub fn normal_modes(p: &LatticeParams) -> Result<ModeSpectrum> {
    if p.a <= 0.0 {
        return Err(Error::InvalidArgument(
            "normal modes need a > 0 (no equilibrium family at a = 0)".into(),
        ));
    }
    let eq = polygonal_equilibrium(p.n, p.a, p.alpha)?;
    let m = stability_matrix(&eq, p);
    let scale = m.amax().max(1.0);

    let mut found: Vec<BlockMode> = Vec::new();
    for k in 1..=p.n / 2 {
        if 2 * k == p.n {
            found.extend(block_modes(&m, p, k, true, scale)?);
        } else {
            found.extend(block_modes(&m, p, k, false, scale)?);
        }
    }

    let mut modes = Vec::with_capacity(p.n - 1);
    for k in 1..p.n {
        let admissible = mode_condition(p, k);
        if admissible {
            let hit = found.iter().find(|b| b.label == k).ok_or_else(|| {
                Error::Eigensolver {
                    k,
                    detail: "no imaginary eigenvalue matches this admissible mode".into(),
                }
            })?;
            modes.push(Mode {
                k,
                admissible,
                nu: Some(hit.nu),
                eigenvector: Some(hit.eigenvector.clone()),
            });
        } else {
            modes.push(Mode {
                k,
                admissible,
                nu: None,
                eigenvector: None,
            });
        }
    }
    Ok(ModeSpectrum { params: *p, modes })
}

/// Orthonormal basis of the `±k` Fourier subspace in the flat real coordinates.
fn block_basis(p: &LatticeParams, k: usize, half: bool) -> Vec<DVector<f64>> {
    let n = p.n;
    let zeta = p.zeta();
    let beta = (p.alpha + k) as f64 * zeta;
    let gamma = (p.alpha as f64 - k as f64) * zeta;
    let scale = 1.0 / (n as f64).sqrt();
    let mut basis = Vec::new();
    let mut push = |angle_of: &dyn Fn(f64) -> f64, rot90: bool| {
        let mut b = DVector::zeros(2 * n);
        for s in 0..n {
            let j = (s + 1) as f64;
            let th = angle_of(j);
            if rot90 {
                b[2 * s] = -th.sin() * scale;
                b[2 * s + 1] = th.cos() * scale;
            } else {
                b[2 * s] = th.cos() * scale;
                b[2 * s + 1] = th.sin() * scale;
            }
        }
        basis.push(b);
    };
    push(&|j| j * beta, false);
    push(&|j| j * beta, true);
    if !half {
        push(&|j| j * gamma, false);
        push(&|j| j * gamma, true);
    }
    basis
}

fn block_modes(
    m: &DMatrix<f64>,
    p: &LatticeParams,
    k: usize,
    half: bool,
    scale: f64,
) -> Result<Vec<BlockMode>> {
    let basis = block_basis(p, k, half);
    let dim = basis.len();
    // restriction of `m` to the invariant subspace
    let images: Vec<DVector<f64>> = basis.iter().map(|b| m * b).collect();
    let mut small = DMatrix::zeros(dim, dim);
    for (c, img) in images.iter().enumerate() {
        for (r, b) in basis.iter().enumerate() {
            small[(r, c)] = b.dot(img);
        }
    }

    let eigs = crate::eig::complex_eigenvalues_robust(&small).map_err(|_| Error::Eigensolver { k, detail: "block iteration stalled".into() })?;
    let mut out: Vec<(BlockMode, f64)> = Vec::new();
    for lam in eigs.iter() {
        if lam.im <= 1e-10 * scale || lam.re.abs() > 1e-8 * scale {
            continue;
        }
        // Inverse iteration from starts supported on each Fourier pair. For a
        // degenerate frequency (e.g. α = n, where the ±k blocks mirror) the
        // eigenspace is two-dimensional and each start converges to its own
        // member; otherwise both land on the same eigenvector and the weaker
        // duplicate is dropped below.
        let mut starts = vec![{
            let mut s = DVector::from_element(dim, Complex64::new(0.0, 0.0));
            s[0] = Complex64::new(1.0, 0.0);
            s[1] = Complex64::new(0.0, 0.3);
            s
        }];
        if !half {
            let mut s = DVector::from_element(dim, Complex64::new(0.0, 0.0));
            s[2] = Complex64::new(1.0, 0.0);
            s[3] = Complex64::new(0.0, 0.3);
            starts.push(s);
        }
        for start in starts {
            let Some(w) = small_eigenvector(&small, *lam, start, scale) else {
                continue;
            };
            // The c-coordinates are ẑ_k = c₁ + ic₂ and ẑ_{−k} = c₃ + ic₄; the
            // Fourier pair carrying the eigenvector decides the mode label,
            // matching the linear-lattice limit where mode k is the pair
            // ±i|d_k| of the complex Fourier mode e^{ijkζ}.
            let fwd = w[0].norm_sqr() + w[1].norm_sqr();
            let (label, margin) = if half {
                (k, 1.0)
            } else {
                let bwd = w[2].norm_sqr() + w[3].norm_sqr();
                let total = fwd + bwd;
                if fwd >= bwd {
                    (k, fwd / total)
                } else {
                    (p.n - k, bwd / total)
                }
            };
            // lift back to the full space and polish
            let n2 = 2 * p.n;
            let mut v = DVector::from_element(n2, Complex64::new(0.0, 0.0));
            for (wi, b) in w.iter().zip(basis.iter()) {
                for r in 0..n2 {
                    v[r] += wi * b[r];
                }
            }
            let Some(v) = polish_eigenvector(m, *lam, v, scale) else {
                continue;
            };
            out.push((
                BlockMode {
                    label,
                    nu: lam.im,
                    eigenvector: v,
                },
                margin,
            ));
        }
    }
    // keep one mode per label, preferring the cleanest Fourier support
    out.sort_by(|a, b| {
        a.0.label
            .cmp(&b.0.label)
            .then(b.1.total_cmp(&a.1))
            .then(a.0.nu.total_cmp(&b.0.nu))
    });
    out.dedup_by_key(|b| b.0.label);
    Ok(out.into_iter().map(|(b, _)| b).collect())
}

/// Eigenvector of a small real matrix for a complex eigenvalue, by inverse
/// iteration with a slightly shifted complex LU from a structured start.
/// `None` when the iterate does not reach eigenvector accuracy (a start with
/// no weight in the target eigenspace).
fn small_eigenvector(
    small: &DMatrix<f64>,
    lam: Complex64,
    start: DVector<Complex64>,
    scale: f64,
) -> Option<DVector<Complex64>> {
    let dim = small.nrows();
    let mc = small.map(|x| Complex64::new(x, 0.0));
    let shift = lam * Complex64::new(1.0, 1e-10);
    let mut a = mc.clone();
    for i in 0..dim {
        a[(i, i)] -= shift;
    }
    let lu = a.lu();
    let mut v = start;
    v /= Complex64::new(v.norm(), 0.0);
    for _ in 0..6 {
        let w = lu.solve(&v)?;
        let nrm = w.norm();
        if !nrm.is_finite() || nrm == 0.0 {
            return None;
        }
        v = w / Complex64::new(nrm, 0.0);
        let res = (&mc * &v) - v.map(|x| lam * x);
        if res.norm() <= 1e-10 * scale {
            break;
        }
    }
    let res = (&mc * &v) - v.map(|x| lam * x);
    if res.norm() <= 1e-6 * scale {
        Some(v)
    } else {
        None
    }
}

/// A few inverse-iteration steps on the full matrix, then normalize with the
/// largest component rotated real-positive. Returns `None` if the residual
/// `‖Mv − λv‖ > 1e-8 ‖v‖ · scale` persists.
fn polish_eigenvector(
    m: &DMatrix<f64>,
    lam: Complex64,
    v0: DVector<Complex64>,
    scale: f64,
) -> Option<DVector<Complex64>> {
    let dim = m.nrows();
    let mc = m.map(|x| Complex64::new(x, 0.0));
    let mut a = mc.clone();
    let shift = lam * Complex64::new(1.0, 1e-10);
    for i in 0..dim {
        a[(i, i)] -= shift;
    }
    let lu = a.lu();
    let mut v = v0;
    v /= Complex64::new(v.norm(), 0.0);
    for _ in 0..3 {
        let res = (&mc * &v) - v.map(|x| lam * x);
        if res.norm() <= 1e-10 * scale {
            break;
        }
        let w = lu.solve(&v)?;
        let nrm = w.norm();
        if !nrm.is_finite() || nrm == 0.0 {
            return None;
        }
        v = w / Complex64::new(nrm, 0.0);
    }
    let res = (&mc * &v) - v.map(|x| lam * x);
    if res.norm() > 1e-8 * scale {
        return None;
    }
    // deterministic phase: largest-magnitude component real-positive
    let mut imax = 0;
    for i in 0..dim {
        if v[i].norm() > v[imax].norm() {
            imax = i;
        }
    }
    let phase = v[imax] / Complex64::new(v[imax].norm(), 0.0);
    Some(v.map(|x| x / phase))
}

/// Small-amplitude starting orbit of the Lyapunov family of mode `k`, on a
/// uniform mesh with `n_intervals` intervals of collocation degree `degree`.
///
/// The orbit is `u(t) = a + ε Re(e^{2πit} e^{iθ} v_k)` on scaled time
/// `t ∈ [0, 1]`, period `T = 2π/ν_k`, with the phase `θ` chosen so that
/// `y_n(0) = 0`; the anti-rotation ∫y_n dt = 0 holds by construction.
pub fn lyapunov_starter(
    p: &LatticeParams,
    k: usize,
    eps: f64,
    n_intervals: usize,
    degree: usize,
) -> Result<RotatingOrbit> {
    if p.a <= 0.0 {
        return Err(Error::InvalidArgument(
            "starter needs a > 0 (no bifurcating family at the zero state)".into(),
        ));
    }
    if eps <= 0.0 {
        return Err(Error::InvalidArgument(format!("eps = {eps}, need eps > 0")));
    }
    if !mode_condition(p, k) {
        return Err(Error::InadmissibleMode { k });
    }
    let spectrum = normal_modes(p)?;
    let mode = spectrum.mode(k).ok_or(Error::InadmissibleMode { k })?;
    let (nu, v) = (
        mode.nu.ok_or(Error::InadmissibleMode { k })?,
        mode.eigenvector.clone().ok_or(Error::InadmissibleMode { k })?,
    );

    let n = p.n;
    let vxn = v[2 * (n - 1)];
    let vyn = v[2 * (n - 1) + 1];
    // Re(e^{iθ} v_yn) = 0
    let mut theta = if vyn.norm() > 0.0 {
        std::f64::consts::FRAC_PI_2 - vyn.arg()
    } else {
        0.0
    };
    // orient the x_n(0) offset positive for determinism
    if (Complex64::from_polar(1.0, theta) * vxn).re < 0.0 {
        theta += std::f64::consts::PI;
    }
    let rot = Complex64::from_polar(1.0, theta);

    let eq = polygonal_equilibrium(n, p.a, p.alpha)?;
    let t_period = std::f64::consts::TAU / nu;

    let value_at = |t: f64| -> DVector<f64> {
        let osc = Complex64::from_polar(1.0, std::f64::consts::TAU * t) * rot;
        let mut s = DVector::zeros(2 * n);
        for j in 0..n {
            let dx = (osc * (v[2 * j])).re;
            let dy = (osc * (v[2 * j + 1])).re;
            s[2 * j] = eq.0[2 * j] + eps * dx;
            s[2 * j + 1] = eq.0[2 * j + 1] + eps * dy;
        }
        s
    };

    let orbit = RotatingOrbit::from_fn(*p, n_intervals, degree, t_period, &value_at)?;
    let mut orbit = orbit;
    orbit.xn0 = orbit.points[0][2 * (n - 1)];
    orbit.mode_k = Some(k);
    Ok(orbit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::omega_of_a;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn random_state(n: usize, rng: &mut StdRng) -> State {
        State(DVector::from_fn(2 * n, |_, _| rng.gen_range(-1.0..1.0)))
    }

    /// Frequencies of the `±k` Fourier block from the closed-form reduction of
    /// the linearization: an independent oracle for the numerical path.
    fn analytic_block_frequencies(p: &LatticeParams, k: usize) -> Vec<f64> {
        let zeta = p.zeta();
        let d = |kappa: f64| -> f64 {
            let sp = ((kappa + p.alpha as f64) * zeta / 2.0).sin();
            let sa = (p.alpha as f64 * zeta / 2.0).sin();
            4.0 * sp * sp - 4.0 * sa * sa
        };
        let a2 = p.a * p.a;
        let ak = a2 - d(k as f64);
        let amk = a2 - d(-(k as f64));
        let mu = (amk - ak) / 2.0;
        let sigma = (ak + amk) / 2.0;
        let disc = sigma * sigma - a2 * a2;
        if disc < 0.0 {
            return vec![];
        }
        let rho = disc.sqrt();
        // positive frequencies contributed by the ±k pair of blocks
        [(mu + rho).abs(), (mu - rho).abs()]
            .into_iter()
            .filter(|nu| *nu > 1e-12)
            .collect()
    }

    #[test]
    fn hessian_is_symmetric_and_matches_fd() {
        let mut rng = StdRng::seed_from_u64(21);
        let p = LatticeParams::from_dispersion(4, 0.6, 1).unwrap();
        let u = random_state(4, &mut rng);
        let h = hessian(&u, &p);
        assert!((h.clone() - h.transpose()).amax() <= 1e-12);

        let step = 1e-6;
        for i in 0..8 {
            let mut up = u.clone();
            let mut dn = u.clone();
            up.0[i] += step;
            dn.0[i] -= step;
            let gp = crate::lattice::grad_hamiltonian(&up, &p);
            let gn = crate::lattice::grad_hamiltonian(&dn, &p);
            let col = (gp - gn) / (2.0 * step);
            for r in 0..8 {
                assert!((h[(r, i)] - col[r]).abs() < 1e-5, "H({r},{i})");
            }
        }
    }

    #[test]
    fn hessian_at_zero_is_linear_coupling_only() {
        let p = LatticeParams::with_omega(5, 0.3, 1, 0.7).unwrap();
        let h = hessian(&State::zeros(5), &p);
        for k in 0..5 {
            assert!((h[(2 * k, 2 * k)] - (p.omega - 2.0)).abs() < 1e-14);
            assert!(h[(2 * k, 2 * k + 1)].abs() < 1e-14);
        }
        assert!((h[(0, 2)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn stability_matrix_is_traceless_and_j_of_hessian() {
        let mut rng = StdRng::seed_from_u64(2);
        let p = LatticeParams::from_dispersion(5, 0.5, 1).unwrap();
        let u = random_state(5, &mut rng);
        let m = stability_matrix(&u, &p);
        assert!(m.trace().abs() <= 1e-10);
        assert_eq!(stability_matrix(&State::zeros(5), &p), apply_j_rows(&hessian(&State::zeros(5), &p)));
        // matches vector-field Jacobian (same linearization)
        let j = crate::lattice::jac_vector_field(&u, &p);
        assert!((m - j).amax() < 1e-12);
    }

    #[test]
    fn spectrum_quadruple_symmetry_at_random_state() {
        let mut rng = StdRng::seed_from_u64(9);
        let p = LatticeParams::from_dispersion(4, 0.4, 1).unwrap();
        let u = random_state(4, &mut rng);
        let m = stability_matrix(&u, &p);
        let eigs = crate::eig::complex_eigenvalues_robust(&m).unwrap();
        for lam in eigs.iter() {
            let has_neg = eigs.iter().any(|mu| (mu + lam).norm() < 1e-8);
            let has_conj = eigs.iter().any(|mu| (mu - lam.conj()).norm() < 1e-8);
            assert!(has_neg && has_conj, "quadruple symmetry broken at {lam}");
        }
    }

    #[test]
    fn mode_condition_examples() {
        let p = LatticeParams::from_dispersion(9, 0.651774, 1).unwrap();
        // ratio ≈ 2.370 > 1 at k = 1
        let denom = 2.0 * (p.zeta()).cos() * (std::f64::consts::PI / 9.0).sin().powi(2);
        assert!((p.a * p.a / denom - 2.370).abs() < 2e-3);
        assert!(!mode_condition(&p, 1));
        // ratio ≈ 0.2859 < 1 at k = 4
        let denom4 = 2.0 * (p.zeta()).cos() * (4.0 * std::f64::consts::PI / 9.0).sin().powi(2);
        assert!((p.a * p.a / denom4 - 0.2859).abs() < 2e-4);
        assert!(mode_condition(&p, 4));
        // a → 0⁺ with positive denominator: admissible
        let tiny = LatticeParams::from_dispersion(9, 1e-8, 1).unwrap();
        for k in 1..9 {
            assert!(mode_condition(&tiny, k));
        }
        // cos(αζ) ≤ 0: outside the hypothesis, never admissible
        let neg = LatticeParams::from_dispersion(3, 0.2, 1).unwrap();
        assert!(!mode_hypothesis_ok(&neg));
        for k in 1..3 {
            assert!(!mode_condition(&neg, k));
        }
    }

    #[test]
    fn mode_condition_monotone_in_a() {
        for n in [5usize, 9, 12] {
            for k in 1..n {
                for alpha in [1usize, n] {
                    let a1 = 0.8;
                    let p1 = LatticeParams::from_dispersion(n, a1, alpha).unwrap();
                    if mode_condition(&p1, k) {
                        for a in [0.6, 0.3, 0.05] {
                            let p = LatticeParams::from_dispersion(n, a, alpha).unwrap();
                            assert!(mode_condition(&p, k));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn admissible_count_matches_dense_eigensolver() {
        // Counts compare against a dense eigensolve of the full matrix.
        // With cos(αζ) > 0 the inequality is sharp: admissible modes are
        // exactly the imaginary pairs. With cos(αζ) ≤ 0 (n = 3, 4 at α = 1)
        // the inequality's hypothesis fails and no mode is admissible, while
        // imaginary pairs still exist; only the inclusion is asserted there.
        for n in 3..=17usize {
            for a in [0.1, 0.4, 0.65] {
                let p = LatticeParams::from_dispersion(n, a, 1).unwrap();
                let eq = polygonal_equilibrium(n, a, 1).unwrap();
                let m = stability_matrix(&eq, &p);
                let eigs = crate::eig::complex_eigenvalues_robust(&m).unwrap();
                // the defective zero (gauge) pair splits at roundoff scale
                // in either direction; exclude it by magnitude
                let n_imag_pairs = eigs
                    .iter()
                    .filter(|l| l.re.abs() <= 1e-6 && l.im > 1e-6)
                    .count();
                let n_admissible = (1..n).filter(|k| mode_condition(&p, *k)).count();
                if mode_hypothesis_ok(&p) {
                    assert_eq!(
                        n_admissible, n_imag_pairs,
                        "count mismatch at n={n}, a={a}"
                    );
                } else {
                    assert_eq!(n_admissible, 0);
                    assert!(n_imag_pairs >= n_admissible);
                }
            }
        }
    }

    #[test]
    fn normal_modes_match_analytic_block_frequencies() {
        for (n, a, alpha) in [(9usize, 0.4, 1usize), (9, 0.651774, 1), (7, 0.3, 1), (6, 0.5, 6)] {
            let p = LatticeParams::from_dispersion(n, a, alpha).unwrap();
            let spec = normal_modes(&p).unwrap();
            for mode in &spec.modes {
                if let Some(nu) = mode.nu {
                    let kk = mode.k.min(n - mode.k);
                    let anal = analytic_block_frequencies(&p, kk);
                    let best = anal
                        .iter()
                        .map(|x| (x - nu).abs())
                        .fold(f64::INFINITY, f64::min);
                    assert!(
                        best < 1e-8,
                        "nu_{}={nu} not among analytic {:?} (n={n}, a={a})",
                        mode.k,
                        anal
                    );
                }
            }
        }
    }

    #[test]
    fn normal_modes_eigenvector_residuals() {
        let p = LatticeParams::from_dispersion(9, 0.651774, 1).unwrap();
        let eq = polygonal_equilibrium(9, 0.651774, 1).unwrap();
        let m = stability_matrix(&eq, &p).map(|x| Complex64::new(x, 0.0));
        let spec = normal_modes(&p).unwrap();
        let mut n_checked = 0;
        for mode in &spec.modes {
            if let (Some(nu), Some(v)) = (mode.nu, mode.eigenvector.as_ref()) {
                let lam = Complex64::new(0.0, nu);
                let res = (&m * v) - v.map(|x| lam * x);
                assert!(res.norm() <= 1e-8 * v.norm(), "residual for k={}", mode.k);
                assert!((v.norm() - 1.0).abs() < 1e-10);
                n_checked += 1;
            }
        }
        assert_eq!(n_checked, 6); // k = 2..=7 admissible at this amplitude
    }

    #[test]
    fn spectrum_on_imaginary_axis_for_table_row_1() {
        let p = LatticeParams::from_dispersion(9, 0.651774, 1).unwrap();
        let eq = polygonal_equilibrium(9, 0.651774, 1).unwrap();
        let eigs = crate::eig::complex_eigenvalues_robust(&stability_matrix(&eq, &p)).unwrap();
        // source equilibrium of a stable regime: no real parts beyond tolerance
        // except the Krein-collided k=1 quadruple, which has left the axis.
        // The defective zero pair (gauge mode) splits at roundoff scale and is
        // excluded by the modulus filter.
        let off_axis = eigs
            .iter()
            .filter(|l| l.re.abs() > 1e-6 && l.norm() > 1e-6)
            .count();
        assert_eq!(off_axis, 4); // one complex quadruple (modes 1 and 8)
    }

    #[test]
    fn small_amplitude_limit_matches_linear_lattice() {
        // a → 0: positive frequencies tend to the linear-lattice values
        // |4 sin²((κ+α)ζ/2) − 4 sin²(αζ/2)| over κ = 1..n−1.
        let n = 9;
        let alpha = 1;
        let p = LatticeParams::from_dispersion(n, 1e-5, alpha).unwrap();
        let eq = polygonal_equilibrium(n, 1e-5, alpha).unwrap();
        let eigs = crate::eig::complex_eigenvalues_robust(&stability_matrix(&eq, &p)).unwrap();
        let mut got: Vec<f64> = eigs
            .iter()
            .filter(|l| l.im > 1e-7)
            .map(|l| l.im)
            .collect();
        got.sort_by(f64::total_cmp);
        let zeta = std::f64::consts::TAU / n as f64;
        let mut want: Vec<f64> = (1..n)
            .map(|kappa| {
                let sp = ((kappa + alpha) as f64 * zeta / 2.0).sin();
                let sa = (alpha as f64 * zeta / 2.0).sin();
                (4.0 * sp * sp - 4.0 * sa * sa).abs()
            })
            .filter(|x| *x > 1e-7)
            .collect();
        want.sort_by(f64::total_cmp);
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g - w).abs() < 1e-6, "{g} vs {w}");
        }
    }

    #[test]
    fn starter_satisfies_phase_conditions() {
        let p = LatticeParams::from_dispersion(9, 0.55, 1).unwrap();
        let spec = normal_modes(&p).unwrap();
        let k = spec.admissible_ks()[0];
        let orbit = lyapunov_starter(&p, k, 1e-4, 40, 4).unwrap();
        let n = p.n;
        // y_n(0) = 0 by phase choice
        assert!(orbit.points[0][2 * (n - 1) + 1].abs() <= 1e-12);
        // ∫ y_n dt = 0 up to the interpolation error of the starter
        let integral = orbit.integral_of_component(2 * (n - 1) + 1);
        assert!(integral.abs() <= 1e-12);
        // eps → 0 tends to the constant equilibrium with T = 2π/ν_k
        let tiny = lyapunov_starter(&p, k, 1e-12, 10, 3).unwrap();
        let eq = polygonal_equilibrium(9, 0.55, 1).unwrap();
        for pt in &tiny.points {
            assert!((pt.clone() - eq.0.clone()).amax() < 1e-10);
        }
        let nu = spec.mode(k).unwrap().nu.unwrap();
        assert!((tiny.t_period - std::f64::consts::TAU / nu).abs() < 1e-12);

        assert!(lyapunov_starter(&p, 1, 1e-4, 10, 3).is_err()); // k=1 inadmissible at a=0.55
        assert!(lyapunov_starter(&p, k, -1.0, 10, 3).is_err());
        let zero = LatticeParams::with_omega(9, 0.0, 1, omega_of_a(9, 0.0, 1)).unwrap();
        assert!(lyapunov_starter(&zero, 2, 1e-4, 10, 3).is_err());
    }
}
