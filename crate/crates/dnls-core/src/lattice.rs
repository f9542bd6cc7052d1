//! The DNLS lattice in the rotating frame.
//!
//! State of `n` complex sites `u_j = x_j + i y_j` with cyclic boundary
//! conditions `u_0 ≡ u_n`, `u_{n+1} ≡ u_1`, stored as the flat real vector
//! `(x_1, y_1, …, x_n, y_n)` of dimension `2n`. The dynamics is the
//! Hamiltonian system
//!
//! ```text
//! u̇ = 𝒥 ∇H_ω(u),   H_ω = (1/2) Σ_j [ (1/2)|u_j|⁴ + ω|u_j|² − |u_{j+1} − u_j|² ],
//! ```
//!
//! componentwise `u̇_k = −i (u_{k−1} − 2u_k + u_{k+1} + |u_k|² u_k + ω u_k)`,
//! with `𝒥` acting per site as `(x, y) ↦ (y, −x)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Static problem data of the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    /// Number of sites, `n ≥ 3`.
    pub n: usize,
    /// Wave index `α ∈ 1..=n` of the polygonal equilibrium.
    pub alpha: usize,
    /// Equilibrium amplitude `a ≥ 0`.
    pub a: f64,
    /// Rotation frequency `ω`.
    pub omega: f64,
}

impl LatticeParams {
    /// Parameters with `ω` chosen on the dispersion relation
    /// `ω(a) = 4 sin²(αζ/2) − a²`, so the polygonal state is an equilibrium.
    pub fn from_dispersion(n: usize, a: f64, alpha: usize) -> Result<Self> {
        Self::validate(n, a, alpha)?;
        Ok(Self {
            n,
            alpha,
            a,
            omega: omega_of_a(n, a, alpha),
        })
    }

    /// Parameters with an explicitly prescribed `ω`.
    pub fn with_omega(n: usize, a: f64, alpha: usize, omega: f64) -> Result<Self> {
        Self::validate(n, a, alpha)?;
        Ok(Self { n, alpha, a, omega })
    }

    fn validate(n: usize, a: f64, alpha: usize) -> Result<()> {
        if n < 3 {
            return Err(Error::InvalidLattice(format!("n = {n}, need n >= 3")));
        }
        if alpha == 0 || alpha > n {
            return Err(Error::InvalidLattice(format!(
                "alpha = {alpha} outside 1..={n}"
            )));
        }
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::InvalidLattice(format!("amplitude a = {a}")));
        }
        Ok(())
    }

    /// Lattice angle `ζ = 2π/n`.
    pub fn zeta(&self) -> f64 {
        std::f64::consts::TAU / self.n as f64
    }

    /// Same lattice with amplitude `a` and `ω` moved along the dispersion
    /// relation. Used by continuation runs where `a` is a free parameter.
    pub fn at_amplitude(&self, a: f64) -> Self {
        Self {
            n: self.n,
            alpha: self.alpha,
            a,
            omega: omega_of_a(self.n, a, self.alpha),
        }
    }

    /// Period of the rotating frame, `T₀ = 2π/ω`.
    pub fn t0(&self) -> f64 {
        std::f64::consts::TAU / self.omega
    }
}

/// Rotation frequency of the polygonal equilibrium with amplitude `a`:
/// `ω(a) = 4 sin²(αζ/2) − a²`. For `α = 1` this is `4 sin²(π/n) − a²`.
pub fn omega_of_a(n: usize, a: f64, alpha: usize) -> f64 {
    let s = (alpha as f64 * std::f64::consts::PI / n as f64).sin();
    4.0 * s * s - a * a
}

/// Lattice state: `n` complex sites stored as `(x_1, y_1, …, x_n, y_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct State(pub DVector<f64>);

impl State {
    pub fn zeros(n: usize) -> Self {
        State(DVector::zeros(2 * n))
    }

    pub fn from_sites(sites: &[Complex64]) -> Self {
        let mut v = DVector::zeros(2 * sites.len());
        for (j, u) in sites.iter().enumerate() {
            v[2 * j] = u.re;
            v[2 * j + 1] = u.im;
        }
        State(v)
    }

    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        if v.len() % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "state vector length {} is odd",
                v.len()
            )));
        }
        Ok(State(v))
    }

    /// Number of lattice sites.
    pub fn n_sites(&self) -> usize {
        self.0.len() / 2
    }

    /// Site `j` (0-based, `j < n`) as a complex value.
    pub fn site(&self, j: usize) -> Complex64 {
        Complex64::new(self.0[2 * j], self.0[2 * j + 1])
    }

    /// Site with cyclic index: any integer maps onto `0..n`.
    pub fn site_cyclic(&self, j: isize) -> Complex64 {
        let n = self.n_sites() as isize;
        self.site(j.rem_euclid(n) as usize)
    }

    pub fn set_site(&mut self, j: usize, u: Complex64) {
        self.0[2 * j] = u.re;
        self.0[2 * j + 1] = u.im;
    }

    pub fn sites(&self) -> Vec<Complex64> {
        (0..self.n_sites()).map(|j| self.site(j)).collect()
    }

    /// Global phase rotation `u ↦ e^{iθ} u`.
    pub fn rotated(&self, theta: f64) -> State {
        let rot = Complex64::from_polar(1.0, theta);
        State::from_sites(&self.sites().iter().map(|u| rot * u).collect::<Vec<_>>())
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// The two monitored first integrals: `H_ω` and `A = Σ|u_k|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedPair {
    pub energy: f64,
    pub amplitude_norm: f64,
}

impl ConservedPair {
    pub fn of(u: &State, p: &LatticeParams) -> Self {
        ConservedPair {
            energy: hamiltonian(u, p),
            amplitude_norm: amplitude_norm(u),
        }
    }
}

/// `H_ω(u) = (1/2) Σ_j [ (1/2)|u_j|⁴ + ω|u_j|² − |u_{j+1} − u_j|² ]`.
pub fn hamiltonian(u: &State, p: &LatticeParams) -> f64 {
    let n = u.n_sites();
    let mut h = 0.0;
    for j in 0..n {
        let uj = u.site(j);
        let ujp = u.site((j + 1) % n);
        let nj = uj.norm_sqr();
        let d = ujp - uj;
        h += 0.5 * nj * nj + p.omega * nj - d.norm_sqr();
    }
    0.5 * h
}

/// `A(u) = Σ_j |u_j|²`.
pub fn amplitude_norm(u: &State) -> f64 {
    (0..u.n_sites()).map(|j| u.site(j).norm_sqr()).sum()
}

/// Gradient of [`hamiltonian`] in the flat real coordinates.
pub fn grad_hamiltonian(u: &State, p: &LatticeParams) -> DVector<f64> {
    let n = u.n_sites();
    let mut g = DVector::zeros(2 * n);
    for j in 0..n {
        let c = discrete_core(u, p, j);
        g[2 * j] = c.re;
        g[2 * j + 1] = c.im;
    }
    g
}

/// `u_{k−1} − 2u_k + u_{k+1} + |u_k|² u_k + ω u_k` with cyclic indices.
#[inline]
fn discrete_core(u: &State, p: &LatticeParams, k: usize) -> Complex64 {
    let n = u.n_sites();
    let uk = u.site(k);
    let um = u.site((k + n - 1) % n);
    let up = u.site((k + 1) % n);
    um - 2.0 * uk + up + uk.norm_sqr() * uk + p.omega * uk
}

/// Rotating-frame vector field `u̇ = 𝒥 ∇H_ω(u)`, i.e.
/// `u̇_k = −i (u_{k−1} − 2u_k + u_{k+1} + |u_k|² u_k + ω u_k)`.
pub fn vector_field(u: &State, p: &LatticeParams) -> State {
    let n = u.n_sites();
    let mut out = State::zeros(n);
    for k in 0..n {
        let c = discrete_core(u, p, k);
        // −i c = c.im − i c.re
        out.0[2 * k] = c.im;
        out.0[2 * k + 1] = -c.re;
    }
    out
}

/// Jacobian of [`vector_field`] at `u`, a real `2n × 2n` matrix.
pub fn jac_vector_field(u: &State, p: &LatticeParams) -> DMatrix<f64> {
    let n = u.n_sites();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    add_jac_vector_field(&mut m, u, p, 1.0);
    m
}

/// Accumulate `scale · D[vector_field](u)` into `m`.
pub(crate) fn add_jac_vector_field(m: &mut DMatrix<f64>, u: &State, p: &LatticeParams, scale: f64) {
    let n = u.n_sites();
    for k in 0..n {
        let x = u.0[2 * k];
        let y = u.0[2 * k + 1];
        let nk = x * x + y * y;
        let km = (k + n - 1) % n;
        let kp = (k + 1) % n;
        // ẋ_k = Im c_k = y_{k−1} − 2y_k + y_{k+1} + (N_k + ω) y_k
        m[(2 * k, 2 * km + 1)] += scale;
        m[(2 * k, 2 * kp + 1)] += scale;
        m[(2 * k, 2 * k + 1)] += scale * (-2.0 + nk + p.omega + 2.0 * y * y);
        m[(2 * k, 2 * k)] += scale * (2.0 * x * y);
        // ẏ_k = −Re c_k = −(x_{k−1} − 2x_k + x_{k+1} + (N_k + ω) x_k)
        m[(2 * k + 1, 2 * km)] -= scale;
        m[(2 * k + 1, 2 * kp)] -= scale;
        m[(2 * k + 1, 2 * k)] -= scale * (-2.0 + nk + p.omega + 2.0 * x * x);
        m[(2 * k + 1, 2 * k + 1)] -= scale * (2.0 * x * y);
    }
}

/// Polygonal relative equilibrium `a_j = a e^{i j α ζ}` (site index `j = 1..n`,
/// stored 0-based so slot `j-1` holds `a_j`).
pub fn polygonal_equilibrium(n: usize, a: f64, alpha: usize) -> Result<State> {
    LatticeParams::validate(n, a, alpha)?;
    let zeta = std::f64::consts::TAU / n as f64;
    let sites: Vec<Complex64> = (1..=n)
        .map(|j| Complex64::from_polar(a, j as f64 * alpha as f64 * zeta))
        .collect();
    Ok(State::from_sites(&sites))
}

/// Right-hand side of the boundary-value formulation on scaled time `t ∈ [0,1]`:
///
/// ```text
/// u'_k = −iT (u_{k−1} − 2u_k + u_{k+1} + |u_k|² u_k + ω u_k)
///        + p₁ (4u_k − 4u_k³ − 2ū_{k+1}) + p₂ (u_{k+1} − ū_{k−1}).
/// ```
///
/// The unfolding parameters `p₁, p₂` compensate the two conserved quantities;
/// they vanish at converged solutions. With `p₁ = p₂ = 0` this is
/// `T · vector_field(u)`.
pub fn extended_rhs(u: &State, t_period: f64, p: &LatticeParams, p1: f64, p2: f64) -> Result<State> {
    if t_period == 0.0 {
        return Err(Error::InvalidArgument("period T = 0".into()));
    }
    let n = u.n_sites();
    let mut out = State::zeros(n);
    for k in 0..n {
        let c = discrete_core(u, p, k);
        let mut re = t_period * c.im;
        let mut im = -t_period * c.re;
        if p1 != 0.0 || p2 != 0.0 {
            let uk = u.site(k);
            let up = u.site((k + 1) % n);
            let um = u.site((k + n - 1) % n);
            let t1 = 4.0 * uk - 4.0 * uk * uk * uk - 2.0 * up.conj();
            let t2 = up - um.conj();
            re += p1 * t1.re + p2 * t2.re;
            im += p1 * t1.im + p2 * t2.im;
        }
        out.0[2 * k] = re;
        out.0[2 * k + 1] = im;
    }
    Ok(out)
}

/// Jacobian data of [`extended_rhs`] with respect to the state and the
/// scalar parameters `(T, a, p₁, p₂)`. The `a`-derivative enters through the
/// dispersion relation `ω = ω(a)` and is only meaningful when the run moves
/// `ω` together with `a`.
pub struct ExtendedJacobian {
    pub d_state: DMatrix<f64>,
    pub d_t: DVector<f64>,
    pub d_a: DVector<f64>,
    pub d_p1: DVector<f64>,
    pub d_p2: DVector<f64>,
}

pub fn jac_extended_rhs(
    u: &State,
    t_period: f64,
    p: &LatticeParams,
    p1: f64,
    p2: f64,
) -> ExtendedJacobian {
    let n = u.n_sites();
    let dim = 2 * n;
    let mut d_state = DMatrix::zeros(dim, dim);
    add_jac_vector_field(&mut d_state, u, p, t_period);

    let mut d_p1 = DVector::zeros(dim);
    let mut d_p2 = DVector::zeros(dim);
    let mut d_t = DVector::zeros(dim);
    let mut d_a = DVector::zeros(dim);
    for k in 0..n {
        let x = u.0[2 * k];
        let y = u.0[2 * k + 1];
        let kp = (k + 1) % n;
        let km = (k + n - 1) % n;
        let uk = u.site(k);
        let up = u.site(kp);
        let um = u.site(km);

        // unfolding columns
        let t1 = 4.0 * uk - 4.0 * uk * uk * uk - 2.0 * up.conj();
        let t2 = up - um.conj();
        d_p1[2 * k] = t1.re;
        d_p1[2 * k + 1] = t1.im;
        d_p2[2 * k] = t2.re;
        d_p2[2 * k + 1] = t2.im;

        // p1 · d(4u − 4u³ − 2ū_{k+1}), with u³ = (x³−3xy²) + i(3x²y−y³)
        if p1 != 0.0 {
            d_state[(2 * k, 2 * k)] += p1 * (4.0 - 12.0 * (x * x - y * y));
            d_state[(2 * k, 2 * k + 1)] += p1 * (24.0 * x * y);
            d_state[(2 * k + 1, 2 * k)] += p1 * (-24.0 * x * y);
            d_state[(2 * k + 1, 2 * k + 1)] += p1 * (4.0 - 12.0 * (x * x - y * y));
            d_state[(2 * k, 2 * kp)] += -2.0 * p1;
            d_state[(2 * k + 1, 2 * kp + 1)] += 2.0 * p1;
        }
        // p2 · d(u_{k+1} − ū_{k−1})
        if p2 != 0.0 {
            d_state[(2 * k, 2 * kp)] += p2;
            d_state[(2 * k + 1, 2 * kp + 1)] += p2;
            d_state[(2 * k, 2 * km)] -= p2;
            d_state[(2 * k + 1, 2 * km + 1)] += p2;
        }

        // ∂/∂T = vector_field component
        let c = discrete_core(u, p, k);
        d_t[2 * k] = c.im;
        d_t[2 * k + 1] = -c.re;

        // ∂/∂a via ω' = −2a: −iT u_k ω'(a)
        d_a[2 * k] = t_period * y * (-2.0 * p.a);
        d_a[2 * k + 1] = -t_period * x * (-2.0 * p.a);
    }
    ExtendedJacobian {
        d_state,
        d_t,
        d_a,
        d_p1,
        d_p2,
    }
}

/// A sampled trajectory: physical times with one [`State`] per sample.
#[derive(Debug, Clone)]
pub struct Trace {
    pub times: Vec<f64>,
    pub states: Vec<State>,
}

/// Transform a `T`-periodic rotating-frame orbit into the non-rotating frame,
/// sampling `q_j(t) = e^{iωt} u_j(t)` over `m` rotating-frame periods
/// (`t ∈ [0, mT]`). The input trace must cover one period `[0, T]`; it is
/// extended periodically. When `ω/ν = ℓ/m` the result closes up after `mT`.
pub fn to_nonrotating(u_trace: &Trace, p: &LatticeParams, nu: f64, m: i64) -> Result<Trace> {
    if m <= 0 {
        return Err(Error::InvalidArgument(format!("m = {m}, need m > 0")));
    }
    if u_trace.times.is_empty() {
        return Err(Error::InvalidArgument("empty trace".into()));
    }
    let t_period = std::f64::consts::TAU / nu;
    let base = u_trace.times.len();
    let mut times = Vec::with_capacity(base * m as usize);
    let mut states = Vec::with_capacity(base * m as usize);
    for rep in 0..m as usize {
        for (i, s) in u_trace.states.iter().enumerate() {
            let t = rep as f64 * t_period + u_trace.times[i];
            let rot = Complex64::from_polar(1.0, p.omega * t);
            let sites: Vec<Complex64> = s.sites().iter().map(|u| rot * u).collect();
            times.push(t);
            states.push(State::from_sites(&sites));
        }
    }
    Ok(Trace { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn random_state(n: usize, rng: &mut StdRng) -> State {
        let sites: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        State::from_sites(&sites)
    }

    fn fd_gradient(u: &State, p: &LatticeParams, h: f64) -> DVector<f64> {
        let dim = u.0.len();
        let mut g = DVector::zeros(dim);
        for i in 0..dim {
            let mut up = u.clone();
            let mut dn = u.clone();
            up.0[i] += h;
            dn.0[i] -= h;
            g[i] = (hamiltonian(&up, p) - hamiltonian(&dn, p)) / (2.0 * h);
        }
        g
    }

    fn apply_j(v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for k in 0..v.len() / 2 {
            out[2 * k] = v[2 * k + 1];
            out[2 * k + 1] = -v[2 * k];
        }
        out
    }

    #[test]
    fn hamiltonian_zero_state() {
        let p = LatticeParams::from_dispersion(5, 0.7, 1).unwrap();
        assert_eq!(hamiltonian(&State::zeros(5), &p), 0.0);
    }

    #[test]
    fn hamiltonian_single_site() {
        // one site = 1, rest 0, ω = 0.5: (1/2)(1/2 + 1/2 − 2) = −1/2
        let p = LatticeParams::with_omega(4, 1.0, 1, 0.5).unwrap();
        let mut u = State::zeros(4);
        u.set_site(0, Complex64::new(1.0, 0.0));
        assert!((hamiltonian(&u, &p) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_polygonal_equilibrium() {
        // closed form −n a⁴/4 when ω is on the dispersion relation
        let (n, a) = (9, 0.651774);
        let p = LatticeParams::from_dispersion(n, a, 1).unwrap();
        let eq = polygonal_equilibrium(n, a, 1).unwrap();
        let expected = -(n as f64) * a.powi(4) / 4.0;
        assert!((hamiltonian(&eq, &p) - expected).abs() < 1e-12);

        // brute-force term-by-term sum as an independent check
        let mut brute = 0.0;
        for j in 0..n {
            let uj = eq.site(j);
            let ujp = eq.site_cyclic(j as isize + 1);
            brute += 0.5 * uj.norm_sqr().powi(2) + p.omega * uj.norm_sqr() - (ujp - uj).norm_sqr();
        }
        brute *= 0.5;
        assert!((hamiltonian(&eq, &p) - brute).abs() < 1e-14);
    }

    #[test]
    fn amplitude_norm_cases() {
        assert_eq!(amplitude_norm(&State::zeros(7)), 0.0);
        let eq = polygonal_equilibrium(6, 0.5, 2).unwrap();
        assert!((amplitude_norm(&eq) - 6.0 * 0.25).abs() < 1e-14);
        let u = State::from_sites(&[
            Complex64::new(1.0, 1.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        assert!((amplitude_norm(&u) - 6.0).abs() < 1e-14);
    }

    #[test]
    fn omega_matches_tabulated_frame_periods() {
        let cases = [
            (9usize, 0.651774, 0.043102, 145.773),
            (17, 0.576588, -0.197399, -31.8299),
            (31, 0.421561, -0.136774, -45.9385),
        ];
        for (n, a, omega, t0) in cases {
            let w = omega_of_a(n, a, 1);
            // tabulated values carry 6 significant digits; ω is sensitive to
            // the rounding of a at the 1e-6 level
            assert!((w - omega).abs() < 5e-6, "omega({n}, {a}) = {w}");
            let t = std::f64::consts::TAU / w;
            assert!((t - t0).abs() / t0.abs() < 1e-4, "t0({n}, {a}) = {t}");
        }
    }

    #[test]
    fn polygonal_equilibrium_shapes() {
        // n=4, a=1, α=1 → (i, −1, −i, 1)
        let eq = polygonal_equilibrium(4, 1.0, 1).unwrap();
        let want = [
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(1.0, 0.0),
        ];
        for (j, w) in want.iter().enumerate() {
            assert!((eq.site(j) - w).norm() < 1e-14);
        }
        // α = n → in-phase state
        let eq = polygonal_equilibrium(5, 0.3, 5).unwrap();
        for j in 0..5 {
            assert!((eq.site(j) - Complex64::new(0.3, 0.0)).norm() < 1e-13);
        }
        // moduli and phase increments for the Table-1 row-1 equilibrium
        let eq = polygonal_equilibrium(9, 0.651774, 1).unwrap();
        for j in 0..9 {
            assert!((eq.site(j).norm() - 0.651774).abs() < 1e-12);
            let dphi = (eq.site_cyclic(j as isize + 1) / eq.site(j)).arg();
            assert!((dphi - std::f64::consts::TAU / 9.0).abs() < 1e-12);
        }
        assert!(polygonal_equilibrium(2, 1.0, 1).is_err());
    }

    #[test]
    fn vector_field_vanishes_at_equilibrium() {
        for n in [3usize, 9, 16, 64] {
            for alpha in [1usize, 2, n] {
                for a in [0.1, 0.5, 1.0] {
                    let p = LatticeParams::from_dispersion(n, a, alpha).unwrap();
                    let eq = polygonal_equilibrium(n, a, alpha).unwrap();
                    let f = vector_field(&eq, &p);
                    assert!(
                        f.norm() <= 1e-12,
                        "residual {} at n={n} alpha={alpha} a={a}",
                        f.norm()
                    );
                }
            }
        }
        let p = LatticeParams::from_dispersion(5, 0.4, 1).unwrap();
        assert_eq!(vector_field(&State::zeros(5), &p).norm(), 0.0);
    }

    #[test]
    fn vector_field_is_j_grad_h() {
        let mut rng = StdRng::seed_from_u64(7);
        for n in [3usize, 5, 8] {
            let p = LatticeParams::with_omega(n, 0.5, 1, rng.gen_range(-1.0..1.0)).unwrap();
            let u = random_state(n, &mut rng);
            let f = vector_field(&u, &p);
            let jg = apply_j(&fd_gradient(&u, &p, 1e-6));
            assert!((f.0 - jg).amax() < 1e-6);
        }
    }

    #[test]
    fn vector_field_single_excited_site() {
        // n=3, u=(1,0,0), ω=1: against 𝒥 · finite-difference gradient
        let p = LatticeParams::with_omega(3, 1.0, 1, 1.0).unwrap();
        let mut u = State::zeros(3);
        u.set_site(0, Complex64::new(1.0, 0.0));
        let f = vector_field(&u, &p);
        let jg = apply_j(&fd_gradient(&u, &p, 1e-6));
        assert!((f.0 - jg).amax() < 1e-6);
    }

    #[test]
    fn gauge_equivariance() {
        let mut rng = StdRng::seed_from_u64(11);
        let p = LatticeParams::from_dispersion(6, 0.8, 1).unwrap();
        let u = random_state(6, &mut rng);
        for _ in 0..10 {
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let lhs = vector_field(&u.rotated(theta), &p);
            let rhs = State::from_sites(
                &vector_field(&u, &p)
                    .sites()
                    .iter()
                    .map(|v| Complex64::from_polar(1.0, theta) * v)
                    .collect::<Vec<_>>(),
            );
            assert!((lhs.0 - rhs.0).amax() < 1e-12);
        }
    }

    #[test]
    fn extended_rhs_reduction_and_unfolding() {
        let mut rng = StdRng::seed_from_u64(3);
        let p = LatticeParams::from_dispersion(5, 0.6, 1).unwrap();
        let u = random_state(5, &mut rng);
        let t = 3.7;
        let f0 = extended_rhs(&u, t, &p, 0.0, 0.0).unwrap();
        let vf = vector_field(&u, &p);
        assert!((f0.0.clone() - t * vf.0).amax() <= 1e-14);

        // equilibrium with p1 = p2 = 0 stays an equilibrium of the scaled field
        let eqp = LatticeParams::from_dispersion(7, 0.4, 1).unwrap();
        let eq = polygonal_equilibrium(7, 0.4, 1).unwrap();
        assert!(extended_rhs(&eq, 2.0, &eqp, 0.0, 0.0).unwrap().norm() < 1e-12);

        assert!(extended_rhs(&u, 0.0, &p, 0.0, 0.0).is_err());
    }

    #[test]
    fn extended_rhs_unfolding_terms_hand_expanded() {
        // n=3, u=(1, i, 0), T=1, ω=0, p1=0.1, p2=0.2; unfolding terms expanded
        // by hand per site:
        //   k=1: p1(4·1 − 4·1 − 2·conj(i)) + p2(i − conj(0)) = p1·2i + p2·i
        //   k=2: p1(4i − 4i³ − 2·0) + p2(0 − conj(1))        = p1·8i − p2
        //   k=3: p1(0 − 0 − 2·conj(1)) + p2(1 − conj(i))     = −2p1 + p2(1 + i)
        let p = LatticeParams::with_omega(3, 1.0, 1, 0.0).unwrap();
        let u = State::from_sites(&[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
        ]);
        let (p1, p2) = (0.1, 0.2);
        let full = extended_rhs(&u, 1.0, &p, p1, p2).unwrap();
        let base = extended_rhs(&u, 1.0, &p, 0.0, 0.0).unwrap();
        let unfold: Vec<Complex64> = (0..3).map(|k| full.site(k) - base.site(k)).collect();
        let want = [
            p1 * Complex64::new(0.0, 2.0) + p2 * Complex64::new(0.0, 1.0),
            p1 * Complex64::new(0.0, 8.0) - p2,
            Complex64::new(-2.0 * p1, 0.0) + p2 * Complex64::new(1.0, 1.0),
        ];
        for (got, want) in unfold.iter().zip(want.iter()) {
            assert!((got - want).norm() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn extended_jacobian_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(5);
        let p = LatticeParams::from_dispersion(4, 0.5, 1).unwrap();
        let u = random_state(4, &mut rng);
        let (t, p1, p2) = (2.3, 0.05, -0.03);
        let jac = jac_extended_rhs(&u, t, &p, p1, p2);
        let h = 1e-7;

        let dim = 8;
        for i in 0..dim {
            let mut up = u.clone();
            let mut dn = u.clone();
            up.0[i] += h;
            dn.0[i] -= h;
            let fu = extended_rhs(&up, t, &p, p1, p2).unwrap();
            let fd = extended_rhs(&dn, t, &p, p1, p2).unwrap();
            let col = (fu.0 - fd.0) / (2.0 * h);
            for r in 0..dim {
                assert!(
                    (jac.d_state[(r, i)] - col[r]).abs() < 1e-5,
                    "d_state({r},{i})"
                );
            }
        }

        let fu = extended_rhs(&u, t + h, &p, p1, p2).unwrap();
        let fd = extended_rhs(&u, t - h, &p, p1, p2).unwrap();
        assert!((((fu.0 - fd.0) / (2.0 * h)) - jac.d_t.clone()).amax() < 1e-5);

        let fu = extended_rhs(&u, t, &p, p1 + h, p2).unwrap();
        let fd = extended_rhs(&u, t, &p, p1 - h, p2).unwrap();
        assert!((((fu.0 - fd.0) / (2.0 * h)) - jac.d_p1.clone()).amax() < 1e-5);

        let fu = extended_rhs(&u, t, &p, p1, p2 + h).unwrap();
        let fd = extended_rhs(&u, t, &p, p1, p2 - h).unwrap();
        assert!((((fu.0 - fd.0) / (2.0 * h)) - jac.d_p2.clone()).amax() < 1e-5);

        // a-derivative moves ω along the dispersion relation
        let pu = p.at_amplitude(p.a + h);
        let pd = p.at_amplitude(p.a - h);
        let fu = extended_rhs(&u, t, &pu, p1, p2).unwrap();
        let fd = extended_rhs(&u, t, &pd, p1, p2).unwrap();
        assert!((((fu.0 - fd.0) / (2.0 * h)) - jac.d_a.clone()).amax() < 1e-5);
    }

    #[test]
    fn nonrotating_transform_identity_and_circle() {
        let n = 5;
        let p = LatticeParams::with_omega(n, 0.5, 1, 0.0).unwrap();
        let eq = polygonal_equilibrium(n, 0.5, 1).unwrap();
        let times: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let states = vec![eq.clone(); 40];
        let trace = Trace { times, states };

        // ω = 0: identity
        let out = to_nonrotating(&trace, &p, std::f64::consts::TAU / 4.0, 1).unwrap();
        for (a, b) in out.states.iter().zip(trace.states.iter()) {
            assert!((a.0.clone() - b.0.clone()).amax() < 1e-14);
        }

        // constant equilibrium with ω ≠ 0: every site sweeps a circle of radius a
        let p2 = LatticeParams::from_dispersion(n, 0.5, 1).unwrap();
        let nu = p2.omega / 0.25; // ω/ν = 1/4 resonance
        let out = to_nonrotating(&trace, &p2, nu, 4).unwrap();
        for s in &out.states {
            for j in 0..n {
                assert!((s.site(j).norm() - 0.5).abs() < 1e-12);
            }
        }
        assert!(to_nonrotating(&trace, &p2, nu, 0).is_err());
    }

    #[test]
    fn conservation_along_integrated_trajectory() {
        use crate::integrate::dopri5;
        let p = LatticeParams::from_dispersion(5, 0.45, 1).unwrap();
        let mut u = polygonal_equilibrium(5, 0.45, 1).unwrap();
        // perturb off the equilibrium so the trajectory is nontrivial
        u.set_site(0, u.site(0) + Complex64::new(0.05, -0.02));
        u.set_site(3, u.site(3) + Complex64::new(-0.01, 0.04));
        let e0 = hamiltonian(&u, &p);
        let a0 = amplitude_norm(&u);
        let f = |_t: f64, y: &DVector<f64>| vector_field(&State(y.clone()), &p).0;
        let sol = dopri5(&f, 0.0, 100.0, u.0.clone(), 1e-10, 1e-10).unwrap();
        let uf = State(sol);
        assert!((hamiltonian(&uf, &p) - e0).abs() / e0.abs() <= 1e-6);
        assert!((amplitude_norm(&uf) - a0).abs() / a0 <= 1e-6);
    }
}
