//! Local polynomial basis for orthogonal collocation.
//!
//! Each mesh interval carries a degree-`m` polynomial represented by its
//! values at the `m+1` uniformly spaced local points `σ_i = i/m`. Collocation
//! is imposed at the `m` Gauss–Legendre points of the interval, which gives
//! superconvergence at the mesh points.

/// Precomputed weights for one collocation degree.
#[derive(Debug, Clone)]
pub struct Basis {
    pub degree: usize,
    /// Gauss–Legendre nodes on (0, 1), length `m`.
    pub rho: Vec<f64>,
    /// Gauss–Legendre weights on (0, 1), length `m`.
    pub gauss_w: Vec<f64>,
    /// `eval[l][i] = L_i(ρ_l)`.
    pub eval: Vec<Vec<f64>>,
    /// `deriv[l][i] = L'_i(ρ_l)` (local coordinate derivative).
    pub deriv: Vec<Vec<f64>>,
    /// Integral of each Lagrange polynomial over (0, 1).
    pub quad: Vec<f64>,
    /// Barycentric weights `λ_i = 1/∏_{j≠i}(σ_i − σ_j)`.
    pub lambda: Vec<f64>,
}

impl Basis {
    pub fn new(degree: usize) -> Self {
        assert!((1..=7).contains(&degree), "collocation degree 1..=7");
        let m = degree;
        let (rho, gauss_w) = gauss_legendre_unit(m);
        let nodes: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
        let lambda: Vec<f64> = (0..=m)
            .map(|i| {
                let mut prod = 1.0;
                for j in 0..=m {
                    if j != i {
                        prod *= nodes[i] - nodes[j];
                    }
                }
                1.0 / prod
            })
            .collect();

        let eval: Vec<Vec<f64>> = rho
            .iter()
            .map(|&x| lagrange_values(&nodes, &lambda, x))
            .collect();
        let deriv: Vec<Vec<f64>> = rho
            .iter()
            .map(|&x| lagrange_derivs(&nodes, &lambda, x))
            .collect();
        // ∫₀¹ L_i: Gauss with m points is exact for degree m ≤ 2m−1
        let quad: Vec<f64> = (0..=m)
            .map(|i| (0..m).map(|l| gauss_w[l] * eval[l][i]).sum())
            .collect();

        Basis {
            degree: m,
            rho,
            gauss_w,
            eval,
            deriv,
            quad,
            lambda,
        }
    }

    /// Local nodes `σ_i = i/m`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.degree)
            .map(|i| i as f64 / self.degree as f64)
            .collect()
    }

    /// Lagrange values at an arbitrary local coordinate `s ∈ [0, 1]`.
    pub fn values_at(&self, s: f64) -> Vec<f64> {
        lagrange_values(&self.nodes(), &self.lambda, s)
    }

    /// Lagrange derivatives at an arbitrary local coordinate.
    pub fn derivs_at(&self, s: f64) -> Vec<f64> {
        lagrange_derivs(&self.nodes(), &self.lambda, s)
    }

    /// Coefficients of the (constant) `m`-th derivative: `u^{(m)} = Σ γ_i u_i`
    /// in local coordinates (scale by `1/h^m` for the real derivative).
    pub fn mth_deriv_coeffs(&self) -> Vec<f64> {
        let mfact: f64 = (1..=self.degree).map(|i| i as f64).product();
        self.lambda.iter().map(|l| l * mfact).collect()
    }
}

fn lagrange_values(nodes: &[f64], lambda: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    // exact node hit
    for (i, &s) in nodes.iter().enumerate() {
        if x == s {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            return v;
        }
    }
    let ell: f64 = nodes.iter().map(|&s| x - s).product();
    (0..n).map(|i| ell * lambda[i] / (x - nodes[i])).collect()
}

fn lagrange_derivs(nodes: &[f64], lambda: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    for (i, &s) in nodes.iter().enumerate() {
        if x == s {
            // L'_j(σ_i) closed forms
            let mut d = vec![0.0; n];
            for j in 0..n {
                if j != i {
                    d[j] = lambda[j] / lambda[i] / (nodes[i] - nodes[j]);
                }
            }
            d[i] = (0..n)
                .filter(|&j| j != i)
                .map(|j| 1.0 / (nodes[i] - nodes[j]))
                .sum::<f64>();
            return d;
        }
    }
    // L_i(x) = λ_i ∏_{j≠i}(x − σ_j);  L'_i = L_i · Σ_{r≠i} 1/(x − σ_r)
    (0..n)
        .map(|i| {
            let li: f64 = lambda[i]
                * (0..n)
                    .filter(|&j| j != i)
                    .map(|j| x - nodes[j])
                    .product::<f64>();
            let s: f64 = (0..n)
                .filter(|&r| r != i)
                .map(|r| 1.0 / (x - nodes[r]))
                .sum();
            li * s
        })
        .collect()
}

/// Gauss–Legendre nodes and weights on (0, 1).
pub fn gauss_legendre_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        // initial guess on (−1, 1)
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(m, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(m, x);
        nodes[i] = (1.0 - x) / 2.0; // reversed so nodes come out increasing
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Legendre polynomial `P_m(x)` and derivative.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 1..m {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
