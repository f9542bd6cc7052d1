//! Dense real eigenvalues by Hessenberg reduction and double-shift QR.
//!
//! Monodromy and stability matrices carry clustered unit-circle and defective
//! eigenvalues; the iteration uses the standard exceptional-shift escape so it
//! cannot cycle on them. Eigenvalues only (the solvers that need eigenvectors
//! use shifted inverse iteration on top of these).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

/// All eigenvalues of a square real matrix.
pub fn complex_eigenvalues_robust(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument("eigenvalues of a non-square matrix".into()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite matrix entries".into()));
    }
    let mut h = m.clone();
    balance(&mut h);
    hessenberg(&mut h);
    hqr(h)
}

/// EISPACK-style balancing: similarity scalings by powers of 2 equalizing
/// row/column norms. Exact in floating point and improves accuracy.
fn balance(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    let radix: f64 = 2.0;
    let sqrdx = radix * radix;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / radix;
                let mut f = 1.0;
                let s = c + r;
                let mut c2 = c;
                while c2 < g {
                    f *= radix;
                    c2 *= sqrdx;
                }
                g = r * radix;
                while c2 > g {
                    f /= radix;
                    c2 /= sqrdx;
                }
                if (c2 + r) / f < 0.95 * s {
                    done = false;
                    let ginv = 1.0 / f;
                    for j in 0..n {
                        a[(i, j)] *= ginv;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Reduction to upper Hessenberg form by stabilized elementary similarity
/// transformations.
fn hessenberg(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for m in 1..n - 1 {
        // pivot: largest magnitude in column m−1 below row m−1
        let mut x = 0.0f64;
        let mut i_piv = m;
        for j in m..n {
            if a[(j, m - 1)].abs() > x.abs() {
                x = a[(j, m - 1)];
                i_piv = j;
            }
        }
        if i_piv != m {
            for j in m - 1..n {
                a.swap((i_piv, j), (m, j));
            }
            for j in 0..n {
                a.swap((j, i_piv), (j, m));
            }
        }
        if x != 0.0 {
            for i in m + 1..n {
                let mut y = a[(i, m - 1)];
                if y != 0.0 {
                    y /= x;
                    a[(i, m - 1)] = y;
                    for j in m..n {
                        let t = a[(m, j)];
                        a[(i, j)] -= y * t;
                    }
                    for j in 0..n {
                        let t = a[(j, i)];
                        a[(j, m)] += y * t;
                    }
                }
            }
        }
    }
    // zero the sub-Hessenberg multipliers left in place
    for i in 2..n {
        for j in 0..i - 1 {
            a[(i, j)] = 0.0;
        }
    }
}

/// Double-shift QR for a real upper Hessenberg matrix; returns all
/// eigenvalues. Exceptional shifts every 10 stalled iterations prevent the
/// cycling that clustered unit-circle spectra can otherwise provoke.
fn hqr(mut a: DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    let mut eig: Vec<Complex64> = Vec::with_capacity(n);
    let mut anorm = 0.0f64;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    if anorm == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); n]);
    }
    let eps = f64::EPSILON;
    let mut nn = n as isize - 1;
    let mut t = 0.0f64;
    while nn >= 0 {
        let mut its = 0;
        loop {
            // search for a negligible subdiagonal element
            let mut l = nn;
            while l >= 1 {
                let s = a[(l as usize - 1, l as usize - 1)].abs() + a[(l as usize, l as usize)].abs();
                let s = if s == 0.0 { anorm } else { s };
                if a[(l as usize, l as usize - 1)].abs() <= eps * s {
                    a[(l as usize, l as usize - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let x = a[(nn as usize, nn as usize)];
            if l == nn {
                eig.push(Complex64::new(x + t, 0.0));
                nn -= 1;
                break;
            }
            let y = a[(nn as usize - 1, nn as usize - 1)];
            let w = a[(nn as usize, nn as usize - 1)] * a[(nn as usize - 1, nn as usize)];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let x = x + t;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    eig.push(Complex64::new(x + z, 0.0));
                    if z != 0.0 {
                        eig.push(Complex64::new(x - w / z, 0.0));
                    } else {
                        eig.push(Complex64::new(x + z, 0.0));
                    }
                } else {
                    eig.push(Complex64::new(x + p, z));
                    eig.push(Complex64::new(x + p, -z));
                }
                nn -= 2;
                break;
            }
            if its == 60 {
                return Err(Error::InvalidArgument(
                    "eigenvalue iteration did not converge".into(),
                ));
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its % 10 == 9 {
                // exceptional shift
                t += x;
                for i in 0..=nn as usize {
                    a[(i, i)] -= x;
                }
                let s = a[(nn as usize, nn as usize - 1)].abs()
                    + a[(nn as usize - 1, nn as usize - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // Francis double-shift sweep on rows l..=nn
            let lu = l as usize;
            let nnu = nn as usize;
            let mut m = nnu - 2;
            let (mut p, mut q, mut r) = (0.0, 0.0, 0.0);
            while m as isize >= lu as isize {
                let z = a[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - rr - ss;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == lu {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs()
                    * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nnu {
                a[(i, i - 2)] = 0.0;
                if i != m + 2 {
                    a[(i, i - 3)] = 0.0;
                }
            }
            for k in m..nnu {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = if k != nnu - 1 { a[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if lu != m {
                        a[(k, k - 1)] = -a[(k, k - 1)];
                    }
                } else {
                    a[(k, k - 1)] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                // row modification
                for j in k..=nnu {
                    p = a[(k, j)] + q * a[(k + 1, j)];
                    if k != nnu - 1 {
                        p += r * a[(k + 2, j)];
                        a[(k + 2, j)] -= p * z;
                    }
                    a[(k + 1, j)] -= p * y;
                    a[(k, j)] -= p * x;
                }
                // column modification
                let mmin = if nnu < k + 3 { nnu } else { k + 3 };
                for i in lu..=mmin {
                    p = x * a[(i, k)] + y * a[(i, k + 1)];
                    if k != nnu - 1 {
                        p += z * a[(i, k + 2)];
                        a[(i, k + 2)] -= p * r;
                    }
                    a[(i, k + 1)] -= p * q;
                    a[(i, k)] -= p;
                }
            }
        }
    }
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_mods(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn small_matrices() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let e = complex_eigenvalues_robust(&m).unwrap();
        assert!(e.iter().any(|l| (l - Complex64::new(0.0, 1.0)).norm() < 1e-12));

        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 3.0, 4.0, 0.0, -4.0, 3.0]);
        let e = sorted_mods(complex_eigenvalues_robust(&m).unwrap());
        assert!((e[0] - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        assert!((e[1].re - 3.0).abs() < 1e-12 && (e[1].im.abs() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn defective_and_unit_circle_spectra() {
        // Jordan block at 1 plus a rotation pair: the classic stall case
        let mut m = DMatrix::identity(4, 4);
        m[(0, 1)] = 1.0;
        m[(2, 2)] = 0.5f64.cos();
        m[(2, 3)] = 0.5f64.sin();
        m[(3, 2)] = -(0.5f64.sin());
        m[(3, 3)] = 0.5f64.cos();
        let e = complex_eigenvalues_robust(&m).unwrap();
        assert_eq!(e.len(), 4);
        for l in &e {
            assert!((l.norm() - 1.0).abs() < 1e-6, "modulus {}", l.norm());
        }
    }

    #[test]
    fn agrees_with_characteristic_polynomial_on_random_matrices() {
        use rand::{rngs::StdRng, Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..20 {
            let n = rng.gen_range(2..8);
            let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let e = complex_eigenvalues_robust(&m).unwrap();
            assert_eq!(e.len(), n);
            // trace and determinant as symmetric-function checks
            let tr: Complex64 = e.iter().sum();
            assert!((tr.re - m.trace()).abs() < 1e-10 && tr.im.abs() < 1e-10);
            let det: Complex64 = e.iter().product();
            assert!((det.re - m.determinant()).abs() < 1e-8 && det.im.abs() < 1e-8);
        }
    }
}
