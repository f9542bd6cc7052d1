//! Adaptive embedded Runge–Kutta integration (Dormand–Prince 5(4)).
//!
//! Used for the a-posteriori verification of computed orbits and as the
//! independent route to the monodromy matrix. Not symplectic; accuracy comes
//! from tight tolerances.

use nalgebra::DVector;

use crate::{Error, Result};

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
// difference between the 5th and embedded 4th order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One adaptive integration pass from `t0` to `t1`; returns the final state.
pub fn dopri5<F>(f: &F, t0: f64, t1: f64, y0: DVector<f64>, rtol: f64, atol: f64) -> Result<DVector<f64>>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let mut sink = |_t: f64, _y: &DVector<f64>| {};
    dopri5_observed(f, t0, t1, y0, rtol, atol, &mut sink)
}

/// Same as [`dopri5`] but calls `observe(t, y)` at every accepted step
/// (including the initial and final states).
pub fn dopri5_observed<F, O>(
    f: &F,
    t0: f64,
    t1: f64,
    y0: DVector<f64>,
    rtol: f64,
    atol: f64,
    observe: &mut O,
) -> Result<DVector<f64>>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
    O: FnMut(f64, &DVector<f64>),
{
    let dim = y0.len();
    let span = t1 - t0;
    if span == 0.0 {
        observe(t0, &y0);
        return Ok(y0);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut k0 = f(t, &y);
    observe(t, &y);

    // initial step from the scale of y and f
    let sc = atol + rtol * y.amax().max(1.0);
    let f_amax = k0.amax().max(1e-10);
    let mut h = dir * (0.01 * sc / f_amax).min(span.abs() / 10.0).max(1e-10);

    let mut ks: Vec<DVector<f64>> = vec![DVector::zeros(dim); 7];
    let max_steps = 50_000_000usize;
    for _step in 0..max_steps {
        if (t - t1) * dir >= 0.0 {
            return Ok(y);
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Integration(format!("step underflow at t = {t}")));
        }

        ks[0] = k0.clone();
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in ks.iter().enumerate().take(s) {
                let a = A[s - 1][j];
                if a != 0.0 {
                    ys.axpy(h * a, kj, 1.0);
                }
            }
            ks[s] = f(t + C[s - 1] * h, &ys);
        }
        // 5th-order solution is the stage-7 argument (FSAL)
        let mut y5 = y.clone();
        for (j, kj) in ks.iter().enumerate().take(6) {
            let a = A[5][j];
            if a != 0.0 {
                y5.axpy(h * a, kj, 1.0);
            }
        }

        // error estimate
        let mut err: f64 = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for (j, kj) in ks.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let sc = atol + rtol * y[i].abs().max(y5[i].abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / dim as f64).sqrt();

        if err <= 1.0 {
            t += h;
            y = y5;
            k0 = ks[6].clone();
            observe(t, &y);
        }
        let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        h *= fac;
    }
    Err(Error::Integration("step budget exhausted".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_accuracy() {
        let f = |_t: f64, y: &DVector<f64>| DVector::from_vec(vec![y[1], -y[0]]);
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let t1 = 10.0 * std::f64::consts::TAU;
        let y = dopri5(&f, 0.0, t1, y0, 1e-12, 1e-12).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8);
        assert!(y[1].abs() < 1e-8);
    }

    #[test]
    fn backward_integration() {
        let f = |_t: f64, y: &DVector<f64>| y.clone();
        let y0 = DVector::from_vec(vec![1.0]);
        let y = dopri5(&f, 0.0, -1.0, y0, 1e-12, 1e-12).unwrap();
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-10);
    }
}
