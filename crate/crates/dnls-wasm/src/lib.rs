//! Browser demo exports.
//!
//! Compiled to `wasm32-unknown-unknown` as a self-contained module with plain
//! C-ABI exports (no bindgen glue): results are returned as length-prefixed
//! UTF-8 buffers in linear memory, decoded by `www/app.js`. Build with
//!
//! ```text
//! cargo build -p dnls-wasm --target wasm32-unknown-unknown --release
//! ```
//!
//! and serve `www/` with the produced `dnls_wasm.wasm` beside it.

use dnls_core::bvp::FreeParam;
use dnls_core::choreography::{classify_orbit, orbit_label, OrbitClass};
use dnls_core::io::{ModeSelect, ResonanceTarget, RunConfig, SolverConfig, StabilityConfig, StepConfig};
use dnls_core::lattice::LatticeParams;
use dnls_core::pipeline;
use dnls_core::spectral::{mode_hypothesis_ok, normal_modes};

/// Length-prefixed buffer handoff: 4 LE length bytes, then the payload.
fn to_buffer(s: String) -> *mut u8 {
    let bytes = s.into_bytes();
    let len = bytes.len() as u32;
    let mut out = Vec::with_capacity(4 + bytes.len());
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&bytes);
    let ptr = out.as_mut_ptr();
    std::mem::forget(out);
    ptr
}

/// # Safety
/// `ptr` must come from one of this module's exports and be freed once.
#[no_mangle]
pub unsafe extern "C" fn buf_free(ptr: *mut u8) {
    if ptr.is_null() {
        return;
    }
    let len = u32::from_le_bytes(*(ptr as *const [u8; 4])) as usize;
    drop(Vec::from_raw_parts(ptr, 4 + len, 4 + len));
}

fn err_json(msg: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": msg.to_string() }).to_string()
}

/// Normal-mode table of the polygonal equilibrium.
#[no_mangle]
pub extern "C" fn spectrum_json(n: u32, a: f64, alpha: u32) -> *mut u8 {
    let result = (|| -> Result<String, dnls_core::Error> {
        let p = LatticeParams::from_dispersion(n as usize, a, alpha as usize)?;
        let spec = normal_modes(&p)?;
        let modes: Vec<serde_json::Value> = spec
            .modes
            .iter()
            .map(|m| {
                serde_json::json!({
                    "k": m.k,
                    "nu": m.nu,
                    "admissible": m.admissible,
                })
            })
            .collect();
        Ok(serde_json::json!({
            "n": p.n,
            "alpha": p.alpha,
            "a": p.a,
            "omega": p.omega,
            "t0": p.t0(),
            "hypothesis_ok": mode_hypothesis_ok(&p),
            "modes": modes,
        })
        .to_string())
    })();
    to_buffer(result.unwrap_or_else(err_json))
}

/// Resonance arithmetic: label, classification, curve count.
#[no_mangle]
pub extern "C" fn resonance_json(n: u32, k: u32, alpha: u32, ell: i64, m: i64) -> *mut u8 {
    let result = (|| -> Result<String, dnls_core::Error> {
        let n = n as usize;
        let label = orbit_label(n, k as usize, alpha as usize, ell, m)?;
        let class = classify_orbit(n, k as usize, alpha as usize, ell, m)?;
        let (kind, curves) = match class {
            OrbitClass::Full => ("Full", 1usize),
            OrbitClass::Partial { curves } => ("Partial", curves),
        };
        Ok(serde_json::json!({
            "label": label,
            "type": kind,
            "curves": curves,
            "sites_per_curve": n / curves,
        })
        .to_string())
    })();
    to_buffer(result.unwrap_or_else(err_json))
}

/// Run a reduced continuation pipeline and render the located resonant orbit.
/// `frame`: 0 rotating, 1 non-rotating. Returns JSON with an `svg` field.
#[no_mangle]
pub extern "C" fn choreography_json(
    n: u32,
    alpha: u32,
    k: u32,
    a_init: f64,
    xn0_target: f64,
    ell: i64,
    m: i64,
    frame: u32,
) -> *mut u8 {
    let result = (|| -> Result<String, dnls_core::Error> {
        let config = RunConfig {
            n: n as usize,
            alpha: alpha as usize,
            mode_k: ModeSelect::K(k as usize),
            a_init,
            eps: None,
            xn0_target,
            main_direction: 1.0,
            a_min: None,
            a_max: Some(2.0 * (std::f64::consts::PI / n as f64).sin() - 1e-3),
            resonances: vec![ResonanceTarget {
                ell,
                m,
                lock_a_targets: vec![],
            }],
            max_den: 32,
            solver: SolverConfig {
                n_intervals: 40,
                degree: 4,
                tol: 1e-9,
                max_iter: 10,
            },
            continuation: StepConfig {
                ds0: 0.02,
                ds_min: 1e-6,
                ds_max: 0.08,
                max_steps: 1200,
                adapt_every: 0,
                period_metric_weight: 1.0,
            },
            stability: StabilityConfig::default(),
            verify_periods: 0,
            aspirational: true,
            out_dir: None,
        };
        let out = pipeline::run_with_mode_k(&config, k as usize)?;
        let name = format!("res_{ell}_{m}");
        let orbit = out
            .orbit(&name)
            .ok_or_else(|| dnls_core::Error::NoBracket {
                target: ell as f64 / m as f64,
            })?;
        let svg = if frame == 0 {
            dnls_core::render::render_rotating_svg(&orbit.orbit, 1500)?
        } else {
            match &orbit.trace {
                Some(t) => dnls_core::render::render_nonrotating_svg(t),
                None => dnls_core::render::render_rotating_svg(&orbit.orbit, 1500)?,
            }
        };
        let mon = orbit.orbit.monitors();
        Ok(serde_json::json!({
            "svg": svg,
            "a": mon.a,
            "T": mon.t_period,
            "T0": mon.t0,
            "ratio": mon.ratio,
            "xn0": mon.xn0,
            "class": orbit.class.map(|c| match c {
                OrbitClass::Full => "Full".to_string(),
                OrbitClass::Partial { curves } => format!("Partial({curves})"),
            }),
            "stability": orbit.floquet.as_ref().map(|f| f.classification.flag()),
            "winding": orbit.winding,
            "choreography_residual": orbit.choreography_residual,
        })
        .to_string())
    })();
    to_buffer(result.unwrap_or_else(err_json))
}

// keep the linker-visible surface referenced so the demo compiles on the host
#[allow(dead_code)]
fn _host_surface() {
    let _ = FreeParam::Period;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decode(ptr: *mut u8) -> String {
        unsafe {
            let len = u32::from_le_bytes(*(ptr as *const [u8; 4])) as usize;
            let slice = std::slice::from_raw_parts(ptr.add(4), len);
            let s = String::from_utf8(slice.to_vec()).unwrap();
            buf_free(ptr);
            s
        }
    }

    #[test]
    fn spectrum_export_roundtrip() {
        let s = decode(spectrum_json(9, 0.4, 1));
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["n"], 9);
        assert_eq!(v["modes"].as_array().unwrap().len(), 8);
        let s = decode(spectrum_json(2, 0.4, 1));
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert!(v.get("error").is_some());
    }

    #[test]
    fn resonance_export() {
        let s = decode(resonance_json(9, 1, 1, 1, 10));
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["type"], "Full");
        let s = decode(resonance_json(9, 4, 1, 2, 5));
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["type"], "Partial");
        assert_eq!(v["curves"], 3);
        assert_eq!(v["sites_per_curve"], 3);
    }
}
