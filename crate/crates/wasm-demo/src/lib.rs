//! Browser bindings for a few fsi-core routines.

use fsi_core::ale::harmonic_extension;
use fsi_core::config::{Axis, InitialData, SimConfig};
use fsi_core::splitting::{run, Termination};
use fsi_core::structure::{advance_mode, StructureParams};
use fsi_core::torus::{TorusField, TorusGrid};
use num_complex::Complex64;
use wasm_bindgen::prelude::*;

fn js<T>(r: Result<T, String>) -> Result<T, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

fn jacobian_slice_values(amplitude: f64, k: u32, nx: usize, nz: usize) -> Result<Vec<f64>, String> {
    if nx < 4 || !nx.is_multiple_of(2) || nz < 3 || k as usize >= nx / 2 {
        return Err(String::from("need even nx >= 4, nz >= 3 and k < nx/2"));
    }
    let eta = TorusField::from_fn(TorusGrid::new(nx, 4), |x, _| [0.0, 0.0, amplitude * (k as f64 * x).cos()]);
    let map = harmonic_extension(&eta, nz);
    let g = map.grid();
    let mut out = Vec::with_capacity(nx * nz);
    for j in 0..nz {
        for ix in 0..nx {
            out.push(map.jacobian().get(0, g.node(j, g.torus.index(ix, 0))));
        }
    }
    Ok(out)
}

/// Jacobian of the ALE map for `η = a cos(kx) e_z` on the `y = 0` slice.
///
/// Returns `nz` rows of `nx` values, bottom row first.
#[wasm_bindgen]
pub fn jacobian_slice(amplitude: f64, k: u32, nx: usize, nz: usize) -> Result<Vec<f64>, JsValue> {
    js(jacobian_slice_values(amplitude, k, nx, nz))
}

fn plate_mode_response_values(kx: i32, ky: i32, steps: usize, horizon: f64) -> Result<Vec<f64>, String> {
    if steps == 0 || horizon.is_nan() || horizon <= 0.0 {
        return Err(String::from("need steps > 0 and a positive horizon"));
    }
    let dt = horizon / steps as f64;
    let params = StructureParams::new(1.0, 0.5, steps, dt).map_err(|e| e.to_string())?;
    let k2 = (kx * kx + ky * ky) as f64;
    let mu = params.stiffness(k2);
    let (mut eta, mut v) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    let mut out = Vec::with_capacity(2 * (steps + 1));
    for n in 0..=steps {
        out.push(eta.re);
        out.push(0.5 * (mu * eta.norm_sqr() + v.norm_sqr()));
        if n < steps {
            (eta, v) = advance_mode(eta, v, mu, dt);
        }
    }
    Ok(out)
}

/// Plate-only splitting for one Fourier mode started from `η = 1, v = 0`.
///
/// Returns `(η^n, elastic + kinetic energy)` pairs for `n = 0..=steps`; the
/// energy decay is the numerical dissipation of the implicit step.
#[wasm_bindgen]
pub fn plate_mode_response(kx: i32, ky: i32, steps: usize, horizon: f64) -> Result<Vec<f64>, JsValue> {
    js(plate_mode_response_values(kx, ky, steps, horizon))
}

fn coupled_run_values(amplitude: f64, nu: f64, gamma: f64, steps: usize, horizon: f64) -> Result<Vec<f64>, String> {
    let cfg = SimConfig {
        nx: 8,
        ny: 8,
        nz: 6,
        steps,
        horizon,
        nu,
        gamma,
        initial: InitialData::SingleMode {
            kx: 1,
            ky: 0,
            amplitude,
            component: Axis::Z,
        },
        ..SimConfig::default()
    };
    let outcome = run(&cfg, |_, _| Ok(())).map_err(|e| e.to_string())?;
    let mut out = vec![0.0, outcome.ledger.e0, 1.0];
    if let Some(first) = outcome.trajectory.eta.first() {
        out[2] = harmonic_extension(first, cfg.nz).min_jacobian();
    }
    for r in &outcome.ledger.records {
        out.extend([r.t, r.e_next, r.min_jacobian]);
    }
    if let Termination::Contact { t_max, .. } = outcome.termination {
        out.extend([f64::NAN, f64::NAN, f64::NAN, t_max]);
    }
    Ok(out)
}

/// Small coupled run (8×8×6) from a single-mode plate displacement.
///
/// Returns `[t, E, min J]` triples per completed step; a trailing `NaN`
/// triple followed by `T_max` marks contact.
#[wasm_bindgen]
pub fn coupled_run(amplitude: f64, nu: f64, gamma: f64, steps: usize, horizon: f64) -> Result<Vec<f64>, JsValue> {
    js(coupled_run_values(amplitude, nu, gamma, steps, horizon))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_slice_is_identity() {
        let j = jacobian_slice_values(0.0, 1, 8, 5).unwrap();
        assert_eq!(j.len(), 40);
        assert!(j.iter().all(|&v| v == 1.0));
        assert!(jacobian_slice_values(0.1, 4, 8, 5).is_err());
    }

    #[test]
    fn plate_energy_never_grows() {
        let r = plate_mode_response_values(1, 1, 32, 1.0).unwrap();
        let e: Vec<f64> = r.chunks(2).map(|p| p[1]).collect();
        assert!(e.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));
    }

    #[test]
    fn coupled_run_reports_every_step() {
        let r = coupled_run_values(0.02, 1.0, 1.0, 4, 0.1).unwrap();
        assert_eq!(r.len(), 15);
        assert!(r[4] <= r[1]);
    }
}
