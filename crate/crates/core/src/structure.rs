//! Structure half-step: implicit plate update solved exactly per Fourier mode.
//!
//! For each wavevector the step solves
//! `η' = η + Δt v'` and `v' - v + Δt μ_k η' = 0` with
//! `μ_k = |k|⁴ + |k|⁶/N` (bending plus the `1/N` regularization).

use num_complex::Complex64;

use crate::energy::InequalityCheck;
use crate::error::{Error, Result};
use crate::torus::{SpectralCoeffs, TorusField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureParams {
    pub gamma: f64,
    pub s: f64,
    /// Number of time steps `N`; weights the regularization by `1/N`.
    pub steps: usize,
    pub dt: f64,
}

impl StructureParams {
    pub fn new(gamma: f64, s: f64, steps: usize, dt: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::OutOfRange(format!("gamma must be positive, got {gamma}")));
        }
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::OutOfRange(format!("s must lie in (0, 1], got {s}")));
        }
        if steps == 0 {
            return Err(Error::OutOfRange("step count must be positive".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::OutOfRange(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { gamma, s, steps, dt })
    }

    /// `μ_k = |k|⁴ + |k|⁶/N`.
    pub fn stiffness(&self, k2: f64) -> f64 {
        k2 * k2 + k2 * k2 * k2 / self.steps as f64
    }
}

/// Closed-form update of one mode: returns `(η', v')`.
pub fn advance_mode(eta: Complex64, v: Complex64, mu: f64, dt: f64) -> (Complex64, Complex64) {
    let v_half = (v - eta * (dt * mu)) / (1.0 + dt * dt * mu);
    (eta + v_half * dt, v_half)
}

pub fn advance_structure(eta: &TorusField, v: &TorusField, params: &StructureParams) -> Result<(TorusField, TorusField)> {
    eta.check_grid(v)?;
    let grid = eta.grid();
    let (eh, vh) = (eta.spectral(), v.spectral());
    let mut eo = SpectralCoeffs::zeros(grid);
    let mut vo = SpectralCoeffs::zeros(grid);
    for idx in 0..grid.len() {
        let mu = params.stiffness(grid.k_squared(idx));
        for c in 0..3 {
            let (e1, v1) = advance_mode(eh.component(c)[idx], vh.component(c)[idx], mu, params.dt);
            eo.component_mut(c)[idx] = e1;
            vo.component_mut(c)[idx] = v1;
        }
    }
    Ok((eo.to_field(), vo.to_field()))
}

/// Largest per-mode residual of the two structure equations.
pub fn structure_residual(
    eta: &TorusField,
    v: &TorusField,
    eta_half: &TorusField,
    v_half: &TorusField,
    params: &StructureParams,
) -> f64 {
    let grid = eta.grid();
    let (e0, v0, e1, v1) = (eta.spectral(), v.spectral(), eta_half.spectral(), v_half.spectral());
    let mut worst = 0.0_f64;
    for idx in 0..grid.len() {
        let mu = params.stiffness(grid.k_squared(idx));
        for c in 0..3 {
            let (a0, b0, a1, b1) = (
                e0.component(c)[idx],
                v0.component(c)[idx],
                e1.component(c)[idx],
                v1.component(c)[idx],
            );
            let r1 = a1 - a0 - b1 * params.dt;
            let r2 = b1 - b0 + a1 * (params.dt * mu);
            worst = worst.max(r1.norm()).max(r2.norm());
        }
    }
    worst
}

/// Structure energy parts. The certified energy uses the seminorm variants,
/// which are the quadratic forms of the step itself.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StructureEnergy {
    /// `½‖v‖²`
    pub kinetic: f64,
    /// `½‖η‖²_{H²}` with the full symbol `(1+|k|²)²`.
    pub bending: f64,
    /// `(1/2N)‖η‖²_{H³}` with the full symbol.
    pub reg: f64,
    /// `½‖Δη‖²`
    pub bending_seminorm: f64,
    /// `(1/2N)‖∇³η‖²`
    pub reg_seminorm: f64,
}

impl StructureEnergy {
    pub fn certified(&self) -> f64 {
        self.kinetic + self.bending_seminorm + self.reg_seminorm
    }

    pub fn full(&self) -> f64 {
        self.kinetic + self.bending + self.reg
    }
}

pub fn structure_energy(eta: &TorusField, v: &TorusField, steps: usize) -> StructureEnergy {
    let n = steps as f64;
    let e = eta.spectral();
    let kinetic = 0.5 * v.spectral().weighted_energy(|_| 1.0);
    StructureEnergy {
        kinetic,
        bending: 0.5 * e.weighted_energy(|k2| (1.0 + k2).powi(2)),
        reg: 0.5 / n * e.weighted_energy(|k2| (1.0 + k2).powi(3)),
        bending_seminorm: 0.5 * e.weighted_energy(|k2| k2 * k2),
        reg_seminorm: 0.5 / n * e.weighted_energy(|k2| k2 * k2 * k2),
    }
}

/// Numerical dissipation of one structure step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StructureJumps {
    /// `½‖v' - v‖²`
    pub velocity: f64,
    /// `½‖Δ(η' - η)‖²`
    pub bending: f64,
    /// `(1/2N)‖∇³(η' - η)‖²`
    pub reg: f64,
}

impl StructureJumps {
    pub fn total(&self) -> f64 {
        self.velocity + self.bending + self.reg
    }
}

pub fn structure_jumps(
    eta: &TorusField,
    v: &TorusField,
    eta_half: &TorusField,
    v_half: &TorusField,
    steps: usize,
) -> StructureJumps {
    let de = eta_half.combine(1.0, eta, -1.0);
    let dv = v_half.combine(1.0, v, -1.0);
    let e = structure_energy(&de, &dv, steps);
    StructureJumps {
        velocity: e.kinetic,
        bending: e.bending_seminorm,
        reg: e.reg_seminorm,
    }
}

/// `E^{n+1/2} + jumps ≤ E^n`, using the certified energies.
pub fn check_structure_energy_inequality(
    before: &StructureEnergy,
    after: &StructureEnergy,
    increments: &StructureJumps,
) -> InequalityCheck {
    InequalityCheck::evaluate(after.certified() + increments.total(), before.certified())
}
