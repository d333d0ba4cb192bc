//! ALE map of the reference channel onto the deformed fluid domain.
//!
//! `A = id + B` where each component of `B` is the harmonic extension of the
//! plate displacement: per Fourier mode `B̂_k(z) = η̂_k sinh(|k|z)/sinh(|k|)`
//! and `B̂_0(z) = η̂_0 z`. The z-profiles are evaluated exactly; x/y
//! derivatives are spectral.

use num_complex::Complex64;

use crate::channel::{field_gradient, ChannelField, ChannelGrid};
use crate::error::{Error, Result};
use crate::torus::{plans, sobolev_norm, TorusField};

pub type Mat3 = [[f64; 3]; 3];

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Cofactor inverse; `None` for a zero determinant.
pub fn inv3(m: &Mat3) -> Option<Mat3> {
    let d = det3(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let c = |r0: usize, c0: usize, r1: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let inv_d = 1.0 / d;
    Some([
        [c(1, 1, 2, 2) * inv_d, -c(0, 1, 2, 2) * inv_d, c(0, 1, 1, 2) * inv_d],
        [-c(1, 0, 2, 2) * inv_d, c(0, 0, 2, 2) * inv_d, -c(0, 0, 1, 2) * inv_d],
        [c(1, 0, 2, 1) * inv_d, -c(0, 0, 2, 1) * inv_d, c(0, 0, 1, 1) * inv_d],
    ])
}

fn load(t: &[Vec<f64>; 9], i: usize) -> Mat3 {
    [
        [t[0][i], t[1][i], t[2][i]],
        [t[3][i], t[4][i], t[5][i]],
        [t[6][i], t[7][i], t[8][i]],
    ]
}

/// Harmonic profile `sinh(κz)/sinh(κ)` (or `z` for κ = 0) and its z-derivative.
pub fn extension_profile(kappa: f64, z: f64) -> (f64, f64) {
    if kappa == 0.0 {
        return (z, 1.0);
    }
    let denom = 1.0 - (-2.0 * kappa).exp();
    let lead = (kappa * (z - 1.0)).exp();
    let e = (-2.0 * kappa * z).exp();
    (lead * (1.0 - e) / denom, kappa * lead * (1.0 + e) / denom)
}

/// Geometry sampled at the cell midpoints `z_{m+1/2}`.
#[derive(Clone, Debug)]
pub struct CellGeometry {
    pub jacobian: Vec<f64>,
    pub grad_inv: [Vec<f64>; 9],
}

impl CellGeometry {
    pub fn grad_inv_at(&self, i: usize) -> Mat3 {
        load(&self.grad_inv, i)
    }
}

#[derive(Clone, Debug)]
pub struct AleMap {
    grid: ChannelGrid,
    eta: TorusField,
    displacement: ChannelField,
    grad: ChannelField,
    grad_inv: ChannelField,
    jacobian: ChannelField,
    cells: CellGeometry,
    min_jacobian: f64,
    injective: bool,
}

struct Samples {
    disp: [Vec<f64>; 3],
    grad: [Vec<f64>; 9],
}

fn sample_layers(eta: &TorusField, zs: &[f64]) -> Samples {
    let tg = eta.grid();
    let nxy = tg.len();
    let p = plans(tg);
    let coeffs = eta.spectral();
    let n = zs.len() * nxy;
    let mut disp: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
    let mut grad: [Vec<f64>; 9] = std::array::from_fn(|_| vec![0.0; n]);
    let kappa: Vec<f64> = (0..nxy).map(|i| tg.k_squared(i).sqrt()).collect();
    let ksym: Vec<(f64, f64)> = (0..nxy).map(|i| tg.derivative_symbols(i)).collect();
    let mut val = vec![Complex64::default(); nxy];
    let mut gx = val.clone();
    let mut gy = val.clone();
    let mut gz = val.clone();
    for (l, &z) in zs.iter().enumerate() {
        let range = l * nxy..(l + 1) * nxy;
        for c in 0..3 {
            let eh = coeffs.component(c);
            for i in 0..nxy {
                let (phi, dphi) = extension_profile(kappa[i], z);
                let a = eh[i] * phi;
                val[i] = a;
                gx[i] = a * Complex64::new(0.0, ksym[i].0);
                gy[i] = a * Complex64::new(0.0, ksym[i].1);
                gz[i] = eh[i] * dphi;
            }
            disp[c][range.clone()].copy_from_slice(&p.synthesize(&val));
            grad[3 * c][range.clone()].copy_from_slice(&p.synthesize(&gx));
            grad[3 * c + 1][range.clone()].copy_from_slice(&p.synthesize(&gy));
            grad[3 * c + 2][range.clone()].copy_from_slice(&p.synthesize(&gz));
        }
    }
    for c in 0..3 {
        grad[4 * c].iter_mut().for_each(|v| *v += 1.0);
    }
    Samples { disp, grad }
}

fn invert_all(grad: &[Vec<f64>; 9]) -> (Vec<f64>, [Vec<f64>; 9]) {
    let n = grad[0].len();
    let mut jac = vec![0.0; n];
    let mut inv: [Vec<f64>; 9] = std::array::from_fn(|_| vec![f64::NAN; n]);
    for i in 0..n {
        let m = load(grad, i);
        jac[i] = det3(&m);
        if let Some(mi) = inv3(&m) {
            for r in 0..3 {
                for c in 0..3 {
                    inv[3 * r + c][i] = mi[r][c];
                }
            }
        }
    }
    (jac, inv)
}

/// Builds `A_η` on a channel with `nz` z-nodes.
pub fn harmonic_extension(eta: &TorusField, nz: usize) -> AleMap {
    let tg = eta.grid();
    let grid = ChannelGrid::new(tg.nx, tg.ny, nz);
    let node_z: Vec<f64> = (0..nz).map(|j| grid.z(j)).collect();
    let cell_z: Vec<f64> = (0..nz - 1).map(|m| grid.z_cell(m)).collect();

    let nodes = sample_layers(eta, &node_z);
    let (jac, inv) = invert_all(&nodes.grad);
    let cells = sample_layers(eta, &cell_z);
    let (cjac, cinv) = invert_all(&cells.grad);

    let min_jacobian = jac.iter().copied().fold(f64::INFINITY, f64::min);
    let min_cell = cjac.iter().copied().fold(f64::INFINITY, f64::min);
    let flat = |parts: &[Vec<f64>]| parts.concat();
    AleMap {
        grid,
        eta: eta.clone(),
        displacement: ChannelField::from_data(grid, 3, flat(&nodes.disp)).expect("sized"),
        grad: ChannelField::from_data(grid, 9, flat(&nodes.grad)).expect("sized"),
        grad_inv: ChannelField::from_data(grid, 9, flat(&inv)).expect("sized"),
        jacobian: ChannelField::from_data(grid, 1, jac).expect("sized"),
        cells: CellGeometry {
            jacobian: cjac,
            grad_inv: cinv,
        },
        min_jacobian,
        injective: min_jacobian > 0.0 && min_cell > 0.0,
    }
}

impl AleMap {
    pub fn grid(&self) -> ChannelGrid {
        self.grid
    }

    pub fn eta(&self) -> &TorusField {
        &self.eta
    }

    /// `B = A - id`.
    pub fn displacement(&self) -> &ChannelField {
        &self.displacement
    }

    /// `A` itself (x and y periodic coordinates are not wrapped).
    pub fn map_values(&self) -> ChannelField {
        let g = self.grid;
        let mut a = self.displacement.clone();
        for node in 0..g.len() {
            let (x, y, z) = g.coords(node);
            for (c, base) in [x, y, z].into_iter().enumerate() {
                a.set(c, node, a.get(c, node) + base);
            }
        }
        a
    }

    /// `∇A`, row-major `[c*3 + a] = ∂_a A_c`.
    pub fn grad(&self) -> &ChannelField {
        &self.grad
    }

    pub fn grad_inv(&self) -> &ChannelField {
        &self.grad_inv
    }

    pub fn jacobian(&self) -> &ChannelField {
        &self.jacobian
    }

    pub fn cells(&self) -> &CellGeometry {
        &self.cells
    }

    pub fn min_jacobian(&self) -> f64 {
        self.min_jacobian
    }

    /// `det ∇A > 0` at every node and cell midpoint.
    pub fn injective(&self) -> bool {
        self.injective
    }

    pub fn grad_at(&self, node: usize) -> Mat3 {
        mat_at(&self.grad, node)
    }

    pub fn grad_inv_at(&self, node: usize) -> Mat3 {
        mat_at(&self.grad_inv, node)
    }

    fn require_injective(&self) -> Result<()> {
        if !self.injective {
            return Err(Error::NonInjective {
                min_jacobian: self.min_jacobian,
            });
        }
        Ok(())
    }
}

fn mat_at(t: &ChannelField, node: usize) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for (r, row) in m.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = t.get(3 * r + c, node);
        }
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InjectivityVerdict {
    pub min_jacobian: f64,
    /// `‖η‖_{H^{2+δ}}`, reported only.
    pub h2delta_norm: f64,
    pub pass: bool,
}

pub fn injectivity_check(map: &AleMap, eta: &TorusField, alpha: f64, delta: f64) -> InjectivityVerdict {
    InjectivityVerdict {
        min_jacobian: map.min_jacobian,
        h2delta_norm: sobolev_norm(eta, 2.0 + delta),
        pass: map.injective && map.min_jacobian > alpha,
    }
}

/// `J (∇A)^{-1} g` nodewise.
pub fn piola_transform(map: &AleMap, g: &ChannelField) -> Result<ChannelField> {
    map.require_injective()?;
    map.grid.check_vector(g)?;
    let grid = map.grid;
    let mut out = ChannelField::zeros(grid, 3);
    for node in 0..grid.len() {
        let fi = map.grad_inv_at(node);
        let j = map.jacobian.get(0, node);
        for r in 0..3 {
            let s: f64 = (0..3).map(|c| fi[r][c] * g.get(c, node)).sum();
            out.set(r, node, j * s);
        }
    }
    Ok(out)
}

/// `∇^η g = ∇g (∇A)^{-1}`; `g` scalar (3 outputs) or vector (9 outputs).
pub fn transformed_gradient(map: &AleMap, g: &ChannelField) -> Result<ChannelField> {
    map.require_injective()?;
    if g.grid() != map.grid {
        return Err(Error::GridMismatch {
            expected: map.grid.describe(),
            found: g.grid().describe(),
        });
    }
    let grid = map.grid;
    let raw = field_gradient(g);
    let nc = g.ncomp();
    let mut out = ChannelField::zeros(grid, nc * 3);
    for node in 0..grid.len() {
        let fi = map.grad_inv_at(node);
        for c in 0..nc {
            for a in 0..3 {
                let s: f64 = (0..3).map(|b| raw.get(c * 3 + b, node) * fi[b][a]).sum();
                out.set(c * 3 + a, node, s);
            }
        }
    }
    Ok(out)
}

/// Symmetric part of a 9-component tensor field.
pub fn symmetrize(t: &ChannelField) -> ChannelField {
    assert_eq!(t.ncomp(), 9, "symmetrize needs a tensor field");
    let mut out = t.clone();
    for node in 0..t.grid().len() {
        for r in 0..3 {
            for c in 0..3 {
                out.set(3 * r + c, node, 0.5 * (t.get(3 * r + c, node) + t.get(3 * c + r, node)));
            }
        }
    }
    out
}

/// `D^η(g)`.
pub fn transformed_sym_gradient(map: &AleMap, g: &ChannelField) -> Result<ChannelField> {
    Ok(symmetrize(&transformed_gradient(map, g)?))
}

/// Trace of a 9-component tensor field.
pub fn tensor_trace(t: &ChannelField) -> ChannelField {
    let g = t.grid();
    let mut out = ChannelField::zeros(g, 1);
    for node in 0..g.len() {
        out.set(0, node, t.get(0, node) + t.get(4, node) + t.get(8, node));
    }
    out
}

/// Flat nodal divergence of a vector field.
pub fn divergence(g: &ChannelField) -> ChannelField {
    tensor_trace(&field_gradient(g))
}

/// `w = (A_next - A_prev)/Δt`.
pub fn ale_velocity(prev: &AleMap, next: &AleMap, dt: f64) -> Result<ChannelField> {
    check_pair(prev, next, dt)?;
    Ok(next.displacement.combine(1.0 / dt, &prev.displacement, -1.0 / dt))
}

/// `(J_next - J_prev)/Δt`.
pub fn jacobian_time_difference(prev: &AleMap, next: &AleMap, dt: f64) -> Result<ChannelField> {
    check_pair(prev, next, dt)?;
    prev.require_injective()?;
    next.require_injective()?;
    Ok(next.jacobian.combine(1.0 / dt, &prev.jacobian, -1.0 / dt))
}

fn check_pair(prev: &AleMap, next: &AleMap, dt: f64) -> Result<()> {
    if prev.grid != next.grid {
        return Err(Error::GridMismatch {
            expected: prev.grid.describe(),
            found: next.grid.describe(),
        });
    }
    if !(dt > 0.0) {
        return Err(Error::OutOfRange(format!("time step must be positive, got {dt}")));
    }
    Ok(())
}

impl ChannelGrid {
    pub(crate) fn check_vector(&self, g: &ChannelField) -> Result<()> {
        if g.grid() != *self || g.ncomp() != 3 {
            return Err(Error::GridMismatch {
                expected: format!("{}:3", self.describe()),
                found: format!("{}:{}", g.grid().describe(), g.ncomp()),
            });
        }
        Ok(())
    }
}
