//! Fourier-mode block preconditioner for the fluid saddle system.
//!
//! The geometric coefficients are replaced by their per-layer means, which
//! makes the operator diagonal in the horizontal wavevector. Each mode then
//! carries a dense `4(nz-1)` block that is LU-factored once per system.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

use crate::ale::Mat3;
use crate::channel::ChannelGrid;
use crate::error::{Error, Result};
use crate::torus::{fractional_symbol, plans};

/// Layer-averaged coefficients of the saddle operator.
#[derive(Clone, Debug)]
pub struct LayerCoefficients {
    /// Diagonal mass per velocity layer `j = 1..nz-1`.
    pub mass: Vec<f64>,
    /// Coefficient of `|k|^{2+2s}` on the interface layer.
    pub damping: f64,
    pub damping_order: f64,
    /// Viscous weight per cell.
    pub viscous: Vec<f64>,
    pub cell_grad_inv: Vec<Mat3>,
    /// Piola matrix per node layer `j = 0..nz`.
    pub piola: Vec<Mat3>,
    /// Weight of the constraint rows.
    pub constraint_weight: f64,
}

pub struct ModalPreconditioner {
    grid: ChannelGrid,
    nd: usize,
    factors: Vec<Option<LU<Complex64, Dyn, Dyn>>>,
}

impl ModalPreconditioner {
    pub(crate) fn empty(grid: ChannelGrid) -> Self {
        Self {
            grid,
            nd: 0,
            factors: Vec::new(),
        }
    }

    pub fn build(grid: ChannelGrid, coef: &LayerCoefficients) -> Result<Self> {
        let tg = grid.torus;
        let nl = grid.nz - 1;
        let nd = 4 * nl;
        let mut factors = Vec::with_capacity(tg.len());
        for idx in 0..tg.len() {
            if tg.conjugate_index(idx) < idx {
                factors.push(None);
                continue;
            }
            let m = mode_matrix(grid, coef, idx);
            let lu = m.lu();
            if !lu.is_invertible() {
                return Err(Error::SingularSystem(format!(
                    "mode {:?} block is singular",
                    tg.wavevector(idx)
                )));
            }
            factors.push(Some(lu));
        }
        Ok(Self { grid, nd, factors })
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let tg = self.grid.torus;
        let nxy = tg.len();
        let p = plans(tg);
        let mut spec: Vec<Complex64> = r.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for layer in spec.chunks_mut(nxy) {
            p.forward(layer);
        }
        let mut b = DVector::<Complex64>::zeros(self.nd);
        for idx in 0..nxy {
            let partner = tg.conjugate_index(idx);
            let (lu, conj) = match &self.factors[idx] {
                Some(lu) => (lu, false),
                None => (self.factors[partner].as_ref().expect("representative factored"), true),
            };
            for l in 0..self.nd {
                let v = spec[l * nxy + idx];
                b[l] = if conj { v.conj() } else { v };
            }
            lu.solve_mut(&mut b);
            for l in 0..self.nd {
                spec[l * nxy + idx] = if conj { b[l].conj() } else { b[l] };
            }
        }
        let scale = 1.0 / nxy as f64;
        for (layer, out) in spec.chunks_mut(nxy).zip(z.chunks_mut(nxy)) {
            p.inverse(layer);
            for (o, c) in out.iter_mut().zip(layer.iter()) {
                *o = c.re * scale;
            }
        }
    }
}

/// Dense block of one horizontal mode. Unknown `c·(nz-1) + (j-1)` is velocity
/// component `c` on layer `j ≥ 1`; `3(nz-1) + m` is the pressure of cell `m`.
pub fn mode_matrix(grid: ChannelGrid, coef: &LayerCoefficients, idx: usize) -> DMatrix<Complex64> {
    let tg = grid.torus;
    let nl = grid.nz - 1;
    let nd = 4 * nl;
    let h = grid.hz();
    let (kx, ky) = tg.derivative_symbols(idx);
    let ikx = Complex64::new(0.0, kx);
    let iky = Complex64::new(0.0, ky);
    let vi = |c: usize, j: usize| c * nl + (j - 1);
    let mut m = DMatrix::<Complex64>::zeros(nd, nd);

    for c in 0..3 {
        for j in 1..grid.nz {
            m[(vi(c, j), vi(c, j))] += coef.mass[j - 1];
        }
        let top = vi(c, grid.nz - 1);
        m[(top, top)] += coef.damping * fractional_symbol(tg.k_squared(idx), coef.damping_order);
    }

    for cell in 0..nl {
        let w = coef.viscous[cell];
        if w != 0.0 {
            // local unknowns: (c, layer) for layers cell, cell+1 that are not the wall
            let layers: Vec<usize> = [cell, cell + 1].into_iter().filter(|&j| j >= 1).collect();
            let mut cols = Vec::new();
            for c in 0..3 {
                for &j in &layers {
                    cols.push((c, j));
                }
            }
            // gradient rows G[c][b] as coefficients over local unknowns
            let nloc = cols.len();
            let mut grad = vec![vec![Complex64::default(); nloc]; 9];
            for (l, &(c, j)) in cols.iter().enumerate() {
                grad[3 * c][l] += 0.5 * ikx;
                grad[3 * c + 1][l] += 0.5 * iky;
                let sgn = if j == cell + 1 { 1.0 } else { -1.0 };
                grad[3 * c + 2][l] += Complex64::new(sgn / h, 0.0);
            }
            let fi = coef.cell_grad_inv[cell];
            let mut sym = vec![vec![Complex64::default(); nloc]; 9];
            for c in 0..3 {
                for a in 0..3 {
                    for l in 0..nloc {
                        let t_ca: Complex64 = (0..3).map(|b| grad[3 * c + b][l] * fi[b][a]).sum();
                        let t_ac: Complex64 = (0..3).map(|b| grad[3 * a + b][l] * fi[b][c]).sum();
                        sym[3 * c + a][l] = 0.5 * (t_ca + t_ac);
                    }
                }
            }
            for (lq, &(cq, jq)) in cols.iter().enumerate() {
                for (lu, &(cu, ju)) in cols.iter().enumerate() {
                    let s: Complex64 = sym.iter().map(|row| row[lq].conj() * row[lu]).sum();
                    m[(vi(cq, jq), vi(cu, ju))] += w * s;
                }
            }
        }

        let row = 3 * nl + cell;
        for j in [cell, cell + 1] {
            if j == 0 {
                continue;
            }
            let pm = coef.piola[j];
            let dz = if j == cell + 1 { 1.0 / h } else { -1.0 / h };
            for c in 0..3 {
                let b = coef.constraint_weight * (0.5 * ikx * pm[0][c] + 0.5 * iky * pm[1][c] + dz * pm[2][c]);
                m[(row, vi(c, j))] += b;
                m[(vi(c, j), row)] += b.conj();
            }
        }
    }
    m
}
