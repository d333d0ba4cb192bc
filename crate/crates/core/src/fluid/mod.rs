//! Fluid half-step on the fixed reference channel.
//!
//! Unknowns are the velocity on layers `j = 1..nz-1` (the wall layer is
//! zero; the interface layer doubles as the structure velocity) and one
//! pressure per cell between consecutive layers. The discrete forms:
//!
//! * mass and Jacobian-rate terms: nodal, trapezoidal in z;
//! * skew advection: nodal gradients (spectral in x/y, second-order in z);
//! * viscosity: gradients at cell midpoints with midpoint quadrature;
//! * constraint: `div(J (∇A)^{-1} u)` at cell midpoints;
//! * interface: lumped structure mass and `Λ^{2+2s}` damping.
//!
//! Energies reported by [`fluid_energy`] use exactly these forms.

mod precond;

pub use precond::{mode_matrix, LayerCoefficients, ModalPreconditioner};

use crate::ale::{ale_velocity, AleMap, Mat3};
use crate::channel::{div_xy, dxy, dz, dz_transpose, ChannelField, ChannelGrid};
use crate::energy::InequalityCheck;
use crate::error::{Error, Result};
use crate::krylov::{gmres, GmresConfig, SolveStats};
use crate::torus::{fractional_symbol, plans, TorusField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidParams {
    pub nu: f64,
    pub gamma: f64,
    pub s: f64,
    pub dt: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl FluidParams {
    pub fn new(nu: f64, gamma: f64, s: f64, dt: f64, tol: f64, max_iters: usize) -> Result<Self> {
        let mut bad = Vec::new();
        if !(nu > 0.0) {
            bad.push(format!("nu must be positive, got {nu}"));
        }
        if !(gamma >= 0.0) {
            bad.push(format!("gamma must be nonnegative, got {gamma}"));
        }
        if !(s > 0.0 && s <= 1.0) {
            bad.push(format!("s must lie in (0, 1], got {s}"));
        }
        if !(dt > 0.0) {
            bad.push(format!("dt must be positive, got {dt}"));
        }
        if !(tol > 0.0 && tol <= 1e-4) {
            bad.push(format!("solver tolerance must lie in (0, 1e-4], got {tol}"));
        }
        if max_iters == 0 {
            bad.push("max_iters must be positive".into());
        }
        if !bad.is_empty() {
            return Err(Error::OutOfRange(bad.join("; ")));
        }
        Ok(Self {
            nu,
            gamma,
            s,
            dt,
            tol,
            max_iters,
        })
    }

    fn gmres(&self) -> GmresConfig {
        GmresConfig {
            tol: self.tol,
            max_iters: self.max_iters,
            restart: 60,
        }
    }
}

/// Individual terms of the velocity block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Term {
    /// `∫ J^n u·q`
    Mass,
    /// `½ ∫ (J^{n+1} - J^n) u·q`
    JacobianRate,
    /// `½Δt ∫ J^n [((u^n - w)·∇^η u)·q - ((u^n - w)·∇^η q)·u]`
    Advection,
    /// `2νΔt ∫ J^n D^η(u):D^η(q)`
    Viscous,
    /// `∫_Γ v·ψ`
    StructureMass,
    /// `Δt γ ∫_Γ Λ^{1+s}v·Λ^{1+s}ψ`
    Damping,
}

const ALL_TERMS: [Term; 6] = [
    Term::Mass,
    Term::JacobianRate,
    Term::Advection,
    Term::Viscous,
    Term::StructureMass,
    Term::Damping,
];

fn load9(t: &[Vec<f64>; 9], i: usize) -> Mat3 {
    [
        [t[0][i], t[1][i], t[2][i]],
        [t[3][i], t[4][i], t[5][i]],
        [t[6][i], t[7][i], t[8][i]],
    ]
}

fn split9(f: &ChannelField) -> [Vec<f64>; 9] {
    std::array::from_fn(|k| f.comp(k).to_vec())
}

/// The linear system of one fluid step, held as matrix-free operator blocks.
pub struct SaddleSystem {
    grid: ChannelGrid,
    params: FluidParams,
    dynamic: bool,
    jac_n: Vec<f64>,
    jac_next: Vec<f64>,
    piola: [Vec<f64>; 9],
    cell_jac: Vec<f64>,
    cell_grad_inv: [Vec<f64>; 9],
    transport: [Vec<f64>; 3],
    rhs: Vec<f64>,
    guess: Vec<f64>,
    precond: ModalPreconditioner,
}

/// Solution of one fluid step.
#[derive(Clone, Debug)]
pub struct FluidSolution {
    pub u: ChannelField,
    pub v: TorusField,
    /// Pressure per cell, layered like a field with `nz - 1` layers.
    pub pressure_cells: Vec<f64>,
    pub stats: SolveStats,
    /// `‖velocity rows of r‖ / ‖b‖`.
    pub momentum_residual: f64,
    /// Largest cell value of `|div(J (∇A)^{-1} u)|`.
    pub divergence_residual: f64,
}

impl FluidSolution {
    /// Pressure interpolated to the nodes (end layers extrapolated).
    pub fn pressure_nodes(&self) -> ChannelField {
        cells_to_nodes(self.u.grid(), &self.pressure_cells)
    }
}

pub fn cells_to_nodes(grid: ChannelGrid, cells: &[f64]) -> ChannelField {
    let nxy = grid.nxy();
    let nc = grid.nz - 1;
    let mut out = ChannelField::zeros(grid, 1);
    let c = |m: usize, i: usize| cells[m * nxy + i];
    for i in 0..nxy {
        for j in 0..grid.nz {
            let v = if j == 0 {
                1.5 * c(0, i) - 0.5 * c(1.min(nc - 1), i)
            } else if j == nc {
                1.5 * c(nc - 1, i) - 0.5 * c(nc.saturating_sub(2), i)
            } else {
                0.5 * (c(j - 1, i) + c(j, i))
            };
            out.set(0, grid.node(j, i), v);
        }
    }
    out
}

fn require_injective(map: &AleMap) -> Result<()> {
    if !map.injective() {
        return Err(Error::NonInjective {
            min_jacobian: map.min_jacobian(),
        });
    }
    Ok(())
}

/// Builds the system of the fluid subproblem for `(u^{n+1}, v^{n+1})`.
pub fn assemble_fluid_system(
    u_n: &ChannelField,
    v_half: &TorusField,
    map_n: &AleMap,
    map_next: &AleMap,
    params: &FluidParams,
) -> Result<SaddleSystem> {
    require_injective(map_n)?;
    require_injective(map_next)?;
    let grid = map_n.grid();
    grid.check_vector(u_n)?;
    if v_half.grid() != grid.torus || map_next.grid() != grid {
        return Err(Error::GridMismatch {
            expected: grid.describe(),
            found: format!("{} / {}", v_half.grid().describe(), map_next.grid().describe()),
        });
    }
    let w = ale_velocity(map_n, map_next, params.dt)?;
    let beta = u_n.combine(1.0, &w, -1.0);
    build_system(grid, u_n, v_half, map_n, map_next, Some(&beta), params, true)
}

/// Mass-weighted projection of `(u0, v0)` onto the constraint space of `map`
/// with the kinematic coupling `u|_Γ = v`.
pub fn assemble_projection(u0: &ChannelField, v0: &TorusField, map: &AleMap, params: &FluidParams) -> Result<SaddleSystem> {
    require_injective(map)?;
    let grid = map.grid();
    grid.check_vector(u0)?;
    build_system(grid, u0, v0, map, map, None, params, false)
}

#[allow(clippy::too_many_arguments)]
fn build_system(
    grid: ChannelGrid,
    u_n: &ChannelField,
    v_half: &TorusField,
    map_n: &AleMap,
    map_next: &AleMap,
    beta: Option<&ChannelField>,
    params: &FluidParams,
    dynamic: bool,
) -> Result<SaddleSystem> {
    let n = grid.len();
    let nxy = grid.nxy();
    let jac_n = map_n.jacobian().comp(0).to_vec();
    let jac_next = map_next.jacobian().comp(0).to_vec();
    let grad_inv = split9(map_n.grad_inv());
    let mut piola: [Vec<f64>; 9] = std::array::from_fn(|_| vec![0.0; n]);
    for node in 0..n {
        for k in 0..9 {
            piola[k][node] = jac_n[node] * grad_inv[k][node];
        }
    }
    let mut transport: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
    if let Some(beta) = beta {
        for node in 0..n {
            for b in 0..3 {
                transport[b][node] = (0..3).map(|a| grad_inv[3 * b + a][node] * beta.get(a, node)).sum();
            }
        }
    }
    let cells = map_n.cells();

    // rhs: mass-weighted previous velocity plus the structure momentum
    let nl = grid.nz - 1;
    let nv = nl * nxy;
    let mut rhs = vec![0.0; 4 * nv];
    let mut guess = vec![0.0; 4 * nv];
    let wxy = grid.torus.node_weight();
    for c in 0..3 {
        for j in 1..grid.nz {
            let wz = grid.node_weight(j);
            for i in 0..nxy {
                let node = grid.node(j, i);
                let dof = c * nv + (j - 1) * nxy + i;
                rhs[dof] = wz * jac_n[node] * u_n.get(c, node);
                guess[dof] = u_n.get(c, node);
            }
        }
        let top = grid.nz - 1;
        for i in 0..nxy {
            let dof = c * nv + (top - 1) * nxy + i;
            rhs[dof] += wxy * v_half.component(c)[i];
            guess[dof] = v_half.component(c)[i];
        }
    }

    let mut sys = SaddleSystem {
        grid,
        params: *params,
        dynamic,
        jac_n,
        jac_next,
        piola,
        cell_jac: cells.jacobian.clone(),
        cell_grad_inv: cells.grad_inv.clone(),
        transport,
        rhs,
        guess,
        precond: ModalPreconditioner::empty(grid),
    };
    sys.precond = ModalPreconditioner::build(grid, &sys.layer_coefficients())?;
    Ok(sys)
}

impl SaddleSystem {
    pub fn grid(&self) -> ChannelGrid {
        self.grid
    }

    pub fn params(&self) -> &FluidParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    /// Number of velocity unknowns (the first block of the vector).
    pub fn velocity_len(&self) -> usize {
        3 * self.cell_len()
    }

    fn cell_len(&self) -> usize {
        (self.grid.nz - 1) * self.grid.nxy()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    fn has(&self, t: Term) -> bool {
        match t {
            Term::Mass | Term::StructureMass => true,
            Term::JacobianRate => self.dynamic,
            Term::Advection => self.dynamic,
            Term::Viscous => self.dynamic,
            Term::Damping => self.dynamic && self.params.gamma > 0.0,
        }
    }

    fn viscous_weight(&self) -> f64 {
        2.0 * self.params.nu * self.params.dt * self.grid.torus.node_weight() * self.grid.hz()
    }

    fn damping_weight(&self) -> f64 {
        self.params.dt * self.params.gamma * self.grid.torus.node_weight()
    }

    fn constraint_weight(&self) -> f64 {
        self.grid.torus.node_weight() * self.grid.hz()
    }

    pub fn layer_coefficients(&self) -> LayerCoefficients {
        let g = self.grid;
        let nxy = g.nxy();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let mut mass = Vec::with_capacity(g.nz - 1);
        for j in 1..g.nz {
            let r = j * nxy..(j + 1) * nxy;
            let jn = mean(&self.jac_n[r.clone()]);
            let jnext = mean(&self.jac_next[r]);
            let mut m = g.node_weight(j) * if self.has(Term::JacobianRate) { 0.5 * (jn + jnext) } else { jn };
            if j == g.nz - 1 {
                m += g.torus.node_weight();
            }
            mass.push(m);
        }
        let mean9 = |t: &[Vec<f64>; 9], r: std::ops::Range<usize>| -> Mat3 {
            let mut out = [[0.0; 3]; 3];
            for (k, v) in t.iter().enumerate() {
                out[k / 3][k % 3] = mean(&v[r.clone()]);
            }
            out
        };
        let viscous = (0..g.nz - 1)
            .map(|m| {
                if self.has(Term::Viscous) {
                    self.viscous_weight() * mean(&self.cell_jac[m * nxy..(m + 1) * nxy])
                } else {
                    0.0
                }
            })
            .collect();
        LayerCoefficients {
            mass,
            damping: if self.has(Term::Damping) { self.damping_weight() } else { 0.0 },
            damping_order: 2.0 + 2.0 * self.params.s,
            viscous,
            cell_grad_inv: (0..g.nz - 1)
                .map(|m| mean9(&self.cell_grad_inv, m * nxy..(m + 1) * nxy))
                .collect(),
            piola: (0..g.nz).map(|j| mean9(&self.piola, j * nxy..(j + 1) * nxy)).collect(),
            constraint_weight: self.constraint_weight(),
        }
    }

    /// Expands the velocity block of a vector to full layered components.
    pub fn velocity_from_dofs(&self, x: &[f64]) -> ChannelField {
        let g = self.grid;
        let nv = self.cell_len();
        let nxy = g.nxy();
        let mut u = ChannelField::zeros(g, 3);
        for c in 0..3 {
            u.comp_mut(c)[nxy..].copy_from_slice(&x[c * nv..(c + 1) * nv]);
        }
        u
    }

    /// Velocity block of a field (the wall layer is dropped).
    pub fn dofs_from_velocity(&self, u: &ChannelField) -> Vec<f64> {
        let nxy = self.grid.nxy();
        let mut x = Vec::with_capacity(self.velocity_len());
        for c in 0..3 {
            x.extend_from_slice(&u.comp(c)[nxy..]);
        }
        x
    }

    fn velocity_action(&self, u: &ChannelField, terms: &[Term]) -> [Vec<f64>; 3] {
        let g = self.grid;
        let n = g.len();
        let nxy = g.nxy();
        let top = g.nz - 1;
        let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
        let wants = |t: Term| terms.contains(&t) && self.has(t);

        if wants(Term::Mass) || wants(Term::JacobianRate) {
            for j in 1..g.nz {
                let wz = g.node_weight(j);
                for i in 0..nxy {
                    let node = g.node(j, i);
                    let mut coef = 0.0;
                    if wants(Term::Mass) {
                        coef += self.jac_n[node];
                    }
                    if wants(Term::JacobianRate) {
                        coef += 0.5 * (self.jac_next[node] - self.jac_n[node]);
                    }
                    for c in 0..3 {
                        out[c][node] += wz * coef * u.get(c, node);
                    }
                }
            }
        }
        if wants(Term::StructureMass) {
            let w = g.torus.node_weight();
            for c in 0..3 {
                for i in 0..nxy {
                    out[c][g.node(top, i)] += w * u.get(c, g.node(top, i));
                }
            }
        }
        if wants(Term::Damping) {
            let p = plans(g.torus);
            let order = 2.0 + 2.0 * self.params.s;
            let w = self.damping_weight();
            for c in 0..3 {
                let lam = p.apply_multiplier(u.layer(c, top), |idx| {
                    fractional_symbol(g.torus.k_squared(idx), order).into()
                });
                for i in 0..nxy {
                    out[c][g.node(top, i)] += w * lam[i];
                }
            }
        }

        let need_grad = wants(Term::Viscous) || wants(Term::Advection);
        if !need_grad {
            return out;
        }
        let grads: Vec<(Vec<f64>, Vec<f64>)> = (0..3).map(|c| dxy(u.comp(c), g)).collect();

        if wants(Term::Viscous) {
            let h = g.hz();
            let wv = self.viscous_weight();
            let mut acc_x: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
            let mut acc_y: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
            for m in 0..g.nz - 1 {
                for i in 0..nxy {
                    let cell = m * nxy + i;
                    let (n0, n1) = (g.node(m, i), g.node(m + 1, i));
                    let mut gm = [[0.0; 3]; 3];
                    for c in 0..3 {
                        gm[c][0] = 0.5 * (grads[c].0[n0] + grads[c].0[n1]);
                        gm[c][1] = 0.5 * (grads[c].1[n0] + grads[c].1[n1]);
                        gm[c][2] = (u.get(c, n1) - u.get(c, n0)) / h;
                    }
                    let fi = load9(&self.cell_grad_inv, cell);
                    let d = sym_transformed(&gm, &fi);
                    let coef = wv * self.cell_jac[cell];
                    for c in 0..3 {
                        for b in 0..3 {
                            let s: f64 = coef * (0..3).map(|a| d[c][a] * fi[b][a]).sum::<f64>();
                            match b {
                                0 => {
                                    acc_x[c][n0] += 0.5 * s;
                                    acc_x[c][n1] += 0.5 * s;
                                }
                                1 => {
                                    acc_y[c][n0] += 0.5 * s;
                                    acc_y[c][n1] += 0.5 * s;
                                }
                                _ => {
                                    out[c][n1] += s / h;
                                    out[c][n0] -= s / h;
                                }
                            }
                        }
                    }
                }
            }
            for c in 0..3 {
                let d = div_xy(&acc_x[c], &acc_y[c], g);
                out[c].iter_mut().zip(&d).for_each(|(o, v)| *o -= v);
            }
        }

        if wants(Term::Advection) {
            let half_dt = 0.5 * self.params.dt;
            let a = &self.transport;
            for c in 0..3 {
                let gz = dz(u.comp(c), g);
                let mut yx = vec![0.0; n];
                let mut yy = vec![0.0; n];
                let mut yz = vec![0.0; n];
                for j in 1..g.nz {
                    let wz = g.node_weight(j) * half_dt;
                    for i in 0..nxy {
                        let node = g.node(j, i);
                        let coef = wz * self.jac_n[node];
                        let (a0, a1, a2) = (a[0][node], a[1][node], a[2][node]);
                        out[c][node] += coef * (a0 * grads[c].0[node] + a1 * grads[c].1[node] + a2 * gz[node]);
                        let uc = coef * u.get(c, node);
                        yx[node] = a0 * uc;
                        yy[node] = a1 * uc;
                        yz[node] = a2 * uc;
                    }
                }
                let dxyv = div_xy(&yx, &yy, g);
                let dzt = dz_transpose(&yz, g);
                for node in 0..n {
                    out[c][node] += dxyv[node] - dzt[node];
                }
            }
        }
        out
    }

    /// Weighted constraint rows `B u` (one per cell).
    fn constraint_rows(&self, u: &ChannelField) -> Vec<f64> {
        let g = self.grid;
        let n = g.len();
        let nxy = g.nxy();
        let mut f: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
        for node in 0..n {
            for r in 0..3 {
                f[r][node] = (0..3).map(|c| self.piola[3 * r + c][node] * u.get(c, node)).sum();
            }
        }
        let dh = div_xy(&f[0], &f[1], g);
        let h = g.hz();
        let w = self.constraint_weight();
        let mut out = vec![0.0; self.cell_len()];
        for m in 0..g.nz - 1 {
            for i in 0..nxy {
                let (n0, n1) = (g.node(m, i), g.node(m + 1, i));
                out[m * nxy + i] = w * (0.5 * (dh[n0] + dh[n1]) + (f[2][n1] - f[2][n0]) / h);
            }
        }
        out
    }

    /// `B^T p` as full layered velocity components.
    fn constraint_transpose(&self, p: &[f64]) -> [Vec<f64>; 3] {
        let g = self.grid;
        let n = g.len();
        let nxy = g.nxy();
        let h = g.hz();
        let w = self.constraint_weight();
        let mut acc = vec![0.0; n];
        let mut fz = vec![0.0; n];
        for m in 0..g.nz - 1 {
            for i in 0..nxy {
                let s = w * p[m * nxy + i];
                let (n0, n1) = (g.node(m, i), g.node(m + 1, i));
                acc[n0] += 0.5 * s;
                acc[n1] += 0.5 * s;
                fz[n1] += s / h;
                fz[n0] -= s / h;
            }
        }
        let (gx, gy) = dxy(&acc, g);
        let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
        for node in 0..n {
            let fd = [-gx[node], -gy[node], fz[node]];
            for c in 0..3 {
                out[c][node] = (0..3).map(|r| self.piola[3 * r + c][node] * fd[r]).sum();
            }
        }
        out
    }

    /// `y = K x` for the full saddle operator.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nv = self.cell_len();
        let nxy = self.grid.nxy();
        let u = self.velocity_from_dofs(x);
        let mut out = self.velocity_action(&u, &ALL_TERMS);
        let bt = self.constraint_transpose(&x[3 * nv..]);
        for c in 0..3 {
            for (o, b) in out[c].iter_mut().zip(&bt[c]) {
                *o += b;
            }
            y[c * nv..(c + 1) * nv].copy_from_slice(&out[c][nxy..]);
        }
        y[3 * nv..].copy_from_slice(&self.constraint_rows(&u));
    }

    pub fn precondition(&self, r: &[f64], z: &mut [f64]) {
        self.precond.apply(r, z)
    }

    /// Value of one bilinear term `t(u, q)`; zero for terms absent from this system.
    pub fn bilinear(&self, t: Term, u: &ChannelField, q: &ChannelField) -> f64 {
        let act = self.velocity_action(u, &[t]);
        let nxy = self.grid.nxy();
        (0..3)
            .map(|c| {
                act[c][nxy..]
                    .iter()
                    .zip(&q.comp(c)[nxy..])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .sum()
    }

    /// `max |div(J (∇A)^{-1} u)|` over cells.
    pub fn divergence_residual(&self, u: &ChannelField) -> f64 {
        let w = self.constraint_weight();
        self.constraint_rows(u)
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs() / w))
    }

    /// Right-hand side paired with a test velocity: `∫J^n u^n·q + ∫_Γ v^{n+1/2}·ψ`.
    pub fn rhs_pairing(&self, q: &ChannelField) -> f64 {
        let qd = self.dofs_from_velocity(q);
        qd.iter().zip(&self.rhs).map(|(a, b)| a * b).sum()
    }
}

fn sym_transformed(gm: &Mat3, fi: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for c in 0..3 {
        for a in 0..3 {
            t[c][a] = (0..3).map(|b| gm[c][b] * fi[b][a]).sum();
        }
    }
    let mut d = [[0.0; 3]; 3];
    for c in 0..3 {
        for a in 0..3 {
            d[c][a] = 0.5 * (t[c][a] + t[a][c]);
        }
    }
    d
}

/// Solves the system with GMRES; the interface layer of `u` is `v`.
pub fn advance_fluid(system: &SaddleSystem) -> Result<FluidSolution> {
    let mut x = system.guess.clone();
    let stats = gmres(
        |a, b| system.apply(a, b),
        |a, b| system.precondition(a, b),
        &system.rhs,
        &mut x,
        &system.params.gmres(),
    )?;
    let mut r = vec![0.0; x.len()];
    system.apply(&x, &mut r);
    let nv = system.velocity_len();
    let bnorm = system.rhs.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let mom: f64 = r[..nv]
        .iter()
        .zip(&system.rhs[..nv])
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let u = system.velocity_from_dofs(&x);
    let v = u.trace_top();
    Ok(FluidSolution {
        divergence_residual: system.divergence_residual(&u),
        momentum_residual: mom / bnorm,
        pressure_cells: x[nv..].to_vec(),
        u,
        v,
        stats,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FluidEnergy {
    /// `½∫J|u|²`
    pub kinetic: f64,
    /// `2ν∫J|D^η(u)|²`
    pub dissipation_density: f64,
}

/// `½∫J|u|²` with the nodal trapezoidal rule.
pub fn fluid_kinetic(u: &ChannelField, jacobian: &ChannelField) -> f64 {
    0.5 * u.weighted_inner(u, Some(jacobian))
}

/// Kinetic energy with the Jacobian of `map` and the viscous dissipation
/// density evaluated with the cell-midpoint form of the solver.
pub fn fluid_energy(u: &ChannelField, map: &AleMap, nu: f64) -> FluidEnergy {
    let g = map.grid();
    let nxy = g.nxy();
    let h = g.hz();
    let cells = map.cells();
    let grads: Vec<(Vec<f64>, Vec<f64>)> = (0..3).map(|c| dxy(u.comp(c), g)).collect();
    let mut diss = 0.0;
    for m in 0..g.nz - 1 {
        for i in 0..nxy {
            let cell = m * nxy + i;
            let (n0, n1) = (g.node(m, i), g.node(m + 1, i));
            let mut gm = [[0.0; 3]; 3];
            for c in 0..3 {
                gm[c][0] = 0.5 * (grads[c].0[n0] + grads[c].0[n1]);
                gm[c][1] = 0.5 * (grads[c].1[n0] + grads[c].1[n1]);
                gm[c][2] = (u.get(c, n1) - u.get(c, n0)) / h;
            }
            let d = sym_transformed(&gm, &cells.grad_inv_at(cell));
            let dd: f64 = d.iter().flatten().map(|v| v * v).sum();
            diss += cells.jacobian[cell] * dd;
        }
    }
    FluidEnergy {
        kinetic: fluid_kinetic(u, map.jacobian()),
        dissipation_density: 2.0 * nu * diss * g.torus.node_weight() * h,
    }
}

/// Numerical dissipation of one fluid step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FluidJumps {
    /// `½∫J^n|u^{n+1} - u^n|²`
    pub velocity: f64,
    /// `½‖v^{n+1} - v^{n+1/2}‖²`
    pub interface: f64,
}

impl FluidJumps {
    pub fn total(&self) -> f64 {
        self.velocity + self.interface
    }
}

pub fn fluid_jumps(
    u_n: &ChannelField,
    u_next: &ChannelField,
    jac_n: &ChannelField,
    v_half: &TorusField,
    v_next: &TorusField,
) -> FluidJumps {
    let du = u_next.combine(1.0, u_n, -1.0);
    let dv = v_next.combine(1.0, v_half, -1.0);
    FluidJumps {
        velocity: fluid_kinetic(&du, jac_n),
        interface: 0.5 * dv.inner(&dv),
    }
}

/// `E^{n+1} + D^n + jumps ≤ E^{n+1/2}`.
pub fn check_fluid_energy_inequality(e_half: f64, e_next: f64, d_n: f64, jumps: &FluidJumps) -> InequalityCheck {
    InequalityCheck::evaluate(e_next + d_n + jumps.total(), e_half)
}

#[cfg(test)]
mod tests;
