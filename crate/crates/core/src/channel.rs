//! Fields on the reference channel `Γ × [0, 1]`.
//!
//! The z-grid has `nz` nodes `z_j = j/(nz-1)` including the rigid wall
//! (`j = 0`) and the interface (`j = nz-1`). Storage is component-major and,
//! within a component, layer-major with the torus layout inside each layer.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::torus::{plans, TorusField, TorusGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChannelGrid {
    pub torus: TorusGrid,
    pub nz: usize,
}

impl ChannelGrid {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Self {
        assert!(nz >= 3, "channel needs at least three z-nodes");
        Self {
            torus: TorusGrid::new(nx, ny),
            nz,
        }
    }

    pub fn nxy(&self) -> usize {
        self.torus.len()
    }

    pub fn len(&self) -> usize {
        self.nxy() * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hz(&self) -> f64 {
        1.0 / (self.nz - 1) as f64
    }

    pub fn z(&self, j: usize) -> f64 {
        j as f64 * self.hz()
    }

    /// z-coordinate of the midpoint between nodes `m` and `m+1`.
    pub fn z_cell(&self, m: usize) -> f64 {
        (m as f64 + 0.5) * self.hz()
    }

    pub fn node(&self, j: usize, idx: usize) -> usize {
        j * self.nxy() + idx
    }

    /// Trapezoidal weight in z.
    pub fn z_weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.nz - 1 {
            0.5 * self.hz()
        } else {
            self.hz()
        }
    }

    /// Full quadrature weight of a node.
    pub fn node_weight(&self, j: usize) -> f64 {
        self.z_weight(j) * self.torus.node_weight()
    }

    pub fn coords(&self, node: usize) -> (f64, f64, f64) {
        let (j, idx) = (node / self.nxy(), node % self.nxy());
        let (x, y) = self.torus.coords(idx);
        (x, y, self.z(j))
    }

    pub(crate) fn describe(&self) -> String {
        format!("{}x{}x{}", self.torus.nx, self.torus.ny, self.nz)
    }
}

/// Scalar, vector (3) or tensor (9, row-major `[c*3 + a]`) values per node.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelField {
    grid: ChannelGrid,
    ncomp: usize,
    data: Vec<f64>,
}

impl ChannelField {
    pub fn zeros(grid: ChannelGrid, ncomp: usize) -> Self {
        Self {
            grid,
            ncomp,
            data: vec![0.0; grid.len() * ncomp],
        }
    }

    pub fn from_data(grid: ChannelGrid, ncomp: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() * ncomp {
            return Err(Error::GridMismatch {
                expected: format!("{} values", grid.len() * ncomp),
                found: format!("{} values", data.len()),
            });
        }
        Ok(Self { grid, ncomp, data })
    }

    pub fn from_fn(grid: ChannelGrid, ncomp: usize, f: impl Fn(f64, f64, f64, &mut [f64])) -> Self {
        let mut out = Self::zeros(grid, ncomp);
        let mut buf = vec![0.0; ncomp];
        for node in 0..grid.len() {
            let (x, y, z) = grid.coords(node);
            f(x, y, z, &mut buf);
            for (c, v) in buf.iter().enumerate() {
                out.data[c * grid.len() + node] = *v;
            }
        }
        out
    }

    pub fn grid(&self) -> ChannelGrid {
        self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        let n = self.grid.len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.grid.len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn layer(&self, c: usize, j: usize) -> &[f64] {
        let nxy = self.grid.nxy();
        &self.comp(c)[j * nxy..(j + 1) * nxy]
    }

    pub fn layer_mut(&mut self, c: usize, j: usize) -> &mut [f64] {
        let nxy = self.grid.nxy();
        &mut self.comp_mut(c)[j * nxy..(j + 1) * nxy]
    }

    pub fn get(&self, c: usize, node: usize) -> f64 {
        self.data[c * self.grid.len() + node]
    }

    pub fn set(&mut self, c: usize, node: usize, v: f64) {
        let n = self.grid.len();
        self.data[c * n + node] = v;
    }

    /// The z = 1 trace of a 3-vector field.
    pub fn trace_top(&self) -> TorusField {
        assert_eq!(self.ncomp, 3, "trace_top needs a vector field");
        let top = self.grid.nz - 1;
        TorusField::new(
            self.grid.torus,
            [
                self.layer(0, top).to_vec(),
                self.layer(1, top).to_vec(),
                self.layer(2, top).to_vec(),
            ],
        )
        .expect("layer has torus size")
    }

    pub fn set_trace_top(&mut self, v: &TorusField) {
        assert_eq!(self.ncomp, 3);
        let top = self.grid.nz - 1;
        for c in 0..3 {
            self.layer_mut(c, top).copy_from_slice(v.component(c));
        }
    }

    pub fn check_grid(&self, other: &ChannelField) -> Result<()> {
        if self.grid != other.grid || self.ncomp != other.ncomp {
            return Err(Error::GridMismatch {
                expected: format!("{}:{}", self.grid.describe(), self.ncomp),
                found: format!("{}:{}", other.grid.describe(), other.ncomp),
            });
        }
        Ok(())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &ChannelField, b: f64) -> ChannelField {
        assert_eq!(self.data.len(), other.data.len(), "grid mismatch");
        let mut out = self.clone();
        for (o, x) in out.data.iter_mut().zip(&other.data) {
            *o = a * *o + b * x;
        }
        out
    }

    pub fn scaled(&self, a: f64) -> ChannelField {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= a);
        out
    }

    /// `∫ weight · (self · other)` by trapezoidal-in-z quadrature.
    pub fn weighted_inner(&self, other: &ChannelField, weight: Option<&ChannelField>) -> f64 {
        assert_eq!(self.data.len(), other.data.len(), "grid mismatch");
        let g = self.grid;
        let n = g.len();
        let mut s = 0.0;
        for node in 0..n {
            let w = g.node_weight(node / g.nxy()) * weight.map_or(1.0, |wf| wf.data[node]);
            let mut d = 0.0;
            for c in 0..self.ncomp {
                d += self.data[c * n + node] * other.data[c * n + node];
            }
            s += w * d;
        }
        s
    }

    pub fn l2_norm(&self) -> f64 {
        self.weighted_inner(self, None).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Second-order z-derivative of one layered component: central inside,
/// one-sided at both ends.
pub fn dz(values: &[f64], grid: ChannelGrid) -> Vec<f64> {
    let (nxy, nz) = (grid.nxy(), grid.nz);
    let inv = 0.5 / grid.hz();
    let mut out = vec![0.0; values.len()];
    let v = |j: usize, i: usize| values[j * nxy + i];
    for i in 0..nxy {
        out[i] = inv * (-3.0 * v(0, i) + 4.0 * v(1, i) - v(2, i));
        for j in 1..nz - 1 {
            out[j * nxy + i] = inv * (v(j + 1, i) - v(j - 1, i));
        }
        let t = nz - 1;
        out[t * nxy + i] = inv * (3.0 * v(t, i) - 4.0 * v(t - 1, i) + v(t - 2, i));
    }
    out
}

/// Transpose of [`dz`].
pub fn dz_transpose(values: &[f64], grid: ChannelGrid) -> Vec<f64> {
    let (nxy, nz) = (grid.nxy(), grid.nz);
    let inv = 0.5 / grid.hz();
    let mut out = vec![0.0; values.len()];
    for i in 0..nxy {
        let r0 = values[i];
        out[i] -= 3.0 * inv * r0;
        out[nxy + i] += 4.0 * inv * r0;
        out[2 * nxy + i] -= inv * r0;
        for j in 1..nz - 1 {
            let r = values[j * nxy + i];
            out[(j + 1) * nxy + i] += inv * r;
            out[(j - 1) * nxy + i] -= inv * r;
        }
        let t = nz - 1;
        let rt = values[t * nxy + i];
        out[t * nxy + i] += 3.0 * inv * rt;
        out[(t - 1) * nxy + i] -= 4.0 * inv * rt;
        out[(t - 2) * nxy + i] += inv * rt;
    }
    out
}

/// Layerwise spectral `(∂x, ∂y)` of a layered component.
pub fn dxy(values: &[f64], grid: ChannelGrid) -> (Vec<f64>, Vec<f64>) {
    let p = plans(grid.torus);
    let nxy = grid.nxy();
    let mut gx = vec![0.0; values.len()];
    let mut gy = vec![0.0; values.len()];
    for (j, layer) in values.chunks(nxy).enumerate() {
        let (a, b) = p.gradient(layer);
        gx[j * nxy..(j + 1) * nxy].copy_from_slice(&a);
        gy[j * nxy..(j + 1) * nxy].copy_from_slice(&b);
    }
    (gx, gy)
}

/// Layerwise `∂x ax + ∂y ay` computed with a single inverse transform per layer.
pub fn div_xy(ax: &[f64], ay: &[f64], grid: ChannelGrid) -> Vec<f64> {
    let tg = grid.torus;
    let p = plans(tg);
    let nxy = tg.len();
    let mut out = vec![0.0; ax.len()];
    for (j, (lx, ly)) in ax.chunks(nxy).zip(ay.chunks(nxy)).enumerate() {
        let cx = p.analyze(lx);
        let cy = p.analyze(ly);
        let mut c = cx;
        for idx in 0..nxy {
            let (kx, ky) = tg.derivative_symbols(idx);
            c[idx] = Complex64::new(0.0, kx) * c[idx] + Complex64::new(0.0, ky) * cy[idx];
        }
        out[j * nxy..(j + 1) * nxy].copy_from_slice(&p.synthesize(&c));
    }
    out
}

/// Nodal gradient `[∂x, ∂y, ∂z]` of a layered component.
pub fn nodal_gradient(values: &[f64], grid: ChannelGrid) -> [Vec<f64>; 3] {
    let (gx, gy) = dxy(values, grid);
    [gx, gy, dz(values, grid)]
}

/// Nodal gradient of a field: `ncomp·3` components, `[c*3 + a] = ∂_a f_c`.
pub fn field_gradient(f: &ChannelField) -> ChannelField {
    let g = f.grid();
    let mut out = ChannelField::zeros(g, f.ncomp() * 3);
    for c in 0..f.ncomp() {
        let grad = nodal_gradient(f.comp(c), g);
        for (a, ga) in grad.iter().enumerate() {
            out.comp_mut(c * 3 + a).copy_from_slice(ga);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dz_exact_on_quadratics_and_transpose_is_adjoint() {
        let g = ChannelGrid::new(4, 4, 9);
        let f = ChannelField::from_fn(g, 1, |x, _, z, o| o[0] = z * z + x.sin());
        let d = dz(f.comp(0), g);
        for node in 0..g.len() {
            let (_, _, z) = g.coords(node);
            assert!((d[node] - 2.0 * z).abs() < 1e-12);
        }
        let a: Vec<f64> = (0..g.len()).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let b: Vec<f64> = (0..g.len()).map(|i| ((i * 3) % 5) as f64 - 2.0).collect();
        let lhs: f64 = dz(&a, g).iter().zip(&b).map(|(x, y)| x * y).sum();
        let rhs: f64 = a.iter().zip(dz_transpose(&b, g)).map(|(x, y)| x * y).sum();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn trace_round_trip() {
        let g = ChannelGrid::new(6, 4, 5);
        let mut u = ChannelField::zeros(g, 3);
        let v = TorusField::from_fn(g.torus, |x, y| [x.cos(), y.sin(), 1.0]);
        u.set_trace_top(&v);
        assert_eq!(u.trace_top(), v);
    }

    #[test]
    fn trapezoid_integrates_linear_profiles() {
        let g = ChannelGrid::new(8, 8, 7);
        let f = ChannelField::from_fn(g, 1, |_, _, z, o| o[0] = 1.0 + z);
        let one = ChannelField::from_fn(g, 1, |_, _, _, o| o[0] = 1.0);
        let area = crate::torus::TORUS_AREA;
        assert!((f.weighted_inner(&one, None) - 1.5 * area).abs() < 1e-12);
    }
}
