//! Spectral calculus on the periodic square `[0, 2π)²`.
//!
//! Fields are sampled on a uniform `nx × ny` grid. The forward transform
//! carries the `1/(nx·ny)` factor, so the zero coefficient is the mean of the
//! samples and `∫|f|² = (2π)² Σ |f̂_k|²` holds exactly for band-limited data.
//! Wavenumbers are integers; for even sizes the Nyquist index is treated as
//! `+n/2` in symbols and has a zero first derivative.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Area of the torus.
pub const TORUS_AREA: f64 = 4.0 * PI * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    pub nx: usize,
    pub ny: usize,
}

impl TorusGrid {
    pub fn new(nx: usize, ny: usize) -> Self {
        assert!(nx > 0 && ny > 0, "torus grid dimensions must be positive");
        Self { nx, ny }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * PI / self.ny as f64
    }

    /// Quadrature weight of one node.
    pub fn node_weight(&self) -> f64 {
        TORUS_AREA / self.len() as f64
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let (ix, iy) = (idx % self.nx, idx / self.nx);
        (ix as f64 * self.dx(), iy as f64 * self.dy())
    }

    /// Signed wavevector of coefficient `idx`.
    pub fn wavevector(&self, idx: usize) -> (i64, i64) {
        (
            signed_wavenumber(idx % self.nx, self.nx),
            signed_wavenumber(idx / self.nx, self.ny),
        )
    }

    pub fn k_squared(&self, idx: usize) -> f64 {
        let (kx, ky) = self.wavevector(idx);
        (kx * kx + ky * ky) as f64
    }

    /// Multipliers of `∂x`, `∂y` (without the factor `i`); Nyquist entries are zero.
    pub fn derivative_symbols(&self, idx: usize) -> (f64, f64) {
        (
            derivative_wavenumber(idx % self.nx, self.nx),
            derivative_wavenumber(idx / self.nx, self.ny),
        )
    }

    /// Index of the coefficient holding `-k`.
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let (ix, iy) = (idx % self.nx, idx / self.nx);
        self.index((self.nx - ix) % self.nx, (self.ny - iy) % self.ny)
    }

    pub(crate) fn describe(&self) -> String {
        format!("{}x{}", self.nx, self.ny)
    }
}

fn signed_wavenumber(i: usize, n: usize) -> i64 {
    if 2 * i <= n {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn derivative_wavenumber(i: usize, n: usize) -> f64 {
    if 2 * i == n {
        0.0
    } else {
        signed_wavenumber(i, n) as f64
    }
}

/// Cached 2D transform plans for one grid size.
pub(crate) struct Plans2d {
    grid: TorusGrid,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

static PLAN_CACHE: OnceLock<Mutex<HashMap<TorusGrid, Arc<Plans2d>>>> = OnceLock::new();

pub(crate) fn plans(grid: TorusGrid) -> Arc<Plans2d> {
    let cache = PLAN_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().expect("plan cache poisoned");
    cache
        .entry(grid)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans2d {
                grid,
                fwd_x: planner.plan_fft_forward(grid.nx),
                inv_x: planner.plan_fft_inverse(grid.nx),
                fwd_y: planner.plan_fft_forward(grid.ny),
                inv_y: planner.plan_fft_inverse(grid.ny),
            })
        })
        .clone()
}

impl Plans2d {
    fn run(&self, buf: &mut [Complex64], fx: &Arc<dyn Fft<f64>>, fy: &Arc<dyn Fft<f64>>) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        debug_assert_eq!(buf.len(), nx * ny);
        fx.process(buf);
        if ny > 1 {
            let mut t = vec![Complex64::default(); nx * ny];
            for iy in 0..ny {
                for ix in 0..nx {
                    t[ix * ny + iy] = buf[iy * nx + ix];
                }
            }
            fy.process(&mut t);
            for iy in 0..ny {
                for ix in 0..nx {
                    buf[iy * nx + ix] = t[ix * ny + iy];
                }
            }
        }
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.fwd_x, &self.fwd_y)
    }

    /// Unnormalized inverse transform in place.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.inv_x, &self.inv_y)
    }

    /// Normalized coefficients of real samples.
    pub fn analyze(&self, values: &[f64]) -> Vec<Complex64> {
        let scale = 1.0 / self.grid.len() as f64;
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// Real samples of normalized coefficients.
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }

    /// Applies a Fourier multiplier to real samples.
    pub fn apply_multiplier(&self, values: &[f64], symbol: impl Fn(usize) -> Complex64) -> Vec<f64> {
        let mut c = self.analyze(values);
        for (idx, ci) in c.iter_mut().enumerate() {
            *ci *= symbol(idx);
        }
        self.synthesize(&c)
    }

    /// `(∂x f, ∂y f)` of real samples.
    pub fn gradient(&self, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let c = self.analyze(values);
        let g = self.grid;
        let mut cx = c.clone();
        let mut cy = c;
        for idx in 0..g.len() {
            let (kx, ky) = g.derivative_symbols(idx);
            cx[idx] *= Complex64::new(0.0, kx);
            cy[idx] *= Complex64::new(0.0, ky);
        }
        (self.synthesize(&cx), self.synthesize(&cy))
    }
}

/// A real 3-vector field on the torus grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusField {
    grid: TorusGrid,
    comps: [Vec<f64>; 3],
}

impl TorusField {
    pub fn zeros(grid: TorusGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            comps: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn new(grid: TorusGrid, comps: [Vec<f64>; 3]) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::GridMismatch {
                    expected: format!("{} nodes", grid.len()),
                    found: format!("{} nodes", c.len()),
                });
            }
        }
        Ok(Self { grid, comps })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for idx in 0..grid.len() {
            let (x, y) = grid.coords(idx);
            let v = f(x, y);
            for c in 0..3 {
                out.comps[c][idx] = v[c];
            }
        }
        out
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.comps[c]
    }

    pub fn at(&self, idx: usize) -> [f64; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    pub fn spectral(&self) -> SpectralCoeffs {
        let p = plans(self.grid);
        SpectralCoeffs {
            grid: self.grid,
            comps: [
                p.analyze(&self.comps[0]),
                p.analyze(&self.comps[1]),
                p.analyze(&self.comps[2]),
            ],
        }
    }

    pub fn check_grid(&self, other: &TorusField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                expected: self.grid.describe(),
                found: other.grid.describe(),
            });
        }
        Ok(())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &TorusField, b: f64) -> TorusField {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let mut out = self.clone();
        for c in 0..3 {
            for (o, x) in out.comps[c].iter_mut().zip(&other.comps[c]) {
                *o = a * *o + b * x;
            }
        }
        out
    }

    pub fn scaled(&self, a: f64) -> TorusField {
        let mut out = self.clone();
        out.comps.iter_mut().flatten().for_each(|v| *v *= a);
        out
    }

    /// L² inner product by grid quadrature.
    pub fn inner(&self, other: &TorusField) -> f64 {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let s: f64 = (0..3)
            .map(|c| {
                self.comps[c]
                    .iter()
                    .zip(&other.comps[c])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .sum();
        s * self.grid.node_weight()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Normalized Fourier coefficients of a [`TorusField`], one array per component.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCoeffs {
    grid: TorusGrid,
    comps: [Vec<Complex64>; 3],
}

impl SpectralCoeffs {
    pub fn zeros(grid: TorusGrid) -> Self {
        let n = grid.len();
        let z = Complex64::default();
        Self {
            grid,
            comps: [vec![z; n], vec![z; n], vec![z; n]],
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    /// Multiplies every coefficient by a real function of `|k|²`.
    pub fn map_symbol(&mut self, symbol: impl Fn(f64) -> f64) {
        for idx in 0..self.grid.len() {
            let m = symbol(self.grid.k_squared(idx));
            for c in 0..3 {
                self.comps[c][idx] *= m;
            }
        }
    }

    /// `(2π)² Σ_k w(|k|²) |f̂_k|²`.
    pub fn weighted_energy(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let mut s = 0.0;
        for idx in 0..self.grid.len() {
            let w = weight(self.grid.k_squared(idx));
            if w == 0.0 {
                continue;
            }
            for c in 0..3 {
                s += w * self.comps[c][idx].norm_sqr();
            }
        }
        TORUS_AREA * s
    }

    pub fn to_field(&self) -> TorusField {
        let p = plans(self.grid);
        TorusField {
            grid: self.grid,
            comps: [
                p.synthesize(&self.comps[0]),
                p.synthesize(&self.comps[1]),
                p.synthesize(&self.comps[2]),
            ],
        }
    }
}

/// `|k|^r` with the zero mode annihilated for `r > 0`.
pub fn fractional_symbol(k2: f64, r: f64) -> f64 {
    if r == 0.0 {
        1.0
    } else if k2 == 0.0 {
        0.0
    } else {
        k2.powf(0.5 * r)
    }
}

/// `Λ^r f` with `Λ = (-Δ)^{1/2}`.
pub fn apply_fractional_laplacian(f: &TorusField, r: f64) -> Result<TorusField> {
    if !(r >= 0.0) {
        return Err(Error::NegativeOrder(r));
    }
    let mut c = f.spectral();
    c.map_symbol(|k2| fractional_symbol(k2, r));
    Ok(c.to_field())
}

/// `(Σ_k (1+|k|²)^m |f̂_k|²)^{1/2}`, scaled so that `m = 0` is the L² norm.
pub fn sobolev_norm(f: &TorusField, m: f64) -> f64 {
    f.spectral()
        .weighted_energy(|k2| (1.0 + k2).powf(m))
        .sqrt()
}

/// `‖Λ^r f‖_{L²}`.
pub fn homogeneous_norm(f: &TorusField, r: f64) -> f64 {
    f.spectral()
        .weighted_energy(|k2| fractional_symbol(k2, r).powi(2))
        .sqrt()
}

/// One real Fourier eigenfunction pair `{k, -k}`.
#[derive(Clone, Copy, Debug)]
struct ModePair {
    k2: f64,
    rep: (i64, i64),
    idx: usize,
    partner: usize,
}

fn ordered_pairs(grid: TorusGrid) -> Vec<ModePair> {
    let mut pairs = Vec::new();
    for idx in 0..grid.len() {
        let partner = grid.conjugate_index(idx);
        if partner < idx {
            continue;
        }
        let rep = grid.wavevector(idx).max(grid.wavevector(partner));
        pairs.push(ModePair {
            k2: grid.k_squared(idx),
            rep,
            idx,
            partner,
        });
    }
    pairs.sort_by(|a, b| a.k2.total_cmp(&b.k2).then(a.rep.cmp(&b.rep)));
    pairs
}

/// Eigenvalues of `-Δ` for the real Fourier basis in projection order.
///
/// Each pair `{k, -k}` contributes a cosine and (unless self-conjugate) a
/// sine; ties in `|k|²` are ordered lexicographically on `(kx, ky)`.
pub fn mode_eigenvalues(grid: TorusGrid) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    for p in ordered_pairs(grid) {
        out.push(p.k2);
        if p.partner != p.idx {
            out.push(p.k2);
        }
    }
    out
}

/// L²-orthogonal projection onto the first `m` real Fourier eigenfunctions.
pub fn project_low_modes(f: &TorusField, m: usize) -> Result<TorusField> {
    let grid = f.grid();
    if m == 0 || m > grid.len() {
        return Err(Error::InvalidModeCount {
            requested: m,
            available: grid.len(),
        });
    }
    let src = f.spectral();
    let mut dst = SpectralCoeffs::zeros(grid);
    let mut remaining = m;
    for p in ordered_pairs(grid) {
        if remaining == 0 {
            break;
        }
        if p.partner == p.idx {
            for c in 0..3 {
                dst.comps[c][p.idx] = src.comps[c][p.idx];
            }
            remaining -= 1;
        } else if remaining >= 2 {
            for c in 0..3 {
                dst.comps[c][p.idx] = src.comps[c][p.idx];
                dst.comps[c][p.partner] = src.comps[c][p.partner];
            }
            remaining -= 2;
        } else {
            // cosine only
            for c in 0..3 {
                let re = Complex64::new(src.comps[c][p.idx].re, 0.0);
                dst.comps[c][p.idx] = re;
                dst.comps[c][p.partner] = re;
            }
            remaining = 0;
        }
    }
    Ok(dst.to_field())
}
