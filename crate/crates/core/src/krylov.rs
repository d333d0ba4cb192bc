//! Restarted GMRES with right preconditioning.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresConfig {
    /// Target relative residual `‖b - Kx‖ / ‖b‖`.
    pub tol: f64,
    pub max_iters: usize,
    pub restart: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 500,
            restart: 60,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final true relative residual.
    pub residual: f64,
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `K x = b` starting from the contents of `x`.
pub fn gmres(
    op: impl Fn(&[f64], &mut [f64]),
    pc: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    cfg: &GmresConfig,
) -> Result<SolveStats> {
    let n = b.len();
    assert_eq!(x.len(), n);
    let bnorm = norm(b);
    let mut stats = SolveStats::default();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        stats.history.push(0.0);
        return Ok(stats);
    }
    let m = cfg.restart.max(1);
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    loop {
        op(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        stats.residual = beta / bnorm;
        stats.history.push(stats.residual);
        if stats.residual <= cfg.tol {
            return Ok(stats);
        }
        if stats.iterations >= cfg.max_iters || !beta.is_finite() {
            return Err(Error::SolverDiverged {
                iterations: stats.iterations,
                residual: stats.residual,
                history: stats.history,
            });
        }

        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m {
            pc(&basis[k], &mut z);
            op(&z, &mut w);
            for _pass in 0..2 {
                for (i, vi) in basis.iter().enumerate() {
                    let hij = dot(&w, vi);
                    h[i][k] += hij;
                    w.iter_mut().zip(vi).for_each(|(wj, vj)| *wj -= hij * vj);
                }
            }
            let hnext = norm(&w);
            h[k + 1][k] = hnext;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k += 1;
            stats.iterations += 1;
            let est = g[k].abs() / bnorm;
            stats.history.push(est);
            if est <= cfg.tol || stats.iterations >= cfg.max_iters || hnext == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }
        if k == 0 {
            return Err(Error::SolverDiverged {
                iterations: stats.iterations,
                residual: stats.residual,
                history: stats.history,
            });
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut comb = vec![0.0; n];
        for (yi, vi) in y.iter().zip(&basis) {
            comb.iter_mut().zip(vi).for_each(|(c, v)| *c += yi * v);
        }
        pc(&comb, &mut z);
        x.iter_mut().zip(&z).for_each(|(xi, zi)| *xi += zi);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 30;
        let a = |i: usize, j: usize| -> f64 {
            if i == j {
                4.0
            } else if j == i + 1 {
                -1.3
            } else if i == j + 1 {
                -0.7
            } else {
                0.0
            }
        };
        let op = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = (0..n).map(|j| a(i, j) * x[j]).sum();
            }
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; n];
        let cfg = GmresConfig {
            tol: 1e-12,
            max_iters: 200,
            restart: 7,
        };
        let stats = gmres(op, |r, z| z.copy_from_slice(r), &b, &mut x, &cfg).unwrap();
        assert!(stats.residual <= 1e-12);
        let mut ax = vec![0.0; n];
        op(&x, &mut ax);
        let err: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let mut x = vec![1.0; 4];
        let stats = gmres(
            |a, b| b.copy_from_slice(a),
            |a, b| b.copy_from_slice(a),
            &[0.0; 4],
            &mut x,
            &GmresConfig::default(),
        )
        .unwrap();
        assert_eq!(x, vec![0.0; 4]);
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn reports_non_convergence() {
        // rotation: GMRES(1) stagnates
        let op = |x: &[f64], y: &mut [f64]| {
            y[0] = -x[1];
            y[1] = x[0];
        };
        let mut x = vec![0.0; 2];
        let cfg = GmresConfig {
            tol: 1e-12,
            max_iters: 5,
            restart: 1,
        };
        let err = gmres(op, |a, b| b.copy_from_slice(a), &[1.0, 0.0], &mut x, &cfg).unwrap_err();
        match err {
            Error::SolverDiverged { history, .. } => assert!(!history.is_empty()),
            e => panic!("unexpected {e}"),
        }
    }
}
