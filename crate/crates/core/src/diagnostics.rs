//! Regularity certificates computed from a stored trajectory.

use std::fmt;

use crate::channel::ChannelField;
use crate::error::{Error, Result};
use crate::splitting::{Budget, EnergyLedger, Trajectory};
use crate::torus::{sobolev_norm, TorusField};

/// Squared L² distance between two snapshots of a series.
pub trait L2Distance {
    fn dist2(&self, other: &Self) -> f64;
}

impl L2Distance for TorusField {
    fn dist2(&self, other: &Self) -> f64 {
        let d = self.combine(1.0, other, -1.0);
        d.inner(&d)
    }
}

impl L2Distance for ChannelField {
    fn dist2(&self, other: &Self) -> f64 {
        let d = self.combine(1.0, other, -1.0);
        d.weighted_inner(&d, None)
    }
}

/// `(Σ_{n=m}^{M-1} Δt ‖f^{n+1-m} - f^{n+1}‖²)^{1/2} / h^{1/8}` with `h = mΔt`:
/// the L²(h, T; L²) norm of `τ_h f - f` for the piecewise-constant
/// interpolant of `series = (f^0, …, f^M)`.
pub fn nikolskii_quotient<F: L2Distance>(series: &[F], dt: f64, lag: f64) -> Result<f64> {
    let ratio = lag / dt;
    let m = ratio.round();
    if !(m >= 1.0) || (ratio - m).abs() > 1e-9 * m {
        return Err(Error::OutOfRange(format!("lag {lag} is not a positive multiple of dt = {dt}")));
    }
    let m = m as usize;
    let steps = series.len().saturating_sub(1);
    if m >= steps {
        return Err(Error::OutOfRange(format!("lag {lag} must be shorter than the horizon {}", steps as f64 * dt)));
    }
    let sum: f64 = (m..steps).map(|n| dt * series[n + 1 - m].dist2(&series[n + 1])).sum();
    Ok(sum.sqrt() / lag.powf(0.125))
}

/// Dyadic lags `Δt, 2Δt, …` not exceeding `T/8`.
pub fn default_lags(dt: f64, horizon: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut m = 1usize;
    while m as f64 * dt <= horizon / 8.0 * (1.0 + 1e-12) {
        out.push(m as f64 * dt);
        m *= 2;
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpatialMonitor {
    /// `‖η^n‖_{H^{2+δ}}` per stored level.
    pub h2delta: Vec<f64>,
    pub running_sup: Vec<f64>,
    /// `(∫ ‖η‖²_{H^{3-(s-δ)}} dt)^{1/2}`, trapezoidal in time.
    pub l2_high: f64,
}

impl SpatialMonitor {
    pub fn sup(&self) -> f64 {
        self.running_sup.last().copied().unwrap_or(0.0)
    }
}

pub fn spatial_regularity_monitor(eta: &[TorusField], dt: f64, delta: f64, s: f64) -> Result<SpatialMonitor> {
    if !(delta > 0.0 && delta < s) {
        return Err(Error::OutOfRange(format!("delta must lie in (0, s) = (0, {s}), got {delta}")));
    }
    let h2delta: Vec<f64> = eta.iter().map(|e| sobolev_norm(e, 2.0 + delta)).collect();
    let mut sup = 0.0_f64;
    let running_sup = h2delta
        .iter()
        .map(|&v| {
            sup = sup.max(v);
            sup
        })
        .collect();
    let high: Vec<f64> = eta.iter().map(|e| sobolev_norm(e, 3.0 - (s - delta)).powi(2)).collect();
    let l2 = high.windows(2).map(|w| 0.5 * dt * (w[0] + w[1])).sum::<f64>();
    Ok(SpatialMonitor {
        h2delta,
        running_sup,
        l2_high: l2.sqrt(),
    })
}

pub fn dissipation_budget(ledger: &EnergyLedger) -> Budget {
    ledger.budget()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularityReport {
    pub delta: f64,
    pub s: f64,
    pub spatial: SpatialMonitor,
    /// `(h, quotient)` for the fluid velocity.
    pub nikolskii_u: Vec<(f64, f64)>,
    /// `(h, quotient)` for the plate velocity.
    pub nikolskii_v: Vec<(f64, f64)>,
    pub budget: Budget,
    pub chain_holds: bool,
}

fn spread(q: &[(f64, f64)]) -> f64 {
    let max = q.iter().map(|p| p.1).fold(0.0, f64::max);
    let min = q.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        1.0
    } else {
        max / min
    }
}

impl RegularityReport {
    /// Max/min ratio of the Nikolskii quotients over all lags.
    pub fn nikolskii_spread(&self) -> (f64, f64) {
        (spread(&self.nikolskii_u), spread(&self.nikolskii_v))
    }

    pub fn all_finite(&self) -> bool {
        self.spatial.h2delta.iter().all(|v| v.is_finite())
            && self.spatial.l2_high.is_finite()
            && self.nikolskii_u.iter().chain(&self.nikolskii_v).all(|p| p.1.is_finite())
    }

    /// CSV section: one row per lag, then the scalar summary.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lag,nikolskii_u,nikolskii_v\n");
        for ((h, qu), (_, qv)) in self.nikolskii_u.iter().zip(&self.nikolskii_v) {
            out.push_str(&format!("{h:e},{qu:e},{qv:e}\n"));
        }
        out.push_str("\nquantity,value\n");
        for (k, v) in [
            ("sup_h2delta", self.spatial.sup()),
            ("initial_h2delta", self.spatial.h2delta.first().copied().unwrap_or(0.0)),
            ("l2_time_high_norm", self.spatial.l2_high),
            ("sum_dissipation", self.budget.dissipation),
            ("sum_numerical_dissipation", self.budget.numerical),
            ("initial_energy", self.budget.e0),
        ] {
            out.push_str(&format!("{k},{v:e}\n"));
        }
        out
    }
}

impl fmt::Display for RegularityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = &self.budget;
        writeln!(f, "energy budget: sum D = {:.6e}, sum C = {:.6e}, E0 = {:.6e} [{}]", b.dissipation, b.numerical, b.e0, if b.pass { "ok" } else { "VIOLATED" })?;
        writeln!(f, "energy chain: {}", if self.chain_holds { "ok at every step" } else { "VIOLATED" })?;
        let init = self.spatial.h2delta.first().copied().unwrap_or(0.0);
        writeln!(f, "sup |eta|_H^(2+{}) = {:.6e} (initial {:.6e})", self.delta, self.spatial.sup(), init)?;
        writeln!(f, "|eta|_L2(H^({})) = {:.6e}", 3.0 - (self.s - self.delta), self.spatial.l2_high)?;
        for ((h, qu), (_, qv)) in self.nikolskii_u.iter().zip(&self.nikolskii_v) {
            writeln!(f, "nikolskii h = {h:.4e}: u {qu:.6e}, v {qv:.6e}")?;
        }
        let (su, sv) = self.nikolskii_spread();
        write!(f, "nikolskii max/min: u {su:.3}, v {sv:.3}")
    }
}

/// Builds the full report for a trajectory and its ledger.
pub fn regularity_report(traj: &Trajectory, ledger: &EnergyLedger, delta: f64, s: f64, lags: &[f64]) -> Result<RegularityReport> {
    let spatial = spatial_regularity_monitor(&traj.eta, traj.dt, delta, s)?;
    let mut nikolskii_u = Vec::new();
    let mut nikolskii_v = Vec::new();
    for &h in lags {
        nikolskii_u.push((h, nikolskii_quotient(&traj.u, traj.dt, h)?));
        nikolskii_v.push((h, nikolskii_quotient(&traj.v, traj.dt, h)?));
    }
    Ok(RegularityReport {
        delta,
        s,
        spatial,
        nikolskii_u,
        nikolskii_v,
        budget: ledger.budget(),
        chain_holds: ledger.chain_holds(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::TorusGrid;

    fn g() -> TorusField {
        TorusField::from_fn(TorusGrid::new(8, 8), |x, y| [x.sin(), 0.5, (x + y).cos()])
    }

    #[test]
    fn affine_series_matches_closed_form() {
        let dt = 0.01;
        let steps = 64;
        let gn = g().inner(&g()).sqrt();
        let series: Vec<TorusField> = (0..=steps).map(|n| g().scaled(n as f64 * dt)).collect();
        for m in [1, 2, 4, 8] {
            let h = m as f64 * dt;
            let t = steps as f64 * dt;
            let expect = h.powf(0.875) * gn * (t - h).sqrt();
            let got = nikolskii_quotient(&series, dt, h).unwrap();
            assert!((got - expect).abs() < 1e-12 * expect, "{got} {expect}");
        }
    }

    #[test]
    fn constant_series_and_shift_invariance() {
        let series = vec![g(); 10];
        assert_eq!(nikolskii_quotient(&series, 0.1, 0.2).unwrap(), 0.0);
        let wavy: Vec<TorusField> = (0..10).map(|n| g().scaled((n as f64).sin())).collect();
        let shifted: Vec<TorusField> = wavy.iter().map(|f| f.combine(1.0, &g(), 3.0)).collect();
        let (a, b) = (nikolskii_quotient(&wavy, 0.1, 0.3).unwrap(), nikolskii_quotient(&shifted, 0.1, 0.3).unwrap());
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn rejects_bad_lags() {
        let series = vec![g(); 10];
        assert!(nikolskii_quotient(&series, 0.1, 0.15).is_err());
        assert!(nikolskii_quotient(&series, 0.1, 0.9).is_err());
        assert!(nikolskii_quotient(&series, 0.1, 0.0).is_err());
    }

    #[test]
    fn frozen_structure_gives_constant_monitor() {
        let series = vec![g(); 5];
        let m = spatial_regularity_monitor(&series, 0.1, 0.25, 0.5).unwrap();
        assert!(m.h2delta.iter().all(|&v| v == m.h2delta[0]));
        assert_eq!(m.sup(), m.h2delta[0]);
        assert!(spatial_regularity_monitor(&series, 0.1, 0.5, 0.5).is_err());
    }

    #[test]
    fn dyadic_lags() {
        assert_eq!(default_lags(1.0 / 64.0, 1.0), vec![1.0 / 64.0, 2.0 / 64.0, 4.0 / 64.0, 8.0 / 64.0]);
    }
}
