use fsi_core::ale::{harmonic_extension, injectivity_check, jacobian_time_difference};
use fsi_core::torus::{TorusField, TorusGrid};

fn grid() -> TorusGrid {
    TorusGrid::new(16, 8)
}

fn bump(eps: f64) -> TorusField {
    TorusField::from_fn(grid(), |x, _| [0.0, 0.0, eps * x.cos()])
}

// For η = ε cos(x) e_z the extension is ε cos(x) sinh(z)/sinh(1) e_z, so
// J = 1 + ε cos(x) cosh(z)/sinh(1).
fn oracle_min_jacobian(eps: f64, nz: usize) -> f64 {
    let g = grid();
    let mut min = f64::INFINITY;
    for j in 0..nz {
        let z = j as f64 / (nz - 1) as f64;
        for idx in 0..g.len() {
            let (x, _) = g.coords(idx);
            min = min.min(1.0 + eps * x.cos() * z.cosh() / 1f64.sinh());
        }
    }
    min
}

fn bisect(mut lo: f64, mut hi: f64, pass: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if pass(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn injectivity_boundary_matches_oracle() {
    let nz = 9;
    let alpha = 0.5;
    let ours = bisect(0.0, 2.0, |e| injectivity_check(&harmonic_extension(&bump(e), nz), &bump(e), alpha, 0.25).pass);
    let oracle = bisect(0.0, 2.0, |e| oracle_min_jacobian(e, nz) > alpha);
    assert!((ours - oracle).abs() < 1e-10, "{ours} vs {oracle}");
}

#[test]
fn displacement_is_linear_in_eta() {
    let a = TorusField::from_fn(grid(), |x, y| [0.1 * y.sin(), 0.0, 0.2 * x.cos()]);
    let b = TorusField::from_fn(grid(), |x, y| [0.0, 0.05 * (x + y).cos(), -0.1 * (2.0 * y).sin()]);
    let (ea, eb) = (harmonic_extension(&a, 7), harmonic_extension(&b, 7));
    let sum = harmonic_extension(&a.combine(2.0, &b, -3.0), 7);
    let lin = ea.displacement().combine(2.0, eb.displacement(), -3.0);
    assert!(sum.displacement().combine(1.0, &lin, -1.0).max_abs() < 1e-13);
}

// Regression constant for min J ≥ 1 − C‖η‖_{C¹}, measured on cos-type
// profiles and frozen.
const MAX_PRINCIPLE_C: f64 = 1.0;

#[test]
fn jacobian_stays_near_one_for_small_displacements() {
    for (k, amp) in [(1.0, 0.05), (2.0, 0.02), (3.0, 0.01), (1.0, 0.2)] {
        let eta = TorusField::from_fn(grid(), |x, y| [0.0, 0.3 * amp * y.sin(), amp * (k * x).cos()]);
        let c1 = 1.3 * amp * (1.0 + k);
        let m = harmonic_extension(&eta, 9);
        let j = m.jacobian();
        assert!(j.min() >= 1.0 - MAX_PRINCIPLE_C * c1, "k {k}: {} < {}", j.min(), 1.0 - c1);
        assert!(j.max_abs() <= 1.0 + MAX_PRINCIPLE_C * c1);
    }
}

#[test]
fn jacobian_time_difference_of_growing_bump() {
    let dt = 0.1;
    let (m0, m1) = (harmonic_extension(&bump(0.1), 9), harmonic_extension(&bump(0.2), 9));
    let dj = jacobian_time_difference(&m0, &m1, dt).unwrap();
    let g = m0.grid();
    for node in 0..g.len() {
        let (x, _, z) = g.coords(node);
        let want = x.cos() * z.cosh() / 1f64.sinh();
        assert!((dj.get(0, node) - want).abs() < 1e-12, "{} {want}", dj.get(0, node));
    }
    assert!(jacobian_time_difference(&m0, &m0, dt).unwrap().max_abs() == 0.0);
    assert!(jacobian_time_difference(&m0, &m1, 0.0).is_err());
    let crushed = harmonic_extension(&bump(1.5), 9);
    assert!(jacobian_time_difference(&m0, &crushed, dt).is_err());
}
