use std::f64::consts::PI;

use fsi_core::ale::harmonic_extension;
use fsi_core::channel::{ChannelField, ChannelGrid};
use fsi_core::fluid::{
    advance_fluid, assemble_fluid_system, check_fluid_energy_inequality, fluid_energy, fluid_jumps, fluid_kinetic,
    FluidParams,
};
use fsi_core::splitting::project_initial;
use fsi_core::torus::TorusField;

fn wave(grid: ChannelGrid) -> ChannelField {
    ChannelField::from_fn(grid, 3, |x, _, z, o| o[0] = (PI * z).sin() * x.cos())
}

#[test]
fn kinetic_energy_of_sine_profile() {
    // ½∫ sin²(πz) cos²x = ½ · ½ · 2π²
    let grid = ChannelGrid::new(8, 8, 9);
    let map = harmonic_extension(&TorusField::zeros(grid.torus), grid.nz);
    let e = fluid_kinetic(&wave(grid), map.jacobian());
    assert!((e - PI * PI / 2.0).abs() < 1e-12, "{e}");
}

#[test]
fn dissipation_converges_to_closed_form() {
    // 2ν∫|D u|² = 2ν (π² + π⁴/2) for u = sin(πz) cos(x) e_x
    let nu = 0.3;
    let exact = 2.0 * nu * (PI * PI + PI.powi(4) / 2.0);
    let err = |nz: usize| {
        let grid = ChannelGrid::new(8, 8, nz);
        let map = harmonic_extension(&TorusField::zeros(grid.torus), nz);
        (fluid_energy(&wave(grid), &map, nu).dissipation_density - exact).abs() / exact
    };
    let (e1, e2) = (err(17), err(33));
    assert!(e2 < 2e-3, "{e2}");
    assert!(e1 / e2 > 3.5, "order ratio {}", e1 / e2);
}

fn flat_step(dt: f64) -> (f64, f64) {
    let grid = ChannelGrid::new(8, 8, 9);
    let map = harmonic_extension(&TorusField::zeros(grid.torus), grid.nz);
    let params = FluidParams::new(0.5, 1.0, 0.5, dt, 1e-12, 500).unwrap();
    let shear = ChannelField::from_fn(grid, 3, |x, y, z, o| {
        o[0] = z * z + 0.1 * z * y.sin();
        o[1] = 0.2 * z * x.cos();
    });
    let (u, v) = project_initial(&shear, &shear.trace_top(), &map, &params).unwrap();
    let sys = assemble_fluid_system(&u, &v, &map, &map, &params).unwrap();
    let sol = advance_fluid(&sys).unwrap();
    let du = sol.u.combine(1.0, &u, -1.0);
    let e_half = fluid_kinetic(&u, map.jacobian()) + 0.5 * v.inner(&v);
    let fe = fluid_energy(&sol.u, &map, params.nu);
    let damping = {
        let lam = fsi_core::torus::homogeneous_norm(&sol.v, 1.0 + params.s);
        params.gamma * lam * lam
    };
    let d_n = dt * (fe.dissipation_density + damping);
    let e_next = fe.kinetic + 0.5 * sol.v.inner(&sol.v);
    let check = check_fluid_energy_inequality(e_half, e_next, d_n, &fluid_jumps(&u, &sol.u, map.jacobian(), &v, &sol.v));
    assert!(check.pass, "{check:?}");
    (du.l2_norm(), sol.divergence_residual)
}

#[test]
fn flat_step_moves_by_order_dt() {
    let (a, div_a) = flat_step(0.02);
    let (b, div_b) = flat_step(0.01);
    let ratio = a / b;
    assert!(a > 0.0 && (1.7..2.3).contains(&ratio), "ratio {ratio}");
    assert!(div_a < 1e-9 && div_b < 1e-9);
}
