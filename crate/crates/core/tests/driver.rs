use std::path::Path;
use std::process::Command;

use fsi_core::config::{parse_config, Axis, InitialData, SimConfig};
use fsi_core::output::{read_ledger, read_snapshot};
use fsi_core::splitting::{run, Termination};

fn small(initial: InitialData, steps: usize) -> SimConfig {
    SimConfig {
        nx: 8,
        ny: 8,
        nz: 6,
        steps,
        horizon: 0.25,
        initial,
        ..SimConfig::default()
    }
}

fn fsi(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fsi")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("sim.txt");
    std::fs::write(&path, format!("{body}\noutput_dir = {}\n", dir.join("out").display())).unwrap();
    path.display().to_string()
}

#[test]
fn zero_data_stays_at_rest() {
    let out = run(&small(InitialData::Zero, 3), |_, _| Ok(())).unwrap();
    assert_eq!(out.ledger.records.len(), 3);
    for r in &out.ledger.records {
        assert_eq!((r.e_n, r.e_next, r.d_n, r.c_n), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(r.min_jacobian, 1.0);
    }
    assert!(matches!(out.termination, Termination::Completed { .. }));
}

#[test]
fn small_single_mode_energy_decays() {
    let init = InitialData::SingleMode {
        kx: 1,
        ky: 0,
        amplitude: 0.02,
        component: Axis::Z,
    };
    let out = run(&small(init, 8), |_, _| Ok(())).unwrap();
    let e: Vec<f64> = out.ledger.records.iter().map(|r| r.e_next).collect();
    assert!(out.ledger.records[0].e_n > e[0]);
    assert!(e.windows(2).all(|w| w[1] <= w[0]), "{e:?}");
    assert!(out.ledger.chain_holds() && out.ledger.budget().pass);
}

#[test]
fn interpolants_follow_stored_levels() {
    let init = InitialData::RandomBandlimited {
        seed: 3,
        kmax: 2,
        amplitude: 0.01,
    };
    let out = run(&small(init, 4), |_, _| Ok(())).unwrap();
    let tr = &out.trajectory;
    let dt = tr.dt;
    // piecewise constant: level n+1 on (nΔt, (n+1)Δt]
    assert!(std::ptr::eq(tr.u_const(0.0).unwrap(), &tr.u[0]));
    assert!(std::ptr::eq(tr.u_const(0.5 * dt).unwrap(), &tr.u[1]));
    assert!(std::ptr::eq(tr.v_const(dt).unwrap(), &tr.v[1]));
    assert!(std::ptr::eq(tr.v_star(1.5 * dt).unwrap(), &tr.v_half[1]));
    let mid = tr.eta_linear(2.5 * dt).unwrap();
    let want = tr.eta[2].combine(0.5, &tr.eta[3], 0.5);
    assert!(mid.combine(1.0, &want, -1.0).max_abs() < 1e-15);
    assert!(tr.u_linear(3.0 * dt).unwrap().combine(1.0, &tr.u[3], -1.0).max_abs() < 1e-15);
    assert!(tr.eta_const(tr.t_end() * 1.01).is_err());
}

#[test]
fn check_reports_every_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "nu = -1\ngamma = 0\nnx = 15\nbogus = 2\nnu = 1");
    let out = fsi(&["check", &path]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bogus") && err.contains("duplicate key `nu`"), "{err}");

    let ok = write_config(dir.path(), "nx = 8\nsteps = 4");
    let out = fsi(&["check", &ok]);
    assert!(out.status.success());
    let echoed = parse_config(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(echoed, parse_config(&std::fs::read_to_string(&ok).unwrap()).unwrap());
}

#[test]
fn zero_run_writes_ledger_and_identity_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "nx = 8\nny = 8\nnz = 5\nsteps = 2\nT = 0.1");
    let out = fsi(&["--quiet", "--snapshot-stride", "1", "run", &path]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("out");
    let rows = read_ledger(&o.join("ledger.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.e_n == 0.0 && r.e_next == 0.0 && r.d_n == 0.0 && r.c_n == 0.0));
    let snap = std::fs::read_dir(&o)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_string_lossy().starts_with("snap_"))
        .expect("snapshot written");
    let s = read_snapshot(&snap).unwrap();
    assert_eq!(s.dims, [8, 8, 5]);
    assert!(s.column("J").unwrap().iter().all(|&j| j == 1.0));
    assert!(s.column("u_x").unwrap().iter().all(|&u| u == 0.0));
}

#[test]
fn ledger_reproduces_budget() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "nx = 8\nny = 8\nnz = 6\nsteps = 6\nT = 0.2\ninitial = random_bandlimited(5, 2, 0.02)");
    let out = fsi(&["--quiet", "run", &path]);
    assert!(out.status.success());
    let o = dir.path().join("out");
    let cfg = parse_config(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let direct = run(&cfg, |_, _| Ok(())).unwrap().ledger.budget();
    let rows = read_ledger(&o.join("ledger.csv")).unwrap();
    let d: f64 = rows.iter().map(|r| r.d_n).sum();
    let c: f64 = rows.iter().map(|r| r.c_n).sum();
    assert!((d - direct.dissipation).abs() <= 1e-12 * direct.dissipation.max(1e-300));
    assert!((c - direct.numerical).abs() <= 1e-12 * direct.numerical.max(1e-300));
    assert!((rows[0].e_n - direct.e0).abs() <= 1e-12 * direct.e0);

    let diag = fsi(&["diagnose", &o.display().to_string()]);
    assert!(diag.status.success(), "{}", String::from_utf8_lossy(&diag.stderr));
    let report = String::from_utf8_lossy(&diag.stdout);
    assert!(report.contains("energy budget") && report.contains("[ok]"), "{report}");
    assert!(o.join("report.csv").exists());
}
