//! The Lie splitting loop: plate step, geometry update, fluid step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ale::{harmonic_extension, injectivity_check, AleMap, InjectivityVerdict};
use crate::channel::{ChannelField, ChannelGrid};
use crate::config::{Alpha, InitialData, SimConfig};
use crate::energy::InequalityCheck;
use crate::error::{Error, Result};
use crate::fluid::{
    advance_fluid, assemble_fluid_system, assemble_projection, check_fluid_energy_inequality, fluid_energy,
    fluid_jumps, fluid_kinetic, FluidParams, SaddleSystem, Term,
};
use crate::structure::{
    advance_structure, check_structure_energy_inequality, structure_energy, structure_jumps, StructureParams,
};
use crate::torus::{apply_fractional_laplacian, homogeneous_norm, TorusField, TorusGrid};

/// Scheme state at the start of step `n` (after the previous fluid step).
#[derive(Clone, Debug)]
pub struct FsiState {
    pub step: usize,
    pub u: ChannelField,
    pub eta: TorusField,
    pub v: TorusField,
    /// Half-step values of the step that produced this state.
    pub eta_half: TorusField,
    pub v_half: TorusField,
    pub map: AleMap,
    /// Cell pressures of the last fluid solve (zeros initially).
    pub pressure_cells: Vec<f64>,
}

/// One ledger row.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// Time at the end of the step.
    pub t: f64,
    pub e_n: f64,
    pub e_half: f64,
    pub e_next: f64,
    pub d_n: f64,
    pub c_n: f64,
    pub min_jacobian: f64,
    pub eta_h2delta: f64,
    pub struct_ineq_slack: f64,
    pub fluid_ineq_slack: f64,
    pub solver_iters: usize,
    pub solver_residual: f64,
    pub struct_pass: bool,
    pub fluid_pass: bool,
    /// `E^{n+1}` with full-norm structure energies, logged only.
    pub e_next_full: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyLedger {
    pub e0: f64,
    pub records: Vec<StepRecord>,
}

/// `Σ D^n`, `Σ C^n` against `E^0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budget {
    pub dissipation: f64,
    pub numerical: f64,
    pub e0: f64,
    pub pass: bool,
}

impl EnergyLedger {
    /// Both half-step inequalities hold at every recorded step.
    pub fn chain_holds(&self) -> bool {
        self.records.iter().all(|r| r.struct_pass && r.fluid_pass)
    }

    pub fn budget(&self) -> Budget {
        let dissipation: f64 = self.records.iter().map(|r| r.d_n).sum();
        let numerical: f64 = self.records.iter().map(|r| r.c_n).sum();
        Budget {
            dissipation,
            numerical,
            e0: self.e0,
            pass: dissipation + numerical <= self.e0 * (1.0 + 1e-6),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    Completed { t: f64 },
    /// The proposed displacement of step `step` failed the Jacobian bound.
    Contact {
        step: usize,
        t_max: f64,
        min_jacobian: f64,
        alpha: f64,
        /// Verdict of the last accepted displacement.
        previous: InjectivityVerdict,
    },
}

impl Termination {
    pub fn t_max(&self) -> f64 {
        match *self {
            Termination::Completed { t } => t,
            Termination::Contact { t_max, .. } => t_max,
        }
    }
}

/// Stored time levels of a run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: ChannelGrid,
    pub dt: f64,
    pub steps: usize,
    pub params: FluidParams,
    /// `u^n`, `η^n`, `v^n` for `n = 0..=M`.
    pub u: Vec<ChannelField>,
    pub eta: Vec<TorusField>,
    pub v: Vec<TorusField>,
    /// `v^{n+1/2}` for `n = 0..M`.
    pub v_half: Vec<TorusField>,
}

impl Trajectory {
    /// Number of completed steps `M`.
    pub fn len(&self) -> usize {
        self.v_half.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v_half.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        self.len() as f64 * self.dt
    }

    /// Index `n+1` for `t ∈ (nΔt, (n+1)Δt]`, and 0 at `t = 0`.
    fn level(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.t_end() * (1.0 + 1e-14)).contains(&t) {
            return Err(Error::OutOfRange(format!("t = {t} outside [0, {}]", self.t_end())));
        }
        Ok(((t / self.dt - 1e-12).ceil().max(0.0) as usize).min(self.len()))
    }

    fn bracket(&self, t: f64) -> Result<(usize, f64)> {
        let n = self.level(t)?;
        if n == 0 {
            return Ok((0, 0.0));
        }
        Ok((n - 1, (t / self.dt - (n - 1) as f64).clamp(0.0, 1.0)))
    }

    /// Piecewise-constant `u_N(t)`.
    pub fn u_const(&self, t: f64) -> Result<&ChannelField> {
        Ok(&self.u[self.level(t)?])
    }

    pub fn eta_const(&self, t: f64) -> Result<&TorusField> {
        Ok(&self.eta[self.level(t)?])
    }

    pub fn v_const(&self, t: f64) -> Result<&TorusField> {
        Ok(&self.v[self.level(t)?])
    }

    /// Piecewise-constant `v*_N(t) = v^{n+1/2}`.
    pub fn v_star(&self, t: f64) -> Result<&TorusField> {
        let n = self.level(t)?;
        Ok(&self.v_half[n.saturating_sub(1).min(self.len().saturating_sub(1))])
    }

    /// Piecewise-linear `η̃_N(t)`.
    pub fn eta_linear(&self, t: f64) -> Result<TorusField> {
        let (n, th) = self.bracket(t)?;
        if th == 0.0 {
            return Ok(self.eta[n].clone());
        }
        Ok(self.eta[n].combine(1.0 - th, &self.eta[n + 1], th))
    }

    /// Piecewise-linear `ũ_N(t)`.
    pub fn u_linear(&self, t: f64) -> Result<ChannelField> {
        let (n, th) = self.bracket(t)?;
        if th == 0.0 {
            return Ok(self.u[n].clone());
        }
        Ok(self.u[n].combine(1.0 - th, &self.u[n + 1], th))
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub ledger: EnergyLedger,
    pub trajectory: Trajectory,
    pub termination: Termination,
    pub alpha: f64,
}

/// Initial `(η₀, v₀, u₀)` of a preset before projection.
pub fn initial_data(cfg: &SimConfig) -> (TorusField, TorusField, ChannelField) {
    let grid = ChannelGrid::new(cfg.nx, cfg.ny, cfg.nz);
    let tg = grid.torus;
    let zero_u = ChannelField::zeros(grid, 3);
    match cfg.initial {
        InitialData::Zero => (TorusField::zeros(tg), TorusField::zeros(tg), zero_u),
        InitialData::SingleMode {
            kx,
            ky,
            amplitude,
            component,
        } => {
            let c = component.index();
            let eta = TorusField::from_fn(tg, |x, y| {
                let mut e = [0.0; 3];
                e[c] = amplitude * (kx as f64 * x + ky as f64 * y).cos();
                e
            });
            (eta, TorusField::zeros(tg), zero_u)
        }
        InitialData::RandomBandlimited { seed, kmax, amplitude } => {
            let eta = random_bandlimited(tg, seed, kmax, amplitude);
            let v = random_bandlimited(tg, seed.wrapping_add(1), kmax, amplitude);
            let u = extend_velocity(&v, grid);
            (eta, v, u)
        }
        InitialData::ContactDrive { vz } => {
            let v = TorusField::from_fn(tg, |x, _| [0.0, 0.0, vz * x.cos()]);
            let u = extend_velocity(&v, grid);
            (TorusField::zeros(tg), v, u)
        }
    }
}

/// Harmonic extension of an interface velocity into the channel.
fn extend_velocity(v: &TorusField, grid: ChannelGrid) -> ChannelField {
    harmonic_extension(v, grid.nz).displacement().clone()
}

/// Normal component with random Fourier coefficients on `0 < |k| ≤ kmax`,
/// scaled to the given maximum amplitude.
pub fn random_bandlimited(grid: TorusGrid, seed: u64, kmax: u32, amplitude: f64) -> TorusField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let km = kmax as i64;
    let mut modes = Vec::new();
    for kx in -km..=km {
        for ky in -km..=km {
            let k2 = kx * kx + ky * ky;
            if k2 == 0 || k2 > km * km || (kx, ky) < (0, 0) {
                continue;
            }
            modes.push((kx as f64, ky as f64, rng.random_range(-1.0..1.0), rng.random_range(0.0..std::f64::consts::TAU)));
        }
    }
    let f = TorusField::from_fn(grid, |x, y| {
        let s: f64 = modes.iter().map(|&(kx, ky, a, ph)| a * (kx * x + ky * y + ph).cos()).sum();
        [0.0, 0.0, s]
    });
    let m = f.max_abs();
    if m == 0.0 {
        f
    } else {
        f.scaled(amplitude / m)
    }
}

fn fluid_params(cfg: &SimConfig) -> Result<FluidParams> {
    FluidParams::new(cfg.nu, cfg.gamma, cfg.s, cfg.dt(), cfg.solver_tol, cfg.max_iters)
}

/// Projects `(u, v)` onto the discrete constraint space of `map` with
/// `u|_Γ = v`.
pub fn project_initial(u: &ChannelField, v: &TorusField, map: &AleMap, params: &FluidParams) -> Result<(ChannelField, TorusField)> {
    let sys = assemble_projection(u, v, map, params)?;
    let sol = advance_fluid(&sys)?;
    Ok((sol.u, sol.v))
}

fn total_energy(u: &ChannelField, map: &AleMap, eta: &TorusField, v: &TorusField, steps: usize) -> f64 {
    fluid_kinetic(u, map.jacobian()) + structure_energy(eta, v, steps).certified()
}

/// Runs the scheme; `observe` sees each ledger row and the state it produced.
pub fn run(cfg: &SimConfig, mut observe: impl FnMut(&StepRecord, &FsiState) -> Result<()>) -> Result<RunOutcome> {
    if let Err(e) = cfg.validate() {
        return Err(e.into());
    }
    let grid = ChannelGrid::new(cfg.nx, cfg.ny, cfg.nz);
    let dt = cfg.dt();
    let n_steps = cfg.steps;
    let sp = StructureParams::new(cfg.gamma, cfg.s, n_steps, dt)?;
    let fp = fluid_params(cfg)?;

    let (eta0, v0, u0) = initial_data(cfg);
    let map0 = harmonic_extension(&eta0, grid.nz);
    let alpha = match cfg.alpha {
        Alpha::Auto => 0.5 * map0.min_jacobian(),
        Alpha::Value(a) => a,
    };
    let first = injectivity_check(&map0, &eta0, alpha, cfg.delta);
    if !first.pass {
        return Err(Error::NonInjective {
            min_jacobian: first.min_jacobian,
        });
    }
    let (u0, v0) = project_initial(&u0, &v0, &map0, &fp)?;

    let e0 = total_energy(&u0, &map0, &eta0, &v0, n_steps);
    let mut state = FsiState {
        step: 0,
        pressure_cells: vec![0.0; (grid.nz - 1) * grid.nxy()],
        eta_half: eta0.clone(),
        v_half: v0.clone(),
        u: u0,
        eta: eta0,
        v: v0,
        map: map0,
    };
    let mut ledger = EnergyLedger { e0, records: Vec::new() };
    let mut traj = Trajectory {
        grid,
        dt,
        steps: n_steps,
        params: fp,
        u: vec![state.u.clone()],
        eta: vec![state.eta.clone()],
        v: vec![state.v.clone()],
        v_half: Vec::new(),
    };
    let mut verdict = first;

    for n in 0..n_steps {
        let s_before = structure_energy(&state.eta, &state.v, n_steps);
        let kin_u = fluid_kinetic(&state.u, state.map.jacobian());
        let e_n = kin_u + s_before.certified();

        let (eta_half, v_half) = advance_structure(&state.eta, &state.v, &sp)?;
        let s_half = structure_energy(&eta_half, &v_half, n_steps);
        let e_half = kin_u + s_half.certified();
        let sj = structure_jumps(&state.eta, &state.v, &eta_half, &v_half, n_steps);
        let s_chk = check_structure_energy_inequality(&s_before, &s_half, &sj);

        let map_next = harmonic_extension(&eta_half, grid.nz);
        let next_verdict = injectivity_check(&map_next, &eta_half, alpha, cfg.delta);
        if !next_verdict.pass {
            let termination = Termination::Contact {
                step: n,
                t_max: n as f64 * dt,
                min_jacobian: next_verdict.min_jacobian,
                alpha,
                previous: verdict,
            };
            return Ok(RunOutcome {
                ledger,
                trajectory: traj,
                termination,
                alpha,
            });
        }

        let sys = assemble_fluid_system(&state.u, &v_half, &state.map, &map_next, &fp)?;
        let sol = advance_fluid(&sys)?;
        let fe = fluid_energy(&sol.u, &state.map, cfg.nu);
        let d_n = dt * (fe.dissipation_density + cfg.gamma * homogeneous_norm(&sol.v, 1.0 + cfg.s).powi(2));
        let fj = fluid_jumps(&state.u, &sol.u, state.map.jacobian(), &v_half, &sol.v);
        let s_next = structure_energy(&eta_half, &sol.v, n_steps);
        let kin_next = fluid_kinetic(&sol.u, map_next.jacobian());
        let e_next = kin_next + s_next.certified();
        let f_chk: InequalityCheck = check_fluid_energy_inequality(e_half, e_next, d_n, &fj);

        let record = StepRecord {
            step: n,
            t: (n + 1) as f64 * dt,
            e_n,
            e_half,
            e_next,
            d_n,
            c_n: sj.total() + fj.total(),
            min_jacobian: next_verdict.min_jacobian,
            eta_h2delta: next_verdict.h2delta_norm,
            struct_ineq_slack: s_chk.slack,
            fluid_ineq_slack: f_chk.slack,
            solver_iters: sol.stats.iterations,
            solver_residual: sol.stats.residual,
            struct_pass: s_chk.pass,
            fluid_pass: f_chk.pass,
            e_next_full: kin_next + s_next.full(),
        };
        state = FsiState {
            step: n + 1,
            u: sol.u,
            eta: eta_half.clone(),
            v: sol.v,
            eta_half,
            v_half: v_half.clone(),
            map: map_next,
            pressure_cells: sol.pressure_cells,
        };
        verdict = next_verdict;
        traj.u.push(state.u.clone());
        traj.eta.push(state.eta.clone());
        traj.v.push(state.v.clone());
        traj.v_half.push(v_half);
        ledger.records.push(record);
        observe(&record, &state)?;
    }
    Ok(RunOutcome {
        ledger,
        trajectory: traj,
        termination: Termination::Completed { t: n_steps as f64 * dt },
        alpha,
    })
}

/// Test velocities `q^n` for each step of a trajectory, with `ψ^n = q^n|_Γ`.
#[derive(Clone, Debug)]
pub struct TestPair {
    pub q: Vec<ChannelField>,
    pub psi: Vec<TorusField>,
}

/// Random smooth test pair projected onto each step's constraint space.
pub fn admissible_test_pair(traj: &Trajectory, seed: u64) -> Result<TestPair> {
    let grid = traj.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = Vec::with_capacity(traj.len());
    let mut psi = Vec::with_capacity(traj.len());
    for n in 0..traj.len() {
        let coef: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let raw = ChannelField::from_fn(grid, 3, |x, y, z, out| {
            for c in 0..3 {
                let a = &coef[4 * c..4 * c + 4];
                out[c] = z * (a[0] + a[1] * (x + c as f64).sin() + a[2] * (y - z).cos() + a[3] * (2.0 * x + y).sin() * z);
            }
        });
        let map = harmonic_extension(&traj.eta[n], grid.nz);
        let (qn, pn) = project_initial(&raw, &raw.trace_top(), &map, &traj.params)?;
        q.push(qn);
        psi.push(pn);
    }
    Ok(TestPair { q, psi })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
}

fn structure_form(traj: &Trajectory, n: usize, psi: &TorusField) -> Result<(f64, f64)> {
    let eta1 = &traj.eta[n + 1];
    let stiff = apply_fractional_laplacian(eta1, 4.0)?.combine(1.0, &apply_fractional_laplacian(eta1, 6.0)?, 1.0 / traj.steps as f64);
    let inertia = traj.v_half[n].combine(1.0, &traj.v[n], -1.0).inner(psi);
    let elastic = traj.dt * stiff.inner(psi);
    Ok((inertia + elastic, inertia.abs() + elastic.abs()))
}

fn fluid_form(sys: &SaddleSystem, u_next: &ChannelField, q: &ChannelField) -> (f64, f64) {
    let mut value = -sys.rhs_pairing(q);
    let mut scale = value.abs();
    for t in [
        Term::Mass,
        Term::JacobianRate,
        Term::Advection,
        Term::Viscous,
        Term::StructureMass,
        Term::Damping,
    ] {
        let b = sys.bilinear(t, u_next, q);
        value += b;
        scale += b.abs();
    }
    (value, scale)
}

/// Relative residual of the time-summed coupled weak form for each test pair.
pub fn monolithic_residual(traj: &Trajectory, tests: &[TestPair]) -> Result<ResidualStats> {
    if traj.len() < 2 {
        return Err(Error::OutOfRange("monolithic residual needs at least two steps".into()));
    }
    let mut systems = Vec::with_capacity(traj.len());
    let mut maps: Vec<AleMap> = traj.eta.iter().map(|e| harmonic_extension(e, traj.grid.nz)).collect();
    for n in 0..traj.len() {
        systems.push(assemble_fluid_system(&traj.u[n], &traj.v_half[n], &maps[n], &maps[n + 1], &traj.params)?);
    }
    maps.clear();
    let mut values = Vec::with_capacity(tests.len());
    for (i, tp) in tests.iter().enumerate() {
        if tp.q.len() != traj.len() || tp.psi.len() != traj.len() {
            return Err(Error::IncompatibleTest(format!("test {i} covers {} steps, trajectory has {}", tp.q.len(), traj.len())));
        }
        let (mut total, mut scale) = (0.0, 0.0);
        for n in 0..traj.len() {
            let (q, psi) = (&tp.q[n], &tp.psi[n]);
            let trace = q.trace_top();
            let mismatch = trace.combine(1.0, psi, -1.0).max_abs();
            if mismatch > 1e-12 * (1.0 + psi.max_abs()) {
                return Err(Error::IncompatibleTest(format!("test {i}, step {n}: trace of q differs from ψ by {mismatch:e}")));
            }
            let div = systems[n].divergence_residual(q);
            if div > 1e3 * traj.params.tol * (1.0 + q.max_abs()) {
                return Err(Error::IncompatibleTest(format!("test {i}, step {n}: q violates the constraint by {div:e}")));
            }
            let (fv, fs) = fluid_form(&systems[n], &traj.u[n + 1], q);
            let (sv, ss) = structure_form(traj, n, psi)?;
            total += fv + sv;
            scale += fs + ss;
        }
        values.push(if scale == 0.0 { 0.0 } else { total.abs() / scale });
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    let mean = if values.is_empty() { 0.0 } else { values.iter().sum::<f64>() / values.len() as f64 };
    Ok(ResidualStats { max, mean })
}
