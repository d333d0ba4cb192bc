//! Plain-text outputs: ledger CSV, structured-grid snapshots, reports and
//! the stored trajectory read back by `fsi diagnose`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::channel::{ChannelField, ChannelGrid};
use crate::diagnostics::RegularityReport;
use crate::error::{Error, Result};
use crate::fluid::FluidParams;
use crate::splitting::{FsiState, StepRecord, Trajectory};
use crate::torus::TorusField;

pub const LEDGER_COLUMNS: [&str; 13] = [
    "step",
    "t",
    "E_n",
    "E_half",
    "E_next",
    "D_n",
    "C_n",
    "min_jacobian",
    "eta_h2delta",
    "struct_ineq_slack",
    "fluid_ineq_slack",
    "solver_iters",
    "solver_residual",
];

/// Streams ledger rows, flushing after each one.
pub struct LedgerWriter {
    out: BufWriter<File>,
}

impl LedgerWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", LEDGER_COLUMNS.join(","))?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn write_row(&mut self, r: &StepRecord) -> Result<()> {
        writeln!(
            self.out,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{:e}",
            r.step,
            r.t,
            r.e_n,
            r.e_half,
            r.e_next,
            r.d_n,
            r.c_n,
            r.min_jacobian,
            r.eta_h2delta,
            r.struct_ineq_slack,
            r.fluid_ineq_slack,
            r.solver_iters,
            r.solver_residual
        )?;
        self.out.flush()?;
        Ok(())
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Reads a ledger CSV back; pass flags are not stored and come back false.
pub fn read_ledger(path: &Path) -> Result<Vec<StepRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| format_err(path, "empty file"))??;
    if header != LEDGER_COLUMNS.join(",") {
        return Err(format_err(path, format!("unexpected header `{header}`")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != LEDGER_COLUMNS.len() {
            return Err(format_err(path, format!("row {} has {} columns", i + 1, cols.len())));
        }
        let f = |k: usize| cols[k].parse::<f64>().map_err(|_| format_err(path, format!("row {}: bad number `{}`", i + 1, cols[k])));
        let u = |k: usize| cols[k].parse::<usize>().map_err(|_| format_err(path, format!("row {}: bad integer `{}`", i + 1, cols[k])));
        out.push(StepRecord {
            step: u(0)?,
            t: f(1)?,
            e_n: f(2)?,
            e_half: f(3)?,
            e_next: f(4)?,
            d_n: f(5)?,
            c_n: f(6)?,
            min_jacobian: f(7)?,
            eta_h2delta: f(8)?,
            struct_ineq_slack: f(9)?,
            fluid_ineq_slack: f(10)?,
            solver_iters: u(11)?,
            solver_residual: f(12)?,
            ..StepRecord::default()
        });
    }
    Ok(out)
}

fn write_grid_header(out: &mut impl Write, dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3], t: f64, step: usize, fields: &[&str]) -> Result<()> {
    writeln!(out, "# structured grid, x fastest then y then z")?;
    writeln!(out, "dims {} {} {}", dims[0], dims[1], dims[2])?;
    writeln!(out, "spacing {:e} {:e} {:e}", spacing[0], spacing[1], spacing[2])?;
    writeln!(out, "origin {:e} {:e} {:e}", origin[0], origin[1], origin[2])?;
    writeln!(out, "time {t:e}")?;
    writeln!(out, "step {step}")?;
    writeln!(out, "fields {}", fields.join(" "))?;
    Ok(())
}

/// Writes `snap_NNNNN.txt` (u, J, A on the nodes) and `pressure_NNNNN.txt`
/// (p on the cell centres) into `dir`.
pub fn write_snapshot(dir: &Path, state: &FsiState, t: f64) -> Result<(PathBuf, PathBuf)> {
    let grid = state.map.grid();
    let tg = grid.torus;
    let a = state.map.map_values();
    let jac = state.map.jacobian();
    let spacing = [tg.dx(), tg.dy(), grid.hz()];

    let node_path = dir.join(format!("snap_{:05}.txt", state.step));
    let mut out = BufWriter::new(File::create(&node_path)?);
    write_grid_header(&mut out, [tg.nx, tg.ny, grid.nz], spacing, [0.0; 3], t, state.step, &["u_x", "u_y", "u_z", "J", "A_x", "A_y", "A_z"])?;
    for node in 0..grid.len() {
        writeln!(
            out,
            "{:e} {:e} {:e} {:e} {:e} {:e} {:e}",
            state.u.get(0, node),
            state.u.get(1, node),
            state.u.get(2, node),
            jac.get(0, node),
            a.get(0, node),
            a.get(1, node),
            a.get(2, node)
        )?;
    }
    out.flush()?;

    let p_path = dir.join(format!("pressure_{:05}.txt", state.step));
    let mut out = BufWriter::new(File::create(&p_path)?);
    write_grid_header(&mut out, [tg.nx, tg.ny, grid.nz - 1], spacing, [0.0, 0.0, 0.5 * grid.hz()], t, state.step, &["p"])?;
    for p in &state.pressure_cells {
        writeln!(out, "{p:e}")?;
    }
    out.flush()?;
    Ok((node_path, p_path))
}

/// Parsed snapshot: header values and one row of field values per node.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub dims: [usize; 3],
    pub time: f64,
    pub step: usize,
    pub fields: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.fields.iter().position(|f| f == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let text = fs::read_to_string(path)?;
    let mut dims = None;
    let (mut time, mut step, mut fields) = (0.0, 0, Vec::new());
    let mut rows = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let mut parts = line.split_whitespace();
        let head = parts.next().unwrap_or("");
        let bad = |what: &str| format_err(path, format!("bad {what} line `{line}`"));
        match head {
            "dims" => {
                let v: Vec<usize> = parts.map(|p| p.parse().map_err(|_| bad("dims"))).collect::<Result<_>>()?;
                dims = Some([v[0], v[1], v[2]]);
            }
            "spacing" | "origin" => {}
            "time" => time = parts.next().and_then(|p| p.parse().ok()).ok_or_else(|| bad("time"))?,
            "step" => step = parts.next().and_then(|p| p.parse().ok()).ok_or_else(|| bad("step"))?,
            "fields" => fields = parts.map(String::from).collect(),
            _ => rows.push(line.split_whitespace().map(|p| p.parse().map_err(|_| bad("value"))).collect::<Result<Vec<f64>>>()?),
        }
    }
    let dims = dims.ok_or_else(|| format_err(path, "missing dims"))?;
    if rows.len() != dims.iter().product::<usize>() || rows.iter().any(|r| r.len() != fields.len()) {
        return Err(format_err(path, "value count does not match header"));
    }
    Ok(Snapshot { dims, time, step, fields, rows })
}

pub fn write_report(dir: &Path, report: &RegularityReport) -> Result<()> {
    fs::write(dir.join("report.txt"), format!("{report}\n"))?;
    fs::write(dir.join("report.csv"), report.to_csv())?;
    Ok(())
}

fn write_values(out: &mut impl Write, label: &str, values: &[f64]) -> Result<()> {
    write!(out, "{label}")?;
    for v in values {
        write!(out, " {v:e}")?;
    }
    writeln!(out)?;
    Ok(())
}

fn write_torus(out: &mut impl Write, name: &str, f: &TorusField) -> Result<()> {
    for c in 0..3 {
        write_values(out, &format!("{name}{c}"), f.component(c))?;
    }
    Ok(())
}

/// Stores a trajectory below `dir/trajectory` (one file per time level).
pub fn write_trajectory(dir: &Path, traj: &Trajectory, delta: f64) -> Result<()> {
    let tdir = dir.join("trajectory");
    fs::create_dir_all(&tdir)?;
    let p = &traj.params;
    let g = traj.grid;
    fs::write(
        tdir.join("meta.txt"),
        format!(
            "nx = {}\nny = {}\nnz = {}\nsteps = {}\nlevels = {}\ndt = {:e}\nnu = {:e}\ngamma = {:e}\ns = {:e}\ndelta = {:e}\nsolver_tol = {:e}\nmax_iters = {}\n",
            g.torus.nx,
            g.torus.ny,
            g.nz,
            traj.steps,
            traj.u.len(),
            traj.dt,
            p.nu,
            p.gamma,
            p.s,
            delta,
            p.tol,
            p.max_iters
        ),
    )?;
    for n in 0..traj.u.len() {
        let mut out = BufWriter::new(File::create(tdir.join(format!("level_{n:05}.txt")))?);
        for c in 0..3 {
            write_values(&mut out, &format!("u{c}"), traj.u[n].comp(c))?;
        }
        write_torus(&mut out, "eta", &traj.eta[n])?;
        write_torus(&mut out, "v", &traj.v[n])?;
        if n > 0 {
            write_torus(&mut out, "vh", &traj.v_half[n - 1])?;
        }
        out.flush()?;
    }
    Ok(())
}

/// Trajectory plus the `δ` it was run with.
pub fn read_trajectory(dir: &Path) -> Result<(Trajectory, f64)> {
    let tdir = dir.join("trajectory");
    let meta_path = tdir.join("meta.txt");
    let meta = fs::read_to_string(&meta_path)?;
    let get = |key: &str| -> Result<f64> {
        meta.lines()
            .filter_map(|l| l.split_once('='))
            .find(|(k, _)| k.trim() == key)
            .and_then(|(_, v)| v.trim().parse::<f64>().ok())
            .ok_or_else(|| format_err(&meta_path, format!("missing or malformed `{key}`")))
    };
    let grid = ChannelGrid::new(get("nx")? as usize, get("ny")? as usize, get("nz")? as usize);
    let levels = get("levels")? as usize;
    let params = FluidParams::new(get("nu")?, get("gamma")?, get("s")?, get("dt")?, get("solver_tol")?, get("max_iters")? as usize)?;
    let mut traj = Trajectory {
        grid,
        dt: params.dt,
        steps: get("steps")? as usize,
        params,
        u: Vec::new(),
        eta: Vec::new(),
        v: Vec::new(),
        v_half: Vec::new(),
    };
    for n in 0..levels {
        let path = tdir.join(format!("level_{n:05}.txt"));
        let text = fs::read_to_string(&path)?;
        let mut rows = std::collections::HashMap::new();
        for line in text.lines() {
            let mut parts = line.split_whitespace();
            let Some(label) = parts.next() else { continue };
            let vals = parts
                .map(|p| p.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|_| format_err(&path, format!("bad number in row `{label}`")))?;
            rows.insert(label.to_string(), vals);
        }
        let mut take = |label: String| rows.remove(&label).ok_or_else(|| format_err(&path, format!("missing row `{label}`")));
        let mut data = Vec::with_capacity(3 * grid.len());
        for c in 0..3 {
            data.extend(take(format!("u{c}"))?);
        }
        traj.u.push(ChannelField::from_data(grid, 3, data)?);
        let mut torus = |name: &str| -> Result<TorusField> {
            TorusField::new(grid.torus, [take(format!("{name}0"))?, take(format!("{name}1"))?, take(format!("{name}2"))?])
        };
        traj.eta.push(torus("eta")?);
        traj.v.push(torus("v")?);
        if n > 0 {
            traj.v_half.push(torus("vh")?);
        }
    }
    let delta = get("delta")?;
    Ok((traj, delta))
}
