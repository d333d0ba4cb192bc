//! Plain-text run configuration: `key = value` lines, `#` comments.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Alpha {
    /// Half of the minimum Jacobian of the initial map.
    Auto,
    Value(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Named initial-data presets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialData {
    Zero,
    /// `η₀ = amplitude · cos(kx·x + ky·y) e_component`, fluid and plate at rest.
    SingleMode {
        kx: i64,
        ky: i64,
        amplitude: f64,
        component: Axis,
    },
    /// Random normal displacement and velocity on modes with `|k| ≤ kmax`.
    RandomBandlimited { seed: u64, kmax: u32, amplitude: f64 },
    /// Plate velocity `v_z cos(x) e_z` with the fluid moving along.
    ContactDrive { vz: f64 },
}

impl fmt::Display for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            InitialData::Zero => write!(f, "zero"),
            InitialData::SingleMode {
                kx,
                ky,
                amplitude,
                component,
            } => {
                let c = match component {
                    Axis::X => "x",
                    Axis::Y => "y",
                    Axis::Z => "z",
                };
                write!(f, "single_mode({kx}, {ky}, {amplitude:?}, {c})")
            }
            InitialData::RandomBandlimited { seed, kmax, amplitude } => {
                write!(f, "random_bandlimited({seed}, {kmax}, {amplitude:?})")
            }
            InitialData::ContactDrive { vz } => write!(f, "contact_drive({vz:?})"),
        }
    }
}

impl FromStr for InitialData {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let text = text.trim();
        let (name, args) = match text.find('(') {
            Some(open) => {
                let Some(inner) = text[open + 1..].strip_suffix(')') else {
                    return Err(format!("unbalanced parentheses in `{text}`"));
                };
                let args: Vec<&str> = inner.split(',').map(str::trim).filter(|a| !a.is_empty()).collect();
                (text[..open].trim(), args)
            }
            None => (text, Vec::new()),
        };
        let want = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(format!("`{name}` takes {n} arguments, got {}", args.len()))
            }
        };
        fn num<T: FromStr>(s: &str, what: &str) -> Result<T, String> {
            s.parse().map_err(|_| format!("cannot parse {what} from `{s}`"))
        }
        match name {
            "zero" => {
                want(0)?;
                Ok(InitialData::Zero)
            }
            "single_mode" => {
                want(4)?;
                let component = match args[3] {
                    "x" => Axis::X,
                    "y" => Axis::Y,
                    "z" => Axis::Z,
                    other => return Err(format!("component must be x, y or z, got `{other}`")),
                };
                Ok(InitialData::SingleMode {
                    kx: num(args[0], "kx")?,
                    ky: num(args[1], "ky")?,
                    amplitude: num(args[2], "amplitude")?,
                    component,
                })
            }
            "random_bandlimited" => {
                want(3)?;
                Ok(InitialData::RandomBandlimited {
                    seed: num(args[0], "seed")?,
                    kmax: num(args[1], "kmax")?,
                    amplitude: num(args[2], "amplitude")?,
                })
            }
            "contact_drive" => {
                want(1)?;
                Ok(InitialData::ContactDrive {
                    vz: num(args[0], "v_z")?,
                })
            }
            other => Err(format!(
                "unknown preset `{other}` (expected zero, single_mode, random_bandlimited or contact_drive)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub steps: usize,
    pub horizon: f64,
    pub nu: f64,
    pub gamma: f64,
    pub s: f64,
    pub delta: f64,
    pub alpha: Alpha,
    pub initial: InitialData,
    pub output_dir: PathBuf,
    pub snapshot_stride: usize,
    pub solver_tol: f64,
    pub max_iters: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            nx: 16,
            ny: 16,
            nz: 16,
            steps: 64,
            horizon: 1.0,
            nu: 1.0,
            gamma: 1.0,
            s: 0.5,
            delta: 0.25,
            alpha: Alpha::Auto,
            initial: InitialData::Zero,
            output_dir: PathBuf::from("out"),
            snapshot_stride: 0,
            solver_tol: 1e-10,
            max_iters: 500,
        }
    }
}

impl SimConfig {
    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// All range violations, in key order.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (key, n, min) in [("nx", self.nx, 2), ("ny", self.ny, 2), ("nz", self.nz, 3), ("steps", self.steps, 1)] {
            if n < min {
                v.push(format!("{key} must be at least {min}, got {n}"));
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            v.push(format!("T must be positive, got {}", self.horizon));
        }
        if !(self.nu > 0.0) {
            v.push(format!("nu must be positive, got {}", self.nu));
        }
        if !(self.gamma > 0.0) {
            v.push(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.s > 0.0 && self.s <= 1.0) {
            v.push(format!("s must lie in (0, 1], got {}", self.s));
        }
        if !(self.delta > 0.0 && self.delta < self.s) {
            v.push(format!("delta must lie in (0, s) = (0, {}), got {}", self.s, self.delta));
        }
        if let Alpha::Value(a) = self.alpha {
            if !(a > 0.0) {
                v.push(format!("alpha must be positive, got {a}"));
            }
        }
        if !(self.solver_tol > 0.0 && self.solver_tol <= 1e-4) {
            v.push(format!("solver_tol must lie in (0, 1e-4], got {}", self.solver_tol));
        }
        if self.max_iters == 0 {
            v.push("max_iters must be positive".into());
        }
        match self.initial {
            InitialData::SingleMode { kx, ky, amplitude, .. } => {
                if kx.unsigned_abs() as usize > self.nx / 2 || ky.unsigned_abs() as usize > self.ny / 2 {
                    v.push(format!("single_mode wavevector ({kx}, {ky}) is not resolved by the grid"));
                }
                if !amplitude.is_finite() {
                    v.push("single_mode amplitude must be finite".into());
                }
            }
            InitialData::RandomBandlimited { kmax, amplitude, .. } => {
                if kmax == 0 {
                    v.push("random_bandlimited kmax must be positive".into());
                }
                if !amplitude.is_finite() {
                    v.push("random_bandlimited amplitude must be finite".into());
                }
            }
            InitialData::ContactDrive { vz } if !vz.is_finite() => {
                v.push("contact_drive v_z must be finite".into());
            }
            _ => {}
        }
        v
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let errors = self.violations();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { errors })
        }
    }
}

impl fmt::Display for SimConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nx = {}", self.nx)?;
        writeln!(f, "ny = {}", self.ny)?;
        writeln!(f, "nz = {}", self.nz)?;
        writeln!(f, "steps = {}", self.steps)?;
        writeln!(f, "T = {:?}", self.horizon)?;
        writeln!(f, "nu = {:?}", self.nu)?;
        writeln!(f, "gamma = {:?}", self.gamma)?;
        writeln!(f, "s = {:?}", self.s)?;
        writeln!(f, "delta = {:?}", self.delta)?;
        match self.alpha {
            Alpha::Auto => writeln!(f, "alpha = auto")?,
            Alpha::Value(a) => writeln!(f, "alpha = {a:?}")?,
        }
        writeln!(f, "initial = {}", self.initial)?;
        writeln!(f, "output_dir = {}", self.output_dir.display())?;
        writeln!(f, "snapshot_stride = {}", self.snapshot_stride)?;
        writeln!(f, "solver_tol = {:?}", self.solver_tol)?;
        writeln!(f, "max_iters = {}", self.max_iters)
    }
}

/// Every problem found in a configuration file.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("invalid configuration:\n  {}", .errors.join("\n  "))]
pub struct ConfigError {
    pub errors: Vec<String>,
}

const KEYS: [&str; 15] = [
    "nx",
    "ny",
    "nz",
    "steps",
    "T",
    "nu",
    "gamma",
    "s",
    "delta",
    "alpha",
    "initial",
    "output_dir",
    "snapshot_stride",
    "solver_tol",
    "max_iters",
];

/// Parses and validates a configuration; unspecified keys take defaults and
/// `delta` defaults to `s/2`.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let mut errors = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut cfg = SimConfig::default();
    let mut delta_given = false;

    for (lineno, raw) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {lineno}: expected `key = value`, got `{line}`"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(&key) = KEYS.iter().find(|k| **k == key) else {
            errors.push(format!("line {lineno}: unknown key `{key}`"));
            continue;
        };
        if let Some(first) = seen.insert(key, lineno) {
            errors.push(format!("duplicate key `{key}` on lines {first} and {lineno}"));
            continue;
        }
        let bad = |what: &str| format!("line {lineno}: cannot parse {key} = `{value}` as {what}");
        macro_rules! set {
            ($field:expr, $ty:ty, $what:expr) => {
                match value.parse::<$ty>() {
                    Ok(v) => $field = v,
                    Err(_) => errors.push(bad($what)),
                }
            };
        }
        match key {
            "nx" => set!(cfg.nx, usize, "an integer"),
            "ny" => set!(cfg.ny, usize, "an integer"),
            "nz" => set!(cfg.nz, usize, "an integer"),
            "steps" => set!(cfg.steps, usize, "an integer"),
            "T" => set!(cfg.horizon, f64, "a number"),
            "nu" => set!(cfg.nu, f64, "a number"),
            "gamma" => set!(cfg.gamma, f64, "a number"),
            "s" => set!(cfg.s, f64, "a number"),
            "delta" => {
                delta_given = true;
                set!(cfg.delta, f64, "a number")
            }
            "alpha" => {
                if value == "auto" {
                    cfg.alpha = Alpha::Auto;
                } else {
                    match value.parse::<f64>() {
                        Ok(a) => cfg.alpha = Alpha::Value(a),
                        Err(_) => errors.push(bad("`auto` or a number")),
                    }
                }
            }
            "initial" => match value.parse::<InitialData>() {
                Ok(init) => cfg.initial = init,
                Err(e) => errors.push(format!("line {lineno}: {e}")),
            },
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            "snapshot_stride" => set!(cfg.snapshot_stride, usize, "an integer"),
            "solver_tol" => set!(cfg.solver_tol, f64, "a number"),
            "max_iters" => set!(cfg.max_iters, usize, "an integer"),
            _ => unreachable!("key list and match arms agree"),
        }
    }
    if !delta_given {
        cfg.delta = cfg.s / 2.0;
    }
    errors.extend(cfg.violations());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError { errors })
    }
}
