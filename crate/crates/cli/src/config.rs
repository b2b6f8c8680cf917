//! Run configuration: a flat `key=value` file overridden by command-line
//! flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use parafd::airchem::ChemistryMode;
use parafd::model::{standard_mu, BoundaryMode};
use parafd::{CompactVariant, SchemeKind, SolverConfig};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Manufactured,
    AirPollution,
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "manufactured" => Ok(Self::Manufactured),
            "airpollution" => Ok(Self::AirPollution),
            other => Err(format!("unknown problem `{other}` (expected manufactured|airpollution)")),
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Manufactured => "manufactured",
            Self::AirPollution => "airpollution",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReMode {
    None,
    Space,
    SpaceTime,
}

impl FromStr for ReMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Self::None),
            "space" => Ok(Self::Space),
            "spacetime" => Ok(Self::SpaceTime),
            other => Err(format!("unknown extrapolation mode `{other}` (expected none|space|spacetime)")),
        }
    }
}

impl fmt::Display for ReMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Space => "space",
            Self::SpaceTime => "spacetime",
        })
    }
}

/// Wind speed `mu` of the rotational field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuMode {
    /// `2 pi / (60 T)`.
    Standard,
    /// `2 pi / X`.
    Fast,
    Custom(f64),
}

impl MuMode {
    pub fn value(&self, x_len: f64, t_final: f64) -> f64 {
        match *self {
            Self::Standard => standard_mu(t_final),
            Self::Fast => 2.0 * std::f64::consts::PI / x_len,
            Self::Custom(mu) => mu,
        }
    }
}

impl FromStr for MuMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "standard" => Ok(Self::Standard),
            "fast" => Ok(Self::Fast),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Self::Custom)
                .ok_or_else(|| format!("expected standard|fast|<real>, got `{other}`")),
        }
    }
}

impl fmt::Display for MuMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Standard => f.write_str("standard"),
            Self::Fast => f.write_str("fast"),
            Self::Custom(v) => write!(f, "{v:e}"),
        }
    }
}

/// Node at which point values are recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    /// `(X/2, Y/2)`.
    Center,
    /// `(X/6, Y/6)`.
    Sixth,
    /// Mesh indices on the coarsest mesh of the study.
    Node(usize, usize),
}

impl FromStr for Probe {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "center" => Ok(Self::Center),
            "sixth" => Ok(Self::Sixth),
            other => {
                let parts: Vec<&str> = other.split(',').map(str::trim).collect();
                match parts.as_slice() {
                    [i, j] => match (i.parse(), j.parse()) {
                        (Ok(i), Ok(j)) => Ok(Self::Node(i, j)),
                        _ => Err(format!("expected center|sixth|i,j, got `{other}`")),
                    },
                    _ => Err(format!("expected center|sixth|i,j, got `{other}`")),
                }
            }
        }
    }
}

impl fmt::Display for Probe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Center => f.write_str("center"),
            Self::Sixth => f.write_str("sixth"),
            Self::Node(i, j) => write!(f, "{i},{j}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mesh {
    pub mx: usize,
    pub my: usize,
    pub n: usize,
}

impl FromStr for Mesh {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.trim().split('x').collect();
        let bad = || format!("expected MxxMyxN such as 16x16x64, got `{s}`");
        match parts.as_slice() {
            [mx, my, n] => {
                let mx: usize = mx.parse().map_err(|_| bad())?;
                let my: usize = my.parse().map_err(|_| bad())?;
                let n: usize = n.parse().map_err(|_| bad())?;
                if mx < 2 || my < 2 || n < 1 {
                    return Err(format!("mesh `{s}` needs at least 2 intervals in space and 1 in time"));
                }
                Ok(Self { mx, my, n })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Mesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.mx, self.my, self.n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub scheme: SchemeKind,
    pub theta: f64,
    pub meshes: Vec<Mesh>,
    pub re_mode: ReMode,
    pub mu: MuMode,
    pub cos_theta: f64,
    pub chemistry: ChemistryMode,
    pub boundary: BoundaryMode,
    pub compact: CompactVariant,
    pub probe: Probe,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub krylov_tol: f64,
    pub krylov_ell: usize,
    pub max_cycles: usize,
    pub out: PathBuf,
    pub deterministic: bool,
    pub dump_fields: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        Self {
            problem: ProblemKind::Manufactured,
            scheme: SchemeKind::Cds,
            theta: solver.theta,
            meshes: Vec::new(),
            re_mode: ReMode::None,
            mu: MuMode::Standard,
            cos_theta: 1.0,
            chemistry: ChemistryMode::AsPrinted,
            boundary: BoundaryMode::Periodic,
            compact: solver.compact,
            probe: Probe::Center,
            newton_tol: solver.newton_tol,
            max_newton: solver.max_newton,
            krylov_tol: solver.krylov.tol,
            krylov_ell: solver.krylov.ell,
            max_cycles: solver.krylov.max_cycles,
            out: PathBuf::from("out"),
            deterministic: false,
            dump_fields: true,
        }
    }
}

fn parse_field<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| CliError::config(key, e.to_string()))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(CliError::config(key, format!("expected true|false, got `{other}`"))),
    }
}

impl RunConfig {
    /// Sets one knob from its textual form. `mesh` accepts a comma-separated
    /// list and appends to the current list.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "problem" => self.problem = parse_field(key, value)?,
            "scheme" => self.scheme = parse_field(key, value)?,
            "theta" => self.theta = parse_field(key, value)?,
            "mesh" => {
                for m in value.split(',').filter(|m| !m.trim().is_empty()) {
                    self.meshes.push(parse_field(key, m)?);
                }
            }
            "re" => self.re_mode = parse_field(key, value)?,
            "mu" => self.mu = parse_field(key, value)?,
            "cos_theta" => self.cos_theta = parse_field(key, value)?,
            "chemistry" => self.chemistry = parse_field(key, value)?,
            "boundary" => self.boundary = parse_field(key, value)?,
            "compact" => self.compact = parse_field(key, value)?,
            "probe" => self.probe = parse_field(key, value)?,
            "newton_tol" => self.newton_tol = parse_field(key, value)?,
            "max_newton" => self.max_newton = parse_field(key, value)?,
            "krylov_tol" => self.krylov_tol = parse_field(key, value)?,
            "krylov_ell" => self.krylov_ell = parse_field(key, value)?,
            "max_cycles" => self.max_cycles = parse_field(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "deterministic" => self.deterministic = parse_bool(key, value)?,
            "dump_fields" => self.dump_fields = parse_bool(key, value)?,
            other => return Err(CliError::config(other, "unknown configuration key")),
        }
        Ok(())
    }

    /// Applies a `key=value` text. Blank lines and lines starting with `#`
    /// are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config("config", format!("line {} is not of the form key=value: `{line}`", lineno + 1))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.meshes.is_empty() {
            return Err(CliError::config("mesh", "mesh list is empty"));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(CliError::config("theta", format!("{} is outside [0, 1]", self.theta)));
        }
        if !(self.cos_theta > 0.0 && self.cos_theta <= 1.0) {
            return Err(CliError::config("cos_theta", format!("{} is outside (0, 1]", self.cos_theta)));
        }
        for (key, v) in [("newton_tol", self.newton_tol), ("krylov_tol", self.krylov_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::config(key, format!("{v} must be positive")));
            }
        }
        if self.max_newton == 0 || self.max_cycles == 0 || self.krylov_ell == 0 {
            return Err(CliError::config("max_newton", "iteration limits must be positive"));
        }
        if let MuMode::Custom(mu) = self.mu {
            if mu < 0.0 {
                return Err(CliError::config("mu", format!("{mu} must be nonnegative")));
            }
        }
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut cfg = SolverConfig {
            theta: self.theta,
            newton_tol: self.newton_tol,
            max_newton: self.max_newton,
            compact: self.compact,
            ..SolverConfig::default()
        };
        cfg.krylov.tol = self.krylov_tol;
        cfg.krylov.ell = self.krylov_ell;
        cfg.krylov.max_cycles = self.max_cycles;
        cfg
    }

    /// Every knob as `key=value` lines; [`RunConfig::apply_text`] reads them
    /// back.
    pub fn to_text(&self) -> String {
        let scheme = match self.scheme {
            SchemeKind::Cds => "cds",
            SchemeKind::Cfds => "cfds",
        };
        let meshes: Vec<String> = self.meshes.iter().map(Mesh::to_string).collect();
        let mut s = String::new();
        for (k, v) in [
            ("problem", self.problem.to_string()),
            ("scheme", scheme.to_string()),
            ("theta", format!("{:e}", self.theta)),
            ("mesh", meshes.join(",")),
            ("re", self.re_mode.to_string()),
            ("mu", self.mu.to_string()),
            ("cos_theta", format!("{:e}", self.cos_theta)),
            ("chemistry", self.chemistry.to_string()),
            ("boundary", self.boundary.to_string()),
            ("compact", self.compact.to_string()),
            ("probe", self.probe.to_string()),
            ("newton_tol", format!("{:e}", self.newton_tol)),
            ("max_newton", self.max_newton.to_string()),
            ("krylov_tol", format!("{:e}", self.krylov_tol)),
            ("krylov_ell", self.krylov_ell.to_string()),
            ("max_cycles", self.max_cycles.to_string()),
            ("out", self.out.display().to_string()),
            ("deterministic", self.deterministic.to_string()),
            ("dump_fields", self.dump_fields.to_string()),
        ] {
            s.push_str(&format!("{k}={v}\n"));
        }
        s
    }
}
