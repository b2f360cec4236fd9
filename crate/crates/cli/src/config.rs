//! Flat `key = value` run configuration.
//!
//! Lines starting with `#` and blank lines are ignored; trailing `# ...`
//! comments are stripped. Every key may also be given on the command line,
//! which overrides the file.

use std::fmt;
use std::path::{Path, PathBuf};

use torus_mhd::diophantine::BackgroundField;
use torus_mhd::integrate::{Preset, Scheme};
use torus_mhd::model::{Params, PressureLaw, Viscosities};

/// Where a bad setting came from.
#[derive(Clone, Debug, PartialEq)]
pub enum Origin {
    File { path: PathBuf, line: usize },
    CommandLine,
    Validation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub origin: Origin,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.origin {
            Origin::File { path, line } => write!(f, "{}:{line}: ", path.display())?,
            Origin::CommandLine => write!(f, "command line: ")?,
            Origin::Validation => {}
        }
        if self.key.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "field '{}': {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        origin: Origin::Validation,
        key: key.to_string(),
        message: message.into(),
    }
}

/// Time step: a fixed value, or a fraction of the stability limit of the
/// initial state, shrunk so that `t_end` is a whole number of steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    Auto { safety: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid_size: usize,
    pub scheme: Scheme,
    pub dt: TimeStep,
    pub cfl_advective: f64,
    pub cfl_viscous: f64,
    pub t_end: f64,
    pub snapshot_every: u64,
    pub project_b_every: u64,
    pub epsilon: f64,
    pub seed: u64,
    pub preset: Preset,
    pub band: i64,
    pub n: [f64; 3],
    pub r: f64,
    /// `None` covers every dealiased mode of the grid.
    pub lattice_radius: Option<i64>,
    pub gamma_ad: f64,
    pub mu: f64,
    pub lambda: f64,
    pub c0: f64,
    pub gamma: f64,
    /// `None` means `{0, 3, r+4, ceil(4r+7)}`.
    pub norm_orders: Option<Vec<f64>>,
    pub fit_t0: f64,
    /// `None` means `t_end`.
    pub fit_t1: Option<f64>,
    pub out_dir: PathBuf,
    pub csv_name: String,
    pub snapshots: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid_size: 32,
            scheme: Scheme::default(),
            dt: TimeStep::Auto { safety: 0.95 },
            cfl_advective: 0.4,
            cfl_viscous: 0.4,
            t_end: 50.0,
            snapshot_every: 250,
            project_b_every: 1,
            epsilon: 1e-2,
            seed: 1,
            preset: Preset::default(),
            band: 1,
            n: [1.0, 2f64.sqrt(), 3f64.sqrt()],
            r: 3.0,
            lattice_radius: None,
            gamma_ad: 2.0,
            mu: 0.1,
            lambda: 0.0,
            c0: 0.5,
            gamma: 32.0,
            norm_orders: None,
            fit_t0: 5.0,
            fit_t1: None,
            out_dir: PathBuf::from("out"),
            csv_name: "diagnostics.csv".into(),
            snapshots: true,
        }
    }
}

/// Documented keys with a one-line description, in file order.
pub const KEYS: &[(&str, &str)] = &[
    ("grid_size", "points per axis (even, ≥ 4)"),
    ("scheme", "rk4_if, rk4_explicit or imex_cn"),
    ("dt", "time step, or 'auto'"),
    ("dt_safety", "fraction of the stability limit used by dt = auto"),
    ("cfl_advective", "advective CFL number"),
    ("cfl_viscous", "viscous CFL number (rk4_explicit)"),
    ("t_end", "final time"),
    ("snapshot_every", "steps between snapshots and CSV rows"),
    ("project_b_every", "steps between projections of B"),
    ("epsilon", "initial H³ amplitude"),
    ("seed", "random seed"),
    ("preset", "random, shear, alfven, resonant or steady"),
    ("band", "largest |k_i| of the random and resonant presets"),
    ("n", "background field, three comma-separated reals"),
    ("r", "Diophantine exponent (> 2)"),
    ("lattice_radius", "certification radius K, or 'auto'"),
    ("gamma_ad", "adiabatic exponent of P(ρ) = ρ^γ/γ"),
    ("mu", "shear viscosity μ"),
    ("lambda", "bulk viscosity λ"),
    ("c0", "density floor: 1 + a must stay above c0/2"),
    ("gamma", "weight γ of the Lyapunov functional"),
    ("norm_orders", "comma-separated Sobolev orders, or 'auto'"),
    ("fit_t0", "start of the decay-fit window"),
    ("fit_t1", "end of the decay-fit window, or 'auto' for t_end"),
    ("out_dir", "output directory"),
    ("csv_name", "diagnostics file name inside out_dir"),
    ("snapshots", "write snapshot files (true/false)"),
];

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v
        .parse()
        .map_err(|_| invalid(key, format!("expected a number, got '{v}'")))?;
    if !x.is_finite() {
        return Err(invalid(key, format!("expected a finite number, got '{v}'")));
    }
    Ok(x)
}

fn parse_int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| invalid(key, format!("expected a nonnegative integer, got '{v}'")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').map(|p| parse_f64(key, p.trim())).collect()
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "grid_size" => self.grid_size = parse_int(key, v)?,
            "scheme" => self.scheme = v.parse().map_err(|e: String| invalid(key, e))?,
            "dt" => {
                self.dt = if v == "auto" {
                    TimeStep::Auto {
                        safety: match self.dt {
                            TimeStep::Auto { safety } => safety,
                            TimeStep::Fixed(_) => 0.95,
                        },
                    }
                } else {
                    TimeStep::Fixed(parse_f64(key, v)?)
                }
            }
            "dt_safety" => {
                let safety = parse_f64(key, v)?;
                if let TimeStep::Auto { .. } = self.dt {
                    self.dt = TimeStep::Auto { safety };
                }
            }
            "cfl_advective" => self.cfl_advective = parse_f64(key, v)?,
            "cfl_viscous" => self.cfl_viscous = parse_f64(key, v)?,
            "t_end" => self.t_end = parse_f64(key, v)?,
            "snapshot_every" => self.snapshot_every = parse_int(key, v)?,
            "project_b_every" => self.project_b_every = parse_int(key, v)?,
            "epsilon" => self.epsilon = parse_f64(key, v)?,
            "seed" => self.seed = parse_int(key, v)?,
            "preset" => self.preset = v.parse().map_err(|e: String| invalid(key, e))?,
            "band" => self.band = parse_int(key, v)?,
            "n" => {
                let xs = parse_list(key, v)?;
                self.n = xs
                    .try_into()
                    .map_err(|xs: Vec<f64>| invalid(key, format!("expected 3 components, got {}", xs.len())))?;
            }
            "r" => self.r = parse_f64(key, v)?,
            "lattice_radius" => {
                self.lattice_radius = if v == "auto" { None } else { Some(parse_int(key, v)?) }
            }
            "gamma_ad" => self.gamma_ad = parse_f64(key, v)?,
            "mu" => self.mu = parse_f64(key, v)?,
            "lambda" => self.lambda = parse_f64(key, v)?,
            "c0" => self.c0 = parse_f64(key, v)?,
            "gamma" => self.gamma = parse_f64(key, v)?,
            "norm_orders" => self.norm_orders = if v == "auto" { None } else { Some(parse_list(key, v)?) },
            "fit_t0" => self.fit_t0 = parse_f64(key, v)?,
            "fit_t1" => self.fit_t1 = if v == "auto" { None } else { Some(parse_f64(key, v)?) },
            "out_dir" => self.out_dir = PathBuf::from(v),
            "csv_name" => self.csv_name = v.to_string(),
            "snapshots" => {
                self.snapshots = v
                    .parse()
                    .map_err(|_| invalid(key, format!("expected true or false, got '{v}'")))?
            }
            _ => return Err(invalid(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies the `key = value` lines of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<(), ConfigError> {
        let mut seen: Vec<(String, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let at = |e: ConfigError| ConfigError {
                origin: Origin::File {
                    path: path.to_path_buf(),
                    line,
                },
                ..e
            };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| at(invalid("", format!("expected 'key = value', got '{content}'"))))?;
            let key = key.trim();
            if let Some((_, first)) = seen.iter().find(|(k, _)| k == key) {
                return Err(at(invalid(key, format!("duplicate key (first set on line {first})"))));
            }
            self.set(key, value).map_err(at)?;
            seen.push((key.to_string(), line));
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            origin: Origin::File {
                path: path.to_path_buf(),
                line: 0,
            },
            key: String::new(),
            message: format!("cannot read config: {e}"),
        })?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    /// Applies command-line overrides.
    pub fn apply_overrides<'a>(
        &mut self,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<(), ConfigError> {
        for (k, v) in pairs {
            self.set(k, v).map_err(|e| ConfigError {
                origin: Origin::CommandLine,
                ..e
            })?;
        }
        Ok(())
    }

    /// Checks the cross-field constraints and builds the physical parameters.
    pub fn validate(&self) -> Result<Params, ConfigError> {
        if self.grid_size < 4 || self.grid_size % 2 != 0 || self.grid_size > 512 {
            return Err(invalid("grid_size", format!("must be even and in 4..=512, got {}", self.grid_size)));
        }
        if !(self.r > 2.0) {
            return Err(invalid("r", format!("must exceed 2, got {}", self.r)));
        }
        if self.t_end < 0.0 {
            return Err(invalid("t_end", "must be nonnegative"));
        }
        match self.dt {
            TimeStep::Fixed(dt) if !(dt > 0.0) => return Err(invalid("dt", "must be positive")),
            TimeStep::Auto { safety } if !(safety > 0.0 && safety <= 1.0) => {
                return Err(invalid("dt_safety", "must lie in (0, 1]"))
            }
            _ => {}
        }
        for (key, v) in [("cfl_advective", self.cfl_advective), ("cfl_viscous", self.cfl_viscous)] {
            if !(v > 0.0) {
                return Err(invalid(key, "must be positive"));
            }
        }
        if self.snapshot_every == 0 {
            return Err(invalid("snapshot_every", "must be at least 1"));
        }
        if self.project_b_every == 0 {
            return Err(invalid("project_b_every", "must be at least 1"));
        }
        if self.epsilon < 0.0 {
            return Err(invalid("epsilon", "must be nonnegative"));
        }
        let keep = ((self.grid_size - 1) / 3) as i64;
        if self.band < 1 || self.band > keep {
            return Err(invalid("band", format!("must lie in 1..={keep} for this grid")));
        }
        if let Some(k) = self.lattice_radius {
            if k < 1 {
                return Err(invalid("lattice_radius", "must be at least 1"));
            }
        }
        if !(self.c0 > 0.0 && self.c0 < 2.0) {
            return Err(invalid("c0", "must lie in (0, 2) so that ρ = 1 is admissible"));
        }
        if !(self.gamma > 0.0) {
            return Err(invalid("gamma", "must be positive"));
        }
        if let Some(orders) = &self.norm_orders {
            if orders.is_empty() || orders.iter().any(|&s| s < 0.0) {
                return Err(invalid("norm_orders", "need at least one nonnegative order"));
            }
        }
        if self.csv_name.is_empty() || self.csv_name.contains('/') {
            return Err(invalid("csv_name", "must be a plain file name"));
        }
        let pressure = PressureLaw::new(self.gamma_ad).map_err(|e| invalid("gamma_ad", e.to_string()))?;
        let viscosities = Viscosities::new(self.mu, self.lambda).map_err(|e| invalid("mu", e.to_string()))?;
        Ok(Params {
            n: self.n,
            pressure,
            viscosities,
            c0: self.c0,
        })
    }

    pub fn lattice_radius(&self) -> i64 {
        self.lattice_radius
            .unwrap_or_else(|| BackgroundField::covering_radius(self.grid_size))
    }

    pub fn norm_orders(&self) -> Vec<f64> {
        self.norm_orders
            .clone()
            .unwrap_or_else(|| torus_mhd::diagnostics::DiagnosticsConfig::default_orders(self.r))
    }

    pub fn fit_window(&self) -> (f64, f64) {
        (self.fit_t0, self.fit_t1.unwrap_or(self.t_end))
    }

    /// The configuration as a file that [`RunConfig::from_file`] reads back.
    pub fn to_text(&self) -> String {
        let list = |xs: &[f64]| xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        line("grid_size", self.grid_size.to_string());
        line("scheme", self.scheme.name().into());
        match self.dt {
            TimeStep::Fixed(dt) => line("dt", format!("{dt:?}")),
            TimeStep::Auto { safety } => {
                line("dt", "auto".into());
                line("dt_safety", format!("{safety:?}"));
            }
        }
        line("cfl_advective", format!("{:?}", self.cfl_advective));
        line("cfl_viscous", format!("{:?}", self.cfl_viscous));
        line("t_end", format!("{:?}", self.t_end));
        line("snapshot_every", self.snapshot_every.to_string());
        line("project_b_every", self.project_b_every.to_string());
        line("epsilon", format!("{:?}", self.epsilon));
        line("seed", self.seed.to_string());
        line("preset", self.preset.name().into());
        line("band", self.band.to_string());
        line("n", list(&self.n));
        line("r", format!("{:?}", self.r));
        line("lattice_radius", self.lattice_radius.map_or("auto".into(), |k| k.to_string()));
        line("gamma_ad", format!("{:?}", self.gamma_ad));
        line("mu", format!("{:?}", self.mu));
        line("lambda", format!("{:?}", self.lambda));
        line("c0", format!("{:?}", self.c0));
        line("gamma", format!("{:?}", self.gamma));
        line("norm_orders", self.norm_orders.as_deref().map_or("auto".into(), list));
        line("fit_t0", format!("{:?}", self.fit_t0));
        line("fit_t1", self.fit_t1.map_or("auto".into(), |t| format!("{t:?}")));
        line("out_dir", self.out_dir.display().to_string());
        line("csv_name", self.csv_name.clone());
        line("snapshots", self.snapshots.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = RunConfig::default();
        let p = cfg.validate().unwrap();
        assert_eq!(p.viscosities.nu(), 0.2);
        assert_eq!(cfg.norm_orders(), vec![0.0, 3.0, 7.0, 19.0]);
        assert_eq!(cfg.lattice_radius(), 18);
        assert_eq!(cfg.fit_window(), (5.0, 50.0));
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.apply_overrides([("dt", "0.002"), ("n", "1, 0, 0"), ("norm_orders", "0,1.5"), ("snapshots", "false")])
            .unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_text(), Path::new("x.conf")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn errors_name_line_and_field() {
        let mut cfg = RunConfig::default();
        let text = "# comment\ngrid_size = 16\n\nmu = fast  # bad\n";
        let err = cfg.apply_text(text, Path::new("run.conf")).unwrap_err();
        assert_eq!(
            err.origin,
            Origin::File {
                path: "run.conf".into(),
                line: 4
            }
        );
        assert_eq!(err.key, "mu");
        assert!(err.to_string().starts_with("run.conf:4: field 'mu'"), "{err}");

        let err = RunConfig::default().apply_text("bogus = 1", Path::new("a")).unwrap_err();
        assert!(err.to_string().contains("unknown key"));
        let err = RunConfig::default().apply_text("t_end 5", Path::new("a")).unwrap_err();
        assert!(err.to_string().contains("key = value"));
        let err = RunConfig::default().apply_text("r = 3\nr = 4", Path::new("a")).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
        let err = RunConfig::default().apply_overrides([("n", "1,2")]).unwrap_err();
        assert_eq!(err.origin, Origin::CommandLine);
    }

    #[test]
    fn validation_rejects_bad_physics() {
        for (k, v) in [("mu", "0"), ("r", "2"), ("gamma_ad", "1"), ("grid_size", "15"), ("band", "11"), ("lambda", "-0.3")] {
            let mut cfg = RunConfig::default();
            cfg.set(k, v).unwrap();
            let err = cfg.validate().unwrap_err();
            assert_eq!(err.origin, Origin::Validation, "{k}");
        }
    }
}
