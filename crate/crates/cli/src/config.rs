//! TOML run configuration.
//!
//! Every section is optional and falls back to the defaults below. Unknown
//! keys are rejected. The file must declare `version = 1`.
//!
//! ```toml
//! version = 1
//!
//! [driver]            # kind = zero | constant | linear | sinusoidal | tabulated
//! kind = "sinusoidal"
//! amplitude = 1.0
//! omega = 1.0
//!
//! [constants]
//! mass = 1.0
//! hbar = 1.0
//! b0 = 0.0
//! c0 = 1.0
//!
//! [grid]              # eigenstates, packets, matrix elements
//! x_min = -40.0
//! x_max = 15.0
//! n = 4096
//!
//! [propagation_grid]  # padded grid for the propagators
//! x_min = -100.0
//! x_max = 50.0
//! n = 8192
//! window = [-40.0, 15.0]
//!
//! [band]
//! k = 1.0
//! delta_k = 0.05
//! n_sub = 32
//! ks = [0.0, 1.0, 2.0]
//!
//! [time]
//! t_max = 2.0
//! steps = 40
//! dt = 1e-3
//! method = "split_operator"   # or "exact_linear"
//! record_every = 500
//!
//! [initial]           # Gaussian launched by `propagate` unless --packet is given
//! x0 = -2.0
//! sigma = 1.0
//! p0 = 0.5
//!
//! [tolerances]        # overrides for the verification checks
//! confinement = 0.99
//!
//! [output]
//! dir = "out"
//! stride = 1
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use lrinv::driving::DrivingFunction;
use lrinv::grid::{SpatialGrid, Window};
use lrinv::invariant::InvariantConstants;
use lrinv::oracle::Method;
use lrinv::packets::KBand;
use lrinv::verify::Tolerances;
use serde::{Deserialize, Serialize};

pub const VERSION: u32 = 1;

/// A configuration problem, tagged with the offending key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: &str, message: impl fmt::Display) -> Self {
        Self {
            path: path.to_string(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    /// Analysis window `[lo, hi]`; defaults to the full range.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    pub taper: f64,
}

impl GridSpec {
    fn span(x_min: f64, x_max: f64, n: usize, window: Option<[f64; 2]>) -> Self {
        Self {
            x_min,
            x_max,
            n,
            window,
            taper: Window::DEFAULT_TAPER,
        }
    }

    pub fn build(&self, path: &str) -> Result<SpatialGrid, ConfigError> {
        let [lo, hi] = self.window.unwrap_or([self.x_min, self.x_max]);
        let window = Window {
            lo,
            hi,
            taper: self.taper,
        };
        SpatialGrid::with_window(self.x_min, self.x_max, self.n, window).map_err(|e| ConfigError::new(path, e))
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::span(-40.0, 15.0, 4096, None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandSpec {
    /// Eigenvalue used by `eigenstate`, `packet` and `phase`.
    pub k: f64,
    pub delta_k: f64,
    pub n_sub: usize,
    /// Band centres used by `verify`.
    pub ks: Vec<f64>,
}

impl Default for BandSpec {
    fn default() -> Self {
        Self {
            k: 1.0,
            delta_k: 0.05,
            n_sub: KBand::DEFAULT_N_SUB,
            ks: vec![0.0, 1.0, 2.0],
        }
    }
}

impl BandSpec {
    pub fn band(&self, k: f64, path: &str) -> Result<KBand, ConfigError> {
        KBand::with_nodes(k - 0.5 * self.delta_k, self.delta_k, self.n_sub).map_err(|e| ConfigError::new(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSpec {
    pub t_max: f64,
    /// Intervals of the output time mesh on `[0, t_max]`.
    pub steps: usize,
    /// Propagator step.
    pub dt: f64,
    pub method: Method,
    pub record_every: usize,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self {
            t_max: 2.0,
            steps: 40,
            dt: 1e-3,
            method: Method::SplitOperator,
            record_every: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSpec {
    pub x0: f64,
    pub sigma: f64,
    pub p0: f64,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            x0: -2.0,
            sigma: 1.0,
            p0: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Write every `stride`-th grid point of spatial profiles.
    pub stride: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub version: u32,
    pub driver: DrivingFunction,
    pub constants: InvariantConstants,
    pub grid: GridSpec,
    pub propagation_grid: GridSpec,
    pub band: BandSpec,
    pub time: TimeSpec,
    pub initial: InitialSpec,
    pub tolerances: Tolerances,
    pub output: OutputSpec,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            version: VERSION,
            driver: DrivingFunction::Zero,
            constants: InvariantConstants::default(),
            grid: GridSpec::default(),
            propagation_grid: GridSpec::span(-100.0, 50.0, 8192, Some([-40.0, 15.0])),
            band: BandSpec::default(),
            time: TimeSpec::default(),
            initial: InitialSpec::default(),
            tolerances: Tolerances::default(),
            output: OutputSpec::default(),
        }
    }
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(path, format!("must be > 0, got {v}")))
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        // check the version before the schema so old files get a clear message
        let raw: toml::Table = toml::from_str(text).map_err(|e| ConfigError::new("", e.message()))?;
        match raw.get("version") {
            None => return Err(ConfigError::new("version", "missing; expected `version = 1`")),
            Some(toml::Value::Integer(v)) if *v == VERSION as i64 => {}
            Some(v) => return Err(ConfigError::new("version", format!("unsupported value {v}, expected {VERSION}"))),
        }
        serde_path_to_error::deserialize(toml::Deserializer::new(text)).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { String::new() } else { path };
            ConfigError::new(&path, e.into_inner().message())
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Mirrors the upstream type invariants, reporting the first failure by key path.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.driver.validate().map_err(|e| ConfigError::new("driver", e))?;
        let c = &self.constants;
        positive("constants.mass", c.mass)?;
        positive("constants.hbar", c.hbar)?;
        positive("constants.c0", c.c0)?;
        if !c.b0.is_finite() {
            return Err(ConfigError::new("constants.b0", "must be finite"));
        }
        self.grid.build("grid")?;
        self.propagation_grid.build("propagation_grid")?;
        positive("band.delta_k", self.band.delta_k)?;
        self.band.band(self.band.k, "band")?;
        if self.band.ks.is_empty() {
            return Err(ConfigError::new("band.ks", "must list at least one eigenvalue"));
        }
        for (i, &k) in self.band.ks.iter().enumerate() {
            self.band.band(k, &format!("band.ks[{i}]"))?;
        }
        let t = &self.time;
        if !(t.t_max.is_finite() && t.t_max >= 0.0) {
            return Err(ConfigError::new("time.t_max", format!("must be finite and >= 0, got {}", t.t_max)));
        }
        if t.steps == 0 {
            return Err(ConfigError::new("time.steps", "must be >= 1"));
        }
        positive("time.dt", t.dt)?;
        if t.record_every == 0 {
            return Err(ConfigError::new("time.record_every", "must be >= 1"));
        }
        positive("initial.sigma", self.initial.sigma)?;
        if self.output.stride == 0 {
            return Err(ConfigError::new("output.stride", "must be >= 1"));
        }
        let tol = serde_json::to_value(self.tolerances).expect("tolerances serialize");
        for (key, v) in tol.as_object().expect("tolerances are a table") {
            positive(&format!("tolerances.{key}"), v.as_f64().unwrap_or(f64::NAN))?;
        }
        if self.tolerances.norm_ratio_lo >= self.tolerances.norm_ratio_hi {
            return Err(ConfigError::new("tolerances.norm_ratio_lo", "must be below norm_ratio_hi"));
        }
        Ok(())
    }

    /// The resolved configuration as `#`-prefixed TOML lines.
    pub fn header(&self, command: &str) -> String {
        let body = toml::to_string(self).expect("config serializes");
        let mut out = format!("# lrinv {} {command}\n", env!("CARGO_PKG_VERSION"));
        for line in body.lines() {
            if line.is_empty() {
                out.push_str("#\n");
            } else {
                out.push_str("# ");
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }
}
