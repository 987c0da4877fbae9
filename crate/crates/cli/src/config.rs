//! Flat `key = value` run configuration.
//!
//! ```text
//! # 3 dB deterministic teleporter, feed-forward swept
//! squeezing_db = 3
//! feedforward.phi = unity
//! mbnla.gain = 1
//! input.mean_x = 1
//! input.mean_y = 1
//! sweep.axis = phi
//! sweep.start = 0.2
//! sweep.stop = 2.0
//! sweep.steps = 10
//! ```

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use teleportsim::gaussian::db_to_squeezing;
use teleportsim::teleporter::unity_gain_phi_xy;
use teleportsim::{EprSpec, FilterSpec, TeleporterConfig};

use crate::error::CliError;

/// Default filter cutoff in standard deviations of the measured outcomes.
pub const DEFAULT_ALPHA_C: f64 = 6.0;
/// Default squeezing of the Choi-state probe.
pub const DEFAULT_R_CHOI: f64 = teleportsim::channel::DEFAULT_R_CHOI;
/// Monte Carlo sweeps need at least this many trials per step.
pub const MIN_SWEEP_TRIALS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analytic,
    MonteCarlo,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "analytic" => Ok(Mode::Analytic),
            "mc" | "montecarlo" => Ok(Mode::MonteCarlo),
            _ => Err(format!("unknown mode `{s}` (expected analytic or mc)")),
        }
    }
}

/// A feed-forward gain, either fixed or solved for unity gain at each run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phi {
    Unity,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Phi,
    G,
    RDb,
    Efficiency,
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "phi" => Ok(Axis::Phi),
            "g" => Ok(Axis::G),
            "r_db" => Ok(Axis::RDb),
            "efficiency" => Ok(Axis::Efficiency),
            _ => Err(format!(
                "unknown sweep axis `{s}` (expected phi, g, r_db or efficiency)"
            )),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Phi => "phi",
            Axis::G => "g",
            Axis::RDb => "r_db",
            Axis::Efficiency => "efficiency",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepSpec {
    /// Evenly spaced axis values, endpoints included.
    pub fn values(&self) -> Vec<f64> {
        let span = self.stop - self.start;
        (0..self.steps)
            .map(|i| self.start + span * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Squeezing of `[A_x, A_y, B_x, B_y]` in dB.
    pub squeezing_db: [f64; 4],
    pub phi_x: Phi,
    pub phi_y: Phi,
    pub g: f64,
    pub alpha_c: f64,
    pub efficiency: f64,
    pub input_mean: [f64; 2],
    pub input_var: [f64; 2],
    pub mode: Mode,
    pub trials: u64,
    pub seed: u64,
    pub r_choi: f64,
    pub sweep: Option<SweepSpec>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            squeezing_db: [0.0; 4],
            phi_x: Phi::Value(std::f64::consts::SQRT_2),
            phi_y: Phi::Value(std::f64::consts::SQRT_2),
            g: 1.0,
            alpha_c: DEFAULT_ALPHA_C,
            efficiency: 1.0,
            input_mean: [1.0, 1.0],
            input_var: [1.0, 1.0],
            mode: Mode::Analytic,
            trials: 1_000_000,
            seed: 0,
            r_choi: DEFAULT_R_CHOI,
            sweep: None,
            output: None,
        }
    }
}

impl RunConfig {
    /// Teleporter parameters with `unity` feed-forward resolved.
    pub fn teleporter(&self) -> teleportsim::Result<TeleporterConfig> {
        let [ax, ay, bx, by] = self.squeezing_db.map(db_to_squeezing);
        let mut cfg = TeleporterConfig {
            epr: EprSpec {
                r_ax: ax,
                r_ay: ay,
                r_bx: bx,
                r_by: by,
            },
            phi_x: 0.0,
            phi_y: 0.0,
            g: self.g,
            efficiency: self.efficiency,
            input_mean: self.input_mean,
            input_var: self.input_var,
        };
        cfg.validate()?;
        if self.phi_x == Phi::Unity || self.phi_y == Phi::Unity {
            let (px, py) = unity_gain_phi_xy(&cfg)?;
            cfg.phi_x = px;
            cfg.phi_y = py;
        }
        if let Phi::Value(p) = self.phi_x {
            cfg.phi_x = p;
        }
        if let Phi::Value(p) = self.phi_y {
            cfg.phi_y = p;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn filter(&self) -> teleportsim::Result<FilterSpec> {
        FilterSpec::new(self.g, self.alpha_c)
    }

    /// Copy of the configuration with the swept parameter set to `value`.
    pub fn at(&self, axis: Axis, value: f64) -> RunConfig {
        let mut c = self.clone();
        match axis {
            Axis::Phi => {
                c.phi_x = Phi::Value(value);
                c.phi_y = Phi::Value(value);
            }
            Axis::G => c.g = value,
            Axis::RDb => c.squeezing_db = [value; 4],
            Axis::Efficiency => c.efficiency = value,
        }
        c
    }

    /// Checks everything that does not depend on the swept value.
    pub fn validate(&self) -> Result<(), CliError> {
        let config = |msg: String| CliError::Config(msg);
        if self.squeezing_db.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(config("squeezing must be finite and non-negative (dB)".into()));
        }
        if !(self.alpha_c.is_finite() && self.alpha_c > 0.0) {
            return Err(config(format!("mbnla.alpha_c = {} must be positive", self.alpha_c)));
        }
        if !(self.r_choi.is_finite() && self.r_choi > 0.0) {
            return Err(config(format!("choi.r = {} must be positive", self.r_choi)));
        }
        if self.trials == 0 {
            return Err(config("mc.trials must be positive".into()));
        }
        if let Some(s) = &self.sweep {
            if s.steps < 2 {
                return Err(config(format!("sweep.steps = {} must be at least 2", s.steps)));
            }
            if !(s.start.is_finite() && s.stop.is_finite()) {
                return Err(config("sweep range must be finite".into()));
            }
            if self.mode == Mode::MonteCarlo && self.trials < MIN_SWEEP_TRIALS {
                return Err(config(format!(
                    "Monte Carlo sweeps need mc.trials >= {MIN_SWEEP_TRIALS}"
                )));
            }
        }
        Ok(())
    }
}

struct Entry {
    line: usize,
    value: String,
}

const KEYS: &[&str] = &[
    "squeezing_db",
    "epr.ax_db",
    "epr.ay_db",
    "epr.bx_db",
    "epr.by_db",
    "feedforward.phi",
    "feedforward.phi_x",
    "feedforward.phi_y",
    "mbnla.gain",
    "mbnla.alpha_c",
    "efficiency",
    "input.mean_x",
    "input.mean_y",
    "input.var_x",
    "input.var_y",
    "mode",
    "mc.trials",
    "seed",
    "choi.r",
    "sweep.axis",
    "sweep.start",
    "sweep.stop",
    "sweep.steps",
    "output",
];

/// Parses configuration text. `origin` names the source in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig, CliError> {
    let mut entries: HashMap<&str, Entry> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |msg: String| CliError::Parse {
            origin: origin.to_string(),
            line,
            msg,
        };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let known = KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| err(format!("unknown key `{key}`")))?;
        if value.is_empty() {
            return Err(err(format!("missing value for `{key}`")));
        }
        if let Some(prev) = entries.insert(
            known,
            Entry {
                line,
                value: value.to_string(),
            },
        ) {
            return Err(err(format!("duplicate key `{key}` (first set on line {})", prev.line)));
        }
    }

    let get = |key: &str| entries.get(key);
    fn typed<T: FromStr>(origin: &str, key: &str, e: &Entry) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        e.value.parse::<T>().map_err(|err| CliError::Parse {
            origin: origin.to_string(),
            line: e.line,
            msg: format!("bad value for `{key}`: {err}"),
        })
    }
    let num =
        |key: &str| -> Result<Option<f64>, CliError> { get(key).map(|e| typed::<f64>(origin, key, e)).transpose() };
    let phi = |key: &str| -> Result<Option<Phi>, CliError> {
        match get(key) {
            None => Ok(None),
            Some(e) if e.value == "unity" => Ok(Some(Phi::Unity)),
            Some(e) => Ok(Some(Phi::Value(typed(origin, key, e)?))),
        }
    };

    let mut c = RunConfig::default();
    if let Some(db) = num("squeezing_db")? {
        c.squeezing_db = [db; 4];
    }
    for (k, key) in ["epr.ax_db", "epr.ay_db", "epr.bx_db", "epr.by_db"].iter().enumerate() {
        if let Some(db) = num(key)? {
            c.squeezing_db[k] = db;
        }
    }
    if let Some(p) = phi("feedforward.phi")? {
        c.phi_x = p;
        c.phi_y = p;
    }
    if let Some(p) = phi("feedforward.phi_x")? {
        c.phi_x = p;
    }
    if let Some(p) = phi("feedforward.phi_y")? {
        c.phi_y = p;
    }
    c.g = num("mbnla.gain")?.unwrap_or(c.g);
    c.alpha_c = num("mbnla.alpha_c")?.unwrap_or(c.alpha_c);
    c.efficiency = num("efficiency")?.unwrap_or(c.efficiency);
    c.input_mean = [
        num("input.mean_x")?.unwrap_or(c.input_mean[0]),
        num("input.mean_y")?.unwrap_or(c.input_mean[1]),
    ];
    c.input_var = [
        num("input.var_x")?.unwrap_or(c.input_var[0]),
        num("input.var_y")?.unwrap_or(c.input_var[1]),
    ];
    if let Some(e) = get("mode") {
        c.mode = typed(origin, "mode", e)?;
    }
    if let Some(e) = get("mc.trials") {
        c.trials = typed(origin, "mc.trials", e)?;
    }
    if let Some(e) = get("seed") {
        c.seed = typed(origin, "seed", e)?;
    }
    c.r_choi = num("choi.r")?.unwrap_or(c.r_choi);
    if let Some(e) = get("output") {
        c.output = Some(PathBuf::from(&e.value));
    }

    let sweep_keys = ["sweep.axis", "sweep.start", "sweep.stop", "sweep.steps"];
    let present: Vec<&str> = sweep_keys.iter().copied().filter(|k| get(k).is_some()).collect();
    if !present.is_empty() {
        if let Some(missing) = sweep_keys.iter().find(|k| get(k).is_none()) {
            let line = get(present[0]).map_or(0, |e| e.line);
            return Err(CliError::Parse {
                origin: origin.to_string(),
                line,
                msg: format!("incomplete sweep: `{missing}` is missing"),
            });
        }
        let e = |k| get(k).expect("checked above");
        c.sweep = Some(SweepSpec {
            axis: typed(origin, "sweep.axis", e("sweep.axis"))?,
            start: typed(origin, "sweep.start", e("sweep.start"))?,
            stop: typed(origin, "sweep.stop", e("sweep.stop"))?,
            steps: typed(origin, "sweep.steps", e("sweep.steps"))?,
        });
    }
    Ok(c)
}
