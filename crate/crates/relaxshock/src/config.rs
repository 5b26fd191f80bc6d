//! Flat `key=value` run configuration.
//!
//! The file format is UTF-8 text, one `key=value` pair per line, `#` starts
//! a comment, blank lines are ignored. Keys:
//!
//! | key                    | meaning                                   | default |
//! |------------------------|-------------------------------------------|---------|
//! | `gamma`                | adiabatic exponent, > 1                   | required |
//! | `mu`                   | shear viscosity, > 0                      | required |
//! | `lambda`               | bulk-type viscosity, > 0                  | required |
//! | `tau`                  | relaxation time, >= 0                     | required |
//! | `v_minus`              | upstream specific volume, > 0             | required |
//! | `u1_minus`             | upstream longitudinal velocity            | required |
//! | `v_plus`               | downstream specific volume, > `v_minus`   | required |
//! | `l`                    | domain half-length, `xi1` in `[-l, l]`    | required |
//! | `n1`                   | cells along `xi1`, >= 16                  | required |
//! | `n2`, `n3`             | transverse cells (1 = planar run)         | 1 |
//! | `t_final`              | end time, > 0                             | required |
//! | `cfl`                  | Courant number in (0, 1]                  | 0.4 |
//! | `output_stride`        | macro steps between diagnostics rows      | 50 |
//! | `snapshot_stride`      | macro steps between field snapshots; 0 keeps only first and last | 0 |
//! | `bump_component`       | perturbed component, named as in snapshots (`v`, `u1`, ..., `pi2`) | `v` |
//! | `bump_amplitude`       | perturbation amplitude (0 = unperturbed)  | 0 |
//! | `bump_width`           | support radius along `xi1`, > 0           | 1 |
//! | `bump_width_transverse`| transverse support radius, > 0            | `bump_width` |
//! | `bump_center`          | bump center along `xi1`                   | 0 |
//! | `seed`                 | RNG seed for randomized validation        | 0 |
//! | `tol`                  | profile ODE tolerance in (0, 1e-4]        | 1e-10 |
//! | `tail_eps`             | profile tail truncation in (0, 0.1)       | 1e-6 |
//! | `nu`                   | weight amplitude in (delta, sqrt(delta)]  | sqrt(delta) |
//!
//! Unknown or duplicate keys are rejected so that typos fail loudly. All
//! cross-field preconditions (shock admissibility, the `tau` ceiling, bump
//! support) are checked at load time, before any compute starts.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{RelaxError, Result};
use crate::fields::{Grid, NCOMP, SNAPSHOT_COLUMNS};
use crate::gas::{make_shock, tau_admissible_max, GasModel, ShockData};
use crate::solver::BumpSpec;

/// Parsed and validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub gamma: f64,
    pub mu: f64,
    pub lambda: f64,
    pub tau: f64,
    pub v_minus: f64,
    pub u1_minus: f64,
    pub v_plus: f64,
    pub l: f64,
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub t_final: f64,
    pub cfl: f64,
    pub output_stride: usize,
    pub snapshot_stride: usize,
    pub bump_component: usize,
    pub bump_amplitude: f64,
    pub bump_width: f64,
    pub bump_width_transverse: Option<f64>,
    pub bump_center: f64,
    pub seed: u64,
    pub tol: f64,
    pub tail_eps: f64,
    pub nu: Option<f64>,
}

/// Validated model, shock, grid, and bump ready for a run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: GasModel,
    pub shock: ShockData,
    pub grid: Grid,
    pub bump: BumpSpec,
}

fn component_index(name: &str) -> Result<usize> {
    SNAPSHOT_COLUMNS[3..3 + NCOMP]
        .iter()
        .position(|&n| n == name)
        .ok_or_else(|| {
            RelaxError::Config(format!(
                "unknown bump_component `{name}`; expected one of {}",
                SNAPSHOT_COLUMNS[3..3 + NCOMP].join(", ")
            ))
        })
}

/// Name of a component as used in snapshots and configs.
pub fn component_name(component: usize) -> &'static str {
    SNAPSHOT_COLUMNS[3 + component]
}

struct KeyMap {
    values: BTreeMap<String, String>,
}

impl KeyMap {
    fn parse(text: &str) -> Result<KeyMap> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                RelaxError::Config(format!("line {}: expected key=value, got `{line}`", lineno + 1))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if values.insert(key.clone(), value).is_some() {
                return Err(RelaxError::Config(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
        }
        Ok(KeyMap { values })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => {
                let v: f64 = raw.parse().map_err(|_| {
                    RelaxError::Config(format!("key `{key}`: `{raw}` is not a number"))
                })?;
                if !v.is_finite() {
                    return Err(RelaxError::Config(format!("key `{key}` must be finite, got {v}")));
                }
                Ok(Some(v))
            }
        }
    }

    fn require_f64(&mut self, key: &str) -> Result<f64> {
        self.take_f64(key)?
            .ok_or_else(|| RelaxError::Config(format!("missing required key `{key}`")))
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| {
                    RelaxError::Config(format!(
                        "key `{key}`: `{raw}` is not a nonnegative integer"
                    ))
                }),
        }
    }
}

impl RunConfig {
    /// Parse a configuration from text and run every load-time check.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut map = KeyMap::parse(text)?;

        let bump_component = match map.take("bump_component") {
            None => crate::fields::comp::V,
            Some(name) => component_index(&name)?,
        };
        let config = RunConfig {
            gamma: map.require_f64("gamma")?,
            mu: map.require_f64("mu")?,
            lambda: map.require_f64("lambda")?,
            tau: map.require_f64("tau")?,
            v_minus: map.require_f64("v_minus")?,
            u1_minus: map.require_f64("u1_minus")?,
            v_plus: map.require_f64("v_plus")?,
            l: map.require_f64("l")?,
            n1: map
                .take_usize("n1")?
                .ok_or_else(|| RelaxError::Config("missing required key `n1`".into()))?,
            n2: map.take_usize("n2")?.unwrap_or(1),
            n3: map.take_usize("n3")?.unwrap_or(1),
            t_final: map.require_f64("t_final")?,
            cfl: map.take_f64("cfl")?.unwrap_or(0.4),
            output_stride: map.take_usize("output_stride")?.unwrap_or(50),
            snapshot_stride: map.take_usize("snapshot_stride")?.unwrap_or(0),
            bump_component,
            bump_amplitude: map.take_f64("bump_amplitude")?.unwrap_or(0.0),
            bump_width: map.take_f64("bump_width")?.unwrap_or(1.0),
            bump_width_transverse: map.take_f64("bump_width_transverse")?,
            bump_center: map.take_f64("bump_center")?.unwrap_or(0.0),
            seed: match map.take("seed") {
                None => 0,
                Some(raw) => raw.parse().map_err(|_| {
                    RelaxError::Config(format!("key `seed`: `{raw}` is not a u64"))
                })?,
            },
            tol: map.take_f64("tol")?.unwrap_or(1e-10),
            tail_eps: map.take_f64("tail_eps")?.unwrap_or(1e-6),
            nu: map.take_f64("nu")?,
        };

        if let Some(stray) = map.values.keys().next() {
            return Err(RelaxError::Config(format!("unknown key `{stray}`")));
        }
        config.build()?;
        Ok(config)
    }

    /// Load and validate a configuration file.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            RelaxError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Construct the validated model, shock, grid, and bump. Every module
    /// precondition reachable from the configuration is checked here.
    pub fn build(&self) -> Result<Experiment> {
        let model = GasModel::new(self.gamma, self.mu, self.lambda, self.tau)?;
        let shock = make_shock(&model, self.v_minus, self.u1_minus, self.v_plus)?;
        if self.tau > 0.0 {
            let (tau_max, argmin) = tau_admissible_max(&model, &shock);
            if self.tau > tau_max {
                return Err(RelaxError::Admissibility(format!(
                    "tau={} exceeds the admissible ceiling {tau_max:.6e} \
                     (profile ODE denominator vanishes near v={argmin:.6}); \
                     lower tau or weaken the shock",
                    self.tau
                )));
            }
        }
        let grid = Grid::new(self.l, self.n1, self.n2, self.n3)?;
        let width_floor = 10.0 * model.long_visc() / shock.sigma_star;
        if self.l <= width_floor {
            return Err(RelaxError::Config(format!(
                "half-width l={} cannot hold the profile: the far states need \
                 l > {width_floor:.3e} (ten viscous lengths) to settle on the grid",
                self.l
            )));
        }
        let bump = BumpSpec {
            component: self.bump_component,
            amplitude: self.bump_amplitude,
            width: self.bump_width,
            width_transverse: self.bump_width_transverse,
            center: self.bump_center,
        };
        bump.validate(&grid)?;

        if !(self.t_final > 0.0) {
            return Err(RelaxError::Config(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(RelaxError::Config(format!(
                "cfl must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        if self.output_stride == 0 {
            return Err(RelaxError::Config("output_stride must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-4) {
            return Err(RelaxError::Config(format!(
                "tol must lie in (0, 1e-4], got {}",
                self.tol
            )));
        }
        if !(self.tail_eps > 0.0 && self.tail_eps < 0.1) {
            return Err(RelaxError::Config(format!(
                "tail_eps must lie in (0, 0.1), got {}",
                self.tail_eps
            )));
        }
        if let Some(nu) = self.nu {
            let delta = shock.delta;
            if !(nu > delta && nu <= delta.sqrt()) {
                return Err(RelaxError::Config(format!(
                    "nu must lie in (delta, sqrt(delta)] = ({delta}, {}], got {nu}",
                    delta.sqrt()
                )));
            }
        }
        Ok(Experiment { model, shock, grid, bump })
    }
}
