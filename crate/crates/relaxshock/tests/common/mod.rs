//! Helpers shared by the integration tests: quadrature, output parsing,
//! reference setups, and closed-form profile quantities derived from the
//! traveling-wave equations independently of the library's internals.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use relaxshock::config::RunConfig;
use relaxshock::fields::comp;
use relaxshock::gas::{make_shock, GasModel, ShockData};
use relaxshock::profile::{solve_profile, ProfileTable};

/// Composite Simpson rule with `n` panels (`n` even).
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2 && n % 2 == 0, "simpson needs an even panel count");
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Reference gas: gamma = 5/3, unit viscosities, caller-chosen tau.
pub fn standard_model(tau: f64) -> GasModel {
    GasModel::new(5.0 / 3.0, 1.0, 1.0, tau).unwrap()
}

/// Reference 2-shock through (v, u1) = (1, 0) with downstream volume 1.2.
pub fn standard_shock(model: &GasModel) -> ShockData {
    make_shock(model, 1.0, 0.0, 1.2).unwrap()
}

/// Reference profile at tight tolerances.
pub fn standard_profile(tau: f64) -> (GasModel, ShockData, ProfileTable) {
    let model = standard_model(tau);
    let shock = standard_shock(&model);
    let table = solve_profile(&model, &shock, 1e-10, 1e-7).unwrap();
    (model, shock, table)
}

/// Traveling-wave volume slope written out from the first integrals of the
/// wave equations, using only the gamma-law pressure and the jump data:
///
/// ```text
///   dv/dxi = (sigma*^2 (v- - v) + v-^(-gamma) - v^(-gamma))
///            / (sigma* (visc - tau (sigma*^2 - gamma v^(-gamma-1))))
/// ```
pub fn profile_slope_closed_form(model: &GasModel, shock: &ShockData, v: f64) -> f64 {
    let g = model.gamma;
    let ss = shock.sigma_star;
    let visc = 4.0 * model.mu / 3.0 + model.lambda;
    let num = ss * ss * (shock.v_minus - v) + shock.v_minus.powf(-g) - v.powf(-g);
    let den = ss * (visc - model.tau * (ss * ss - g * v.powf(-g - 1.0)));
    num / den
}

/// Exponential tail rate of the wave from linearizing the slope formula at
/// the indicated end state; positive, and the decay toward that end.
pub fn tail_rate_closed_form(model: &GasModel, shock: &ShockData, right: bool) -> f64 {
    let g = model.gamma;
    let ss = shock.sigma_star;
    let visc = 4.0 * model.mu / 3.0 + model.lambda;
    let v = if right { shock.v_plus } else { shock.v_minus };
    let hp = -ss * ss + g * v.powf(-g - 1.0);
    hp.abs() / (ss * (visc + model.tau * hp))
}

/// Shift gain written out from its definition at the left state.
pub fn drift_gain_closed_form(model: &GasModel, shock: &ShockData) -> f64 {
    let g = model.gamma;
    let p_minus = shock.v_minus.powf(-g);
    let sigma_minus = (g * shock.v_minus.powf(-g - 1.0)).sqrt();
    9.0 * (g + 1.0) * sigma_minus.powi(3) * shock.v_minus * shock.v_minus
        / (16.0 * g * p_minus)
}

/// Smooth compact bump `amp * exp(1 - 1/(1 - s^2))` for `|s| < 1`, zero
/// outside, with `s = (x - center) / width`. Same family the run
/// configurations use, written independently here.
pub fn compact_bump(x: f64, amp: f64, center: f64, width: f64) -> f64 {
    let s2 = ((x - center) / width).powi(2);
    if s2 < 1.0 {
        amp * (1.0 - 1.0 / (1.0 - s2)).exp()
    } else {
        0.0
    }
}

/// Derivative of [`compact_bump`] in `x`.
pub fn compact_bump_deriv(x: f64, amp: f64, center: f64, width: f64) -> f64 {
    let s = (x - center) / width;
    let s2 = s * s;
    if s2 < 1.0 {
        let e = (1.0 - 1.0 / (1.0 - s2)).exp();
        amp * e * (-2.0 * s / ((1.0 - s2) * (1.0 - s2))) / width
    } else {
        0.0
    }
}

/// Parse a `key=value` report, skipping `#` comment lines.
pub fn parse_report(path: &Path) -> BTreeMap<String, String> {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("cannot read report {}: {e}", path.display()));
    let mut map = BTreeMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .unwrap_or_else(|| panic!("report line without `=`: {line}"));
        map.insert(k.to_string(), v.to_string());
    }
    map
}

/// Numeric report entry.
pub fn report_f64(map: &BTreeMap<String, String>, key: &str) -> f64 {
    map.get(key)
        .unwrap_or_else(|| panic!("report lacks key `{key}`"))
        .parse()
        .unwrap_or_else(|e| panic!("report key `{key}` is not numeric: {e}"))
}

/// Boolean report entry written as 0/1.
pub fn report_flag(map: &BTreeMap<String, String>, key: &str) -> bool {
    match map.get(key).map(String::as_str) {
        Some("1") => true,
        Some("0") => false,
        other => panic!("report key `{key}` is not a flag: {other:?}"),
    }
}

/// Parse a CSV of floats with a header line.
pub fn parse_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("cannot read csv {}: {e}", path.display()));
    let mut lines = text.lines();
    let header: Vec<String> =
        lines.next().expect("csv is empty").split(',').map(str::to_string).collect();
    let rows = lines
        .map(|line| {
            line.split(',')
                .map(|tok| tok.parse().unwrap_or_else(|e| panic!("bad csv value `{tok}`: {e}")))
                .collect()
        })
        .collect();
    (header, rows)
}

/// Column index in a parsed CSV header.
pub fn csv_col(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("csv lacks column `{name}`"))
}

/// Fresh command for the installed binary.
pub fn relaxshock_cmd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relaxshock"))
}

/// Write a file under `dir` and return its path.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

/// Scratch directory under the target tree, created fresh per call site.
pub fn target_scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Fully specified run configuration for the reference shock; tests override
/// single fields as needed.
pub fn base_run_config() -> RunConfig {
    RunConfig {
        gamma: 5.0 / 3.0,
        mu: 1.0,
        lambda: 1.0,
        tau: 0.01,
        v_minus: 1.0,
        u1_minus: 0.0,
        v_plus: 1.2,
        l: 60.0,
        n1: 256,
        n2: 1,
        n3: 1,
        t_final: 2.0,
        cfl: 0.4,
        output_stride: 20,
        snapshot_stride: 0,
        bump_component: comp::V,
        bump_amplitude: 0.002,
        bump_width: 2.0,
        bump_width_transverse: None,
        bump_center: 0.0,
        seed: 7,
        tol: 1e-10,
        tail_eps: 1e-7,
        nu: None,
    }
}

/// Conserved-variable jump residuals of a shock: mass and momentum flux
/// balance in the rest frame, written from the primitive data.
pub fn jump_residuals(model: &GasModel, s: &ShockData) -> (f64, f64) {
    let g = model.gamma;
    let rho_m = 1.0 / s.v_minus;
    let rho_p = 1.0 / s.v_plus;
    let p_m = s.v_minus.powf(-g);
    let p_p = s.v_plus.powf(-g);
    let mass = -s.sigma * (rho_p - rho_m) + (rho_p * s.u1_plus - rho_m * s.u1_minus);
    let momentum = -s.sigma * (rho_p * s.u1_plus - rho_m * s.u1_minus)
        + (rho_p * s.u1_plus * s.u1_plus + p_p)
        - (rho_m * s.u1_minus * s.u1_minus + p_m);
    (mass, momentum)
}
