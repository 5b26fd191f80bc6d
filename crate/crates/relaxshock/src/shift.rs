//! Shock-location tracking and the monotone weight.
//!
//! Perturbed solutions are compared against the planar profile translated by
//! a time-dependent shift `X(t)`. The shift solves the scalar ODE
//!
//! ```text
//!   dX/dt = -(M / delta) * [ Y1(t) + Y2(t) ],          X(0) = 0,
//!
//!   Y1 = ii (a(xi1-X)/sigma_star) rho (u1^s)'(xi1-X) (p(v) - p(v^s(xi1-X)))
//!   Y2 = -ii a(xi1-X) rho (p(v^s))'(xi1-X) (v - v^s(xi1-X))
//! ```
//!
//! (`ii` is the volume integral over the slab, `rho = 1/v` the full
//! solution's density) with the gain
//!
//! ```text
//!   M = 9 (gamma+1) sigma_-^3 v_-^2 / (16 gamma p(v-)),
//!   sigma_- = sqrt(-p'(v-)).
//! ```
//!
//! The weight is a monotone relabeling of the profile's pressure drop,
//!
//! ```text
//!   a(xi1) = 1 + nu (p(v-) - p(v^s(xi1))) / delta  in  [1, 1 + nu],
//! ```
//!
//! so `a' = -(nu/delta) (p(v^s))' >= 0`. The amplitude must satisfy
//! `delta < nu <= sqrt(delta)`; the default is `nu = sqrt(delta)`. Both the
//! weight and the shifted profile are always evaluated at `xi1 - X`.

use crate::error::{RelaxError, Result};
use crate::fields::{comp, FieldState};
use crate::gas::{GasModel, ShockData};
use crate::profile::ProfileTable;
use crate::reduce::det_sum_by;

/// Shift gain `M` for the given left state.
pub fn drift_gain(model: &GasModel, shock: &ShockData) -> f64 {
    let p_minus = model.pressure(shock.v_minus);
    let sigma_minus = (-model.pressure_deriv(shock.v_minus)).sqrt();
    9.0 * (model.gamma + 1.0) * sigma_minus.powi(3) * shock.v_minus * shock.v_minus
        / (16.0 * model.gamma * p_minus)
}

/// Shock location, its rate, the weight amplitude, and the profile they
/// refer to.
#[derive(Debug, Clone)]
pub struct ShiftState {
    /// Current shock location in the co-moving frame.
    pub x: f64,
    /// Most recent shift rate.
    pub xdot: f64,
    /// Weight amplitude.
    pub nu: f64,
    /// Shift gain `M`.
    pub gain: f64,
    pub profile: ProfileTable,
}

impl ShiftState {
    /// Start tracking at `X = 0`. `nu` defaults to `sqrt(delta)` and must
    /// satisfy `delta < nu <= sqrt(delta)` (which also requires `delta < 1`).
    pub fn new(profile: ProfileTable, nu: Option<f64>) -> Result<ShiftState> {
        let delta = profile.shock.delta;
        if !(delta < 1.0) {
            return Err(RelaxError::Admissibility(format!(
                "weight needs shock strength below 1, got delta={delta}"
            )));
        }
        let nu = nu.unwrap_or_else(|| delta.sqrt());
        if !(nu > delta && nu <= delta.sqrt()) {
            return Err(RelaxError::Admissibility(format!(
                "nu must lie in (delta, sqrt(delta)] = ({delta}, {}], got {nu}",
                delta.sqrt()
            )));
        }
        let gain = drift_gain(&profile.model, &profile.shock);
        Ok(ShiftState { x: 0.0, xdot: 0.0, nu, gain, profile })
    }

    /// Weight at `xi1`, evaluated with the current shift: `a(xi1 - X)`.
    pub fn weight(&self, xi1: f64) -> f64 {
        let loc = self.profile.local(xi1 - self.x);
        let p_minus = self.profile.model.pressure(self.profile.shock.v_minus);
        1.0 + self.nu * (p_minus - loc.p) / self.profile.shock.delta
    }

    /// Weight derivative `a'(xi1 - X) = -(nu/delta) (p(v^s))'(xi1 - X) >= 0`.
    pub fn weight_slope(&self, xi1: f64) -> f64 {
        let loc = self.profile.local(xi1 - self.x);
        -(self.nu / self.profile.shock.delta) * loc.p_deriv * loc.slope
    }

    /// Instantaneous shift rate for the given fields at the current `X`.
    ///
    /// Trapezoid quadrature in `xi1` on the solver grid, uniform weights in
    /// the periodic directions; the integrand vanishes identically when the
    /// fields equal the shifted profile.
    pub fn shift_rate(&self, fields: &FieldState) -> f64 {
        let grid = &fields.grid;
        let shock = &self.profile.shock;
        let model = &self.profile.model;
        let n1 = grid.n1;
        let ncells = grid.ncells();
        let p_minus = model.pressure(shock.v_minus);
        let inv_sigma_star = 1.0 / shock.sigma_star;

        // Profile columns depend on xi1 only; precompute them per i1.
        let mut a_col = vec![0.0; n1];
        let mut v_col = vec![0.0; n1];
        let mut p_col = vec![0.0; n1];
        let mut u1s_slope_col = vec![0.0; n1];
        let mut ps_slope_col = vec![0.0; n1];
        for i in 0..n1 {
            let loc = self.profile.local(grid.xi1(i) - self.x);
            a_col[i] = 1.0 + self.nu * (p_minus - loc.p) / shock.delta;
            v_col[i] = loc.v;
            p_col[i] = loc.p;
            u1s_slope_col[i] = -shock.sigma_star * loc.slope;
            ps_slope_col[i] = loc.p_deriv * loc.slope;
        }

        let v = fields.comp(comp::V);
        let gamma = model.gamma;
        let integral = det_sum_by(0, ncells, &|idx| {
            let i = idx % n1;
            let vv = v[idx];
            let rho = 1.0 / vv;
            let pv = vv.powf(-gamma);
            let y1 = (a_col[i] * inv_sigma_star) * rho * u1s_slope_col[i] * (pv - p_col[i]);
            let y2 = a_col[i] * rho * ps_slope_col[i] * (vv - v_col[i]);
            let w = if i == 0 || i == n1 - 1 { 0.5 } else { 1.0 };
            w * (y1 - y2)
        }) * grid.dvol();

        -(self.gain / shock.delta) * integral
    }

    /// Forward-Euler update synchronized with solver macro steps.
    pub fn advance(&mut self, xdot: f64, dt: f64) {
        self.xdot = xdot;
        self.x += dt * xdot;
    }
}
