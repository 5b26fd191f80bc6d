//! Gamma-law gas in specific-volume form and exact 2-shock construction.
//!
//! Pressure is `p(v) = v^{-gamma}` with specific volume `v = 1/rho`. A planar
//! 2-shock connecting a left state `(v-, u1-)` to a right state `(v+, u1+)`
//! with speed `sigma` satisfies the Rankine-Hugoniot conditions
//!
//! ```text
//!   -sigma (rho+ - rho-) + (rho+ u1+ - rho- u1-)                          = 0
//!   -sigma (rho+ u1+ - rho- u1-) + (rho+ u1+^2 - rho- u1-^2) + (p+ - p-)  = 0
//! ```
//!
//! together with the Lax conditions `rho- > rho+`, `u1- > u1+`. Given
//! `(v-, u1-, v+)` with `v+ > v-` the remaining data are explicit:
//!
//! ```text
//!   sigma_star = sqrt((p(v-) - p(v+)) / (v+ - v-))     mass flux through the shock
//!   sigma      = u1- + sigma_star * v-                 shock speed
//!   u1+        = u1- - sigma_star * (v+ - v-)
//! ```
//!
//! The chord gap `h(v) = sigma_star^2 (v- - v) + p(v-) - p(v)` (Hugoniot
//! chord minus pressure curve) vanishes at both end states and is strictly
//! positive in between; it drives the viscous profile ODE in [`crate::profile`].

use crate::error::{RelaxError, Result};

/// Material constants of the relaxed gas.
///
/// `gamma` is the adiabatic exponent, `mu` and `lambda` the shear and bulk
/// stress amplitudes, `tau` the relaxation time scale (the local relaxation
/// time is `tau * rho`). `tau = 0` selects the Newtonian closure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasModel {
    pub gamma: f64,
    pub mu: f64,
    pub lambda: f64,
    pub tau: f64,
}

impl GasModel {
    /// Validated constructor: `gamma > 1`, `mu > 0`, `lambda > 0`, `tau >= 0`.
    pub fn new(gamma: f64, mu: f64, lambda: f64, tau: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(RelaxError::Admissibility(format!(
                "gamma must exceed 1, got {gamma}"
            )));
        }
        if !(mu > 0.0) || !(lambda > 0.0) {
            return Err(RelaxError::Admissibility(format!(
                "mu and lambda must be positive, got mu={mu}, lambda={lambda}"
            )));
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(RelaxError::Admissibility(format!(
                "tau must be nonnegative, got {tau}"
            )));
        }
        Ok(GasModel { gamma, mu, lambda, tau })
    }

    /// `p(v) = v^{-gamma}`, requires `v > 0`.
    #[inline]
    pub fn pressure(&self, v: f64) -> f64 {
        assert!(v > 0.0, "pressure needs positive specific volume, got {v}");
        v.powf(-self.gamma)
    }

    /// `p'(v) = -gamma v^{-gamma-1}`.
    #[inline]
    pub fn pressure_deriv(&self, v: f64) -> f64 {
        assert!(v > 0.0, "pressure_deriv needs positive specific volume, got {v}");
        -self.gamma * v.powf(-self.gamma - 1.0)
    }

    /// Longitudinal viscosity combination `(4/3) mu + lambda`.
    #[inline]
    pub fn long_visc(&self) -> f64 {
        4.0 * self.mu / 3.0 + self.lambda
    }
}

/// End states and wave data of a planar 2-shock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockData {
    pub v_minus: f64,
    pub v_plus: f64,
    pub u1_minus: f64,
    pub u1_plus: f64,
    /// Shock speed in the rest frame.
    pub sigma: f64,
    /// Mass flux through the shock, `sigma_star = rho (sigma - u1) > 0`.
    pub sigma_star: f64,
    /// Shock strength `delta = p(v-) - p(v+) > 0`.
    pub delta: f64,
}

impl ShockData {
    /// Chord gap `h(v) = sigma_star^2 (v- - v) + p(v-) - p(v)`.
    ///
    /// Zero at `v-` and `v+`, strictly positive and concave in between.
    #[inline]
    pub fn chord_gap(&self, model: &GasModel, v: f64) -> f64 {
        self.sigma_star * self.sigma_star * (self.v_minus - v)
            + model.pressure(self.v_minus)
            - model.pressure(v)
    }

    /// `h'(v) = -sigma_star^2 - p'(v)`.
    #[inline]
    pub fn chord_gap_deriv(&self, model: &GasModel, v: f64) -> f64 {
        -self.sigma_star * self.sigma_star - model.pressure_deriv(v)
    }

    /// Far-field primitive state `(v, u1)` on the given side of the shock.
    pub fn far_state(&self, right: bool) -> (f64, f64) {
        if right {
            (self.v_plus, self.u1_plus)
        } else {
            (self.v_minus, self.u1_minus)
        }
    }
}

/// Build the 2-shock through `(v_minus, u1_minus)` with downstream volume
/// `v_plus > v_minus > 0`.
pub fn make_shock(model: &GasModel, v_minus: f64, u1_minus: f64, v_plus: f64) -> Result<ShockData> {
    if !(v_minus > 0.0) || !v_minus.is_finite() || !v_plus.is_finite() {
        return Err(RelaxError::Admissibility(format!(
            "specific volumes must be positive and finite, got v-={v_minus}, v+={v_plus}"
        )));
    }
    if !(v_plus > v_minus) {
        return Err(RelaxError::Admissibility(format!(
            "not a 2-shock: needs v+ > v- (compression on the left), got v-={v_minus}, v+={v_plus}"
        )));
    }
    if !u1_minus.is_finite() {
        return Err(RelaxError::Admissibility(format!("u1- must be finite, got {u1_minus}")));
    }
    let p_minus = model.pressure(v_minus);
    let p_plus = model.pressure(v_plus);
    let delta = p_minus - p_plus;
    let sigma_star = (delta / (v_plus - v_minus)).sqrt();
    let u1_plus = u1_minus - sigma_star * (v_plus - v_minus);
    let sigma = u1_minus + sigma_star * v_minus;
    if u1_plus >= u1_minus {
        return Err(RelaxError::Admissibility(
            "internal consistency: u1+ must lie below u1-".into(),
        ));
    }
    Ok(ShockData { v_minus, v_plus, u1_minus, u1_plus, sigma, sigma_star, delta })
}

/// Largest admissible relaxation time for the shock,
///
/// ```text
///   tau_max = min( inf_{z in [v-, v+]} ((4/3) mu + lambda) / (2 |sigma_star^2 + p'(z)|), 1 )
/// ```
///
/// evaluated on 4096 uniform subintervals of `[v-, v+]` including both
/// endpoints. Returns `(tau_max, argmin z)`; since `p'` is increasing the
/// infimum sits at an endpoint, which the scan reproduces exactly.
pub fn tau_admissible_max(model: &GasModel, shock: &ShockData) -> (f64, f64) {
    let visc = model.long_visc();
    let n = 4096usize;
    let mut best = f64::INFINITY;
    let mut argmin = shock.v_minus;
    for i in 0..=n {
        let z = shock.v_minus + (shock.v_plus - shock.v_minus) * (i as f64) / (n as f64);
        let denom = (shock.sigma_star * shock.sigma_star + model.pressure_deriv(z)).abs();
        if denom > 0.0 {
            let q = visc / (2.0 * denom);
            if q < best {
                best = q;
                argmin = z;
            }
        }
    }
    if best > 1.0 {
        (1.0, argmin)
    } else {
        (best, argmin)
    }
}
