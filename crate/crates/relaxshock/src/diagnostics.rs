//! Entropy functionals evaluated on solver snapshots.
//!
//! Every function here is a pure read of one `FieldState` against the
//! shifted profile; nothing mutates the solution. The pointwise relative
//! entropy of a state against the profile translated by `X` is
//!
//! ```text
//!   eta = H(v | v^s) + |u - u^s|^2 / 2
//!       + tau |Pi1 - Pi1^s|^2 / (4 mu) + tau (Pi2 - Pi2^s)^2 / (2 lambda),
//!
//!   H(v) = v^(1-gamma) / (gamma - 1),
//!   H(v|w) = H(v) - H(w) - H'(w) (v - w),      H'(w) = -p(w),
//! ```
//!
//! with every profile quantity taken at `xi1 - X` and the stress tensor
//! completed to `diag(pi11, -pi11/2, -pi11/2)`. The monitored total is the
//! trapezoid quadrature of `a(xi1 - X) rho eta`, and the companion
//! functionals are
//!
//! ```text
//!   Gs = ii (v^s)'(xi1-X) (p(v) - p(v^s))^2
//!   G2 = sigma_star ii a'(xi1-X) (u2^2 + u3^2) / 2
//!   G3 = (sigma_star/2) ii a'(xi1-X) (u1 - u1^s - (p(v) - p(v^s))/sigma_star)^2
//!   D  = (4mu/3 + lambda) ii a(xi1-X) |grad (p(v) - p(v^s))|^2
//!                                      / (gamma p(v)^(1 + 1/gamma))
//! ```
//!
//! (`ii` is the volume integral over the slab). All four are nonnegative:
//! the profile slope and the weight slope are nonnegative and the remaining
//! integrand factors are squares. Gradients are second-order differences,
//! central inside the slab, one-sided at the `xi1` ends, periodic wrap
//! transversally; the mismatch field is never extrapolated past the grid, so
//! an unperturbed profile yields exactly zero for every functional.

use std::f64::consts::PI;

use crate::fields::{comp, FieldState, Grid};
use crate::gas::GasModel;
use crate::profile::ProfileTable;
use crate::reduce::{det_max_by, det_sum_by};
use crate::shift::ShiftState;

/// Convex volume entropy `H(v) = v^(1-gamma) / (gamma - 1)`.
pub fn volume_entropy(model: &GasModel, v: f64) -> f64 {
    v.powf(1.0 - model.gamma) / (model.gamma - 1.0)
}

/// Relative volume entropy `H(v|w) = H(v) - H(w) + p(w) (v - w)`.
///
/// Nonnegative for positive `v`, `w` because `H'' = gamma v^(-gamma-1) > 0`,
/// and zero exactly at `v = w`.
pub fn relative_volume_entropy(model: &GasModel, v: f64, w: f64) -> f64 {
    volume_entropy(model, v) - volume_entropy(model, w) + model.pressure(w) * (v - w)
}

/// Per-`xi1` profile samples at the shifted coordinate `xi1 - x`.
struct ProfileColumns {
    v: Vec<f64>,
    u1: Vec<f64>,
    pi11: Vec<f64>,
    pi2: Vec<f64>,
    p: Vec<f64>,
}

impl ProfileColumns {
    fn sample(profile: &ProfileTable, grid: &Grid, x: f64) -> ProfileColumns {
        let n1 = grid.n1;
        let mut cols = ProfileColumns {
            v: vec![0.0; n1],
            u1: vec![0.0; n1],
            pi11: vec![0.0; n1],
            pi2: vec![0.0; n1],
            p: vec![0.0; n1],
        };
        for i in 0..n1 {
            let pt = profile.eval(grid.xi1(i) - x);
            cols.v[i] = pt.v;
            cols.u1[i] = pt.u1;
            cols.pi11[i] = pt.pi11;
            cols.pi2[i] = pt.pi2;
            cols.p[i] = profile.model.pressure(pt.v);
        }
        cols
    }
}

/// Squared Frobenius distance of the cell's traceless stress from the
/// completed profile tensor `diag(pi11, -pi11/2, -pi11/2)`.
#[inline]
fn stress_distance_sq(fields: &FieldState, ncells: usize, cell: usize, pi11_s: f64) -> f64 {
    let d11 = fields.data[comp::P11 * ncells + cell] - pi11_s;
    let d22 = fields.data[comp::P22 * ncells + cell] + 0.5 * pi11_s;
    let d33 = fields.data[comp::P33 * ncells + cell] + 0.5 * pi11_s;
    let p12 = fields.data[comp::P12 * ncells + cell];
    let p13 = fields.data[comp::P13 * ncells + cell];
    let p23 = fields.data[comp::P23 * ncells + cell];
    d11 * d11 + d22 * d22 + d33 * d33 + 2.0 * (p12 * p12 + p13 * p13 + p23 * p23)
}

/// Pointwise relative entropy `eta` of the fields against the profile
/// translated by `x`, one value per cell.
pub fn relative_entropy_field(fields: &FieldState, profile: &ProfileTable, x: f64) -> Vec<f64> {
    let grid = &fields.grid;
    let model = &profile.model;
    let n1 = grid.n1;
    let ncells = grid.ncells();
    let cols = ProfileColumns::sample(profile, grid, x);
    let hs: Vec<f64> = cols.v.iter().map(|&w| volume_entropy(model, w)).collect();
    let c1 = model.tau / (4.0 * model.mu);
    let c2 = model.tau / (2.0 * model.lambda);

    let mut eta = vec![0.0; ncells];
    for cell in 0..ncells {
        let i = cell % n1;
        let v = fields.data[comp::V * ncells + cell];
        let h_rel = volume_entropy(model, v) - hs[i] + cols.p[i] * (v - cols.v[i]);
        let du1 = fields.data[comp::U1 * ncells + cell] - cols.u1[i];
        let u2 = fields.data[comp::U2 * ncells + cell];
        let u3 = fields.data[comp::U3 * ncells + cell];
        let dpi2 = fields.data[comp::PI2 * ncells + cell] - cols.pi2[i];
        eta[cell] = h_rel
            + 0.5 * (du1 * du1 + u2 * u2 + u3 * u3)
            + c1 * stress_distance_sq(fields, ncells, cell, cols.pi11[i])
            + c2 * dpi2 * dpi2;
    }
    eta
}

/// Weighted entropy total: trapezoid quadrature of `a(xi1 - X) rho eta` over
/// the slab, with the shift and weight taken from `shift`.
pub fn weighted_entropy_total(fields: &FieldState, shift: &ShiftState) -> f64 {
    let grid = &fields.grid;
    let n1 = grid.n1;
    let ncells = grid.ncells();
    let eta = relative_entropy_field(fields, &shift.profile, shift.x);
    let a_col: Vec<f64> = (0..n1).map(|i| shift.weight(grid.xi1(i))).collect();
    let v = fields.comp(comp::V);
    let total = det_sum_by(0, ncells, &|cell| {
        let i = cell % n1;
        let w = if i == 0 || i == n1 - 1 { 0.5 } else { 1.0 };
        w * a_col[i] * eta[cell] / v[cell]
    });
    total * grid.dvol()
}

/// The four nonnegative companion functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodTerms {
    /// Profile-slope weighted pressure mismatch.
    pub gs: f64,
    /// Weight-slope capture of transverse kinetic energy.
    pub g2: f64,
    /// Weight-slope capture of the longitudinal velocity/pressure combination.
    pub g3: f64,
    /// Weighted dissipation of the pressure mismatch gradient.
    pub d: f64,
}

/// Evaluate `Gs`, `G2`, `G3`, and `D` for the fields against the shifted
/// profile, trapezoid in `xi1` and uniform in the periodic directions.
pub fn good_terms(fields: &FieldState, shift: &ShiftState) -> GoodTerms {
    let profile = &shift.profile;
    let model = &profile.model;
    let shock = &profile.shock;
    let grid = &fields.grid;
    let n1 = grid.n1;
    let n2 = grid.n2;
    let n3 = grid.n3;
    let ncells = grid.ncells();
    let sigma_star = shock.sigma_star;
    let dvol = grid.dvol();

    let mut ps = vec![0.0; n1];
    let mut u1s = vec![0.0; n1];
    let mut slope_s = vec![0.0; n1];
    let mut a_col = vec![0.0; n1];
    let mut ap_col = vec![0.0; n1];
    for i in 0..n1 {
        let xi = grid.xi1(i);
        let loc = profile.local(xi - shift.x);
        ps[i] = loc.p;
        slope_s[i] = loc.slope;
        u1s[i] = shock.u1_minus - sigma_star * (loc.v - shock.v_minus);
        a_col[i] = shift.weight(xi);
        ap_col[i] = shift.weight_slope(xi);
    }

    let vf = fields.comp(comp::V);
    let pv: Vec<f64> = vf.iter().map(|&v| model.pressure(v)).collect();
    let q: Vec<f64> = (0..ncells).map(|cell| pv[cell] - ps[cell % n1]).collect();

    let end_weight = |i: usize| if i == 0 || i == n1 - 1 { 0.5 } else { 1.0 };

    let gs = det_sum_by(0, ncells, &|cell| {
        let i = cell % n1;
        end_weight(i) * slope_s[i] * q[cell] * q[cell]
    }) * dvol;

    let u2f = fields.comp(comp::U2);
    let u3f = fields.comp(comp::U3);
    let g2 = det_sum_by(0, ncells, &|cell| {
        let i = cell % n1;
        end_weight(i) * ap_col[i] * 0.5 * (u2f[cell] * u2f[cell] + u3f[cell] * u3f[cell])
    }) * dvol
        * sigma_star;

    let u1f = fields.comp(comp::U1);
    let g3 = det_sum_by(0, ncells, &|cell| {
        let i = cell % n1;
        let r = u1f[cell] - u1s[i] - q[cell] / sigma_star;
        end_weight(i) * ap_col[i] * r * r
    }) * dvol
        * (0.5 * sigma_star);

    let inv2dx1 = 1.0 / (2.0 * grid.dx1);
    let inv2dx2 = 1.0 / (2.0 * grid.dx2);
    let inv2dx3 = 1.0 / (2.0 * grid.dx3);
    let d = det_sum_by(0, ncells, &|cell| {
        let i = cell % n1;
        let j = (cell / n1) % n2;
        let k = cell / (n1 * n2);
        let d1 = if i == 0 {
            (-3.0 * q[cell] + 4.0 * q[cell + 1] - q[cell + 2]) * inv2dx1
        } else if i == n1 - 1 {
            (3.0 * q[cell] - 4.0 * q[cell - 1] + q[cell - 2]) * inv2dx1
        } else {
            (q[cell + 1] - q[cell - 1]) * inv2dx1
        };
        let mut grad_sq = d1 * d1;
        if n2 > 1 {
            let jm = grid.idx(i, (j + n2 - 1) % n2, k);
            let jp = grid.idx(i, (j + 1) % n2, k);
            let d2 = (q[jp] - q[jm]) * inv2dx2;
            grad_sq += d2 * d2;
        }
        if n3 > 1 {
            let km = grid.idx(i, j, (k + n3 - 1) % n3);
            let kp = grid.idx(i, j, (k + 1) % n3);
            let d3 = (q[kp] - q[km]) * inv2dx3;
            grad_sq += d3 * d3;
        }
        // For the power law, p^(1 + 1/gamma) = p / v, so the denominator
        // gamma p^(1 + 1/gamma) is gamma p(v) / v.
        end_weight(i) * a_col[i] * grad_sq * vf[cell] / (model.gamma * pv[cell])
    }) * dvol
        * model.long_visc();

    GoodTerms { gs, g2, g3, d }
}

/// Mass-flux mismatch in its kinematic form,
/// `F = (sigma_star (v - v^s) + (u1 - u1^s)) / v`, one value per cell.
pub fn flux_mismatch(fields: &FieldState, profile: &ProfileTable, x: f64) -> Vec<f64> {
    let grid = &fields.grid;
    let n1 = grid.n1;
    let ncells = grid.ncells();
    let sigma_star = profile.shock.sigma_star;
    let cols = ProfileColumns::sample(profile, grid, x);
    let vf = fields.comp(comp::V);
    let u1f = fields.comp(comp::U1);
    (0..ncells)
        .map(|cell| {
            let i = cell % n1;
            (sigma_star * (vf[cell] - cols.v[i]) + (u1f[cell] - cols.u1[i])) / vf[cell]
        })
        .collect()
}

/// Mass-flux mismatch in its conservative form,
/// `F = -sigma (rho - rho^s) + rho u1 - rho^s u1^s`.
///
/// Agrees with [`flux_mismatch`] to round-off: the difference of the two
/// forms collapses to `(u1^s - sigma + sigma_star v^s) / v`, which vanishes
/// identically on the profile.
pub fn flux_mismatch_conservative(fields: &FieldState, profile: &ProfileTable, x: f64) -> Vec<f64> {
    let grid = &fields.grid;
    let n1 = grid.n1;
    let ncells = grid.ncells();
    let sigma = profile.shock.sigma;
    let cols = ProfileColumns::sample(profile, grid, x);
    let rho_s: Vec<f64> = cols.v.iter().map(|&v| 1.0 / v).collect();
    let vf = fields.comp(comp::V);
    let u1f = fields.comp(comp::U1);
    (0..ncells)
        .map(|cell| {
            let i = cell % n1;
            let rho = 1.0 / vf[cell];
            -sigma * (rho - rho_s[i]) + rho * u1f[cell] - rho_s[i] * cols.u1[i]
        })
        .collect()
}

/// Result of the weighted slab inequality check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareCheck {
    /// `ii (f - mean f)^2` over the slab.
    pub lhs: f64,
    /// `(1/2) ii y1 (1-y1) |d_y1 f|^2
    ///  + (1/(16 pi^2)) ii (|d_y2 f|^2 + |d_y3 f|^2) / (y1 (1-y1))`.
    pub rhs: f64,
    /// Whether `lhs <= rhs (1 + 1e-6) + 1e-12`.
    pub holds: bool,
}

/// Check the weighted slab inequality on midpoint samples of `f` over
/// `(0,1) x T^2`, indexed `y1`-fastest with shape `(n1, n2, n3)`.
///
/// Derivatives are second-order differences, one-sided at the `y1` ends and
/// periodic transversally. The singular weight `1 / (y1 (1 - y1))` is only
/// ever evaluated at cell midpoints, half a spacing away from the endpoints,
/// so both sides stay finite; the check reports both values rather than
/// clamping either.
pub fn poincare_check(f: &[f64], n1: usize, n2: usize, n3: usize) -> PoincareCheck {
    assert!(n1 >= 3, "need at least three samples across the slab");
    assert_eq!(f.len(), n1 * n2 * n3, "sample count must match the shape");
    let ncells = n1 * n2 * n3;
    let h1 = 1.0 / n1 as f64;
    let h2 = 1.0 / n2 as f64;
    let h3 = 1.0 / n3 as f64;
    let dvol = h1 * h2 * h3;

    let mean = det_sum_by(0, ncells, &|c| f[c]) / ncells as f64;
    let lhs = det_sum_by(0, ncells, &|c| {
        let r = f[c] - mean;
        r * r
    }) * dvol;

    let transverse_coef = 1.0 / (16.0 * PI * PI);
    let rhs = det_sum_by(0, ncells, &|cell| {
        let i = cell % n1;
        let j = (cell / n1) % n2;
        let k = cell / (n1 * n2);
        let y = (i as f64 + 0.5) * h1;
        let d1 = if i == 0 {
            (-3.0 * f[cell] + 4.0 * f[cell + 1] - f[cell + 2]) * 0.5 / h1
        } else if i == n1 - 1 {
            (3.0 * f[cell] - 4.0 * f[cell - 1] + f[cell - 2]) * 0.5 / h1
        } else {
            (f[cell + 1] - f[cell - 1]) * 0.5 / h1
        };
        let acc = 0.5 * y * (1.0 - y) * d1 * d1;
        let mut grad_t_sq = 0.0;
        if n2 > 1 {
            let jm = i + n1 * ((j + n2 - 1) % n2 + n2 * k);
            let jp = i + n1 * ((j + 1) % n2 + n2 * k);
            let d2 = (f[jp] - f[jm]) * 0.5 / h2;
            grad_t_sq += d2 * d2;
        }
        if n3 > 1 {
            let km = i + n1 * (j + n2 * ((k + n3 - 1) % n3));
            let kp = i + n1 * (j + n2 * ((k + 1) % n3));
            let d3 = (f[kp] - f[km]) * 0.5 / h3;
            grad_t_sq += d3 * d3;
        }
        acc + transverse_coef * grad_t_sq / (y * (1.0 - y))
    }) * dvol;

    PoincareCheck { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-6) + 1e-12 }
}

/// One row of run diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    pub t: f64,
    /// Weighted entropy total `ii a rho eta`.
    pub eta_total: f64,
    pub gs: f64,
    pub g2: f64,
    pub g3: f64,
    pub d: f64,
    /// `max |v - v^s|` over the grid.
    pub sup_v: f64,
    /// `max |u - u^s|` (Euclidean in the three components).
    pub sup_u: f64,
    /// `max` combined stress distance, Frobenius in `Pi1` plus the `Pi2` gap.
    pub sup_pi: f64,
    /// `|dX/dt|` at the snapshot time.
    pub xdot_abs: f64,
}

/// Column names of the run time-series, in emission order.
pub const CSV_HEADER: &str = "t,eta_total,Gs,G2,G3,D,sup_v,sup_u,sup_pi,X,Xdot,mass_residual";

impl EntropyReport {
    /// Evaluate every monitored functional for one snapshot.
    pub fn measure(fields: &FieldState, shift: &ShiftState) -> EntropyReport {
        let grid = &fields.grid;
        let n1 = grid.n1;
        let ncells = grid.ncells();
        let cols = ProfileColumns::sample(&shift.profile, grid, shift.x);
        let terms = good_terms(fields, shift);

        let vf = fields.comp(comp::V);
        let sup_v = det_max_by(0, ncells, &|cell| (vf[cell] - cols.v[cell % n1]).abs());
        let sup_u = det_max_by(0, ncells, &|cell| {
            let du1 = fields.data[comp::U1 * ncells + cell] - cols.u1[cell % n1];
            let u2 = fields.data[comp::U2 * ncells + cell];
            let u3 = fields.data[comp::U3 * ncells + cell];
            (du1 * du1 + u2 * u2 + u3 * u3).sqrt()
        });
        let sup_pi = det_max_by(0, ncells, &|cell| {
            let i = cell % n1;
            let dpi2 = fields.data[comp::PI2 * ncells + cell] - cols.pi2[i];
            (stress_distance_sq(fields, ncells, cell, cols.pi11[i]) + dpi2 * dpi2).sqrt()
        });

        EntropyReport {
            t: fields.t,
            eta_total: weighted_entropy_total(fields, shift),
            gs: terms.gs,
            g2: terms.g2,
            g3: terms.g3,
            d: terms.d,
            sup_v,
            sup_u,
            sup_pi,
            xdot_abs: shift.xdot.abs(),
        }
    }

    /// Render one CSV row matching [`CSV_HEADER`], 17 significant digits.
    pub fn csv_line(&self, x: f64, xdot: f64, mass_residual: f64) -> String {
        let vals = [
            self.t,
            self.eta_total,
            self.gs,
            self.g2,
            self.g3,
            self.d,
            self.sup_v,
            self.sup_u,
            self.sup_pi,
            x,
            xdot,
            mass_residual,
        ];
        let mut row = String::new();
        for (idx, v) in vals.iter().enumerate() {
            if idx > 0 {
                row.push(',');
            }
            row.push_str(&format!("{v:.16e}"));
        }
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::NCOMP;
    use crate::gas::make_shock;
    use crate::profile::solve_profile;
    use crate::solver::{init_perturbed_shock, BumpSpec};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shock_setup(tau: f64) -> (GasModel, ProfileTable) {
        let m = GasModel::new(5.0 / 3.0, 1.0, 1.0, tau).unwrap();
        let s = make_shock(&m, 1.0, 0.0, 1.2).unwrap();
        let t = solve_profile(&m, &s, 1e-10, 1e-7).unwrap();
        (m, t)
    }

    /// Fields equal to the profile translated by `x0`, plus a compactly
    /// supported bump of the given amplitude in `v` and `u2` centered at
    /// `x0` (so the whole configuration translates rigidly with `x0`).
    fn translated_fields(profile: &ProfileTable, grid: Grid, x0: f64, amp: f64) -> FieldState {
        let mut f = FieldState::new(grid);
        let ncells = grid.ncells();
        for k in 0..grid.n3 {
            for j in 0..grid.n2 {
                for i in 0..grid.n1 {
                    let xi = grid.xi1(i) - x0;
                    let pt = profile.eval(xi);
                    let cell = grid.idx(i, j, k);
                    let s = xi / 4.0;
                    let bump = if s * s < 1.0 {
                        amp * (1.0 - 1.0 / (1.0 - s * s)).exp()
                    } else {
                        0.0
                    };
                    f.data[comp::V * ncells + cell] = pt.v + bump;
                    f.data[comp::U1 * ncells + cell] = pt.u1;
                    f.data[comp::U2 * ncells + cell] = 0.5 * bump;
                    f.data[comp::P11 * ncells + cell] = pt.pi11;
                    f.data[comp::P22 * ncells + cell] = -0.5 * pt.pi11;
                    f.data[comp::P33 * ncells + cell] = -0.5 * pt.pi11;
                    f.data[comp::PI2 * ncells + cell] = pt.pi2;
                }
            }
        }
        f
    }

    #[test]
    fn relative_entropy_matches_the_hand_value() {
        let m = GasModel::new(2.0, 1.0, 1.0, 0.1).unwrap();
        assert_relative_eq!(relative_volume_entropy(&m, 2.0, 1.0), 0.5, max_relative = 1e-14);
        for v in [0.5, 0.9, 1.7, 2.6] {
            assert_eq!(relative_volume_entropy(&m, v, v), 0.0);
        }
    }

    #[test]
    fn relative_entropy_dominates_the_quadratic_gap() {
        // H'' = gamma v^(-gamma-1) is smallest at the right end of the
        // sampled interval, so H(v|w) >= min(H'')/2 (v-w)^2 on [0.5, 3].
        let m = GasModel::new(5.0 / 3.0, 1.0, 1.0, 0.1).unwrap();
        let c = 0.5 * m.gamma * 3.0f64.powf(-m.gamma - 1.0);
        for iv in 0..=60 {
            for iw in 0..=60 {
                let v = 0.5 + 2.5 * iv as f64 / 60.0;
                let w = 0.5 + 2.5 * iw as f64 / 60.0;
                let h = relative_volume_entropy(&m, v, w);
                assert!(h >= 0.0, "H({v}|{w}) = {h} negative");
                let bound = c * (v - w) * (v - w);
                assert!(
                    h >= bound * (1.0 - 1e-12),
                    "H({v}|{w}) = {h} below quadratic bound {bound}"
                );
            }
        }
    }

    #[test]
    fn entropy_vanishes_on_the_shifted_profile() {
        let (_m, t) = shock_setup(0.01);
        let grid = Grid::new(60.0, 128, 1, 1).unwrap();
        let x0 = 0.7;
        let f = translated_fields(&t, grid, x0, 0.0);
        let eta = relative_entropy_field(&f, &t, x0);
        assert!(eta.iter().all(|&e| e == 0.0), "eta not identically zero");

        let mut shift = ShiftState::new(t, None).unwrap();
        shift.x = x0;
        assert_eq!(weighted_entropy_total(&f, &shift), 0.0);
        let report = EntropyReport::measure(&f, &shift);
        assert_eq!(report.eta_total, 0.0);
        assert_eq!((report.gs, report.g2, report.g3, report.d), (0.0, 0.0, 0.0, 0.0));
        assert_eq!((report.sup_v, report.sup_u, report.sup_pi), (0.0, 0.0, 0.0));
    }

    #[test]
    fn entropy_total_is_quadratic_in_a_velocity_perturbation() {
        let (_m, t) = shock_setup(0.01);
        let grid = Grid::new(60.0, 256, 1, 1).unwrap();
        let shift = ShiftState::new(t, None).unwrap();
        let totals: Vec<f64> = [1e-3, 2e-3]
            .iter()
            .map(|&amp| {
                let bump = BumpSpec {
                    component: comp::U2,
                    amplitude: amp,
                    width: 5.0,
                    width_transverse: None,
                    center: 0.0,
                };
                let f = init_perturbed_shock(&shift.profile, grid, &bump).unwrap();
                weighted_entropy_total(&f, &shift)
            })
            .collect();
        assert!(totals[0] > 0.0);
        assert_relative_eq!(totals[1] / totals[0], 4.0, max_relative = 1e-13);
    }

    #[test]
    fn good_terms_respond_to_the_matching_perturbations() {
        let (_m, t) = shock_setup(0.01);
        let grid = Grid::new(60.0, 256, 1, 1).unwrap();
        let shift = ShiftState::new(t, None).unwrap();

        let zero = BumpSpec {
            component: comp::V,
            amplitude: 0.0,
            width: 5.0,
            width_transverse: None,
            center: 0.0,
        };
        let f0 = init_perturbed_shock(&shift.profile, grid, &zero).unwrap();
        let g0 = good_terms(&f0, &shift);
        assert_eq!((g0.gs, g0.g2, g0.g3, g0.d), (0.0, 0.0, 0.0, 0.0));

        let mut longitudinal = zero;
        longitudinal.component = comp::U1;
        longitudinal.amplitude = 1e-3;
        let f1 = init_perturbed_shock(&shift.profile, grid, &longitudinal).unwrap();
        let g1 = good_terms(&f1, &shift);
        assert_eq!(g1.g2, 0.0, "transverse term must ignore u1");
        assert!(g1.g3 > 0.0 && g1.gs == 0.0 && g1.d == 0.0);

        let mut transverse = longitudinal;
        transverse.component = comp::U2;
        let f2 = init_perturbed_shock(&shift.profile, grid, &transverse).unwrap();
        let g2t = good_terms(&f2, &shift);
        assert!(g2t.g2 > 0.0);

        let mut volume = longitudinal;
        volume.component = comp::V;
        let f3 = init_perturbed_shock(&shift.profile, grid, &volume).unwrap();
        let g3t = good_terms(&f3, &shift);
        assert!(g3t.gs > 0.0 && g3t.d > 0.0 && g3t.g3 > 0.0);
        assert_eq!(g3t.g2, 0.0);
    }

    #[test]
    fn flux_mismatch_forms_agree() {
        let (_m, t) = shock_setup(0.01);
        let grid = Grid::new(60.0, 128, 4, 1).unwrap();
        let zero = BumpSpec {
            component: comp::V,
            amplitude: 0.0,
            width: 5.0,
            width_transverse: None,
            center: 0.0,
        };
        let mut f = init_perturbed_shock(&t, grid, &zero).unwrap();
        let base = flux_mismatch(&f, &t, 0.0);
        assert!(base.iter().all(|&x| x == 0.0), "mismatch nonzero on the profile");

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ncells = grid.ncells();
        for c in 0..NCOMP {
            for cell in 0..ncells {
                f.data[c * ncells + cell] += 1e-3 * (rng.gen::<f64>() - 0.5);
            }
        }
        let kinematic = flux_mismatch(&f, &t, 0.0);
        let conservative = flux_mismatch_conservative(&f, &t, 0.0);
        let worst = kinematic
            .iter()
            .zip(&conservative)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= 1e-10, "forms disagree by {worst:.3e}");
        assert!(kinematic.iter().any(|&x| x != 0.0));
    }

    #[test]
    fn flux_mismatch_reduces_to_the_volume_term() {
        let (_m, t) = shock_setup(0.01);
        let grid = Grid::new(60.0, 128, 1, 1).unwrap();
        let bump = BumpSpec {
            component: comp::V,
            amplitude: 2e-2,
            width: 5.0,
            width_transverse: None,
            center: 0.0,
        };
        let f = init_perturbed_shock(&t, grid, &bump).unwrap();
        let got = flux_mismatch(&f, &t, 0.0);
        let sigma_star = t.shock.sigma_star;
        for i in 0..grid.n1 {
            let v = f.at(comp::V, i, 0, 0);
            let vs = t.eval_v(grid.xi1(i));
            let want = sigma_star * (v - vs) / v;
            assert_relative_eq!(got[i], want, max_relative = 1e-13, epsilon = 1e-15);
        }
    }

    #[test]
    fn poincare_equality_case_and_constants() {
        let n = 512;
        let constant = vec![3.25; n];
        let check = poincare_check(&constant, n, 1, 1);
        assert_eq!((check.lhs, check.rhs), (0.0, 0.0));
        assert!(check.holds);

        let linear: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let check = poincare_check(&linear, n, 1, 1);
        assert_relative_eq!(check.lhs, 1.0 / 12.0, max_relative = 1e-5);
        assert_relative_eq!(check.rhs, 1.0 / 12.0, max_relative = 1e-5);
        assert!(check.holds, "equality case lost: {check:?}");
    }

    #[test]
    fn poincare_holds_for_band_limited_samples() {
        let (n1, n2, n3) = (64, 16, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let mut f = vec![0.0; n1 * n2 * n3];
            for _ in 0..4 {
                let a1 = rng.gen_range(1..=3) as f64;
                let b2 = rng.gen_range(0..=2) as f64;
                let b3 = rng.gen_range(0..=2) as f64;
                let c: f64 = rng.gen_range(-1.0..1.0);
                let phase2: f64 = rng.gen_range(0.0..2.0 * PI);
                let phase3: f64 = rng.gen_range(0.0..2.0 * PI);
                for k in 0..n3 {
                    let y3 = (k as f64 + 0.5) / n3 as f64;
                    for j in 0..n2 {
                        let y2 = (j as f64 + 0.5) / n2 as f64;
                        let t23 = (2.0 * PI * b2 * y2 + phase2).cos()
                            * (2.0 * PI * b3 * y3 + phase3).cos();
                        for i in 0..n1 {
                            let y1 = (i as f64 + 0.5) / n1 as f64;
                            // sin(pi a y1) vanishes at the slab ends, which
                            // keeps the singular transverse weight integrable.
                            f[i + n1 * (j + n2 * k)] += c * (PI * a1 * y1).sin() * t23;
                        }
                    }
                }
            }
            let check = poincare_check(&f, n1, n2, n3);
            assert!(check.holds, "inequality failed: {check:?}");
            assert!(check.lhs > 0.0);
        }
    }

    #[test]
    fn diagnostics_are_translation_consistent() {
        let (_m, t) = shock_setup(0.01);
        let grid = Grid::new(60.0, 512, 1, 1).unwrap();
        let x0 = 9.0 * grid.dx1;
        let f_base = translated_fields(&t, grid, 0.0, 2e-2);
        let f_moved = translated_fields(&t, grid, x0, 2e-2);

        let mut shift = ShiftState::new(t, None).unwrap();
        let r_base = EntropyReport::measure(&f_base, &shift);
        shift.x = x0;
        let r_moved = EntropyReport::measure(&f_moved, &shift);

        for (a, b, name) in [
            (r_base.eta_total, r_moved.eta_total, "eta_total"),
            (r_base.gs, r_moved.gs, "gs"),
            (r_base.g2, r_moved.g2, "g2"),
            (r_base.g3, r_moved.g3, "g3"),
            (r_base.d, r_moved.d, "d"),
            (r_base.sup_v, r_moved.sup_v, "sup_v"),
            (r_base.sup_u, r_moved.sup_u, "sup_u"),
            (r_base.sup_pi, r_moved.sup_pi, "sup_pi"),
        ] {
            assert_relative_eq!(a, b, max_relative = 1e-8, epsilon = 1e-14);
            assert!(a >= 0.0, "{name} negative: {a}");
        }
    }

    #[test]
    fn csv_row_matches_the_header_schema() {
        let report = EntropyReport {
            t: 1.5,
            eta_total: 2e-4,
            gs: 1e-5,
            g2: 0.0,
            g3: 3e-6,
            d: 4e-6,
            sup_v: 1e-2,
            sup_u: 2e-2,
            sup_pi: 3e-3,
            xdot_abs: 1e-3,
        };
        let line = report.csv_line(0.25, -1e-3, 5e-9);
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), CSV_HEADER.split(',').count());
        let parsed: Vec<f64> = fields.iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!(parsed[0], 1.5);
        assert_eq!(parsed[9], 0.25);
        assert_eq!(parsed[10], -1e-3);
        assert_eq!(parsed[11], 5e-9);
    }
}
