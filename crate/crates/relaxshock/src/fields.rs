//! Cartesian grid on `[-L, L] x T^2` and the solution field storage.
//!
//! Fields live at cell centers in struct-of-arrays layout, one contiguous
//! block per component, `xi1` fastest. The eleven components are the
//! specific volume, velocity, the six independent entries of the symmetric
//! traceless stress, and the scalar stress.

use crate::error::{RelaxError, Result};

/// Component indices into [`FieldState::data`].
pub mod comp {
    pub const V: usize = 0;
    pub const U1: usize = 1;
    pub const U2: usize = 2;
    pub const U3: usize = 3;
    pub const P11: usize = 4;
    pub const P22: usize = 5;
    pub const P33: usize = 6;
    pub const P12: usize = 7;
    pub const P13: usize = 8;
    pub const P23: usize = 9;
    pub const PI2: usize = 10;
}

/// Number of stored components.
pub const NCOMP: usize = 11;

/// Column names in snapshot order (coordinates first, then components).
pub const SNAPSHOT_COLUMNS: [&str; 14] = [
    "xi1", "xi2", "xi3", "v", "u1", "u2", "u3", "pi11", "pi22", "pi33", "pi12", "pi13", "pi23",
    "pi2",
];

/// Dimensionality of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    OneD,
    ThreeD,
}

/// Uniform cell-centered grid: `xi1` spans `[-L, L]` with `n1` cells, the
/// torus directions span `[0, 1)` with `n2`, `n3` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub l: f64,
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub dx1: f64,
    pub dx2: f64,
    pub dx3: f64,
    pub mode: GridMode,
}

impl Grid {
    /// Build a grid; the mode is `OneD` exactly when `n2 = n3 = 1`.
    pub fn new(l: f64, n1: usize, n2: usize, n3: usize) -> Result<Grid> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(RelaxError::Config(format!("grid half-length must be positive, got {l}")));
        }
        if n1 < 16 {
            return Err(RelaxError::Config(format!("n1 must be at least 16, got {n1}")));
        }
        if n2 == 0 || n3 == 0 {
            return Err(RelaxError::Config("n2 and n3 must be positive".into()));
        }
        let mode = if n2 == 1 && n3 == 1 { GridMode::OneD } else { GridMode::ThreeD };
        Ok(Grid {
            l,
            n1,
            n2,
            n3,
            dx1: 2.0 * l / n1 as f64,
            dx2: 1.0 / n2 as f64,
            dx3: 1.0 / n3 as f64,
            mode,
        })
    }

    #[inline]
    pub fn ncells(&self) -> usize {
        self.n1 * self.n2 * self.n3
    }

    /// Flattened cell index, `xi1` fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n1 * (j + self.n2 * k)
    }

    /// Cell-center coordinates.
    #[inline]
    pub fn xi1(&self, i: usize) -> f64 {
        -self.l + (i as f64 + 0.5) * self.dx1
    }

    #[inline]
    pub fn xi2(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dx2
    }

    #[inline]
    pub fn xi3(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dx3
    }

    /// Cell volume.
    #[inline]
    pub fn dvol(&self) -> f64 {
        self.dx1 * self.dx2 * self.dx3
    }

    /// Smallest spacing among active directions (those with more than one
    /// cell); dummy transverse extents must not throttle 1-D time steps.
    pub fn min_active_dx(&self) -> f64 {
        let mut dx = self.dx1;
        if self.n2 > 1 {
            dx = dx.min(self.dx2);
        }
        if self.n3 > 1 {
            dx = dx.min(self.dx3);
        }
        dx
    }
}

/// Solution fields on a grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Grid,
    pub t: f64,
    /// `NCOMP` contiguous blocks of `grid.ncells()` values each.
    pub data: Vec<f64>,
}

impl FieldState {
    /// All components zero except `v = 1`.
    pub fn new(grid: Grid) -> FieldState {
        let n = grid.ncells();
        let mut data = vec![0.0; NCOMP * n];
        data[..n].fill(1.0);
        FieldState { grid, t: 0.0, data }
    }

    /// Fill every cell with the given component values.
    pub fn fill_uniform(&mut self, values: &[f64; NCOMP]) {
        let n = self.grid.ncells();
        for (c, &val) in values.iter().enumerate() {
            self.data[c * n..(c + 1) * n].fill(val);
        }
    }

    /// Component block.
    #[inline]
    pub fn comp(&self, c: usize) -> &[f64] {
        let n = self.grid.ncells();
        &self.data[c * n..(c + 1) * n]
    }

    /// Mutable component block.
    #[inline]
    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.grid.ncells();
        &mut self.data[c * n..(c + 1) * n]
    }

    /// Value of component `c` at `(i, j, k)`.
    #[inline]
    pub fn at(&self, c: usize, i: usize, j: usize, k: usize) -> f64 {
        self.comp(c)[self.grid.idx(i, j, k)]
    }

    /// Largest trace magnitude of the traceless stress over the grid,
    /// together with the largest stress entry magnitude for scaling.
    pub fn traceless_residual(&self) -> (f64, f64) {
        let n = self.grid.ncells();
        let p11 = self.comp(comp::P11);
        let p22 = self.comp(comp::P22);
        let p33 = self.comp(comp::P33);
        let p12 = self.comp(comp::P12);
        let p13 = self.comp(comp::P13);
        let p23 = self.comp(comp::P23);
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..n {
            worst = worst.max((p11[i] + p22[i] + p33[i]).abs());
            scale = scale
                .max(p11[i].abs())
                .max(p22[i].abs())
                .max(p33[i].abs())
                .max(p12[i].abs())
                .max(p13[i].abs())
                .max(p23[i].abs());
        }
        (worst, scale)
    }

    /// Check finiteness and positivity of the volume field.
    pub fn check_health(&self) -> Result<()> {
        let v = self.comp(comp::V);
        for (i, &x) in v.iter().enumerate() {
            if !(x > 0.0) || !x.is_finite() {
                let n1 = self.grid.n1;
                let n2 = self.grid.n2;
                let (k, rem) = (i / (n1 * n2), i % (n1 * n2));
                let (j, ii) = (rem / n1, rem % n1);
                return Err(RelaxError::BlowUp {
                    t: self.t,
                    what: format!("v={x} at cell ({ii}, {j}, {k})"),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_mode_follows_transverse_cell_counts() {
        let g1 = Grid::new(50.0, 256, 1, 1).unwrap();
        assert_eq!(g1.mode, GridMode::OneD);
        let g3 = Grid::new(50.0, 256, 16, 1).unwrap();
        assert_eq!(g3.mode, GridMode::ThreeD);
        assert_eq!(g1.min_active_dx(), g1.dx1);
        assert!((g3.min_active_dx() - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn coordinates_are_cell_centered() {
        let g = Grid::new(10.0, 20, 4, 4).unwrap();
        assert!((g.xi1(0) + 10.0 - 0.5).abs() < 1e-14);
        assert!((g.xi1(19) - (10.0 - 0.5)).abs() < 1e-14);
        assert!((g.xi2(0) - 0.125).abs() < 1e-15);
        assert!((g.xi3(3) - 0.875).abs() < 1e-15);
        assert!((g.dvol() - 1.0 * 0.25 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn blow_up_reports_cell_location() {
        let g = Grid::new(10.0, 16, 2, 2).unwrap();
        let mut f = FieldState::new(g);
        let idx = g.idx(3, 1, 1);
        f.comp_mut(comp::V)[idx] = -1.0;
        match f.check_health() {
            Err(RelaxError::BlowUp { what, .. }) => assert!(what.contains("(3, 1, 1)")),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }
}
