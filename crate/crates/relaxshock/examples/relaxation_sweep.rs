//! Sweep the relaxation time toward zero and compare each run against the
//! Newtonian reference started from the same data.
//!
//! `E` is the L2 distance of `(v, u)` from the reference at the final time,
//! `S` the L2 distance of the stored deviatoric stress from the equilibrium
//! closure on the run's own velocity. Both shrink as `tau` does.
//!
//! Run with `cargo run --example relaxation_sweep`.

use relaxshock::fields::{comp, Grid};
use relaxshock::gas::make_shock;
use relaxshock::profile::solve_profile;
use relaxshock::reduce::det_sum_by;
use relaxshock::solver::{init_perturbed_shock, BumpSpec, RelaxSolver};
use relaxshock::{GasModel, RelaxError};

fn main() -> Result<(), RelaxError> {
    let gamma = 5.0 / 3.0;
    let (mu, lambda) = (1.0, 1.0);
    let newt = GasModel::new(gamma, mu, lambda, 0.0)?;
    let shock = make_shock(&newt, 1.0, 0.0, 1.2)?;
    let table = solve_profile(&newt, &shock, 1e-10, 1e-7)?;

    let grid = Grid::new(50.0, 1024, 1, 1)?;
    let bump = BumpSpec {
        component: comp::V,
        amplitude: 0.01,
        width: 4.0,
        width_transverse: None,
        center: 0.0,
    };
    let init = init_perturbed_shock(&table, grid, &bump)?;
    let t_end = 5.0;

    // Newtonian reference: same data, instantaneous closure.
    let mut reference = init.clone();
    let mut ref_solver = RelaxSolver::new(newt, &shock, grid);
    ref_solver.set_boundary_profile(&table);
    while reference.t < t_end {
        let dt = ref_solver.newtonian_dt(&reference).min(t_end - reference.t);
        ref_solver.newtonian_step(&mut reference, dt)?;
    }

    println!("{:>10} {:>14} {:>14}", "tau", "E(tau)", "S(tau)");
    for tau in [1e-1, 1e-2, 1e-3] {
        let model = GasModel::new(gamma, mu, lambda, tau)?;
        let mut fields = init.clone();
        let mut solver = RelaxSolver::new(model, &shock, grid);
        solver.set_boundary_profile(&table);
        while fields.t < t_end {
            let dt = solver.cfl_dt(&fields)?.min(t_end - fields.t);
            solver.step(&mut fields, dt)?;
        }
        let e = vu_distance(&fields, &reference, grid);
        let s = solver.pi1_closure_distance(&fields);
        println!("{:>10.0e} {:>14.6e} {:>14.6e}", tau, e, s);
    }
    Ok(())
}

/// Discrete L2 distance over the volume and velocity components.
fn vu_distance(
    a: &relaxshock::fields::FieldState,
    b: &relaxshock::fields::FieldState,
    grid: Grid,
) -> f64 {
    let ncells = grid.ncells();
    let mut sum = 0.0;
    for c in [comp::V, comp::U1, comp::U2, comp::U3] {
        let qa = a.comp(c);
        let qb = b.comp(c);
        sum += det_sum_by(0, ncells, &|i| {
            let gap = qa[i] - qb[i];
            gap * gap
        });
    }
    (sum * grid.dvol()).sqrt()
}
