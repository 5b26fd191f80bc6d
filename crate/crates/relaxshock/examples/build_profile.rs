//! Construct a 2-shock from its end states and tabulate the viscous profile.
//!
//! Prints the Rankine-Hugoniot data, the admissible relaxation-time ceiling,
//! the profile certificate, and a few sampled columns of the wave.
//!
//! Run with `cargo run --example build_profile`.

use relaxshock::gas::{make_shock, tau_admissible_max};
use relaxshock::profile::{solve_profile, validate_profile};
use relaxshock::{GasModel, RelaxError};

fn main() -> Result<(), RelaxError> {
    let model = GasModel::new(5.0 / 3.0, 1.0, 1.0, 0.01)?;
    let shock = make_shock(&model, 1.0, 0.0, 1.2)?;

    println!("shock data for v- = 1, u1- = 0, v+ = 1.2:");
    println!("  sigma      = {:+.12}", shock.sigma);
    println!("  sigma_star = {:+.12}", shock.sigma_star);
    println!("  u1+        = {:+.12}", shock.u1_plus);
    println!("  delta      = {:+.12}", shock.delta);
    let (tau_max, z_min) = tau_admissible_max(&model, &shock);
    println!("  tau ceiling {:.6} (binding at v = {:.4})", tau_max, z_min);

    let table = solve_profile(&model, &shock, 1e-10, 1e-7)?;
    let report = validate_profile(&table);
    println!("\nprofile table: {} nodes on [{:.2}, {:.2}]", table.xi.len(), table.xi[0], *table.xi.last().unwrap());
    println!("  monotone v / u1   : {} / {}", report.monotone_v, report.monotone_u1);
    println!("  tail rates        : {:.6} (left), {:.6} (right)", report.tail_rate_left, report.tail_rate_right);
    println!("  ode residual      : {:.3e}", report.ode_residual);
    println!("  split residual    : {:.3e}", report.split_residual);
    println!("  sum identity      : {:.3e}", report.sum_identity_residual);

    println!("\n{:>8} {:>14} {:>14} {:>14} {:>14}", "xi", "v", "u1", "pi11", "pi2");
    for xi in [-20.0, -5.0, -1.0, 0.0, 1.0, 5.0, 20.0] {
        let pt = table.eval(xi);
        println!(
            "{:>8.1} {:>14.9} {:>14.9} {:>14.9} {:>14.9}",
            xi, pt.v, pt.u1, pt.pi11, pt.pi2
        );
    }
    Ok(())
}
