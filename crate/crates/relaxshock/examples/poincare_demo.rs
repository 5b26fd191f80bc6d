//! Check the slab Poincare inequality on midpoint samples.
//!
//! For mean-zero-in-`y1` functions on the unit slab the squared average in
//! `y1` is bounded by one twelfth of the `y1`-derivative energy. The linear
//! function `f = y1` attains the bound; random band-limited fields must sit
//! below it.
//!
//! Run with `cargo run --example poincare_demo`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relaxshock::diagnostics::poincare_check;
use relaxshock::runner::band_limited_field;

fn main() {
    let (n1, n2, n3) = (256usize, 32, 32);

    // Equality case: f(y) = y1 sampled at cell midpoints.
    let mut linear = vec![0.0; n1 * n2 * n3];
    for k in 0..n3 {
        for j in 0..n2 {
            for i in 0..n1 {
                linear[i + n1 * (j + n2 * k)] = (i as f64 + 0.5) / n1 as f64;
            }
        }
    }
    let eq = poincare_check(&linear, n1, n2, n3);
    println!("equality case f = y1:");
    println!("  lhs = {:.10}  rhs = {:.10}  gap = {:.3e}", eq.lhs, eq.rhs, (eq.lhs - eq.rhs).abs());
    println!("  exact value is 1/12 = {:.10}", 1.0 / 12.0);

    println!("\nrandom band-limited samples:");
    println!("{:>6} {:>14} {:>14} {:>8}", "seed", "lhs", "rhs", "holds");
    let mut all_hold = true;
    for seed in 0..8u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = band_limited_field(n1, n2, n3, &mut rng);
        let chk = poincare_check(&f, n1, n2, n3);
        all_hold &= chk.holds;
        println!("{:>6} {:>14.6e} {:>14.6e} {:>8}", seed, chk.lhs, chk.rhs, chk.holds);
    }
    println!("\nall samples satisfy the inequality: {all_hold}");
}
