//! Property tests across randomized shocks, states, and grids.

mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relaxshock::diagnostics::poincare_check;
use relaxshock::fields::{comp, FieldState, Grid, NCOMP};
use relaxshock::gas::{make_shock, tau_admissible_max};
use relaxshock::profile::{solve_profile, validate_profile};
use relaxshock::runner::{band_limited_field, profile_certificate};
use relaxshock::shift::ShiftState;
use relaxshock::snapshot::{read_snapshot, write_snapshot, SnapshotMeta};
use relaxshock::solver::RelaxSolver;
use relaxshock::{GasModel, RelaxError};

fn any_model(tau: f64) -> impl Strategy<Value = GasModel> {
    (1.2f64..2.4, 0.3f64..2.0, 0.3f64..2.0)
        .prop_map(move |(g, mu, la)| GasModel::new(g, mu, la, tau).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(192))]

    /// Every admissible jump satisfies the conserved-variable jump
    /// conditions, the wave-speed ordering of a compressive 2-shock, and a
    /// positive concave chord gap between the end states.
    #[test]
    fn admissible_shocks_satisfy_jump_and_ordering(
        model in any_model(0.0),
        v_minus in 0.4f64..2.0,
        u1_minus in -1.0f64..1.0,
        ratio in 1.01f64..3.0,
    ) {
        let v_plus = v_minus * ratio;
        let s = make_shock(&model, v_minus, u1_minus, v_plus).unwrap();

        let (mass, momentum) = jump_residuals(&model, &s);
        prop_assert!(mass.abs() < 1e-12, "mass jump residual {mass}");
        prop_assert!(momentum.abs() < 1e-12, "momentum jump residual {momentum}");

        let s2 = s.sigma_star * s.sigma_star;
        prop_assert!(-model.pressure_deriv(s.v_plus) < s2);
        prop_assert!(s2 < -model.pressure_deriv(s.v_minus));
        prop_assert!(s.u1_plus < s.u1_minus);
        prop_assert!(s.delta > 0.0);

        prop_assert!(s.chord_gap(&model, s.v_minus).abs() < 1e-12);
        prop_assert!(s.chord_gap(&model, s.v_plus).abs() < 1e-12);
        prop_assert!(s.chord_gap(&model, 0.5 * (s.v_minus + s.v_plus)) > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Jumps with no compression are not 2-shocks and must be refused.
    #[test]
    fn reversed_jumps_are_rejected(
        model in any_model(0.0),
        v_minus in 0.4f64..2.0,
        ratio in 0.4f64..=1.0,
    ) {
        let got = make_shock(&model, v_minus, 0.0, v_minus * ratio);
        prop_assert!(matches!(got, Err(RelaxError::Admissibility(_))));
    }

    /// The relaxation-time ceiling is positive, capped at one, and keeps
    /// the profile-equation denominator away from zero across the whole
    /// volume interval with a factor-two margin.
    #[test]
    fn tau_ceiling_keeps_the_ode_denominator_positive(
        model in any_model(0.0),
        v_minus in 0.4f64..2.0,
        ratio in 1.01f64..3.0,
    ) {
        let s = make_shock(&model, v_minus, 0.0, v_minus * ratio).unwrap();
        let (tau_max, argmin) = tau_admissible_max(&model, &s);
        prop_assert!(tau_max > 0.0 && tau_max <= 1.0);
        prop_assert!((s.v_minus..=s.v_plus).contains(&argmin));

        let visc = model.long_visc();
        let s2 = s.sigma_star * s.sigma_star;
        for k in 0..=32 {
            let z = s.v_minus + (s.v_plus - s.v_minus) * (k as f64) / 32.0;
            let denom = visc - tau_max * (s2 + model.pressure_deriv(z)).abs();
            prop_assert!(
                denom >= 0.5 * visc * (1.0 - 1e-12),
                "denominator margin lost at z={z}: {denom}"
            );
        }
    }

    /// Inadmissible relaxation times are rejected at config build time.
    #[test]
    fn config_rejects_inadmissible_relaxation_times(factor in 1.05f64..3.0) {
        let model = standard_model(0.0);
        let shock = standard_shock(&model);
        let (tau_max, _) = tau_admissible_max(&model, &shock);
        let mut cfg = base_run_config();
        cfg.tau = tau_max * factor;
        match cfg.build() {
            Err(RelaxError::Admissibility(_)) => {}
            other => prop_assert!(false, "expected admissibility rejection, got {other:?}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Smooth fields vanishing at the slab walls satisfy the weighted slab
    /// inequality on random grids, both for an independent mode sum and for
    /// the crate's own band-limited generator.
    #[test]
    fn random_smooth_fields_respect_the_slab_inequality(
        seed in 0u64..1_000_000,
        n1 in 32usize..96,
        n2 in 1usize..6,
        n3 in 1usize..6,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = vec![0.0; n1 * n2 * n3];
        for a in 1..=3usize {
            let c = rng.gen_range(-1.0..1.0) / (a * a) as f64;
            let m2 = rng.gen_range(0..3usize);
            let ph = rng.gen_range(0.0..std::f64::consts::TAU);
            for k in 0..n3 {
                for j in 0..n2 {
                    let y2 = (j as f64 + 0.5) / n2 as f64;
                    let trans = (std::f64::consts::TAU * m2 as f64 * y2 + ph).cos();
                    for i in 0..n1 {
                        let y1 = (i as f64 + 0.5) / n1 as f64;
                        f[i + n1 * (j + n2 * k)] +=
                            c * (std::f64::consts::PI * a as f64 * y1).sin() * trans;
                    }
                }
            }
        }
        prop_assert!(poincare_check(&f, n1, n2, n3).holds);

        let g = band_limited_field(n1, n2, n3, &mut rng);
        prop_assert!(poincare_check(&g, n1, n2, n3).holds);
    }

    /// A uniform state relaxes its stress by exactly `exp(-v dt / tau)` in
    /// one step while leaving volume and velocity untouched, for random
    /// models, states, and step sizes.
    #[test]
    fn uniform_states_relax_along_the_exact_exponential(
        model in any_model(0.0),
        tau_frac in 0.05f64..1.0,
        v in 0.5f64..2.0,
        u1 in -0.8f64..0.8,
        sigma in -0.8f64..0.8,
        pi_seed in 0u64..1_000_000,
        dt_frac in 0.1f64..0.9,
    ) {
        let model = GasModel::new(model.gamma, model.mu, model.lambda, tau_frac * 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(pi_seed);
        let mut state = [0.0; NCOMP];
        state[comp::V] = v;
        state[comp::U1] = u1;
        state[comp::U2] = rng.gen_range(-0.3..0.3);
        state[comp::U3] = rng.gen_range(-0.3..0.3);
        let p11 = rng.gen_range(-0.01..0.01);
        let p22 = rng.gen_range(-0.01..0.01);
        state[comp::P11] = p11;
        state[comp::P22] = p22;
        state[comp::P33] = -p11 - p22;
        state[comp::P12] = rng.gen_range(-0.01..0.01);
        state[comp::P13] = rng.gen_range(-0.01..0.01);
        state[comp::P23] = rng.gen_range(-0.01..0.01);
        state[comp::PI2] = rng.gen_range(-0.01..0.01);

        let grid = Grid::new(4.0, 32, 1, 1).unwrap();
        let mut solver = RelaxSolver::uniform(model, grid, state, sigma);
        let mut fields = FieldState::new(grid);
        for c in 0..NCOMP {
            fields.comp_mut(c).fill(state[c]);
        }
        let dt = dt_frac * solver.cfl_dt(&fields).unwrap();
        solver.step(&mut fields, dt).unwrap();

        let factor = (-v * dt / model.tau).exp();
        for i in 8..24 {
            for c in [comp::V, comp::U1, comp::U2, comp::U3] {
                prop_assert_eq!(fields.comp(c)[i], state[c]);
            }
            for c in [comp::P11, comp::P22, comp::P33, comp::P12, comp::P13, comp::P23, comp::PI2] {
                let want = state[c] * factor;
                prop_assert!(
                    (fields.comp(c)[i] - want).abs() <= 1e-13 * state[c].abs().max(1e-6),
                    "cell {i} comp {c}"
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Snapshot files reproduce fields, grid, time, and shift metadata
    /// bit for bit through a write-read cycle.
    #[test]
    fn snapshots_round_trip_bitwise(
        seed in 0u64..1_000_000,
        l in 0.5f64..20.0,
        n1 in 16usize..40,
        n2 in 1usize..5,
        n3 in 1usize..5,
    ) {
        let grid = Grid::new(l, n1, n2, n3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fields = FieldState::new(grid);
        fields.t = rng.gen_range(0.0..100.0);
        for c in 0..NCOMP {
            for x in fields.comp_mut(c) {
                *x = rng.gen_range(-3.0..3.0);
            }
        }
        let meta = SnapshotMeta {
            x: rng.gen_range(-5.0..5.0),
            xdot: rng.gen_range(-1.0..1.0),
            extra: vec![("note".into(), rng.gen_range(-1.0..1.0))],
        };

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.bin");
        write_snapshot(&path, &fields, &meta).unwrap();
        let (back, meta_back) = read_snapshot(&path).unwrap();

        prop_assert_eq!(back.grid, grid);
        prop_assert_eq!(back.t.to_bits(), fields.t.to_bits());
        prop_assert_eq!(meta_back, meta);
        for c in 0..NCOMP {
            for (a, b) in back.comp(c).iter().zip(fields.comp(c)) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Random admissible waves produce certified profiles whose weight
    /// function rises monotonically across the layer within its band and
    /// whose fitted tail rates track the frozen linearization at each end.
    #[test]
    fn random_waves_certify_and_track_their_linearization(
        gamma in 1.3f64..2.0,
        mu in 0.4f64..1.6,
        lambda in 0.4f64..1.6,
        v_minus in 0.7f64..1.3,
        ratio in 1.05f64..1.5,
        tau_frac in prop::sample::select(vec![0.0f64, 0.25]),
    ) {
        let dry = GasModel::new(gamma, mu, lambda, 0.0).unwrap();
        let shock = make_shock(&dry, v_minus, 0.0, v_minus * ratio).unwrap();
        let (tau_max, _) = tau_admissible_max(&dry, &shock);
        let model = GasModel::new(gamma, mu, lambda, tau_frac * tau_max).unwrap();
        let table = solve_profile(&model, &shock, 1e-8, 1e-6).unwrap();

        let report = validate_profile(&table);
        prop_assert!(profile_certificate(&report), "{report:?}");

        for (right, fitted) in [(false, report.tail_rate_left), (true, report.tail_rate_right)] {
            let want = tail_rate_closed_form(&model, &shock, right);
            prop_assert!(
                (fitted - want).abs() < 5e-3 * want,
                "tail rate (right={right}): fitted {fitted}, linearized {want}"
            );
        }

        let shift = ShiftState::new(table, None).unwrap();
        let span = 8.0 / report.tail_rate_left.min(report.tail_rate_right).min(1.0);
        let band_top = 1.0 + shift.nu;
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=400 {
            let xi = -span + 2.0 * span * (k as f64) / 400.0;
            let a = shift.weight(xi);
            prop_assert!(a > prev, "weight not increasing at xi={xi}");
            prop_assert!(a >= 1.0 - 1e-12 && a <= band_top * (1.0 + 1e-12));
            let vs = shift.profile.eval_v(xi);
            prop_assert!(vs >= shock.v_minus && vs <= shock.v_plus);
            prev = a;
        }
    }
}
