use std::f64::consts::PI;

use jjtunnel::model::{self, JunctionConfig};
use proptest::prelude::*;

fn undamped(omega0: f64) -> JunctionConfig {
    let mut cfg = JunctionConfig::with_bias(0.95).unwrap();
    cfg.omega0 = omega0;
    cfg.q_damp = f64::INFINITY;
    cfg
}

/// The closed-form rate written out directly.
fn cl_oracle(i: f64, omega0: f64, q_damp: f64) -> f64 {
    let omega_p = omega0 * (1.0 - i * i).powf(0.25);
    let delta_u = 2.0 * ((1.0 - i * i).sqrt() - i * i.acos());
    let x = 7.2 * delta_u / omega_p;
    omega_p / (2.0 * PI) * (120.0 * PI * x).sqrt() * (-x * (1.0 + 0.87 / q_damp)).exp()
}

#[test]
fn cl_rate_spot_values() {
    let cfg = undamped(0.0183);
    let at_096 = model::caldeira_leggett_rate(0.96, &cfg).unwrap();
    assert!((at_096 / 1.33e-6 - 1.0).abs() < 0.01, "{at_096:e}");
    // High-precision evaluation of the same closed form gives 4.93614e-4.
    let at_098 = model::caldeira_leggett_rate(0.98, &cfg).unwrap();
    assert!((at_098 / 4.936139235e-4 - 1.0).abs() < 1e-8, "{at_098:e}");
}

#[test]
fn cl_rate_rises_to_a_maximum_just_below_critical_current() {
    // The closed form increases until the √(ΔU/ω_p) prefactor takes over
    // near I ≈ 0.9955 and decreases from there to I = 1.
    let cfg = JunctionConfig::with_bias(0.95).unwrap();
    let rate = |i: f64| model::caldeira_leggett_rate(i, &cfg).unwrap();
    let grid: Vec<f64> = (0..50).map(|k| 0.9 + 0.095 * k as f64 / 49.0).collect();
    assert!(grid.windows(2).all(|w| rate(w[1]) > rate(w[0])));
    let (peak, _) = (0..=4000)
        .map(|k| 0.99 + 0.009 * k as f64 / 4000.0)
        .map(|i| (i, rate(i)))
        .fold((0.0, 0.0), |best, (i, r)| if r > best.1 { (i, r) } else { best });
    let oracle_peak = (0..=4000)
        .map(|k| 0.99 + 0.009 * k as f64 / 4000.0)
        .map(|i| (i, cl_oracle(i, cfg.omega0, cfg.q_damp)))
        .fold((0.0, 0.0), |best, (i, r)| if r > best.1 { (i, r) } else { best })
        .0;
    assert_eq!(peak, oracle_peak);
    assert!(peak > 0.995 && peak < 0.997);
    assert!(rate(0.999) < rate(peak));
}

#[test]
fn cl_rate_has_no_jumps() {
    let cfg = JunctionConfig::with_bias(0.95).unwrap();
    for k in 0..2000 {
        let i = 0.5 + 0.499 * k as f64 / 2000.0;
        let step = model::caldeira_leggett_rate(i + 1e-5, &cfg).unwrap() / model::caldeira_leggett_rate(i, &cfg).unwrap();
        let oracle = cl_oracle(i + 1e-5, cfg.omega0, cfg.q_damp) / cl_oracle(i, cfg.omega0, cfg.q_damp);
        assert!((step - 1.0).abs() < 1e-2, "I = {i}");
        assert!((step / oracle - 1.0).abs() < 1e-9, "I = {i}");
    }
}

proptest! {
    #[test]
    fn cl_rate_matches_closed_form(i in 0.5f64..0.999, omega0 in 1e-3f64..0.1, q_damp in 1.0f64..1e6) {
        let mut cfg = undamped(omega0);
        cfg.q_damp = q_damp;
        let ours = model::caldeira_leggett_rate(i, &cfg).unwrap();
        let oracle = cl_oracle(i, omega0, q_damp);
        prop_assert!((ours - oracle).abs() <= 1e-10 * oracle.abs() + 1e-300);
    }

    #[test]
    fn barrier_height_equals_extrema_difference(i in 1e-3f64..0.9999) {
        let (phi_min, phi_top) = model::well_extrema(i).unwrap();
        let difference = model::tilted_washboard(phi_top, i) - model::tilted_washboard(phi_min, i);
        let height = model::barrier_height(i).unwrap();
        prop_assert!((difference - height).abs() <= 1e-10 * height + 1e-15);
    }

    #[test]
    fn turning_point_lies_beyond_the_top(i in 0.05f64..0.995, fraction in 0.01f64..0.99) {
        let (phi_min, phi_top) = model::well_extrema(i).unwrap();
        let u_min = model::tilted_washboard(phi_min, i);
        let energy = u_min + fraction * model::barrier_height(i).unwrap();
        let turn = model::outer_turning_point(i, energy).unwrap();
        prop_assert!(turn > phi_top);
        prop_assert!((model::tilted_washboard(turn, i) - energy).abs() < 1e-10);
    }

    #[test]
    fn frequencies_are_ordered(i in 0.01f64..0.99, omega0 in 1e-3f64..0.1) {
        let omega_p = model::plasma_frequency(i, omega0).unwrap();
        let omega01 = model::resonance_frequency(i, omega0).unwrap();
        prop_assert!(omega01 < omega_p && omega_p < omega0);
    }
}
