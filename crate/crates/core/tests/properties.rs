use proptest::prelude::*;

use layerlab::allencahn2d::{extract_levelset, solve_newton, two_layer_initial, LayerBox, NewtonOptions, ScalarField2D};
use layerlab::harness::output::{fmt_f64, Table};
use layerlab::harness::{fit_scaling, Model, ScenarioConfig};
use layerlab::potential::make_quartic;
use layerlab::profile1d::{solve_profile, truncate, Profile};
use layerlab::stability::{quadratic_form, sz_form};
use std::sync::OnceLock;

fn profile() -> &'static Profile {
    static P: OnceLock<Profile> = OnceLock::new();
    P.get_or_init(|| solve_profile(&make_quartic(), 40.0, 8001).unwrap())
}

fn small_field(shift: f64) -> ScalarField2D {
    ScalarField2D::on_box(-2.0, 2.0, -6.0, 6.0, 0.2, move |x, y| (0.5 * (y - shift - 0.1 * x)).tanh())
}

fn interior_function(u: &ScalarField2D, seed: &[f64]) -> Vec<f64> {
    let mut phi = vec![0.0; u.nx * u.ny];
    for j in 1..u.ny - 1 {
        for i in 1..u.nx - 1 {
            phi[u.idx(i, j)] = seed[(i * 7 + j * 13) % seed.len()];
        }
    }
    phi
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quadratic_forms_are_homogeneous(seed in prop::collection::vec(-1.0f64..1.0, 8), s in -3.0f64..3.0) {
        let u = small_field(0.3);
        let p = make_quartic();
        let phi = interior_function(&u, &seed);
        let scaled: Vec<f64> = phi.iter().map(|v| s * v).collect();
        let (q1, q2) = (quadratic_form(&u, &p, &phi), quadratic_form(&u, &p, &scaled));
        prop_assert!((q2 - s * s * q1).abs() <= 1e-10 * (1.0 + q1.abs()));
        let (z1, z2) = (sz_form(&u, &phi).unwrap(), sz_form(&u, &scaled).unwrap());
        prop_assert!((z2 - s * s * z1).abs() <= 1e-10 * (1.0 + z1.abs()));
    }

    #[test]
    fn level_sets_follow_translations(shift in -2.0f64..2.0) {
        let u = ScalarField2D::on_box(-2.0, 2.0, -8.0, 8.0, 0.1, move |_, y| (0.5 * (y - shift)).tanh());
        let graphs = extract_levelset(&u, 0.0).unwrap();
        prop_assert_eq!(graphs.len(), 1);
        prop_assert!(graphs[0].f_values.iter().all(|f| (f - shift).abs() < 1e-4));
    }

    #[test]
    fn level_sets_are_ordered(gap in 5.0f64..9.0, lift in -1.0f64..1.0) {
        let u = ScalarField2D::on_box(-2.0, 2.0, -16.0, 16.0, 0.1, move |_, y| {
            (0.5 * (y - lift + gap)).tanh() - (0.5 * (y - lift)).tanh() + (0.5 * (y - lift - gap)).tanh()
        });
        let graphs = extract_levelset(&u, 0.0).unwrap();
        prop_assert_eq!(graphs.len(), 3);
        for w in graphs.windows(2) {
            prop_assert!(w[0].f_values.iter().zip(&w[1].f_values).all(|(a, b)| a < b));
            prop_assert_eq!(w[0].orientation, -w[1].orientation);
        }
    }

    #[test]
    fn profile_is_odd_and_truncation_exact_inside(t in -12.0f64..12.0) {
        let pr = profile();
        prop_assert!((pr.value(t) + pr.value(-t)).abs() < 1e-12);
        let tp = truncate(pr, 1e-3).unwrap();
        if t.abs() <= tp.inner {
            prop_assert_eq!(tp.gbar(t), pr.value(t));
        }
    }

    #[test]
    fn doubles_round_trip(v in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn power_laws_are_recovered(p in 0.5f64..4.0, c in 0.1f64..10.0) {
        let eps: Vec<f64> = (1..=6).map(|k| 0.5f64.powi(k)).collect();
        let y: Vec<f64> = eps.iter().map(|e| c * e.powf(p)).collect();
        let f = fit_scaling(&eps, &y, Model::PowerLaw).unwrap();
        prop_assert!((f.p - p).abs() < 1e-9 && (f.log_c - c.ln()).abs() < 1e-8);
    }

    #[test]
    fn csv_rendering_is_deterministic(vals in prop::collection::vec(-1e6f64..1e6, 1..20), seed in any::<u64>()) {
        let cfg = ScenarioConfig { seed, ..ScenarioConfig::default() };
        let mut t = Table::new(&["k", "v"]);
        for (k, v) in vals.iter().enumerate() {
            t.push(vec![k.into(), (*v).into()]);
        }
        let prov = cfg.hash();
        prop_assert_eq!(t.render(&prov).unwrap(), t.render(&cfg.clone().hash()).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn newton_energy_never_increases(gap in 9.0f64..13.0, h in prop::sample::select(vec![0.25, 0.4])) {
        let init = two_layer_initial(profile(), gap, LayerBox { half_width: 3.0, margin: 8.0, h });
        let out = solve_newton(&init, &make_quartic(), &NewtonOptions::default()).unwrap();
        prop_assert!(out.residual <= 1e-9);
        for w in out.energy.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
        }
    }
}
