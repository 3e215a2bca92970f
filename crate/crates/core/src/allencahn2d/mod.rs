//! `Δu = W'(u)` on rectangles: Newton solves, level-set graphs, curvature
//! and the stability of the solutions.

pub mod field;
pub mod levelset;
pub mod newton;
pub mod stability;
pub mod sz;

pub use field::{layered_value, Boundary, FieldHeader, Layer, ScalarField2D};
pub use levelset::{curvature, extract_levelset, CurvatureSamples, InterfaceGraph};
pub use newton::{discrete_energy, residual_field, residual_norm, solve_newton, NewtonOptions, NewtonOutcome};
pub use stability::{smallest_eigenvalue, stability_check, StabilityResult, STABILITY_TOL};
pub use sz::{sz_curvature_term, SzField, SzSample, DEFAULT_BAND};

use crate::profile1d::Profile;

/// Box geometry for layered solutions: `|x| <= half_width`, and `y` from
/// `margin` below the lowest layer to `margin` above the highest.
#[derive(Debug, Clone, Copy)]
pub struct LayerBox {
    pub half_width: f64,
    pub margin: f64,
    pub h: f64,
}

impl Default for LayerBox {
    fn default() -> Self {
        Self { half_width: 10.0, margin: 12.0, h: 0.2 }
    }
}

/// Alternating layers at `centers` (ascending), the lowest one increasing.
pub fn alternating_layers(centers: &[f64]) -> Vec<Layer> {
    centers
        .iter()
        .enumerate()
        .map(|(k, &c)| Layer { center: c, orientation: if k % 2 == 0 { 1.0 } else { -1.0 } })
        .collect()
}

/// Superposed layers sampled on the box; the boundary ring is the Dirichlet
/// data.
pub fn layered_initial(profile: &Profile, layers: &[Layer], geom: LayerBox) -> ScalarField2D {
    let lo = layers.iter().map(|l| l.center).fold(f64::INFINITY, f64::min);
    let hi = layers.iter().map(|l| l.center).fold(f64::NEG_INFINITY, f64::max);
    ScalarField2D::layered(
        profile,
        layers,
        (-geom.half_width, geom.half_width),
        (lo - geom.margin, hi + geom.margin),
        geom.h,
    )
}

/// Two facing layers at `y = ±gap/2`.
pub fn two_layer_initial(profile: &Profile, gap: f64, geom: LayerBox) -> ScalarField2D {
    layered_initial(profile, &alternating_layers(&[-0.5 * gap, 0.5 * gap]), geom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::make_quartic;
    use crate::profile1d::solve_profile;

    fn profile() -> Profile {
        solve_profile(&make_quartic(), 40.0, 8001).unwrap()
    }

    fn flat_error(pr: &Profile, h: f64) -> (f64, f64) {
        let geom = LayerBox { half_width: 0.4, margin: 12.0, h };
        let init = layered_initial(pr, &alternating_layers(&[0.0]), geom);
        let out = solve_newton(&init, &make_quartic(), &NewtonOptions { tol: 1e-11, max_iter: 50 }).unwrap();
        let u = &out.field;
        let err = u.values.iter().enumerate().fold(0.0_f64, |m, (k, v)| m.max((v - init.values[k]).abs()));
        let f = extract_levelset(u, 0.5).unwrap()[0].f_values[2];
        (err, f)
    }

    #[test]
    fn flat_layer_is_a_fixed_point_up_to_h2() {
        let pr = profile();
        let (e1, f1) = flat_error(&pr, 0.2);
        let (e2, f2) = flat_error(&pr, 0.1);
        let (e3, f3) = flat_error(&pr, 0.05);
        assert!(e3 < 2e-4, "{e3}");
        let r = e2 / e3;
        assert!((3.5..=4.5).contains(&r), "error ratio {r} ({e1} {e2} {e3})");
        let rf = (f1 - f2) / (f2 - f3);
        assert!((3.5..=4.5).contains(&rf), "level-set ratio {rf}");
    }

    #[test]
    fn two_layers_converge_and_are_stable() {
        let pr = profile();
        let p = make_quartic();
        let init = two_layer_initial(&pr, 14.0, LayerBox::default());
        let out = solve_newton(&init, &p, &NewtonOptions::default()).unwrap();
        assert!(out.residual <= 1e-9);
        assert!(out.energy.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs()));
        let g = extract_levelset(&out.field, 0.0).unwrap();
        assert_eq!(g.len(), 2);
        let gap = g[1].f_values[g[1].len() / 2] - g[0].f_values[g[0].len() / 2];
        assert!((gap - 14.0).abs() < 0.5, "{gap}");
        assert!(out.field.values.iter().all(|v| v.abs() < 1.0));
        let st = stability_check(&out.field, &p).unwrap();
        assert!(st.stable, "{}", st.min_eigenvalue);
    }

    #[test]
    fn positive_boundary_data_gives_positive_solution() {
        let p = make_quartic();
        let init = ScalarField2D::on_box(-6.0, 6.0, -6.0, 6.0, 0.2, |x, y| {
            if x.abs() > 5.999 || y.abs() > 5.999 {
                0.99
            } else {
                0.0
            }
        });
        let out = solve_newton(&init, &p, &NewtonOptions::default()).unwrap();
        assert!(out.field.values.iter().all(|v| *v > 0.9));
        assert!(out.flow_steps > 0);
    }

    #[test]
    fn rejects_bad_input() {
        let p = make_quartic();
        let u = ScalarField2D::on_box(0.0, 1.0, 0.0, 1.0, 0.25, |_, _| 1.5);
        assert!(solve_newton(&u, &p, &NewtonOptions::default()).is_err());
        let u = ScalarField2D::on_box(-3.0, 3.0, -3.0, 3.0, 0.25, |x, _| if x.abs() > 2.99 { 0.99 } else { 0.0 });
        let r = solve_newton(&u, &p, &NewtonOptions { tol: 1e-12, max_iter: 1 });
        assert!(matches!(r, Err(crate::LabError::MaxIterExceeded { .. })));
    }
}
