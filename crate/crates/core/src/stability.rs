//! The Sternberg–Zumbrun form and the two sides of the reduced stability
//! inequality for layered solutions.

use serde::Serialize;

use crate::allencahn2d::sz::{b_squared_at, jet, MIN_GRADIENT};
use crate::allencahn2d::ScalarField2D;
use crate::error::{LabError, Result};
use crate::exec;
use crate::potential::Potential;
use crate::quadrature::GaussLegendre;
use crate::reduction::optimal::lenient_projection;
use crate::reduction::residual::interaction_coefficients;
use crate::reduction::{FermiFrame, OptimalH};
use crate::profile1d::{Profile, TruncatedProfile};

/// `∫|∇η|²|∇u|² - ∫η²|B|²|∇u|²` by the nodal rule over interior points;
/// `η` is a grid function vanishing on the boundary ring.
pub fn sz_form(u: &ScalarField2D, eta: &[f64]) -> Result<f64> {
    if eta.len() != u.nx * u.ny {
        return Err(LabError::Precondition("test function does not match the grid".into()));
    }
    let rows = exec::map_range(u.ny, |j| {
        if j == 0 || j + 1 == u.ny {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 1..u.nx - 1 {
            let k = u.idx(i, j);
            let ([ux, uy], _) = jet(u, i, j);
            let g2 = ux * ux + uy * uy;
            let ex = (eta[k + 1] - eta[k - 1]) / (2.0 * u.hx);
            let ey = (eta[k + u.nx] - eta[k - u.nx]) / (2.0 * u.hy);
            acc += (ex * ex + ey * ey) * g2;
            if g2.sqrt() >= MIN_GRADIENT {
                if let Some(b2) = b_squared_at(u, i, j) {
                    acc -= eta[k] * eta[k] * b2 * g2;
                }
            }
        }
        acc
    });
    Ok(rows.iter().sum::<f64>() * u.hx * u.hy)
}

/// `∫(|∇φ|² + W''(u) φ²)` in the discrete form matching `-Δ_h + W''(u)`:
/// edge differences, Dirichlet zero on the boundary ring.
pub fn quadratic_form(u: &ScalarField2D, p: &Potential, phi: &[f64]) -> f64 {
    let v = |i: usize, j: usize| if u.is_boundary(i, j) { 0.0 } else { phi[u.idx(i, j)] };
    let rows = exec::map_range(u.ny, |j| {
        let mut acc = 0.0;
        for i in 0..u.nx {
            let c = v(i, j);
            if i + 1 < u.nx {
                let d = (v(i + 1, j) - c) / u.hx;
                acc += d * d;
            }
            if j + 1 < u.ny {
                let d = (v(i, j + 1) - c) / u.hy;
                acc += d * d;
            }
            acc += p.d2(u.at(i, j)) * c * c;
        }
        acc
    });
    rows.iter().sum::<f64>() * u.hx * u.hy
}

/// Test functions along an interface, in its graph parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eta {
    Zero,
    Constant(f64),
    /// `amplitude (1 - ((s - center)/radius)²)⁴` inside the radius.
    Bump { center: f64, radius: f64, amplitude: f64 },
}

impl Eta {
    pub fn value(&self, s: f64) -> f64 {
        self.eval(s).0
    }

    /// Value and derivative.
    pub fn eval(&self, s: f64) -> (f64, f64) {
        match *self {
            Eta::Zero => (0.0, 0.0),
            Eta::Constant(c) => (c, 0.0),
            Eta::Bump { center, radius, amplitude } => {
                let q = (s - center) / radius;
                if q.abs() >= 1.0 {
                    return (0.0, 0.0);
                }
                let b = 1.0 - q * q;
                (amplitude * b.powi(4), amplitude * 4.0 * b.powi(3) * (-2.0 * q / radius))
            }
        }
    }

    pub fn scaled(&self, k: f64) -> Eta {
        match *self {
            Eta::Zero => Eta::Zero,
            Eta::Constant(c) => Eta::Constant(k * c),
            Eta::Bump { center, radius, amplitude } => Eta::Bump { center, radius, amplitude: k * amplitude },
        }
    }

    pub fn negated(&self) -> Eta {
        self.scaled(-1.0)
    }
}

/// `φ = Σ_α η_α(Π_α X) ḡ'(o_α (d_α - h_α))` on the grid, zero on the
/// boundary ring.
pub fn composite_test_function(
    u: &ScalarField2D,
    frames: &[FermiFrame],
    shifts: &OptimalH,
    pr: &TruncatedProfile,
    etas: &[Eta],
) -> Result<Vec<f64>> {
    if etas.len() != frames.len() {
        return Err(LabError::Precondition(format!("{} test functions for {} interfaces", etas.len(), frames.len())));
    }
    let hs = shifts.splines(frames)?;
    let results: Vec<Result<Vec<f64>>> = exec::map_range(u.ny, |j| {
        let mut row = vec![0.0; u.nx];
        if j == 0 || j + 1 == u.ny {
            return Ok(row);
        }
        for (i, out) in row.iter_mut().enumerate().take(u.nx - 1).skip(1) {
            let (x, y) = (u.x(i), u.y(j));
            for (a, fr) in frames.iter().enumerate() {
                if etas[a] == Eta::Zero {
                    continue;
                }
                let Some(p) = fr.project(x, y) else {
                    // the footprint of η_α reaches past the end of Γ_α
                    let s = x.clamp(fr.spline.x_range().0, fr.spline.x_range().1);
                    if etas[a].value(s) != 0.0 {
                        return Err(LabError::BandExceeded(format!("interface {} at ({x}, {y})", a + 1)));
                    }
                    continue;
                };
                let t = fr.orientation() * (p.d - hs[a].eval(p.s).0);
                *out += etas[a].value(p.s) * pr.derivs(t).g1;
            }
        }
        Ok(row)
    });
    let mut phi = Vec::with_capacity(u.nx * u.ny);
    for r in results {
        phi.extend(r?);
    }
    Ok(phi)
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityFormReport {
    pub label: String,
    /// `Σ_α ∫|∇_{α,0} η_α|² dA`.
    pub lhs_tangential: f64,
    /// `Σ_α (2A²/σ₀) ∫ e^{-d_{α-1}} (η_α - η_{α-1}∘Π_{α-1})² dA`.
    pub rhs_interaction: f64,
    /// Same sum paired with the upper neighbour instead.
    pub rhs_interaction_upper: f64,
    pub eta_l2: f64,
    /// The error budget with measured `A` and the separation-scale `ε`.
    pub q_eta_bound: f64,
    /// Discrete `∫(|∇φ|² + W''(u)φ²)` for the composite `φ`.
    pub full_form_value: f64,
    /// `full/σ₀ - (lhs - rhs)`.
    pub discrepancy: f64,
    pub within_budget: bool,
}

const PANEL: f64 = 0.25;

/// Integral over the graph of interface `frame` of `f(s)` against the
/// arclength element.
fn along(frame: &FermiFrame, f: impl Fn(f64, f64) -> f64) -> f64 {
    let (lo, hi) = frame.spline.x_range();
    let gl = GaussLegendre::new(8);
    let panels = ((hi - lo) / PANEL).ceil().max(1.0) as usize;
    gl.composite(lo, hi, panels, |s| {
        let df = frame.spline.eval(s).1;
        let j = (1.0 + df * df).sqrt();
        f(s, j) * j
    })
}

/// Both sides of the reduced inequality, the full form and the budget.
#[allow(clippy::too_many_arguments)]
pub fn reduced_form_sides(
    label: &str,
    u: &ScalarField2D,
    potential: &Potential,
    frames: &[FermiFrame],
    shifts: &OptimalH,
    pr: &TruncatedProfile,
    base: &Profile,
    etas: &[Eta],
    eps_analog: f64,
    amplitude: f64,
) -> Result<StabilityFormReport> {
    let phi = composite_test_function(u, frames, shifts, pr, etas)?;
    let full = quadratic_form(u, potential, &phi);
    let mut lhs = 0.0;
    let mut l2 = 0.0;
    let mut rhs = 0.0;
    let mut rhs_up = 0.0;
    for (a, fr) in frames.iter().enumerate() {
        let eta = etas[a];
        // |∇_{Γ} η|² = η'(s)² / (1 + f'²)
        lhs += along(fr, |s, j| eta.eval(s).1.powi(2) / (j * j));
        l2 += along(fr, |s, _| eta.value(s).powi(2));
        let (c_lo, c_hi) = interaction_coefficients(fr, base, false);
        let pair = |b: usize, coeff: f64| {
            along(fr, |s, _| {
                let (p, _) = fr.point(s);
                let q = lenient_projection(&frames[b], p[0], p[1]);
                coeff * (-q.d.abs()).exp() * (eta.value(s) - etas[b].value(q.s)).powi(2)
            })
        };
        if a > 0 {
            rhs += pair(a - 1, c_lo);
        }
        if a + 1 < frames.len() {
            rhs_up += pair(a + 1, c_hi);
        }
    }
    let q_eta_bound = (eps_analog.powf(0.25) + amplitude.sqrt()) * lhs
        + (eps_analog.powi(2) + amplitude.powf(1.5) + eps_analog.powf(1.0 / 7.0) * amplitude) * l2;
    let discrepancy = full / base.sigma0 - (lhs - rhs);
    Ok(StabilityFormReport {
        label: label.to_string(),
        lhs_tangential: lhs,
        rhs_interaction: rhs,
        rhs_interaction_upper: rhs_up,
        eta_l2: l2,
        q_eta_bound,
        full_form_value: full,
        discrepancy,
        within_budget: discrepancy.abs() <= q_eta_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allencahn2d::InterfaceGraph;
    use crate::potential::make_quartic;
    use crate::profile1d::{solve_profile, truncate};
    use crate::quadrature::adaptive_simpson;
    use crate::reduction::fermi_frame;

    fn profile() -> Profile {
        solve_profile(&make_quartic(), 40.0, 8001).unwrap()
    }

    fn flat(y: f64, o: f64, k: usize, lo: f64, hi: f64, n: usize) -> FermiFrame {
        let x: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        fermi_frame(&InterfaceGraph::from_samples(0.0, x, vec![y; n], k, o), 4.0).unwrap()
    }

    #[test]
    fn flat_layer_form_is_the_gradient_term() {
        let pr = profile();
        let u = ScalarField2D::on_box(-8.0, 8.0, -12.0, 12.0, 0.1, |_, y| pr.value(y));
        let eta = u.values.iter().enumerate().map(|(k, _)| {
            let (i, j) = (k % u.nx, k / u.nx);
            if u.is_boundary(i, j) { 0.0 } else { (-(u.x(i).powi(2)) / 4.0).exp() * (u.y(j) / 3.0).cos() }
        });
        let eta: Vec<f64> = eta.collect();
        let v = sz_form(&u, &eta).unwrap();
        let lhs: f64 = (0..u.values.len())
            .filter(|&k| !u.is_boundary(k % u.nx, k / u.nx))
            .map(|k| {
                let (i, j) = (k % u.nx, k / u.nx);
                let ([ux, uy], _) = jet(&u, i, j);
                let ex = (eta[k + 1] - eta[k - 1]) / 0.2;
                let ey = (eta[k + u.nx] - eta[k - u.nx]) / 0.2;
                (ex * ex + ey * ey) * (ux * ux + uy * uy)
            })
            .sum::<f64>()
            * 0.01;
        assert!(v > 0.0 && ((v - lhs) / lhs).abs() < 1e-6);
        assert_eq!(sz_form(&u, &vec![0.0; u.values.len()]).unwrap(), 0.0);
    }

    #[test]
    fn radial_sz_form_matches_radial_quadrature() {
        let pr = profile();
        let h = 0.1;
        let u = ScalarField2D::on_box(-27.0, 27.0, -27.0, 27.0, h, |x, y| pr.value(x.hypot(y) - 20.0));
        let bump = |r: f64| if (r - 20.0).abs() < 5.0 { (1.0 - ((r - 20.0) / 5.0).powi(2)).powi(4) } else { 0.0 };
        let eta: Vec<f64> = (0..u.values.len()).map(|k| bump(u.x(k % u.nx).hypot(u.y(k / u.nx)))).collect();
        let v = sz_form(&u, &eta).unwrap();
        // radial oracle: 2π ∫ (η'² - η²/r²) g'(r - 20)² r dr
        let db = |r: f64| {
            let q = (r - 20.0) / 5.0;
            if q.abs() < 1.0 { 4.0 * (1.0 - q * q).powi(3) * (-2.0 * q / 5.0) } else { 0.0 }
        };
        let f = |r: f64| {
            let g1 = pr.eval(r - 20.0).g1;
            (db(r).powi(2) - bump(r).powi(2) / (r * r)) * g1 * g1 * r
        };
        let want = 2.0 * std::f64::consts::PI * adaptive_simpson(&f, 15.0, 25.0, 1e-12, 40);
        assert!(((v - want) / want).abs() < 0.01, "{v} vs {want}");
    }

    #[test]
    fn composite_and_reduced_sides() {
        let pr = profile();
        let tp = truncate(&pr, 1e-4).unwrap();
        let p = make_quartic();
        let d = 10.0;
        let u = ScalarField2D::on_box(-10.0, 10.0, -17.0, 17.0, 0.1, |_, y| {
            pr.value(y + d / 2.0) + pr.value(d / 2.0 - y) - 1.0
        });
        let frames = vec![flat(-d / 2.0, 1.0, 1, -10.0, 10.0, 201), flat(d / 2.0, -1.0, 2, -10.0, 10.0, 201)];
        let zero = OptimalH { h: vec![vec![0.0; 201]; 2], residual: 0.0, sweeps: 0 };
        let bump = Eta::Bump { center: 0.0, radius: 5.0, amplitude: 1.0 };
        // η ≡ 0 gives φ ≡ 0
        let phi = composite_test_function(&u, &frames, &zero, &tp, &[Eta::Zero, Eta::Zero]).unwrap();
        assert!(phi.iter().all(|v| *v == 0.0));
        // single interface window: the vertical profile derivative
        let phi = composite_test_function(&u, &frames, &zero, &tp, &[Eta::Constant(1.0), Eta::Zero]).unwrap();
        let k = u.idx(50, 120);
        assert!((phi[k] - pr.eval(u.y(120) + d / 2.0).g1).abs() < 1e-12);
        // antisymmetric pair: interaction side has the closed form
        let etas = [bump, bump.negated()];
        let r = reduced_form_sides("pair", &u, &p, &frames, &zero, &tp, &pr, &etas, 1.0 / d, (-d).exp()).unwrap();
        let c = 2.0 * pr.a_minus * pr.a_minus / pr.sigma0;
        let int_b2 = GaussLegendre::new(8).composite(-5.0, 5.0, 40, |s| bump.value(s).powi(2));
        let want = c * 4.0 * (-d).exp() * int_b2;
        assert!(((r.rhs_interaction - want) / want).abs() < 1e-12);
        assert!(((r.rhs_interaction_upper - want) / want).abs() < 1e-12);
        // quadratic homogeneity
        let r2 = reduced_form_sides("pair", &u, &p, &frames, &zero, &tp, &pr, &[bump.scaled(3.0), bump.scaled(-3.0)], 0.1, (-d).exp()).unwrap();
        for (a, b) in [(r.full_form_value, r2.full_form_value), (r.lhs_tangential, r2.lhs_tangential), (r.rhs_interaction, r2.rhs_interaction)] {
            assert!((b - 9.0 * a).abs() < 1e-9 * b.abs().max(1e-12));
        }
        // constant η: no gradient term
        let c1 = reduced_form_sides("const", &u, &p, &frames, &zero, &tp, &pr, &[Eta::Constant(1.0), Eta::Constant(1.0)], 0.1, 0.0).unwrap();
        assert_eq!(c1.lhs_tangential, 0.0);
    }

    #[test]
    fn single_flat_interface_form() {
        let pr = profile();
        let tp = truncate(&pr, 1e-4).unwrap();
        let h = 0.05;
        let u = ScalarField2D::on_box(-8.0, 8.0, -14.0, 14.0, h, |_, y| pr.value(y));
        let frames = vec![flat(0.0, 1.0, 1, -8.0, 8.0, 321)];
        let zero = OptimalH { h: vec![vec![0.0; 321]], residual: 0.0, sweeps: 0 };
        let eta = Eta::Bump { center: 0.0, radius: 5.0, amplitude: 1.0 };
        let r = reduced_form_sides("flat", &u, &make_quartic(), &frames, &zero, &tp, &pr, &[eta], 1e-3, 0.0).unwrap();
        assert_eq!(r.rhs_interaction, 0.0);
        assert!((r.full_form_value / (pr.sigma0 * r.lhs_tangential) - 1.0).abs() < 2e-3, "{:?}", r);
    }

    #[test]
    fn band_exceeded_past_graph_end() {
        let pr = profile();
        let tp = truncate(&pr, 1e-3).unwrap();
        let u = ScalarField2D::on_box(-4.0, 4.0, -4.0, 4.0, 0.2, |_, y| pr.value(y));
        let x: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
        let fr = fermi_frame(&InterfaceGraph::from_samples(0.0, x, (0..21).map(|i| 0.01 * i as f64).collect(), 1, 1.0), 4.0).unwrap();
        let zero = OptimalH { h: vec![vec![0.0; 21]], residual: 0.0, sweeps: 0 };
        let r = composite_test_function(&u, &[fr], &zero, &tp, &[Eta::Constant(1.0)]);
        assert!(matches!(r, Err(LabError::BandExceeded(_))));
    }
}
