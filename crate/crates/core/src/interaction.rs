//! Interaction integrals between a layer and a neighbour at distance `T`.
//!
//! ```text
//! I+(T) = ∫ [W''(g(t)) - 1] [g(T - t) - 1] g'(t) dt   ~  2 A₁² e^{-T}
//! I-(T) = ∫ [W''(g(t)) - 1] [g(-t - T) + 1] g'(t) dt  ~ -2 A₋₁² e^{-T}
//! ```
//!
//! The shifted factor is taken from the profile's tail expansion, so the
//! integrand keeps relative precision even though it is exponentially small.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::exec;
use crate::profile1d::Profile;
use crate::quadrature::GaussLegendre;

/// Smallest admissible separation.
pub const MIN_SEPARATION: f64 = 5.0;
/// Profile range required beyond the separation.
pub const RANGE_MARGIN: f64 = 15.0;

const REL_TOL: f64 = 1e-12;
const LEFT_REACH: f64 = 20.0;
const RIGHT_REACH: f64 = 25.0;
const GL_ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Neighbour above: the `g(T - t) - 1` integral.
    Plus,
    /// Neighbour below: the `g(-t - T) + 1` integral.
    Minus,
}

fn check(pr: &Profile, t: f64) -> Result<()> {
    if !(t >= MIN_SEPARATION) {
        return Err(LabError::Precondition(format!("separation {t} below {MIN_SEPARATION}")));
    }
    if pr.t_max() < t + RANGE_MARGIN {
        return Err(LabError::ProfileRangeTooShort { needed: t + RANGE_MARGIN, have: pr.t_max() });
    }
    Ok(())
}

/// The integrand at `t`.
pub fn integrand(pr: &Profile, sep: f64, side: Side, t: f64) -> f64 {
    let d = pr.eval(t);
    let w = pr.potential.d2(d.g) - 1.0;
    let shifted = match side {
        Side::Plus => -pr.one_minus_g(sep - t),
        Side::Minus => pr.one_plus_g(-t - sep),
    };
    w * shifted * d.g1
}

/// Composite Gauss-Legendre with `panels` equal panels over the window
/// where the integrand is not negligible.
pub fn integrate_panels(pr: &Profile, sep: f64, side: Side, panels: usize) -> f64 {
    let (a, b) = match side {
        Side::Plus => (-LEFT_REACH, sep + RIGHT_REACH),
        Side::Minus => (-sep - RIGHT_REACH, LEFT_REACH),
    };
    GaussLegendre::new(GL_ORDER).composite(a, b, panels, |t| integrand(pr, sep, side, t))
}

fn integrate(pr: &Profile, sep: f64, side: Side) -> Result<f64> {
    check(pr, sep)?;
    let mut panels = 32;
    let mut prev = integrate_panels(pr, sep, side, panels);
    while panels < 1 << 14 {
        panels *= 2;
        let next = integrate_panels(pr, sep, side, panels);
        if (next - prev).abs() <= REL_TOL * next.abs() {
            return Ok(next);
        }
        prev = next;
    }
    Err(LabError::NoConvergence(format!("interaction quadrature at T = {sep}")))
}

pub fn interaction_integral_plus(pr: &Profile, sep: f64) -> Result<f64> {
    integrate(pr, sep, Side::Plus)
}

pub fn interaction_integral_minus(pr: &Profile, sep: f64) -> Result<f64> {
    integrate(pr, sep, Side::Minus)
}

#[derive(Debug, Clone, Serialize)]
pub struct InteractionCurve {
    pub t_values: Vec<f64>,
    pub i_plus: Vec<f64>,
    pub i_minus: Vec<f64>,
    pub fitted_coeff: Option<f64>,
    pub fitted_correction_rate: Option<f64>,
}

/// Both integrals at every separation, evaluated in parallel.
pub fn interaction_curve(pr: &Profile, t_values: &[f64]) -> Result<InteractionCurve> {
    let rows = exec::map(t_values, |&t| -> Result<(f64, f64)> {
        Ok((interaction_integral_plus(pr, t)?, interaction_integral_minus(pr, t)?))
    });
    let mut i_plus = Vec::with_capacity(rows.len());
    let mut i_minus = Vec::with_capacity(rows.len());
    for r in rows {
        let (p, m) = r?;
        i_plus.push(p);
        i_minus.push(m);
    }
    Ok(InteractionCurve {
        t_values: t_values.to_vec(),
        i_plus,
        i_minus,
        fitted_coeff: None,
        fitted_correction_rate: None,
    })
}

/// Least squares `y ≈ c0 + c1 x`; returns `(c0, c1, residual sum of squares)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let c1 = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c0 = my - c1 * mx;
    let rss = x.iter().zip(y).map(|(a, b)| (b - c0 - c1 * a).powi(2)).sum();
    (c0, c1, rss)
}

/// Fit `e^T I+(T) = c0 + c1 e^{-T/3}` for the leading coefficient, and the
/// free-rate model `c0 + c1 e^{-ρT}` for the remainder rate `ρ`.
///
/// The rate is `None` when the data carry no visible remainder.
pub fn fit_asymptotics(curve: &InteractionCurve) -> Result<(f64, Option<f64>)> {
    let ts = &curve.t_values;
    if ts.len() < 4 {
        return Err(LabError::IllConditionedFit(format!("{} separations, need 4", ts.len())));
    }
    let lo = ts.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 6.0 {
        return Err(LabError::IllConditionedFit(format!("separation span {} below 6", hi - lo)));
    }
    let y: Vec<f64> = ts.iter().zip(&curve.i_plus).map(|(t, i)| t.exp() * i).collect();
    let basis = |rho: f64| ts.iter().map(|t| (-rho * t).exp()).collect::<Vec<_>>();
    let (c0, _, _) = linear_fit(&basis(1.0 / 3.0), &y);

    let spread = y.iter().map(|v| (v - c0).abs()).fold(0.0, f64::max);
    if spread <= 1e-12 * c0.abs().max(1e-300) {
        return Ok((c0, None));
    }
    let rss = |rho: f64| linear_fit(&basis(rho), &y).2;
    // coarse scan then golden section on the best bracket
    let grid: Vec<f64> = (1..=300).map(|k| k as f64 * 0.01).collect();
    let best = grid.iter().enumerate().min_by(|a, b| rss(*a.1).total_cmp(&rss(*b.1))).map(|(k, _)| k).unwrap();
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(grid.len() - 1)];
    let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if rss(x1) < rss(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    Ok((c0, Some(0.5 * (a + b))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::make_quartic;
    use crate::profile1d::solve_profile;

    /// Closed-form integrand for the quartic profile, trapezoid rule.
    fn oracle_plus(sep: f64) -> f64 {
        let n = 200_000;
        let (a, b) = (-40.0, sep + 40.0);
        let h = (b - a) / n as f64;
        let f = |t: f64| {
            let s = 1.0 / (t / 2.0).cosh();
            1.5 * s.powi(4) / (1.0 + (sep - t).exp())
        };
        (0..=n).map(|k| f(a + h * k as f64) * if k == 0 || k == n { 0.5 } else { 1.0 }).sum::<f64>() * h
    }

    fn profile() -> Profile {
        solve_profile(&make_quartic(), 40.0, 16001).unwrap()
    }

    #[test]
    fn agrees_with_closed_form_oracle() {
        let pr = profile();
        for sep in [8.0, 15.0, 22.0] {
            let got = interaction_integral_plus(&pr, sep).unwrap();
            let want = oracle_plus(sep);
            assert!(((got - want) / want).abs() < 1e-9, "T={sep}: {got} vs {want}");
        }
    }

    #[test]
    fn leading_term_and_symmetry() {
        let pr = profile();
        let ip = interaction_integral_plus(&pr, 15.0).unwrap();
        let im = interaction_integral_minus(&pr, 15.0).unwrap();
        let lead = 8.0 * (-15.0_f64).exp();
        assert!((ip / lead - 1.0).abs() <= 2.0 * (-5.0_f64).exp());
        assert!(((im + ip) / ip).abs() < 1e-10);
        let r = interaction_integral_plus(&pr, 21.0).unwrap() / interaction_integral_plus(&pr, 20.0).unwrap();
        assert!((r - (-1.0_f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn monotone_decay() {
        let pr = profile();
        let vals: Vec<f64> =
            [8.0, 10.0, 12.0, 14.0, 16.0].iter().map(|&t| interaction_integral_plus(&pr, t).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
    }

    #[test]
    fn halving_the_panels_is_stable() {
        let pr = profile();
        let a = integrate_panels(&pr, 12.0, Side::Plus, 256);
        let b = integrate_panels(&pr, 12.0, Side::Plus, 512);
        assert!(((a - b) / b).abs() <= 1e-10);
    }

    #[test]
    fn range_and_separation_checks() {
        let pr = solve_profile(&make_quartic(), 25.0, 5001).unwrap();
        assert!(matches!(interaction_integral_plus(&pr, 12.0), Err(LabError::ProfileRangeTooShort { .. })));
        assert!(interaction_integral_plus(&pr, 4.0).is_err());
    }

    fn synthetic(f: impl Fn(f64) -> f64, ts: &[f64]) -> InteractionCurve {
        InteractionCurve {
            t_values: ts.to_vec(),
            i_plus: ts.iter().map(|&t| f(t)).collect(),
            i_minus: ts.iter().map(|&t| -f(t)).collect(),
            fitted_coeff: None,
            fitted_correction_rate: None,
        }
    }

    #[test]
    fn fit_on_synthetic_data() {
        let ts = [10.0, 12.0, 14.0, 16.0];
        let (c, rate) = fit_asymptotics(&synthetic(|t| 8.0 * (-t).exp(), &ts)).unwrap();
        assert!((c - 8.0).abs() < 1e-12);
        assert!(rate.is_none());
        let ts = [2.0, 4.0, 6.0, 8.0, 10.0];
        let (c, rate) =
            fit_asymptotics(&synthetic(|t| 8.0 * (-t).exp() + (-4.0 * t / 3.0).exp(), &ts)).unwrap();
        assert!((c - 8.0).abs() < 1e-9);
        assert!((rate.unwrap() - 1.0 / 3.0).abs() < 0.05);
        assert!(fit_asymptotics(&synthetic(|t| (-t).exp(), &[10.0, 11.0, 12.0, 13.0])).is_err());
        assert!(fit_asymptotics(&synthetic(|t| (-t).exp(), &[10.0, 16.0, 20.0])).is_err());
    }

    #[test]
    fn fit_on_quartic_curve() {
        let pr = profile();
        let curve = interaction_curve(&pr, &[8.0, 10.0, 12.0, 14.0, 16.0]).unwrap();
        let (c, rate) = fit_asymptotics(&curve).unwrap();
        assert!((c - 8.0).abs() < 0.02, "{c}");
        let rate = rate.unwrap();
        assert!((1.0 / 3.0 - 0.1..=1.0).contains(&rate), "{rate}");
    }
}
