//! Decay of the interaction amplitude away from a centre, Morrey-type
//! growth of `∫_{B_r} e^{-f}`, and the rescaled Liouville graphs.

use serde::Serialize;

use super::radial::{farina_integral, Kind, RadialLiouville};
use super::toda::TodaState;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct DecayTrace {
    pub r_values: Vec<f64>,
    /// `A(r)`: largest amplitude in the ball of radius `r`.
    pub a_values: Vec<f64>,
    /// Largest amplitude at distance at least `r`.
    pub outward_values: Vec<f64>,
    /// Extra distance past `r` after which the outward amplitude has
    /// halved; `None` when it does not halve inside the domain.
    pub halving_steps: Vec<Option<f64>>,
    /// Local length scale `R_* = a^{-1/2}` of the outward amplitude.
    pub r_star: Vec<f64>,
    /// `r^{3-m} ∫_{B_r} e^{-f}` for radial solutions, empty otherwise.
    pub morrey: Vec<f64>,
}

impl DecayTrace {
    /// `halving_step / R_*` at every radius where the amplitude halves.
    pub fn step_ratios(&self) -> Vec<Option<f64>> {
        self.halving_steps.iter().zip(&self.r_star).map(|(h, r)| h.map(|h| h / r)).collect()
    }
}

/// Smallest `δ ≥ 0` in `[0, reach - r]` with `out(r + δ) <= out(r) / 2`,
/// for nonincreasing `out`.
fn halving_step(out: &dyn Fn(f64) -> f64, r: f64, reach: f64) -> Option<f64> {
    let target = 0.5 * out(r);
    if out(reach) > target {
        return None;
    }
    let (mut lo, mut hi) = (r, reach);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if out(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi - r)
}

/// Amplitude `max_α e^{-(f_{α+1} - f_α)}` of a Toda state, measured from
/// the point `center`.
pub fn toda_decay_experiment(state: &TodaState, center: f64, r_list: &[f64]) -> DecayTrace {
    let x = &state.x_grid;
    let amp = state.amplitude();
    let log_amp: Vec<f64> = amp.iter().map(|a| a.ln()).collect();
    let n = x.len();
    let h = (x[n - 1] - x[0]) / (n - 1) as f64;
    // log-linear interpolation, exact for linear gaps
    let at = |p: f64| -> f64 {
        if p < x[0] || p > x[n - 1] {
            return 0.0;
        }
        let k = (((p - x[0]) / h).floor() as usize).min(n - 2);
        let s = (p - x[k]) / h;
        ((1.0 - s) * log_amp[k] + s * log_amp[k + 1]).exp()
    };
    let reach = (center - x[0]).max(x[n - 1] - center);
    let out = |d: f64| -> f64 {
        let mut best = at(center - d).max(at(center + d));
        for (xi, ai) in x.iter().zip(&amp) {
            if (xi - center).abs() >= d {
                best = best.max(*ai);
            }
        }
        best
    };
    let ball = |r: f64| -> f64 {
        let mut best = at(center);
        for (xi, ai) in x.iter().zip(&amp) {
            if (xi - center).abs() <= r {
                best = best.max(*ai);
            }
        }
        best.max(at(center - r)).max(at(center + r))
    };
    let mut trace = DecayTrace {
        r_values: r_list.to_vec(),
        a_values: vec![],
        outward_values: vec![],
        halving_steps: vec![],
        r_star: vec![],
        morrey: vec![],
    };
    for &r in r_list {
        let o = out(r);
        trace.a_values.push(ball(r));
        trace.outward_values.push(o);
        trace.halving_steps.push(halving_step(&out, r, reach));
        trace.r_star.push(o.powf(-0.5));
    }
    trace
}

/// Same measurements for `V = e^{-f}` of a radial solution centred at the
/// origin, plus the Morrey quantity.
pub fn radial_decay_experiment(sol: &RadialLiouville, r_list: &[f64]) -> Result<DecayTrace> {
    let m = sol.dim_m as f64;
    let reach = sol.r_max();
    let v = |r: f64| sol.v_at(r.max(sol.r_min()));
    let mut trace = DecayTrace {
        r_values: r_list.to_vec(),
        a_values: vec![],
        outward_values: vec![],
        halving_steps: vec![],
        r_star: vec![],
        morrey: vec![],
    };
    for &r in r_list {
        // V is decreasing along the solution, so both maxima are explicit
        trace.a_values.push(v(0.0));
        trace.outward_values.push(v(r));
        trace.halving_steps.push(halving_step(&v, r, reach));
        trace.r_star.push(v(r).powf(-0.5));
        trace.morrey.push(r.powf(3.0 - m) * farina_integral(sol, 0.0, r)?);
    }
    Ok(trace)
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub eps: f64,
    pub dim_m: usize,
    pub r_values: Vec<f64>,
    /// `f_ε(r) = ε f(ε^{-1/2} r) + ε|log ε|`.
    pub upper: Vec<f64>,
    /// `-f_ε(r)`.
    pub lower: Vec<f64>,
    pub hessian_center: f64,
    pub hessian_probe: f64,
    pub ratio: f64,
}

/// Operator norm of the Hessian of a radial function: the larger of the
/// radial `|f''|` and tangential `|f'/r|` eigenvalues.
fn radial_hessian_norm(sol: &RadialLiouville, r: f64) -> f64 {
    if r == 0.0 {
        return sol.eval(0.0).2.abs();
    }
    let (_, fr, frr) = sol.eval(r);
    frr.abs().max((fr / r).abs())
}

/// The pair of graphs `±f_ε` over `0 ≤ |x| ≤ 2`, with the Hessian of `f_ε`
/// at the origin and at `|x| = 1`.
pub fn counterexample_profile(eps: f64, sol: &RadialLiouville) -> Result<CounterexampleReport> {
    if sol.dim_m < 10 || sol.kind != Kind::Smooth {
        return Err(LabError::Precondition("counterexample needs a smooth solution with m >= 10".into()));
    }
    if !(eps > 0.0 && eps < 1.0) || 2.0 / eps.sqrt() > sol.r_max() {
        return Err(LabError::Precondition(format!("eps = {eps} needs the solution out to r = {}", 2.0 / eps.sqrt())));
    }
    let scale = eps.sqrt().recip();
    let shift = eps * eps.ln().abs();
    let r_values: Vec<f64> = (0..=200).map(|k| k as f64 / 100.0).collect();
    let upper: Vec<f64> = r_values.iter().map(|&r| eps * sol.eval(scale * r).0 + shift).collect();
    let lower = upper.iter().map(|v| -v).collect();
    // ∇²f_ε(x) = ∇²f(ε^{-1/2} x)
    let hessian_center = radial_hessian_norm(sol, 0.0);
    let hessian_probe = radial_hessian_norm(sol, scale);
    Ok(CounterexampleReport {
        eps,
        dim_m: sol.dim_m,
        r_values,
        upper,
        lower,
        hessian_center,
        hessian_probe,
        ratio: hessian_center / hessian_probe,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville_toda::{q2_closed_form_roots, singular_profile, solve_radial_liouville, solve_toda_from};

    #[test]
    fn two_component_halving_matches_closed_form() {
        let (c, d, l) = (12.0, 12.0, 40.0);
        let x: Vec<f64> = (0..4001).map(|i| -l + 2.0 * l * i as f64 / 4000.0).collect();
        let (_, beta) = q2_closed_form_roots(c, d, l).unwrap();
        let rho: Vec<f64> = x.iter().map(|&t| (c * (beta * t).cosh().powi(2) / (beta * beta)).ln()).collect();
        let seed = vec![rho.iter().map(|r| -r / 2.0).collect(), rho.iter().map(|r| r / 2.0).collect()];
        let st = solve_toda_from(&x, c, seed).unwrap();
        let tr = toda_decay_experiment(&st, 0.0, &[0.0, 10.0, 20.0]);
        let step = tr.halving_steps[0].unwrap();
        assert!((step - 2.0_f64.sqrt().acosh() / beta).abs() < 1e-3 * step, "{step}");
        let ratio = tr.step_ratios()[0].unwrap();
        assert!(ratio <= 10.0 && (ratio - 0.254).abs() < 2e-3, "{ratio}");
        assert!(tr.a_values.iter().all(|&a| (a - tr.a_values[0]).abs() < 1e-15));
    }

    #[test]
    fn linear_gap_halves_every_log2_over_slope() {
        let x: Vec<f64> = (0..201).map(|i| -10.0 + 0.1 * i as f64).collect();
        // gap 5 + 0.5 |x|: two decoupled piecewise-linear components
        let st = TodaState {
            q: 2,
            f: vec![vec![0.0; x.len()], x.iter().map(|t| 5.0 + 0.5 * t.abs()).collect()],
            x_grid: x,
            coeff: 0.0,
            newton_iterations: 0,
            residual: 0.0,
        };
        let tr = toda_decay_experiment(&st, 0.0, &[0.0, 2.0, 4.0]);
        for h in tr.halving_steps.iter().take(2) {
            assert!((h.unwrap() - 2.0_f64.ln() / 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn radial_morrey_growth_at_small_radius() {
        let sol = solve_radial_liouville(10, 0.0, 1e3).unwrap();
        let tr = radial_decay_experiment(&sol, &[0.01, 0.02]).unwrap();
        let slope = ((tr.morrey[1] / tr.morrey[0]).ln() + 7.0 * 2.0_f64.ln()) / 2.0_f64.ln();
        assert!((slope - 10.0).abs() < 1e-2, "{slope}");
        assert!(tr.halving_steps.iter().all(|h| h.is_some()));
    }

    #[test]
    fn counterexample_hessian_concentrates() {
        let sol = solve_radial_liouville(10, 0.0, 1e4).unwrap();
        let a = counterexample_profile(1e-2, &sol).unwrap();
        assert!((a.hessian_center - 0.1).abs() < 1e-6);
        let b = counterexample_profile(5e-3, &sol).unwrap();
        assert!(b.hessian_probe < a.hessian_probe);
        assert!(b.ratio > a.ratio);
        assert!(a.upper.iter().zip(&a.lower).all(|(u, l)| *u == -*l));
        assert!(counterexample_profile(1e-2, &singular_profile(10, 1e-3, 1e4).unwrap()).is_err());
    }
}
