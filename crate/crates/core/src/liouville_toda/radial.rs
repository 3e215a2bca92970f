//! Radial solutions of `Δf = e^{-f}` in `R^m`.
//!
//! In `s = log r` the equation reads `f_ss + (m-2) f_s = e^{2s - f}`, which
//! is integrated on a log-spaced grid from a small radius where the regular
//! centre series is accurate.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::linalg::tridiagonal_min_eigenvalue;
use crate::ode::DormandPrince;
use crate::quadrature::GaussLegendre;

/// Grid points per decade of `r`.
pub const POINTS_PER_DECADE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Kind {
    /// Smooth solution with finite value at the origin.
    Smooth,
    /// `2 log r - log(2(m - 2))`.
    Singular,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialLiouville {
    pub dim_m: usize,
    pub kind: Kind,
    pub r_grid: Vec<f64>,
    pub f: Vec<f64>,
    /// `r f'(r)`, the derivative in `s = log r`.
    pub fs: Vec<f64>,
    /// Value at the origin; `None` for the singular profile.
    pub f_center: Option<f64>,
    pub v: Vec<f64>,
}

fn log_grid(r_min: f64, r_max: f64) -> Vec<f64> {
    let (s0, s1) = (r_min.ln(), r_max.ln());
    let decades = (s1 - s0) / std::f64::consts::LN_10;
    let n = ((decades * POINTS_PER_DECADE as f64).ceil() as usize).max(2);
    let ds = (s1 - s0) / n as f64;
    (0..=n).map(|i| if i == n { r_max } else { (s0 + ds * i as f64).exp() }).collect()
}

/// `f'' + (m-1) f'/r - e^{-f}`.
pub fn radial_residual(m: usize, r: f64, f: f64, f_r: f64, f_rr: f64) -> f64 {
    f_rr + (m as f64 - 1.0) * f_r / r - (-f).exp()
}

/// The explicit singular solution sampled on a log grid of `[r_min, r_max]`.
pub fn singular_profile(m: usize, r_min: f64, r_max: f64) -> Result<RadialLiouville> {
    if m < 3 || !(r_min > 0.0 && r_max > r_min) {
        return Err(LabError::Precondition(format!("singular profile needs m >= 3 and 0 < r_min < r_max, got m = {m}")));
    }
    let r_grid = log_grid(r_min, r_max);
    let c = 2.0 * (m as f64 - 2.0);
    let f = r_grid.iter().map(|r| 2.0 * r.ln() - c.ln()).collect();
    let v = r_grid.iter().map(|r| c / (r * r)).collect();
    let fs = vec![2.0; r_grid.len()];
    Ok(RadialLiouville { dim_m: m, kind: Kind::Singular, r_grid, f, fs, f_center: None, v })
}

/// Integrate the regular radial solution with `f(0) = f_center` out to
/// `r_max`.
pub fn solve_radial_liouville(m: usize, f_center: f64, r_max: f64) -> Result<RadialLiouville> {
    if m < 3 || !(r_max >= 1e3) || !f_center.is_finite() {
        return Err(LabError::Precondition(format!("radial Liouville needs m >= 3 and r_max >= 1e3, got {m}, {r_max}")));
    }
    let r0 = 1e-3 * (f_center / 2.0).exp();
    let r_grid = log_grid(r0, r_max);
    let (f0, fs0) = centre_series(m, f_center, r0);
    let mf = m as f64;
    let rhs = move |s: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = (2.0 * s - y[0]).exp() - (mf - 2.0) * y[1];
    };
    let mut ode = DormandPrince::new(rhs, r0.ln(), vec![f0, fs0], 1e-12, 1e-12).with_initial_step(1e-3);
    let mut f = Vec::with_capacity(r_grid.len());
    let mut fs = Vec::with_capacity(r_grid.len());
    for &r in &r_grid {
        ode.integrate_to(r.ln()).map_err(|_| LabError::BlowDown { r })?;
        if !ode.y.iter().all(|v| v.is_finite()) {
            return Err(LabError::BlowDown { r });
        }
        f.push(ode.y[0]);
        fs.push(ode.y[1]);
    }
    let v = f.iter().map(|x: &f64| (-x).exp()).collect();
    Ok(RadialLiouville { dim_m: m, kind: Kind::Smooth, r_grid, f, fs, f_center: Some(f_center), v })
}

/// `(f, r f')` from the two-term regular expansion at the origin.
fn centre_series(m: usize, f0: f64, r: f64) -> (f64, f64) {
    let e = (-f0).exp();
    let a = e / (2.0 * m as f64);
    let b = -e * a / (4.0 * (m as f64 + 2.0));
    let r2 = r * r;
    (f0 + a * r2 + b * r2 * r2, 2.0 * a * r2 + 4.0 * b * r2 * r2)
}

impl RadialLiouville {
    pub fn r_min(&self) -> f64 {
        self.r_grid[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.r_grid.last().unwrap()
    }

    /// `(f, f', f'')` at radius `r` inside the grid (or below it, for the
    /// smooth solution).
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let m = self.dim_m as f64;
        match self.kind {
            Kind::Singular => {
                let c = 2.0 * (m - 2.0);
                (2.0 * r.ln() - c.ln(), 2.0 / r, -2.0 / (r * r))
            }
            Kind::Smooth => {
                if r <= self.r_min() {
                    let f0 = self.f_center.unwrap();
                    let (f, fs) = centre_series(self.dim_m, f0, r.max(1e-300));
                    let e = (-f0).exp();
                    let f_rr = e / m - 3.0 * e * e * r * r / (2.0 * m * (m + 2.0));
                    let f_r = if r > 0.0 { fs / r } else { 0.0 };
                    return (f, f_r, f_rr);
                }
                let (f, fs) = self.hermite(r.ln());
                let fss = (2.0 * r.ln() - f).exp() - (m - 2.0) * fs;
                (f, fs / r, (fss - fs) / (r * r))
            }
        }
    }

    /// `e^{-f(r)}`.
    pub fn v_at(&self, r: f64) -> f64 {
        match self.kind {
            Kind::Singular => 2.0 * (self.dim_m as f64 - 2.0) / (r * r),
            Kind::Smooth => (-self.eval(r).0).exp(),
        }
    }

    /// Cubic Hermite in `s` on `(f, f_s)` and on `(f_s, f_ss)`.
    fn hermite(&self, s: f64) -> (f64, f64) {
        let m = self.dim_m as f64;
        let n = self.r_grid.len();
        let ss: Vec<f64> = [0, n - 1].iter().map(|&i| self.r_grid[i].ln()).collect();
        let ds = (ss[1] - ss[0]) / (n - 1) as f64;
        let k = (((s - ss[0]) / ds).floor().max(0.0) as usize).min(n - 2);
        let (sa, sb) = (self.r_grid[k].ln(), self.r_grid[k + 1].ln());
        let h = sb - sa;
        let x = ((s - sa) / h).clamp(0.0, 1.0);
        let fss = |i: usize| (2.0 * self.r_grid[i].ln() - self.f[i]).exp() - (m - 2.0) * self.fs[i];
        let herm = |y0: f64, y1: f64, d0: f64, d1: f64| {
            let (x2, x3) = (x * x, x * x * x);
            (2.0 * x3 - 3.0 * x2 + 1.0) * y0 + (x3 - 2.0 * x2 + x) * h * d0 + (-2.0 * x3 + 3.0 * x2) * y1 + (x3 - x2) * h * d1
        };
        (
            herm(self.f[k], self.f[k + 1], self.fs[k], self.fs[k + 1]),
            herm(self.fs[k], self.fs[k + 1], fss(k), fss(k + 1)),
        )
    }
}

/// Infimum over radial test functions supported in the grid range of
///
/// ```text
/// (∫ η'^2 r^{m-1} - ∫ V η^2 r^{m-1}) / ∫ η^2 r^{m-3}
/// ```
///
/// Substituting `η = r^{-(m-2)/2} ψ` turns this into the lowest eigenvalue
/// of `-ψ'' + ((m-2)^2/4 - r^2 V) ψ` in `s = log r` with Dirichlet ends, so
/// for `V = c / r^2` the margin is the Hardy gap `(m-2)^2/4 - c` up to the
/// box correction `(π/S)^2`.
pub fn liouville_stability_margin(sol: &RadialLiouville) -> Result<f64> {
    let n = sol.r_grid.len();
    if n < 4 {
        return Err(LabError::Precondition("stability margin needs at least 4 grid points".into()));
    }
    let k = (sol.dim_m as f64 - 2.0) / 2.0;
    let ds = (sol.r_max().ln() - sol.r_min().ln()) / (n - 1) as f64;
    let inv = 1.0 / (ds * ds);
    let diag: Vec<f64> =
        (1..n - 1).map(|i| 2.0 * inv + k * k - sol.r_grid[i] * sol.r_grid[i] * sol.v[i]).collect();
    let off = vec![-inv; diag.len() - 1];
    let lambda = tridiagonal_min_eigenvalue(&diag, &off, 1e-12);
    if !lambda.is_finite() {
        return Err(LabError::NoConvergence("Sturm bisection produced a non-finite eigenvalue".into()));
    }
    Ok(lambda)
}

/// Area of the unit sphere in `R^m`.
fn sphere_area(m: usize) -> f64 {
    // Γ(m/2) through the half-integer recursion
    let half = m as f64 / 2.0;
    let mut gamma = if m.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if m.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < half {
        gamma *= x;
        x += 1.0;
    }
    2.0 * std::f64::consts::PI.powf(half) / gamma
}

fn radial_power_integral(sol: &RadialLiouville, q: f64, a: f64, b: f64) -> f64 {
    let p = 2.0 * q + 1.0;
    let m = sol.dim_m as f64;
    let (sa, sb) = (a.ln(), b.ln());
    let panels = (((sb - sa) / std::f64::consts::LN_10) * 8.0).ceil().max(1.0) as usize;
    let body = GaussLegendre::new(10).composite(sa, sb, panels, |s| {
        let r = s.exp();
        sol.v_at(r).powf(p) * (m * s).exp()
    });
    sphere_area(sol.dim_m) * body
}

fn check_farina(sol: &RadialLiouville, q: f64, k: f64) -> Result<()> {
    if !(0.0..15.0 / 8.0).contains(&q) {
        return Err(LabError::Precondition(format!("exponent q = {q} outside [0, 15/8)")));
    }
    if !(k > sol.r_min() && k <= sol.r_max() / 2.0) {
        return Err(LabError::Precondition(format!("radius K = {k} outside the solution range")));
    }
    Ok(())
}

/// `∫_{B_K} V^{2q+1}`. For the singular profile the ball is cut at the
/// innermost grid radius.
pub fn farina_integral(sol: &RadialLiouville, q: f64, k: f64) -> Result<f64> {
    check_farina(sol, q, k)?;
    let mut total = radial_power_integral(sol, q, sol.r_min(), k);
    if sol.kind == Kind::Smooth {
        // the tiny ball below the first grid radius, where V is constant
        let r0 = sol.r_min();
        let v0 = sol.v_at(0.0);
        total += sphere_area(sol.dim_m) * v0.powf(2.0 * q + 1.0) * r0.powi(sol.dim_m as i32) / sol.dim_m as f64;
    }
    Ok(total)
}

/// `∫_{K/2 < |x| < K} V^{2q+1}`, whose growth in `K` exposes the exponent
/// `m - 2(2q+1)` without the contribution of the core.
pub fn farina_scale_integral(sol: &RadialLiouville, q: f64, k: f64) -> Result<f64> {
    check_farina(sol, q, k)?;
    Ok(radial_power_integral(sol, q, (k / 2.0).max(sol.r_min()), k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_profile_solves_the_equation() {
        for m in [3, 10] {
            let sol = singular_profile(m, 1e-3, 1e4).unwrap();
            for &r in sol.r_grid.iter().step_by(17) {
                let (f, fr, frr) = sol.eval(r);
                assert!(radial_residual(m, r, f, fr, frr).abs() * r * r <= 1e-12);
            }
        }
        let sol = singular_profile(3, 1.0, 10.0).unwrap();
        assert!((sol.f[0] + 2.0_f64.ln()).abs() < 1e-15);
    }

    /// Fixed-step RK4 in `s`, independent of the adaptive integrator.
    fn rk4_reference(m: usize, r_end: f64) -> f64 {
        let mf = m as f64;
        let f = |s: f64, y: [f64; 2]| [y[1], (2.0 * s - y[0]).exp() - (mf - 2.0) * y[1]];
        let r0: f64 = 1e-3;
        let (f0, fs0) = centre_series(m, 0.0, r0);
        let mut y = [f0, fs0];
        let (mut s, s1) = (r0.ln(), r_end.ln());
        let n = 200_000;
        let h = (s1 - s) / n as f64;
        for _ in 0..n {
            let k1 = f(s, y);
            let k2 = f(s + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = f(s + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = f(s + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for j in 0..2 {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            s += h;
        }
        y[0]
    }

    #[test]
    fn smooth_solution_matches_reference_and_approaches_singular() {
        let sol = solve_radial_liouville(10, 0.0, 1e3).unwrap();
        let (f, _, _) = sol.eval(1e3);
        assert!((f - rk4_reference(10, 1e3)).abs() < 1e-8);
        assert!((f - (2.0 * 1e3_f64.ln() - 16.0_f64.ln())).abs() <= 0.2);
        let (_, fr, frr) = sol.eval(0.0);
        assert_eq!(fr, 0.0);
        assert!((frr - 0.1).abs() < 1e-12);
    }

    #[test]
    fn hardy_threshold() {
        let margin = |m| liouville_stability_margin(&singular_profile(m, 1e-12, 1e12).unwrap()).unwrap();
        assert!(margin(9) < -0.5);
        assert!(margin(10).abs() <= 5e-3, "{}", margin(10));
        assert!(margin(11) > 0.0);
        assert!((margin(9) + 1.75).abs() < 5e-3);
    }

    #[test]
    fn farina_growth() {
        let q = 1.8;
        for m in [9usize, 10, 12] {
            let sol = singular_profile(m, 1e-12, 1e5).unwrap();
            let a = farina_scale_integral(&sol, q, 1e2).unwrap();
            let b = farina_scale_integral(&sol, q, 1e3).unwrap();
            let slope = (b / a).log10();
            assert!((slope - (m as f64 - 9.2)).abs() < 0.05, "m={m}: {slope}");
        }
        let sol = singular_profile(9, 1e-12, 1e5).unwrap();
        let v: Vec<f64> = [10.0, 100.0, 1000.0].iter().map(|&k| farina_integral(&sol, q, k).unwrap()).collect();
        assert!(v[1] / v[0] - 1.0 < 0.05 && v[2] / v[1] - 1.0 < 0.05);
        assert!(farina_integral(&sol, 2.0, 10.0).is_err());
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
