//! The one-dimensional heteroclinic `g'' = W'(g)`, `g(0) = 0`, `g(±∞) = ±1`,
//! its constants, the cut-off profile and the spectral gap of the
//! linearized operator.
//!
//! The profile is integrated through the first-order reduction
//! `g' = sqrt(2 W(g))`. Once `1 - |g|` drops below [`TAIL_THRESHOLD`] the
//! samples are replaced by the exponential tail expansion
//!
//! ```text
//! 1 - g = A e^{-t} + B e^{-2t} + C e^{-3t}     (t -> +inf)
//! 1 + g = A' e^{t} + B' e^{2t} + C' e^{3t}     (t -> -inf)
//! ```
//!
//! with `B, C` fixed by `A` and the Taylor coefficients of `W'` at the wells.
//!
//! so that `1 ∓ g` keeps full relative precision arbitrarily far out.

use crate::error::{LabError, Result};
use crate::linalg::{dot, solve_tridiagonal, tridiagonal_min_eigenvalue};
use crate::ode::DormandPrince;
use crate::potential::Potential;
use crate::quadrature::simpson_uniform;

/// Switch to the tail expansion once `1 - |g|` falls below this.
pub const TAIL_THRESHOLD: f64 = 1e-4;
/// Maximal relative disagreement of the two tail estimates of `A`.
pub const EXTRAPOLATION_TOL: f64 = 1e-5;

const ODE_RTOL: f64 = 1e-13;
const ODE_ATOL: f64 = 1e-15;

/// `g` and its first four derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivs {
    pub g: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
}

/// Tail coefficients on one side:
/// `1 ∓ g ≈ a e^{∓t} + b e^{∓2t} + c e^{∓3t}`.
#[derive(Debug, Clone, Copy)]
struct Tail {
    a: f64,
    b: f64,
    c: f64,
    /// `|t|` from which the expansion replaces the integrated samples.
    switch: f64,
}

impl Tail {
    /// Expansion of the gap `v` solving `v'' = v + p2 v² + p3 v³`.
    fn from_amplitude(a: f64, p2: f64, p3: f64, switch: f64) -> Self {
        let b = p2 * a * a / 3.0;
        let c = (2.0 * p2 * a * b + p3 * a * a * a) / 8.0;
        Self { a, b, c, switch }
    }

    /// `1 - |g|` at distance `abs_t` out.
    #[inline]
    fn gap(&self, abs_t: f64) -> f64 {
        let e = (-abs_t).exp();
        e * (self.a + e * (self.b + e * self.c))
    }

    /// Derivatives of `gap` with respect to `|t|`, orders 0..=4.
    fn gap_derivs(&self, abs_t: f64) -> [f64; 5] {
        let e = (-abs_t).exp();
        let (p, q, r) = (self.a * e, self.b * e * e, self.c * e * e * e);
        let mut out = [0.0; 5];
        let mut sign = 1.0;
        for (k, o) in out.iter_mut().enumerate() {
            let k = k as i32;
            *o = sign * (p + 2f64.powi(k) * q + 3f64.powi(k) * r);
            sign = -sign;
        }
        out
    }
}

/// Amplitude `a` whose three-term expansion reproduces `gap` at `abs_t`.
fn amplitude_at(gap: f64, abs_t: f64, p2: f64, p3: f64) -> f64 {
    let e = (-abs_t).exp();
    let mut a = gap / e;
    for _ in 0..50 {
        let f = Tail::from_amplitude(a, p2, p3, 0.0).gap(abs_t) - gap;
        let df = e + 2.0 * p2 * a * e * e / 3.0 + (2.0 * p2 * p2 / 3.0 + p3) * 3.0 * a * a * e.powi(3) / 8.0;
        let step = f / df;
        a -= step;
        if step.abs() <= 1e-16 * a.abs() {
            break;
        }
    }
    a
}

/// Sampled heteroclinic with its asymptotic constants.
#[derive(Debug, Clone)]
pub struct Profile {
    pub potential: Potential,
    pub t_grid: Vec<f64>,
    pub g: Vec<f64>,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub g3: Vec<f64>,
    pub sigma0: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    /// Largest `|t|` at which the integrated samples are still used.
    pub tail_switch: f64,
    plus: Tail,
    minus: Tail,
    dt: f64,
}

/// Integrate the heteroclinic of `p` on `n_points` uniform samples of
/// `[-t_max, t_max]`.
pub fn solve_profile(p: &Potential, t_max: f64, n_points: usize) -> Result<Profile> {
    if !(t_max >= 20.0) || n_points < 1000 {
        return Err(LabError::Precondition(format!(
            "profile needs t_max >= 20 and n_points >= 1000, got {t_max} and {n_points}"
        )));
    }
    let n = n_points;
    let dt = 2.0 * t_max / (n - 1) as f64;
    let mid = (n - 1) as f64 / 2.0;
    let t_grid: Vec<f64> = (0..n).map(|i| dt * (i as f64 - mid)).collect();
    let mut g = vec![f64::NAN; n];

    // first grid index with t > 0 (or t = 0 when n is odd)
    let first_pos = (0..n).find(|&i| t_grid[i] >= 0.0).unwrap();
    let last_neg = (0..n).rev().find(|&i| t_grid[i] <= 0.0).unwrap();
    let plus_idx = integrate_side(p, &t_grid, &mut g, (first_pos..n).collect())?;
    let minus_idx = integrate_side(p, &t_grid, &mut g, (0..=last_neg).rev().collect())?;

    let sign_of = |i: usize| if t_grid[i] > 0.0 { 1.0 } else { -1.0 };
    let mut tails = [Tail { a: 0.0, b: 0.0, c: 0.0, switch: 0.0 }; 2];
    for (slot, idx) in [(0usize, plus_idx), (1usize, minus_idx)] {
        let s = sign_of(idx);
        // gap equation v'' = v + p2 v^2 + p3 v^3 from the Taylor series of W' at the well
        let (p2, p3) = (-s * p.d3(s) / 2.0, fourth_derivative_at_well(p, s) / 6.0);
        let step = (1.0 / dt).round().max(1.0) as usize;
        let inner = step_towards_centre(idx, step, s);
        let est = |i: usize| amplitude_at(1.0 - s * g[i], t_grid[i].abs(), p2, p3);
        let (first, second) = (est(idx), est(inner));
        if !((first - second).abs() <= EXTRAPOLATION_TOL * first.abs()) {
            return Err(LabError::ExtrapolationUnstable { first, second });
        }
        tails[slot] = Tail::from_amplitude(first, p2, p3, t_grid[idx].abs());
    }
    let [plus, minus] = tails;

    for i in 0..n {
        let t = t_grid[i];
        if t >= plus.switch {
            g[i] = 1.0 - plus.gap(t);
        } else if t <= -minus.switch {
            g[i] = -1.0 + minus.gap(-t);
        }
    }

    let mut pr = Profile {
        potential: p.clone(),
        g1: vec![0.0; n],
        g2: vec![0.0; n],
        g3: vec![0.0; n],
        t_grid,
        g,
        sigma0: 0.0,
        a_plus: plus.a,
        a_minus: minus.a,
        tail_switch: plus.switch.max(minus.switch),
        plus,
        minus,
        dt,
    };
    for i in 0..n {
        let d = pr.eval(pr.t_grid[i]);
        pr.g1[i] = d.g1;
        pr.g2[i] = d.g2;
        pr.g3[i] = d.g3;
    }
    for i in 1..n - 1 {
        if !(pr.g1[i] > 0.0) || pr.g[i] < pr.g[i - 1] {
            return Err(LabError::NonMonotone { t: pr.t_grid[i] });
        }
    }
    pr.sigma0 = pr.energy_quadrature();
    Ok(pr)
}

/// One-sided second-order difference of `W'''` at the well `s = ±1`.
fn fourth_derivative_at_well(p: &Potential, s: f64) -> f64 {
    let h = 1e-4;
    s * (3.0 * p.d3(s) - 4.0 * p.d3(s - s * h) + p.d3(s - 2.0 * s * h)) / (2.0 * h)
}

fn step_towards_centre(i: usize, step: usize, side: f64) -> usize {
    if side > 0.0 {
        i - step
    } else {
        i + step
    }
}

/// Integrate `g' = sqrt(2W(g))` from `g(0) = 0` through the grid indices in
/// `order` (moving away from the origin) until the tail threshold is met.
/// Returns the switching index.
fn integrate_side(p: &Potential, t_grid: &[f64], g: &mut [f64], order: Vec<usize>) -> Result<usize> {
    let pot = p.clone();
    let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = (2.0 * pot.w(y[0]).max(0.0)).sqrt();
    };
    let mut ode = DormandPrince::new(rhs, 0.0, vec![0.0], ODE_RTOL, ODE_ATOL).with_initial_step(1e-3);
    for &i in &order {
        ode.integrate_to(t_grid[i])?;
        let v = ode.y[0];
        if !v.is_finite() {
            return Err(LabError::NotEvaluable { u: v });
        }
        g[i] = v;
        if 1.0 - v.abs() < TAIL_THRESHOLD && t_grid[i].abs() >= 3.0 {
            return Ok(i);
        }
    }
    let last = *order.last().unwrap();
    Err(LabError::TailNotReached { gap: 1.0 - g[last].abs() })
}

impl Profile {
    pub fn t_max(&self) -> f64 {
        *self.t_grid.last().unwrap()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Second tail coefficient `B` in `1 - g ≈ A₁e^{-t} + B e^{-2t} + ...`.
    pub fn b_plus(&self) -> f64 {
        self.plus.b
    }

    /// Second tail coefficient `B'` in `1 + g ≈ A₋₁e^{t} + B' e^{2t} + ...`.
    pub fn b_minus(&self) -> f64 {
        self.minus.b
    }

    /// `(sigma0, a_plus, a_minus)`.
    pub fn constants(&self) -> (f64, f64, f64) {
        (self.sigma0, self.a_plus, self.a_minus)
    }

    /// `g(t)` for any real `t`.
    pub fn value(&self, t: f64) -> f64 {
        if t >= self.plus.switch {
            1.0 - self.plus.gap(t)
        } else if t <= -self.minus.switch {
            -1.0 + self.minus.gap(-t)
        } else {
            self.hermite(t)
        }
    }

    /// `1 - g(t)` without cancellation for large positive `t`.
    pub fn one_minus_g(&self, t: f64) -> f64 {
        if t >= self.plus.switch {
            self.plus.gap(t)
        } else {
            1.0 - self.value(t)
        }
    }

    /// `1 + g(t)` without cancellation for large negative `t`.
    pub fn one_plus_g(&self, t: f64) -> f64 {
        if t <= -self.minus.switch {
            self.minus.gap(-t)
        } else {
            1.0 + self.value(t)
        }
    }

    /// `g` and derivatives up to fourth order at `t`.
    pub fn eval(&self, t: f64) -> Derivs {
        if t >= self.plus.switch {
            let v = self.plus.gap_derivs(t);
            return Derivs { g: 1.0 - v[0], g1: -v[1], g2: -v[2], g3: -v[3], g4: -v[4] };
        }
        if t <= -self.minus.switch {
            // w(s) with s = -t; d/dt = -d/ds
            let w = self.minus.gap_derivs(-t);
            return Derivs { g: -1.0 + w[0], g1: -w[1], g2: w[2], g3: -w[3], g4: w[4] };
        }
        let g = self.hermite(t);
        let p = &self.potential;
        let g1 = (2.0 * p.w(g).max(0.0)).sqrt();
        let g2 = p.d1(g);
        let g3 = p.d2(g) * g1;
        let g4 = p.d3(g) * g1 * g1 + p.d2(g) * g2;
        Derivs { g, g1, g2, g3, g4 }
    }

    fn hermite(&self, t: f64) -> f64 {
        let n = self.t_grid.len();
        let t0 = self.t_grid[0];
        let k = (((t - t0) / self.dt).floor().max(0.0) as usize).min(n - 2);
        let (ta, h) = (self.t_grid[k], self.dt);
        let s = (t - ta) / h;
        let (y0, y1) = (self.g[k], self.g[k + 1]);
        let (m0, m1) = (self.g1[k] * h, self.g1[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1
    }

    /// `∫ (g'^2/2 + W(g)) dt` by Simpson on the grid plus the analytic
    /// contribution of both tails beyond `±t_max`.
    fn energy_quadrature(&self) -> f64 {
        let p = &self.potential;
        let dens: Vec<f64> = self.g.iter().zip(&self.g1).map(|(&g, &g1)| 0.5 * g1 * g1 + p.w(g)).collect();
        let body = simpson_uniform(&dens, self.dt);
        let tail = |tl: &Tail, t: f64| {
            // g'^2 = (a e + 2b e^2 + 3c e^3)^2, integrated from t to infinity
            let e = (-t).exp();
            tl.a * tl.a * e * e / 2.0
                + 4.0 * tl.a * tl.b * e.powi(3) / 3.0
                + (4.0 * tl.b * tl.b + 6.0 * tl.a * tl.c) * e.powi(4) / 4.0
        };
        body + tail(&self.plus, self.t_max()) + tail(&self.minus, self.t_max())
    }
}

/// Smooth cutoff: `1` on `[-1, 1]`, `0` outside `(-2, 2)`, C⁴ across the
/// joins. Returns `ζ` and its first four derivatives at `s`.
pub fn cutoff(s: f64) -> [f64; 5] {
    let a = s.abs();
    if a <= 1.0 {
        return [1.0, 0.0, 0.0, 0.0, 0.0];
    }
    if a >= 2.0 {
        return [0.0; 5];
    }
    // 1 - S(x), S the degree-9 smoothstep, x = |s| - 1
    const S: [f64; 10] = [0.0, 0.0, 0.0, 0.0, 0.0, 126.0, -420.0, 540.0, -315.0, 70.0];
    let x = a - 1.0;
    let mut out = [0.0; 5];
    let mut c = S.to_vec();
    let sign = s.signum();
    for (k, o) in out.iter_mut().enumerate() {
        let v = c.iter().rev().fold(0.0, |acc, &q| acc * x + q);
        // d^k/ds^k picks up sign^k from |s|
        *o = -v * if k % 2 == 1 { sign } else { 1.0 };
        c = c.iter().enumerate().skip(1).map(|(j, &q)| j as f64 * q).collect();
    }
    out[0] += 1.0;
    out
}

/// Profile glued to the constants `±1` beyond `|t| = 2L`, `L = 4|log ε|`.
#[derive(Debug, Clone)]
pub struct TruncatedProfile {
    pub base: Profile,
    pub eps: f64,
    /// Inner radius `L` of the gluing window `L < |t| < 2L`.
    pub inner: f64,
}

pub fn truncate(pr: &Profile, eps: f64) -> Result<TruncatedProfile> {
    let inner = 4.0 * eps.ln().abs();
    if !(eps > 0.0 && eps < 0.2) || inner < 2.0 {
        return Err(LabError::EpsTooLarge { eps });
    }
    Ok(TruncatedProfile { base: pr.clone(), eps, inner })
}

impl TruncatedProfile {
    /// `ḡ` and its first four derivatives.
    pub fn derivs(&self, t: f64) -> Derivs {
        let l = self.inner;
        let a = t.abs();
        if a <= l {
            return self.base.eval(t);
        }
        let sg = t.signum();
        if a >= 2.0 * l {
            return Derivs { g: sg, g1: 0.0, g2: 0.0, g3: 0.0, g4: 0.0 };
        }
        let z = cutoff(t / l);
        let zt = [z[0], z[1] / l, z[2] / (l * l), z[3] / (l * l * l), z[4] / (l * l * l * l)];
        // gap v = sgn - g with derivatives
        let d = self.base.eval(t);
        let v0 = if sg > 0.0 { self.base.one_minus_g(t) } else { -self.base.one_plus_g(t) };
        let v = [v0, -d.g1, -d.g2, -d.g3, -d.g4];
        // ḡ = sgn - ζ v, Leibniz rule
        let binom = [[1.0, 0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0, 0.0], [
            1.0, 3.0, 3.0, 1.0, 0.0,
        ], [1.0, 4.0, 6.0, 4.0, 1.0]];
        let mut prod = [0.0; 5];
        for (k, pk) in prod.iter_mut().enumerate() {
            for j in 0..=k {
                *pk += binom[k][j] * zt[j] * v[k - j];
            }
        }
        Derivs { g: sg - prod[0], g1: -prod[1], g2: -prod[2], g3: -prod[3], g4: -prod[4] }
    }

    pub fn gbar(&self, t: f64) -> f64 {
        self.derivs(t).g
    }

    /// `ξ̄ = ḡ'' - W'(ḡ)` and its first two derivatives; exactly zero
    /// outside the gluing window.
    pub fn xibar(&self, t: f64) -> [f64; 3] {
        let a = t.abs();
        if a <= self.inner || a >= 2.0 * self.inner {
            return [0.0; 3];
        }
        let d = self.derivs(t);
        let p = &self.base.potential;
        let x0 = d.g2 - p.d1(d.g);
        let x1 = d.g3 - p.d2(d.g) * d.g1;
        let x2 = d.g4 - p.d3(d.g) * d.g1 * d.g1 - p.d2(d.g) * d.g2;
        [x0, x1, x2]
    }

    /// `∫ ḡ'^2` over `[-2L, 2L]` by Simpson with `n` intervals.
    pub fn gradient_energy(&self, n: usize) -> f64 {
        let n = n + n % 2;
        let (a, b) = (-2.0 * self.inner, 2.0 * self.inner);
        let h = (b - a) / n as f64;
        let vals: Vec<f64> = (0..=n)
            .map(|i| {
                let d = self.derivs(a + h * i as f64);
                d.g1 * d.g1
            })
            .collect();
        simpson_uniform(&vals, h)
    }
}

/// Tridiagonal discretization of `-d²/dt² + W''(g)` on the interior of a
/// uniform grid of `[-t_max, t_max]` with zero boundary values.
fn linearized_operator(pr: &Profile, t_max: f64, n_points: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64) {
    let h = 2.0 * t_max / (n_points - 1) as f64;
    let mid = (n_points - 1) as f64 / 2.0;
    let ts: Vec<f64> = (1..n_points - 1).map(|i| h * (i as f64 - mid)).collect();
    let inv = 1.0 / (h * h);
    let p = &pr.potential;
    let diag: Vec<f64> = ts.iter().map(|&t| 2.0 * inv + p.d2(pr.value(t))).collect();
    let off = vec![-inv; ts.len() - 1];
    (ts, diag, off, h)
}

const EIG_MAX_ITER: usize = 5000;
const EIG_SHIFT: f64 = -0.25;

/// Smallest eigenvalue of the linearized operator restricted to functions
/// orthogonal to `g'`.
pub fn second_eigenvalue(pr: &Profile, t_max: f64, n_points: usize) -> Result<f64> {
    if n_points < 10 || !(t_max > 0.0) {
        return Err(LabError::Precondition("eigenvalue grid too small".into()));
    }
    let (ts, diag, off, _) = linearized_operator(pr, t_max, n_points);
    let shifted: Vec<f64> = diag.iter().map(|d| d - EIG_SHIFT).collect();
    let solve = |b: &[f64]| solve_tridiagonal(&off, &shifted, &off, b);
    let w: Vec<f64> = ts.iter().map(|&t| pr.eval(t).g1).collect();
    let z = solve(&w)?;
    let wz = dot(&w, &z);
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut v = diag[i] * x[i];
                if i > 0 {
                    v += off[i - 1] * x[i - 1];
                }
                if i + 1 < x.len() {
                    v += off[i] * x[i + 1];
                }
                v
            })
            .collect()
    };
    let project = |x: &mut Vec<f64>| {
        let c = dot(&w, x) / dot(&w, &w);
        for (xi, wi) in x.iter_mut().zip(&w) {
            *xi -= c * wi;
        }
    };
    // generic start with both parities present
    let mut x: Vec<f64> = ts.iter().map(|&t| (-(t - 0.3) * (t - 0.3) / 8.0).exp() * (1.0 + 0.5 * t)).collect();
    project(&mut x);
    let mut mu_prev = f64::INFINITY;
    for _ in 0..EIG_MAX_ITER {
        let mut y = solve(&x)?;
        let c = dot(&w, &y) / wz;
        for (yi, zi) in y.iter_mut().zip(&z) {
            *yi -= c * zi;
        }
        project(&mut y);
        let nrm = dot(&y, &y).sqrt();
        y.iter_mut().for_each(|v| *v /= nrm);
        let ay = apply(&y);
        let mu = dot(&y, &ay);
        if (mu - mu_prev).abs() <= 1e-13 * mu.abs().max(1.0) {
            return Ok(mu);
        }
        mu_prev = mu;
        x = y;
    }
    Err(LabError::NoConvergence(format!("constrained inverse iteration stalled at {mu_prev}")))
}

/// Lowest eigenvalue of the unconstrained linearized operator and the
/// cosine of the angle between its eigenvector and the sampled `g'`.
pub fn ground_state(pr: &Profile, t_max: f64, n_points: usize) -> Result<(f64, f64)> {
    let (ts, diag, off, _) = linearized_operator(pr, t_max, n_points);
    let lambda = tridiagonal_min_eigenvalue(&diag, &off, 1e-13);
    let shifted: Vec<f64> = diag.iter().map(|d| d - (lambda - 1e-9)).collect();
    let mut x = vec![1.0; ts.len()];
    for _ in 0..3 {
        x = solve_tridiagonal(&off, &shifted, &off, &x)?;
        let nrm = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    let w: Vec<f64> = ts.iter().map(|&t| pr.eval(t).g1).collect();
    let cos = dot(&x, &w).abs() / dot(&w, &w).sqrt();
    Ok((lambda, cos))
}
