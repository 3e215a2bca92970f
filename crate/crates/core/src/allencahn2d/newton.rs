//! Damped Newton for `Δ_h u = W'(u)` with fixed Dirichlet data.
//!
//! Interior unknowns are numbered along the shorter grid direction so the
//! Jacobian `-Δ_h + W''(u)` is banded with half-bandwidth `min(nx, ny) - 2`.
//! A banded LDLᵀ factorization gives both the step and the inertia of the
//! Jacobian; when it is indefinite the step is replaced by one semi-implicit
//! gradient-flow step, which is always a descent direction for the energy.

use super::field::ScalarField2D;
use crate::error::{LabError, Result};
use crate::exec;
use crate::linalg::SymBanded;
use crate::potential::Potential;

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-10;
const FLOW_TAU: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub field: ScalarField2D,
    pub iterations: usize,
    pub residual: f64,
    /// Discrete energy after each accepted step, starting with the initial
    /// state.
    pub energy: Vec<f64>,
    /// Steps taken with the gradient-flow operator instead of the Jacobian.
    pub flow_steps: usize,
}

/// Map between interior grid points and unknown indices.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Numbering {
    pub nx: usize,
    pub ny: usize,
    x_fast: bool,
}

impl Numbering {
    pub fn new(nx: usize, ny: usize) -> Self {
        Self { nx, ny, x_fast: nx <= ny }
    }

    pub fn len(&self) -> usize {
        (self.nx - 2) * (self.ny - 2)
    }

    pub fn bandwidth(&self) -> usize {
        if self.x_fast {
            self.nx - 2
        } else {
            self.ny - 2
        }
    }

    /// Unknown index of interior point `(i, j)`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        if self.x_fast {
            (j - 1) * (self.nx - 2) + (i - 1)
        } else {
            (i - 1) * (self.ny - 2) + (j - 1)
        }
    }

    pub fn points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.ny - 1).flat_map(move |j| (1..self.nx - 1).map(move |i| (i, j)))
    }
}

/// Banded matrix `-Δ_h + diag(w2(u))` on the interior unknowns.
pub(crate) fn assemble_operator(u: &ScalarField2D, w2: &dyn Fn(f64) -> f64, shift: f64) -> SymBanded {
    let num = Numbering::new(u.nx, u.ny);
    let (cx, cy) = (1.0 / (u.hx * u.hx), 1.0 / (u.hy * u.hy));
    let mut m = SymBanded::zeros(num.len(), num.bandwidth());
    for (i, j) in num.points() {
        let k = num.index(i, j);
        m.set(k, k, 2.0 * cx + 2.0 * cy + w2(u.at(i, j)) + shift);
        if i + 2 < u.nx {
            m.set(k, num.index(i + 1, j), -cx);
        }
        if j + 2 < u.ny {
            m.set(k, num.index(i, j + 1), -cy);
        }
    }
    m
}

/// `-Δ_h u + W'(u)` on the full grid, zero on the boundary ring.
pub fn residual_field(u: &ScalarField2D, p: &Potential) -> Vec<f64> {
    let (nx, ny) = (u.nx, u.ny);
    let (cx, cy) = (1.0 / (u.hx * u.hx), 1.0 / (u.hy * u.hy));
    let mut out = vec![0.0; nx * ny];
    exec::for_each_row(&mut out, nx, |j, row| {
        if j == 0 || j + 1 == ny {
            return;
        }
        for i in 1..nx - 1 {
            let c = u.at(i, j);
            let lap = cx * (u.at(i - 1, j) - 2.0 * c + u.at(i + 1, j)) + cy * (u.at(i, j - 1) - 2.0 * c + u.at(i, j + 1));
            row[i] = -lap + p.d1(c);
        }
    });
    out
}

/// Sup norm of the residual over interior points.
pub fn residual_norm(u: &ScalarField2D, p: &Potential) -> f64 {
    residual_field(u, p).iter().fold(0.0_f64, |m, r| m.max(r.abs()))
}

/// `Σ h_x h_y (½|∇_h u|² + W(u))`, with gradient terms on every grid edge and
/// the potential on interior points. Its gradient with respect to an
/// interior value is `h_x h_y (-Δ_h u + W'(u))`.
pub fn discrete_energy(u: &ScalarField2D, p: &Potential) -> f64 {
    let (nx, ny) = (u.nx, u.ny);
    let rows = exec::map_range(ny, |j| {
        let mut e = 0.0;
        for i in 0..nx {
            let c = u.at(i, j);
            if i + 1 < nx {
                let d = (u.at(i + 1, j) - c) / u.hx;
                e += 0.5 * d * d;
            }
            if j + 1 < ny {
                let d = (u.at(i, j + 1) - c) / u.hy;
                e += 0.5 * d * d;
            }
            if !u.is_boundary(i, j) {
                e += p.w(c);
            }
        }
        e
    });
    rows.iter().sum::<f64>() * u.hx * u.hy
}

fn check_initial(u: &ScalarField2D) -> Result<()> {
    if u.nx < 3 || u.ny < 3 || u.values.len() != u.nx * u.ny {
        return Err(LabError::Precondition(format!("grid {}x{} has no interior", u.nx, u.ny)));
    }
    if !(u.hx > 0.0 && u.hy > 0.0) {
        return Err(LabError::Precondition("grid spacings must be positive".into()));
    }
    if let Some(v) = u.values.iter().find(|v| !v.is_finite() || v.abs() > 1.0) {
        return Err(LabError::Precondition(format!("initial value {v} outside [-1, 1]")));
    }
    Ok(())
}

/// Backtracking along `step`; returns the new field, its residual field,
/// residual norm and energy.
fn line_search(
    u: &ScalarField2D,
    p: &Potential,
    num: &Numbering,
    step: &[f64],
    rhs: &[f64],
    e0: f64,
    res: f64,
) -> Option<(ScalarField2D, Vec<f64>, f64, f64)> {
    let cell = u.hx * u.hy;
    // energy slope along the step: h_x h_y <∇E, δ>
    let slope = -cell * crate::linalg::dot(rhs, step);
    if !(slope < 0.0) {
        return None;
    }
    let roundoff = 64.0 * f64::EPSILON * (e0.abs() + cell);
    let mut alpha = 1.0;
    while alpha >= MIN_STEP {
        let v = trial(u, num, step, alpha);
        if v.values.iter().all(|x| x.is_finite()) {
            let e1 = discrete_energy(&v, p);
            let vr = residual_field(&v, p);
            let vres = vr.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
            // near convergence the Armijo decrease drowns in roundoff;
            // then a full step that shrinks the residual is taken
            if e1 <= e0 + ARMIJO * alpha * slope || (alpha == 1.0 && e1 <= e0 + roundoff && vres < res) {
                return Some((v, vr, vres, e1));
            }
        }
        alpha *= 0.5;
    }
    None
}

fn trial(u: &ScalarField2D, num: &Numbering, step: &[f64], alpha: f64) -> ScalarField2D {
    let mut v = u.clone();
    for (i, j) in num.points() {
        let k = v.idx(i, j);
        v.values[k] += alpha * step[num.index(i, j)];
    }
    v
}

/// Solve `Δ_h u = W'(u)` starting from `initial`, keeping its boundary ring.
pub fn solve_newton(initial: &ScalarField2D, p: &Potential, opts: &NewtonOptions) -> Result<NewtonOutcome> {
    check_initial(initial)?;
    let num = Numbering::new(initial.nx, initial.ny);
    let w2 = |v: f64| p.d2(v);
    let mut u = initial.clone();
    let mut energy = vec![discrete_energy(&u, p)];
    let mut flow_steps = 0;
    let mut res_full = residual_field(&u, p);
    let mut res = res_full.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    for it in 0..opts.max_iter {
        if res <= opts.tol {
            return Ok(NewtonOutcome { field: u, iterations: it, residual: res, energy, flow_steps });
        }
        let rhs: Vec<f64> = {
            let mut b = vec![0.0; num.len()];
            for (i, j) in num.points() {
                b[num.index(i, j)] = -res_full[u.idx(i, j)];
            }
            b
        };
        let e0 = *energy.last().unwrap();
        let search = |step: &[f64]| line_search(&u, p, &num, step, &rhs, e0, res);
        let mut accepted = None;
        let jac = assemble_operator(&u, &w2, 0.0);
        if let Some(f) = jac.ldlt().ok().filter(|f| f.negative_count() == 0) {
            accepted = search(&f.solve(&rhs)).map(|a| (a, false));
        }
        if accepted.is_none() {
            // (1/τ + κ - Δ_h) δ = -F with κ making the operator positive
            let kappa = u.values.iter().map(|&v| -p.d2(v)).fold(0.0_f64, f64::max);
            let flow = assemble_operator(&u, &|_| 1.0 / FLOW_TAU + kappa, 0.0).ldlt()?;
            accepted = search(&flow.solve(&rhs)).map(|a| (a, true));
        }
        match accepted {
            Some(((v, vr, vres, e1), is_flow)) => {
                u = v;
                res_full = vr;
                res = vres;
                energy.push(e1);
                flow_steps += is_flow as usize;
            }
            None => {
                return Err(LabError::NewtonDiverged(format!(
                    "no descent step found at iteration {it}, residual {res:e}"
                )))
            }
        }
    }
    if res <= opts.tol {
        return Ok(NewtonOutcome { field: u, iterations: opts.max_iter, residual: res, energy, flow_steps });
    }
    Err(LabError::MaxIterExceeded { iterations: opts.max_iter, residual: res })
}
