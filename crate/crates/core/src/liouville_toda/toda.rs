//! Ordered Toda system on an interval,
//!
//! ```text
//! f_α'' = c (e^{-(f_α - f_{α-1})} - e^{-(f_{α+1} - f_α)}),   α = 1..Q,
//! ```
//!
//! with the outermost exponentials absent, solved by damped Newton on a
//! uniform grid with prescribed endpoint values.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::linalg::SymBanded;

const NEWTON_MAX_ITER: usize = 40;
const NEWTON_TOL: f64 = 1e-9;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Serialize)]
pub struct TodaState {
    pub q: usize,
    pub x_grid: Vec<f64>,
    /// `f[α][i]`, ordered in `α` at every node.
    pub f: Vec<Vec<f64>>,
    pub coeff: f64,
    pub newton_iterations: usize,
    pub residual: f64,
}

impl TodaState {
    /// Gap `f_{α+1} - f_α` for `α = 0..Q-1`.
    pub fn gap(&self, alpha: usize) -> Vec<f64> {
        self.f[alpha + 1].iter().zip(&self.f[alpha]).map(|(a, b)| a - b).collect()
    }

    /// `max_α e^{-(f_{α+1} - f_α)}` at every node.
    pub fn amplitude(&self) -> Vec<f64> {
        (0..self.x_grid.len())
            .map(|i| (0..self.q - 1).map(|a| (-(self.f[a + 1][i] - self.f[a][i])).exp()).fold(0.0, f64::max))
            .collect()
    }
}

/// Right-hand side `c (e^{-(f_α - f_{α-1})} - e^{-(f_{α+1} - f_α)})` at a
/// node with values `vals`.
fn forcing(vals: &[f64], alpha: usize, c: f64) -> f64 {
    let q = vals.len();
    let mut s = 0.0;
    if alpha > 0 {
        s += (-(vals[alpha] - vals[alpha - 1])).exp();
    }
    if alpha + 1 < q {
        s -= (-(vals[alpha + 1] - vals[alpha])).exp();
    }
    c * s
}

fn residual_sup(f: &[Vec<f64>], h: f64, c: f64) -> f64 {
    let (q, n) = (f.len(), f[0].len());
    let mut worst: f64 = 0.0;
    let mut vals = vec![0.0; q];
    for i in 1..n - 1 {
        for a in 0..q {
            vals[a] = f[a][i];
        }
        for a in 0..q {
            let lap = (f[a][i - 1] - 2.0 * f[a][i] + f[a][i + 1]) / (h * h);
            worst = worst.max((lap - forcing(&vals, a, c)).abs());
        }
    }
    worst
}

fn check_order(f: &[Vec<f64>]) -> Result<()> {
    for a in 0..f.len() - 1 {
        if f[a].iter().zip(&f[a + 1]).any(|(lo, hi)| !(lo < hi)) {
            return Err(LabError::OrderingViolated { component: a + 1 });
        }
    }
    Ok(())
}

/// Solve the `Q`-component system on the uniform `x_grid` with endpoint
/// values `boundary[α] = (f_α(x_0), f_α(x_end))`, starting from the linear
/// interpolant of the boundary data.
pub fn solve_toda_bvp(q: usize, x_grid: &[f64], coeff: f64, boundary: &[(f64, f64)]) -> Result<TodaState> {
    let n = x_grid.len();
    if q < 2 || boundary.len() != q || n < 3 {
        return Err(LabError::Precondition(format!("Toda needs Q >= 2 components with data and 3 nodes, got Q = {q}")));
    }
    let (x0, x1) = (x_grid[0], x_grid[n - 1]);
    let initial: Vec<Vec<f64>> = boundary
        .iter()
        .map(|&(a, b)| x_grid.iter().map(|&x| a + (b - a) * (x - x0) / (x1 - x0)).collect())
        .collect();
    solve_toda_from(x_grid, coeff, initial)
}

/// Newton from the given ordered initial state; its endpoint values are
/// kept as boundary data. Selects the branch nearest to `initial` when the
/// problem has several solutions.
pub fn solve_toda_from(x_grid: &[f64], coeff: f64, initial: Vec<Vec<f64>>) -> Result<TodaState> {
    let (q, n) = (initial.len(), x_grid.len());
    if q < 2 || n < 3 || initial.iter().any(|c| c.len() != n) {
        return Err(LabError::Precondition("Toda state needs Q >= 2 components sampled on the grid".into()));
    }
    let h = (x_grid[n - 1] - x_grid[0]) / (n - 1) as f64;
    if x_grid.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) || !(h > 0.0) {
        return Err(LabError::Precondition("Toda grid must be uniform and increasing".into()));
    }
    let mut f = initial;
    check_order(&f)?;

    let m = n - 2;
    let idx = |i: usize, a: usize| (i - 1) * q + a;
    let mut res = residual_sup(&f, h, coeff);
    let mut iterations = 0;
    while res > NEWTON_TOL {
        if iterations == NEWTON_MAX_ITER {
            return Err(LabError::NewtonDiverged(format!("residual {res:.3e} after {iterations} steps")));
        }
        iterations += 1;
        // system for -h^2 times the residual: tridiagonal Laplacian plus
        // the Hessian of the interaction term
        let mut jac = SymBanded::zeros(m * q, q);
        let mut rhs = vec![0.0; m * q];
        let mut vals = vec![0.0; q];
        for i in 1..n - 1 {
            for a in 0..q {
                vals[a] = f[a][i];
            }
            for a in 0..q {
                let k = idx(i, a);
                let lap = f[a][i - 1] - 2.0 * f[a][i] + f[a][i + 1];
                rhs[k] = lap - h * h * forcing(&vals, a, coeff);
                jac.add(k, k, 2.0);
                if i + 1 < n - 1 {
                    jac.add(idx(i + 1, a), k, -1.0);
                }
            }
            for a in 0..q - 1 {
                let w = h * h * coeff * (-(vals[a + 1] - vals[a])).exp();
                let (ka, kb) = (idx(i, a), idx(i, a + 1));
                jac.add(ka, ka, -w);
                jac.add(kb, kb, -w);
                jac.add(kb, ka, w);
            }
        }
        let step = jac
            .ldlt()
            .map_err(|e| LabError::NewtonDiverged(format!("singular Newton system: {e}")))?
            .solve(&rhs);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let mut trial = f.clone();
            for i in 1..n - 1 {
                for a in 0..q {
                    trial[a][i] += lambda * step[idx(i, a)];
                }
            }
            if check_order(&trial).is_ok() {
                let r = residual_sup(&trial, h, coeff);
                if r.is_finite() && r < res {
                    f = trial;
                    res = r;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(LabError::NewtonDiverged(format!("line search failed at residual {res:.3e}")));
        }
    }
    check_order(&f)?;
    Ok(TodaState { q, x_grid: x_grid.to_vec(), f, coeff, newton_iterations: iterations, residual: res })
}

/// `(ρ')^2/2 + 2c e^{-ρ}` for the gap `ρ = f_2 - f_1` of a two-component
/// state, with `ρ'` from centred differences; one value per interior node.
pub fn q2_first_integral(state: &TodaState) -> Vec<f64> {
    let rho = state.gap(0);
    let x = &state.x_grid;
    (1..x.len() - 1)
        .map(|i| {
            let d = (rho[i + 1] - rho[i - 1]) / (x[i + 1] - x[i - 1]);
            0.5 * d * d + 2.0 * state.coeff * (-rho[i]).exp()
        })
        .collect()
}

/// Closed-form gap of the symmetric two-component problem on `[-L, L]`
/// with `ρ(±L) = D`: `ρ(x) = log(c cosh²(βx) / β²)`, `β` the smaller root of
/// `c cosh²(βL) = β² e^D`. Returns `β`, or `None` when no root exists.
pub fn q2_closed_form(c: f64, d: f64, l: f64) -> Option<f64> {
    q2_closed_form_roots(c, d, l).map(|(small, _)| small)
}

/// Both roots `β` of `c cosh²(βL) = β² e^D`; the larger one gives the
/// strongly sagging branch.
pub fn q2_closed_form_roots(c: f64, d: f64, l: f64) -> Option<(f64, f64)> {
    let phi = |b: f64| c.ln() + 2.0 * (b * l).cosh().ln() - 2.0 * b.ln() - d;
    // phi decreases up to the root of b L tanh(b L) = 1, then increases
    let (mut lo, mut hi) = (0.0, 10.0 / l);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * l * (mid * l).tanh() < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b_min = 0.5 * (lo + hi);
    if phi(b_min) > 0.0 {
        return None;
    }
    let root = |mut lo: f64, mut hi: f64, rising: bool| {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (phi(mid) > 0.0) != rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let (lo, mut hi) = (b_min * 1e-12, b_min * 2.0);
    if phi(lo) < 0.0 {
        return None;
    }
    while phi(hi) < 0.0 {
        hi *= 2.0;
    }
    Some((root(lo, b_min, false), root(b_min, hi, true)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(l: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| -l + 2.0 * l * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn two_components_match_closed_form() {
        let (c, d, l) = (12.0, 12.0, 40.0);
        let x = grid(l, 4001);
        let st = solve_toda_bvp(2, &x, c, &[(-d / 2.0, -d / 2.0), (d / 2.0, d / 2.0)]).unwrap();
        assert!(st.residual <= 1e-9);
        let beta = q2_closed_form(c, d, l).unwrap();
        assert!(beta > 0.005 && beta < 0.02, "{beta}");
        let rho = st.gap(0);
        for (i, &xi) in x.iter().enumerate() {
            let exact = (c * (beta * xi).cosh().powi(2) / (beta * beta)).ln();
            assert!((rho[i] - exact).abs() < 1e-6, "x={xi}: {} vs {exact}", rho[i]);
        }
        let fi = q2_first_integral(&st);
        let (lo, hi) = fi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi - lo <= 1e-7);
        // sag: interior gap below the boundary gap
        assert!(rho[2000] < d);
    }

    #[test]
    fn decoupled_components_are_linear() {
        let x = grid(5.0, 101);
        let st = solve_toda_bvp(2, &x, 0.0, &[(0.0, 1.0), (2.0, 5.0)]).unwrap();
        for (i, &xi) in x.iter().enumerate() {
            assert!((st.f[0][i] - (xi + 5.0) / 10.0).abs() < 1e-12);
            assert!((st.f[1][i] - (2.0 + 3.0 * (xi + 5.0) / 10.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn three_components_keep_the_middle_level() {
        let x = grid(20.0, 801);
        let st = solve_toda_bvp(3, &x, 12.0, &[(-12.0, -12.0), (0.0, 0.0), (12.0, 12.0)]).unwrap();
        assert!(st.f[1].iter().all(|v| v.abs() < 1e-12));
        assert!(st.f[0].iter().zip(&st.f[2]).all(|(a, b)| (a + b).abs() < 1e-9));
    }

    #[test]
    fn gaps_below_the_fold_have_no_solution() {
        let x = grid(20.0, 801);
        assert!(q2_closed_form(12.0, 8.0, 20.0).is_none());
        let err = solve_toda_bvp(2, &x, 12.0, &[(-4.0, -4.0), (4.0, 4.0)]).unwrap_err();
        assert!(matches!(err, LabError::NewtonDiverged(_)));
    }

    #[test]
    fn sagging_branch_from_seed() {
        let (c, d, l) = (12.0, 12.0, 40.0);
        let x = grid(l, 4001);
        let (small, large) = q2_closed_form_roots(c, d, l).unwrap();
        assert!(large > 5.0 * small);
        let rho: Vec<f64> = x.iter().map(|&t| (c * (large * t).cosh().powi(2) / (large * large)).ln()).collect();
        let seed = vec![rho.iter().map(|r| -r / 2.0).collect(), rho.iter().map(|r| r / 2.0).collect()];
        let st = solve_toda_from(&x, c, seed).unwrap();
        let got = st.gap(0);
        assert!(got.iter().zip(&rho).all(|(a, b)| (a - b).abs() < 1e-4));
    }

    #[test]
    fn crossing_boundary_data_is_rejected() {
        let x = grid(5.0, 51);
        let err = solve_toda_bvp(2, &x, 1.0, &[(0.0, 2.0), (1.0, 1.0)]).unwrap_err();
        assert!(matches!(err, LabError::OrderingViolated { component: 1 }));
    }
}
