//! Lowest eigenvalue of the discrete linearization `-Δ_h + W''(u)` with
//! Dirichlet boundary conditions.

use std::f64::consts::PI;

use serde::Serialize;

use super::field::ScalarField2D;
use super::newton::{assemble_operator, Numbering};
use crate::error::{LabError, Result};
use crate::linalg::{dot, norm};
use crate::potential::Potential;

/// Eigenvalues at or above this count as stable.
pub const STABILITY_TOL: f64 = -1e-6;
const EIG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct StabilityResult {
    pub min_eigenvalue: f64,
    pub stable: bool,
    /// Normalized eigenvector on the interior points (row-major, full grid
    /// with zeros on the boundary).
    #[serde(skip)]
    pub eigenvector: Vec<f64>,
    pub factorizations: usize,
}

pub fn stability_check(u: &ScalarField2D, p: &Potential) -> Result<StabilityResult> {
    smallest_eigenvalue(u, &|v| p.d2(v))
}

/// Shifted inverse iteration. The shift starts below `min W''` (a lower
/// bound since `-Δ_h` is positive) and is moved up towards the Rayleigh
/// quotient, each new shift confirmed to lie below the spectrum by the
/// inertia of its LDLᵀ factorization.
pub fn smallest_eigenvalue(u: &ScalarField2D, w2: &dyn Fn(f64) -> f64) -> Result<StabilityResult> {
    if u.nx < 3 || u.ny < 3 {
        return Err(LabError::Precondition("grid has no interior".into()));
    }
    let num = Numbering::new(u.nx, u.ny);
    let n = num.len();
    let op = assemble_operator(u, w2, 0.0);
    let lower = num.points().map(|(i, j)| w2(u.at(i, j))).fold(f64::INFINITY, f64::min);
    let mut shift = lower - 1e-3 * (1.0 + lower.abs());
    // smooth positive start, overlapping the ground state
    let mut x = vec![0.0; n];
    for (i, j) in num.points() {
        let s = (PI * i as f64 / (u.nx - 1) as f64).sin();
        let t = (PI * j as f64 / (u.ny - 1) as f64).sin();
        x[num.index(i, j)] = s * t + 1e-3;
    }
    let nx0 = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx0);
    let mut factorizations = 0;
    let mut rq = f64::NAN;
    for _stage in 0..60 {
        let mut shifted = op.clone();
        shifted.add_diagonal(-shift);
        let fac = shifted.ldlt().map_err(|e| LabError::LinearSolveFailure(e.to_string()))?;
        factorizations += 1;
        if fac.negative_count() > 0 {
            return Err(LabError::LinearSolveFailure(format!("shift {shift} is not below the spectrum")));
        }
        let mut resid = f64::INFINITY;
        for _ in 0..40 {
            let mut y = fac.solve(&x);
            let ny = norm(&y);
            if !(ny.is_finite() && ny > 0.0) {
                return Err(LabError::LinearSolveFailure("inverse iteration broke down".into()));
            }
            y.iter_mut().for_each(|v| *v /= ny);
            x = y;
            let ax = op.matvec(&x);
            rq = dot(&x, &ax);
            resid = ax.iter().zip(&x).map(|(a, v)| (a - rq * v).powi(2)).sum::<f64>().sqrt();
            if resid < EIG_TOL * (1.0 + rq.abs()) {
                break;
            }
        }
        if resid < EIG_TOL * (1.0 + rq.abs()) {
            break;
        }
        // move the shift up, staying below the smallest eigenvalue
        let mut next = rq - 2.0 * resid;
        loop {
            if next <= shift {
                break;
            }
            let mut trial = op.clone();
            trial.add_diagonal(-next);
            factorizations += 1;
            match trial.ldlt() {
                Ok(f) if f.negative_count() == 0 => break,
                _ => next = 0.5 * (shift + next),
            }
            if next - shift < 1e-14 * (1.0 + shift.abs()) {
                next = shift;
                break;
            }
        }
        shift = next;
    }
    let mut full = vec![0.0; u.nx * u.ny];
    for (i, j) in num.points() {
        full[u.idx(i, j)] = x[num.index(i, j)];
    }
    Ok(StabilityResult { min_eigenvalue: rq, stable: rq >= STABILITY_TOL, eigenvector: full, factorizations })
}
