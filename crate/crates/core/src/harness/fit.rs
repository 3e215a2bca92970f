//! Least-squares scaling fits `y ≈ C ε^p (log|log ε|)^q` on log data.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    PowerLaw,
    /// Power law with a `(log|log ε|)^q` correction.
    LogLogCorrected,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub p: f64,
    pub q: f64,
    pub log_c: f64,
    /// Half-widths of the 95% intervals; zero when there are no spare
    /// degrees of freedom left.
    pub p_ci: f64,
    pub q_ci: f64,
    /// RMS of the log residuals.
    pub residual: f64,
    pub points: usize,
}

/// Two-sided 95% Student t quantile.
fn t95(dof: usize) -> f64 {
    if dof == 0 {
        return 0.0;
    }
    StudentsT::new(0.0, 1.0, dof as f64).map_or(1.96, |t| t.inverse_cdf(0.975))
}

/// Inverse of a small symmetric positive definite matrix by Gauss-Jordan.
fn invert(mut a: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, piv);
        inv.swap(c, piv);
        let d = a[c][c];
        for k in 0..n {
            a[c][k] /= d;
            inv[c][k] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                for k in 0..n {
                    a[r][k] -= f * a[c][k];
                    inv[r][k] -= f * inv[c][k];
                }
            }
        }
    }
    Some(inv)
}

pub fn fit_scaling(eps: &[f64], y: &[f64], model: Model) -> Result<ScalingFit> {
    let n = eps.len();
    if n != y.len() {
        return Err(LabError::Precondition(format!("{n} abscissae for {} values", y.len())));
    }
    if n < 4 {
        return Err(LabError::IllConditionedFit(format!("{n} points, need 4")));
    }
    if eps.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(LabError::Precondition("scaling fits need positive data".into()));
    }
    let with_q = model == Model::LogLogCorrected;
    if with_q && eps.iter().any(|e| e.ln().abs() <= 1.0) {
        return Err(LabError::Precondition("the log-log correction needs ε < 1/e".into()));
    }
    let rows: Vec<Vec<f64>> = eps
        .iter()
        .map(|&e| {
            let mut r = vec![1.0, e.ln()];
            if with_q {
                r.push(e.ln().abs().ln().ln());
            }
            r
        })
        .collect();
    let k = rows[0].len();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    // standardized columns guard against near collinearity
    let scale: Vec<f64> = (0..k)
        .map(|c| {
            let m = rows.iter().map(|r| r[c]).sum::<f64>() / n as f64;
            let s = rows.iter().map(|r| (r[c] - m).powi(2)).sum::<f64>().sqrt();
            if c == 0 {
                (n as f64).sqrt()
            } else {
                s
            }
        })
        .collect();
    if scale.iter().any(|s| *s < 1e-12) {
        return Err(LabError::IllConditionedFit("constant regressor".into()));
    }
    let mut ata = vec![vec![0.0; k]; k];
    let mut aty = vec![0.0; k];
    for (r, v) in rows.iter().zip(&ly) {
        for i in 0..k {
            aty[i] += r[i] / scale[i] * v;
            for j in 0..k {
                ata[i][j] += r[i] * r[j] / (scale[i] * scale[j]);
            }
        }
    }
    let inv = invert(ata).ok_or_else(|| LabError::IllConditionedFit("singular normal equations".into()))?;
    let norm1: f64 = inv.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    if norm1 > 1e10 {
        return Err(LabError::IllConditionedFit("regressors nearly collinear".into()));
    }
    let beta: Vec<f64> = (0..k).map(|i| (0..k).map(|j| inv[i][j] * aty[j]).sum::<f64>() / scale[i]).collect();
    let resid: Vec<f64> = rows.iter().zip(&ly).map(|(r, v)| v - r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>()).collect();
    let ss: f64 = resid.iter().map(|r| r * r).sum();
    let dof = n - k;
    let sigma2 = if dof > 0 { ss / dof as f64 } else { 0.0 };
    let ci = |i: usize| t95(dof) * (sigma2 * inv[i][i]).sqrt() / scale[i];
    Ok(ScalingFit {
        p: beta[1],
        q: if with_q { beta[2] } else { 0.0 },
        log_c: beta[0],
        p_ci: ci(1),
        q_ci: if with_q { ci(2) } else { 0.0 },
        residual: (ss / n as f64).sqrt(),
        points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (2..=12).map(|k| 10f64.powi(-k)).collect()
    }

    #[test]
    fn recovers_log_log_model() {
        let e = grid();
        let y: Vec<f64> = e.iter().map(|&e| 3.0 * e * e.ln().abs().ln().powi(2)).collect();
        let f = fit_scaling(&e, &y, Model::LogLogCorrected).unwrap();
        assert!((f.p - 1.0).abs() < 0.05 && (f.q - 2.0).abs() < 0.3, "{f:?}");
        assert!(f.residual < 1e-10);
    }

    #[test]
    fn recovers_pure_power() {
        let e = grid();
        let y: Vec<f64> = e.iter().map(|&e| e * e).collect();
        let f = fit_scaling(&e, &y, Model::LogLogCorrected).unwrap();
        assert!((f.p - 2.0).abs() < 0.02 && f.q.abs() < 1e-6, "{f:?}");
        let g = fit_scaling(&e, &y, Model::PowerLaw).unwrap();
        assert!((g.p - 2.0).abs() < 1e-10);
    }

    #[test]
    fn noisy_fit_has_interval() {
        let e: Vec<f64> = (1..=8).map(|k| 0.5f64.powi(k)).collect();
        let y: Vec<f64> = e.iter().enumerate().map(|(i, &e)| e.powf(1.5) * (1.0 + 0.05 * if i % 2 == 0 { 1.0 } else { -1.0 })).collect();
        let f = fit_scaling(&e, &y, Model::PowerLaw).unwrap();
        assert!(f.p_ci > 0.0 && (f.p - 1.5).abs() < f.p_ci + 0.05);
    }

    #[test]
    fn too_few_or_degenerate() {
        assert!(matches!(fit_scaling(&[0.1, 0.01, 0.001], &[1.0, 2.0, 3.0], Model::PowerLaw), Err(LabError::IllConditionedFit(_))));
        assert!(matches!(fit_scaling(&[0.1; 5], &[1.0; 5], Model::PowerLaw), Err(LabError::IllConditionedFit(_))));
    }
}
