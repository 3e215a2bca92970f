//! Level sets of grid fields as families of graphs `y = f_α(x)`, and their
//! curvature.

use serde::Serialize;

use super::field::ScalarField2D;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct InterfaceGraph {
    pub level: f64,
    pub x_samples: Vec<f64>,
    pub f_values: Vec<f64>,
    pub df: Vec<f64>,
    pub d2f: Vec<f64>,
    /// Position in the bottom-to-top ordering, starting at 1.
    pub component_index: usize,
    /// `+1` when the field increases across the graph going up.
    pub orientation: f64,
}

impl InterfaceGraph {
    /// Graph from heights on a uniform `x` grid; derivatives by second
    /// order differences (one-sided at the ends).
    pub fn from_samples(level: f64, x_samples: Vec<f64>, f_values: Vec<f64>, component_index: usize, orientation: f64) -> Self {
        let (df, d2f) = differentiate(&x_samples, &f_values);
        Self { level, x_samples, f_values, df, d2f, component_index, orientation }
    }

    pub fn len(&self) -> usize {
        self.x_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_samples.is_empty()
    }

    /// Height at `x` by cubic interpolation of the samples, clamped to the
    /// sampled range.
    pub fn height(&self, x: f64) -> f64 {
        let xs = &self.x_samples;
        let n = xs.len();
        if n == 1 {
            return self.f_values[0];
        }
        let h = (xs[n - 1] - xs[0]) / (n - 1) as f64;
        let s = ((x - xs[0]) / h).clamp(0.0, (n - 1) as f64);
        let k = (s.floor() as usize).min(n - 2);
        let lo = k.saturating_sub(1).min(n.saturating_sub(4));
        let hi = (lo + 4).min(n);
        lagrange(&xs[lo..hi], &self.f_values[lo..hi], xs[0] + s * h)
    }
}

fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (k, (&xk, &yk)) in xs.iter().zip(ys).enumerate() {
        let mut w = 1.0;
        for (l, &xl) in xs.iter().enumerate() {
            if l != k {
                w *= (x - xl) / (xk - xl);
            }
        }
        acc += w * yk;
    }
    acc
}

/// Second-order first and second differences on a uniform grid.
pub fn differentiate(x: &[f64], f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    if n < 4 {
        return (vec![0.0; n], vec![0.0; n]);
    }
    let h = (x[n - 1] - x[0]) / (n - 1) as f64;
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 1..n - 1 {
        d1[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
        d2[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h);
    }
    d1[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d1[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    d2[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (h * h);
    d2[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / (h * h);
    (d1, d2)
}

/// Root of the cubic through the column samples around the bracket
/// `[j, j+1]`.
fn column_root(col: &[f64], y0: f64, hy: f64, j: usize, level: f64) -> f64 {
    let n = col.len();
    let lo = j.saturating_sub(1).min(n.saturating_sub(4));
    let hi = (lo + 4).min(n);
    let ts: Vec<f64> = (lo..hi).map(|k| k as f64).collect();
    let vs: Vec<f64> = col[lo..hi].iter().map(|v| v - level).collect();
    let p = |t: f64| lagrange(&ts, &vs, t);
    let (mut a, mut b) = (j as f64, j as f64 + 1.0);
    let (mut pa, pb) = (p(a), p(b));
    if pa == 0.0 {
        return y0 + hy * a;
    }
    if pb == 0.0 {
        return y0 + hy * b;
    }
    // the interpolant keeps the bracket's sign change
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        let pm = p(m);
        if pm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if (pm > 0.0) == (pa > 0.0) {
            a = m;
            pa = pm;
        } else {
            b = m;
        }
    }
    y0 + hy * 0.5 * (a + b)
}

/// Crossings of `{u = level}` in every grid column, grouped bottom to top
/// into graphs.
pub fn extract_levelset(u: &ScalarField2D, level: f64) -> Result<Vec<InterfaceGraph>> {
    if !(level.abs() < 1.0) {
        return Err(LabError::Precondition(format!("level {level} must lie in (-1, 1)")));
    }
    let mut per_column: Vec<Vec<(f64, f64)>> = Vec::with_capacity(u.nx);
    let mut col = vec![0.0; u.ny];
    for i in 0..u.nx {
        for (j, c) in col.iter_mut().enumerate() {
            *c = u.at(i, j);
        }
        let mut roots = vec![];
        for j in 0..u.ny - 1 {
            let (a, b) = (col[j] - level, col[j + 1] - level);
            // half-open test so a node exactly on the level counts once
            if (a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0) {
                roots.push((column_root(&col, u.y0, u.hy, j, level), if b > a { 1.0 } else { -1.0 }));
            }
        }
        per_column.push(roots);
    }
    let expected = per_column[0].len();
    for (i, roots) in per_column.iter().enumerate() {
        if roots.len() != expected {
            return Err(LabError::NonGraphLevelSet { column: i, found: roots.len(), expected });
        }
    }
    let xs: Vec<f64> = (0..u.nx).map(|i| u.x(i)).collect();
    let mut graphs = Vec::with_capacity(expected);
    for a in 0..expected {
        let orientation = per_column[0][a].1;
        if let Some(i) = per_column.iter().position(|r| r[a].1 != orientation) {
            return Err(LabError::NonGraphLevelSet { column: i, found: per_column[i].len(), expected });
        }
        let f: Vec<f64> = per_column.iter().map(|r| r[a].0).collect();
        graphs.push(InterfaceGraph::from_samples(level, xs.clone(), f, a + 1, orientation));
    }
    Ok(graphs)
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureSamples {
    pub x: Vec<f64>,
    /// `H = f''/(1+f'^2)^{3/2}`.
    pub mean: Vec<f64>,
    /// Second fundamental form norm; for curves `|A| = |H|`.
    pub second_fundamental: Vec<f64>,
}

impl CurvatureSamples {
    pub fn max_abs(&self) -> f64 {
        self.mean.iter().fold(0.0_f64, |m, h| m.max(h.abs()))
    }
}

pub fn curvature(graph: &InterfaceGraph) -> Result<CurvatureSamples> {
    if graph.len() < 5 {
        return Err(LabError::Precondition(format!("curvature needs 5 samples, got {}", graph.len())));
    }
    let mean: Vec<f64> = graph.df.iter().zip(&graph.d2f).map(|(d1, d2)| d2 / (1.0 + d1 * d1).powf(1.5)).collect();
    Ok(CurvatureSamples {
        x: graph.x_samples.clone(),
        second_fundamental: mean.iter().map(|h| h.abs()).collect(),
        mean,
    })
}
