//! Fermi coordinates of a graph interface: nearest-point projection and
//! signed distance.

use crate::allencahn2d::{curvature, InterfaceGraph};
use crate::error::{LabError, Result};
use crate::linalg::solve_tridiagonal;

/// Cubic spline on a uniform grid with prescribed end second derivatives.
#[derive(Debug, Clone)]
pub struct Spline {
    x0: f64,
    dx: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    pub fn new(x: &[f64], y: &[f64], end_second: (f64, f64)) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(LabError::Precondition("spline needs two or more samples".into()));
        }
        let dx = (x[n - 1] - x[0]) / (n - 1) as f64;
        let mut m = vec![end_second.0; n];
        m[n - 1] = end_second.1;
        if n > 2 {
            let k = n - 2;
            let mut rhs: Vec<f64> = (1..n - 1).map(|i| 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (dx * dx)).collect();
            rhs[0] -= end_second.0;
            rhs[k - 1] -= end_second.1;
            let inner = solve_tridiagonal(&vec![1.0; k], &vec![4.0; k], &vec![1.0; k], &rhs)?;
            m[1..n - 1].copy_from_slice(&inner);
        }
        Ok(Self { x0: x[0], dx, y: y.to_vec(), m })
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.x0, self.x0 + self.dx * (self.y.len() - 1) as f64)
    }

    /// Value, first and second derivative; linear extension outside.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.y.len();
        let s = (x - self.x0) / self.dx;
        let k = (s.floor().max(0.0) as usize).min(n - 2);
        let h = self.dx;
        let a = (self.x0 + (k + 1) as f64 * h - x) / h;
        let b = 1.0 - a;
        let (y0, y1, m0, m1) = (self.y[k], self.y[k + 1], self.m[k], self.m[k + 1]);
        if s < 0.0 || s > (n - 1) as f64 {
            let (xe, ye, de) = if s < 0.0 {
                (self.x0, y0, (y1 - y0) / h - h * (2.0 * m0 + m1) / 6.0)
            } else {
                (self.x0 + (n - 1) as f64 * h, y1, (y1 - y0) / h + h * (m0 + 2.0 * m1) / 6.0)
            };
            return (ye + de * (x - xe), de, 0.0);
        }
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d = (y1 - y0) / h + (-(3.0 * a * a - 1.0) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let dd = a * m0 + b * m1;
        (v, d, dd)
    }
}

/// Where a point sits relative to one interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// `x`-parameter of the nearest point on the graph.
    pub s: f64,
    /// Signed distance, positive above the graph.
    pub d: f64,
    /// Upward unit normal at the nearest point, which is also `∇d`.
    pub normal: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct FermiFrame {
    pub graph: InterfaceGraph,
    pub band: f64,
    pub spline: Spline,
}

pub fn fermi_frame(graph: &InterfaceGraph, band: f64) -> Result<FermiFrame> {
    let kappa = curvature(graph)?.max_abs();
    if !(band > 0.0) || band * kappa >= 0.5 {
        return Err(LabError::FoldOver(format!("band {band} with curvature up to {kappa}")));
    }
    let n = graph.len();
    let spline = Spline::new(&graph.x_samples, &graph.f_values, (graph.d2f[0], graph.d2f[n - 1]))?;
    Ok(FermiFrame { graph: graph.clone(), band, spline })
}

impl FermiFrame {
    pub fn orientation(&self) -> f64 {
        self.graph.orientation
    }

    pub fn point(&self, s: f64) -> ([f64; 2], [f64; 2]) {
        let (f, df, _) = self.spline.eval(s);
        let r = (1.0 + df * df).sqrt();
        ([s, f], [-df / r, 1.0 / r])
    }

    /// Point at signed distance `z` along the normal through parameter `s`.
    pub fn from_fermi(&self, s: f64, z: f64) -> [f64; 2] {
        let (p, n) = self.point(s);
        [p[0] + z * n[0], p[1] + z * n[1]]
    }

    /// Nearest point by Newton on `½|X - (s, f(s))|²`. `None` when the
    /// nearest point leaves the sampled range.
    pub fn project(&self, x: f64, y: f64) -> Option<Projection> {
        let (lo, hi) = self.spline.x_range();
        let mut s = x.clamp(lo, hi);
        for _ in 0..50 {
            let (f, df, ddf) = self.spline.eval(s);
            let g = (s - x) + (f - y) * df;
            let h = 1.0 + df * df + (f - y) * ddf;
            let step = if h > 0.0 { g / h } else { g / (1.0 + df * df) };
            let next = (s - step).clamp(lo, hi);
            let done = (next - s).abs() < 1e-14 * (1.0 + s.abs());
            s = next;
            if done {
                break;
            }
        }
        let (f, df, _) = self.spline.eval(s);
        let g = (s - x) + (f - y) * df;
        let edge = (s - lo).abs() < 1e-12 || (s - hi).abs() < 1e-12;
        if edge && g.abs() > 1e-10 {
            return None;
        }
        let r = (1.0 + df * df).sqrt();
        let normal = [-df / r, 1.0 / r];
        let d = (x - s) * normal[0] + (y - f) * normal[1];
        Some(Projection { s, d, normal })
    }

    /// Whether `(x, y)` lies in the tubular band of the frame.
    pub fn covers(&self, x: f64, y: f64) -> bool {
        self.project(x, y).is_some_and(|p| p.d.abs() <= self.band)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> InterfaceGraph {
        let x: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let y = x.iter().map(|&t| f(t)).collect();
        InterfaceGraph::from_samples(0.0, x, y, 1, 1.0)
    }

    #[test]
    fn flat_line_and_circle() {
        let fr = fermi_frame(&graph(|_| 0.0, -5.0, 5.0, 101), 3.0).unwrap();
        let p = fr.project(0.0, 1.5).unwrap();
        assert_eq!((p.s, p.d), (0.0, 1.5));
        let fr = fermi_frame(&graph(|x| x, -5.0, 5.0, 101), 3.0).unwrap();
        let p = fr.project(0.0, 1.0).unwrap();
        assert!((p.d - 0.5_f64.sqrt()).abs() < 1e-8 && (p.s - 0.5).abs() < 1e-8);
        let fr = fermi_frame(&graph(|x| (100.0 - x * x).sqrt(), -6.0, 6.0, 241), 3.0).unwrap();
        let p = fr.project(0.0, 12.0).unwrap();
        assert!((p.d - 2.0).abs() < 1e-6, "{}", p.d);
        let p = fr.project(12.0 * 0.3_f64.sin(), 12.0 * 0.3_f64.cos()).unwrap();
        assert!((p.d - 2.0).abs() < 1e-6, "{}", p.d);
    }

    #[test]
    fn eikonal_in_band() {
        let fr = fermi_frame(&graph(|x| 0.3 * (0.4 * x).sin(), -8.0, 8.0, 321), 1.5).unwrap();
        let e = 1e-5;
        for &(x, y) in &[(0.0, 0.5), (1.3, -1.0), (-2.2, 1.2), (3.0, 0.1)] {
            let d = |x: f64, y: f64| fr.project(x, y).unwrap().d;
            let gx = (d(x + e, y) - d(x - e, y)) / (2.0 * e);
            let gy = (d(x, y + e) - d(x, y - e)) / (2.0 * e);
            assert!(((gx * gx + gy * gy).sqrt() - 1.0).abs() < 1e-4);
            let n = fr.project(x, y).unwrap().normal;
            assert!((n[0] - gx).abs() < 1e-4 && (n[1] - gy).abs() < 1e-4);
        }
        for s in [-3.0, 0.0, 2.5] {
            let p = fr.point(s).0;
            assert!(fr.project(p[0], p[1]).unwrap().d.abs() < 1e-12);
        }
    }

    #[test]
    fn fold_over_and_range() {
        let tight = graph(|x| (4.0 - x * x).max(0.0).sqrt(), -1.5, 1.5, 61);
        assert!(matches!(fermi_frame(&tight, 2.0), Err(LabError::FoldOver(_))));
        let fr = fermi_frame(&graph(|_| 0.0, -1.0, 1.0, 21), 1.0).unwrap();
        assert!(fr.project(3.0, 0.5).is_none());
        assert!(fr.covers(0.0, 0.9) && !fr.covers(0.0, 1.1));
    }

    #[test]
    fn spline_is_exact_on_cubics_with_matching_ends() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|t| t * t * t).collect();
        let sp = Spline::new(&x, &y, (0.0, 6.0 * 3.0)).unwrap();
        for t in [0.05, 1.0, 2.95] {
            let (v, d, dd) = sp.eval(t);
            assert!((v - t * t * t).abs() < 1e-12 && (d - 3.0 * t * t).abs() < 1e-11 && (dd - 6.0 * t).abs() < 1e-10);
        }
    }
}
