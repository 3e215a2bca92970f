//! The level-set curvature term `|B(u)|² = (|∇²u|² - |∇|∇u||²)/|∇u|²`.

use serde::Serialize;

use super::field::ScalarField2D;

pub const DEFAULT_BAND: f64 = 0.1;
/// Points with a smaller gradient are left out.
pub const MIN_GRADIENT: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct SzSample {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub b2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SzField {
    pub band: f64,
    pub samples: Vec<SzSample>,
    /// Band points skipped because `|∇u|` was too small.
    pub excluded: usize,
}

impl SzField {
    pub fn max(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, s| m.max(s.b2))
    }
}

/// Gradient and Hessian by centered differences at an interior point.
pub(crate) fn jet(u: &ScalarField2D, i: usize, j: usize) -> ([f64; 2], [f64; 3]) {
    let (hx, hy) = (u.hx, u.hy);
    let c = u.at(i, j);
    let ux = (u.at(i + 1, j) - u.at(i - 1, j)) / (2.0 * hx);
    let uy = (u.at(i, j + 1) - u.at(i, j - 1)) / (2.0 * hy);
    let uxx = (u.at(i + 1, j) - 2.0 * c + u.at(i - 1, j)) / (hx * hx);
    let uyy = (u.at(i, j + 1) - 2.0 * c + u.at(i, j - 1)) / (hy * hy);
    let uxy = (u.at(i + 1, j + 1) - u.at(i + 1, j - 1) - u.at(i - 1, j + 1) + u.at(i - 1, j - 1)) / (4.0 * hx * hy);
    ([ux, uy], [uxx, uxy, uyy])
}

/// `|B|²` at one interior point, `None` where the gradient vanishes.
pub fn b_squared_at(u: &ScalarField2D, i: usize, j: usize) -> Option<f64> {
    let ([ux, uy], [uxx, uxy, uyy]) = jet(u, i, j);
    let g2 = ux * ux + uy * uy;
    if g2.sqrt() < MIN_GRADIENT {
        return None;
    }
    // |∇²u|² - |∇²u ν|² equals |∇²u τ|² for the unit tangent τ
    let (tx, ty) = (-uy, ux);
    let (a, b) = (uxx * tx + uxy * ty, uxy * tx + uyy * ty);
    Some((a * a + b * b) / (g2 * g2))
}

/// `|B|²` on the interior points with `|u| <= 1 - band`.
pub fn sz_curvature_term(u: &ScalarField2D, band: f64) -> SzField {
    let mut samples = vec![];
    let mut excluded = 0;
    for j in 1..u.ny - 1 {
        for i in 1..u.nx - 1 {
            let v = u.at(i, j);
            if v.abs() > 1.0 - band {
                continue;
            }
            match b_squared_at(u, i, j) {
                Some(b2) => samples.push(SzSample { x: u.x(i), y: u.y(j), u: v, b2 }),
                None => excluded += 1,
            }
        }
    }
    SzField { band, samples, excluded }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_layers_vanish() {
        for a in [1.0, 2.5] {
            let u = ScalarField2D::on_box(-3.0, 3.0, -8.0, 8.0, 0.1, move |_, y| (0.5 * a * y).tanh());
            let s = sz_curvature_term(&u, DEFAULT_BAND);
            assert!(!s.samples.is_empty() && s.max() <= 1e-6);
        }
    }

    #[test]
    fn circular_layer() {
        let u = ScalarField2D::on_box(-25.0, 25.0, -25.0, 25.0, 0.1, |x, y| (0.5 * ((x * x + y * y).sqrt() - 20.0)).tanh());
        let s = sz_curvature_term(&u, DEFAULT_BAND);
        let near: Vec<&SzSample> = s.samples.iter().filter(|p| ((p.x * p.x + p.y * p.y).sqrt() - 20.0).abs() < 0.05).collect();
        assert!(near.len() > 100);
        for p in near {
            let r2 = p.x * p.x + p.y * p.y;
            assert!((p.b2 * r2 - 1.0).abs() < 0.05, "{} at ({}, {})", p.b2 * r2, p.x, p.y);
        }
    }

    #[test]
    fn constant_field_is_excluded() {
        let u = ScalarField2D::on_box(0.0, 1.0, 0.0, 1.0, 0.1, |_, _| 0.2);
        let s = sz_curvature_term(&u, DEFAULT_BAND);
        assert!(s.samples.is_empty());
        assert_eq!(s.excluded, 81);
    }
}
