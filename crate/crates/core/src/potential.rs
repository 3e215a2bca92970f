//! Double-well potentials W on [-1, 1] with hand-coded derivatives.
//!
//! The normalization assumed everywhere in the crate is W > 0 on (-1, 1),
//! W(±1) = W'(±1) = 0, W''(±1) = 1, with a single interior critical point
//! at u = 0.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{LabError, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Tolerance for W''(±1) = 1.
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// Tolerance for W(±1) = 0 and W'(±1) = 0.
pub const BOUNDARY_ZERO_TOL: f64 = 1e-12;
const SCAN_POINTS: usize = 10_000;

/// A double-well potential with derivatives up to third order.
#[derive(Clone)]
pub struct Potential {
    pub name: String,
    w: ScalarFn,
    d1: ScalarFn,
    d2: ScalarFn,
    d3: ScalarFn,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential").field("name", &self.name).finish()
    }
}

impl Potential {
    pub fn new<W, D1, D2, D3>(name: impl Into<String>, w: W, d1: D1, d2: D2, d3: D3) -> Self
    where
        W: Fn(f64) -> f64 + Send + Sync + 'static,
        D1: Fn(f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64) -> f64 + Send + Sync + 'static,
        D3: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { name: name.into(), w: Arc::new(w), d1: Arc::new(d1), d2: Arc::new(d2), d3: Arc::new(d3) }
    }

    /// Potential given by polynomial coefficients `c[k]` of `u^k`.
    pub fn polynomial(name: impl Into<String>, coeffs: &[f64]) -> Self {
        let c0: Vec<f64> = coeffs.to_vec();
        let c1 = poly_derivative(&c0);
        let c2 = poly_derivative(&c1);
        let c3 = poly_derivative(&c2);
        Self::new(
            name,
            move |u| poly_eval(&c0, u),
            move |u| poly_eval(&c1, u),
            move |u| poly_eval(&c2, u),
            move |u| poly_eval(&c3, u),
        )
    }

    #[inline]
    pub fn w(&self, u: f64) -> f64 {
        (self.w)(u)
    }
    #[inline]
    pub fn d1(&self, u: f64) -> f64 {
        (self.d1)(u)
    }
    #[inline]
    pub fn d2(&self, u: f64) -> f64 {
        (self.d2)(u)
    }
    #[inline]
    pub fn d3(&self, u: f64) -> f64 {
        (self.d3)(u)
    }
}

fn poly_eval(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * u + a)
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter().enumerate().skip(1).map(|(k, &a)| k as f64 * a).collect()
}

/// The model potential W(u) = (1 - u^2)^2 / 8.
pub fn make_quartic() -> Potential {
    Potential::new(
        "quartic",
        |u| {
            let s = 1.0 - u * u;
            s * s / 8.0
        },
        |u| -u * (1.0 - u * u) / 2.0,
        |u| (3.0 * u * u - 1.0) / 2.0,
        |u| 3.0 * u,
    )
}

/// One normalization check and its measured defect.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub potential: String,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Check every normalization of `p`.
pub fn validate(p: &Potential) -> Result<ValidationReport> {
    let grid: Vec<f64> = (0..=SCAN_POINTS).map(|k| -1.0 + 2.0 * k as f64 / SCAN_POINTS as f64).collect();
    for &u in &grid {
        for v in [p.w(u), p.d1(u), p.d2(u), p.d3(u)] {
            if !v.is_finite() {
                return Err(LabError::NotEvaluable { u });
            }
        }
    }
    let mut checks = Vec::new();
    let zero = p.w(1.0).abs().max(p.w(-1.0).abs());
    checks.push(Check { name: "W(±1)=0", passed: zero <= BOUNDARY_ZERO_TOL, defect: zero });
    let slope = p.d1(1.0).abs().max(p.d1(-1.0).abs());
    checks.push(Check { name: "W'(±1)=0", passed: slope <= BOUNDARY_ZERO_TOL, defect: slope });
    let curv = (p.d2(1.0) - 1.0).abs().max((p.d2(-1.0) - 1.0).abs());
    checks.push(Check { name: "W''(±1)=1", passed: curv <= NORMALIZATION_TOL, defect: curv });

    // positivity on the open interval, away from the wells
    let min_interior = grid
        .iter()
        .filter(|u| u.abs() < 0.999)
        .map(|&u| p.w(u))
        .fold(f64::INFINITY, f64::min);
    checks.push(Check { name: "W>0 in (-1,1)", passed: min_interior > 0.0, defect: (-min_interior).max(0.0) });

    // sign changes of W' strictly inside (-1, 1)
    let interior: Vec<f64> = grid[1..grid.len() - 1].to_vec();
    let mut crossings = Vec::new();
    for pair in interior.windows(2) {
        let (a, b) = (p.d1(pair[0]), p.d1(pair[1]));
        if a == 0.0 {
            crossings.push(pair[0]);
        } else if a * b < 0.0 {
            crossings.push(pair[0] - a * (pair[1] - pair[0]) / (b - a));
        }
    }
    let spacing = 2.0 / SCAN_POINTS as f64;
    let unique_at_zero = crossings.len() == 1 && crossings[0].abs() <= spacing;
    let defect = if crossings.is_empty() {
        1.0
    } else {
        crossings.iter().map(|c| c.abs()).fold(0.0, f64::max).max((crossings.len() as f64 - 1.0).abs())
    };
    checks.push(Check { name: "unique critical point at 0", passed: unique_at_zero, defect });

    Ok(ValidationReport { potential: p.name.clone(), checks })
}

/// Name-to-constructor registry. `quartic` is always present.
#[derive(Clone)]
pub struct PotentialRegistry {
    entries: BTreeMap<String, Potential>,
}

impl Default for PotentialRegistry {
    fn default() -> Self {
        let mut entries = BTreeMap::new();
        entries.insert("quartic".to_string(), make_quartic());
        Self { entries }
    }
}

impl PotentialRegistry {
    pub fn register(&mut self, p: Potential) {
        self.entries.insert(p.name.clone(), p);
    }

    pub fn get(&self, name: &str) -> Result<Potential> {
        self.entries.get(name).cloned().ok_or_else(|| LabError::UnknownPotential(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_values() {
        let p = make_quartic();
        assert_eq!(p.w(0.0), 0.125);
        assert_eq!(p.w(1.0), 0.0);
        assert_eq!(p.d1(1.0), 0.0);
        assert_eq!(p.d2(1.0), 1.0);
        assert!(validate(&p).unwrap().all_passed());
    }

    #[test]
    fn unnormalized_quartic_fails_curvature_check_by_seven() {
        // (1 - u^2)^2 = 1 - 2u^2 + u^4
        let p = Potential::polynomial("raw", &[1.0, 0.0, -2.0, 0.0, 1.0]);
        let r = validate(&p).unwrap();
        let c = r.check("W''(±1)=1").unwrap();
        assert!(!c.passed);
        assert!((c.defect - 7.0).abs() < 1e-12);
        assert!(r.check("unique critical point at 0").unwrap().passed);
    }

    #[test]
    fn tilted_quartic_fails_critical_point_check() {
        let p = Potential::polynomial("tilted", &[0.125, 0.01, -0.25, 0.0, 0.125]);
        let r = validate(&p).unwrap();
        assert!(!r.check("unique critical point at 0").unwrap().passed);
        assert!(!r.all_passed());
    }

    #[test]
    fn non_finite_potential_is_rejected() {
        let p = Potential::new("bad", |u| 1.0 / u, |u| u, |u| u, |u| u);
        assert!(matches!(validate(&p), Err(LabError::NotEvaluable { .. })));
    }

    #[test]
    fn registry_resolves_builtin_and_custom() {
        let mut reg = PotentialRegistry::default();
        assert_eq!(reg.get("quartic").unwrap().name, "quartic");
        assert!(reg.get("sextic").is_err());
        reg.register(Potential::polynomial("custom", &[0.125, 0.0, -0.25, 0.0, 0.125]));
        assert!(reg.get("custom").is_ok());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = make_quartic();
        let h = 1e-5;
        for k in 0..=200 {
            let u = -1.0 + k as f64 * 0.01;
            let fd1 = (p.w(u + h) - p.w(u - h)) / (2.0 * h);
            let fd2 = (p.d1(u + h) - p.d1(u - h)) / (2.0 * h);
            let fd3 = (p.d2(u + h) - p.d2(u - h)) / (2.0 * h);
            assert!((p.d1(u) - fd1).abs() < 1e-9);
            assert!((p.d2(u) - fd2).abs() < 1e-9);
            assert!((p.d3(u) - fd3).abs() < 1e-9);
        }
    }
}
