//! Two-layer sweeps over the gap `D`, with the separation scale `1/D`
//! standing in for `ε`.

use serde::Serialize;

use super::fit::{fit_scaling, Model, ScalingFit};
use crate::allencahn2d::{solve_newton, stability_check, two_layer_initial, LayerBox, NewtonOptions};
use crate::error::Result;
use crate::exec;
use crate::potential::Potential;
use crate::profile1d::Profile;
use crate::reduction::{reduce, Reduction, ReductionOptions};

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub gaps: Vec<f64>,
    pub geometry: LayerBox,
    pub refine: bool,
    pub newton: NewtonOptions,
    pub reduction: ReductionOptions,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub gap: f64,
    pub eps_analog: f64,
    pub d_min: f64,
    pub curvature_max: f64,
    /// `A(r)` at the largest configured radius.
    pub amplitude: f64,
    pub e0_max: f64,
    /// `(4 E⁰_{h/2} - E⁰_h) / 3` on shared samples; equal to `e0_max`
    /// without refinement.
    pub e0_extrapolated: f64,
    pub interaction_scale: f64,
    pub ratio: f64,
    pub phi_sup: f64,
    pub h_sup: f64,
    pub orthogonality: f64,
    pub min_eigenvalue: f64,
    pub stable: bool,
    pub newton_iterations: usize,
    pub newton_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// `max|H|` against `1/D`.
    pub curvature_fit: Option<ScalingFit>,
    /// `A(r)` against `1/D`.
    pub amplitude_fit: Option<ScalingFit>,
    pub ratio_decreasing: bool,
}

struct Solved {
    red: Reduction,
    iterations: usize,
    residual: f64,
    min_eig: f64,
    stable: bool,
}

fn solve_at(profile: &Profile, potential: &Potential, gap: f64, geom: LayerBox, spec: &SweepSpec, check: bool) -> Result<Solved> {
    let init = two_layer_initial(profile, gap, geom);
    let out = solve_newton(&init, potential, &spec.newton)?;
    let red = reduce(&out.field, profile, &spec.reduction)?;
    let (min_eig, stable) = if check {
        let s = stability_check(&out.field, potential)?;
        (s.min_eigenvalue, s.stable)
    } else {
        (f64::NAN, false)
    };
    Ok(Solved { red, iterations: out.iterations, residual: out.residual, min_eig, stable })
}

/// Largest `|(4 E_fine - E_coarse) / 3|` over coarse samples that have a
/// fine sample at the same abscissa, inside the edge margin.
pub fn richardson_e0(coarse: &Reduction, fine: &Reduction, x_lo: f64, x_hi: f64) -> f64 {
    let mut best = 0.0_f64;
    for (rc, rf) in coarse.rows.iter().zip(&fine.rows) {
        if rf.len() < 2 {
            continue;
        }
        let step = rf[1].x - rf[0].x;
        for r in rc.iter().filter(|r| r.x >= x_lo && r.x <= x_hi) {
            let m = ((r.x - rf[0].x) / step).round();
            if m < 0.0 || m as usize >= rf.len() {
                continue;
            }
            let f = &rf[m as usize];
            if (f.x - r.x).abs() > 1e-9 * (1.0 + r.x.abs()) {
                continue;
            }
            best = best.max(((4.0 * f.e0 - r.e0) / 3.0).abs());
        }
    }
    best
}

fn one_point(profile: &Profile, potential: &Potential, gap: f64, spec: &SweepSpec) -> Result<SweepPoint> {
    let geom = spec.geometry;
    let coarse = solve_at(profile, potential, gap, geom, spec, true)?;
    let (x_lo, x_hi) = (-geom.half_width + spec.reduction.edge_margin, geom.half_width - spec.reduction.edge_margin);
    let (best, e0_ext) = if spec.refine {
        let fine = solve_at(profile, potential, gap, LayerBox { h: 0.5 * geom.h, ..geom }, spec, false)?;
        let e = richardson_e0(&coarse.red, &fine.red, x_lo, x_hi);
        (fine.red, e)
    } else {
        let e = coarse.red.report.toda_residual_max;
        (coarse.red.clone(), e)
    };
    let r = &best.report;
    Ok(SweepPoint {
        gap,
        eps_analog: r.eps_analog,
        d_min: r.d_alpha_min,
        curvature_max: r.curvature_max,
        amplitude: r.a_of_r.last().map_or(0.0, |a| a.1),
        e0_max: r.toda_residual_max,
        e0_extrapolated: e0_ext,
        interaction_scale: r.interaction_scale,
        ratio: e0_ext / r.interaction_scale,
        phi_sup: r.phi_sup,
        h_sup: r.h_sup,
        orthogonality: r.orthogonality_residual,
        min_eigenvalue: coarse.min_eig,
        stable: coarse.stable,
        newton_iterations: coarse.iterations,
        newton_residual: coarse.residual,
    })
}

/// Solve, reduce and measure every gap; points come back sorted by gap.
pub fn two_layer_sweep(profile: &Profile, potential: &Potential, spec: &SweepSpec) -> Result<SweepResult> {
    let mut gaps = spec.gaps.clone();
    gaps.sort_by(f64::total_cmp);
    gaps.dedup();
    let points = exec::map(&gaps, |&d| one_point(profile, potential, d, spec)).into_iter().collect::<Result<Vec<_>>>()?;
    let eps: Vec<f64> = points.iter().map(|p| p.eps_analog).collect();
    let fit = |ys: Vec<f64>| if ys.iter().all(|y| *y > 0.0) { fit_scaling(&eps, &ys, Model::PowerLaw).ok() } else { None };
    let curvature_fit = fit(points.iter().map(|p| p.curvature_max).collect());
    let amplitude_fit = fit(points.iter().map(|p| p.amplitude).collect());
    let ratio_decreasing = points.windows(2).all(|w| w[1].ratio < w[0].ratio);
    Ok(SweepResult { points, curvature_fit, amplitude_fit, ratio_decreasing })
}
