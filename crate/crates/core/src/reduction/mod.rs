//! Reduction of a layered solution to its interfaces: Fermi frames,
//! optimal shifts, the error `φ = u - g_*` and the Toda residual.

pub mod frame;
pub mod optimal;
pub mod residual;

pub use frame::{fermi_frame, FermiFrame, Projection, Spline};
pub use optimal::{approximate_solution, orthogonality_check, solve_optimal_h, OptimalH};
pub use residual::{amplitude, distance_diagnostics, toda_residual, DistanceDiagnostics, PairDiagnostics, TodaRow};

use serde::Serialize;

use crate::allencahn2d::{extract_levelset, ScalarField2D};
use crate::error::{LabError, Result};
use crate::exec;
use crate::profile1d::{truncate, Profile, TruncatedProfile};

#[derive(Debug, Clone)]
pub struct ReductionOptions {
    /// Level whose components are taken as the interfaces.
    pub level: f64,
    /// Half-width of the tubular band of each frame.
    pub band: f64,
    /// Orthogonality tolerance.
    pub tol: f64,
    /// `ε` of the truncated profile; by default `e^{-D/2}` from the
    /// smallest gap `D`, so the gluing window sits beyond the neighbours.
    pub trunc_eps: Option<f64>,
    /// Samples closer than this to the ends of a graph are left out of the
    /// reported norms and residuals.
    pub edge_margin: f64,
    /// Radii for `A(r; x)`, centred at the middle of the configuration.
    pub radii: Vec<f64>,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self { level: 0.0, band: 4.0, tol: 1e-9, trunc_eps: None, edge_margin: 4.0, radii: vec![2.0, 4.0, 6.0, 8.0] }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    /// `1/D_min`, the separation scale standing in for `ε`.
    pub eps_analog: f64,
    pub trunc_eps: f64,
    pub interfaces: usize,
    pub h_sup: f64,
    pub phi_sup: f64,
    pub phi_c1: f64,
    pub orthogonality_residual: f64,
    pub toda_residual_max: f64,
    pub toda_residual_swapped_max: f64,
    /// `2A²/σ₀ e^{-D_min}`, the size of the retained interaction term.
    pub interaction_scale: f64,
    pub d_alpha_min: f64,
    pub curvature_max: f64,
    pub a_of_r: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub frames: Vec<FermiFrame>,
    pub profile: TruncatedProfile,
    pub shifts: OptimalH,
    pub rows: Vec<Vec<TodaRow>>,
    pub report: ReductionReport,
}

/// `sup|φ|` and `sup(|φ| + |∇φ|)` over interior grid points with
/// `x` inside `[x_lo, x_hi]`.
pub fn phi_norms(u: &ScalarField2D, frames: &[FermiFrame], shifts: &OptimalH, pr: &TruncatedProfile, x_lo: f64, x_hi: f64) -> Result<(f64, f64)> {
    let hs = shifts.splines(frames)?;
    let mut phi = vec![0.0; u.nx * u.ny];
    exec::for_each_row(&mut phi, u.nx, |j, row| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = u.at(i, j) - approximate_solution(frames, &hs, pr, u.x(i), u.y(j));
        }
    });
    let (mut sup, mut c1) = (0.0_f64, 0.0_f64);
    for j in 1..u.ny - 1 {
        for i in 1..u.nx - 1 {
            let x = u.x(i);
            if x < x_lo || x > x_hi {
                continue;
            }
            let k = u.idx(i, j);
            let gx = (phi[k + 1] - phi[k - 1]) / (2.0 * u.hx);
            let gy = (phi[k + u.nx] - phi[k - u.nx]) / (2.0 * u.hy);
            sup = sup.max(phi[k].abs());
            c1 = c1.max(phi[k].abs() + gx.hypot(gy));
        }
    }
    Ok((sup, c1))
}

/// Extract the interfaces of `u`, solve for the optimal shifts and
/// measure everything the report holds.
pub fn reduce(u: &ScalarField2D, profile: &Profile, opts: &ReductionOptions) -> Result<Reduction> {
    let graphs = extract_levelset(u, opts.level)?;
    if graphs.is_empty() {
        return Err(LabError::Precondition(format!("no interface at level {}", opts.level)));
    }
    let frames = graphs.iter().map(|g| fermi_frame(g, opts.band)).collect::<Result<Vec<_>>>()?;
    let mut d_min = f64::INFINITY;
    for (a, fr) in frames.iter().enumerate() {
        for &s in &fr.graph.x_samples {
            d_min = d_min.min(optimal::separation(&frames, a, s));
        }
    }
    let trunc_eps = opts.trunc_eps.unwrap_or(if d_min.is_finite() { (-0.5 * d_min).exp().min(1e-3) } else { 1e-3 });
    let tp = truncate(profile, trunc_eps)?;
    let shifts = solve_optimal_h(u, &frames, &tp, opts.tol)?;
    let rows = toda_residual(&frames, &shifts, profile);
    let (x_lo, x_hi) = (u.x0 + opts.edge_margin, u.x(u.nx - 1) - opts.edge_margin);
    let inside = |x: f64| x >= x_lo && x <= x_hi;
    let (phi_sup, phi_c1) = phi_norms(u, &frames, &shifts, &tp, x_lo, x_hi)?;
    let mut h_sup = 0.0_f64;
    let (mut e0, mut e0s, mut hmax) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (a, rs) in rows.iter().enumerate() {
        for (k, r) in rs.iter().enumerate() {
            if inside(r.x) {
                e0 = e0.max(r.e0.abs());
                e0s = e0s.max(r.e0_swapped.abs());
                hmax = hmax.max(r.curvature.abs());
                h_sup = h_sup.max(shifts.h[a][k].abs());
            }
        }
    }
    let mid_y = frames.iter().map(|f| f.graph.f_values[f.graph.len() / 2]).sum::<f64>() / frames.len() as f64;
    let center = [0.5 * (u.x0 + u.x(u.nx - 1)), mid_y];
    let a_of_r = opts.radii.iter().map(|&r| (r, amplitude(&frames, center, r))).collect();
    let (c_lo, _) = residual::interaction_coefficients(&frames[0], profile, false);
    let mut orth = 0.0_f64;
    for a in 0..frames.len() {
        let k = frames[a].graph.len() / 2;
        orth = orth.max(orthogonality_check(u, &frames, &shifts, &tp, a, k)?.abs());
    }
    let report = ReductionReport {
        eps_analog: 1.0 / d_min,
        trunc_eps,
        interfaces: frames.len(),
        h_sup,
        phi_sup,
        phi_c1,
        orthogonality_residual: orth,
        toda_residual_max: e0,
        toda_residual_swapped_max: e0s,
        interaction_scale: c_lo * (-d_min).exp(),
        d_alpha_min: d_min,
        curvature_max: hmax,
        a_of_r,
    };
    Ok(Reduction { frames, profile: tp, shifts, rows, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allencahn2d::{alternating_layers, layered_initial, InterfaceGraph, LayerBox};
    use crate::potential::make_quartic;
    use crate::profile1d::solve_profile;

    fn profile() -> Profile {
        solve_profile(&make_quartic(), 40.0, 8001).unwrap()
    }

    fn flat_frame(y: f64, orientation: f64, index: usize) -> FermiFrame {
        let x: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
        let g = InterfaceGraph::from_samples(0.0, x, vec![y; 41], index, orientation);
        fermi_frame(&g, 4.0).unwrap()
    }

    #[test]
    fn translation_recovery() {
        let pr = profile();
        let tp = truncate(&pr, 1e-3).unwrap();
        for s in [0.0, 0.3, -0.7] {
            let u = ScalarField2D::on_box(-2.0, 2.0, -16.0, 16.0, 0.1, |_, y| pr.value(y - s));
            let frames = [flat_frame(0.0, 1.0, 1)];
            let sol = solve_optimal_h(&u, &frames, &tp, 1e-9).unwrap();
            assert!(sol.h[0].iter().all(|h| (h - s).abs() < 1e-6), "{s}: {:?}", sol.h[0][20]);
            assert!(sol.residual <= 1e-9);
            for k in [0, 20, 40] {
                assert!(orthogonality_check(&u, &frames, &sol, &tp, 0, k).unwrap().abs() <= 1e-9);
            }
            let rows = toda_residual(&frames, &sol, &pr);
            assert!(rows[0].iter().all(|r| r.e0.abs() < 1e-6));
        }
    }

    #[test]
    fn flat_parallel_interfaces_give_pure_interaction() {
        let pr = profile();
        let frames = [flat_frame(-6.0, 1.0, 1), flat_frame(1.0, -1.0, 2), flat_frame(9.0, 1.0, 3)];
        let sol = OptimalH { h: vec![vec![0.0; 41]; 3], residual: 0.0, sweeps: 0 };
        let rows = toda_residual(&frames, &sol, &pr);
        let c = 2.0 * pr.a_plus * pr.a_plus / pr.sigma0;
        let r = &rows[1][10];
        assert!((r.e0 - (-c * ((-7.0_f64).exp() - (-8.0_f64).exp()))).abs() < 1e-15);
        assert_eq!(r.d_prev, Some(7.0));
        assert_eq!(r.d_next, Some(-8.0));
        assert!((amplitude(&frames, [0.0, 1.0], 20.0) - (-7.0_f64).exp()).abs() < 1e-15);
        let diag = distance_diagnostics(&frames, &[[0.0, 0.0], [0.5, 3.0], [-1.0, -2.0]], 20.0).unwrap();
        assert!(diag.pairs.iter().all(|p| p.max.iter().all(|v| v.abs() < 1e-12) && p.samples > 0));
        assert!(diag.ladder_constant >= 1.0 && diag.ladder_constant <= 3.0);
    }

    #[test]
    fn tilted_lines() {
        let theta: f64 = 0.01;
        let x: Vec<f64> = (0..81).map(|i| -4.0 + 0.1 * i as f64).collect();
        let a = InterfaceGraph::from_samples(0.0, x.clone(), vec![0.0; 81], 1, 1.0);
        let b = InterfaceGraph::from_samples(0.0, x.clone(), x.iter().map(|t| 8.0 + theta.tan() * t).collect(), 2, -1.0);
        let frames = [fermi_frame(&a, 4.0).unwrap(), fermi_frame(&b, 4.0).unwrap()];
        let d = distance_diagnostics(&frames, &[[0.0, 4.0], [1.0, 3.0]], 10.0).unwrap();
        let want = 1.0 - theta.cos();
        assert!((d.pairs[0].max[4] - want).abs() < 1e-9, "{}", d.pairs[0].max[4]);
        assert!((want - 5e-5).abs() < 1e-7);
    }

    #[test]
    fn synthetic_two_layer_shifts_are_exponentially_small() {
        let pr = profile();
        let geom = LayerBox { half_width: 2.0, margin: 12.0, h: 0.1 };
        let u = layered_initial(&pr, &alternating_layers(&[-7.0, 7.0]), geom);
        let frames = [flat_frame(-7.0, 1.0, 1), flat_frame(7.0, -1.0, 2)];
        // with ε = 1/D the gluing window reaches the other layer, so the
        // plain superposition is no longer orthogonal at h = 0
        let tp = truncate(&pr, 1.0 / 14.0).unwrap();
        assert!(2.0 * tp.inner > 14.0 && tp.inner < 14.0);
        let sol = solve_optimal_h(&u, &frames, &tp, 1e-9).unwrap();
        let bound = 10.0 * (-14.0_f64).exp();
        for h in sol.h.iter().flatten() {
            assert!(h.abs() <= bound && h.abs() > 1e-3 * bound, "{h}");
        }
        // mirror symmetry of the configuration
        assert!((sol.h[0][20] + sol.h[1][20]).abs() < 1e-12);
    }

    #[test]
    fn close_interfaces_are_rejected() {
        let pr = profile();
        let tp = truncate(&pr, 1e-3).unwrap();
        let u = ScalarField2D::on_box(-2.0, 2.0, -8.0, 8.0, 0.2, |_, _| 0.0);
        let frames = [flat_frame(-1.0, 1.0, 1), flat_frame(2.0, -1.0, 2)];
        assert!(matches!(solve_optimal_h(&u, &frames, &tp, 1e-9), Err(LabError::SeparationTooSmall { .. })));
    }
}
