//! Toda residual `E⁰_α`, distance comparisons between interfaces and the
//! interaction amplitude `A(r; x)`.

use serde::Serialize;

use super::frame::FermiFrame;
use super::optimal::{lenient_projection, OptimalH};
use crate::error::Result;
use crate::profile1d::Profile;
use crate::quadrature::GaussLegendre;

/// Interaction coefficients `2A²/σ₀` towards the lower and upper
/// neighbour of interface `α`. The well between `α` and its lower
/// neighbour is the one below `α`, `-orientation`.
pub fn interaction_coefficients(frame: &FermiFrame, pr: &Profile, swapped: bool) -> (f64, f64) {
    let below = if frame.orientation() > 0.0 { pr.a_minus } else { pr.a_plus };
    let above = if frame.orientation() > 0.0 { pr.a_plus } else { pr.a_minus };
    let c = |a: f64| 2.0 * a * a / pr.sigma0;
    if swapped {
        (c(above), c(below))
    } else {
        (c(below), c(above))
    }
}

/// Three-point average, ends kept.
pub fn smooth3(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    if n < 3 {
        return v.to_vec();
    }
    let mut out = v.to_vec();
    for i in 1..n - 1 {
        out[i] = (v[i - 1] + v[i] + v[i + 1]) / 3.0;
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct TodaRow {
    pub x: f64,
    pub f: f64,
    pub curvature: f64,
    pub h: f64,
    pub laplace_h: f64,
    pub e0: f64,
    /// `E⁰` with the two interaction coefficients exchanged.
    pub e0_swapped: f64,
    /// Signed distance to the lower neighbour (positive), if any.
    pub d_prev: Option<f64>,
    /// Signed distance to the upper neighbour (negative), if any.
    pub d_next: Option<f64>,
}

/// `E⁰_α = H_α + Δ_{α,0} h_α - c₋ e^{-d_{α-1}} + c₊ e^{d_{α+1}}` at every
/// sample of every interface.
pub fn toda_residual(frames: &[FermiFrame], sol: &OptimalH, pr: &Profile) -> Vec<Vec<TodaRow>> {
    frames
        .iter()
        .enumerate()
        .map(|(a, fr)| {
            let g = &fr.graph;
            let n = g.len();
            let hsm = smooth3(&sol.h[a]);
            let (h1, h2) = crate::allencahn2d::levelset::differentiate(&g.x_samples, &hsm);
            let (lo, hi) = interaction_coefficients(fr, pr, false);
            let (lo_s, hi_s) = interaction_coefficients(fr, pr, true);
            (0..n)
                .map(|k| {
                    let (f1, f2) = (g.df[k], g.d2f[k]);
                    let q = 1.0 + f1 * f1;
                    let curvature = f2 / q.powf(1.5);
                    // second derivative in arclength along the graph
                    let laplace_h = (h2[k] - h1[k] * f1 * f2 / q) / q;
                    let (x, y) = (g.x_samples[k], g.f_values[k]);
                    let d_prev = (a > 0).then(|| lenient_projection(&frames[a - 1], x, y).d);
                    let d_next = (a + 1 < frames.len()).then(|| lenient_projection(&frames[a + 1], x, y).d);
                    let ep = d_prev.map_or(0.0, |d| (-d).exp());
                    let en = d_next.map_or(0.0, |d| d.exp());
                    let base = curvature + laplace_h;
                    TodaRow {
                        x,
                        f: y,
                        curvature,
                        h: sol.h[a][k],
                        laplace_h,
                        e0: base - lo * ep + hi * en,
                        e0_swapped: base - lo_s * ep + hi_s * en,
                        d_prev,
                        d_next,
                    }
                })
                .collect()
        })
        .collect()
}

/// `D_α` at graph parameter `s`: distance to the nearest other interface.
pub fn gap_at(frames: &[FermiFrame], alpha: usize, s: f64) -> f64 {
    super::optimal::separation(frames, alpha, s)
}

/// `A(r; x) = max_α max_{y ∈ Γ_α ∩ B_r(x)} e^{-D_α(y)}`, over graph samples.
pub fn amplitude(frames: &[FermiFrame], center: [f64; 2], r: f64) -> f64 {
    let mut best = 0.0_f64;
    for (a, fr) in frames.iter().enumerate() {
        for (&x, &y) in fr.graph.x_samples.iter().zip(&fr.graph.f_values) {
            if (x - center[0]).hypot(y - center[1]) <= r {
                best = best.max((-gap_at(frames, a, x)).exp());
            }
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct PairDiagnostics {
    pub alpha: usize,
    pub beta: usize,
    pub samples: usize,
    /// Largest values of: arclength between `Π_β Π_α X` and `Π_β X`;
    /// `|d_β(Π_α X) + d_α(Π_β X)|`; `|d_α - d_β + d_β(Π_α X)|`;
    /// `|d_α - d_β - d_α(Π_β X)|`; `1 - ∇d_α·∇d_β`.
    pub max: [f64; 5],
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceDiagnostics {
    pub pairs: Vec<PairDiagnostics>,
    /// Largest `Σ_{β≠α} e^{-|d_β|} / e^{-D_α}` over interface samples.
    pub ladder_constant: f64,
}

fn arclength(frame: &FermiFrame, s0: f64, s1: f64) -> f64 {
    let gl = GaussLegendre::new(8);
    let (a, b) = (s0.min(s1), s0.max(s1));
    if b - a == 0.0 {
        return 0.0;
    }
    let panels = ((b - a) / 0.5).ceil().max(1.0) as usize;
    gl.composite(a, b, panels, |s| (1.0 + frame.spline.eval(s).1.powi(2)).sqrt())
}

/// The five distance comparisons at `points` lying within `reach` of both
/// interfaces of a pair.
pub fn distance_diagnostics(frames: &[FermiFrame], points: &[[f64; 2]], reach: f64) -> Result<DistanceDiagnostics> {
    let mut pairs = vec![];
    for a in 0..frames.len() {
        for b in 0..frames.len() {
            if a == b {
                continue;
            }
            let (fa, fb) = (&frames[a], &frames[b]);
            let mut max = [0.0_f64; 5];
            let mut samples = 0;
            for x in points {
                let (Some(pa), Some(pb)) = (fa.project(x[0], x[1]), fb.project(x[0], x[1])) else { continue };
                if pa.d.abs() > reach || pb.d.abs() > reach {
                    continue;
                }
                let xa = fa.point(pa.s).0;
                let xb = fb.point(pb.s).0;
                let (Some(pba), Some(pab)) = (fb.project(xa[0], xa[1]), fa.project(xb[0], xb[1])) else { continue };
                samples += 1;
                let vals = [
                    arclength(fb, pba.s, pb.s),
                    (pba.d + pab.d).abs(),
                    (pa.d - pb.d + pba.d).abs(),
                    (pa.d - pb.d - pab.d).abs(),
                    1.0 - (pa.normal[0] * pb.normal[0] + pa.normal[1] * pb.normal[1]),
                ];
                for (m, v) in max.iter_mut().zip(vals) {
                    *m = m.max(v);
                }
            }
            pairs.push(PairDiagnostics { alpha: a + 1, beta: b + 1, samples, max });
        }
    }
    let mut ladder = 0.0_f64;
    for (a, fr) in frames.iter().enumerate() {
        for (&x, &y) in fr.graph.x_samples.iter().zip(&fr.graph.f_values) {
            let ds: Vec<f64> = frames
                .iter()
                .enumerate()
                .filter(|(b, _)| *b != a)
                .map(|(_, f)| lenient_projection(f, x, y).d.abs())
                .collect();
            let dmin = ds.iter().cloned().fold(f64::INFINITY, f64::min);
            if dmin.is_finite() {
                ladder = ladder.max(ds.iter().map(|d| (dmin - d).exp()).sum());
            }
        }
    }
    Ok(DistanceDiagnostics { pairs, ladder_constant: ladder })
}
