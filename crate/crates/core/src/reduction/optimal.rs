//! Optimal normal shifts `h_α`: the error `u - g_*` is made orthogonal to
//! `g'_α` along every normal line of every interface.

use super::frame::{FermiFrame, Projection, Spline};
use crate::allencahn2d::ScalarField2D;
use crate::error::{LabError, Result};
use crate::exec;
use crate::interaction::MIN_SEPARATION;
use crate::profile1d::TruncatedProfile;
use crate::quadrature::{adaptive_simpson, GaussLegendre};

const GL_ORDER: usize = 8;
const NEWTON_MAX: usize = 50;
const SWEEPS_MAX: usize = 40;
/// Shifts beyond this are treated as divergence: the frames are already
/// close to the layers.
const MAX_SHIFT: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct OptimalH {
    /// `h[α][k]` at the graph samples of interface `α`.
    pub h: Vec<Vec<f64>>,
    /// Largest orthogonality residual after the last sweep.
    pub residual: f64,
    pub sweeps: usize,
}

impl OptimalH {
    pub fn splines(&self, frames: &[FermiFrame]) -> Result<Vec<Spline>> {
        frames
            .iter()
            .zip(&self.h)
            .map(|(f, h)| {
                let n = h.len();
                let (lo, hi) = if n >= 3 {
                    let dx = f.graph.x_samples[1] - f.graph.x_samples[0];
                    ((h[0] - 2.0 * h[1] + h[2]) / (dx * dx), (h[n - 1] - 2.0 * h[n - 2] + h[n - 3]) / (dx * dx))
                } else {
                    (0.0, 0.0)
                };
                Spline::new(&f.graph.x_samples, h, (lo, hi))
            })
            .collect()
    }
}

/// Signed distance to a frame's interface, falling back to the vertical
/// offset past the ends of the sampled graph.
pub fn lenient_projection(frame: &FermiFrame, x: f64, y: f64) -> Projection {
    frame.project(x, y).unwrap_or_else(|| {
        let (lo, hi) = frame.spline.x_range();
        let s = x.clamp(lo, hi);
        Projection { s, d: y - frame.spline.eval(s).0, normal: [0.0, 1.0] }
    })
}

/// Limit of `g_β` on the side where interface `α` lies.
fn far_value(frames: &[FermiFrame], alpha: usize, beta: usize) -> f64 {
    let o = frames[beta].orientation();
    if beta < alpha {
        o
    } else {
        -o
    }
}

/// `g_*(X) = g_α + Σ_{β≠α} (g_β - g_β(far side))`; for alternating
/// orientations the result does not depend on `α`.
pub fn approximate_solution(frames: &[FermiFrame], hs: &[Spline], pr: &TruncatedProfile, x: f64, y: f64) -> f64 {
    let mut g = 0.0;
    for (b, fr) in frames.iter().enumerate() {
        let p = lenient_projection(fr, x, y);
        let t = fr.orientation() * (p.d - hs[b].eval(p.s).0);
        g += pr.gbar(t);
        if b > 0 {
            g -= far_value(frames, 0, b);
        }
    }
    g
}

/// Quadrature nodes along one normal line.
struct NormalLine {
    z: Vec<f64>,
    w: Vec<f64>,
    u: Vec<f64>,
    /// Per other interface: projections of every node.
    others: Vec<(usize, Vec<Projection>)>,
}

/// Range of `z` for which `p + z n` stays on the grid, intersected with
/// `[-reach, reach]`.
pub(crate) fn line_window(u: &ScalarField2D, p: [f64; 2], n: [f64; 2], reach: f64) -> (f64, f64) {
    let mut lo = -reach;
    let mut hi = reach;
    let bounds = [(u.x0, u.x(u.nx - 1)), (u.y0, u.y(u.ny - 1))];
    for c in 0..2 {
        let (a, b) = bounds[c];
        if n[c].abs() < 1e-15 {
            continue;
        }
        let (z1, z2) = ((a - p[c]) / n[c], (b - p[c]) / n[c]);
        lo = lo.max(z1.min(z2));
        hi = hi.min(z1.max(z2));
    }
    (lo, hi)
}

fn build_line(u: &ScalarField2D, frames: &[FermiFrame], alpha: usize, s: f64, reach: f64, gl: &GaussLegendre) -> NormalLine {
    let fr = &frames[alpha];
    let (p, n) = fr.point(s);
    let (lo, hi) = line_window(u, p, n, reach);
    let width = u.hx.min(u.hy);
    let panels = (((hi - lo) / width).ceil() as usize).max(1);
    let (mut z, mut w) = (vec![], vec![]);
    let step = (hi - lo) / panels as f64;
    for k in 0..panels {
        gl.push_mapped(lo + k as f64 * step, lo + (k + 1) as f64 * step, &mut z, &mut w);
    }
    let pts: Vec<[f64; 2]> = z.iter().map(|&t| [p[0] + t * n[0], p[1] + t * n[1]]).collect();
    let uv = pts.iter().map(|q| u.sample(q[0], q[1]).unwrap_or(0.0)).collect();
    let others = (0..frames.len())
        .filter(|&b| b != alpha)
        .map(|b| (b, pts.iter().map(|q| lenient_projection(&frames[b], q[0], q[1])).collect()))
        .collect();
    NormalLine { z, w, u: uv, others }
}

/// `F(h)` and `F'(h)` on one line, the other interfaces held at `hs`.
fn orthogonality(line: &NormalLine, frames: &[FermiFrame], alpha: usize, hs: &[Spline], pr: &TruncatedProfile, h: f64) -> (f64, f64) {
    let o = frames[alpha].orientation();
    let (mut f, mut df) = (0.0, 0.0);
    for (k, (&z, &w)) in line.z.iter().zip(&line.w).enumerate() {
        let d = pr.derivs(o * (z - h));
        if d.g1 == 0.0 && d.g2 == 0.0 {
            continue;
        }
        let mut rest = 0.0;
        for (b, proj) in &line.others {
            let p = &proj[k];
            rest += pr.gbar(frames[*b].orientation() * (p.d - hs[*b].eval(p.s).0)) - far_value(frames, alpha, *b);
        }
        let e = line.u[k] - d.g - rest;
        f += w * e * d.g1;
        df += w * o * (d.g1 * d.g1 - e * d.g2);
    }
    (f, df)
}

fn scalar_newton(mut eval: impl FnMut(f64) -> (f64, f64), h0: f64, tol: f64) -> Result<(f64, f64)> {
    let mut h = h0;
    let (mut f, mut df) = eval(h);
    for _ in 0..NEWTON_MAX {
        if f.abs() <= tol {
            return Ok((h, f));
        }
        if !(df.abs() > 0.0) || !df.is_finite() {
            return Err(LabError::NewtonDiverged(format!("degenerate orthogonality derivative at h = {h}")));
        }
        let next = h - f / df;
        if !(next.abs() <= MAX_SHIFT) {
            return Err(LabError::NewtonDiverged(format!("shift left the frame: h = {next}")));
        }
        let stall = (next - h).abs() <= 1e-15 * (1.0 + h.abs());
        h = next;
        (f, df) = eval(h);
        if stall {
            return Ok((h, f));
        }
    }
    if f.abs() <= 10.0 * tol {
        return Ok((h, f));
    }
    Err(LabError::NewtonDiverged(format!("orthogonality residual {f:e} after {NEWTON_MAX} steps")))
}

/// Smallest distance from interface `α` (at its samples) to any other.
pub fn separation(frames: &[FermiFrame], alpha: usize, s: f64) -> f64 {
    let (p, _) = frames[alpha].point(s);
    frames
        .iter()
        .enumerate()
        .filter(|(b, _)| *b != alpha)
        .map(|(_, f)| lenient_projection(f, p[0], p[1]).d.abs())
        .fold(f64::INFINITY, f64::min)
}

/// Per-sample scalar Newton on each interface, sweeping over interfaces
/// until the shifts settle.
pub fn solve_optimal_h(u: &ScalarField2D, frames: &[FermiFrame], pr: &TruncatedProfile, tol: f64) -> Result<OptimalH> {
    for (a, fr) in frames.iter().enumerate() {
        for &s in &fr.graph.x_samples {
            let sep = separation(frames, a, s);
            if sep < MIN_SEPARATION {
                return Err(LabError::SeparationTooSmall { separation: sep, required: MIN_SEPARATION });
            }
        }
    }
    let gl = GaussLegendre::new(GL_ORDER);
    let reach = 2.0 * pr.inner + 1.0;
    let lines: Vec<Vec<NormalLine>> = frames
        .iter()
        .enumerate()
        .map(|(a, fr)| exec::map(&fr.graph.x_samples, |&s| build_line(u, frames, a, s, reach, &gl)))
        .collect();
    let mut h: Vec<Vec<f64>> = frames.iter().map(|f| vec![0.0; f.graph.len()]).collect();
    let mut residual = f64::INFINITY;
    for sweep in 1..=SWEEPS_MAX {
        let current = OptimalH { h: h.clone(), residual, sweeps: sweep };
        let hs = current.splines(frames)?;
        let mut change = 0.0_f64;
        let mut worst = 0.0_f64;
        let mut next = Vec::with_capacity(frames.len());
        for a in 0..frames.len() {
            let solved: Vec<Result<(f64, f64)>> = exec::map_range(lines[a].len(), |k| {
                scalar_newton(|v| orthogonality(&lines[a][k], frames, a, &hs, pr, v), h[a][k], tol * 1e-3)
            });
            let mut row = Vec::with_capacity(solved.len());
            for (k, r) in solved.into_iter().enumerate() {
                let (v, f) = r?;
                change = change.max((v - h[a][k]).abs());
                worst = worst.max(f.abs());
                row.push(v);
            }
            next.push(row);
        }
        h = next;
        residual = worst;
        if change <= 1e-13 || frames.len() == 1 {
            // the last sweep used the previous shifts of the other layers;
            // re-evaluate with the final ones
            let fin = OptimalH { h: h.clone(), residual, sweeps: sweep };
            let hs = fin.splines(frames)?;
            let mut worst = 0.0_f64;
            for a in 0..frames.len() {
                for k in 0..lines[a].len() {
                    worst = worst.max(orthogonality(&lines[a][k], frames, a, &hs, pr, h[a][k]).0.abs());
                }
            }
            if worst <= tol {
                return Ok(OptimalH { h, residual: worst, sweeps: sweep });
            }
            residual = worst;
        }
    }
    Err(LabError::NewtonDiverged(format!("shift sweeps did not settle, residual {residual:e}")))
}

/// The orthogonality integral at interface `α`, sample `k`, recomputed
/// by adaptive Simpson directly from the field (no cached nodes).
pub fn orthogonality_check(
    u: &ScalarField2D,
    frames: &[FermiFrame],
    sol: &OptimalH,
    pr: &TruncatedProfile,
    alpha: usize,
    k: usize,
) -> Result<f64> {
    let hs = sol.splines(frames)?;
    let fr = &frames[alpha];
    let s = fr.graph.x_samples[k];
    let (p, n) = fr.point(s);
    let (lo, hi) = line_window(u, p, n, 2.0 * pr.inner + 1.0);
    let o = fr.orientation();
    let h = sol.h[alpha][k];
    let integrand = |z: f64| {
        let q = [p[0] + z * n[0], p[1] + z * n[1]];
        let gp = pr.derivs(o * (z - h)).g1;
        if gp == 0.0 {
            return 0.0;
        }
        let uval = u.sample(q[0], q[1]).unwrap_or(0.0);
        (uval - approximate_solution(frames, &hs, pr, q[0], q[1])) * gp
    };
    // split at the grid spacing so the adaptive rule sees each cell
    let cells = ((hi - lo) / u.hx.min(u.hy)).ceil().max(1.0) as usize;
    let w = (hi - lo) / cells as f64;
    Ok((0..cells).map(|c| adaptive_simpson(&integrand, lo + c as f64 * w, lo + (c + 1) as f64 * w, 1e-15, 30)).sum())
}
