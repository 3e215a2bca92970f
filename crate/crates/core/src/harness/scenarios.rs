//! One runner per scenario kind. Each writes its artifacts and returns the
//! paths it produced.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ScenarioConfig, ScenarioKind};
use super::output::{Cell, Report, Table};
use super::sweep::{two_layer_sweep, SweepSpec};
use super::HarnessError;
use crate::allencahn2d::{
    alternating_layers, curvature, extract_levelset, layered_initial, solve_newton, stability_check, sz_curvature_term,
    LayerBox, NewtonOptions, NewtonOutcome, ScalarField2D, DEFAULT_BAND,
};
use crate::exec;
use crate::interaction::{fit_asymptotics, interaction_curve};
use crate::liouville_toda::{
    farina_scale_integral, liouville_stability_margin, q2_closed_form, q2_first_integral, singular_profile,
    solve_radial_liouville, solve_toda_bvp,
};
use crate::potential::{Potential, PotentialRegistry};
use crate::profile1d::{second_eigenvalue, solve_profile, Profile};
use crate::reduction::{reduce, Reduction, ReductionOptions};
use crate::stability::{reduced_form_sides, sz_form, Eta};

/// Where a run puts its files: `<dir>/<stem>.csv`, `<dir>/<stem>.json` and
/// named extras next to them.
#[derive(Debug, Clone)]
pub struct Outputs {
    pub dir: PathBuf,
    pub stem: String,
}

impl Outputs {
    /// `out` ending in `.csv` names the main table; anything else is a
    /// directory.
    pub fn resolve(out: &Path, kind: ScenarioKind) -> Self {
        if out.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
            let stem = out.file_stem().map_or_else(|| kind.name().to_string(), |s| s.to_string_lossy().into_owned());
            Self { dir, stem }
        } else {
            Self { dir: out.to_path_buf(), stem: kind.name().to_string() }
        }
    }

    pub fn csv(&self) -> PathBuf {
        self.dir.join(format!("{}.csv", self.stem))
    }

    pub fn json(&self) -> PathBuf {
        self.dir.join(format!("{}.json", self.stem))
    }

    pub fn extra(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}_{suffix}", self.stem))
    }
}

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    out: Outputs,
    provenance: String,
    potential: Potential,
    files: Vec<PathBuf>,
}

impl Ctx<'_> {
    fn table(&mut self, t: &Table, path: PathBuf) -> Result<(), HarnessError> {
        t.write(&path, &self.provenance)?;
        self.files.push(path);
        Ok(())
    }

    fn report(&mut self, r: &Report, path: PathBuf) -> Result<(), HarnessError> {
        r.write(&path)?;
        self.files.push(path);
        Ok(())
    }

    fn profile(&self) -> Result<Profile, HarnessError> {
        Ok(solve_profile(&self.potential, self.cfg.profile.t_max, self.cfg.profile.n_points)?)
    }
}

pub fn run(kind: ScenarioKind, cfg: &ScenarioConfig, out: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut cfg = cfg.clone();
    cfg.scenario = Some(kind);
    cfg.validate(kind)?;
    let potential = PotentialRegistry::default().get(&cfg.potential).map_err(|e| HarnessError::Config(format!("`potential`: {e}")))?;
    let provenance = format!("layerlab {} config-sha256={} seed={}", kind.name(), cfg.hash(), cfg.seed);
    let mut ctx = Ctx { cfg: &cfg, out: Outputs::resolve(out, kind), provenance, potential, files: vec![] };
    if !ctx.out.dir.as_os_str().is_empty() {
        std::fs::create_dir_all(&ctx.out.dir).map_err(|e| HarnessError::Io(format!("{}: {e}", ctx.out.dir.display())))?;
    }
    match kind {
        ScenarioKind::Profile => run_profile(&mut ctx)?,
        ScenarioKind::Interact => run_interact(&mut ctx)?,
        ScenarioKind::Liouville => run_liouville(&mut ctx)?,
        ScenarioKind::Toda => run_toda(&mut ctx)?,
        ScenarioKind::Solve2d => run_solve2d(&mut ctx)?,
        ScenarioKind::Reduce => run_reduce(&mut ctx)?,
        ScenarioKind::Stability => run_stability(&mut ctx)?,
        ScenarioKind::Sweep => run_sweep(&mut ctx)?,
    }
    Ok(ctx.files)
}

fn run_profile(ctx: &mut Ctx) -> Result<(), HarnessError> {
    let pp = ctx.cfg.profile.clone();
    let pr = ctx.profile()?;
    let mu = second_eigenvalue(&pr, pp.t_max, pp.n_points)?;
    let mut t = Table::new(&["t", "g", "g1", "g2"]);
    for i in 0..pr.t_grid.len() {
        t.push(vec![pr.t_grid[i].into(), pr.g[i].into(), pr.g1[i].into(), pr.g2[i].into()]);
    }
    ctx.table(&t, ctx.out.csv())?;
    let mut r = Report::new();
    r.text("potential", &ctx.cfg.potential)
        .num("sigma0", pr.sigma0)
        .num("a_plus", pr.a_plus)
        .num("a_minus", pr.a_minus)
        .num("mu", mu)
        .num("interaction_coefficient", 2.0 * pr.a_plus * pr.a_plus / pr.sigma0)
        .num("t_max", pp.t_max)
        .int("n_points", pp.n_points);
    ctx.report(&r, ctx.out.json())
}

fn run_interact(ctx: &mut Ctx) -> Result<(), HarnessError> {
    let pr = ctx.profile()?;
    let mut ts = ctx.cfg.interact.t_values.clone();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let curve = interaction_curve(&pr, &ts)?;
    let mut t = Table::new(&["T", "I_plus", "I_minus", "scaled_plus"]);
    for (k, &tv) in ts.iter().enumerate() {
        t.push(vec![tv.into(), curve.i_plus[k].into(), curve.i_minus[k].into(), (tv.exp() * curve.i_plus[k]).into()]);
    }
    ctx.table(&t, ctx.out.csv())?;
    let mut r = Report::new();
    let lead = 2.0 * pr.a_plus * pr.a_plus;
    let worst = ts.iter().zip(&curve.i_plus).map(|(tv, i)| (tv.exp() * i / lead - 1.0).abs()).fold(0.0, f64::max);
    r.num("leading_prediction", lead).num("max_relative_deviation", worst);
    if ts.len() >= 4 {
        let (coeff, rate) = fit_asymptotics(&curve)?;
        r.num("fitted_coeff", coeff).opt("fitted_correction_rate", rate);
    }
    ctx.report(&r, ctx.out.json())
}

/// Least-squares slope of `log y` against `log x`.
fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn run_liouville(ctx: &mut Ctx) -> Result<(), HarnessError> {
    let lp = ctx.cfg.liouville.clone();
    let sol = if lp.singular {
        singular_profile(lp.m, lp.r_min, lp.r_max)?
    } else {
        solve_radial_liouville(lp.m, lp.f_center, lp.r_max)?
    };
    let mut t = Table::new(&["r", "f", "r_f_r", "v"]);
    for i in 0..sol.r_grid.len() {
        t.push(vec![sol.r_grid[i].into(), sol.f[i].into(), sol.fs[i].into(), sol.v[i].into()]);
    }
    ctx.table(&t, ctx.out.csv())?;
    let margin = liouville_stability_margin(&sol)?;
    let mut r = Report::new();
    r.int("m", lp.m)
        .text("kind", if lp.singular { "singular" } else { "smooth" })
        .num("stability_margin", margin)
        .num("hardy_constant", (lp.m as f64 - 2.0).powi(2) / 4.0)
        .num("q", lp.q);
    let mut ks = lp.k_values.clone();
    ks.sort_by(f64::total_cmp);
    let vals = ks.iter().map(|&k| farina_scale_integral(&sol, lp.q, k)).collect::<crate::Result<Vec<_>>>()?;
    r.nums("k_values", &ks).nums("farina_annulus", &vals);
    if ks.len() >= 2 {
        let expected = lp.m as f64 - 2.0 * (2.0 * lp.q + 1.0);
        r.num("farina_slope", loglog_slope(&ks, &vals)).num("farina_slope_expected", expected).flag("farina_bounded", expected < 0.0);
    }
    ctx.report(&r, ctx.out.json())
}

fn run_toda(ctx: &mut Ctx) -> Result<(), HarnessError> {
    let tp = ctx.cfg.toda.clone();
    let coeff = match tp.coeff {
        Some(c) => c,
        None => {
            let pr = ctx.profile()?;
            2.0 * pr.a_plus * pr.a_plus / pr.sigma0
        }
    };
    let x: Vec<f64> = (0..tp.n).map(|i| -tp.l + 2.0 * tp.l * i as f64 / (tp.n - 1) as f64).collect();
    let mid = 0.5 * (tp.q as f64 - 1.0);
    let bnd: Vec<(f64, f64)> = (0..tp.q).map(|a| ((a as f64 - mid) * tp.d, (a as f64 - mid) * tp.d)).collect();
    let st = solve_toda_bvp(tp.q, &x, coeff, &bnd)?;
    let mut names = vec!["x".to_string()];
    names.extend((1..=tp.q).map(|a| format!("f_{a}")));
    let mut t = Table { header: names, rows: vec![] };
    for (i, &xi) in x.iter().enumerate() {
        let mut row: Vec<Cell> = vec![xi.into()];
        row.extend(st.f.iter().map(|c| Cell::Num(c[i])));
        t.push(row);
    }
    ctx.table(&t, ctx.out.csv())?;
    let mut r = Report::new();
    r.int("q", tp.q)
        .num("d", tp.d)
        .num("l", tp.l)
        .num("coeff", coeff)
        .int("newton_iterations", st.newton_iterations)
        .num("residual", st.residual);
    let gaps: Vec<f64> = (0..tp.q - 1).map(|a| st.gap(a).iter().cloned().fold(f64::INFINITY, f64::min)).collect();
    r.nums("min_gaps", &gaps);
    if tp.q == 2 {
        let fi = q2_first_integral(&st);
        let (lo, hi) = fi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        r.num("first_integral_drift", hi - lo);
        let beta = q2_closed_form(coeff, tp.d, tp.l);
        r.opt("closed_form_beta", beta);
        if let Some(b) = beta {
            let rho = st.gap(0);
            let err = x.iter().zip(&rho).map(|(&xi, g)| (g - (coeff * (b * xi).cosh().powi(2) / (b * b)).ln()).abs()).fold(0.0, f64::max);
            r.num("closed_form_max_error", err);
        }
    }
    ctx.report(&r, ctx.out.json())
}

fn layer_box(cfg: &ScenarioConfig) -> LayerBox {
    let s = &cfg.solve2d;
    LayerBox { half_width: s.half_width, margin: s.margin, h: s.h }
}

fn solve_field(ctx: &Ctx, pr: &Profile) -> Result<NewtonOutcome, HarnessError> {
    let s = &ctx.cfg.solve2d;
    let init = match &s.field {
        Some(path) => ScalarField2D::read(Path::new(path))?,
        None => layered_initial(pr, &alternating_layers(&s.centers), layer_box(ctx.cfg)),
    };
    Ok(solve_newton(&init, &ctx.potential, &NewtonOptions { tol: s.tol, max_iter: s.max_iter })?)
}

fn run_solve2d(ctx: &mut Ctx) -> Result<(), HarnessError> {
    let pr = ctx.profile()?;
    let out = solve_field(ctx, &pr)?;
    let u = &out.field;
    let field_path = ctx.out.extra("u.bin");
    u.write(&field_path)?;
    ctx.files.push(field_path.clone());
    ctx.files.push(crate::allencahn2d::field::header_path(&field_path));
    let graphs = extract_levelset(u, ctx.cfg.solve2d.level)?;
    let mut t = Table::new(&["interface", "x", "f", "df", "d2f", "H", "A_norm"]);
    let mut hmax = 0.0_f64;
    for g in &graphs {
        let c = curvature(g)?;
        hmax = hmax.max(c.max_abs());
        for k in 0..g.len() {
            t.push(vec![
                g.component_index.into(),
                g.x_samples[k].into(),
                g.f_values[k].into(),
                g.df[k].into(),
                g.d2f[k].into(),
                c.mean[k].into(),
                c.second_fundamental[k].into(),
            ]);
        }
    }
    ctx.table(&t, ctx.out.csv())?;
    let stab = stability_check(u, &ctx.potential)?;
    let sz = sz_curvature_term(u, DEFAULT_BAND);
    let mut r = Report::new();
    r.int("nx", u.nx)
        .int("ny", u.ny)
        .num("h", u.hx)
        .int("iterations", out.iterations)
        .int("flow_steps", out.flow_steps)
        .num("residual", out.residual)
        .num("energy", *out.energy.last().unwrap_or(&f64::NAN))
        .int("interfaces", graphs.len())
        .num("curvature_max", hmax)
        .num("min_eigenvalue", stab.min_eigenvalue)
        .flag("stable", stab.stable)
        .num("sz_b2_max", sz.max())
        .int("sz_excluded", sz.excluded);
    ctx.report(&r, ctx.out.json())
}

fn reduction_options(cfg: &ScenarioConfig) -> ReductionOptions {
    let rp = &cfg.reduce;
    ReductionOptions {
        level: cfg.solve2d.level,
        band: rp.band,
        tol: cfg.solve2d.tol,
        trunc_eps: rp.trunc_eps,
        edge_margin: rp.edge_margin,
        radii: rp.radii.clone(),
    }
}

fn reduction_report(red: &Reduction, r: &mut Report) {
    let rep = &red.report;
    r.num("eps_analog", rep.eps_analog)
        .num("trunc_eps", rep.trunc_eps)
        .int("interfaces", rep.interfaces)
        .num("h_sup", rep.h_sup)
        .num("phi_sup", rep.phi_sup)
        .num("phi_c1", rep.phi_c1)
        .num("orthogonality_residual", rep.orthogonality_residual)
        .num("toda_residual_max", rep.toda_residual_max)
        .num("toda_residual_swapped_max", rep.toda_residual_swapped_max)
        .num("interaction_scale", rep.interaction_scale)
        .num("d_alpha_min", rep.d_alpha_min)
        .num("curvature_max", rep.curvature_max)
        .nums("a_radii", &rep.a_of_r.iter().map(|a| a.0).collect::<Vec<_>>())
        .nums("a_values", &rep.a_of_r.iter().map(|a| a.1).collect::<Vec<_>>());
}

fn run_reduce(ctx: &mut Ctx) -> Result<(), HarnessError> {
    let pr = ctx.profile()?;
    let out = solve_field(ctx, &pr)?;
    let red = reduce(&out.field, &pr, &reduction_options(ctx.cfg))?;
    for (a, rows) in red.rows.iter().enumerate() {
        let mut t = Table::new(&["x", "f", "H", "h", "E0", "d_prev", "d_next"]);
        for row in rows {
            t.push(vec![row.x.into(), row.f.into(), row.curvature.into(), row.h.into(), row.e0.into(), row.d_prev.into(), row.d_next.into()]);
        }
        ctx.table(&t, ctx.out.extra(&format!("interface{}.csv", a + 1)))?;
    }
    let mut r = Report::new();
    r.int("newton_iterations", out.iterations).num("newton_residual", out.residual);
    reduction_report(&red, &mut r);
    ctx.report(&r, ctx.out.json())
}

/// Fixed test families plus `samples` random ones drawn from the seed.
fn test_families(q: usize, half_width: f64, samples: usize, seed: u64) -> Vec<(String, Vec<Eta>)> {
    let radius = (0.5 * half_width).max(1.0);
    let bump = Eta::Bump { center: 0.0, radius, amplitude: 1.0 };
    let sign = |a: usize| if a.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut out = vec![
        ("antisymmetric".to_string(), (0..q).map(|a| bump.scaled(sign(a))).collect()),
        ("symmetric".to_string(), vec![bump; q]),
        ("single".to_string(), (0..q).map(|a| if a == 0 { bump } else { Eta::Zero }).collect()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..samples {
        let etas = (0..q)
            .map(|_| Eta::Bump {
                center: rng.random_range(-0.2 * half_width..0.2 * half_width),
                radius: rng.random_range(0.2 * half_width..0.5 * half_width),
                amplitude: rng.random_range(-1.0..1.0),
            })
            .collect();
        out.push((format!("random{}", k + 1), etas));
    }
    out
}

/// Smooth bump in the plane, zero outside the disc.
fn plane_bump(u: &ScalarField2D, c: [f64; 2], r: f64) -> Vec<f64> {
    let mut eta = vec![0.0; u.nx * u.ny];
    for j in 1..u.ny - 1 {
        for i in 1..u.nx - 1 {
            let s = ((u.x(i) - c[0]).powi(2) + (u.y(j) - c[1]).powi(2)).sqrt() / r;
            if s < 1.0 {
                eta[u.idx(i, j)] = (1.0 - s * s).powi(3);
            }
        }
    }
    eta
}

fn run_stability(ctx: &mut Ctx) -> Result<(), HarnessError> {
    let pr = ctx.profile()?;
    let out = solve_field(ctx, &pr)?;
    let u = &out.field;
    let stab = stability_check(u, &ctx.potential)?;
    let red = reduce(u, &pr, &reduction_options(ctx.cfg))?;
    let rep = &red.report;
    let amp = rep.a_of_r.last().map_or(0.0, |a| a.1);
    let half = 0.5 * (u.x(u.nx - 1) - u.x0);
    let families = test_families(red.frames.len(), half, ctx.cfg.stability.samples, ctx.cfg.seed);
    let pot = ctx.potential.clone();
    let reports = exec::map(&families, |(label, etas)| {
        reduced_form_sides(label, u, &pot, &red.frames, &red.shifts, &red.profile, &pr, etas, rep.eps_analog, amp)
    })
    .into_iter()
    .collect::<crate::Result<Vec<_>>>()?;
    let mut t = Table::new(&["label", "full_form", "reduced_lhs", "reduced_rhs", "discrepancy", "q_budget"]);
    for s in &reports {
        t.push(vec![
            s.label.as_str().into(),
            s.full_form_value.into(),
            s.lhs_tangential.into(),
            s.rhs_interaction.into(),
            s.discrepancy.into(),
            s.q_eta_bound.into(),
        ]);
    }
    ctx.table(&t, ctx.out.csv())?;
    // Sternberg-Zumbrun form on plane bumps centred on each interface
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed ^ 0x5a5a);
    let mut sz = Table::new(&["label", "sz_value"]);
    let mut sz_min = f64::INFINITY;
    let n_sz = 2 + ctx.cfg.stability.samples;
    for k in 0..n_sz {
        let fr = &red.frames[k % red.frames.len()];
        let x = rng.random_range(-0.3 * half..0.3 * half);
        let c = [x, fr.graph.height(x)];
        let radius = rng.random_range(0.2 * half..0.5 * half);
        let v = sz_form(u, &plane_bump(u, c, radius))?;
        sz_min = sz_min.min(v);
        sz.push(vec![format!("bump{}", k + 1).as_str().into(), v.into()]);
    }
    ctx.table(&sz, ctx.out.extra("sz.csv"))?;
    let mut r = Report::new();
    r.num("min_eigenvalue", stab.min_eigenvalue)
        .flag("stable", stab.stable)
        .num("sz_min", sz_min)
        .int("families", reports.len())
        .int("within_budget", reports.iter().filter(|s| s.within_budget).count())
        .num("max_abs_discrepancy", reports.iter().map(|s| s.discrepancy.abs()).fold(0.0, f64::max));
    reduction_report(&red, &mut r);
    ctx.report(&r, ctx.out.json())
}

fn run_sweep(ctx: &mut Ctx) -> Result<(), HarnessError> {
    let pr = ctx.profile()?;
    let sp = &ctx.cfg.sweep;
    let spec = SweepSpec {
        gaps: sp.gaps.clone(),
        geometry: LayerBox { half_width: sp.half_width, margin: sp.margin, h: sp.h },
        refine: sp.refine,
        newton: NewtonOptions { tol: ctx.cfg.solve2d.tol, max_iter: ctx.cfg.solve2d.max_iter },
        reduction: reduction_options(ctx.cfg),
    };
    let res = two_layer_sweep(&pr, &ctx.potential, &spec)?;
    let mut t = Table::new(&[
        "D",
        "eps_analog",
        "d_min",
        "max_H",
        "A",
        "E0_max",
        "E0_extrapolated",
        "interaction_scale",
        "ratio",
        "phi_sup",
        "h_sup",
        "orthogonality",
        "min_eigenvalue",
        "stable",
        "newton_iterations",
    ]);
    for p in &res.points {
        t.push(vec![
            p.gap.into(),
            p.eps_analog.into(),
            p.d_min.into(),
            p.curvature_max.into(),
            p.amplitude.into(),
            p.e0_max.into(),
            p.e0_extrapolated.into(),
            p.interaction_scale.into(),
            p.ratio.into(),
            p.phi_sup.into(),
            p.h_sup.into(),
            p.orthogonality.into(),
            p.min_eigenvalue.into(),
            p.stable.into(),
            p.newton_iterations.into(),
        ]);
    }
    ctx.table(&t, ctx.out.csv())?;
    let mut r = Report::new();
    r.int("points", res.points.len()).flag("ratio_decreasing", res.ratio_decreasing).flag("refined", sp.refine);
    for (name, fit) in [("curvature", &res.curvature_fit), ("amplitude", &res.amplitude_fit)] {
        match fit {
            Some(f) => {
                r.num(&format!("{name}_p"), f.p).num(&format!("{name}_p_ci"), f.p_ci).num(&format!("{name}_fit_residual"), f.residual);
            }
            None => {
                r.opt(&format!("{name}_p"), None);
            }
        }
    }
    ctx.report(&r, ctx.out.json())
}
