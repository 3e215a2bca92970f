use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use layerlab::exec;
use layerlab::harness::{run, threads_from_env, HarnessError, ScenarioConfig, ScenarioKind};

#[derive(Parser)]
#[command(name = "layerlab", version, about = "Numerical laboratory for clustered Allen-Cahn layers")]
struct Cli {
    #[command(subcommand)]
    scenario: Scenario,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, or the main CSV file when it ends in `.csv`.
    #[arg(long, default_value = "layerlab-out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    potential: Option<String>,
}

#[derive(Args, Clone)]
struct GridFlags {
    /// Grid spacing.
    #[arg(long)]
    h: Option<f64>,
    /// Comma-separated layer heights, bottom to top.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    centers: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Scenario {
    /// Heteroclinic profile and its constants.
    Profile {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Interaction integrals over a range of separations.
    Interact {
        #[command(flatten)]
        common: Common,
        /// Separations as `start:end:step`.
        #[arg(long = "T")]
        t_range: Option<String>,
    },
    /// Radial Liouville solution, stability margin and Farina growth.
    Liouville {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        rmax: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        singular: bool,
    },
    /// Toda boundary value problem.
    Toda {
        #[command(flatten)]
        common: Common,
        #[arg(long = "Q")]
        components: Option<usize>,
        #[arg(long = "D")]
        gap: Option<f64>,
        #[arg(long = "L")]
        half_length: Option<f64>,
    },
    /// Newton solve of a layered configuration.
    Solve2d {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridFlags,
    },
    /// Solve, then reduce to interface shifts and Toda residuals.
    Reduce {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridFlags,
    },
    /// Solve, reduce, and evaluate the stability forms.
    Stability {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridFlags,
    },
    /// Two-layer sweep over gaps with scaling fits.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated gaps.
        #[arg(long, value_delimiter = ',')]
        gaps: Option<Vec<f64>>,
        #[arg(long)]
        h: Option<f64>,
        /// Skip the half-spacing solve.
        #[arg(long)]
        no_refine: bool,
    },
}

fn parse_range(s: &str) -> Result<Vec<f64>, HarnessError> {
    let bad = || HarnessError::Config(format!("`--T` expects start:end:step, got `{s}`"));
    let parts: Vec<f64> = s.split(':').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?;
    let [a, b, step] = parts[..] else { return Err(bad()) };
    if step.is_nan() || step <= 0.0 || b < a {
        return Err(bad());
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| a + step * k as f64).collect())
}

fn load(common: &Common) -> Result<ScenarioConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
            ScenarioConfig::parse(&text)?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(p) = &common.potential {
        cfg.potential = p.clone();
    }
    Ok(cfg)
}

fn apply_grid(cfg: &mut ScenarioConfig, g: &GridFlags) {
    if let Some(h) = g.h {
        cfg.solve2d.h = h;
    }
    if let Some(c) = &g.centers {
        cfg.solve2d.centers = c.clone();
    }
}

fn prepare(s: &Scenario) -> Result<(ScenarioKind, ScenarioConfig, PathBuf), HarnessError> {
    let (kind, common) = match s {
        Scenario::Profile { common, .. } => (ScenarioKind::Profile, common),
        Scenario::Interact { common, .. } => (ScenarioKind::Interact, common),
        Scenario::Liouville { common, .. } => (ScenarioKind::Liouville, common),
        Scenario::Toda { common, .. } => (ScenarioKind::Toda, common),
        Scenario::Solve2d { common, .. } => (ScenarioKind::Solve2d, common),
        Scenario::Reduce { common, .. } => (ScenarioKind::Reduce, common),
        Scenario::Stability { common, .. } => (ScenarioKind::Stability, common),
        Scenario::Sweep { common, .. } => (ScenarioKind::Sweep, common),
    };
    let mut cfg = load(common)?;
    if let Some(k) = cfg.scenario {
        if k != kind {
            return Err(HarnessError::Config(format!("config is for `{}`, not `{}`", k.name(), kind.name())));
        }
    }
    match s {
        Scenario::Profile { tmax, n, .. } => {
            if let Some(t) = tmax {
                cfg.profile.t_max = *t;
            }
            if let Some(n) = n {
                cfg.profile.n_points = *n;
            }
        }
        Scenario::Interact { t_range, .. } => {
            if let Some(r) = t_range {
                cfg.interact.t_values = parse_range(r)?;
            }
        }
        Scenario::Liouville { m, rmax, q, singular, .. } => {
            let l = &mut cfg.liouville;
            l.m = m.unwrap_or(l.m);
            l.r_max = rmax.unwrap_or(l.r_max);
            l.q = q.unwrap_or(l.q);
            l.singular |= *singular;
        }
        Scenario::Toda { components, gap, half_length, .. } => {
            let t = &mut cfg.toda;
            t.q = components.unwrap_or(t.q);
            t.d = gap.unwrap_or(t.d);
            t.l = half_length.unwrap_or(t.l);
        }
        Scenario::Solve2d { grid, .. } | Scenario::Reduce { grid, .. } | Scenario::Stability { grid, .. } => apply_grid(&mut cfg, grid),
        Scenario::Sweep { gaps, h, no_refine, .. } => {
            if let Some(g) = gaps {
                cfg.sweep.gaps = g.clone();
            }
            cfg.sweep.h = h.unwrap_or(cfg.sweep.h);
            cfg.sweep.refine &= !*no_refine;
        }
    }
    Ok((kind, cfg, common.out.clone()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = threads_from_env().and_then(|threads| {
        let (kind, cfg, out) = prepare(&cli.scenario)?;
        exec::with_threads(threads, || run(kind, &cfg, &out))
    });
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("layerlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
