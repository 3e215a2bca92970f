//! Scenario configuration: a TOML file with one table per scenario kind,
//! every table optional and filled with defaults.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Profile,
    Interact,
    Liouville,
    Toda,
    Solve2d,
    Reduce,
    Stability,
    Sweep,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Profile => "profile",
            Self::Interact => "interact",
            Self::Liouville => "liouville",
            Self::Toda => "toda",
            Self::Solve2d => "solve2d",
            Self::Reduce => "reduce",
            Self::Stability => "stability",
            Self::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioKind>,
    pub potential: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub profile: ProfileParams,
    #[serde(default)]
    pub interact: InteractParams,
    #[serde(default)]
    pub liouville: LiouvilleParams,
    #[serde(default)]
    pub toda: TodaParams,
    #[serde(default)]
    pub solve2d: Solve2dParams,
    #[serde(default)]
    pub reduce: ReduceParams,
    #[serde(default)]
    pub stability: StabilityParams,
    #[serde(default)]
    pub sweep: SweepParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileParams {
    pub t_max: f64,
    pub n_points: usize,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self { t_max: 40.0, n_points: 8001 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InteractParams {
    pub t_values: Vec<f64>,
}

impl Default for InteractParams {
    fn default() -> Self {
        Self { t_values: (0..7).map(|k| 8.0 + 2.0 * k as f64).collect() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiouvilleParams {
    pub m: usize,
    pub f_center: f64,
    pub r_max: f64,
    /// Use the singular profile `2 log r - log(2(m-2))` instead.
    pub singular: bool,
    pub r_min: f64,
    pub q: f64,
    pub k_values: Vec<f64>,
}

impl Default for LiouvilleParams {
    fn default() -> Self {
        Self { m: 10, f_center: 0.0, r_max: 1e4, singular: false, r_min: 1e-3, q: 1.8, k_values: vec![100.0, 1000.0, 5000.0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TodaParams {
    pub q: usize,
    /// Gap between consecutive components at both ends.
    pub d: f64,
    pub l: f64,
    pub n: usize,
    /// Interaction coefficient; `2A²/σ₀` of the potential when absent.
    pub coeff: Option<f64>,
}

impl Default for TodaParams {
    fn default() -> Self {
        Self { q: 2, d: 12.0, l: 40.0, n: 4001, coeff: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Solve2dParams {
    /// Layer heights, bottom to top; orientations alternate.
    pub centers: Vec<f64>,
    pub half_width: f64,
    pub margin: f64,
    pub h: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub level: f64,
    /// Start from this field (binary plus JSON header) instead.
    pub field: Option<String>,
}

impl Default for Solve2dParams {
    fn default() -> Self {
        Self { centers: vec![-7.0, 7.0], half_width: 10.0, margin: 12.0, h: 0.2, tol: 1e-9, max_iter: 200, level: 0.0, field: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReduceParams {
    pub band: f64,
    pub edge_margin: f64,
    pub trunc_eps: Option<f64>,
    pub radii: Vec<f64>,
}

impl Default for ReduceParams {
    fn default() -> Self {
        Self { band: 4.0, edge_margin: 4.0, trunc_eps: None, radii: vec![2.0, 4.0, 6.0, 8.0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityParams {
    /// Random test functions drawn from the seed, on top of the fixed ones.
    pub samples: usize,
}

impl Default for StabilityParams {
    fn default() -> Self {
        Self { samples: 8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    pub gaps: Vec<f64>,
    pub h: f64,
    /// Also solve at `h/2` and extrapolate the Toda residual.
    pub refine: bool,
    pub half_width: f64,
    pub margin: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self { gaps: vec![8.0, 10.0, 12.0, 14.0], h: 0.2, refine: true, half_width: 10.0, margin: 12.0 }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            potential: "quartic".into(),
            seed: 0,
            profile: Default::default(),
            interact: Default::default(),
            liouville: Default::default(),
            toda: Default::default(),
            solve2d: Default::default(),
            reduce: Default::default(),
            stability: Default::default(),
            sweep: Default::default(),
        }
    }
}

fn invalid(msg: String) -> HarnessError {
    HarnessError::Config(msg)
}

fn positive(name: &str, v: f64) -> Result<(), HarnessError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("`{name}` must be positive, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| invalid(e.message().to_string()))
    }

    /// Canonical text of the resolved configuration.
    pub fn canonical(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Parameter checks for `kind`, run before any solver starts.
    pub fn validate(&self, kind: ScenarioKind) -> Result<(), HarnessError> {
        if self.potential.trim().is_empty() {
            return Err(invalid("`potential` must name a registered potential".into()));
        }
        let pp = &self.profile;
        if !(pp.t_max >= 20.0) || pp.n_points < 1000 {
            return Err(invalid(format!("`profile` needs t_max >= 20 and n_points >= 1000, got {} and {}", pp.t_max, pp.n_points)));
        }
        match kind {
            ScenarioKind::Profile => {}
            ScenarioKind::Interact => {
                let t = &self.interact.t_values;
                if t.is_empty() || t.iter().any(|v| !(*v >= 5.0) || !v.is_finite()) {
                    return Err(invalid("`interact.t_values` must be non-empty with every T >= 5".into()));
                }
            }
            ScenarioKind::Liouville => {
                let l = &self.liouville;
                if l.m < 3 {
                    return Err(invalid(format!("`liouville.m` must be at least 3, got {}", l.m)));
                }
                if l.singular && l.m < 3 {
                    return Err(invalid("singular profile needs m >= 3".into()));
                }
                positive("liouville.r_max", l.r_max)?;
                positive("liouville.r_min", l.r_min)?;
                if !l.singular && l.r_max < 1e3 {
                    return Err(invalid(format!("`liouville.r_max` must be at least 1e3, got {}", l.r_max)));
                }
                if !(0.0..15.0 / 8.0).contains(&l.q) {
                    return Err(invalid(format!("`liouville.q` must lie in [0, 15/8), got {}", l.q)));
                }
                if l.k_values.iter().any(|k| !(*k > 0.0) || 2.0 * k > l.r_max) {
                    return Err(invalid("`liouville.k_values` must be positive and at most r_max / 2".into()));
                }
            }
            ScenarioKind::Toda => {
                let t = &self.toda;
                if t.q < 2 {
                    return Err(invalid(format!("`toda.q` must be at least 2, got {}", t.q)));
                }
                positive("toda.l", t.l)?;
                if t.n < 3 {
                    return Err(invalid("`toda.n` must be at least 3".into()));
                }
                if let Some(c) = t.coeff {
                    positive("toda.coeff", c)?;
                }
            }
            ScenarioKind::Solve2d | ScenarioKind::Reduce | ScenarioKind::Stability => {
                let s = &self.solve2d;
                positive("solve2d.h", s.h)?;
                positive("solve2d.half_width", s.half_width)?;
                positive("solve2d.margin", s.margin)?;
                positive("solve2d.tol", s.tol)?;
                if s.field.is_none() && s.centers.is_empty() {
                    return Err(invalid("`solve2d.centers` must list at least one layer".into()));
                }
                if s.centers.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("`solve2d.centers` must be increasing".into()));
                }
                if !(s.level.abs() < 1.0) {
                    return Err(invalid(format!("`solve2d.level` must lie in (-1, 1), got {}", s.level)));
                }
                if kind != ScenarioKind::Solve2d {
                    positive("reduce.band", self.reduce.band)?;
                    if s.centers.windows(2).any(|w| w[1] - w[0] < crate::interaction::MIN_SEPARATION) {
                        return Err(invalid("layers closer than 5 cannot be reduced".into()));
                    }
                }
            }
            ScenarioKind::Sweep => {
                let s = &self.sweep;
                positive("sweep.h", s.h)?;
                positive("sweep.half_width", s.half_width)?;
                positive("sweep.margin", s.margin)?;
                if s.gaps.is_empty() || s.gaps.iter().any(|g| !(*g >= crate::interaction::MIN_SEPARATION)) {
                    return Err(invalid("`sweep.gaps` must be non-empty with every gap >= 5".into()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_potential_is_named() {
        let e = ScenarioConfig::parse("seed = 3\n[profile]\nt_max = 30.0\n").unwrap_err();
        assert!(matches!(&e, HarnessError::Config(m) if m.contains("potential")), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn defaults_and_hash() {
        let a = ScenarioConfig::parse("potential = \"quartic\"\n[sweep]\ngaps = [10.0, 12.0]\n").unwrap();
        assert_eq!(a.sweep.gaps, vec![10.0, 12.0]);
        assert_eq!(a.sweep.h, 0.2);
        let b = ScenarioConfig::parse(&a.canonical()).unwrap();
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.seed = 1;
        assert_ne!(a.hash(), c.hash());
        assert!(ScenarioConfig::parse("potential = \"quartic\"\nbogus = 1\n").is_err());
    }

    #[test]
    fn validation_catches_bad_ranges() {
        let mut c = ScenarioConfig::default();
        c.liouville.q = 2.0;
        assert!(c.validate(ScenarioKind::Liouville).is_err());
        assert!(c.validate(ScenarioKind::Profile).is_ok());
        c.sweep.gaps = vec![3.0];
        assert!(c.validate(ScenarioKind::Sweep).is_err());
    }
}
