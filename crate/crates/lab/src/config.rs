//! JSON experiment configurations.
//!
//! A file holds one object whose `"experiment"` key picks the variant; every
//! other key is optional and falls back to the defaults below. Unknown keys
//! are rejected. [`ExperimentConfig::validate`] checks every value against
//! the preconditions of the core routines before anything runs.

use std::path::Path;

use disloc_core::homog::CellProblem;
use disloc_core::{FractionalOrder, GammaConvention, Grid1D, LayerConfig, Modulation, Potential};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Heteroclinic(HeteroclinicSpec),
    Multibump(MultibumpSpec),
    Particles(ParticlesSpec),
    Parabolic(ParabolicSpec),
    Cell(CellSpec),
    Orowan(OrowanSpec),
    Meanfield(MeanfieldSpec),
}

fn half() -> f64 {
    0.5
}
fn three_quarters() -> f64 {
    0.75
}
fn standard_potential() -> String {
    "standard-cosine".into()
}
fn norm_squared() -> String {
    GammaConvention::ReciprocalNormSquared.name().into()
}
fn yes() -> bool {
    true
}

/// Grid for the heteroclinic layer `u⋆`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerGridSpec {
    #[serde(default = "LayerGridSpec::default_half_width")]
    pub half_width: f64,
    #[serde(default = "LayerGridSpec::default_n")]
    pub n: usize,
    #[serde(default = "LayerGridSpec::default_tol")]
    pub tol: f64,
}

impl LayerGridSpec {
    fn default_half_width() -> f64 {
        200.0
    }
    fn default_n() -> usize {
        8193
    }
    fn default_tol() -> f64 {
        1e-9
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::symmetric(self.half_width, self.n).map_err(LabError::core("layer grid"))
    }
}

impl Default for LayerGridSpec {
    fn default() -> Self {
        LayerGridSpec {
            half_width: Self::default_half_width(),
            n: Self::default_n(),
            tol: Self::default_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeteroclinicSpec {
    #[serde(default = "half")]
    pub s: f64,
    #[serde(default = "standard_potential")]
    pub potential: String,
    #[serde(default)]
    pub layer: LayerGridSpec,
    #[serde(default = "norm_squared")]
    pub gamma_convention: String,
}

impl Default for HeteroclinicSpec {
    fn default() -> Self {
        HeteroclinicSpec {
            s: 0.5,
            potential: standard_potential(),
            layer: LayerGridSpec::default(),
            gamma_convention: norm_squared(),
        }
    }
}

/// `a(x) = 1 + amplitude·cos(2πx/period)`; amplitude 0 is `a ≡ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationSpec {
    pub amplitude: f64,
    pub period: f64,
}

impl Default for ModulationSpec {
    fn default() -> Self {
        ModulationSpec {
            amplitude: 0.3,
            period: 10.0,
        }
    }
}

impl ModulationSpec {
    pub fn build(&self) -> Result<Modulation> {
        Modulation::cosine(self.amplitude, self.period).map_err(LabError::core("modulation"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultibumpSpec {
    #[serde(default = "three_quarters")]
    pub s: f64,
    #[serde(default = "standard_potential")]
    pub potential: String,
    pub levels: Vec<i64>,
    #[serde(default)]
    pub modulation: ModulationSpec,
    /// Distance between window centres; defaults to five periods of `a`.
    #[serde(default)]
    pub spacing: Option<f64>,
    #[serde(default = "MultibumpSpec::default_h")]
    pub h: f64,
    #[serde(default = "MultibumpSpec::default_tol")]
    pub tol: f64,
    #[serde(default = "MultibumpSpec::default_max_iterations")]
    pub max_iterations: usize,
}

impl MultibumpSpec {
    fn default_h() -> f64 {
        0.2
    }
    fn default_tol() -> f64 {
        1e-5
    }
    fn default_max_iterations() -> usize {
        50_000
    }

    pub fn new(levels: Vec<i64>) -> Self {
        MultibumpSpec {
            s: 0.75,
            potential: standard_potential(),
            levels,
            modulation: ModulationSpec::default(),
            spacing: None,
            h: Self::default_h(),
            tol: Self::default_tol(),
            max_iterations: Self::default_max_iterations(),
        }
    }

    pub fn spacing(&self) -> f64 {
        match self.spacing {
            Some(d) => d,
            None if self.modulation.amplitude == 0.0 => 50.0,
            None => 5.0 * self.modulation.period,
        }
    }
}

/// A number, or `"auto"` for the mobility of the heteroclinic layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Value(f64),
    Named(String),
}

impl GammaSpec {
    pub fn is_auto(&self) -> bool {
        matches!(self, GammaSpec::Named(n) if n == "auto")
    }

    fn check(&self) -> Result<()> {
        match self {
            GammaSpec::Value(g) if *g > 0.0 && g.is_finite() => Ok(()),
            GammaSpec::Value(g) => {
                Err(LabError::Config(format!("gamma must be positive, got {g}")))
            }
            GammaSpec::Named(n) if n == "auto" => Ok(()),
            GammaSpec::Named(n) => Err(LabError::Config(format!(
                "gamma must be a number or \"auto\", got {n:?}"
            ))),
        }
    }
}

impl std::str::FromStr for GammaSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(GammaSpec::Named(s.into()));
        }
        s.parse::<f64>()
            .map(GammaSpec::Value)
            .map_err(|_| format!("expected a number or \"auto\", got {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticlesSpec {
    #[serde(default = "half")]
    pub s: f64,
    pub positions: Vec<f64>,
    pub orientations: Vec<i8>,
    #[serde(default = "ParticlesSpec::default_gamma")]
    pub gamma: GammaSpec,
    #[serde(default = "norm_squared")]
    pub gamma_convention: String,
    /// Layer grid used when `gamma` is `"auto"`.
    #[serde(default)]
    pub layer: LayerGridSpec,
    pub t_end: f64,
    #[serde(default)]
    pub gap_tol: Option<f64>,
    /// Ratio for clause (iii) of the collision bounds.
    #[serde(default)]
    pub a0: Option<f64>,
    /// Largest step, so the trajectory has at least this many rows.
    #[serde(default = "ParticlesSpec::default_samples")]
    pub samples: usize,
}

impl ParticlesSpec {
    fn default_gamma() -> GammaSpec {
        GammaSpec::Named("auto".into())
    }
    fn default_samples() -> usize {
        200
    }

    pub fn new(s: f64, positions: Vec<f64>, orientations: Vec<i8>, t_end: f64) -> Self {
        ParticlesSpec {
            s,
            positions,
            orientations,
            gamma: Self::default_gamma(),
            gamma_convention: norm_squared(),
            layer: LayerGridSpec::default(),
            t_end,
            gap_tol: None,
            a0: None,
            samples: Self::default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParabolicSpec {
    #[serde(default = "half")]
    pub s: f64,
    #[serde(default = "standard_potential")]
    pub potential: String,
    pub positions: Vec<f64>,
    pub orientations: Vec<i8>,
    pub eps: f64,
    pub t_end: f64,
    pub dt_out: f64,
    #[serde(default)]
    pub layer: LayerGridSpec,
    #[serde(default = "ParabolicSpec::default_nodes_per_eps")]
    pub nodes_per_eps: f64,
    #[serde(default = "ParabolicSpec::default_padding")]
    pub padding: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "yes")]
    pub write_snapshots: bool,
    /// Write every `snapshot_stride`-th snapshot.
    #[serde(default = "ParabolicSpec::default_stride")]
    pub snapshot_stride: usize,
    /// Also integrate the particle system and write it at the output times.
    #[serde(default = "yes")]
    pub compare_particles: bool,
}

impl ParabolicSpec {
    fn default_nodes_per_eps() -> f64 {
        20.0
    }
    fn default_padding() -> f64 {
        8.0
    }
    fn default_stride() -> usize {
        1
    }
}

/// One value or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    #[serde(default = "half")]
    pub s: f64,
    #[serde(default = "standard_potential")]
    pub potential: String,
    pub p: OneOrMany,
    #[serde(rename = "L")]
    pub l: OneOrMany,
    #[serde(default = "CellSpec::default_min_period")]
    pub min_period: f64,
    #[serde(default = "CellSpec::default_h")]
    pub h: f64,
    #[serde(default = "CellSpec::default_tau_end")]
    pub tau_end: f64,
    /// Times the run may be doubled until the slope windows agree.
    #[serde(default = "CellSpec::default_doublings")]
    pub max_doublings: usize,
}

impl CellSpec {
    fn default_min_period() -> f64 {
        1.0
    }
    fn default_h() -> f64 {
        0.05
    }
    fn default_tau_end() -> f64 {
        200.0
    }
    fn default_doublings() -> usize {
        2
    }

    pub fn new(p: Vec<f64>, l: Vec<f64>) -> Self {
        CellSpec {
            s: 0.5,
            potential: standard_potential(),
            p: OneOrMany::Many(p),
            l: OneOrMany::Many(l),
            min_period: Self::default_min_period(),
            h: Self::default_h(),
            tau_end: Self::default_tau_end(),
            max_doublings: Self::default_doublings(),
        }
    }

    /// The `(p, L)` grid, `p` varying slowest.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let ls = self.l.values();
        self.p
            .values()
            .into_iter()
            .flat_map(|p| ls.iter().map(move |&l| (p, l)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrowanSpec {
    #[serde(default = "half")]
    pub s: f64,
    #[serde(default = "OrowanSpec::one")]
    pub p0: f64,
    #[serde(default = "OrowanSpec::one", rename = "L0")]
    pub l0: f64,
    #[serde(default = "OrowanSpec::default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "ParticlesSpec::default_gamma")]
    pub gamma: GammaSpec,
    #[serde(default)]
    pub layer: LayerGridSpec,
    #[serde(default = "CellSpec::default_h")]
    pub h: f64,
    #[serde(default = "OrowanSpec::default_tau_min")]
    pub tau_min: f64,
    #[serde(default = "OrowanSpec::default_crossings")]
    pub crossings: f64,
}

impl OrowanSpec {
    fn one() -> f64 {
        1.0
    }
    fn default_eps() -> Vec<f64> {
        vec![0.4, 0.2, 0.1]
    }
    fn default_tau_min() -> f64 {
        200.0
    }
    fn default_crossings() -> f64 {
        12.0
    }
}

impl Default for OrowanSpec {
    fn default() -> Self {
        OrowanSpec {
            s: 0.5,
            p0: 1.0,
            l0: 1.0,
            eps: Self::default_eps(),
            gamma: ParticlesSpec::default_gamma(),
            layer: LayerGridSpec::default(),
            h: CellSpec::default_h(),
            tau_min: Self::default_tau_min(),
            crossings: Self::default_crossings(),
        }
    }
}

/// Initial datum of the mean-field equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitProfile {
    /// `low` left of `left`, `high` right of `right`, a half cosine between.
    CosineRamp {
        left: f64,
        right: f64,
        low: f64,
        high: f64,
        domain: [f64; 2],
        n: usize,
    },
    /// `Σ δ/2 (1 + erf((x - c)/σ))` over the centres.
    ErfStaircase {
        centers: Vec<f64>,
        delta: f64,
        sigma: f64,
        domain: [f64; 2],
        n: usize,
    },
    /// A field CSV with its JSON sidecar.
    Field { csv: String },
    /// Particles at `positions` (all `+1`) against the mean-field solution
    /// from their smoothed staircase of step `delta`, on a grid of spacing `h`.
    Particles {
        positions: Vec<f64>,
        delta: f64,
        h: f64,
    },
}

/// Inline profile or a path to a JSON file holding one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitSource {
    Inline(InitProfile),
    Path(String),
}

impl InitSource {
    pub fn load(&self) -> Result<InitProfile> {
        match self {
            InitSource::Inline(p) => Ok(p.clone()),
            InitSource::Path(path) => {
                let text = std::fs::read_to_string(path).map_err(LabError::io(path))?;
                serde_json::from_str(&text).map_err(|e| LabError::Config(format!("{path}: {e}")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanfieldSpec {
    pub init: InitSource,
    pub t_end: f64,
    #[serde(default = "MeanfieldSpec::default_gamma")]
    pub gamma: f64,
    #[serde(default = "MeanfieldSpec::default_dt_out")]
    pub dt_out: f64,
    #[serde(default = "MeanfieldSpec::default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    /// Transport by `∂_x u` (nondecreasing data) instead of `|∂_x u|`.
    #[serde(default = "yes")]
    pub monotone: bool,
}

impl MeanfieldSpec {
    fn default_gamma() -> f64 {
        2.0 * std::f64::consts::PI
    }
    fn default_dt_out() -> f64 {
        1e-3
    }
    fn default_cfl() -> f64 {
        0.9
    }

    pub fn new(init: InitSource, t_end: f64) -> Self {
        MeanfieldSpec {
            init,
            t_end,
            gamma: Self::default_gamma(),
            dt_out: Self::default_dt_out(),
            cfl: Self::default_cfl(),
            dt: None,
            monotone: true,
        }
    }
}

pub fn order(s: f64) -> Result<FractionalOrder> {
    FractionalOrder::new(s).map_err(LabError::core("s"))
}

pub fn potential(name: &str) -> Result<Potential> {
    Potential::by_name(name).ok_or_else(|| LabError::Config(format!("unknown potential {name:?}")))
}

pub fn convention(name: &str) -> Result<GammaConvention> {
    GammaConvention::parse(name)
        .ok_or_else(|| LabError::Config(format!("unknown gamma convention {name:?}")))
}

pub fn layer_config(positions: &[f64], orientations: &[i8]) -> Result<LayerConfig> {
    LayerConfig::new(positions.to_vec(), orientations.to_vec())
        .map_err(LabError::core("layer configuration"))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(LabError::Config(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::Heteroclinic(_) => "heteroclinic",
            ExperimentConfig::Multibump(_) => "multibump",
            ExperimentConfig::Particles(_) => "particles",
            ExperimentConfig::Parabolic(_) => "parabolic",
            ExperimentConfig::Cell(_) => "cell",
            ExperimentConfig::Orowan(_) => "orowan",
            ExperimentConfig::Meanfield(_) => "meanfield",
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(LabError::io(path))?;
        Self::from_json(&text).map_err(|e| match e {
            LabError::Config(m) => LabError::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// Canonical serialization, the input of the manifest hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configs serialize")
    }

    /// Checks every value against the preconditions of the routine it
    /// feeds, without running anything expensive.
    pub fn validate(&self) -> Result<()> {
        match self {
            ExperimentConfig::Heteroclinic(c) => {
                order(c.s)?;
                potential(&c.potential)?;
                convention(&c.gamma_convention)?;
                c.layer.grid()?;
                positive("tol", c.layer.tol)
            }
            ExperimentConfig::Multibump(c) => {
                let s = order(c.s)?.get();
                if !(s > 0.5 && s < 1.0) {
                    return Err(LabError::Core {
                        context: "s",
                        source: disloc_core::Error::InvalidOrder {
                            s,
                            reason: "multibump solutions need 1/2 < s < 1",
                        },
                    });
                }
                potential(&c.potential)?;
                let a = c.modulation.build()?;
                positive("h", c.h)?;
                positive("tol", c.tol)?;
                disloc_core::multibump::build_windows(&c.levels, &a, c.spacing())
                    .map_err(LabError::core("levels"))?;
                Ok(())
            }
            ExperimentConfig::Particles(c) => {
                order(c.s)?;
                layer_config(&c.positions, &c.orientations)?;
                c.gamma.check()?;
                convention(&c.gamma_convention)?;
                if c.gamma.is_auto() {
                    c.layer.grid()?;
                }
                positive("t_end", c.t_end)?;
                if let Some(g) = c.gap_tol {
                    positive("gap_tol", g)?;
                }
                if let Some(a) = c.a0 {
                    positive("a0", a)?;
                }
                if c.samples == 0 {
                    return Err(LabError::Config("samples must be at least 1".into()));
                }
                Ok(())
            }
            ExperimentConfig::Parabolic(c) => {
                order(c.s)?;
                potential(&c.potential)?;
                layer_config(&c.positions, &c.orientations)?;
                c.layer.grid()?;
                positive("eps", c.eps)?;
                positive("t_end", c.t_end)?;
                positive("dt_out", c.dt_out)?;
                positive("nodes_per_eps", c.nodes_per_eps)?;
                positive("padding", c.padding)?;
                if let Some(dt) = c.dt {
                    positive("dt", dt)?;
                }
                if c.snapshot_stride == 0 {
                    return Err(LabError::Config(
                        "snapshot_stride must be at least 1".into(),
                    ));
                }
                Ok(())
            }
            ExperimentConfig::Cell(c) => {
                let s = order(c.s)?;
                if c.potential != "standard-cosine" {
                    return Err(LabError::Config(format!(
                        "the cell problem supports only the standard-cosine potential, got {:?}",
                        c.potential
                    )));
                }
                positive("tau_end", c.tau_end)?;
                let points = c.points();
                if points.is_empty() {
                    return Err(LabError::Config("p and L must be nonempty".into()));
                }
                for (p, l) in points {
                    CellProblem::resolved(s, p, l, c.min_period, c.h)
                        .map_err(LabError::core("cell problem"))?;
                }
                Ok(())
            }
            ExperimentConfig::Orowan(c) => {
                let s = order(c.s)?;
                c.gamma.check()?;
                if let GammaSpec::Value(g) = c.gamma {
                    disloc_core::homog::check_orowan(c.p0, &c.eps, g)
                        .map_err(LabError::core("orowan"))?;
                } else {
                    disloc_core::homog::check_orowan(c.p0, &c.eps, 1.0)
                        .map_err(LabError::core("orowan"))?;
                    c.layer.grid()?;
                }
                for &e in &c.eps {
                    positive("eps", e)?;
                    CellProblem::resolved(s, e * c.p0, 0.0, 1.0, c.h)
                        .map_err(LabError::core("orowan cell"))?;
                }
                positive("tau_min", c.tau_min)?;
                positive("crossings", c.crossings)
            }
            ExperimentConfig::Meanfield(c) => {
                positive("t_end", c.t_end)?;
                positive("gamma", c.gamma)?;
                positive("dt_out", c.dt_out)?;
                positive("cfl", c.cfl)?;
                if let Some(dt) = c.dt {
                    positive("dt", dt)?;
                }
                match c.init.load()? {
                    InitProfile::CosineRamp {
                        left,
                        right,
                        domain,
                        n,
                        ..
                    } => {
                        if left.partial_cmp(&right) != Some(std::cmp::Ordering::Less) {
                            return Err(LabError::Config("cosine-ramp needs left < right".into()));
                        }
                        Grid1D::new(domain[0], domain[1], n, false)
                            .map_err(LabError::core("init grid"))?;
                    }
                    InitProfile::ErfStaircase {
                        centers,
                        delta,
                        sigma,
                        domain,
                        n,
                    } => {
                        if centers.is_empty() {
                            return Err(LabError::Config(
                                "erf-staircase needs at least one centre".into(),
                            ));
                        }
                        positive("delta", delta)?;
                        positive("sigma", sigma)?;
                        Grid1D::new(domain[0], domain[1], n, false)
                            .map_err(LabError::core("init grid"))?;
                    }
                    InitProfile::Field { csv } => {
                        if !Path::new(&csv).exists() {
                            return Err(LabError::Config(format!(
                                "field CSV {csv:?} does not exist"
                            )));
                        }
                    }
                    InitProfile::Particles {
                        positions,
                        delta,
                        h,
                    } => {
                        layer_config(&positions, &vec![1; positions.len()])?;
                        positive("delta", delta)?;
                        positive("h", h)?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// Parses `+,-,+` or `1,-1,1`.
pub fn parse_orientations(text: &str) -> std::result::Result<Vec<i8>, String> {
    text.split(',')
        .map(|t| match t.trim() {
            "+" | "1" | "+1" => Ok(1),
            "-" | "-1" => Ok(-1),
            other => Err(format!("orientation must be + or -, got {other:?}")),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_keys() {
        let c = ExperimentConfig::from_json(r#"{"experiment":"heteroclinic"}"#).unwrap();
        assert_eq!(
            c,
            ExperimentConfig::Heteroclinic(HeteroclinicSpec::default())
        );
        let c =
            ExperimentConfig::from_json(r#"{"experiment":"cell","p":0,"L":[0.1,0.2]}"#).unwrap();
        let ExperimentConfig::Cell(cell) = c else {
            panic!()
        };
        assert_eq!(cell.points(), vec![(0.0, 0.1), (0.0, 0.2)]);
    }

    #[test]
    fn unknown_keys_and_experiments_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"experiment":"heteroclinic","S":0.5}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment":"nope"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"s":0.5}"#).is_err());
    }

    #[test]
    fn validation_catches_bad_orders() {
        let c = ExperimentConfig::Heteroclinic(HeteroclinicSpec {
            s: 1.5,
            ..Default::default()
        });
        let e = c.validate().unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("fractional order"), "{e}");
        let mb = ExperimentConfig::Multibump(MultibumpSpec {
            s: 0.5,
            ..MultibumpSpec::new(vec![0, 1, 0])
        });
        assert_eq!(mb.validate().unwrap_err().exit_code(), 2);
        assert!(ExperimentConfig::Multibump(MultibumpSpec::new(vec![0, 2]))
            .validate()
            .is_err());
    }

    #[test]
    fn round_trip() {
        let c =
            ExperimentConfig::Particles(ParticlesSpec::new(0.5, vec![0.0, 1.0], vec![1, -1], 1.0));
        assert_eq!(ExperimentConfig::from_json(&c.canonical_json()).unwrap(), c);
        assert_eq!(parse_orientations("+,-,1").unwrap(), vec![1, -1, 1]);
        assert!(parse_orientations("+,x").is_err());
    }
}
