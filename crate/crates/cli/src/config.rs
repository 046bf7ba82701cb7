//! Configuration documents. One TOML file describes a run, a sweep or a
//! list of verification checks; `schema` must be 1.

use std::path::{Path, PathBuf};

use alexflow::flows::{FlowMode, MeasureSpec};
use alexflow::functionals::{FunctionalDescriptor, FunctionalSpec};
use alexflow::schedules::StepSchedule;
use alexflow::spaces::{BoundSide, GeodesicBall, Point, SpaceDescriptor};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowChoice {
    Ppa,
    CyclicPpa,
    StochasticPpa,
    InductiveMean,
    Jensen,
}

/// Where certificates measure distances from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReferenceChoice {
    /// `"minimizer"` (the default, also `𝔼μ` for measures) or `"none"`.
    Named(String),
    Point(Vec<f64>),
}

impl Default for ReferenceChoice {
    fn default() -> Self {
        ReferenceChoice::Named("minimizer".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    /// Defaults to the space's base point.
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub kind: FlowChoice,
    #[serde(default = "upper")]
    pub mode: FlowMode,
    pub max_k: usize,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    #[serde(default)]
    pub reference: ReferenceChoice,
    /// Stop after a cycle that moves less than this; 0 disables stopping.
    #[serde(default = "default_stop")]
    pub stop_tol: f64,
    /// Envelope of `d(x_{kn}, y)²` for cyclic runs: computed when applicable
    /// unless set; `true` makes an inapplicable envelope an error.
    #[serde(default)]
    pub envelope: Option<bool>,
}

fn upper() -> FlowMode {
    FlowMode::Upper
}

fn default_stop() -> f64 {
    1e-12
}

/// Finitely supported measure: squared distances to `anchors`, or the
/// top-level functionals when no anchors are given.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default)]
    pub anchors: Vec<Vec<f64>>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    /// Inductive means: draw i.i.d. from the weights instead of streaming
    /// the anchors in order.
    #[serde(default)]
    pub random: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JensenConfig {
    pub functional: FunctionalDescriptor<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub schedules: Vec<StepSchedule<f64>>,
    /// Horizon window `[k_min, max_k]` of the decay fit.
    #[serde(default = "default_fit_start")]
    pub fit_from: usize,
}

fn default_fit_start() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    /// Independent seeded trials (child seeds of `seed`).
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    pub space: SpaceDescriptor<f64>,
    pub region: RegionConfig,
    pub flow: FlowConfig,
    #[serde(default)]
    pub schedule: Option<StepSchedule<f64>>,
    #[serde(default)]
    pub functionals: Vec<FunctionalDescriptor<f64>>,
    #[serde(default)]
    pub measure: Option<MeasureConfig>,
    #[serde(default)]
    pub jensen: Option<JensenConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Curvature,
    KConvexity,
    Concavity,
    Lipschitz,
    Variance,
    Estimates,
}

/// Whether a check is meant to hold, or meant to produce a witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    #[default]
    Pass,
    Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub kind: CheckKind,
    #[serde(default)]
    pub name: Option<String>,
    pub space: SpaceDescriptor<f64>,
    pub region: RegionConfig,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub expect: Expectation,
    /// Curvature: which comparison inequality to test.
    #[serde(default)]
    pub side: Option<BoundSide>,
    /// K-convexity and Lipschitz checks.
    #[serde(default)]
    pub functional: Option<FunctionalDescriptor<f64>>,
    /// Constant under test; defaults to the certified one.
    #[serde(default)]
    pub constant: Option<f64>,
    /// Added to the constant under test.
    #[serde(default)]
    pub offset: f64,
    /// Concavity: base points `y` of `-d_y²`; variance: the atoms.
    #[serde(default)]
    pub anchors: Vec<Vec<f64>>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    /// Estimates: which resolvent.
    #[serde(default)]
    pub mode: Option<FlowMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub schema: u32,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub checks: Vec<CheckConfig>,
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn check_schema(schema: u32) -> Result<(), CliError> {
    if schema != SCHEMA {
        return Err(CliError::Config(format!(
            "unsupported schema {schema}, expected {SCHEMA}"
        )));
    }
    Ok(())
}

pub fn parse_run(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    check_schema(cfg.schema)?;
    if cfg.trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    Ok(cfg)
}

pub fn parse_verify(text: &str) -> Result<VerifyConfig, CliError> {
    let cfg: VerifyConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    check_schema(cfg.schema)?;
    if cfg.checks.is_empty() {
        return Err(CliError::Config("no checks listed".into()));
    }
    Ok(cfg)
}

pub fn point(space: &SpaceDescriptor<f64>, coords: &[f64]) -> Result<Point<f64>, CliError> {
    Ok(space.point(coords)?)
}

pub fn region(
    space: &SpaceDescriptor<f64>,
    r: &RegionConfig,
) -> Result<GeodesicBall<f64>, CliError> {
    let center = match &r.center {
        Some(c) => point(space, c)?,
        None => space.origin(),
    };
    Ok(GeodesicBall::new(center, r.radius)?)
}

impl RunConfig {
    pub fn region(&self) -> Result<GeodesicBall<f64>, CliError> {
        region(&self.space, &self.region)
    }

    pub fn schedule(&self) -> Result<StepSchedule<f64>, CliError> {
        self.schedule
            .ok_or_else(|| CliError::Config(format!("{:?} needs a [schedule]", self.flow.kind)))
    }

    pub fn functionals(&self, g: &GeodesicBall<f64>) -> Result<Vec<FunctionalSpec<f64>>, CliError> {
        self.functionals
            .iter()
            .map(|d| Ok(FunctionalSpec::new(d.build(&self.space)?, g.clone())?))
            .collect()
    }

    pub fn start(&self, g: &GeodesicBall<f64>) -> Result<Point<f64>, CliError> {
        match &self.flow.start {
            Some(c) => point(&self.space, c),
            None => Ok(g.center().clone()),
        }
    }

    pub fn measure_config(&self) -> MeasureConfig {
        self.measure.clone().unwrap_or_default()
    }

    pub fn anchors(&self) -> Result<Vec<Point<f64>>, CliError> {
        self.measure_config()
            .anchors
            .iter()
            .map(|c| point(&self.space, c))
            .collect()
    }

    pub fn measure(&self, g: &GeodesicBall<f64>) -> Result<MeasureSpec<f64>, CliError> {
        let m = self.measure_config();
        if !m.anchors.is_empty() {
            return Ok(MeasureSpec::squared_distances(
                &self.anchors()?,
                m.weights.as_deref(),
                g,
            )?);
        }
        let atoms = self.functionals(g)?;
        if atoms.is_empty() {
            return Err(CliError::Config(
                "measure needs anchors or functionals".into(),
            ));
        }
        Ok(match m.weights {
            Some(w) => MeasureSpec::new(atoms, w)?,
            None => MeasureSpec::uniform(atoms)?,
        })
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| "run".into())
    }
}
