//! Run configuration: a TOML file, or the JSON manifest of an earlier run.
//! Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Infsup,
    Converge,
    Asymptotics,
    Landscape,
    Forward,
    Invert,
    Diagnose,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Infsup => "infsup",
            Command::Converge => "converge",
            Command::Asymptotics => "asymptotics",
            Command::Landscape => "landscape",
            Command::Forward => "forward",
            Command::Invert => "invert",
            Command::Diagnose => "diagnose",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub execution: ExecutionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infsup: Option<InfSupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converge: Option<ConvergeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asymptotics: Option<AsymptoticsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landscape: Option<LandscapeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invert: Option<InvertSpec>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionSpec {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub mesh: MeshSpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_hz: Option<f64>,
    #[serde(default)]
    pub material: MaterialSpec,
    #[serde(default)]
    pub load: LoadSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<MeasurementSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    Bar {
        elements: usize,
        #[serde(default = "unit")]
        length: f64,
    },
    Rectangle {
        nx: usize,
        ny: usize,
        #[serde(default)]
        origin: [f64; 2],
        size: [f64; 2],
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagSpec {
    Dirichlet,
    Neumann,
    FreeUnknown,
}

/// Tags per side; sides left out stay unspecified (free unknown).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<TagSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<TagSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bottom: Option<TagSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top: Option<TagSpec>,
}

/// Uniform moduli with optional zones overriding them by element centroid.
/// Give `young` for bars, `bulk` and `shear` for plane strain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub young: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bulk: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shear: Option<f64>,
    #[serde(default = "unit")]
    pub density: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zones: Vec<ZoneSpec>,
}

impl Default for MaterialSpec {
    fn default() -> Self {
        MaterialSpec { young: None, bulk: None, shear: None, density: 1.0, zones: Vec::new() }
    }
}

/// Elements whose centroid lies in the box (`x`, `y` ranges, either may be
/// omitted) or in the circle (`centre`, `radius`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centre: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub young: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bulk: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shear: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSpec {
    /// constant body force, one value per displacement component
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traction: Vec<TractionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TractionSpec {
    pub side: SideSpec,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideSpec {
    Left,
    Right,
    Bottom,
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlavorSpec {
    Pointwise,
    L2Region,
    H1Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    pub flavor: FlavorSpec,
    /// pointwise flavor only
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<PointsSpec>,
    /// region flavors only; the whole mesh when omitted
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<BoxSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_scale: Option<f64>,
    #[serde(default = "unit")]
    pub weight: f64,
    pub data: DataSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointsSpec {
    /// every node not on a Dirichlet boundary
    Nodes,
    /// seeded uniform points along a bar, endpoints excluded
    Random {
        count: usize,
    },
    List {
        at: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// forward solve with `truth`, on `forward` when given (a finer mesh with
    /// its own boundary conditions and loads) or on the problem itself
    Synthetic {
        truth: MaterialSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        forward: Option<ForwardGeometry>,
        /// each value scaled by `1 + noise * U(-1, 1)`
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        allow_inverse_crime: bool,
    },
    /// plain-text measurement file
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardGeometry {
    pub mesh: MeshSpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub load: LoadSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfSupSpec {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub step_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine: Option<RefineSpec>,
}

/// Mesh sequence for a bar problem at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineSpec {
    pub frequency_hz: f64,
    pub elements: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointSetSpec {
    Nodal,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSpec {
    pub mode: usize,
    pub kappa: f64,
    pub elements: Vec<usize>,
    pub point_sets: Vec<PointSetSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeSpec {
    Small,
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsSpec {
    pub regime: RegimeSpec,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Scan of the moduli of the two material zones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeSpec {
    pub e1: GridSpec,
    pub e2: GridSpec,
    pub kappas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParametersSpec {
    /// per element inside the measured region, frozen elsewhere
    #[default]
    Measured,
    /// per element everywhere
    Elements,
    /// one value per material zone and modulus
    Zones,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingSpec {
    Linear,
    #[default]
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertSpec {
    pub kappa: f64,
    pub bounds: [f64; 2],
    #[serde(default)]
    pub parameters: ParametersSpec,
    #[serde(default)]
    pub scaling: ScalingSpec,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_gradient_tolerance")]
    pub gradient_tolerance: f64,
    #[serde(default)]
    pub decrease_tolerance: f64,
    #[serde(default = "default_memory")]
    pub memory: usize,
    #[serde(default = "default_initial_step")]
    pub initial_step: f64,
    /// summary of recovered means inside and outside a circular inclusion
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inclusion: Option<InclusionMetricSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InclusionMetricSpec {
    pub centre: [f64; 2],
    pub radius: f64,
    /// target moduli, one per material parameter
    pub background: Vec<f64>,
    pub inclusion: Vec<f64>,
}

fn unit() -> f64 {
    1.0
}

fn default_iterations() -> usize {
    200
}

fn default_gradient_tolerance() -> f64 {
    1e-10
}

fn default_memory() -> usize {
    10
}

fn default_initial_step() -> f64 {
    0.1
}

/// What a manifest stores to replay a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replay {
    pub command: Command,
    pub config: RunConfig,
}

/// Reads a TOML config, or a `manifest.json` whose embedded config is replayed.
/// Relative paths inside the config resolve against the config's directory.
pub fn load(path: &Path, command: Command) -> Result<RunConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    let mut cfg = if is_json {
        let replay: Replay =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if replay.command != command {
            return Err(CliError::Config(format!(
                "manifest records command `{}`, not `{}`",
                replay.command.name(),
                command.name()
            )));
        }
        replay.config
    } else {
        toml::from_str::<RunConfig>(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
    };
    if let Some(dir) = path.parent() {
        cfg.resolve_paths(dir);
    }
    Ok(cfg)
}

impl RunConfig {
    fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                let joined = dir.join(&*p);
                *p = std::path::absolute(&joined).unwrap_or(joined);
            }
        };
        if let Some(problem) = &mut self.problem {
            if let MeshSpec::File { path } = &mut problem.mesh {
                fix(path);
            }
            if let Some(m) = &mut problem.measurement {
                match &mut m.data {
                    DataSpec::File { path } => fix(path),
                    DataSpec::Synthetic { forward: Some(g), .. } => {
                        if let MeshSpec::File { path } = &mut g.mesh {
                            fix(path);
                        }
                    }
                    DataSpec::Synthetic { .. } => {}
                }
            }
        }
    }
}
