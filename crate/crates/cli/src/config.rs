//! Experiment configuration: a strict TOML schema mapped onto the core types.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use topamp::bloch::{Param, PointSpec, DEFAULT_N_GRID};
use topamp::hofstadter::{DEFAULT_ETA_CUT, DEFAULT_N_KY};
use topamp::{Chirality, LatticeSpec, WaveguideSpec};

use crate::error::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Shown by `list-presets`.
    #[serde(default)]
    pub description: String,
    pub waveguide: Option<WaveguideConfig>,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub drive: DriveConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    pub task: TaskConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Seeds the random initial state of `dynamics`.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveguideConfig {
    /// Resonant momenta in units of 1/a.
    pub k_res: Option<Vec<f64>>,
    /// Resonant momenta in units of π/a.
    pub k_res_pi: Option<Vec<f64>>,
    /// Total decay rate, split equally over the modes.
    pub gamma: Option<f64>,
    pub gamma_per_mode: Option<Vec<f64>>,
    pub l_kappa: f64,
    #[serde(default)]
    pub chirality: Chirality,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub n: Option<usize>,
    pub positions: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriveProfile {
    /// The upstream edge site.
    #[default]
    Edge,
    Uniform,
    Site,
    None,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    #[serde(default)]
    pub pump: f64,
    #[serde(default)]
    pub g_s: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "one")]
    pub parametric_factor: f64,
    #[serde(default)]
    pub profile: DriveProfile,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Driven site for `profile = "site"`.
    pub site: Option<usize>,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self { pump: 0.0, g_s: 0.0, delta: 0.0, parametric_factor: 1.0, profile: DriveProfile::Edge, amplitude: 1.0, site: None }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub axes: Vec<AxisConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "l_kappa")]
    LKappa,
    #[serde(rename = "pump")]
    Pump,
    #[serde(rename = "g_s")]
    GS,
    #[serde(rename = "delta")]
    Delta,
    /// Mode ℓ sits at `k_0 + ℓ·dk`.
    #[serde(rename = "dk")]
    Dk,
    #[serde(rename = "n_sites")]
    NSites,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::NSites => "n_sites",
            p => p.core().unwrap().name(),
        }
    }

    fn core(self) -> Option<Param> {
        Some(match self {
            SweepParam::LKappa => Param::LKappa,
            SweepParam::Pump => Param::Pump,
            SweepParam::GS => Param::GS,
            SweepParam::Delta => Param::Delta,
            SweepParam::Dk => Param::Dk,
            SweepParam::NSites => return None,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub param: SweepParam,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub n: Option<usize>,
    /// Values are multiples of π.
    #[serde(default)]
    pub in_pi: bool,
}

impl AxisConfig {
    pub fn resolve(&self, path: &str) -> Result<Vec<f64>, CliError> {
        let raw = match (&self.values, self.start, self.stop, self.n) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => topamp::bloch::Axis::linspace(Param::Pump, a, b, n).values,
            _ => return Err(CliError::schema(path, "give either `values` or all of `start`, `stop`, `n`")),
        };
        if raw.is_empty() {
            return Err(CliError::schema(path, "axis has no values"));
        }
        let scale = if self.in_pi { PI } else { 1.0 };
        let vals: Vec<f64> = raw.iter().map(|v| v * scale).collect();
        if self.param == SweepParam::NSites && vals.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
            return Err(CliError::schema(path, "n_sites values must be positive integers"));
        }
        Ok(vals)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteadyMethod {
    #[default]
    Direct,
    Svd,
    SvdEdge,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    #[default]
    Uniform,
    Vacuum,
    /// Unit-norm random complex vector from `seed`.
    Random,
    /// Combination of right singular vectors given by `initial_vectors`.
    SingularVectors,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorWeight {
    /// Position in descending singular-value order; negative counts from
    /// the end (-1 is the smallest).
    pub index: i64,
    pub weight: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskConfig {
    Couplings {},
    Winding {
        #[serde(default = "default_n_grid")]
        n_grid: usize,
        /// Samples of the loop `h(k)` written per cell; 0 disables traces.
        #[serde(default = "default_loop_points")]
        loop_points: usize,
    },
    PhaseDiagram {
        #[serde(default = "default_n_grid")]
        n_grid: usize,
    },
    SteadyState {
        #[serde(default)]
        method: SteadyMethod,
        /// Edge-set size; the bulk winding number when absent.
        winding: Option<usize>,
        #[serde(default = "one_usize")]
        padding: usize,
        #[serde(default = "default_peak_ratio")]
        peak_ratio: f64,
    },
    Greens {
        #[serde(default)]
        frequency: f64,
    },
    Dynamics {
        #[serde(default = "default_t_min")]
        t_min: f64,
        #[serde(default = "default_t_max")]
        t_max: f64,
        #[serde(default = "default_n_times")]
        n_times: usize,
        #[serde(default)]
        initial: InitialState,
        #[serde(default)]
        initial_vectors: Vec<VectorWeight>,
        #[serde(default = "yes")]
        profiles: bool,
        #[serde(default)]
        projections: bool,
        /// Edge-set size for projections; the bulk winding number when absent.
        winding: Option<usize>,
        #[serde(default = "one_usize")]
        padding: usize,
        #[serde(default = "default_peak_ratio")]
        peak_ratio: f64,
    },
    GapScaling {
        sizes: Vec<usize>,
    },
    Hofstadter {
        q: usize,
        phi: Option<f64>,
        width: Option<usize>,
        #[serde(default = "one")]
        j_hop: f64,
        #[serde(default = "default_n_ky")]
        n_ky: usize,
        #[serde(default = "default_gaps")]
        gaps: Vec<usize>,
        #[serde(default = "default_eta_cut")]
        eta_cut: f64,
        /// Cavity-edge coupling per crossing, or one value for all.
        #[serde(default = "default_coupling")]
        coupling_g: Vec<f64>,
        #[serde(default = "default_edge_l_kappa")]
        l_kappa: f64,
    },
}

impl TaskConfig {
    pub fn name(&self) -> &'static str {
        match self {
            TaskConfig::Couplings {} => "couplings",
            TaskConfig::Winding { .. } => "winding",
            TaskConfig::PhaseDiagram { .. } => "phase-diagram",
            TaskConfig::SteadyState { .. } => "steady-state",
            TaskConfig::Greens { .. } => "greens",
            TaskConfig::Dynamics { .. } => "dynamics",
            TaskConfig::GapScaling { .. } => "gap-scaling",
            TaskConfig::Hofstadter { .. } => "hofstadter",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out_dir(), formats: default_formats() }
    }
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_n_grid() -> usize {
    DEFAULT_N_GRID
}
fn default_loop_points() -> usize {
    512
}
fn default_peak_ratio() -> f64 {
    topamp::steadystate::DEFAULT_PEAK_RATIO
}
fn default_t_min() -> f64 {
    1e-2
}
fn default_t_max() -> f64 {
    1e3
}
fn default_n_times() -> usize {
    200
}
fn default_n_ky() -> usize {
    DEFAULT_N_KY
}
fn default_gaps() -> Vec<usize> {
    vec![1, 2]
}
fn default_eta_cut() -> f64 {
    DEFAULT_ETA_CUT
}
fn default_coupling() -> Vec<f64> {
    vec![1.0]
}
fn default_edge_l_kappa() -> f64 {
    1e3
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

const DEFAULT_N_SITES: usize = 100;

/// Parses TOML text, reporting schema violations with the offending key path.
pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Schema { path: String::new(), msg: e.to_string() })?;
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Schema { path, msg: e.into_inner().message().to_string() }
    })?;
    cfg.check()?;
    Ok(cfg)
}

/// A sweep axis with resolved values.
#[derive(Clone, Debug)]
pub struct ResolvedAxis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl ExperimentConfig {
    /// Semantic checks beyond the schema.
    pub fn check(&self) -> Result<(), CliError> {
        let hof = matches!(self.task, TaskConfig::Hofstadter { .. });
        if !hof && self.waveguide.is_none() {
            return Err(CliError::schema("waveguide", "missing section required by this task"));
        }
        if hof && !self.sweep.axes.is_empty() {
            return Err(CliError::schema("sweep.axes", "the hofstadter task does not take sweep axes"));
        }
        if let Some(wg) = &self.waveguide {
            self.waveguide_spec_from(wg)?;
        }
        self.lattice()?;
        self.axes()?;
        if self.drive.profile == DriveProfile::Site && self.drive.site.is_none() {
            return Err(CliError::schema("drive.site", "required when profile = \"site\""));
        }
        match &self.task {
            TaskConfig::GapScaling { sizes } if sizes.is_empty() || sizes.contains(&0) => {
                return Err(CliError::schema("task.sizes", "need at least one positive size"));
            }
            TaskConfig::Dynamics { initial, initial_vectors, n_times, t_min, t_max, .. } => {
                if (*initial == InitialState::SingularVectors) == initial_vectors.is_empty() {
                    return Err(CliError::schema(
                        "task.initial_vectors",
                        "must be given exactly when initial = \"singular-vectors\"",
                    ));
                }
                if *n_times == 0 || !(*t_min > 0.0 && t_max >= t_min) {
                    return Err(CliError::schema("task", "need n_times > 0 and 0 < t_min <= t_max"));
                }
            }
            TaskConfig::Winding { n_grid, .. } | TaskConfig::PhaseDiagram { n_grid } if *n_grid < 8 => {
                return Err(CliError::schema("task.n_grid", "at least 8 momenta required"));
            }
            _ => {}
        }
        if self.output.formats.is_empty() {
            return Err(CliError::schema("output.formats", "no output format selected"));
        }
        Ok(())
    }

    fn waveguide_spec_from(&self, wg: &WaveguideConfig) -> Result<WaveguideSpec, CliError> {
        let k = match (&wg.k_res, &wg.k_res_pi) {
            (Some(k), None) => k.clone(),
            (None, Some(k)) => k.iter().map(|x| x * PI).collect(),
            _ => return Err(CliError::schema("waveguide", "give exactly one of `k_res`, `k_res_pi`")),
        };
        let spec = match (&wg.gamma_per_mode, wg.gamma) {
            (Some(g), None) => WaveguideSpec::new(g.clone(), k, wg.l_kappa),
            (None, g) => WaveguideSpec::equal_rates(k, wg.l_kappa, g.unwrap_or(1.0)),
            _ => return Err(CliError::schema("waveguide", "give at most one of `gamma`, `gamma_per_mode`")),
        }
        .map_err(|e| CliError::schema("waveguide", &e.to_string()))?;
        Ok(spec.with_chirality(wg.chirality))
    }

    pub fn waveguide_spec(&self) -> Result<WaveguideSpec, CliError> {
        let wg = self.waveguide.as_ref().ok_or_else(|| CliError::schema("waveguide", "missing section"))?;
        self.waveguide_spec_from(wg)
    }

    pub fn lattice(&self) -> Result<LatticeSpec, CliError> {
        match (&self.lattice.positions, self.lattice.n) {
            (Some(p), None) => LatticeSpec::from_positions(p.clone()).map_err(|e| CliError::schema("lattice.positions", &e.to_string())),
            (None, n) => {
                let n = n.unwrap_or(DEFAULT_N_SITES);
                if n == 0 {
                    return Err(CliError::schema("lattice.n", "need at least one site"));
                }
                Ok(LatticeSpec::uniform(n))
            }
            _ => Err(CliError::schema("lattice", "give at most one of `n`, `positions`")),
        }
    }

    pub fn axes(&self) -> Result<Vec<ResolvedAxis>, CliError> {
        self.sweep
            .axes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let values = a.resolve(&format!("sweep.axes[{i}]"))?;
                if a.param == SweepParam::NSites && self.lattice.positions.is_some() {
                    return Err(CliError::schema(&format!("sweep.axes[{i}]"), "n_sites cannot be swept with explicit positions"));
                }
                Ok(ResolvedAxis { param: a.param, values })
            })
            .collect()
    }

    pub fn point(&self) -> Result<PointSpec, CliError> {
        Ok(PointSpec {
            wg: self.waveguide_spec()?,
            pump: self.drive.pump,
            g_s: self.drive.g_s,
            delta: self.drive.delta,
            parametric_factor: self.drive.parametric_factor,
        })
    }
}

/// Applies one cell's swept values to the base point and lattice.
pub fn apply(axes: &[ResolvedAxis], params: &[f64], point: &mut PointSpec, lattice: &mut LatticeSpec) {
    for (ax, &v) in axes.iter().zip(params) {
        match ax.param.core() {
            Some(p) => point.set(p, v),
            None => *lattice = LatticeSpec::uniform(v as usize),
        }
    }
}
