//! JSON configuration schemas for each subcommand.

use std::path::{Path, PathBuf};

use evequiv::curves::{linear_grid, log_levels};
use evequiv::decisions::LossSpec;
use evequiv::models::{Family, MarginPair, MixtureAlternative, ModelLabel, ParametricModel};
use evequiv::numeric::{Integral, QuadSettings};
use evequiv::optimal::methods::{CurveMethod, MarginAlternative, DEFAULT_UI_POINTS};
use evequiv::optimal::stp::counterexample_kernel;
use evequiv::optimal::validity::SweepMethod;
use evequiv::optimal::{DiscreteKernel, UtilitySpec};
use rand::RngCore;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::CliError;

/// Read and parse a JSON config; parse errors carry line and column.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Resolve a path from a config relative to the config's directory.
pub fn resolve(config: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config.parent().unwrap_or_else(|| Path::new(".")).join(p)
    }
}

/// A grid given explicitly or by its range and size.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Explicit { grid: Vec<f64> },
    Range { lower: f64, upper: f64, points: usize },
}

impl GridSpec {
    pub fn linear(&self) -> Result<Vec<f64>, CliError> {
        match self {
            GridSpec::Explicit { grid } => nonempty(grid.clone()),
            GridSpec::Range { lower, upper, points } => nonempty(linear_grid(*lower, *upper, *points)),
        }
    }

    /// Log-spaced for ranges; explicit grids are used as given.
    pub fn logarithmic(&self) -> Result<Vec<f64>, CliError> {
        match self {
            GridSpec::Explicit { grid } => nonempty(grid.clone()),
            GridSpec::Range { lower, upper, points } => {
                if lower.is_nan() || *lower <= 0.0 {
                    return Err(CliError::Config("log-spaced grid needs a positive lower end".into()));
                }
                nonempty(log_levels(*lower, *upper, *points))
            }
        }
    }
}

fn nonempty(g: Vec<f64>) -> Result<Vec<f64>, CliError> {
    if g.is_empty() {
        Err(CliError::Config("grid is empty".into()))
    } else {
        Ok(g)
    }
}

/// The statistic family: one of the reduced Gaussian models or a finite
/// kernel.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    ZTest { sigma: f64, n: usize },
    TEffectSize { n: usize },
    SymmetricZSquared { n: usize },
    SymmetricTSquaredF { n: usize },
    Kernel { params: Vec<f64>, points: Vec<f64>, rows: Vec<Vec<f64>> },
    CounterexampleKernel,
}

impl FamilySpec {
    pub fn build(&self) -> Result<AnyFamily, CliError> {
        let model = |label| Ok(AnyFamily::Model(ParametricModel::new(label)?));
        match self.clone() {
            FamilySpec::ZTest { sigma, n } => model(ModelLabel::ZTest { sigma, n }),
            FamilySpec::TEffectSize { n } => model(ModelLabel::TEffectSize { n }),
            FamilySpec::SymmetricZSquared { n } => model(ModelLabel::SymmetricZSquared { n }),
            FamilySpec::SymmetricTSquaredF { n } => model(ModelLabel::SymmetricTSquaredF { n }),
            FamilySpec::Kernel { params, points, rows } => Ok(AnyFamily::Kernel(DiscreteKernel::new(params, points, rows)?)),
            FamilySpec::CounterexampleKernel => Ok(AnyFamily::Kernel(counterexample_kernel())),
        }
    }

    pub fn model(&self) -> Result<ParametricModel, CliError> {
        match self.build()? {
            AnyFamily::Model(m) => Ok(m),
            AnyFamily::Kernel(_) => Err(CliError::Config("this command needs a parametric model, not a kernel".into())),
        }
    }
}

#[derive(Debug, Clone)]
pub enum AnyFamily {
    Model(ParametricModel),
    Kernel(DiscreteKernel),
}

impl Family for AnyFamily {
    fn log_density(&self, param: f64, x: f64) -> f64 {
        match self {
            AnyFamily::Model(m) => m.log_density(param, x),
            AnyFamily::Kernel(k) => k.log_density(param, x),
        }
    }

    fn expectation(&self, param: f64, log_f: &dyn Fn(f64) -> f64, settings: QuadSettings) -> evequiv::Result<Integral> {
        match self {
            AnyFamily::Model(m) => m.expectation(param, log_f, settings),
            AnyFamily::Kernel(k) => k.expectation(param, log_f, settings),
        }
    }

    fn sample(&self, param: f64, rng: &mut dyn RngCore) -> f64 {
        match self {
            AnyFamily::Model(m) => m.sample(param, rng),
            AnyFamily::Kernel(k) => k.sample(param, rng),
        }
    }

    fn statistic_grid(&self, params: &[f64], points: usize) -> Vec<f64> {
        match self {
            AnyFamily::Model(m) => m.statistic_grid(params, points),
            AnyFamily::Kernel(k) => k.statistic_grid(params, points),
        }
    }

    fn parameter_space(&self) -> (f64, f64) {
        match self {
            AnyFamily::Model(m) => m.parameter_space(),
            AnyFamily::Kernel(k) => k.parameter_space(),
        }
    }
}

/// The observed data: the reduced statistic or the raw sample, exactly one.
#[derive(Debug, Clone, Default)]
pub struct DataSpec {
    pub statistic: Option<f64>,
    pub sample: Option<Vec<f64>>,
}

impl DataSpec {
    pub fn statistic(&self, model: &ParametricModel) -> Result<f64, CliError> {
        match (self.statistic, &self.sample) {
            (Some(x), None) => Ok(x),
            (None, Some(s)) => Ok(model.sufficient_statistic(s)?),
            _ => Err(CliError::Config("give exactly one of `statistic` and `sample`".into())),
        }
    }
}

fn default_ui_points() -> usize {
    DEFAULT_UI_POINTS
}

fn default_alternative() -> MarginAlternative {
    MarginAlternative::DiracMidpoint
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub family: FamilySpec,
    #[serde(default)]
    pub statistic: Option<f64>,
    #[serde(default)]
    pub sample: Option<Vec<f64>>,
    /// Positive half-widths `Δ` of the symmetric margins `(−Δ, Δ)`.
    pub margins: GridSpec,
    /// Levels `α`; ranges are log-spaced.
    pub levels: GridSpec,
    #[serde(default = "default_alternative")]
    pub alternative: MarginAlternative,
    pub methods: Vec<CurveMethod>,
    #[serde(default = "default_ui_points")]
    pub ui_grid_points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub family: FamilySpec,
    pub margins: MarginPair,
    pub alternative: MixtureAlternative,
    #[serde(default = "default_utility")]
    pub utility: UtilitySpec,
}

fn default_utility() -> UtilitySpec {
    UtilitySpec::Log
}

/// Which e-value a validity sweep checks.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EValueSpec {
    LogOptimal,
    UtilityOptimal { utility: UtilitySpec },
    TostE,
    UniversalInference,
}

fn default_sweep() -> SweepMethod {
    SweepMethod::Quadrature
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidityConfig {
    pub family: FamilySpec,
    pub margins: MarginPair,
    pub alternative: MixtureAlternative,
    pub evalue: EValueSpec,
    /// Explicit null parameters; defaults to the truncated grid.
    #[serde(default)]
    pub null_grid: Option<Vec<f64>>,
    #[serde(default = "default_ui_points")]
    pub null_grid_points: usize,
    #[serde(default = "default_sweep")]
    pub method: SweepMethod,
    #[serde(default = "default_ui_points")]
    pub ui_grid_points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontierConfig {
    pub family: FamilySpec,
    #[serde(default)]
    pub statistic: Option<f64>,
    #[serde(default)]
    pub sample: Option<Vec<f64>>,
    pub lower: GridSpec,
    pub upper: GridSpec,
    pub alpha: f64,
    pub method: CurveMethod,
    #[serde(default = "default_alternative")]
    pub alternative: MarginAlternative,
    #[serde(default = "default_ui_points")]
    pub ui_grid_points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Combine {
    Average { weight: f64 },
    Product,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MergeConfig {
    /// Two e-curve CSV files (`margin,e_value`), relative to the config.
    pub curves: [PathBuf; 2],
    pub combine: Combine,
    pub levels: GridSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecideConfig {
    pub loss: LossSpec,
    /// An equivalence-curve CSV (`alpha,margin_hat`).
    #[serde(default)]
    pub equivalence_curve: Option<PathBuf>,
    /// A single data-dependent margin.
    #[serde(default)]
    pub margin: Option<f64>,
    /// An e-curve CSV for the evidence-weighted decision.
    #[serde(default)]
    pub ecurve: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Counterexample,
    Matrix { params: Vec<f64>, points: Vec<f64>, rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexSpec {
    pub p: [f64; 3],
    pub p1: [f64; 3],
    pub p2: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StpConfig {
    pub kernel: KernelSpec,
    pub orders: Vec<usize>,
    #[serde(default)]
    pub simplex: Vec<SimplexSpec>,
}
