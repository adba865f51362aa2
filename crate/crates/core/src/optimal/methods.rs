//! E-curves `Δ ↦ ε_Δ(x)` over symmetric margins `(−Δ, Δ)` and e-surfaces
//! over margin pairs, for each construction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::boundary::calibrate_log;
use super::tost::{model_null_grid, TostE, UniversalInference};
use super::EValue;
use crate::curves::{fixed_level_curve, right_lower_envelope, ECurve, MarginSurface};
use crate::error::{Error, Result};
use crate::models::{MarginPair, MixtureAlternative, ParametricModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveMethod {
    LogOptimal,
    TostE,
    UniversalInference,
    /// `(1/α) 𝕀{ε_log ≥ 1/α}`.
    FixedLevel { alpha: f64 },
}

impl CurveMethod {
    pub fn name(&self) -> &'static str {
        match self {
            CurveMethod::LogOptimal => "log_optimal",
            CurveMethod::TostE => "tost_e",
            CurveMethod::UniversalInference => "universal_inference",
            CurveMethod::FixedLevel { .. } => "fixed_level",
        }
    }
}

/// The alternative used at each margin pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginAlternative {
    /// A point mass at the midpoint of the margins.
    DiracMidpoint,
    /// Uniform over the open margin interval.
    UniformBetween,
    /// The same mixture for every pair; it must lie inside all of them.
    Fixed { alternative: MixtureAlternative },
}

impl MarginAlternative {
    pub fn for_margins(&self, margins: MarginPair) -> MixtureAlternative {
        match self {
            MarginAlternative::DiracMidpoint => MixtureAlternative::Dirac {
                point: margins.midpoint(),
            },
            MarginAlternative::UniformBetween => MixtureAlternative::UniformInterval {
                lower: margins.lower,
                upper: margins.upper,
            },
            MarginAlternative::Fixed { alternative } => alternative.clone(),
        }
    }
}

/// Null-grid size used by universal inference.
pub const DEFAULT_UI_POINTS: usize = 50;

/// `ε` at statistic `x` for the margins `margins`.
pub fn evalue_at(
    model: &ParametricModel,
    margins: MarginPair,
    alternative: &MarginAlternative,
    method: CurveMethod,
    ui_points: usize,
    x: f64,
) -> Result<f64> {
    let alt = alternative.for_margins(margins);
    match method {
        CurveMethod::LogOptimal | CurveMethod::FixedLevel { .. } => Ok(calibrate_log(model, margins, &alt)?.0.value(x)),
        CurveMethod::TostE => Ok(TostE::log(*model, margins, &alt)?.value(x)),
        CurveMethod::UniversalInference => {
            let grid = model_null_grid(model, margins, ui_points)?;
            Ok(UniversalInference::new(*model, &alt, grid)?.value(x))
        }
    }
}

/// Raw values `ε_Δ(x)` on the grid of symmetric margins (no envelope).
pub fn raw_symmetric_values(
    model: &ParametricModel,
    x: f64,
    deltas: &[f64],
    alternative: &MarginAlternative,
    method: CurveMethod,
    ui_points: usize,
) -> Result<Vec<f64>> {
    deltas
        .par_iter()
        .map(|&d| evalue_at(model, MarginPair::symmetric(d)?, alternative, method, ui_points, x))
        .collect()
}

/// The monotone e-curve of `method` at statistic `x` over symmetric margins
/// `(−Δ, Δ)`, `Δ ∈ deltas`; raw values are passed through the right-lower
/// envelope.
pub fn symmetric_ecurve(
    model: &ParametricModel,
    x: f64,
    deltas: &[f64],
    alternative: &MarginAlternative,
    method: CurveMethod,
    ui_points: usize,
) -> Result<ECurve> {
    if deltas.is_empty() {
        return Err(Error::param("margin grid is empty"));
    }
    if deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::param("symmetric margins must be positive"));
    }
    let values = raw_symmetric_values(model, x, deltas, alternative, method, ui_points)?;
    let curve = right_lower_envelope(&ECurve::new(deltas.to_vec(), values)?);
    match method {
        CurveMethod::FixedLevel { alpha } => fixed_level_curve(&curve, alpha),
        _ => Ok(curve),
    }
}

/// E-values over all valid pairs `(Δ⁻, Δ⁺)` of two grids.
pub fn margin_surface(
    model: &ParametricModel,
    x: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    alternative: &MarginAlternative,
    method: CurveMethod,
    ui_points: usize,
) -> Result<MarginSurface> {
    let pairs: Vec<(usize, usize)> = (0..lower.len())
        .flat_map(|i| (0..upper.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| lower[i] < upper[j])
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| evalue_at(model, MarginPair::new(lower[i], upper[j])?, alternative, method, ui_points, x))
        .collect::<Result<_>>()?;
    let mut table = vec![vec![f64::NAN; upper.len()]; lower.len()];
    for (&(i, j), v) in pairs.iter().zip(values) {
        table[i][j] = v;
    }
    let values = match method {
        CurveMethod::FixedLevel { alpha } => table
            .into_iter()
            .map(|row| row.into_iter().map(|v| if v >= 1.0 / alpha { 1.0 / alpha } else if v.is_nan() { v } else { 0.0 }).collect())
            .collect(),
        _ => table,
    };
    MarginSurface::new(lower, upper, values)
}
