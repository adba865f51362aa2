//! Loss bounds and minimax decisions from data-dependent margins and
//! equivalence curves.

use serde::{Deserialize, Serialize};

use crate::curves::{ECurve, EquivalenceCurve};
use crate::error::{Error, Result};

/// How `μ ↦ L_μ(d)` is specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    /// `losses[d][i]` is the loss of decision `d` at `mu_grid[i]`; linear
    /// between grid points and constant beyond both ends.
    Table { mu_grid: Vec<f64>, losses: Vec<Vec<f64>> },
    /// `ℓ⁻(d)` for `μ <= delta`, `ℓ⁺(d)` for `μ > delta`.
    StepAtDelta { delta: f64, lower: Vec<f64>, upper: Vec<f64> },
    /// `intercepts[d] + slopes[d] μ`.
    Linear { intercepts: Vec<f64>, slopes: Vec<f64> },
}

/// A finite decision set with a loss non-decreasing in `μ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub decisions: Vec<String>,
    pub loss: LossKind,
}

/// Points at which monotonicity is checked for closed-form losses.
const CHECK_GRID: [f64; 9] = [0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 5.0, 100.0];

impl LossSpec {
    pub fn new(decisions: Vec<String>, loss: LossKind) -> Result<Self> {
        let s = Self { decisions, loss };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.decisions.len();
        if k == 0 {
            return Err(Error::param("decision set is empty"));
        }
        let check_len = |name: &str, n: usize| {
            if n == k {
                Ok(())
            } else {
                Err(Error::param(format!("{name} has {n} entries for {k} decisions")))
            }
        };
        match &self.loss {
            LossKind::Table { mu_grid, losses } => {
                check_len("loss table", losses.len())?;
                if mu_grid.is_empty() || mu_grid.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::param("loss grid must be non-empty and strictly increasing"));
                }
                for (d, row) in losses.iter().enumerate() {
                    if row.len() != mu_grid.len() {
                        return Err(Error::param(format!("loss row {} does not match the grid", self.decisions[d])));
                    }
                    if row.windows(2).any(|w| !(w[0] <= w[1])) {
                        return Err(Error::param(format!("loss of {} is not non-decreasing in mu", self.decisions[d])));
                    }
                }
            }
            LossKind::StepAtDelta { delta, lower, upper } => {
                check_len("lower losses", lower.len())?;
                check_len("upper losses", upper.len())?;
                if !delta.is_finite() {
                    return Err(Error::param("step location must be finite"));
                }
                if let Some(d) = (0..k).find(|&d| !(lower[d] <= upper[d])) {
                    return Err(Error::param(format!("lower loss exceeds upper loss for {}", self.decisions[d])));
                }
            }
            LossKind::Linear { intercepts, slopes } => {
                check_len("intercepts", intercepts.len())?;
                check_len("slopes", slopes.len())?;
                if slopes.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
                    return Err(Error::param("linear loss slopes must be non-negative"));
                }
            }
        }
        for d in 0..k {
            let mut prev = f64::NEG_INFINITY;
            for &mu in &CHECK_GRID {
                let l = self.loss_at(mu, d);
                if !(l >= 0.0) {
                    return Err(Error::param(format!("loss of {} is negative at {mu}", self.decisions[d])));
                }
                if l < prev {
                    return Err(Error::param(format!("loss of {} decreases at {mu}", self.decisions[d])));
                }
                prev = l;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn decision_index(&self, label: &str) -> Result<usize> {
        self.decisions
            .iter()
            .position(|d| d == label)
            .ok_or_else(|| Error::param(format!("unknown decision '{label}'")))
    }

    /// `L_μ(d)`; `μ = +inf` gives the supremum of the loss.
    pub fn loss_at(&self, mu: f64, d: usize) -> f64 {
        match &self.loss {
            LossKind::Table { mu_grid, losses } => {
                let row = &losses[d];
                if mu <= mu_grid[0] {
                    return row[0];
                }
                let last = mu_grid.len() - 1;
                if mu >= mu_grid[last] {
                    return row[last];
                }
                let j = mu_grid.partition_point(|&g| g < mu);
                let (a, b) = (mu_grid[j - 1], mu_grid[j]);
                let w = (mu - a) / (b - a);
                row[j - 1] + w * (row[j] - row[j - 1])
            }
            LossKind::StepAtDelta { delta, lower, upper } => {
                if mu <= *delta {
                    lower[d]
                } else {
                    upper[d]
                }
            }
            LossKind::Linear { intercepts, slopes } => {
                if slopes[d] == 0.0 {
                    intercepts[d]
                } else {
                    intercepts[d] + slopes[d] * mu
                }
            }
        }
    }
}

/// `L_{Δ̂_α}(d)`: with probability at least `1 − α` the loss of `d` does
/// not exceed it.
pub fn loss_bound(loss: &LossSpec, margin: f64, d: usize) -> Result<f64> {
    if d >= loss.len() {
        return Err(Error::param(format!("decision index {d} out of range")));
    }
    if margin.is_nan() {
        return Err(Error::param("margin is NaN"));
    }
    Ok(loss.loss_at(margin, d))
}

/// The decision minimizing `L_{Δ̂_α}`, ties to the smallest index.
pub fn minimax_decision(loss: &LossSpec, margin: f64) -> Result<(usize, f64)> {
    let mut best = (0, loss_bound(loss, margin, 0)?);
    for d in 1..loss.len() {
        let b = loss.loss_at(margin, d);
        if b < best.1 {
            best = (d, b);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub alpha: f64,
    #[serde(with = "crate::curves::serde_f64")]
    pub margin: f64,
    pub decision: usize,
    #[serde(with = "crate::curves::serde_f64")]
    pub bound: f64,
}

/// Minimax decision and bound at every level of an equivalence curve.
pub fn loss_spectrum(loss: &LossSpec, curve: &EquivalenceCurve) -> Result<Vec<SpectrumEntry>> {
    curve
        .levels
        .iter()
        .zip(&curve.margins)
        .map(|(&alpha, &margin)| {
            let (decision, bound) = minimax_decision(loss, margin)?;
            Ok(SpectrumEntry {
                alpha,
                margin,
                decision,
                bound,
            })
        })
        .collect()
}

/// `inf{α : Δ >= Δ̂_α}` on the curve's level grid, if any level qualifies.
pub fn level_for_margin(curve: &EquivalenceCurve, delta: f64) -> Option<f64> {
    curve
        .levels
        .iter()
        .zip(&curve.margins)
        .find(|(_, &m)| delta >= m)
        .map(|(&a, _)| a)
}

/// `argmin_d max_{Δ >= 0} L_Δ(d) / ε_Δ` over the non-negative margins of
/// the curve. `0/0` counts as 0 and `L/0` with `L > 0` as `+inf`; ties go
/// to the smallest index.
pub fn evidence_weighted_minimax(loss: &LossSpec, curve: &ECurve) -> Result<(usize, f64)> {
    let grid: Vec<(f64, f64)> = curve
        .margins
        .iter()
        .zip(&curve.values)
        .filter(|(m, _)| **m >= 0.0)
        .map(|(&m, &e)| (m, e))
        .collect();
    if grid.is_empty() {
        return Err(Error::param("curve has no non-negative margins"));
    }
    let objective = |d: usize| {
        grid.iter()
            .map(|&(m, e)| {
                let l = loss.loss_at(m, d);
                if l == 0.0 {
                    0.0
                } else if e == 0.0 {
                    f64::INFINITY
                } else {
                    l / e
                }
            })
            .fold(0.0f64, f64::max)
    };
    let mut best = (0, objective(0));
    for d in 1..loss.len() {
        let v = objective(d);
        if v < best.1 {
            best = (d, v);
        }
    }
    if best.1.is_infinite() {
        return Err(Error::AmbiguousDecision(
            "every decision has an infinite evidence-weighted loss".into(),
        ));
    }
    Ok(best)
}
