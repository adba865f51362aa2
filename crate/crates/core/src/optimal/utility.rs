//! Utility functions `U` and the inverse marginal utility `ψ = (U')⁻¹`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A utility on `[0, ∞]`.
///
/// * `Log`: `U(x) = ln x`, `ψ(y) = 1/y`.
/// * `NeymanPearson`: `U(x) = min(x, 1/α)`. `U'` jumps from 1 to 0 at `1/α`,
///   so `ψ(y) = 1/α` for `y < 1`, `0` for `y > 1`, and the midpoint `1/(2α)`
///   at the tie `y = 1`.
/// * `PowerFamily`: `U(x) = x^ρ / ρ` with `0 < ρ < 1`,
///   `ψ(y) = y^(-1/(1-ρ))`. Here `x U'(x) = x^ρ` is bounded only on a
///   truncated range of e-values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilitySpec {
    Log,
    NeymanPearson { alpha: f64 },
    PowerFamily { rho: f64 },
}

/// Range of e-values over which the utility assumptions are checked.
pub const EVALUATION_RANGE: (f64, f64) = (1e-8, 1e8);

impl UtilitySpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            UtilitySpec::Log => Ok(()),
            UtilitySpec::NeymanPearson { alpha } => {
                if alpha > 0.0 && alpha < 1.0 {
                    Ok(())
                } else {
                    Err(Error::param(format!("Neyman-Pearson level {alpha} outside (0, 1)")))
                }
            }
            UtilitySpec::PowerFamily { rho } => {
                if rho > 0.0 && rho < 1.0 {
                    Ok(())
                } else {
                    Err(Error::param(format!("power exponent {rho} outside (0, 1)")))
                }
            }
        }
    }

    pub fn is_log(&self) -> bool {
        matches!(self, UtilitySpec::Log)
    }

    pub fn u(&self, x: f64) -> f64 {
        match *self {
            UtilitySpec::Log => x.ln(),
            UtilitySpec::NeymanPearson { alpha } => x.min(1.0 / alpha),
            UtilitySpec::PowerFamily { rho } => x.powf(rho) / rho,
        }
    }

    pub fn u_prime(&self, x: f64) -> f64 {
        match *self {
            UtilitySpec::Log => 1.0 / x,
            UtilitySpec::NeymanPearson { alpha } => {
                if x < 1.0 / alpha {
                    1.0
                } else {
                    0.0
                }
            }
            UtilitySpec::PowerFamily { rho } => x.powf(rho - 1.0),
        }
    }

    /// `ln ψ(y)` from `ln y`.
    pub fn log_psi(&self, log_y: f64) -> f64 {
        match *self {
            UtilitySpec::Log => -log_y,
            UtilitySpec::NeymanPearson { alpha } => {
                if log_y < 0.0 {
                    -alpha.ln()
                } else if log_y > 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -(2.0 * alpha).ln()
                }
            }
            UtilitySpec::PowerFamily { rho } => -log_y / (1.0 - rho),
        }
    }

    pub fn psi(&self, y: f64) -> f64 {
        self.log_psi(y.ln()).exp()
    }

    /// Numeric check of the standing assumptions on a log-spaced grid over
    /// [`EVALUATION_RANGE`]: `U'` positive where it is used, non-increasing,
    /// and `x U'(x)` bounded. Returns the maximum of `x U'(x)`.
    pub fn check_assumptions(&self) -> Result<f64> {
        self.validate()?;
        let (lo, hi) = EVALUATION_RANGE;
        let points = 401;
        let mut prev = f64::INFINITY;
        let mut sup = 0.0f64;
        for i in 0..points {
            let x = (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (points - 1) as f64).exp();
            let d = self.u_prime(x);
            if !(d >= 0.0) || d > prev {
                return Err(Error::param(format!("U' is not non-increasing and non-negative at {x}")));
            }
            prev = d;
            sup = sup.max(x * d);
        }
        if !sup.is_finite() {
            return Err(Error::param("x U'(x) is unbounded on the evaluation range"));
        }
        Ok(sup)
    }
}
