//! Boundary-mixture e-values `ψ(λ (c p_{Δ⁻} + (1−c) p_{Δ⁺}) / q)` and their
//! calibration to unit expectation at both boundaries.

use serde::{Deserialize, Serialize};

use super::utility::UtilitySpec;
use super::EValue;
use crate::error::{Error, Result};
use crate::models::{Atoms, Family, MarginPair, MixtureAlternative, EXPECTATION_SETTINGS};
use crate::numeric::quadrature::QuadSettings;
use crate::numeric::{find_root, log_add_exp, RootSettings};

/// The mixing weight is searched in `t = logit(c)`: first over
/// `|t| <= LOGIT_BRACKET.0`, widening up to `|t| <= LOGIT_BRACKET.1`.
pub const LOGIT_BRACKET: (f64, f64) = (13.8, 36.0);
/// Bracket searched for the scale `λ`.
pub const LAMBDA_BRACKET: (f64, f64) = (1e-6, 1e6);

/// Tolerance on the boundary expectations after a log calibration.
pub const LOG_TOLERANCE: f64 = 1e-8;
/// Tolerance on the boundary expectations after a utility calibration.
pub const UTILITY_TOLERANCE: f64 = 1e-7;

/// A boundary-mixture e-value for a fixed family, margins and alternative.
#[derive(Debug, Clone)]
pub struct BoundaryMixtureEValue<F: Family + Clone> {
    pub family: F,
    pub margins: MarginPair,
    pub alternative: MixtureAlternative,
    pub utility: UtilitySpec,
    /// Weight on the lower boundary; 0 for one-sided margins.
    pub c: f64,
    /// Scale inside `ψ`; 1 for the log utility.
    pub lambda: f64,
    /// Whether `(c, λ)` came from a successful calibration.
    pub calibrated: bool,
    atoms: Atoms,
}

impl<F: Family + Clone> BoundaryMixtureEValue<F> {
    /// An uncalibrated e-value with explicit `(c, λ)`.
    pub fn new(
        family: F,
        margins: MarginPair,
        alternative: MixtureAlternative,
        utility: UtilitySpec,
        c: f64,
        lambda: f64,
    ) -> Result<Self> {
        margins.validate()?;
        utility.validate()?;
        alternative.check_inside(&margins)?;
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::param(format!("mixing weight {c} outside [0, 1]")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param(format!("scale {lambda} must be positive")));
        }
        let atoms = alternative.atoms()?;
        Ok(Self {
            family,
            margins,
            alternative,
            utility,
            c: if margins.is_one_sided() { 0.0 } else { c },
            lambda,
            calibrated: false,
            atoms,
        })
    }

    fn with_params(&self, c: f64, lambda: f64) -> Self {
        Self {
            c,
            lambda,
            calibrated: false,
            ..self.clone()
        }
    }

    /// `ln q(x)`.
    pub fn log_alternative(&self, x: f64) -> f64 {
        self.atoms.log_density(&self.family, x)
    }

    /// `ln(c p_{Δ⁻}(x) + (1−c) p_{Δ⁺}(x))`.
    pub fn log_null_mixture(&self, x: f64) -> f64 {
        let upper = self.family.log_density(self.margins.upper, x);
        if self.c == 0.0 {
            return upper;
        }
        let lower = self.family.log_density(self.margins.lower, x);
        if self.c == 1.0 {
            return lower;
        }
        log_add_exp(self.c.ln() + lower, (1.0 - self.c).ln() + upper)
    }

    /// `(E_{Δ⁻}[ε], E_{Δ⁺}[ε])`; the first entry is NaN for one-sided margins.
    pub fn boundary_expectations(&self, settings: QuadSettings) -> Result<(f64, f64)> {
        let f = |x: f64| self.log_value(x);
        let upper = self.family.expectation(self.margins.upper, &f, settings)?.value;
        let lower = if self.margins.is_one_sided() {
            f64::NAN
        } else {
            self.family.expectation(self.margins.lower, &f, settings)?.value
        };
        Ok((lower, upper))
    }
}

impl<F: Family + Clone> EValue for BoundaryMixtureEValue<F> {
    fn log_value(&self, x: f64) -> f64 {
        let lq = self.log_alternative(x);
        if lq == f64::NEG_INFINITY {
            // q(x) = 0: report no evidence.
            return f64::NEG_INFINITY;
        }
        let log_y = self.lambda.ln() + self.log_null_mixture(x) - lq;
        self.utility.log_psi(log_y)
    }
}

/// Outcome of a calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub c: f64,
    pub lambda: f64,
    #[serde(with = "crate::curves::serde_f64")]
    pub expectation_lower: f64,
    pub expectation_upper: f64,
    /// Root-finder iterations for `c` (summed over all inner solves).
    pub c_iterations: usize,
    /// Root-finder iterations for `λ`.
    pub lambda_iterations: usize,
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Root in `c` of a gap that decreases in `c`, with its iteration count.
/// When the gap keeps one sign over the widest bracket, the nearer end is
/// returned with `None`.
fn mixing_weight_root<G: FnMut(f64) -> Result<f64>>(mut g: G) -> Result<(f64, Option<usize>)> {
    let mut l = LOGIT_BRACKET.0;
    loop {
        let (ga, gb) = (g(logistic(-l))?, g(logistic(l))?);
        if ga <= 0.0 && l >= LOGIT_BRACKET.1 {
            return Ok((logistic(-l), None));
        }
        if gb >= 0.0 && l >= LOGIT_BRACKET.1 {
            return Ok((logistic(l), None));
        }
        if ga > 0.0 && gb < 0.0 {
            break;
        }
        l = (2.0 * l).min(LOGIT_BRACKET.1);
    }
    let settings = RootSettings {
        x_tol: 1e-12,
        f_tol: 0.0,
        max_iter: 200,
    };
    let root = find_root(|t| g(logistic(t)), -l, l, settings)?;
    Ok((logistic(root.x), Some(root.iterations)))
}

/// Log-optimal calibration: the unique `c*` with
/// `E_{Δ⁻}[ε_{c*}] = E_{Δ⁺}[ε_{c*}] = 1`, where `ε_c = q / p_c`.
pub fn calibrate_log<F: Family + Clone>(
    family: &F,
    margins: MarginPair,
    alternative: &MixtureAlternative,
) -> Result<(BoundaryMixtureEValue<F>, CalibrationReport)> {
    calibrate_log_with(family, margins, alternative, EXPECTATION_SETTINGS)
}

pub fn calibrate_log_with<F: Family + Clone>(
    family: &F,
    margins: MarginPair,
    alternative: &MixtureAlternative,
    settings: QuadSettings,
) -> Result<(BoundaryMixtureEValue<F>, CalibrationReport)> {
    let base = BoundaryMixtureEValue::new(family.clone(), margins, alternative.clone(), UtilitySpec::Log, 0.5, 1.0)?;
    let (c, iterations) = if margins.is_one_sided() {
        (0.0, 0)
    } else {
        let g = |c: f64| -> Result<f64> {
            let (lo, hi) = base.with_params(c, 1.0).boundary_expectations(settings)?;
            Ok(lo - hi)
        };
        let (c, iterations) = mixing_weight_root(g)?;
        (c, iterations.unwrap_or(0))
    };
    let mut ev = base.with_params(c, 1.0);
    let (lo, hi) = ev.boundary_expectations(settings)?;
    check_boundaries(lo, hi, LOG_TOLERANCE, margins.is_one_sided())?;
    ev.calibrated = true;
    Ok((
        ev,
        CalibrationReport {
            c,
            lambda: 1.0,
            expectation_lower: lo,
            expectation_upper: hi,
            c_iterations: iterations,
            lambda_iterations: 0,
        },
    ))
}

fn check_boundaries(lo: f64, hi: f64, tol: f64, one_sided: bool) -> Result<()> {
    let bad = |v: f64| !((v - 1.0).abs() <= tol);
    if bad(hi) || (!one_sided && bad(lo)) {
        return Err(Error::Calibration(format!(
            "boundary expectations ({lo:.12}, {hi:.12}) miss 1 by more than {tol:e}"
        )));
    }
    Ok(())
}

/// Utility-optimal calibration of `(c, λ)`: for each `λ` the inner root
/// `c(λ)` equalizes the two boundary expectations, and the outer root sets
/// their common value `m(λ)` to 1.
pub fn calibrate_utility<F: Family + Clone>(
    family: &F,
    margins: MarginPair,
    alternative: &MixtureAlternative,
    utility: UtilitySpec,
) -> Result<(BoundaryMixtureEValue<F>, CalibrationReport)> {
    calibrate_utility_with(family, margins, alternative, utility, EXPECTATION_SETTINGS)
}

pub fn calibrate_utility_with<F: Family + Clone>(
    family: &F,
    margins: MarginPair,
    alternative: &MixtureAlternative,
    utility: UtilitySpec,
    settings: QuadSettings,
) -> Result<(BoundaryMixtureEValue<F>, CalibrationReport)> {
    utility.check_assumptions()?;
    let base = BoundaryMixtureEValue::new(family.clone(), margins, alternative.clone(), utility, 0.5, 1.0)?;
    let one_sided = margins.is_one_sided();
    let inner_iterations = std::cell::Cell::new(0usize);

    // c(λ) and the common boundary expectation m(λ).
    let solve_c = |lambda: f64| -> Result<(f64, f64, f64)> {
        if one_sided {
            let (_, hi) = base.with_params(0.0, lambda).boundary_expectations(settings)?;
            return Ok((0.0, f64::NAN, hi));
        }
        let g = |c: f64| -> Result<f64> {
            let (lo, hi) = base.with_params(c, lambda).boundary_expectations(settings)?;
            Ok(lo - hi)
        };
        let (c, iterations) = mixing_weight_root(g)?;
        inner_iterations.set(inner_iterations.get() + iterations.unwrap_or(0));
        let (lo, hi) = base.with_params(c, lambda).boundary_expectations(settings)?;
        Ok((c, lo, hi))
    };
    let m = |lambda: f64| -> Result<f64> {
        let (c, lo, hi) = solve_c(lambda)?;
        Ok(if one_sided { hi } else { c * lo + (1.0 - c) * hi })
    };

    // m decreases from ∞ to 0; bracket the crossing of 1 geometrically.
    let (lo_bound, hi_bound) = LAMBDA_BRACKET;
    let mut lo = 1.0f64;
    let mut hi = 1.0f64;
    let m1 = m(1.0)?;
    if m1 > 1.0 {
        while m(hi)? > 1.0 {
            lo = hi;
            hi *= 4.0;
            if hi > hi_bound {
                return Err(Error::Calibration("no λ in the search range brings m(λ) down to 1".into()));
            }
        }
    } else if m1 < 1.0 {
        while m(lo)? < 1.0 {
            hi = lo;
            lo /= 4.0;
            if lo < lo_bound {
                return Err(Error::Calibration("no λ in the search range brings m(λ) up to 1".into()));
            }
        }
    }
    let lambda = if lo == hi {
        (lo, 0)
    } else {
        let root = find_root(
            |t: f64| Ok(m(t.exp())? - 1.0),
            lo.ln(),
            hi.ln(),
            RootSettings {
                x_tol: 1e-13,
                f_tol: 1e-12,
                max_iter: 200,
            },
        )?;
        (root.x.exp(), root.iterations)
    };
    let (lambda, lambda_iterations) = lambda;
    let (c, _, _) = solve_c(lambda)?;
    let mut ev = base.with_params(c, lambda);
    let (e_lo, e_hi) = ev.boundary_expectations(settings)?;
    check_boundaries(e_lo, e_hi, UTILITY_TOLERANCE, one_sided)?;
    ev.calibrated = true;
    Ok((
        ev,
        CalibrationReport {
            c,
            lambda,
            expectation_lower: e_lo,
            expectation_upper: e_hi,
            c_iterations: inner_iterations.get(),
            lambda_iterations,
        },
    ))
}

/// `g(c) = E_{Δ⁻}[ε_c] − E_{Δ⁺}[ε_c]` for the log utility.
pub fn log_calibration_gap<F: Family + Clone>(
    family: &F,
    margins: MarginPair,
    alternative: &MixtureAlternative,
    c: f64,
) -> Result<f64> {
    let ev = BoundaryMixtureEValue::new(family.clone(), margins, alternative.clone(), UtilitySpec::Log, c, 1.0)?;
    let (lo, hi) = ev.boundary_expectations(EXPECTATION_SETTINGS)?;
    Ok(lo - hi)
}
