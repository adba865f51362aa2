//! TOST-E (minimum of two one-sided e-values) and universal inference.

use super::utility::UtilitySpec;
use super::EValue;
use crate::distributions::DistSpec;
use crate::error::{Error, Result};
use crate::models::{Atoms, Family, MarginPair, MixtureAlternative, ModelLabel, ParametricModel, EXPECTATION_SETTINGS};
use crate::numeric::{find_root, RootSettings};

/// Width of the truncated null region, in standard errors, beyond each
/// boundary.
pub const NULL_TRUNCATION_SE: f64 = 10.0;

/// `min(ψ(λ_L p_{Δ⁻}/q), ψ(λ_R p_{Δ⁺}/q))`. For the log utility both scales
/// are 1 and the map is `q / max(p_{Δ⁻}, p_{Δ⁺})`.
#[derive(Debug, Clone)]
pub struct TostE<F: Family + Clone> {
    pub family: F,
    pub margins: MarginPair,
    pub utility: UtilitySpec,
    pub lambda_lower: f64,
    pub lambda_upper: f64,
    atoms: Atoms,
}

impl<F: Family + Clone> TostE<F> {
    /// The log-utility TOST-E.
    pub fn log(family: F, margins: MarginPair, alternative: &MixtureAlternative) -> Result<Self> {
        Self::with_scales(family, margins, alternative, UtilitySpec::Log, 1.0, 1.0)
    }

    pub fn with_scales(
        family: F,
        margins: MarginPair,
        alternative: &MixtureAlternative,
        utility: UtilitySpec,
        lambda_lower: f64,
        lambda_upper: f64,
    ) -> Result<Self> {
        margins.validate()?;
        utility.validate()?;
        alternative.check_inside(&margins)?;
        let atoms = alternative.atoms()?;
        Ok(Self {
            family,
            margins,
            utility,
            lambda_lower,
            lambda_upper,
            atoms,
        })
    }

    /// TOST-E with each one-sided scale chosen so that its boundary
    /// expectation is 1.
    pub fn calibrated(family: F, margins: MarginPair, alternative: &MixtureAlternative, utility: UtilitySpec) -> Result<Self> {
        if utility.is_log() {
            return Self::log(family, margins, alternative);
        }
        let mut t = Self::with_scales(family, margins, alternative, utility, 1.0, 1.0)?;
        t.lambda_upper = t.calibrate_side(margins.upper)?;
        if !margins.is_one_sided() {
            t.lambda_lower = t.calibrate_side(margins.lower)?;
        }
        Ok(t)
    }

    fn calibrate_side(&self, boundary: f64) -> Result<f64> {
        let m = |log_lambda: f64| -> Result<f64> {
            let f = |x: f64| self.one_sided_log_value(boundary, log_lambda.exp(), x);
            Ok(self.family.expectation(boundary, &f, EXPECTATION_SETTINGS)?.value - 1.0)
        };
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        let limit = 1e6f64.ln();
        while m(hi)? > 0.0 {
            lo = hi;
            hi += 4f64.ln();
            if hi > limit {
                return Err(Error::Calibration("one-sided scale search exhausted".into()));
            }
        }
        if lo == hi {
            while m(lo)? < 0.0 {
                hi = lo;
                lo -= 4f64.ln();
                if lo < -limit {
                    return Err(Error::Calibration("one-sided scale search exhausted".into()));
                }
            }
        }
        if lo == hi {
            return Ok(1.0);
        }
        let root = find_root(
            m,
            lo,
            hi,
            RootSettings {
                x_tol: 1e-13,
                f_tol: 1e-12,
                max_iter: 200,
            },
        )?;
        Ok(root.x.exp())
    }

    fn one_sided_log_value(&self, boundary: f64, lambda: f64, x: f64) -> f64 {
        let lq = self.atoms.log_density(&self.family, x);
        if lq == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.utility.log_psi(lambda.ln() + self.family.log_density(boundary, x) - lq)
    }

    /// `ln ε^L(x)`; `+inf` for one-sided margins.
    pub fn log_lower(&self, x: f64) -> f64 {
        if self.margins.is_one_sided() {
            f64::INFINITY
        } else {
            self.one_sided_log_value(self.margins.lower, self.lambda_lower, x)
        }
    }

    /// `ln ε^R(x)`.
    pub fn log_upper(&self, x: f64) -> f64 {
        self.one_sided_log_value(self.margins.upper, self.lambda_upper, x)
    }
}

impl<F: Family + Clone> EValue for TostE<F> {
    fn log_value(&self, x: f64) -> f64 {
        self.log_lower(x).min(self.log_upper(x))
    }
}

/// `q(x) / max_{μ ∈ grid} p_μ(x)` over a finite null grid.
#[derive(Debug, Clone)]
pub struct UniversalInference<F: Family + Clone> {
    pub family: F,
    pub null_grid: Vec<f64>,
    atoms: Atoms,
}

impl<F: Family + Clone> UniversalInference<F> {
    pub fn new(family: F, alternative: &MixtureAlternative, null_grid: Vec<f64>) -> Result<Self> {
        if null_grid.is_empty() {
            return Err(Error::param("universal inference needs a non-empty null grid"));
        }
        if null_grid.iter().any(|m| !m.is_finite()) {
            return Err(Error::param("null grid points must be finite"));
        }
        let atoms = alternative.atoms()?;
        Ok(Self {
            family,
            null_grid,
            atoms,
        })
    }
}

impl<F: Family + Clone> EValue for UniversalInference<F> {
    fn log_value(&self, x: f64) -> f64 {
        let lq = self.atoms.log_density(&self.family, x);
        if lq == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let sup = self
            .null_grid
            .iter()
            .map(|&mu| self.family.log_density(mu, x))
            .fold(f64::NEG_INFINITY, f64::max);
        lq - sup
    }
}

/// Null grid for an interval-complement null `(-inf, Δ⁻] ∪ [Δ⁺, inf)`,
/// truncated [`NULL_TRUNCATION_SE`] standard errors beyond each boundary.
/// Both boundaries are always included; `points` is split between the two
/// pieces. For one-sided margins only the upper piece is used.
pub fn default_null_grid(margins: MarginPair, standard_error: f64, points: usize) -> Result<Vec<f64>> {
    margins.validate()?;
    if !(standard_error > 0.0 && standard_error.is_finite()) {
        return Err(Error::param("standard error must be positive"));
    }
    if points < 2 {
        return Err(Error::param("null grid needs at least two points"));
    }
    let span = NULL_TRUNCATION_SE * standard_error;
    let piece = |from: f64, to: f64, k: usize| -> Vec<f64> {
        if k == 1 {
            return vec![from];
        }
        (0..k)
            .map(|i| if i + 1 == k { to } else { from + (to - from) * i as f64 / (k - 1) as f64 })
            .collect()
    };
    if margins.is_one_sided() {
        return Ok(piece(margins.upper, margins.upper + span, points));
    }
    let left = points / 2;
    let mut grid = piece(margins.lower - span, margins.lower, left);
    grid.extend(piece(margins.upper, margins.upper + span, points - left));
    Ok(grid)
}

/// TOST-E for the mean of Gaussian data with unknown variance, with margins
/// on the mean scale. Each side uses its one-sided t statistic
/// `T_L = sqrt(n)(x̄ − Δ⁻)/s`, `T_R = sqrt(n)(Δ⁺ − x̄)/s` and the likelihood
/// ratio of a noncentral t (noncentrality `ncp > 0`) to the central t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanScaleTTost {
    pub n: usize,
    pub margins: MarginPair,
    pub ncp: f64,
}

/// Default noncentrality of the one-sided alternatives.
pub const DEFAULT_ONE_SIDED_NCP: f64 = 1.0;

impl MeanScaleTTost {
    pub fn new(n: usize, margins: MarginPair, ncp: f64) -> Result<Self> {
        margins.validate()?;
        if n < 2 {
            return Err(Error::param("the t statistic needs n >= 2"));
        }
        if !(ncp > 0.0 && ncp.is_finite()) {
            return Err(Error::param(format!("one-sided noncentrality {ncp} must be positive")));
        }
        Ok(Self { n, margins, ncp })
    }

    fn log_ratio(&self, t: f64) -> f64 {
        let dof = (self.n - 1) as f64;
        let alt = DistSpec::NoncentralT { dof, ncp: self.ncp };
        let null = DistSpec::NoncentralT { dof, ncp: 0.0 };
        alt.log_pdf_unchecked(t) - null.log_pdf_unchecked(t)
    }

    /// `ln ε` from the sample mean and standard deviation.
    pub fn log_value_from_summary(&self, mean: f64, sd: f64) -> Result<f64> {
        if !(sd > 0.0) {
            return Err(Error::DegenerateSample("sample standard deviation is zero".into()));
        }
        let root_n = (self.n as f64).sqrt();
        let right = self.log_ratio(root_n * (self.margins.upper - mean) / sd);
        if self.margins.is_one_sided() {
            return Ok(right);
        }
        let left = self.log_ratio(root_n * (mean - self.margins.lower) / sd);
        Ok(left.min(right))
    }

    pub fn log_value_from_sample(&self, sample: &[f64]) -> Result<f64> {
        if sample.len() != self.n {
            return Err(Error::param(format!("expected {} observations, got {}", self.n, sample.len())));
        }
        let n = sample.len() as f64;
        let mean = sample.iter().sum::<f64>() / n;
        let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        self.log_value_from_summary(mean, var.sqrt())
    }
}

/// Default UI null grid for a parametric model.
pub fn model_null_grid(model: &ParametricModel, margins: MarginPair, points: usize) -> Result<Vec<f64>> {
    let se = match model.label {
        ModelLabel::ZTest { .. } => model.standard_error(),
        _ => 1.0 / (model.n() as f64).sqrt(),
    };
    default_null_grid(margins, se, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::normal_log_pdf;

    fn z() -> ParametricModel {
        ParametricModel::z_test(1.0, 40).unwrap()
    }

    #[test]
    fn closed_form_at_zero() {
        let margins = MarginPair::new(-0.6, 0.4).unwrap();
        let t = TostE::log(z(), margins, &MixtureAlternative::Dirac { point: 0.0 }).unwrap();
        let v: f64 = 1.0 / 40.0;
        let phi = |x: f64| normal_log_pdf(x, 0.0, v);
        let expected = (phi(0.0) - phi(0.6).max(phi(0.4))).exp();
        assert!((t.value(0.0) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn equal_boundary_densities() {
        let margins = MarginPair::new(-0.6, 0.4).unwrap();
        let t = TostE::log(z(), margins, &MixtureAlternative::Dirac { point: 0.0 }).unwrap();
        // p_{-0.6} = p_{0.4} at the midpoint -0.1.
        let x = -0.1;
        assert!((t.log_lower(x) - t.log_upper(x)).abs() < 1e-12);
        assert_eq!(t.log_value(x), t.log_upper(x).min(t.log_lower(x)));
    }

    #[test]
    fn ui_with_boundary_grid_matches_tost() {
        let margins = MarginPair::new(-0.6, 0.4).unwrap();
        let alt = MixtureAlternative::Dirac { point: 0.1 };
        let t = TostE::log(z(), margins, &alt).unwrap();
        let ui = UniversalInference::new(z(), &alt, vec![-0.6, 0.4]).unwrap();
        for i in 0..100 {
            let x = -1.0 + 0.02 * i as f64;
            assert!((t.log_value(x) - ui.log_value(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn ui_far_right_uses_sup_at_statistic() {
        let margins = MarginPair::new(-0.6, 0.4).unwrap();
        let alt = MixtureAlternative::Dirac { point: 0.0 };
        let grid = default_null_grid(margins, z().standard_error(), 50).unwrap();
        assert!(grid.contains(&-0.6) && grid.contains(&0.4));
        let x = grid[40];
        let ui = UniversalInference::new(z(), &alt, grid).unwrap();
        let v = z().standard_error().powi(2);
        let expected = normal_log_pdf(x, 0.0, v) - normal_log_pdf(0.0, 0.0, v);
        assert!((ui.log_value(x) - expected).abs() < 1e-12);
    }

    #[test]
    fn calibrated_power_tost_has_unit_boundaries() {
        let margins = MarginPair::new(-0.6, 0.4).unwrap();
        let t = TostE::calibrated(z(), margins, &MixtureAlternative::Dirac { point: 0.0 }, UtilitySpec::PowerFamily { rho: 0.5 }).unwrap();
        let f = |x: f64| t.log_upper(x);
        let e = z().expectation(0.4, &f, EXPECTATION_SETTINGS).unwrap().value;
        assert!((e - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mean_scale_t_tost_is_central_ratio() {
        let tost = MeanScaleTTost::new(10, MarginPair::symmetric(0.5).unwrap(), 1.0).unwrap();
        let v = tost.log_value_from_summary(0.0, 1.0).unwrap();
        let t = 10f64.sqrt() * 0.5;
        let alt = DistSpec::NoncentralT { dof: 9.0, ncp: 1.0 }.log_pdf(t).unwrap();
        let null = DistSpec::NoncentralT { dof: 9.0, ncp: 0.0 }.log_pdf(t).unwrap();
        assert!((v - (alt - null)).abs() < 1e-12);
        assert!(tost.log_value_from_summary(0.0, 0.0).is_err());
    }
}
