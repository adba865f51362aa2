//! One-parameter model families, mixture alternatives and margins.
//!
//! A [`Family`] is a kernel `(param, x) ↦ p_param(x)` on an ordered sample
//! space. [`ParametricModel`] covers the reduced statistics of the Gaussian
//! examples; the finite kernels used for total-positivity checks implement
//! the same trait in [`crate::optimal::stp`].

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::distributions::DistSpec;
use crate::error::{Error, Result};
use crate::numeric::gauss::gauss_legendre_on;
use crate::numeric::quadrature::{integrate_breaks, integrate_upper_tail, Integral, QuadSettings};
use crate::numeric::{log_sum_exp, quadrature};

/// Quadrature settings used for expectations of e-values.
pub const EXPECTATION_SETTINGS: QuadSettings = QuadSettings {
    abs_tol: 1e-13,
    rel_tol: 1e-12,
    max_intervals: 4000,
};

/// A one-parameter kernel of densities on an ordered sample space.
pub trait Family: Send + Sync {
    /// `ln p_param(x)`; `-inf` outside the support.
    fn log_density(&self, param: f64, x: f64) -> f64;

    /// `E_param[exp(log_f(X))]`, where `log_f` returns the log of a
    /// non-negative integrand (`-inf` for zero).
    fn expectation(&self, param: f64, log_f: &dyn Fn(f64) -> f64, settings: QuadSettings) -> Result<Integral>;

    /// Draw one statistic from `p_param`.
    fn sample(&self, param: f64, rng: &mut dyn RngCore) -> f64;

    /// Sorted statistic values covering the bulk of `p_param` for every
    /// `param` in `params`, used for pointwise comparisons and diagnostics.
    fn statistic_grid(&self, params: &[f64], points: usize) -> Vec<f64>;

    /// Closed parameter interval.
    fn parameter_space(&self) -> (f64, f64);
}

/// Which reduced statistic a [`ParametricModel`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelLabel {
    /// Sample mean of `n` Gaussian observations with known `sigma`; the
    /// parameter is the mean.
    ZTest { sigma: f64, n: usize },
    /// `sqrt(n) mean / sd`; the parameter is the effect size `mean / sigma`.
    TEffectSize { n: usize },
    /// Squared sample mean with `sigma = 1`; the parameter is `mean^2`.
    SymmetricZSquared { n: usize },
    /// `n mean^2 / sd^2`; the parameter is the squared effect size.
    SymmetricTSquaredF { n: usize },
}

/// A model family given by its label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParametricModel {
    pub label: ModelLabel,
}

impl ParametricModel {
    pub fn new(label: ModelLabel) -> Result<Self> {
        let model = Self { label };
        model.validate()?;
        Ok(model)
    }

    pub fn z_test(sigma: f64, n: usize) -> Result<Self> {
        Self::new(ModelLabel::ZTest { sigma, n })
    }

    pub fn validate(&self) -> Result<()> {
        match self.label {
            ModelLabel::ZTest { sigma, n } => {
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(Error::param(format!("sigma must be positive and finite, got {sigma}")));
                }
                if n == 0 {
                    return Err(Error::param("n must be at least 1"));
                }
            }
            ModelLabel::SymmetricZSquared { n } => {
                if n == 0 {
                    return Err(Error::param("n must be at least 1"));
                }
            }
            ModelLabel::TEffectSize { n } | ModelLabel::SymmetricTSquaredF { n } => {
                if n < 2 {
                    return Err(Error::param("t-based models need n >= 2"));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        match self.label {
            ModelLabel::ZTest { n, .. }
            | ModelLabel::TEffectSize { n }
            | ModelLabel::SymmetricZSquared { n }
            | ModelLabel::SymmetricTSquaredF { n } => n,
        }
    }

    /// The same family at a different sample size.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        let label = match self.label {
            ModelLabel::ZTest { sigma, .. } => ModelLabel::ZTest { sigma, n },
            ModelLabel::TEffectSize { .. } => ModelLabel::TEffectSize { n },
            ModelLabel::SymmetricZSquared { .. } => ModelLabel::SymmetricZSquared { n },
            ModelLabel::SymmetricTSquaredF { .. } => ModelLabel::SymmetricTSquaredF { n },
        };
        Self::new(label)
    }

    /// Law of the statistic under `param`.
    pub fn dist(&self, param: f64) -> DistSpec {
        let nf = self.n() as f64;
        match self.label {
            ModelLabel::ZTest { sigma, n } => DistSpec::Normal {
                mean: param,
                variance: sigma * sigma / n as f64,
            },
            ModelLabel::TEffectSize { .. } => DistSpec::NoncentralT {
                dof: nf - 1.0,
                ncp: nf.sqrt() * param,
            },
            ModelLabel::SymmetricZSquared { .. } => DistSpec::ScaledNoncentralChiSq1 {
                scale: 1.0 / nf,
                ncp: nf * param,
            },
            ModelLabel::SymmetricTSquaredF { .. } => DistSpec::NoncentralF {
                dof1: 1.0,
                dof2: nf - 1.0,
                ncp: nf * param,
            },
        }
    }

    /// Closed support of the statistic.
    pub fn support(&self) -> (f64, f64) {
        self.dist(0.0).support()
    }

    /// Standard error of the mean-type statistic (z-test only; 1 otherwise).
    pub fn standard_error(&self) -> f64 {
        match self.label {
            ModelLabel::ZTest { sigma, n } => sigma / (n as f64).sqrt(),
            _ => 1.0,
        }
    }

    /// Checked log density.
    pub fn log_pdf(&self, param: f64, x: f64) -> Result<f64> {
        self.check_param(param)?;
        self.dist(param).log_pdf(x)
    }

    fn check_param(&self, param: f64) -> Result<()> {
        let (lo, hi) = self.parameter_space();
        if !param.is_finite() || param < lo || param > hi {
            return Err(Error::param(format!("parameter {param} outside [{lo}, {hi}]")));
        }
        Ok(())
    }

    /// `ln q(x)` for the mixture alternative.
    pub fn mixture_log_density(&self, alt: &MixtureAlternative, x: f64) -> Result<f64> {
        let atoms = alt.atoms()?;
        Ok(atoms.log_density(self, x))
    }

    /// The reduced statistic of a raw sample.
    pub fn sufficient_statistic(&self, sample: &[f64]) -> Result<f64> {
        if sample.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("sample contains non-finite values"));
        }
        let n = sample.len();
        let needs_sd = matches!(self.label, ModelLabel::TEffectSize { .. } | ModelLabel::SymmetricTSquaredF { .. });
        if n < 1 || (needs_sd && n < 2) {
            return Err(Error::param(format!("sample of length {n} is too short")));
        }
        let nf = n as f64;
        let mean = sample.iter().sum::<f64>() / nf;
        let sd = || -> Result<f64> {
            let ss: f64 = sample.iter().map(|v| (v - mean) * (v - mean)).sum();
            let sd = (ss / (nf - 1.0)).sqrt();
            if sd == 0.0 {
                return Err(Error::DegenerateSample("sample variance is zero".into()));
            }
            Ok(sd)
        };
        Ok(match self.label {
            ModelLabel::ZTest { .. } => mean,
            ModelLabel::TEffectSize { .. } => nf.sqrt() * mean / sd()?,
            ModelLabel::SymmetricZSquared { .. } => mean * mean,
            ModelLabel::SymmetricTSquaredF { .. } => {
                let s = sd()?;
                nf * mean * mean / (s * s)
            }
        })
    }
}

impl Family for ParametricModel {
    fn log_density(&self, param: f64, x: f64) -> f64 {
        self.dist(param).log_pdf_unchecked(x)
    }

    fn expectation(&self, param: f64, log_f: &dyn Fn(f64) -> f64, settings: QuadSettings) -> Result<Integral> {
        self.check_param(param)?;
        let nf = self.n() as f64;
        match self.label {
            ModelLabel::ZTest { sigma, n } => {
                // Standardize: x = param + se * z, z ~ N(0, 1).
                let se = sigma / (n as f64).sqrt();
                let integrand = |z: f64| {
                    let v = log_f(param + se * z) - 0.5 * z * z - LN_SQRT_2PI;
                    v.exp()
                };
                let breaks: Vec<f64> = (0..=16).map(|i| -40.0 + 5.0 * i as f64).collect();
                integrate_breaks(integrand, &breaks, settings)
            }
            ModelLabel::TEffectSize { .. } => {
                let dist = self.dist(param);
                let center = nf.sqrt() * param;
                quadrature::integrate_real_line(
                    |x| (log_f(x) + dist.log_pdf_unchecked(x)).exp(),
                    center,
                    1.0,
                    40.0,
                    32,
                    settings,
                )
            }
            ModelLabel::SymmetricZSquared { .. } | ModelLabel::SymmetricTSquaredF { .. } => {
                // Integrate over u = sqrt(x), which removes the x^(-1/2)
                // singularity at the origin: dx = 2u du.
                let dist = self.dist(param);
                let (center, spread) = match self.label {
                    ModelLabel::SymmetricZSquared { .. } => (param.sqrt(), 1.0 / nf.sqrt()),
                    _ => ((nf * param).sqrt(), 1.0),
                };
                let integrand = |u: f64| {
                    if u <= 0.0 {
                        return 0.0;
                    }
                    let x = u * u;
                    let v = (log_f(x) + dist.log_pdf_unchecked(x) + (2.0 * u).ln()).exp();
                    if v.is_nan() {
                        0.0
                    } else {
                        v
                    }
                };
                let top = center + 40.0 * spread;
                let panels = 24;
                let breaks: Vec<f64> = (0..=panels).map(|i| top * i as f64 / panels as f64).collect();
                let body = integrate_breaks(integrand, &breaks, settings)?;
                if matches!(self.label, ModelLabel::SymmetricZSquared { .. }) {
                    return Ok(body);
                }
                let tail = integrate_upper_tail(
                    integrand,
                    top,
                    QuadSettings {
                        abs_tol: settings.abs_tol * 0.1,
                        ..settings
                    },
                )?;
                Ok(Integral {
                    value: body.value + tail.value,
                    abs_error: body.abs_error + tail.abs_error,
                    evaluations: body.evaluations + tail.evaluations,
                })
            }
        }
    }

    fn sample(&self, param: f64, rng: &mut dyn RngCore) -> f64 {
        let nf = self.n() as f64;
        let mut normal = || -> f64 { StandardNormal.sample(rng) };
        match self.label {
            ModelLabel::ZTest { sigma, n } => param + sigma / (n as f64).sqrt() * normal(),
            ModelLabel::SymmetricZSquared { .. } => {
                let m = param.sqrt() + normal() / nf.sqrt();
                m * m
            }
            ModelLabel::TEffectSize { .. } | ModelLabel::SymmetricTSquaredF { .. } => {
                let shift = match self.label {
                    ModelLabel::TEffectSize { .. } => nf.sqrt() * param,
                    _ => (nf * param).sqrt(),
                };
                let z = normal() + shift;
                let dof = self.n() - 1;
                let v: f64 = (0..dof).map(|_| normal().powi(2)).sum();
                let t = z / (v / dof as f64).sqrt();
                if matches!(self.label, ModelLabel::TEffectSize { .. }) {
                    t
                } else {
                    t * t
                }
            }
        }
    }

    fn statistic_grid(&self, params: &[f64], points: usize) -> Vec<f64> {
        let points = points.max(2);
        let nf = self.n() as f64;
        let (lo, hi) = match self.label {
            ModelLabel::ZTest { .. } => {
                let se = self.standard_error();
                let lo = params.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = params.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo - 8.0 * se, hi + 8.0 * se)
            }
            ModelLabel::TEffectSize { .. } => {
                let lo = params.iter().copied().fold(f64::INFINITY, f64::min) * nf.sqrt();
                let hi = params.iter().copied().fold(f64::NEG_INFINITY, f64::max) * nf.sqrt();
                (lo - 10.0, hi + 10.0)
            }
            ModelLabel::SymmetricZSquared { .. } => {
                let hi = params.iter().copied().fold(0.0, f64::max).sqrt() + 8.0 / nf.sqrt();
                (0.0, hi * hi)
            }
            ModelLabel::SymmetricTSquaredF { .. } => {
                let hi = (nf * params.iter().copied().fold(0.0, f64::max)).sqrt() + 10.0;
                (0.0, hi * hi)
            }
        };
        let first = if lo == 0.0 { 1 } else { 0 };
        (first..points + first)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1 + first) as f64)
            .collect()
    }

    fn parameter_space(&self) -> (f64, f64) {
        match self.label {
            ModelLabel::ZTest { .. } | ModelLabel::TEffectSize { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            ModelLabel::SymmetricZSquared { .. } | ModelLabel::SymmetricTSquaredF { .. } => (0.0, f64::INFINITY),
        }
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Default Gauss–Legendre order for uniform mixtures.
pub const UNIFORM_ORDER: usize = 64;

/// The mixing measure `w` of a composite alternative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixtureAlternative {
    Dirac { point: f64 },
    UniformInterval { lower: f64, upper: f64 },
    DiscreteWeights { points: Vec<f64>, weights: Vec<f64> },
}

/// A finite mixture: support points with log weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Atoms {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    log_weights: Vec<f64>,
}

impl Atoms {
    /// `ln sum_k w_k p_{mu_k}(x)`.
    pub fn log_density<F: Family + ?Sized>(&self, family: &F, x: f64) -> f64 {
        if self.points.len() == 1 {
            return family.log_density(self.points[0], x);
        }
        let terms: Vec<f64> = self
            .points
            .iter()
            .zip(&self.log_weights)
            .map(|(&mu, &lw)| lw + family.log_density(mu, x))
            .collect();
        log_sum_exp(&terms)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl MixtureAlternative {
    pub fn validate(&self) -> Result<()> {
        self.atoms().map(|_| ())
    }

    /// The mixture as finitely many atoms; uniform intervals are discretized
    /// with [`UNIFORM_ORDER`] Gauss–Legendre nodes.
    pub fn atoms(&self) -> Result<Atoms> {
        self.atoms_with_order(UNIFORM_ORDER)
    }

    pub fn atoms_with_order(&self, order: usize) -> Result<Atoms> {
        let (points, weights) = match self {
            MixtureAlternative::Dirac { point } => (vec![*point], vec![1.0]),
            MixtureAlternative::UniformInterval { lower, upper } => {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return Err(Error::param(format!("invalid uniform interval ({lower}, {upper})")));
                }
                let (x, w) = gauss_legendre_on(order, *lower, *upper);
                let width = upper - lower;
                (x, w.into_iter().map(|v| v / width).collect())
            }
            MixtureAlternative::DiscreteWeights { points, weights } => {
                if points.is_empty() {
                    return Err(Error::param("mixture has no support points"));
                }
                if points.len() != weights.len() {
                    return Err(Error::param("mixture points and weights differ in length"));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(Error::param("mixture weights must be non-negative"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::param(format!("mixture weights sum to {total}, not 1")));
                }
                (points.clone(), weights.clone())
            }
        };
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::param("mixture support points must be finite"));
        }
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Atoms {
            points,
            weights,
            log_weights,
        })
    }

    /// Check every support point lies strictly inside the margins.
    pub fn check_inside(&self, margins: &MarginPair) -> Result<()> {
        let inside = |p: f64| p > margins.lower && p < margins.upper;
        let ok = match self {
            MixtureAlternative::UniformInterval { lower, upper } => {
                *lower >= margins.lower && *upper <= margins.upper && lower < upper
            }
            _ => self.atoms()?.points.iter().all(|&p| inside(p)),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!(
                "alternative support must lie inside ({}, {})",
                margins.lower, margins.upper
            )))
        }
    }
}

/// A pair of equivalence margins `lower < upper`. `lower = -inf` encodes a
/// one-sided problem with null `param >= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginPair {
    #[serde(with = "crate::curves::serde_f64")]
    pub lower: f64,
    pub upper: f64,
}

impl MarginPair {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        let m = Self { lower, upper };
        m.validate()?;
        Ok(m)
    }

    /// Symmetric margins `(-delta, delta)`.
    pub fn symmetric(delta: f64) -> Result<Self> {
        Self::new(-delta, delta)
    }

    /// One-sided margin: null `param >= upper`.
    pub fn one_sided(upper: f64) -> Result<Self> {
        Self::new(f64::NEG_INFINITY, upper)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.is_nan() || self.lower == f64::INFINITY || !self.upper.is_finite() {
            return Err(Error::param(format!("invalid margins ({}, {})", self.lower, self.upper)));
        }
        if self.lower >= self.upper {
            return Err(Error::param(format!(
                "lower margin {} must be below upper margin {}",
                self.lower, self.upper
            )));
        }
        Ok(())
    }

    pub fn is_one_sided(&self) -> bool {
        self.lower == f64::NEG_INFINITY
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn dirac_collapse_is_exact() {
        let model = ParametricModel::z_test(1.0, 40).unwrap();
        let alt = MixtureAlternative::Dirac { point: 0.0 };
        for i in 0..200 {
            let x = -1.0 + 0.01 * i as f64;
            assert_eq!(model.mixture_log_density(&alt, x).unwrap(), model.log_density(0.0, x));
        }
        let v = model.mixture_log_density(&alt, 0.05).unwrap();
        let expected = -0.5 * (2.0 * std::f64::consts::PI / 40.0).ln() - 0.5 * 0.05 * 0.05 * 40.0;
        assert!((v - expected).abs() < 1e-14);
    }

    #[test]
    fn uniform_mixture_matches_quadrature() {
        let model = ParametricModel::z_test(1.0, 40).unwrap();
        let alt = MixtureAlternative::UniformInterval { lower: -0.5, upper: 0.5 };
        let got = model.mixture_log_density(&alt, 0.0).unwrap().exp();
        // ∫ phi_v(mu) dmu / 1 over (-0.5, 0.5) = 2 Phi(0.5 sqrt(40)) - 1.
        let z = 0.5 * 40f64.sqrt();
        let exact = 2.0 * crate::distributions::normal_cdf(z) - 1.0;
        assert!(((got - exact) / exact).abs() < 1e-9, "{got} vs {exact}");
    }

    #[test]
    fn discrete_dirac_for_t_effect_size() {
        let model = ParametricModel::new(ModelLabel::TEffectSize { n: 20 }).unwrap();
        let alt = MixtureAlternative::DiscreteWeights {
            points: vec![0.0],
            weights: vec![1.0],
        };
        let got = model.mixture_log_density(&alt, 0.3).unwrap();
        let central = DistSpec::NoncentralT { dof: 19.0, ncp: 0.0 }.log_pdf(0.3).unwrap();
        assert_eq!(got, central);
    }

    #[test]
    fn empty_mixture_rejected() {
        let alt = MixtureAlternative::DiscreteWeights {
            points: vec![],
            weights: vec![],
        };
        assert!(matches!(alt.atoms(), Err(Error::Parameter(_))));
        let bad = MixtureAlternative::DiscreteWeights {
            points: vec![0.0, 0.1],
            weights: vec![0.5, 0.6],
        };
        assert!(bad.atoms().is_err());
    }

    #[test]
    fn sufficient_statistics() {
        let z = ParametricModel::z_test(1.0, 2).unwrap();
        assert_eq!(z.sufficient_statistic(&[0.1, -0.1]).unwrap(), 0.0);
        let sq = ParametricModel::new(ModelLabel::SymmetricZSquared { n: 2 }).unwrap();
        assert!((sq.sufficient_statistic(&[0.3, 0.5]).unwrap() - 0.16).abs() < 1e-15);
        let t = ParametricModel::new(ModelLabel::TEffectSize { n: 3 }).unwrap();
        assert!((t.sufficient_statistic(&[1.0, 2.0, 3.0]).unwrap() - 3f64.sqrt() * 2.0).abs() < 1e-14);
        assert!(matches!(
            t.sufficient_statistic(&[1.0, 1.0, 1.0]),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn symmetric_statistics_are_sign_invariant() {
        let sample = [0.3, -1.2, 0.8, 2.1, 0.05];
        let flipped: Vec<f64> = sample.iter().map(|v| -v).collect();
        for label in [ModelLabel::SymmetricZSquared { n: 5 }, ModelLabel::SymmetricTSquaredF { n: 5 }] {
            let m = ParametricModel::new(label).unwrap();
            assert_eq!(m.sufficient_statistic(&sample).unwrap(), m.sufficient_statistic(&flipped).unwrap());
        }
    }

    #[test]
    fn cross_module_density_consistency() {
        let n = 12;
        let sq = ParametricModel::new(ModelLabel::SymmetricZSquared { n }).unwrap();
        let f = ParametricModel::new(ModelLabel::SymmetricTSquaredF { n }).unwrap();
        for &a in &[0.0, 0.04, 0.25] {
            for &x in &[0.01, 0.3, 1.7] {
                let direct = DistSpec::ScaledNoncentralChiSq1 {
                    scale: 1.0 / n as f64,
                    ncp: n as f64 * a,
                }
                .log_pdf(x)
                .unwrap();
                assert!((sq.log_pdf(a, x).unwrap() - direct).abs() < 1e-10);
                let direct = DistSpec::NoncentralF {
                    dof1: 1.0,
                    dof2: (n - 1) as f64,
                    ncp: n as f64 * a,
                }
                .log_pdf(x)
                .unwrap();
                assert!((f.log_pdf(a, x).unwrap() - direct).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn expectations_of_one_are_one() {
        let models = [
            (ParametricModel::z_test(1.0, 40).unwrap(), vec![-0.6, -0.1, 0.0, 0.4, 2.0]),
            (ParametricModel::z_test(2.5, 3).unwrap(), vec![-3.0, 0.0, 0.5, 1.0, 7.0]),
            (ParametricModel::new(ModelLabel::TEffectSize { n: 20 }).unwrap(), vec![-0.5, 0.0, 0.2, 0.5, 1.0]),
            (ParametricModel::new(ModelLabel::TEffectSize { n: 4 }).unwrap(), vec![-1.0, 0.0, 0.2, 0.5, 1.0]),
            (ParametricModel::new(ModelLabel::SymmetricZSquared { n: 10 }).unwrap(), vec![0.0, 0.01, 0.1, 0.25, 1.0]),
            (ParametricModel::new(ModelLabel::SymmetricTSquaredF { n: 10 }).unwrap(), vec![0.0, 0.01, 0.1, 0.25, 1.0]),
            (ParametricModel::new(ModelLabel::SymmetricTSquaredF { n: 3 }).unwrap(), vec![0.0, 0.01, 0.1, 0.25, 1.0]),
        ];
        for (model, params) in models {
            for mu in params {
                let e = model.expectation(mu, &|_| 0.0, EXPECTATION_SETTINGS).unwrap();
                assert!((e.value - 1.0).abs() < 1e-8, "{model:?} at {mu}: {}", e.value);
            }
        }
    }

    #[test]
    fn mean_of_statistic() {
        let model = ParametricModel::z_test(1.0, 40).unwrap();
        let e = model.expectation(0.3, &|x: f64| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY }, EXPECTATION_SETTINGS);
        // E[X^+] for N(0.3, 1/40).
        let s = (1.0f64 / 40.0).sqrt();
        let z = 0.3 / s;
        let expected = 0.3 * crate::distributions::normal_cdf(z) + s * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((e.unwrap().value - expected).abs() < 1e-12);
    }

    #[test]
    fn mlr_on_grids() {
        for model in [
            ParametricModel::z_test(1.0, 10).unwrap(),
            ParametricModel::new(ModelLabel::TEffectSize { n: 10 }).unwrap(),
        ] {
            let params = [-0.5, -0.1, 0.2, 0.6];
            let grid = model.statistic_grid(&params, 300);
            for w in params.windows(2) {
                let mut prev = f64::NEG_INFINITY;
                for &x in &grid {
                    let r = model.log_density(w[1], x) - model.log_density(w[0], x);
                    assert!(r >= prev - 1e-9, "{model:?} {w:?} at {x}");
                    prev = r;
                }
            }
        }
    }

    #[test]
    fn sampling_matches_model_moments() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let model = ParametricModel::new(ModelLabel::SymmetricTSquaredF { n: 8 }).unwrap();
        let draws = 200_000;
        let a = 0.2;
        let below: usize = (0..draws).filter(|_| model.sample(a, &mut rng) <= 1.5).count();
        let p_hat = below as f64 / draws as f64;
        let p = model.dist(a).cdf(1.5).unwrap();
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((p - p_hat).abs() < 4.0 * se, "{p} vs {p_hat}");
    }

    #[test]
    fn margins() {
        assert!(MarginPair::new(0.4, -0.6).is_err());
        assert!(MarginPair::new(0.0, f64::INFINITY).is_err());
        let m = MarginPair::one_sided(0.4).unwrap();
        assert!(m.is_one_sided());
        let alt = MixtureAlternative::Dirac { point: 0.4 };
        assert!(alt.check_inside(&MarginPair::symmetric(0.4).unwrap()).is_err());
        assert!(alt.check_inside(&MarginPair::symmetric(0.5).unwrap()).is_ok());
    }
}
