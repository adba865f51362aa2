//! E-processes built from conditional e-values or from full-sample
//! statistics, Ville stopping, and the Monte Carlo campaign harness.

pub mod campaign;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Family, MarginPair, MixtureAlternative, ModelLabel, ParametricModel};
use crate::numeric::log_sum_exp;
use crate::optimal::boundary::{calibrate_log, BoundaryMixtureEValue};
use crate::optimal::EValue;

pub use campaign::{run_campaign, CampaignResults, CampaignRow, SimCampaign, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// Running product of conditional e-values.
    Product,
    /// Ratio of full-sample statistic densities at each time.
    StatisticRatio,
    /// Pointwise minimum of two processes.
    Min,
    /// Pointwise minimum over a family of processes.
    EssInf,
}

/// `ε¹, …, ε^T`; `ε⁰ = 1` is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EProcess {
    pub construction: Construction,
    #[serde(with = "crate::curves::serde_f64_vec")]
    pub values: Vec<f64>,
    /// Times at which a null density vanished and the value became `+inf`.
    pub infinite_at: Vec<usize>,
}

impl EProcess {
    /// Running product of the conditional e-values `increments`.
    pub fn product(increments: &[f64]) -> Result<Self> {
        let logs: Vec<f64> = increments.iter().map(|v| v.ln()).collect();
        if increments.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::param("conditional e-values must be non-negative"));
        }
        Ok(Self::product_of_logs(&logs))
    }

    /// Running product from `ln ε_s`.
    pub fn product_of_logs(log_increments: &[f64]) -> Self {
        let mut acc = 0.0f64;
        let mut infinite_at = Vec::new();
        let values = log_increments
            .iter()
            .enumerate()
            .map(|(t, &l)| {
                if l == f64::INFINITY && infinite_at.is_empty() {
                    infinite_at.push(t + 1);
                }
                // Once zero, the product stays zero.
                if acc != f64::NEG_INFINITY {
                    acc = if l == f64::NEG_INFINITY { l } else { acc + l };
                }
                acc.exp()
            })
            .collect();
        Self {
            construction: Construction::Product,
            values,
            infinite_at,
        }
    }

    pub fn statistic_ratio(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::param("e-process values must be non-negative"));
        }
        let infinite_at = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_infinite())
            .map(|(t, _)| t + 1)
            .collect();
        Ok(Self {
            construction: Construction::StatisticRatio,
            values,
            infinite_at,
        })
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    /// `ε^t` for `t >= 0`.
    pub fn at(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.values[t - 1]
        }
    }
}

fn log_increment<F: Family + ?Sized>(family: &F, atoms: &crate::models::Atoms, null: f64, x: f64) -> f64 {
    let lq = atoms.log_density(family, x);
    if lq == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    lq - family.log_density(null, x)
}

/// `∏_{s<=t} q(x_s) / p_Δ(x_s)` for independent observations with
/// single-observation family `family`.
pub fn one_sided_lr_process<F: Family + ?Sized>(
    family: &F,
    delta: f64,
    alternative: &MixtureAlternative,
    observations: &[f64],
) -> Result<EProcess> {
    let atoms = alternative.atoms()?;
    let logs: Vec<f64> = observations.iter().map(|&x| log_increment(family, &atoms, delta, x)).collect();
    Ok(EProcess::product_of_logs(&logs))
}

/// Default mixture over `a = μ²` for the symmetric processes: 16 equally
/// weighted points `a_k = Δ_S² k / 16`, `k = 0..15`.
pub fn default_symmetric_mixture(delta_s: f64) -> MixtureAlternative {
    let k = 16;
    MixtureAlternative::DiscreteWeights {
        points: (0..k).map(|i| delta_s * delta_s * i as f64 / k as f64).collect(),
        weights: vec![1.0 / k as f64; k],
    }
}

fn check_symmetric_mixture(delta_s: f64, alternative: &MixtureAlternative) -> Result<crate::models::Atoms> {
    if !(delta_s > 0.0 && delta_s.is_finite()) {
        return Err(Error::param(format!("symmetric margin {delta_s} must be positive")));
    }
    let atoms = alternative.atoms()?;
    let top = delta_s * delta_s;
    if atoms.points.iter().any(|&a| !(a >= 0.0 && a <= top)) {
        return Err(Error::param(format!("symmetric mixture points must lie in [0, {top}]")));
    }
    Ok(atoms)
}

/// `q_n(x̄_n²) / p_{n,Δ_S²}(x̄_n²)` for unit-variance Gaussian observations.
pub fn symmetric_z_process(observations: &[f64], delta_s: f64, alternative: &MixtureAlternative) -> Result<EProcess> {
    let atoms = check_symmetric_mixture(delta_s, alternative)?;
    let mut sum = 0.0;
    let mut values = Vec::with_capacity(observations.len());
    for (i, &x) in observations.iter().enumerate() {
        let n = i + 1;
        sum += x;
        let t = (sum / n as f64).powi(2);
        let model = ParametricModel::new(ModelLabel::SymmetricZSquared { n })?;
        values.push(log_increment(&model, &atoms, delta_s * delta_s, t).exp());
    }
    EProcess::statistic_ratio(values)
}

/// Running mean and unbiased variance.
#[derive(Debug, Clone, Copy, Default)]
struct Running {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn variance(&self) -> f64 {
        self.m2 / (self.n - 1) as f64
    }
}

/// `q_n(T_n²) / p^F_{n,Δ_S²}(T_n²)` with `T_n² = n x̄²/s²`; the effect-size
/// margin is `Δ_S`. At `n = 1` the statistic is undefined and `ε¹ = 1`.
pub fn symmetric_t_process(observations: &[f64], delta_s: f64, alternative: &MixtureAlternative) -> Result<EProcess> {
    let atoms = check_symmetric_mixture(delta_s, alternative)?;
    let mut run = Running::default();
    let mut values = Vec::with_capacity(observations.len());
    for &x in observations {
        run.push(x);
        if run.n < 2 {
            values.push(1.0);
            continue;
        }
        let var = run.variance();
        if !(var > 0.0) {
            return Err(Error::DegenerateSample(format!("zero sample variance at n = {}", run.n)));
        }
        let f = run.n as f64 * run.mean * run.mean / var;
        let model = ParametricModel::new(ModelLabel::SymmetricTSquaredF { n: run.n })?;
        values.push(log_increment(&model, &atoms, delta_s * delta_s, f).exp());
    }
    EProcess::statistic_ratio(values)
}

/// Sequential TOST-E on the effect-size scale with symmetric margins `±Δ_S`:
/// `min(q_T(T_n)/f_{-Δ_S}(T_n), q_T(T_n)/f_{Δ_S}(T_n))` with
/// `T_n = sqrt(n) x̄/s`, where `q_T` spreads each mixture weight on `a` evenly
/// over `δ = ±sqrt(a)`. At `n = 1`, `ε¹ = 1`.
pub fn symmetric_t_tost_process(observations: &[f64], delta_s: f64, alternative: &MixtureAlternative) -> Result<EProcess> {
    let atoms = check_symmetric_mixture(delta_s, alternative)?;
    let mut run = Running::default();
    let mut left = Vec::with_capacity(observations.len());
    let mut right = Vec::with_capacity(observations.len());
    for &x in observations {
        run.push(x);
        if run.n < 2 {
            left.push(1.0);
            right.push(1.0);
            continue;
        }
        let var = run.variance();
        if !(var > 0.0) {
            return Err(Error::DegenerateSample(format!("zero sample variance at n = {}", run.n)));
        }
        let t = (run.n as f64).sqrt() * run.mean / var.sqrt();
        let model = ParametricModel::new(ModelLabel::TEffectSize { n: run.n })?;
        let terms: Vec<f64> = atoms
            .points
            .iter()
            .zip(&atoms.weights)
            .flat_map(|(&a, &w)| {
                let d = a.sqrt();
                let lw = (0.5 * w).ln();
                [lw + model.log_density(d, t), lw + model.log_density(-d, t)]
            })
            .collect();
        let lq = log_sum_exp(&terms);
        left.push((lq - model.log_density(-delta_s, t)).exp());
        right.push((lq - model.log_density(delta_s, t)).exp());
    }
    sequential_tost(&EProcess::statistic_ratio(left)?, &EProcess::statistic_ratio(right)?)
}

/// Pointwise minimum of two processes.
pub fn sequential_tost(left: &EProcess, right: &EProcess) -> Result<EProcess> {
    if left.horizon() != right.horizon() {
        return Err(Error::param(format!(
            "process horizons differ: {} and {}",
            left.horizon(),
            right.horizon()
        )));
    }
    let values: Vec<f64> = left.values.iter().zip(&right.values).map(|(a, b)| a.min(*b)).collect();
    let infinite_at = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_infinite())
        .map(|(t, _)| t + 1)
        .collect();
    Ok(EProcess {
        construction: Construction::Min,
        values,
        infinite_at,
    })
}

/// Running product of calibrated boundary-mixture increments
/// `q(x_s) / (c p_{Δ⁻}(x_s) + (1−c) p_{Δ⁺}(x_s))`; `c` is computed once
/// from the single-observation family.
pub fn product_of_numeraires<F: Family + Clone>(
    family: &F,
    margins: MarginPair,
    alternative: &MixtureAlternative,
    observations: &[f64],
) -> Result<EProcess> {
    let (ev, _) = calibrate_log(family, margins, alternative)?;
    Ok(numeraire_process(&ev, observations))
}

/// Product process from an already calibrated one-step e-value.
pub fn numeraire_process<F: Family + Clone>(ev: &BoundaryMixtureEValue<F>, observations: &[f64]) -> EProcess {
    let logs: Vec<f64> = observations.iter().map(|&x| ev.log_value(x)).collect();
    EProcess::product_of_logs(&logs)
}

/// Pointwise-in-time minimum over a family of processes.
pub fn sequential_ui(family: &[EProcess]) -> Result<EProcess> {
    let first = family
        .first()
        .ok_or_else(|| Error::param("sequential universal inference needs a non-empty null grid"))?;
    if family.iter().any(|p| p.horizon() != first.horizon()) {
        return Err(Error::param("process horizons differ"));
    }
    let values: Vec<f64> = (0..first.horizon())
        .map(|t| family.iter().map(|p| p.values[t]).fold(f64::INFINITY, f64::min))
        .collect();
    let infinite_at = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_infinite())
        .map(|(t, _)| t + 1)
        .collect();
    Ok(EProcess {
        construction: Construction::EssInf,
        values,
        infinite_at,
    })
}

/// Likelihood-ratio processes against each point of a null grid, combined
/// by [`sequential_ui`].
pub fn likelihood_ratio_ui<F: Family + ?Sized>(
    family: &F,
    alternative: &MixtureAlternative,
    null_grid: &[f64],
    observations: &[f64],
) -> Result<EProcess> {
    let processes = null_grid
        .iter()
        .map(|&mu| one_sided_lr_process(family, mu, alternative, observations))
        .collect::<Result<Vec<_>>>()?;
    sequential_ui(&processes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingReport {
    pub threshold: f64,
    /// First `t` with `ε^t >= 1/α`.
    pub hitting_time: Option<usize>,
    #[serde(with = "crate::curves::serde_f64")]
    pub value_at_hit: f64,
    #[serde(with = "crate::curves::serde_f64")]
    pub running_max: f64,
}

/// First crossing of `1/α`; `value_at_hit` is NaN when there is none.
pub fn ville_stop(process: &EProcess, alpha: f64) -> Result<StoppingReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("level {alpha} outside (0, 1)")));
    }
    let threshold = 1.0 / alpha;
    let hit = process.values.iter().position(|&v| v >= threshold);
    Ok(StoppingReport {
        threshold,
        hitting_time: hit.map(|t| t + 1),
        value_at_hit: hit.map_or(f64::NAN, |t| process.values[t]),
        running_max: process.values.iter().copied().fold(1.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ParametricModel {
        ParametricModel::z_test(1.0, 1).unwrap()
    }

    #[test]
    fn ville_examples() {
        let p = EProcess::statistic_ratio(vec![1.0, 2.0, 5.0, 3.0]).unwrap();
        let r = ville_stop(&p, 0.25).unwrap();
        assert_eq!(r.hitting_time, Some(3));
        assert_eq!(r.value_at_hit, 5.0);
        assert_eq!(r.running_max, 5.0);
        let flat = EProcess::statistic_ratio(vec![1.0; 10]).unwrap();
        assert_eq!(ville_stop(&flat, 0.5).unwrap().hitting_time, None);
    }

    #[test]
    fn lr_closed_form() {
        let p = one_sided_lr_process(&unit(), 0.4, &MixtureAlternative::Dirac { point: 0.0 }, &[0.0]).unwrap();
        assert!((p.values[0] - 0.08f64.exp()).abs() < 1e-14);
        let same = one_sided_lr_process(&unit(), 0.4, &MixtureAlternative::Dirac { point: 0.4 }, &[0.3, -1.0]).unwrap();
        assert_eq!(same.values, vec![1.0, 1.0]);
    }

    #[test]
    fn symmetric_null_ratio_is_one() {
        let obs = [0.3, -0.2, 0.5, 1.1];
        let alt = MixtureAlternative::Dirac { point: 0.25 };
        assert!(symmetric_z_process(&obs, 0.5, &alt).unwrap().values.iter().all(|v| *v == 1.0));
        assert!(symmetric_t_process(&obs, 0.5, &alt).unwrap().values.iter().all(|v| *v == 1.0));
        assert!(symmetric_z_process(&obs, 0.5, &MixtureAlternative::Dirac { point: 0.3 }).is_err());
        let p = symmetric_z_process(&obs, 0.5, &default_symmetric_mixture(0.5)).unwrap();
        assert!(p.values.iter().all(|v| *v > 0.0 && v.is_finite()));
    }

    #[test]
    fn symmetric_t_dominates_tost() {
        let obs = [0.3, -0.2, 0.5, 1.1, -0.7, 0.05, 0.2];
        let alt = default_symmetric_mixture(0.5);
        let s = symmetric_t_process(&obs, 0.5, &alt).unwrap();
        let t = symmetric_t_tost_process(&obs, 0.5, &alt).unwrap();
        for (a, b) in s.values.iter().zip(&t.values) {
            assert!(*a >= *b * (1.0 - 1e-10), "{a} < {b}");
        }
        assert!(symmetric_t_process(&[1.0, 1.0], 0.5, &alt).is_err());
    }

    #[test]
    fn tost_min_identities() {
        let a = EProcess::statistic_ratio(vec![1.0, 3.0]).unwrap();
        let inf = EProcess::statistic_ratio(vec![f64::INFINITY; 2]).unwrap();
        assert_eq!(sequential_tost(&a, &a).unwrap().values, a.values);
        assert_eq!(sequential_tost(&a, &inf).unwrap().values, a.values);
        assert!(sequential_tost(&a, &EProcess::statistic_ratio(vec![1.0]).unwrap()).is_err());
    }

    #[test]
    fn numeraire_symmetric_c_half() {
        let (ev, rep) = calibrate_log(&unit(), MarginPair::symmetric(0.5).unwrap(), &MixtureAlternative::Dirac { point: 0.0 }).unwrap();
        assert!((rep.c - 0.5).abs() < 1e-6);
        let p = numeraire_process(&ev, &[0.1, 0.2]);
        assert!((p.values[1] - ev.value(0.1) * ev.value(0.2)).abs() < 1e-12);
    }

    #[test]
    fn ui_two_point_equals_tost() {
        let obs = [0.1, -0.3, 0.25, 0.0];
        let alt = MixtureAlternative::Dirac { point: 0.0 };
        let m = unit();
        let ui = likelihood_ratio_ui(&m, &alt, &[-0.6, 0.4], &obs).unwrap();
        let l = one_sided_lr_process(&m, -0.6, &alt, &obs).unwrap();
        let r = one_sided_lr_process(&m, 0.4, &alt, &obs).unwrap();
        assert_eq!(ui.values, sequential_tost(&l, &r).unwrap().values);
        let finer = likelihood_ratio_ui(&m, &alt, &[-0.8, -0.6, 0.4, 0.5], &obs).unwrap();
        assert!(finer.values.iter().zip(&ui.values).all(|(a, b)| a <= b));
    }

    #[test]
    fn product_rejects_negative() {
        assert!(EProcess::product(&[1.0, -0.5]).is_err());
        let p = EProcess::product(&[2.0, 0.0, 5.0]).unwrap();
        assert_eq!(p.values, vec![2.0, 0.0, 0.0]);
    }
}
