//! Null expectations of an e-value over a grid of null parameters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EValue;
use crate::error::{Error, Result};
use crate::models::{Family, EXPECTATION_SETTINGS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepMethod {
    Quadrature,
    MonteCarlo { replications: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullExpectation {
    pub param: f64,
    pub expectation: f64,
    /// Quadrature error estimate, or the Monte Carlo standard error.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub max_expectation: f64,
    pub argmax: f64,
    pub points: Vec<NullExpectation>,
}

/// `max_{μ ∈ grid} E_μ[ε]`, computed in parallel over the grid.
pub fn validity_sweep<E, F>(ev: &E, family: &F, null_grid: &[f64], method: SweepMethod) -> Result<ValidityReport>
where
    E: EValue + ?Sized,
    F: Family + ?Sized,
{
    if null_grid.is_empty() {
        return Err(Error::param("validity sweep needs a non-empty null grid"));
    }
    if let SweepMethod::MonteCarlo { replications, .. } = method {
        if replications < 2 {
            return Err(Error::param("Monte Carlo sweep needs at least two replications"));
        }
    }
    let points: Vec<NullExpectation> = null_grid
        .par_iter()
        .enumerate()
        .map(|(k, &mu)| null_expectation(ev, family, mu, k as u64, method))
        .collect::<Result<_>>()?;
    let best = points
        .iter()
        .fold(None::<&NullExpectation>, |acc, p| match acc {
            Some(a) if a.expectation >= p.expectation => Some(a),
            _ => Some(p),
        })
        .expect("non-empty grid");
    Ok(ValidityReport {
        max_expectation: best.expectation,
        argmax: best.param,
        points,
    })
}

fn null_expectation<E, F>(ev: &E, family: &F, mu: f64, stream: u64, method: SweepMethod) -> Result<NullExpectation>
where
    E: EValue + ?Sized,
    F: Family + ?Sized,
{
    match method {
        SweepMethod::Quadrature => {
            let f = |x: f64| ev.log_value(x);
            let r = family
                .expectation(mu, &f, EXPECTATION_SETTINGS)
                .map_err(|e| Error::Numeric(format!("expectation at null parameter {mu}: {e}")))?;
            if !r.value.is_finite() {
                return Err(Error::Numeric(format!("expectation at null parameter {mu} diverges")));
            }
            Ok(NullExpectation {
                param: mu,
                expectation: r.value,
                error: r.abs_error,
            })
        }
        SweepMethod::MonteCarlo { replications, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let mut mean = 0.0;
            let mut m2 = 0.0;
            for i in 0..replications {
                let v = ev.value(family.sample(mu, &mut rng));
                let d = v - mean;
                mean += d / (i + 1) as f64;
                m2 += d * (v - mean);
            }
            if !mean.is_finite() {
                return Err(Error::Numeric(format!("Monte Carlo mean at null parameter {mu} is not finite")));
            }
            let var = m2 / (replications - 1) as f64;
            Ok(NullExpectation {
                param: mu,
                expectation: mean,
                error: (var / replications as f64).sqrt(),
            })
        }
    }
}
