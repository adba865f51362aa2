//! Construction and calibration of equivalence e-values: utility-optimal
//! boundary mixtures, TOST-E, universal inference, total-positivity checks
//! and validity sweeps.

pub mod boundary;
pub mod methods;
pub mod stp;
pub mod tost;
pub mod utility;
pub mod validity;

pub use boundary::{calibrate_log, calibrate_utility, BoundaryMixtureEValue, CalibrationReport};
pub use stp::{simplex_region, stp_check, DiscreteKernel, SimplexRegion, StpVerdict};
pub use tost::{TostE, UniversalInference};
pub use utility::UtilitySpec;
pub use validity::{validity_sweep, SweepMethod, ValidityReport};

/// A map from the statistic to an e-value.
pub trait EValue: Send + Sync {
    /// `ln ε(x)`; `-inf` for a zero e-value.
    fn log_value(&self, x: f64) -> f64;

    fn value(&self, x: f64) -> f64 {
        self.log_value(x).exp()
    }
}

impl<E: EValue + ?Sized> EValue for &E {
    fn log_value(&self, x: f64) -> f64 {
        (**self).log_value(x)
    }
}

impl<E: EValue + ?Sized> EValue for Box<E> {
    fn log_value(&self, x: f64) -> f64 {
        (**self).log_value(x)
    }
}

/// The constant e-value `ε ≡ value`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantEValue(pub f64);

impl EValue for ConstantEValue {
    fn log_value(&self, _x: f64) -> f64 {
        self.0.ln()
    }
}

/// Number of strict local extrema of `ln ε` on `grid`, after merging runs
/// of values equal within `tol`. A unimodal map has at most one.
pub fn count_local_extrema<E: EValue + ?Sized>(ev: &E, grid: &[f64], tol: f64) -> usize {
    let mut levels: Vec<f64> = Vec::with_capacity(grid.len());
    for &x in grid {
        let v = ev.log_value(x);
        match levels.last() {
            Some(&last) if (v - last).abs() <= tol || (v == last) => {}
            _ => levels.push(v),
        }
    }
    levels
        .windows(3)
        .filter(|w| (w[1] > w[0] && w[1] > w[2]) || (w[1] < w[0] && w[1] < w[2]))
        .count()
}
