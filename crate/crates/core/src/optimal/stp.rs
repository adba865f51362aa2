//! Finite kernels and total-positivity checks.

use nalgebra::DMatrix;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Family;
use crate::numeric::quadrature::{Integral, QuadSettings};

/// Relative size below which a minor counts as non-positive.
pub const STRICT_TOLERANCE: f64 = 1e-12;

/// A kernel `p_μ(x)` on finitely many ordered parameters (rows) and sample
/// points (columns). Rows are probability vectors with positive entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteKernel {
    pub params: Vec<f64>,
    pub points: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

impl DiscreteKernel {
    pub fn new(params: Vec<f64>, points: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = Self { params, points, rows };
        k.validate()?;
        Ok(k)
    }

    /// Rows indexed `1..=rows`, columns `1..=cols`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let params = (1..=rows.len()).map(|i| i as f64).collect();
        let points = (1..=rows.first().map_or(0, Vec::len)).map(|j| j as f64).collect();
        Self::new(params, points, rows)
    }

    pub fn validate(&self) -> Result<()> {
        let strictly_increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|x| x.is_finite());
        if self.rows.is_empty() || self.points.is_empty() {
            return Err(Error::param("kernel must have at least one row and one column"));
        }
        if self.params.len() != self.rows.len() {
            return Err(Error::param("kernel parameter labels do not match the rows"));
        }
        if !strictly_increasing(&self.params) || !strictly_increasing(&self.points) {
            return Err(Error::param("kernel labels must be finite and strictly increasing"));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.points.len() {
                return Err(Error::param(format!("kernel row {} has {} entries, expected {}", i + 1, row.len(), self.points.len())));
            }
            if row.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
                return Err(Error::param(format!("kernel row {} has a non-positive entry", i + 1)));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::param(format!("kernel row {} sums to {total}", i + 1)));
            }
        }
        Ok(())
    }

    pub fn row_index(&self, param: f64) -> Option<usize> {
        self.params.iter().position(|&p| p == param)
    }

    pub fn column_index(&self, x: f64) -> Option<usize> {
        self.points.iter().position(|&p| p == x)
    }
}

impl Family for DiscreteKernel {
    fn log_density(&self, param: f64, x: f64) -> f64 {
        match (self.row_index(param), self.column_index(x)) {
            (Some(i), Some(j)) => self.rows[i][j].ln(),
            _ => f64::NEG_INFINITY,
        }
    }

    fn expectation(&self, param: f64, log_f: &dyn Fn(f64) -> f64, _settings: QuadSettings) -> Result<Integral> {
        let i = self
            .row_index(param)
            .ok_or_else(|| Error::param(format!("{param} is not a kernel parameter")))?;
        let value = self
            .points
            .iter()
            .zip(&self.rows[i])
            .map(|(&x, &p)| p * log_f(x).exp())
            .sum();
        Ok(Integral {
            value,
            abs_error: 0.0,
            evaluations: self.points.len(),
        })
    }

    fn sample(&self, param: f64, rng: &mut dyn RngCore) -> f64 {
        let i = self.row_index(param).expect("sampling from an unknown kernel parameter");
        let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        let mut acc = 0.0;
        for (j, &p) in self.rows[i].iter().enumerate() {
            acc += p;
            if u < acc {
                return self.points[j];
            }
        }
        *self.points.last().unwrap()
    }

    fn statistic_grid(&self, _params: &[f64], _points: usize) -> Vec<f64> {
        self.points.clone()
    }

    fn parameter_space(&self) -> (f64, f64) {
        (self.params[0], *self.params.last().unwrap())
    }
}

/// The four-row kernel on three points that is STP₂ but not STP₃.
pub fn counterexample_kernel() -> DiscreteKernel {
    let rows = [[16.0, 7.0, 1.0], [12.0, 6.0, 6.0], [6.0, 6.0, 12.0], [2.0, 4.0, 18.0]]
        .iter()
        .map(|r| r.iter().map(|v| v / 24.0).collect())
        .collect();
    DiscreteKernel::from_rows(rows).expect("valid kernel")
}

/// A minor that is not strictly positive. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StpWitness {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub minor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum StpVerdict {
    StrictPass,
    Fail(StpWitness),
}

impl StpVerdict {
    pub fn is_strict_pass(&self) -> bool {
        matches!(self, StpVerdict::StrictPass)
    }
}

/// Check every `k×k` minor with `k <= order` for strict positivity, in
/// increasing `k` and lexicographic index order; the first failure is the
/// witness.
pub fn stp_check(kernel: &DiscreteKernel, order: usize) -> Result<StpVerdict> {
    stp_check_matrix(&kernel.rows, order)
}

/// [`stp_check`] on an arbitrary matrix with ordered rows and columns.
pub fn stp_check_matrix(rows: &[Vec<f64>], order: usize) -> Result<StpVerdict> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if order == 0 || order > m.min(n) {
        return Err(Error::param(format!("order {order} must be in 1..={}", m.min(n))));
    }
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::param("kernel rows differ in length"));
    }
    for k in 1..=order {
        for ri in combinations(m, k) {
            let scale: f64 = ri
                .iter()
                .map(|&i| rows[i].iter().fold(0.0f64, |a, v| a.max(v.abs())))
                .product();
            for ci in combinations(n, k) {
                let sub = DMatrix::from_fn(k, k, |a, b| rows[ri[a]][ci[b]]);
                let minor = sub.determinant();
                if !(minor > STRICT_TOLERANCE * scale) {
                    return Ok(StpVerdict::Fail(StpWitness {
                        rows: ri.clone(),
                        cols: ci,
                        minor,
                    }));
                }
            }
        }
    }
    Ok(StpVerdict::StrictPass)
}

/// All increasing `k`-subsets of `0..n`.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimplexRegion {
    /// `(p1, p2, p)` is STP₃.
    Stp3Side,
    /// STP₂ but not STP₃.
    Stp2Only,
    NotStp2,
}

/// Classify a third probability vector `p` relative to the ordered pair
/// `(p1, p2)` by checking the stacked kernel `[p1; p2; p]`. Boundary cases
/// (a zero minor) fall into the weaker class.
pub fn simplex_region(p: [f64; 3], p1: [f64; 3], p2: [f64; 3]) -> Result<SimplexRegion> {
    for (name, v) in [("p", p), ("p1", p1), ("p2", p2)] {
        let total: f64 = v.iter().sum();
        if v.iter().any(|x| !(*x >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!("{name} is not on the probability simplex")));
        }
    }
    let rows = vec![p1.to_vec(), p2.to_vec(), p.to_vec()];
    if stp_check_matrix(&rows, 3)?.is_strict_pass() {
        Ok(SimplexRegion::Stp3Side)
    } else if stp_check_matrix(&rows, 2)?.is_strict_pass() {
        Ok(SimplexRegion::Stp2Only)
    } else {
        Ok(SimplexRegion::NotStp2)
    }
}
