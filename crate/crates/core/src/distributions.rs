//! Densities and distribution functions of the statistics used throughout the
//! crate, evaluated in log space wherever underflow is possible.
//!
//! The noncentral t density is written as
//! `C(x) * I(a)`, `a = ncp * x / sqrt(dof + x^2)`, with
//! `I(a) = ∫_0^∞ y^dof exp(-(y - a)^2 / 2) dy`. For `a >= 0` the integral is
//! expanded as a positive Poisson-type series; for `a < 0` (the tail opposite
//! to the noncentrality) the series alternates, so the integral is evaluated
//! directly by adaptive quadrature. Negative noncentralities are reflected:
//! `pdf_{-ncp}(x) = pdf_{ncp}(-x)`.
//!
//! The noncentral F density is the Poisson(ncp/2) mixture of central F
//! densities; the scaled noncentral chi-square with one degree of freedom has
//! the closed folded-normal form.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use libm::erfc;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::numeric::quadrature::{integrate_breaks, integrate_upper_tail, QuadSettings};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const SERIES_REL_TOL: f64 = 1e-17;
const POISSON_TAIL: f64 = 1e-14;
const MAX_SERIES_TERMS: usize = 100_000;

/// A distribution of a scalar statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistSpec {
    Normal { mean: f64, variance: f64 },
    NoncentralT { dof: f64, ncp: f64 },
    /// Law of `scale * W` with `W ~ chi^2_1(ncp)`.
    ScaledNoncentralChiSq1 { scale: f64, ncp: f64 },
    NoncentralF { dof1: f64, dof2: f64, ncp: f64 },
}

impl DistSpec {
    /// Check that every parameter is finite and in range.
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be finite, got {v}")))
            }
        };
        let positive = |name: &str, v: f64| {
            finite(name, v)?;
            if v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be positive, got {v}")))
            }
        };
        let non_negative = |name: &str, v: f64| {
            finite(name, v)?;
            if v >= 0.0 {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be non-negative, got {v}")))
            }
        };
        match *self {
            DistSpec::Normal { mean, variance } => {
                finite("mean", mean)?;
                positive("variance", variance)
            }
            DistSpec::NoncentralT { dof, ncp } => {
                positive("dof", dof)?;
                finite("ncp", ncp)
            }
            DistSpec::ScaledNoncentralChiSq1 { scale, ncp } => {
                positive("scale", scale)?;
                non_negative("ncp", ncp)
            }
            DistSpec::NoncentralF { dof1, dof2, ncp } => {
                positive("dof1", dof1)?;
                positive("dof2", dof2)?;
                non_negative("ncp", ncp)
            }
        }
    }

    /// Closed support `(lower, upper)`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            DistSpec::Normal { .. } | DistSpec::NoncentralT { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            DistSpec::ScaledNoncentralChiSq1 { .. } | DistSpec::NoncentralF { .. } => (0.0, f64::INFINITY),
        }
    }

    /// Natural log of the density at `x`.
    pub fn log_pdf(&self, x: f64) -> Result<f64> {
        self.validate()?;
        if x.is_nan() {
            return Err(Error::Domain("x is NaN".into()));
        }
        let (lo, _) = self.support();
        if x < lo {
            return Err(Error::Domain(format!("x = {x} lies below the support")));
        }
        Ok(self.log_pdf_unchecked(x))
    }

    /// `log_pdf` without parameter and support validation; returns `-inf`
    /// outside the support.
    pub fn log_pdf_unchecked(&self, x: f64) -> f64 {
        match *self {
            DistSpec::Normal { mean, variance } => normal_log_pdf(x, mean, variance),
            DistSpec::NoncentralT { dof, ncp } => noncentral_t_log_pdf(x, dof, ncp),
            DistSpec::ScaledNoncentralChiSq1 { scale, ncp } => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    chisq1_log_pdf(x / scale, ncp) - scale.ln()
                }
            }
            DistSpec::NoncentralF { dof1, dof2, ncp } => noncentral_f_log_pdf(x, dof1, dof2, ncp),
        }
    }

    /// Density at `x`.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.log_pdf(x).map(f64::exp)
    }

    /// Cumulative distribution function, clamped to `[0, 1]`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.validate()?;
        if x.is_nan() {
            return Err(Error::Domain("x is NaN".into()));
        }
        let p = match *self {
            DistSpec::Normal { mean, variance } => normal_cdf((x - mean) / variance.sqrt()),
            DistSpec::NoncentralT { dof, ncp } => noncentral_t_cdf(x, dof, ncp),
            DistSpec::ScaledNoncentralChiSq1 { scale, ncp } => {
                if x <= 0.0 {
                    0.0
                } else if x == f64::INFINITY {
                    1.0
                } else {
                    let r = (x / scale).sqrt();
                    let m = ncp.sqrt();
                    // P(|Z + m| <= r)
                    normal_cdf(r - m) - normal_cdf(-r - m)
                }
            }
            DistSpec::NoncentralF { dof1, dof2, ncp } => noncentral_f_cdf(x, dof1, dof2, ncp),
        };
        Ok(p.clamp(0.0, 1.0))
    }
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    if z == f64::INFINITY {
        return 1.0;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Log density of `N(mean, variance)`.
pub fn normal_log_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -LN_SQRT_2PI - 0.5 * variance.ln() - 0.5 * d * d / variance
}

fn chisq1_log_pdf(w: f64, ncp: f64) -> f64 {
    if w < 0.0 {
        return f64::NEG_INFINITY;
    }
    if w == 0.0 {
        return f64::INFINITY;
    }
    let r = w.sqrt();
    let m = ncp.sqrt();
    let d = r - m;
    // [phi(r - m) + phi(r + m)] / (2 r)
    -LN_SQRT_2PI - 0.5 * d * d + (-2.0 * r * m).exp().ln_1p() - (2.0 * r).ln()
}

fn noncentral_t_log_pdf(x: f64, dof: f64, ncp: f64) -> f64 {
    if ncp < 0.0 {
        return noncentral_t_log_pdf(-x, dof, -ncp);
    }
    if x.is_infinite() {
        return f64::NEG_INFINITY;
    }
    let s = dof + x * x;
    let log_c = 0.5 * dof * dof.ln() - 0.5 * PI.ln() - 0.5 * (dof - 1.0) * LN_2 - ln_gamma(0.5 * dof)
        - 0.5 * (dof + 1.0) * s.ln()
        - 0.5 * ncp * ncp * dof / s;
    let a = ncp * x / s.sqrt();
    log_c + log_hermite_integral(dof, a)
}

/// `ln ∫_0^∞ y^nu exp(-(y - a)^2 / 2) dy`.
pub(crate) fn log_hermite_integral(nu: f64, a: f64) -> f64 {
    if a >= 0.0 {
        log_hermite_series(nu, a)
    } else {
        log_hermite_quadrature(nu, a)
    }
}

fn log_hermite_series(nu: f64, a: f64) -> f64 {
    // term_j = a^j / j! * 2^((nu + j - 1)/2) * Gamma((nu + j + 1)/2)
    let t0 = 0.5 * (nu - 1.0) * LN_2 + ln_gamma(0.5 * (nu + 1.0));
    if a == 0.0 {
        return t0;
    }
    let ln_a = a.ln();
    let t1 = ln_a + 0.5 * nu * LN_2 + ln_gamma(0.5 * nu + 1.0);
    let ln_a2 = 2.0 * ln_a;
    // Peak of the terms lies near j ~ a^2 + a*sqrt(nu); sum in linear scale
    // relative to a running reference to stay in range.
    let mut terms = [t0, t1];
    let mut reference = t0.max(t1);
    let mut sum = (t0 - reference).exp() + (t1 - reference).exp();
    let peak_guess = a * a + a * nu.sqrt() + 2.0;
    let mut j = 0usize;
    loop {
        // Advance the chain of parity j % 2 from j to j + 2.
        let idx = j % 2;
        let jf = j as f64;
        let next = terms[idx] + ln_a2 + (nu + jf + 1.0).ln() - ((jf + 1.0) * (jf + 2.0)).ln();
        terms[idx] = next;
        if next > reference + 600.0 {
            sum *= (reference - next).exp();
            reference = next;
        }
        let contribution = (next - reference).exp();
        sum += contribution;
        j += 1;
        if (jf + 2.0) > peak_guess && contribution < SERIES_REL_TOL * sum && (terms[1 - idx] - reference).exp() < SERIES_REL_TOL * sum {
            break;
        }
        if j > MAX_SERIES_TERMS {
            break;
        }
    }
    -0.5 * a * a + reference + sum.ln()
}

fn log_hermite_quadrature(nu: f64, a: f64) -> f64 {
    let peak = 0.5 * (a + (a * a + 4.0 * nu).sqrt());
    let h = |y: f64| nu * y.ln() - 0.5 * (y - a) * (y - a);
    let h_peak = h(peak);
    // h is concave with h'' <= -1, so nothing beyond 12 units of the peak
    // matters; near the peak the width is set by the local curvature.
    let width = 1.0 / (nu / (peak * peak) + 1.0).sqrt();
    let lo = (peak - 12.0).max(0.0);
    let hi = peak + 12.0;
    let mut breaks = vec![lo];
    for k in [-24.0, -12.0, -6.0, -3.0, -1.5, 0.0, 1.5, 3.0, 6.0, 12.0, 24.0] {
        let p = peak + k * width;
        if p > lo && p < hi {
            breaks.push(p);
        }
    }
    breaks.push(hi);
    let integrand = |y: f64| {
        if y <= 0.0 {
            0.0
        } else {
            (h(y) - h_peak).exp()
        }
    };
    let settings = QuadSettings {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        max_intervals: 2000,
    };
    let value = integrate_breaks(integrand, &breaks, settings)
        .map(|r| r.value)
        .unwrap_or(f64::NAN);
    h_peak + value.ln()
}

fn noncentral_f_log_pdf(x: f64, d1: f64, d2: f64, ncp: f64) -> f64 {
    if x < 0.0 {
        return f64::NEG_INFINITY;
    }
    if x == 0.0 {
        return if d1 < 2.0 {
            f64::INFINITY
        } else if d1 == 2.0 {
            // Only the k = 0 term survives.
            -0.5 * ncp + (d1 / d2).ln() - ln_beta(0.5 * d1, 0.5 * d2)
        } else {
            f64::NEG_INFINITY
        };
    }
    if x == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    let half_d1 = 0.5 * d1;
    let half_d2 = 0.5 * d2;
    let ln_ratio = (d1 / d2).ln();
    let ln_1p = (d1 * x / d2).ln_1p();
    let log_term0 = -0.5 * ncp + half_d1 * ln_ratio + (half_d1 - 1.0) * x.ln()
        - (half_d1 + half_d2) * ln_1p
        - ln_beta(half_d1, half_d2);
    if ncp == 0.0 {
        return log_term0;
    }
    let half_ncp = 0.5 * ncp;
    let ln_r = (d1 * x).ln() - (d2 + d1 * x).ln();
    let ln_half_ncp = half_ncp.ln();
    let mut log_term = log_term0;
    let mut reference = log_term0;
    let mut sum = 1.0;
    let mut poisson_log = -half_ncp;
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        log_term += ln_half_ncp - (kf + 1.0).ln() + ln_r + (half_d1 + kf + half_d2).ln() - (half_d1 + kf).ln();
        poisson_log += ln_half_ncp - (kf + 1.0).ln();
        if log_term > reference + 600.0 {
            sum *= (reference - log_term).exp();
            reference = log_term;
        }
        let contribution = (log_term - reference).exp();
        sum += contribution;
        k += 1;
        if contribution < SERIES_REL_TOL * sum && poisson_tail_below(poisson_log.exp(), k as f64, half_ncp, POISSON_TAIL) {
            break;
        }
        if k > MAX_SERIES_TERMS {
            break;
        }
    }
    reference + sum.ln()
}

/// Whether the Poisson(`mean`) mass strictly beyond `k` is below `tol`, given
/// the probability `p_k` of `k`. Past the mode the tail is bounded by a
/// geometric series with ratio `mean / (k + 2)`.
fn poisson_tail_below(p_k: f64, k: f64, mean: f64, tol: f64) -> bool {
    let ratio = mean / (k + 2.0);
    if ratio >= 1.0 {
        return false;
    }
    p_k * (mean / (k + 1.0)) / (1.0 - ratio) < tol
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

fn noncentral_f_cdf(x: f64, d1: f64, d2: f64, ncp: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    let y = d1 * x / (d2 + d1 * x);
    let half_ncp = 0.5 * ncp;
    let mut total = 0.0;
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        let log_w = if half_ncp == 0.0 {
            if k == 0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            -half_ncp + kf * half_ncp.ln() - ln_gamma(kf + 1.0)
        };
        let w = log_w.exp();
        total += w * beta_reg(0.5 * d1 + kf, 0.5 * d2, y);
        k += 1;
        if poisson_tail_below(w, kf, half_ncp, POISSON_TAIL) {
            break;
        }
        if k > MAX_SERIES_TERMS {
            break;
        }
    }
    total
}

fn noncentral_t_cdf(x: f64, dof: f64, ncp: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if x < 0.0 {
        if ncp > 0.0 {
            // The series alternates in this tail and cancels badly.
            return noncentral_t_opposite_tail(-x, dof, ncp);
        }
        // P(T <= x) = P(-T >= -x) and -T is noncentral t with -ncp.
        return noncentral_t_series(-x, dof, -ncp, true);
    }
    if ncp < 0.0 && x > 0.0 {
        // Mirror of the branch above: 1 - P(-T <= -x).
        return 1.0 - noncentral_t_opposite_tail(x, dof, -ncp);
    }
    noncentral_t_series(x, dof, ncp, false)
}

// P(T <= -s) for ncp > 0 as E[Phi(-s sqrt(V/dof) - ncp)], V ~ chi^2_dof,
// integrated over u = sqrt(V).
fn noncentral_t_opposite_tail(s: f64, dof: f64, ncp: f64) -> f64 {
    let a = s / dof.sqrt();
    let log_norm = (1.0 - 0.5 * dof) * LN_2 - ln_gamma(0.5 * dof);
    let integrand = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let log_chi = log_norm + (dof - 1.0) * u.ln() - 0.5 * u * u;
        (log_normal_cdf(-(a * u + ncp)) + log_chi).exp()
    };
    let top = dof.sqrt() + 12.0;
    let breaks = [0.0, 1e-3, 0.1, 0.25 * top, 0.5 * top, top];
    let settings = QuadSettings {
        abs_tol: 0.0,
        rel_tol: 1e-12,
        max_intervals: 4000,
    };
    let body = integrate_breaks(integrand, &breaks, settings).map(|r| r.value).unwrap_or(f64::NAN);
    let tail = integrate_upper_tail(integrand, top, settings).map(|r| r.value).unwrap_or(0.0);
    body + tail
}

/// `ln Phi(z)`, accurate far into the lower tail.
pub fn log_normal_cdf(z: f64) -> f64 {
    if z > -30.0 {
        return normal_cdf(z).ln();
    }
    // Asymptotic Mills-ratio expansion.
    let z2 = z * z;
    let mut series = 1.0;
    let mut term = 1.0;
    for k in 1..8 {
        term *= -((2 * k - 1) as f64) / z2;
        series += term;
    }
    -LN_SQRT_2PI - 0.5 * z2 - (-z).ln() + series.ln()
}

// Poisson mixture of incomplete beta functions (Lenth's AS 243 form) for
// t >= 0. The upper tail is summed directly with complemented beta
// functions instead of being formed as 1 - F.
fn noncentral_t_series(t: f64, dof: f64, ncp: f64, upper: bool) -> f64 {
    let base = normal_cdf(-ncp);
    if t == 0.0 {
        return if upper { 1.0 - base } else { base };
    }
    let t2 = t * t;
    let y = t2 / (t2 + dof);
    let y_c = dof / (t2 + dof);
    let lambda = 0.5 * ncp * ncp;
    let mut total = 0.0;
    let mut j = 0usize;
    loop {
        let jf = j as f64;
        let (p_j, q_j) = if lambda == 0.0 {
            (if j == 0 { 1.0 } else { 0.0 }, 0.0)
        } else {
            let log_pois = -lambda + jf * lambda.ln() - ln_gamma(jf + 1.0);
            let log_q = -lambda + jf * lambda.ln() - ln_gamma(jf + 1.5) + ncp.abs().ln() - 0.5 * LN_2;
            (log_pois.exp(), ncp.signum() * log_q.exp())
        };
        total += if upper {
            p_j * beta_reg(0.5 * dof, jf + 0.5, y_c) + q_j * beta_reg(0.5 * dof, jf + 1.0, y_c)
        } else {
            p_j * beta_reg(jf + 0.5, 0.5 * dof, y) + q_j * beta_reg(jf + 1.0, 0.5 * dof, y)
        };
        j += 1;
        if poisson_tail_below(p_j, jf, lambda, POISSON_TAIL) {
            break;
        }
        if j > MAX_SERIES_TERMS {
            break;
        }
    }
    if upper {
        0.5 * total
    } else {
        base + 0.5 * total
    }
}
