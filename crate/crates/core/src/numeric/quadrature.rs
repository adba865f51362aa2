//! Globally adaptive Gauss–Kronrod (10/21-point) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate drops below `max(abs_tol, rel_tol * |I|)`. Infinite ranges are
//! mapped onto finite ones with `x = a + (1 - t) / t`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Tolerances and budget for adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

/// Value and error estimate of an integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (1.0f64).min((200.0 * error / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() {
        error = f64::INFINITY;
    }
    Panel { a, b, value, error }
}

/// Integrate `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, settings: QuadSettings) -> Result<Integral> {
    integrate_breaks(f, &[a, b], settings)
}

/// Integrate `f` over `[p_0, p_last]` using the sorted `points` as initial
/// panel boundaries (e.g. known kinks or jumps of the integrand).
pub fn integrate_breaks<F: Fn(f64) -> f64>(f: F, points: &[f64], settings: QuadSettings) -> Result<Integral> {
    if points.len() < 2 {
        return Err(Error::param("quadrature needs at least two break points"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::param("quadrature break points must be finite"));
    }
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    for w in points.windows(2) {
        if w[1] < w[0] {
            return Err(Error::param("quadrature break points must be sorted"));
        }
        if w[1] > w[0] {
            heap.push(gk21(&f, w[0], w[1]));
            evaluations += 21;
        }
    }
    let (mut total, mut total_err) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    let mut unsplittable_err = 0.0;
    while total_err > settings.abs_tol.max(settings.rel_tol * total.abs()) {
        if heap.len() >= settings.max_intervals {
            return Err(Error::Numeric(format!(
                "adaptive quadrature did not converge: value {total:e}, error estimate {total_err:e}"
            )));
        }
        let Some(worst) = heap.pop() else { break };
        if !worst.error.is_finite() && !worst.value.is_finite() && (worst.b - worst.a) < 1e-300 {
            return Err(Error::Numeric("non-finite integrand".into()));
        }
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) <= 4.0 * f64::EPSILON * mid.abs().max(1e-300) {
            // Cannot subdivide further; accept the residual.
            unsplittable_err += worst.error;
            total_err -= worst.error;
            if !total_err.is_finite() || total_err < 0.0 {
                total_err = 0.0;
            }
            continue;
        }
        let left = gk21(&f, worst.a, mid);
        let right = gk21(&f, mid, worst.b);
        evaluations += 42;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // Recompute periodically to avoid drift in the running sums.
        if heap.len() % 64 == 0 || !total_err.is_finite() {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let abs_error: f64 = heap.iter().map(|p| p.error).sum::<f64>() + unsplittable_err;
    if !value.is_finite() {
        return Err(Error::Numeric("integral is not finite".into()));
    }
    Ok(Integral {
        value,
        abs_error,
        evaluations,
    })
}

/// Integrate over `[a, +inf)`.
pub fn integrate_upper_tail<F: Fn(f64) -> f64>(f: F, a: f64, settings: QuadSettings) -> Result<Integral> {
    integrate(
        |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            let x = a + (1.0 - t) / t;
            let v = f(x) / (t * t);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        settings,
    )
}

/// Integrate over `(-inf, b]`.
pub fn integrate_lower_tail<F: Fn(f64) -> f64>(f: F, b: f64, settings: QuadSettings) -> Result<Integral> {
    integrate_upper_tail(|y| f(-y), -b, settings)
}

/// Integrate over the whole real line. `center` and `scale` locate the bulk
/// of the integrand; `[center - width*scale, center + width*scale]` is split
/// into `panels` and the remaining tails are mapped to finite intervals.
pub fn integrate_real_line<F: Fn(f64) -> f64>(
    f: F,
    center: f64,
    scale: f64,
    width: f64,
    panels: usize,
    settings: QuadSettings,
) -> Result<Integral> {
    let lo = center - width * scale;
    let hi = center + width * scale;
    let breaks: Vec<f64> = (0..=panels)
        .map(|i| lo + (hi - lo) * i as f64 / panels as f64)
        .collect();
    let body = integrate_breaks(&f, &breaks, settings)?;
    let tail_settings = QuadSettings {
        abs_tol: settings.abs_tol * 0.1,
        ..settings
    };
    let upper = integrate_upper_tail(&f, hi, tail_settings)?;
    let lower = integrate_lower_tail(&f, lo, tail_settings)?;
    Ok(Integral {
        value: body.value + upper.value + lower.value,
        abs_error: body.abs_error + upper.abs_error + lower.abs_error,
        evaluations: body.evaluations + upper.evaluations + lower.evaluations,
    })
}
