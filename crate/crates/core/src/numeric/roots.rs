//! Bracketed root finding (Brent's method: bisection safeguarded by secant
//! and inverse quadratic interpolation steps).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RootSettings {
    /// Absolute tolerance on the abscissa.
    pub x_tol: f64,
    /// Stop as soon as `|f(x)| <= f_tol`.
    pub f_tol: f64,
    pub max_iter: usize,
}

impl Default for RootSettings {
    fn default() -> Self {
        Self {
            x_tol: 1e-14,
            f_tol: 0.0,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub f_x: f64,
    pub iterations: usize,
}

/// Locate a root of `f` in `[a, b]`. `f(a)` and `f(b)` must differ in sign
/// (or one of them be zero); otherwise `Error::Calibration` is returned.
pub fn find_root<F>(mut f: F, a: f64, b: f64, settings: RootSettings) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::Numeric("root function returned NaN at bracket end".into()));
    }
    if fa == 0.0 {
        return Ok(Root { x: a, f_x: fa, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, f_x: fb, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Calibration(format!(
            "no sign change on [{a}, {b}]: f(a) = {fa:e}, f(b) = {fb:e}"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=settings.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * settings.x_tol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 || fb.abs() <= settings.f_tol {
            return Ok(Root { x: b, f_x: fb, iterations: iter });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
        if fb.is_nan() {
            return Err(Error::Numeric(format!("root function returned NaN at {b}")));
        }
    }
    Err(Error::Calibration(format!(
        "root finder exceeded {} iterations",
        settings.max_iter
    )))
}
