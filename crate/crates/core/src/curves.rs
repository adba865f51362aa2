//! Curves of e-values over margins, their inversion into equivalence curves,
//! envelopes, merging and the two-margin frontier.
//!
//! Curves are right-continuous step functions on explicit grids. Below the
//! first grid margin an e-curve is taken to be 0.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `Δ ↦ ε_Δ` on a sorted margin grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ECurve {
    #[serde(with = "serde_f64_vec")]
    pub margins: Vec<f64>,
    #[serde(with = "serde_f64_vec")]
    pub values: Vec<f64>,
}

/// `α ↦ Δ̂_α` on a sorted level grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceCurve {
    #[serde(with = "serde_f64_vec")]
    pub levels: Vec<f64>,
    #[serde(with = "serde_f64_vec")]
    pub margins: Vec<f64>,
}

/// A level-α test as a `{0, 1/α}`-valued e-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedTest {
    pub level: f64,
    pub outcome: f64,
}

impl FixedTest {
    pub fn rejects(&self) -> bool {
        self.outcome > 0.0
    }
}

fn check_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param(format!("{what} grid is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::param(format!("{what} grid must be finite")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param(format!("{what} grid must be strictly increasing")));
    }
    Ok(())
}

fn check_levels(levels: &[f64]) -> Result<()> {
    check_grid(levels, "level")?;
    if levels.iter().any(|&a| a <= 0.0 || a > 1.0) {
        return Err(Error::param("levels must lie in (0, 1]"));
    }
    Ok(())
}

impl ECurve {
    /// A curve with arbitrary non-negative values (not necessarily monotone).
    pub fn new(margins: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_grid(&margins, "margin")?;
        if margins.len() != values.len() {
            return Err(Error::param("margins and values differ in length"));
        }
        if values.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::param("e-values must be non-negative"));
        }
        Ok(Self { margins, values })
    }

    /// A curve that must already be non-decreasing.
    pub fn monotone(margins: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let c = Self::new(margins, values)?;
        if !c.is_monotone() {
            return Err(Error::param("e-curve must be non-decreasing in the margin"));
        }
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.margins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.margins.is_empty()
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    /// Right-continuous step value at `delta`.
    pub fn value_at(&self, delta: f64) -> f64 {
        match self.margins.partition_point(|&m| m <= delta) {
            0 => 0.0,
            k => self.values[k - 1],
        }
    }

    /// The curve evaluated on another grid.
    pub fn refine(&self, grid: &[f64]) -> Self {
        Self {
            margins: grid.to_vec(),
            values: grid.iter().map(|&d| self.value_at(d)).collect(),
        }
    }

    /// Smallest grid margin with `ε ≥ 1/α`, or `+inf`. Accepts any `α > 0`.
    pub fn margin_at_level(&self, alpha: f64) -> f64 {
        let threshold = 1.0 / alpha;
        self.margins
            .iter()
            .zip(&self.values)
            .find(|(_, &v)| v >= threshold)
            .map_or(f64::INFINITY, |(&m, _)| m)
    }
}

impl EquivalenceCurve {
    pub fn new(levels: Vec<f64>, margins: Vec<f64>) -> Result<Self> {
        check_levels(&levels)?;
        if levels.len() != margins.len() {
            return Err(Error::param("levels and margins differ in length"));
        }
        if margins.iter().any(|m| m.is_nan()) {
            return Err(Error::param("margins must not be NaN"));
        }
        if margins.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::param("equivalence curve must be non-increasing in the level"));
        }
        Ok(Self { levels, margins })
    }

    /// Right-continuous step value at `alpha`; `+inf` below the grid.
    pub fn margin_at(&self, alpha: f64) -> f64 {
        match self.levels.partition_point(|&a| a <= alpha) {
            0 => f64::INFINITY,
            k => self.margins[k - 1],
        }
    }
}

/// `Δ̂_α = inf{Δ : ε_Δ ≥ 1/α}` on the grid, for each level.
pub fn invert_ecurve(curve: &ECurve, levels: &[f64]) -> Result<EquivalenceCurve> {
    check_levels(levels)?;
    if !curve.is_monotone() {
        return Err(Error::param("e-curve must be non-decreasing before inversion"));
    }
    let margins = levels.iter().map(|&a| curve.margin_at_level(a)).collect();
    EquivalenceCurve::new(levels.to_vec(), margins)
}

/// `ε_Δ = sup{1/α : Δ ≥ Δ̂_α}` on the given margin grid (0 if no level
/// qualifies).
pub fn curve_from_equivalence(eq: &EquivalenceCurve, margins: &[f64]) -> Result<ECurve> {
    check_grid(margins, "margin")?;
    let values = margins
        .iter()
        .map(|&d| {
            eq.levels
                .iter()
                .zip(&eq.margins)
                .find(|(_, &m)| d >= m)
                .map_or(0.0, |(&a, _)| 1.0 / a)
        })
        .collect();
    ECurve::monotone(margins.to_vec(), values)
}

/// `Δ ↦ inf_{Δ' ≥ Δ} ε_{Δ'}`.
pub fn right_lower_envelope(curve: &ECurve) -> ECurve {
    let mut values = curve.values.clone();
    for i in (0..values.len().saturating_sub(1)).rev() {
        values[i] = values[i].min(values[i + 1]);
    }
    ECurve {
        margins: curve.margins.clone(),
        values,
    }
}

fn union_grid(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut grid: Vec<f64> = a.iter().chain(b).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// `Δ ↦ w ε¹_Δ + (1 − w) ε²_Δ` on the union grid.
pub fn merge_average(c1: &ECurve, c2: &ECurve, w: f64) -> Result<ECurve> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::param(format!("weight {w} outside [0, 1]")));
    }
    let grid = union_grid(&c1.margins, &c2.margins);
    let values = grid
        .iter()
        .map(|&d| {
            let a = if w == 0.0 { 0.0 } else { w * c1.value_at(d) };
            let b = if w == 1.0 { 0.0 } else { (1.0 - w) * c2.value_at(d) };
            a + b
        })
        .collect();
    ECurve::new(grid, values)
}

/// `Δ ↦ ε¹_Δ ε²_Δ` on the union grid, for independent curves. `0 · ∞` is 0.
pub fn merge_product(c1: &ECurve, c2: &ECurve) -> ECurve {
    let grid = union_grid(&c1.margins, &c2.margins);
    let values = grid
        .iter()
        .map(|&d| {
            let (a, b) = (c1.value_at(d), c2.value_at(d));
            if a == 0.0 || b == 0.0 {
                0.0
            } else {
                a * b
            }
        })
        .collect();
    ECurve { margins: grid, values }
}

/// Outcome of the level-α test at margin Δ.
pub fn test_from_ecurve(curve: &ECurve, delta: f64, alpha: f64) -> Result<FixedTest> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("level {alpha} outside (0, 1)")));
    }
    let threshold = 1.0 / alpha;
    let outcome = if curve.value_at(delta) >= threshold { threshold } else { 0.0 };
    Ok(FixedTest { level: alpha, outcome })
}

/// The step transform `(1/α) 𝕀{ε ≥ 1/α}` of a curve.
pub fn fixed_level_curve(curve: &ECurve, alpha: f64) -> Result<ECurve> {
    let values = curve
        .margins
        .iter()
        .map(|&d| test_from_ecurve(curve, d, alpha).map(|t| t.outcome))
        .collect::<Result<Vec<_>>>()?;
    ECurve::new(curve.margins.clone(), values)
}

/// E-values over pairs `(Δ⁻, Δ⁺)` on a rectangular grid. Entries with
/// `lower[i] >= upper[j]` are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginSurface {
    #[serde(with = "serde_f64_vec")]
    pub lower: Vec<f64>,
    #[serde(with = "serde_f64_vec")]
    pub upper: Vec<f64>,
    /// Row-major, `values[i][j]` at `(lower[i], upper[j])`.
    pub values: Vec<Vec<f64>>,
}

impl MarginSurface {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        check_grid(&lower, "lower margin")?;
        check_grid(&upper, "upper margin")?;
        if values.len() != lower.len() || values.iter().any(|row| row.len() != upper.len()) {
            return Err(Error::param("surface shape does not match its grids"));
        }
        Ok(Self { lower, upper, values })
    }

    /// Tabulate `f(Δ⁻, Δ⁺)` over valid pairs; invalid pairs hold NaN.
    pub fn tabulate<F: FnMut(f64, f64) -> Result<f64>>(lower: Vec<f64>, upper: Vec<f64>, mut f: F) -> Result<Self> {
        let mut values = Vec::with_capacity(lower.len());
        for &l in &lower {
            let mut row = Vec::with_capacity(upper.len());
            for &u in &upper {
                row.push(if l < u { f(l, u)? } else { f64::NAN });
            }
            values.push(row);
        }
        Self::new(lower, upper, values)
    }

    fn valid(&self, i: usize, j: usize) -> bool {
        self.lower[i] < self.upper[j]
    }

    /// Two-dimensional envelope: the minimum over all valid pairs at least
    /// as wide, which is monotone under the inclusion order.
    pub fn envelope(&self) -> Self {
        let (n, m) = (self.lower.len(), self.upper.len());
        let mut env = vec![vec![f64::NAN; m]; n];
        // env[i][j] = min(v[i][j], env[i-1][j], env[i][j+1]) over valid cells;
        // widening moves i down and j up.
        for i in 0..n {
            for j in (0..m).rev() {
                if !self.valid(i, j) {
                    continue;
                }
                let mut v = self.values[i][j];
                if i > 0 && self.valid(i - 1, j) {
                    v = v.min(env[i - 1][j]);
                }
                if j + 1 < m && self.valid(i, j + 1) {
                    v = v.min(env[i][j + 1]);
                }
                env[i][j] = v;
            }
        }
        Self {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            values: env,
        }
    }
}

/// Pareto-minimal (tightest) margin pairs whose enveloped e-value reaches
/// `1/α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginFrontier {
    pub level: f64,
    pub pairs: Vec<(f64, f64)>,
}

/// `(a, b) ≼ (c, d)`: the interval `[a, b]` is contained in `[c, d]`.
pub fn pair_precedes(p: (f64, f64), q: (f64, f64)) -> bool {
    p.0 >= q.0 && p.1 <= q.1
}

pub fn margin_frontier(surface: &MarginSurface, alpha: f64) -> Result<MarginFrontier> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param(format!("level {alpha} outside (0, 1]")));
    }
    let threshold = 1.0 / alpha;
    let env = surface.envelope();
    let (n, m) = (surface.lower.len(), surface.upper.len());
    // For each lower index the tightest qualifying upper index; by
    // monotonicity it is non-decreasing in the lower index.
    let first: Vec<Option<usize>> = (0..n)
        .map(|i| (0..m).find(|&j| env.valid(i, j) && env.values[i][j] >= threshold))
        .collect();
    let mut pairs = Vec::new();
    for i in 0..n {
        let Some(j) = first[i] else { continue };
        // A later lower index with an upper index no larger is strictly tighter.
        let dominated = first[i + 1..].iter().flatten().any(|&j2| j2 <= j);
        if !dominated {
            pairs.push((surface.lower[i], surface.upper[j]));
        }
    }
    Ok(MarginFrontier { level: alpha, pairs })
}

/// Serde helpers for floats that may be infinite; JSON has no infinity, so
/// `±inf` is written as the strings `"inf"` and `"-inf"`.
pub mod serde_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    pub(crate) enum Repr {
        Num(f64),
        Str(String),
    }

    pub(crate) fn to_repr(v: f64) -> Repr {
        if v == f64::INFINITY {
            Repr::Str("inf".into())
        } else if v == f64::NEG_INFINITY {
            Repr::Str("-inf".into())
        } else if v.is_nan() {
            Repr::Str("nan".into())
        } else {
            Repr::Num(v)
        }
    }

    pub(crate) fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => super::parse_f64(&s).map_err(E::custom),
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }
}

/// Vector form of [`serde_f64`].
pub mod serde_f64_vec {
    use super::serde_f64::{from_repr, to_repr, Repr};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|&x| to_repr(x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
    }
}

/// Parse a float, accepting `inf`, `-inf` and `nan` spellings.
pub fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    match s.trim() {
        "inf" | "+inf" | "Inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-Inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        "nan" | "NaN" => Ok(f64::NAN),
        t => t.parse::<f64>().map_err(|e| format!("cannot parse '{t}' as a number: {e}")),
    }
}

/// Format with 12 significant digits (shortest representation of the
/// rounded value).
pub fn format_sig12(v: f64) -> String {
    if v == f64::INFINITY {
        return "inf".into();
    }
    if v == f64::NEG_INFINITY {
        return "-inf".into();
    }
    if v.is_nan() {
        return "nan".into();
    }
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    let magnitude = rounded.abs();
    if rounded != 0.0 && !(1e-5..1e16).contains(&magnitude) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

fn write_two_columns<W: Write>(out: W, header: [&str; 2], a: &[f64], b: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for (x, y) in a.iter().zip(b) {
        w.write_record([format_sig12(*x), format_sig12(*y)])?;
    }
    w.flush()?;
    Ok(())
}

fn read_two_columns<R: Read>(input: R, header: [&str; 2]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_reader(input);
    let found: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        return Err(Error::Config(format!("expected CSV header {header:?}, found {found:?}")));
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Config(format!("CSV row {} has {} fields", line + 2, rec.len())));
        }
        let parse = |s: &str| parse_f64(s).map_err(|e| Error::Config(format!("CSV row {}: {e}", line + 2)));
        a.push(parse(&rec[0])?);
        b.push(parse(&rec[1])?);
    }
    Ok((a, b))
}

impl ECurve {
    /// CSV with columns `margin,e_value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_two_columns(out, ["margin", "e_value"], &self.margins, &self.values)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let (m, v) = read_two_columns(input, ["margin", "e_value"])?;
        Self::new(m, v)
    }
}

impl EquivalenceCurve {
    /// CSV with columns `alpha,margin_hat`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_two_columns(out, ["alpha", "margin_hat"], &self.levels, &self.margins)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let (a, m) = read_two_columns(input, ["alpha", "margin_hat"])?;
        Self::new(a, m)
    }
}

/// Logarithmically spaced levels from `lo` to `hi` inclusive.
pub fn log_levels(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    let (a, b) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect();
    v[0] = lo;
    v[points - 1] = hi;
    v
}

/// Evenly spaced grid from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inversion_examples() {
        let flat = ECurve::monotone(vec![0.1, 0.2, 0.3], vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(invert_ecurve(&flat, &[0.5]).unwrap().margins, vec![f64::INFINITY]);
        let c = ECurve::monotone(vec![0.1, 0.2, 0.3], vec![0.5, 2.0, 20.0]).unwrap();
        assert_eq!(invert_ecurve(&c, &[0.05]).unwrap().margins, vec![0.3]);
        assert!(invert_ecurve(&c, &[0.0]).is_err());
        assert!(invert_ecurve(&c, &[1.5]).is_err());
    }

    #[test]
    fn from_equivalence_examples() {
        let eq = EquivalenceCurve::new(vec![0.01, 0.04, 0.05, 0.5, 1.0], vec![f64::INFINITY, f64::INFINITY, 0.4, 0.4, 0.4])
            .unwrap();
        let c = curve_from_equivalence(&eq, &[0.3, 0.5]).unwrap();
        assert_eq!(c.values, vec![0.0, 20.0]);
        let none = EquivalenceCurve::new(vec![0.1, 0.5], vec![f64::INFINITY, f64::INFINITY]).unwrap();
        assert_eq!(curve_from_equivalence(&none, &[0.1, 0.2]).unwrap().values, vec![0.0, 0.0]);
    }

    #[test]
    fn three_point_round_trip() {
        let c = ECurve::monotone(vec![0.1, 0.2, 0.3], vec![0.5, 2.0, 20.0]).unwrap();
        let levels = [0.05, 0.5, 1.0];
        let back = curve_from_equivalence(&invert_ecurve(&c, &levels).unwrap(), &c.margins).unwrap();
        // 0.5 is below every 1/α and drops to zero.
        assert_eq!(back.values, vec![0.0, 2.0, 20.0]);
    }

    #[test]
    fn envelope_examples() {
        let c = ECurve::new(vec![0.0, 1.0, 2.0], vec![3.0, 1.0, 5.0]).unwrap();
        let e = right_lower_envelope(&c);
        assert_eq!(e.values, vec![1.0, 1.0, 5.0]);
        assert_eq!(right_lower_envelope(&e), e);
    }

    #[test]
    fn merge_examples() {
        let c1 = ECurve::monotone(vec![0.1, 0.2, 0.3], vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(merge_average(&c1, &c1, 0.3).unwrap(), c1);
        let other = ECurve::monotone(vec![0.1, 0.2, 0.3], vec![7.0, 8.0, f64::INFINITY]).unwrap();
        assert_eq!(merge_average(&c1, &other, 1.0).unwrap(), c1);
        assert!(merge_average(&c1, &c1, 1.1).is_err());
        let ones = ECurve::monotone(vec![0.1, 0.2, 0.3], vec![1.0; 3]).unwrap();
        assert_eq!(merge_product(&c1, &ones), c1);
        assert_eq!(merge_product(&c1, &c1).values, vec![1.0, 4.0, 16.0]);
    }

    #[test]
    fn tests_from_curves() {
        let c = ECurve::monotone(vec![0.1, 0.2], vec![19.9, 25.0]).unwrap();
        assert_eq!(test_from_ecurve(&c, 0.2, 0.05).unwrap().outcome, 20.0);
        assert_eq!(test_from_ecurve(&c, 0.1, 0.05).unwrap().outcome, 0.0);
    }

    #[test]
    fn constant_surface_frontier() {
        let grid = linear_grid(-1.0, 1.0, 9);
        let s = MarginSurface::tabulate(grid.clone(), grid.clone(), |_, _| Ok(20.0)).unwrap();
        let f = margin_frontier(&s, 0.05).unwrap();
        // Tightest pairs are consecutive grid points.
        let expected: Vec<(f64, f64)> = grid.windows(2).map(|w| (w[0], w[1])).collect();
        assert_eq!(f.pairs, expected);
    }

    #[test]
    fn csv_and_json_round_trip() {
        let c = ECurve::monotone(vec![0.1, 0.2, 0.3], vec![0.0, 1.0 / 3.0, f64::INFINITY]).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "margin,e_value\n0.1,0\n0.2,0.333333333333\n0.3,inf\n");
        let back = ECurve::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.values[2], f64::INFINITY);
        let json = serde_json::to_string(&c).unwrap();
        let back: ECurve = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn sig12_formatting() {
        assert_eq!(format_sig12(1.0), "1");
        assert_eq!(format_sig12(0.1 + 0.2), "0.3");
        assert_eq!(format_sig12(123456.7890123456), "123456.789012");
        assert_eq!(format_sig12(-2.5e-20), "-2.5e-20");
        assert_eq!(format_sig12(1.0 / 3.0 * 1e20), "3.33333333333e19");
    }
}
