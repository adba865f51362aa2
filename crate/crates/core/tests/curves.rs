use evequiv::curves::{
    curve_from_equivalence, invert_ecurve, linear_grid, log_levels, margin_frontier, merge_average, merge_product,
    right_lower_envelope, test_from_ecurve, ECurve, EquivalenceCurve, MarginSurface,
};
use evequiv::models::ParametricModel;
use evequiv::optimal::methods::{margin_surface, symmetric_ecurve, CurveMethod, MarginAlternative};
use proptest::prelude::*;

fn sorted_grid(raw: Vec<f64>) -> Vec<f64> {
    let mut g = raw;
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Strictly increasing margins with non-decreasing e-values drawn from a
/// set that includes 0, values below 1 and large values.
fn monotone_curve(max_len: usize) -> impl Strategy<Value = ECurve> {
    (2..max_len).prop_flat_map(|n| {
        (prop::collection::vec(0.0f64..2.0, n), prop::collection::vec(0u8..12, n)).prop_map(|(m, steps)| {
            let margins = sorted_grid(m);
            let table = [0.0, 0.0, 0.5, 1.0, 1.5, 2.0, 4.0, 10.0, 20.0, 33.0, 100.0, 1e3];
            let mut idx: Vec<u8> = steps.into_iter().take(margins.len()).collect();
            idx.sort();
            let values = idx.iter().map(|&k| table[k as usize]).collect();
            ECurve::new(margins, values).unwrap()
        })
    })
}

/// `min{Δ ∈ grid : ε_Δ ≥ e}`, with the curve extended as a step function.
fn tightest(curve: &ECurve, grid: &[f64], e: f64) -> f64 {
    grid.iter().copied().find(|&d| curve.value_at(d) >= e).unwrap_or(f64::INFINITY)
}

/// The levels at which a curve's margin can change, as reciprocal levels,
/// plus 0 (no requirement).
fn reciprocal_levels(curve: &ECurve) -> Vec<f64> {
    let mut v = curve.values.clone();
    v.push(0.0);
    sorted_grid(v)
}

const LEVELS: [f64; 9] = [0.001, 0.005, 0.01, 0.03, 0.05, 0.1, 0.25, 0.5, 1.0];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn envelope_is_suffix_minimum(values in prop::collection::vec(0.0f64..50.0, 100)) {
        let margins = linear_grid(0.01, 1.0, 100);
        let curve = ECurve::new(margins, values.clone()).unwrap();
        let env = right_lower_envelope(&curve);
        for i in 0..values.len() {
            let brute = values[i..].iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(env.values[i], brute);
        }
        prop_assert!(env.is_monotone());
        prop_assert_eq!(right_lower_envelope(&env), env);
    }

    #[test]
    fn duality_round_trip(curve in monotone_curve(40)) {
        let eq = invert_ecurve(&curve, &LEVELS).unwrap();
        let back = curve_from_equivalence(&eq, &curve.margins).unwrap();
        // Each value rounds down to the largest reciprocal level it reaches.
        for (i, &v) in curve.values.iter().enumerate() {
            let want = LEVELS.iter().map(|a| 1.0 / a).filter(|&r| r <= v).fold(0.0, f64::max);
            prop_assert_eq!(back.values[i], want);
        }
        // A curve already on the level steps is a fixed point.
        prop_assert_eq!(invert_ecurve(&back, &LEVELS).unwrap(), eq);
    }

    #[test]
    fn average_merge_matches_level_pair_search(c1 in monotone_curve(25), c2 in monotone_curve(25), w in 0.0f64..=1.0) {
        let merged = merge_average(&c1, &c2, w).unwrap();
        let levels = log_levels(0.002, 1.0, 40);
        let eq = invert_ecurve(&merged, &levels).unwrap();
        let (e1, e2) = (reciprocal_levels(&c1), reciprocal_levels(&c2));
        let union = sorted_grid(c1.margins.iter().chain(&c2.margins).copied().collect());
        for (k, &alpha) in levels.iter().enumerate() {
            // inf over w/α₁ + (1−w)/α₂ ≥ 1/α of max(Δ̂¹_{α₁}, Δ̂²_{α₂}).
            let mut best = f64::INFINITY;
            for &a in &e1 {
                for &b in &e2 {
                    if w * a + (1.0 - w) * b >= 1.0 / alpha * (1.0 - 1e-12) {
                        best = best.min(tightest(&c1, &union, a).max(tightest(&c2, &union, b)));
                    }
                }
            }
            prop_assert_eq!(eq.margins[k], best, "alpha {}", alpha);
        }
    }

    #[test]
    fn product_merge_matches_level_pair_search(c1 in monotone_curve(25), c2 in monotone_curve(25)) {
        let merged = merge_product(&c1, &c2);
        let levels = log_levels(0.002, 1.0, 40);
        let eq = invert_ecurve(&merged, &levels).unwrap();
        let (e1, e2) = (reciprocal_levels(&c1), reciprocal_levels(&c2));
        let union = sorted_grid(c1.margins.iter().chain(&c2.margins).copied().collect());
        for (k, &alpha) in levels.iter().enumerate() {
            // inf over α₁α₂ ≥ α of max(Δ̂¹_{α₁}, Δ̂²_{α₂}).
            let mut best = f64::INFINITY;
            for &a in &e1 {
                for &b in &e2 {
                    if a * b >= 1.0 / alpha * (1.0 - 1e-12) {
                        best = best.min(tightest(&c1, &union, a).max(tightest(&c2, &union, b)));
                    }
                }
            }
            prop_assert_eq!(eq.margins[k], best, "alpha {}", alpha);
        }
    }

    #[test]
    fn test_outcome_agrees_with_inversion(curve in monotone_curve(30), delta in 0.0f64..2.2, k in 0usize..8) {
        let alpha = LEVELS[k];
        let test = test_from_ecurve(&curve, delta, alpha).unwrap();
        let eq = invert_ecurve(&curve, &[alpha]).unwrap();
        prop_assert_eq!(test.rejects(), eq.margins[0] <= delta);
    }

    #[test]
    fn frontier_matches_pareto_filter(
        a in prop::collection::vec(0.0f64..3.0, 12),
        b in prop::collection::vec(0.0f64..3.0, 12),
    ) {
        let lower = linear_grid(-1.1, -0.0, 12);
        let upper = linear_grid(0.05, 1.15, 12);
        // v[i][j] grows as the lower margin decreases and the upper grows.
        let values: Vec<Vec<f64>> = (0..12)
            .map(|i| (0..12).map(|j| a[..=j].iter().sum::<f64>() + b[i..].iter().sum::<f64>()).collect())
            .collect();
        let surface = MarginSurface::new(lower.clone(), upper.clone(), values.clone()).unwrap();
        let alpha = 0.1;
        let front = margin_frontier(&surface, alpha).unwrap();
        let qualifying: Vec<(f64, f64)> = (0..12)
            .flat_map(|i| (0..12).map(move |j| (i, j)))
            .filter(|&(i, j)| lower[i] < upper[j] && values[i][j] >= 1.0 / alpha)
            .map(|(i, j)| (lower[i], upper[j]))
            .collect();
        let pareto: Vec<(f64, f64)> = qualifying
            .iter()
            .filter(|&&p| !qualifying.iter().any(|&q| q != p && q.0 >= p.0 && q.1 <= p.1))
            .copied()
            .collect();
        prop_assert_eq!(front.pairs, pareto);
    }
}

#[test]
fn equivalence_curves_are_non_increasing() {
    let model = ParametricModel::z_test(1.0, 40).unwrap();
    let deltas = linear_grid(0.01, 1.0, 100);
    let levels = log_levels(0.001, 1.0, 200);
    for method in [CurveMethod::LogOptimal, CurveMethod::TostE, CurveMethod::UniversalInference] {
        let curve = symmetric_ecurve(&model, 0.05, &deltas, &MarginAlternative::DiracMidpoint, method, 50).unwrap();
        let eq = invert_ecurve(&curve, &levels).unwrap();
        assert!(eq.margins.windows(2).all(|w| w[0] >= w[1]), "{method:?}");
        // Weak evidence never certifies the smallest margins.
        assert!(eq.margins[0] > 0.2, "{method:?}: {}", eq.margins[0]);
    }
}

#[test]
fn symmetric_surface_gives_mirrored_frontier() {
    let model = ParametricModel::z_test(1.0, 40).unwrap();
    let upper = linear_grid(0.05, 0.8, 16);
    let lower: Vec<f64> = upper.iter().rev().map(|u| -u).collect();
    let surface =
        margin_surface(&model, 0.0, lower, upper, &MarginAlternative::DiracMidpoint, CurveMethod::LogOptimal, 50).unwrap();
    let front = margin_frontier(&surface, 0.05).unwrap();
    assert!(!front.pairs.is_empty());
    let mut mirrored: Vec<(f64, f64)> = front.pairs.iter().map(|&(l, u)| (-u, -l)).collect();
    mirrored.sort_by(|p, q| p.0.total_cmp(&q.0));
    for (p, q) in front.pairs.iter().zip(&mirrored) {
        assert!((p.0 - q.0).abs() < 1e-12 && (p.1 - q.1).abs() < 1e-12, "{p:?} vs {q:?}");
    }
}

#[test]
fn fixed_test_representation_round_trips() {
    let eq = EquivalenceCurve::new(vec![0.01, 0.05, 0.5, 1.0], vec![f64::INFINITY, 0.4, 0.4, 0.4]).unwrap();
    let curve = curve_from_equivalence(&eq, &[0.3, 0.5]).unwrap();
    assert_eq!(curve.values, vec![0.0, 20.0]);
    let none = EquivalenceCurve::new(vec![0.05, 1.0], vec![f64::INFINITY; 2]).unwrap();
    assert!(curve_from_equivalence(&none, &[0.1, 1.0]).unwrap().values.iter().all(|&v| v == 0.0));
}

#[test]
fn csv_files_round_trip_infinities() {
    let dir = std::env::temp_dir().join(format!("evequiv-curves-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let eq = EquivalenceCurve::new(vec![0.01, 0.5], vec![f64::INFINITY, 0.25]).unwrap();
    let path = dir.join("eq.csv");
    eq.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, "alpha,margin_hat\n0.01,inf\n0.5,0.25\n");
    assert_eq!(EquivalenceCurve::read_csv(std::fs::File::open(&path).unwrap()).unwrap(), eq);
    std::fs::remove_dir_all(&dir).unwrap();
}
