use evequiv::distributions::{normal_cdf, DistSpec};

// Reference values from 40-digit evaluations: the noncentral t CDF as a
// chi-square mixture of normal CDFs, the noncentral F CDF as a Poisson
// mixture of regularized incomplete beta functions, and the scaled
// noncentral chi-square via its two-normal representation.

#[test]
fn noncentral_t_cdf_reference_values() {
    let cases = [
        (0.7, 5.0, 1.0, 0.371_855_633_985_335_9),
        (-1.5, 5.0, 1.0, 0.013_170_072_496_862_75),
        (3.1, 19.0, 2.7, 0.625_273_804_312_095_2),
        (2.0, 9.0, -3.5, 0.999_999_731_648_470_2),
        (8.0, 2.5, 6.0, 0.607_080_589_461_949_5),
    ];
    for (x, dof, ncp, want) in cases {
        let got = DistSpec::NoncentralT { dof, ncp }.cdf(x).unwrap();
        assert!((got - want).abs() < 1e-10 * want.max(1e-2), "t({dof}, {ncp}) at {x}: {got} vs {want}");
    }
}

#[test]
fn noncentral_f_cdf_reference_values() {
    let cases = [
        (1.0, 1.0, 9.0, 2.5, 0.270_198_016_620_604_07),
        (3.0, 1.0, 49.0, 12.5, 0.037_120_332_332_518_52),
        (0.4, 3.0, 10.0, 1.0, 0.168_581_691_366_568_37),
        (0.05, 1.0, 4.0, 7.0, 0.005_383_022_459_642_030_3),
    ];
    for (x, dof1, dof2, ncp, want) in cases {
        let got = DistSpec::NoncentralF { dof1, dof2, ncp }.cdf(x).unwrap();
        assert!(((got - want) / want).abs() < 1e-9, "F({dof1}, {dof2}, {ncp}) at {x}: {got} vs {want}");
    }
}

#[test]
fn scaled_chisq_reference_values() {
    let cases = [
        (0.3, 0.1, 2.0, 1.103_083_586_910_184_7, 0.623_868_949_278_209_7),
        (0.01, 0.025, 0.5, 17.724_016_659_198_348, 0.380_052_256_930_423_6),
        (2.0, 0.5, 9.0, 0.120_986_105_619_329_04, 0.158_654_967_279_885_17),
    ];
    for (x, scale, ncp, pdf, cdf) in cases {
        let d = DistSpec::ScaledNoncentralChiSq1 { scale, ncp };
        let p = d.pdf(x).unwrap();
        let c = d.cdf(x).unwrap();
        assert!(((p - pdf) / pdf).abs() < 1e-10, "pdf {p} vs {pdf}");
        assert!(((c - cdf) / cdf).abs() < 1e-10, "cdf {c} vs {cdf}");
    }
}

#[test]
fn cdf_is_the_integral_of_the_density() {
    // Trapezoid on a fine grid against the CDF increment.
    let specs = [
        DistSpec::NoncentralT { dof: 7.0, ncp: 1.2 },
        DistSpec::NoncentralF { dof1: 1.0, dof2: 19.0, ncp: 4.0 },
        DistSpec::ScaledNoncentralChiSq1 { scale: 0.05, ncp: 3.0 },
    ];
    for d in specs {
        let (a, b) = (0.2, 1.7);
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut s = 0.5 * (d.pdf(a).unwrap() + d.pdf(b).unwrap());
        for i in 1..n {
            s += d.pdf(a + i as f64 * h).unwrap();
        }
        let want = d.cdf(b).unwrap() - d.cdf(a).unwrap();
        assert!((s * h - want).abs() < 1e-7, "{d:?}: {} vs {want}", s * h);
    }
}

#[test]
fn normal_cdf_tails() {
    assert_eq!(normal_cdf(0.0), 0.5);
    let q = normal_cdf(-1.959_963_984_540_054);
    assert!((q - 0.025).abs() < 1e-15, "{q}");
    assert!((normal_cdf(-10.0) / 7.619_853_024_160_527e-24 - 1.0).abs() < 1e-12);
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(DistSpec::Normal { mean: 0.0, variance: 0.0 }.validate().is_err());
    assert!(DistSpec::NoncentralT { dof: -1.0, ncp: 0.0 }.log_pdf(0.0).is_err());
    assert!(DistSpec::NoncentralF { dof1: 1.0, dof2: 5.0, ncp: f64::NAN }.cdf(1.0).is_err());
}
