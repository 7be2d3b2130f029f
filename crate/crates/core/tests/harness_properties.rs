use polyfv_core::harness::{self, builtin_case, rate_regression, run_study, HarnessError, MeshFamily, Scheme};
use polyfv_core::meshgen::PointPlacement;
use proptest::prelude::*;

proptest! {
    #[test]
    fn regression_recovers_power_laws(c in 0.01..100.0f64, p in -1.0..4.0f64, h0 in 0.05..1.0f64, n in 2usize..7) {
        let pts: Vec<(f64, f64)> = (0..n).map(|i| {
            let h = h0 / 2f64.powi(i as i32);
            (h, c * h.powf(p))
        }).collect();
        prop_assert!((rate_regression(&pts).unwrap() - p).abs() < 1e-9);
    }

    #[test]
    fn regression_is_scale_invariant(c in 0.01..100.0f64, e in proptest::collection::vec(0.001..1.0f64, 3..6)) {
        let pts: Vec<(f64, f64)> = e.iter().enumerate().map(|(i, &v)| (1.0 / (i + 2) as f64, v)).collect();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(h, v)| (h, c * v)).collect();
        prop_assert!((rate_regression(&pts).unwrap() - rate_regression(&scaled).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn regression_errors() {
    assert_eq!(rate_regression(&[(0.5, 1.0)]), Err(HarnessError::InsufficientPoints(1)));
    assert_eq!(rate_regression(&[(0.5, 1.0), (0.25, 0.0)]), Err(HarnessError::NonPositiveValue(1)));
    let noisy: Vec<(f64, f64)> = [8.0, 16.0, 32.0].iter().map(|n: &f64| (1.0 / n, 1.0 / (n * n) + 1e-12)).collect();
    assert!((rate_regression(&noisy).unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn errors_decrease_for_every_scheme() {
    let case = builtin_case("paper-6").unwrap();
    let runs = [
        (MeshFamily::Cartesian(PointPlacement::CheckerboardShift(0.25)), Scheme::Hmm, vec![4, 8, 16]),
        (MeshFamily::Cartesian(PointPlacement::Centroid), Scheme::HmmModified, vec![4, 8, 16]),
        (MeshFamily::triangulation("symmetry").unwrap(), Scheme::Hmm, vec![1, 2, 4]),
        (MeshFamily::triangulation("translation").unwrap(), Scheme::Tpfa, vec![1, 2, 4]),
    ];
    for (fam, scheme, ns) in runs {
        let study = run_study(&fam, scheme, &ns, &case, 1.0, true).unwrap();
        assert!(!study.audit_failed());
        let reports = study.reports();
        for w in reports.windows(2) {
            assert!(w[1].err_u < w[0].err_u, "{} {}", fam.name(), scheme.name());
            if !w[0].err_gradu.is_nan() {
                assert!(w[1].err_gradu < w[0].err_gradu);
                assert!(w[1].err_ustar < w[0].err_ustar);
            }
        }
    }
}

#[test]
fn studies_are_reproducible() {
    let case = builtin_case("sine").unwrap();
    let fam = MeshFamily::Cartesian(PointPlacement::CheckerboardShift(0.2));
    let a = run_study(&fam, Scheme::Hmm, &[4, 8], &case, 0.7, false).unwrap();
    let b = run_study(&fam, Scheme::Hmm, &[4, 8], &case, 0.7, false).unwrap();
    assert_eq!(a.reports(), b.reports());
    assert!(harness::builtin_case("nope").is_err());
}
