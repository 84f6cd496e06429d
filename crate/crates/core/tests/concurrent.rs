use finsler_core::concurrent::{identity_suite, scalars_at, verify_concurrent, HORIZONTAL_CHECK, VERTICAL_CHECK};
use finsler_core::dsl::parse_model;
use finsler_core::fixtures;
use finsler_core::{FinslerError, SamplePoint};
use proptest::prelude::*;

#[test]
fn flat_and_polar_fields_are_concurrent() {
    for m in [fixtures::f0(), fixtures::f1(), fixtures::load(fixtures::F0_3D), fixtures::load(fixtures::F1_3D)] {
        let r = verify_concurrent(&m, &m.domain.grid(2), 1e-10).unwrap();
        assert!(r.passed(), "{}: {:?}", m.name, r.checks);
    }
}

#[test]
fn sign_flipped_field_fails_by_two_root_two() {
    let m = fixtures::load(fixtures::F0_FLIP);
    let r = verify_concurrent(&m, &m.domain.grid(2), 1e-8).unwrap();
    let h = r.check(HORIZONTAL_CHECK).unwrap();
    assert!(!h.pass);
    assert!((h.residual - 2.0 * 2f64.sqrt()).abs() < 1e-12, "{}", h.residual);
    assert!(r.check(VERTICAL_CHECK).unwrap().pass);
}

#[test]
fn scalars_at_reference_points() {
    let sc = scalars_at(&fixtures::f0(), &SamplePoint::new([1.0, 0.0], [1.0, 1.0])).unwrap();
    assert_eq!((sc.b, sc.p2), (-1.0, 1.0));
    assert_eq!(sc.alpha, vec![-1.0, 0.0]);
    let sc = scalars_at(&fixtures::f1(), &SamplePoint::new([2.0, 0.5], [1.0, 1.0])).unwrap();
    assert_eq!((sc.b, sc.p2), (-2.0, 4.0));
}

#[test]
fn vanishing_b_is_an_error() {
    let e = scalars_at(&fixtures::f0(), &SamplePoint::new([1.0, 0.0], [0.0, 1.0])).unwrap_err();
    assert!(matches!(e, FinslerError::DegenerateB { .. }));
    assert!(e.to_string().contains("non-zero"));
}

#[test]
fn identity_suite_passes_on_concurrent_fixtures() {
    for (m, tol) in [(fixtures::f0(), 1e-10), (fixtures::f1(), 1e-9), (fixtures::load(fixtures::F1_3D), 1e-8)] {
        let r = identity_suite(&m, &m.domain.grid(2), tol).unwrap();
        assert!(r.checks.len() > 20);
        assert!(r.passed(), "{}: {:?}", m.name, r.failing().map(|c| (&c.name, c.residual)).collect::<Vec<_>>());
    }
}

#[test]
fn constant_shift_of_the_field_stays_concurrent() {
    // nabla zeta is unchanged by adding a constant in flat coordinates
    let m = parse_model(&fixtures::F0.replace("zeta = (-x1, -x2)", "zeta = (-x1, -x2 + 0.1)")).unwrap();
    assert!(verify_concurrent(&m, &m.domain.grid(2), 1e-10).unwrap().passed());
}

#[test]
fn defect_is_pinpointed() {
    let m = fixtures::load(fixtures::F0_DEFECT);
    let samples = m.domain.grid(2);
    let r = verify_concurrent(&m, &samples, 1e-8).unwrap();
    let failing: Vec<&str> = r.failing().map(|c| c.name.as_str()).collect();
    assert_eq!(failing, [HORIZONTAL_CHECK]);
    let suite = identity_suite(&m, &samples, 1e-8).unwrap();
    let d_h_b = suite.check("d_h B = -g(eta, .)").unwrap();
    assert!(!d_h_b.pass);
    assert!(d_h_b.residual > 1e-2, "{}", d_h_b.residual);
    assert!(suite.check("d_J B = alpha").unwrap().pass);
}

fn point() -> impl Strategy<Value = SamplePoint> {
    (1.0f64..3.0, -1.0f64..1.0, 0.5f64..2.0, 0.5f64..2.0).prop_map(|(a, b, c, d)| SamplePoint::new([a, b], [c, d]))
}

proptest! {
    #[test]
    fn mbar_is_orthogonal_to_eta(s in point()) {
        for m in [fixtures::f0(), fixtures::f1()] {
            let sc = scalars_at(&m, &s).unwrap();
            prop_assert!(sc.g_mbar_eta.abs() < 1e-12 * sc.p2.max(1.0) * m.l2(&s).unwrap());
            prop_assert!((sc.g_mbar_zeta - sc.g_mbar_mbar).abs() < 1e-12 * sc.p2.max(1.0));
            prop_assert!(sc.hbar_zeta_zeta >= -1e-12);
        }
    }

    #[test]
    fn adding_samples_never_lowers_a_residual(extra in point()) {
        let m = fixtures::load(fixtures::F0_DEFECT);
        let base = m.domain.grid(2);
        let mut more = base.clone();
        more.push(extra);
        let a = verify_concurrent(&m, &base, 1e-8).unwrap();
        let b = verify_concurrent(&m, &more, 1e-8).unwrap();
        for c in &a.checks {
            let c2 = b.check(&c.name).unwrap();
            prop_assert!(c2.residual >= c.residual);
            prop_assert!(c.pass || !c2.pass);
        }
    }
}
