use finsler_core::classify::{classify, implication_audit, AuditStatus, SpecialClass, Verdict};
use finsler_core::dsl::parse_model;
use finsler_core::fixtures;
use finsler_core::SamplePoint;
use proptest::prelude::*;

const TOL: f64 = 1e-7;

fn grid(m: &finsler_core::dsl::ModelSpec) -> Vec<SamplePoint> {
    m.domain.grid(2)
}

#[test]
fn flat_plane() {
    let f0 = fixtures::f0();
    let c = classify(&f0, &grid(&f0), TOL).unwrap();
    assert_eq!(c.get(SpecialClass::Riemannian).residual, 0.0);
    for class in [SpecialClass::Riemannian, SpecialClass::Berwald, SpecialClass::Landsberg, SpecialClass::LocallyMinkowskian] {
        assert!(c.holds(class), "{class}");
    }
    // defined only from dimension 3 on
    assert_eq!(c.verdict(SpecialClass::HIsotropic), Verdict::Inconclusive);

    let f0_3d = fixtures::load(fixtures::F0_3D);
    let c = classify(&f0_3d, &grid(&f0_3d), TOL).unwrap();
    assert!(c.holds(SpecialClass::HIsotropic));
    let k0 = c.fits["h-isotropic: k0"];
    assert!(k0.min.abs() < 1e-12 && k0.max.abs() < 1e-12);
}

#[test]
fn randers_plane() {
    let f2 = fixtures::f2();
    let c = classify(&f2, &grid(&f2), TOL).unwrap();
    assert_eq!(c.verdict(SpecialClass::Riemannian), Verdict::Fails);
    assert!(c.get(SpecialClass::Riemannian).residual > 1e-3);
    // every two-dimensional space is C2-like, since C_ijk is a multiple of m_i m_j m_k
    assert!(c.holds(SpecialClass::C2Like));
    // below its dimension bound the class is inconclusive, but the residual is still computed
    assert_eq!(c.verdict(SpecialClass::CReducible), Verdict::Inconclusive);
    assert!(c.get(SpecialClass::CReducible).residual < TOL);
    let mt = c.fits["semi-c-reducible: mu + tau - 1"];
    assert!(mt.min.abs().max(mt.max.abs()) < TOL);
}

#[test]
fn randers_space() {
    let m = fixtures::load(fixtures::F2_3D);
    let c = classify(&m, &grid(&m), TOL).unwrap();
    assert!(c.holds(SpecialClass::CReducible), "{:?}", c.get(SpecialClass::CReducible));
    assert!(c.holds(SpecialClass::SemiCReducible));
    assert!(c.holds(SpecialClass::QuasiCReducible));
    assert_eq!(c.verdict(SpecialClass::C2Like), Verdict::Fails);
    assert_eq!(c.verdict(SpecialClass::Riemannian), Verdict::Fails);
    let mu = c.fits["semi-c-reducible: mu"];
    assert!((mu.min - 1.0).abs() < TOL && (mu.max - 1.0).abs() < TOL);
}

#[test]
fn sphere_has_constant_curvature_one() {
    let m = fixtures::by_name("sphere-3d").unwrap();
    let c = classify(&m, &grid(&m), TOL).unwrap();
    assert!(c.holds(SpecialClass::HIsotropic));
    assert!(c.holds(SpecialClass::ScalarCurvature));
    let k0 = c.fits["h-isotropic: k0"];
    assert!((k0.min - 1.0).abs() < 1e-9 && (k0.max - 1.0).abs() < 1e-9, "{k0:?}");
    assert!(!c.holds(SpecialClass::LocallyMinkowskian));
}

#[test]
fn curved_riemannian_cone_is_not_h_isotropic() {
    let m = fixtures::load(fixtures::RIEMANNIAN_CONE);
    let c = classify(&m, &grid(&m), TOL).unwrap();
    assert!(c.holds(SpecialClass::Riemannian));
    assert_eq!(c.verdict(SpecialClass::HIsotropic), Verdict::Fails);
}

#[test]
fn riemannian_implies_berwald_and_landsberg_on_every_fixture() {
    for name in fixtures::NAMES {
        let m = fixtures::by_name(name).unwrap();
        // a single sample on a reflection-symmetric slice can have C = 0 pointwise
        let c = classify(&m, &m.domain.grid(2), TOL).unwrap();
        if c.holds(SpecialClass::Riemannian) {
            assert!(c.holds(SpecialClass::Berwald) && c.holds(SpecialClass::Landsberg), "{name}");
        }
        for r in &c.classes {
            assert!(r.residual.is_finite(), "{name} {}", r.class);
            if m.dim < r.class.min_dim() {
                assert_eq!(r.verdict, Verdict::Inconclusive, "{name} {}", r.class);
            }
        }
    }
}

#[test]
fn verdicts_are_deterministic() {
    let m = fixtures::load(fixtures::F2X);
    let a = classify(&m, &grid(&m), TOL).unwrap();
    let b = classify(&m, &grid(&m), TOL).unwrap();
    assert_eq!(a, b);
}

#[test]
fn audit_on_flat_and_polar_fixtures() {
    for m in [fixtures::f0(), fixtures::f1()] {
        let a = implication_audit(&m, &grid(&m), TOL).unwrap();
        assert_eq!(a.status, AuditStatus::Audited);
        assert!(a.passed(), "{}: {:?}", m.name, a.report.failing().collect::<Vec<_>>());
        let c = a.classification.unwrap();
        for class in [SpecialClass::Berwald, SpecialClass::Landsberg, SpecialClass::Riemannian] {
            assert!(c.holds(class), "{} {class}", m.name);
        }
    }
}

#[test]
fn t_condition_at_zeta_reduces_on_the_finsler_cone() {
    let m = fixtures::load(fixtures::FINSLER_CONE);
    let a = implication_audit(&m, &grid(&m), TOL).unwrap();
    assert!(a.passed(), "{:?}", a.report.failing().collect::<Vec<_>>());
    assert!(a.report.check("t-condition at W = zeta reduces to l(zeta) T").unwrap().pass);
}

#[test]
fn randers_with_a_declared_field_skips_the_audit() {
    for zeta in ["(-x1, -x2)", "(x2, 1)", "(-x1, 0)"] {
        let src = fixtures::F2.replace("domain x in [-1, 1]", &format!("zeta = {zeta}\ndomain x in [-1, 1]"));
        let m = parse_model(&src).unwrap();
        let a = implication_audit(&m, &grid(&m), TOL).unwrap();
        assert_eq!(a.status, AuditStatus::NoConcurrentField, "{zeta}");
        assert!(!a.passed());
        assert!(a.report.notes.iter().any(|n| n.contains("no concurrent field")));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn verdicts_are_scale_invariant(lambda in 0.2f64..5.0) {
        let m = fixtures::load(fixtures::F2_3D);
        let base = m.domain.grid(2);
        let scaled: Vec<SamplePoint> = base.iter().map(|s| s.scaled(lambda)).collect();
        let a = classify(&m, &base, TOL).unwrap();
        let b = classify(&m, &scaled, TOL).unwrap();
        for (x, y) in a.classes.iter().zip(&b.classes) {
            prop_assert_eq!(x.verdict, y.verdict);
        }
    }
}
