use finsler_core::dsl::{parse_expr, ModelSpec};
use finsler_core::fixtures;
use finsler_core::jets::{fd_crosscheck, jet_evaluate};
use finsler_core::{Budget, FinslerError, MultiIndex, SamplePoint};
use proptest::prelude::*;

fn field(src: &str) -> ModelSpec {
    ModelSpec::from_expr("f", 2, parse_expr(src).unwrap())
}

/// Central differences in one x-coordinate with one Richardson step.
fn richardson_dx(f: &ModelSpec, s: &SamplePoint, k: usize) -> f64 {
    use finsler_core::ScalarField;
    let d = |h: f64| {
        let (mut xp, mut xm) = (s.x.clone(), s.x.clone());
        xp[k] += h;
        xm[k] -= h;
        (f.eval(&xp, &s.y).unwrap() - f.eval(&xm, &s.y).unwrap()) / (2.0 * h)
    };
    let h = 1e-3;
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

#[test]
fn quadratic_second_derivative_is_two() {
    let f = field("y1^2 + y2^2");
    for s in [SamplePoint::new([1.0, 0.0], [1.0, 1.0]), SamplePoint::new([-0.3, 2.0], [0.5, -1.5])] {
        let j = jet_evaluate(&f, &s, Budget::new(0, 2)).unwrap();
        assert_eq!(j.partial(&MultiIndex::from_vars(2, &[], &[0, 0])).unwrap(), 2.0);
    }
}

#[test]
fn zero_index_is_the_value() {
    let f = field("y1^2 + y2^2");
    let j = jet_evaluate(&f, &SamplePoint::new([1.0, 0.0], [1.0, 1.0]), Budget::DEFAULT).unwrap();
    assert_eq!(j.partial(&MultiIndex::zero(2)).unwrap(), 2.0);
    assert_eq!(j.value(), 2.0);
}

#[test]
fn polar_x_derivative_matches_richardson_oracle() {
    let f = fixtures::f1();
    let s = SamplePoint::new([2.0, 0.5], [1.0, 1.0]);
    let oracle = richardson_dx(&f, &s, 0);
    assert!((oracle - 4.0).abs() < 1e-8, "oracle {oracle}");
    let j = jet_evaluate(&f, &s, Budget::new(1, 0)).unwrap();
    let ad = j.partial(&MultiIndex::from_vars(2, &[0], &[])).unwrap();
    assert!((ad - 4.0).abs() < 1e-12, "ad {ad}");
}

#[test]
fn fd_crosscheck_examples() {
    let s0 = SamplePoint::new([1.0, 0.0], [1.0, 1.0]);
    let r = fd_crosscheck(&fixtures::f0(), &s0, &MultiIndex::from_vars(2, &[], &[0, 0])).unwrap();
    assert!(r.rel_residual < 1e-8, "{r:?}");

    let s2 = SamplePoint::new([2.0, 0.5], [1.0, 1.0]);
    let r = fd_crosscheck(&fixtures::f1(), &s2, &MultiIndex::from_vars(2, &[0], &[1])).unwrap();
    assert!(r.rel_residual < 1e-6, "{r:?}");
    // d^2/dx1 dy2 of x1^2 y2^2 is 4 x1 y2
    assert!((r.ad_value - 8.0).abs() < 1e-12);

    let s = SamplePoint::new([0.0, 0.0], [1.0, 0.0]);
    let r = fd_crosscheck(&fixtures::f2(), &s, &MultiIndex::from_vars(2, &[], &[0, 0, 0])).unwrap();
    assert!(r.rel_residual < 1e-5, "{r:?}");
}

#[test]
fn budget_overflow_is_an_error() {
    let f = fixtures::f2();
    let s = SamplePoint::new([0.0, 0.0], [1.0, 0.5]);
    assert!(matches!(jet_evaluate(&f, &s, Budget::new(4, 6)), Err(FinslerError::BudgetExceeded { .. })));
    let j = jet_evaluate(&f, &s, Budget::new(1, 2)).unwrap();
    let e = j.partial(&MultiIndex::from_vars(2, &[], &[0, 1, 1])).unwrap_err();
    assert!(matches!(e, FinslerError::BudgetExceeded { .. }));
}

#[test]
fn mixed_partials_ignore_order() {
    let f = fixtures::load(fixtures::F2X);
    let s = SamplePoint::new([0.3, -0.4], [1.2, 0.7]);
    let j = jet_evaluate(&f, &s, Budget::new(2, 3)).unwrap();
    let a = j.partial(&MultiIndex::from_vars(2, &[0, 1], &[1, 0, 1])).unwrap();
    let b = j.partial(&MultiIndex::from_vars(2, &[1, 0], &[1, 1, 0])).unwrap();
    assert_eq!(a, b);
}

fn coord() -> impl Strategy<Value = f64> {
    -1.0f64..1.0
}

fn dir() -> impl Strategy<Value = f64> {
    prop_oneof![0.5f64..2.0, -2.0f64..-0.5]
}

proptest! {
    #[test]
    fn linearity(a in -3.0f64..3.0, b in -3.0f64..3.0, x1 in coord(), x2 in coord(), y1 in dir(), y2 in dir()) {
        let f = field("sqrt(y1^2 + y2^2)*exp(x1)");
        let g = field("x2^2*y1*y2 + sin(x1)*y2^2");
        let combo = field(&format!(
            "({a:?})*(sqrt(y1^2 + y2^2)*exp(x1)) + ({b:?})*(x2^2*y1*y2 + sin(x1)*y2^2)"
        ));
        let s = SamplePoint::new([x1, x2], [y1, y2]);
        let bud = Budget::new(2, 3);
        let lhs = jet_evaluate(&combo, &s, bud).unwrap();
        let rhs = &jet_evaluate(&f, &s, bud).unwrap().scale(a) + &jet_evaluate(&g, &s, bud).unwrap().scale(b);
        let scale = lhs.max_abs().max(1.0);
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-12 * scale);
    }

    #[test]
    fn euler_identity_for_two_homogeneous_fields(x1 in coord(), x2 in coord(), y1 in 0.5f64..2.0, y2 in -1.0f64..1.0) {
        for f in [fixtures::f2(), fixtures::load(fixtures::F2X), fixtures::f1()] {
            let s = SamplePoint::new([x1 + 2.0, x2], [y1, y2]);
            let j = jet_evaluate(&f, &s, Budget::new(0, 1)).unwrap();
            let euler: f64 = (0..2).map(|k| s.y[k] * j.partial(&MultiIndex::from_vars(2, &[], &[k])).unwrap()).sum();
            prop_assert!((euler - 2.0 * j.value()).abs() <= 1e-10 * j.value().abs());
        }
    }
}
