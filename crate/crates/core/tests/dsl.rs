use finsler_core::dsl::{builtin, parse_expr, parse_model, BuiltinFamily, Expr, Func};
use finsler_core::fixtures;
use finsler_core::{FinslerError, SamplePoint};
use proptest::prelude::*;

#[test]
fn parses_the_flat_fixture_on_one_line() {
    let m = parse_model("dim 2; L2 = y1^2 + y2^2; zeta = (-x1, -x2); domain x in [-2,2] y in [0.5,2]").unwrap();
    assert_eq!(m.dim, 2);
    let s = SamplePoint::new([1.0, 0.0], [1.0, 1.0]);
    assert_eq!(m.l2(&s).unwrap(), 2.0);
    assert_eq!(m.zeta_at(&s.x).unwrap().unwrap(), vec![-1.0, 0.0]);
    assert_eq!(m.domain.x[0].lo, -2.0);
    assert_eq!(m.domain.y[1].lo, 0.5);
}

#[test]
fn parses_polar_fixture_with_per_coordinate_ranges() {
    let m = parse_model("dim 2; L2 = y1^2 + x1^2*y2^2; zeta = (-x1, 0); domain x1 in [1,3] x2 in [-1,1] y in [0.5,2]")
        .unwrap();
    let s = SamplePoint::new([2.0, 0.5], [1.0, 1.0]);
    assert_eq!(m.l2(&s).unwrap(), 5.0);
    assert_eq!(m.l2(&s.scaled(3.0)).unwrap(), 45.0);
    assert_eq!((m.domain.x[0].lo, m.domain.x[0].hi), (1.0, 3.0));
    assert_eq!((m.domain.x[1].lo, m.domain.x[1].hi), (-1.0, 1.0));
}

#[test]
fn out_of_range_variable_is_rejected() {
    let e = parse_model("dim 2; L2 = y3^2").unwrap_err();
    assert!(matches!(e, FinslerError::VariableOutOfRange { .. }));
    assert!(e.to_string().contains("variable index out of range"));
}

#[test]
fn zeta_must_not_depend_on_y() {
    let e = parse_model("dim 2; L2 = y1^2 + y2^2; zeta = (-x1, y2)").unwrap_err();
    assert!(matches!(e, FinslerError::ZetaDependsOnY { component: 2, .. }), "{e}");
}

#[test]
fn non_homogeneous_lagrangian_is_rejected() {
    let e = parse_model("dim 2; L2 = y1^2 + y2^2 + y1").unwrap_err();
    assert!(matches!(e, FinslerError::NotHomogeneous { .. }), "{e}");
}

#[test]
fn builtin_families() {
    let e = builtin(&BuiltinFamily::Euclidean { dim: 2 }).unwrap();
    assert_eq!(e.l2(&SamplePoint::new([0.0, 0.0], [3.0, 4.0])).unwrap(), 25.0);
    let eye = || vec![vec![Expr::num(1.0), Expr::num(0.0)], vec![Expr::num(0.0), Expr::num(1.0)]];
    let r = builtin(&BuiltinFamily::Randers { a: eye(), b: vec![Expr::num(0.1), Expr::num(0.0)] }).unwrap();
    let v = r.l2(&SamplePoint::new([0.0, 0.0], [1.0, 0.0])).unwrap();
    assert!((v - 1.21).abs() < 1e-15);
    let bad = builtin(&BuiltinFamily::Randers { a: eye(), b: vec![Expr::num(1.5), Expr::num(0.0)] });
    assert!(matches!(bad, Err(FinslerError::Positivity(_))));
}

#[test]
fn every_fixture_parses_and_prints_back() {
    for name in fixtures::NAMES {
        let m = fixtures::by_name(name).unwrap();
        let again = parse_model(&m.to_source().unwrap()).unwrap();
        let s = m.domain.hi_corner();
        assert_eq!(m.l2(&s).unwrap().to_bits(), again.l2(&s).unwrap().to_bits(), "{name}");
        assert_eq!(m.domain, again.domain, "{name}");
    }
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-5.0f64..5.0).prop_map(Expr::num),
        (0usize..2).prop_map(Expr::x),
        (0usize..2).prop_map(Expr::y),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        let func = prop_oneof![Just(Func::Sqrt), Just(Func::Exp), Just(Func::Ln), Just(Func::Sin), Just(Func::Cos)];
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::div(a, b)),
            (inner.clone(), 1u8..4).prop_map(|(a, k)| Expr::pow(a, Expr::num(k as f64))),
            (func, inner.clone()).prop_map(|(f, a)| Expr::call(f, a)),
            inner.prop_map(Expr::neg),
        ]
    })
}

proptest! {
    #[test]
    fn print_then_parse_evaluates_identically(
        e in expr(),
        pts in proptest::collection::vec(((-2.0f64..2.0, -2.0f64..2.0), (0.5f64..2.0, -2.0f64..2.0)), 100),
    ) {
        let back = parse_expr(&e.to_string()).unwrap();
        for ((x1, x2), (y1, y2)) in pts {
            let (x, y) = ([x1, x2], [y1, y2]);
            match (e.eval(&x, &y), back.eval(&x, &y)) {
                (Ok(a), Ok(b)) => prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn parsed_fixtures_are_two_homogeneous(lambda in 0.1f64..10.0, t in 0.0f64..1.0) {
        for name in fixtures::NAMES {
            let m = fixtures::by_name(name).unwrap();
            let (lo, hi) = (m.domain.lo_corner(), m.domain.hi_corner());
            let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect::<Vec<_>>();
            let s = SamplePoint::new(mix(&lo.x, &hi.x), mix(&lo.y, &hi.y));
            let base = m.l2(&s).unwrap();
            let scaled = m.l2(&s.scaled(lambda)).unwrap();
            prop_assert!((scaled - lambda * lambda * base).abs() <= 1e-10 * lambda * lambda * base, "{}", name);
        }
    }
}
