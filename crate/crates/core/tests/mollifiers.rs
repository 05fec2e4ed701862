use std::sync::Arc;

use genvar::mollifiers::K_MAX;
use genvar::{Error, Mollifier, MollifierFamily, MollifierKind};
use proptest::prelude::*;

fn family(kind: MollifierKind, q_max: usize) -> Arc<MollifierFamily> {
    Arc::new(MollifierFamily::build(kind, q_max).unwrap())
}

#[test]
fn gaussian_coefficients() {
    let f = family(MollifierKind::Gaussian { sigma: 1.0 }, 8);
    let a = f.alphas();
    assert_eq!(a[0], 1.0);
    for (n, want) in [(2, -0.5), (4, 0.125), (6, -1.0 / 48.0)] {
        assert!((a[n] - want).abs() < 1e-10, "α_{n} = {}", a[n]);
    }
    for n in [1, 3, 5, 7] {
        assert_eq!(a[n], 0.0);
    }
}

#[test]
fn gaussian_alpha2_scales_with_sigma() {
    let f = family(MollifierKind::Gaussian { sigma: 0.5 }, 2);
    assert!((f.alphas()[2] + 0.125).abs() < 1e-10);
}

#[test]
fn bump_coefficients() {
    let f = family(MollifierKind::Bump { p: 2 }, 4);
    assert!((f.alphas()[2] + 0.07905681811965157).abs() < 1e-10);
    assert!((f.alphas()[4] - 0.004042404740618485).abs() < 1e-10);
}

#[test]
fn odd_orders_repeat_even_ones() {
    let f = family(MollifierKind::Gaussian { sigma: 1.0 }, 3);
    let m2 = Mollifier::new(f.clone(), 2, 0.7).unwrap();
    let m3 = Mollifier::new(f, 3, 0.7).unwrap();
    for x in [-1.3, -0.2, 0.0, 0.4, 2.1] {
        assert_eq!(m2.eval(x), m3.eval(x));
    }
}

#[test]
fn point_values() {
    let c = Mollifier::from_kind(MollifierKind::CosineSquared, 1, 0.5).unwrap();
    assert!((c.eval(0.0) - 2.0).abs() < 1e-15);
    let g = Mollifier::from_kind(MollifierKind::Gaussian { sigma: 1.0 }, 0, 1.0).unwrap();
    assert!((g.eval(0.0) - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
    for m in [&c, &g] {
        assert!(m.eval_k(1, 0.0).unwrap().abs() < 1e-14);
    }
}

#[test]
fn derivative_order_limit() {
    let g = Mollifier::from_kind(MollifierKind::Gaussian { sigma: 1.0 }, 2, 0.5).unwrap();
    assert!(g.eval_k(K_MAX, 0.1).is_ok());
    assert!(matches!(g.eval_k(K_MAX + 1, 0.1), Err(Error::DerivativeOrder { .. })));
}

#[test]
fn invalid_parameters() {
    assert!(MollifierFamily::build(MollifierKind::Bump { p: 3 }, 2).is_err());
    assert!(MollifierFamily::build(MollifierKind::Gaussian { sigma: -1.0 }, 2).is_err());
    let f = family(MollifierKind::Gaussian { sigma: 1.0 }, 2);
    assert!(Mollifier::new(f.clone(), 3, 0.5).is_err());
    assert!(Mollifier::new(f.clone(), 2, 0.0).is_err());
    assert!(Mollifier::new(f, 2, 1.5).is_err());
}

#[test]
fn known_moments() {
    let g = Mollifier::from_kind(MollifierKind::Gaussian { sigma: 1.0 }, 1, 1.0).unwrap();
    let m = g.moments(2).unwrap();
    assert!((m[0] - 1.0).abs() < 1e-9 && (m[2] - 1.0).abs() < 1e-9);
    let g4 = Mollifier::from_kind(MollifierKind::Gaussian { sigma: 1.0 }, 4, 0.3).unwrap();
    assert!(g4.moments(3).unwrap()[3].abs() < 1e-9);
}

#[test]
fn bump_vanishes_outside_support() {
    let f = family(MollifierKind::Bump { p: 2 }, 6);
    for q in 0..=6 {
        let m = Mollifier::new(f.clone(), q, 1.0).unwrap();
        for x in [1.0, -1.0, 1.2, -3.0] {
            for k in 0..=K_MAX {
                assert_eq!(m.d(k, x), 0.0);
            }
        }
    }
}

#[test]
fn cdf_matches_quadrature() {
    let m = Mollifier::from_kind(MollifierKind::Bump { p: 2 }, 4, 0.4).unwrap();
    let x = 0.13;
    let direct = genvar::quadrature::adaptive(|y| m.eval(y), -0.4, x, 1e-13);
    assert!((m.cdf(x) - direct).abs() < 1e-10);
}

fn kinds() -> impl Strategy<Value = MollifierKind> {
    prop_oneof![
        Just(MollifierKind::Bump { p: 2 }),
        Just(MollifierKind::Bump { p: 4 }),
        (0.5f64..2.0).prop_map(|sigma| MollifierKind::Gaussian { sigma }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn moments_vanish(kind in kinds(), q in 0usize..=6, eps in 0.05f64..1.0) {
        let m = Mollifier::from_kind(kind, q, eps).unwrap();
        let mo = m.moments(q).unwrap();
        prop_assert!((mo[0] - 1.0).abs() <= 1e-9);
        for n in 1..=q {
            prop_assert!(mo[n].abs() <= 1e-9, "moment {} = {}", n, mo[n]);
        }
    }

    #[test]
    fn rescaling(kind in kinds(), q in 0usize..=4, eps in 0.05f64..1.0, x in -2.0f64..2.0, k in 0usize..=K_MAX) {
        let m = Mollifier::from_kind(kind, q, eps).unwrap();
        let one = m.with_eps(1.0).unwrap();
        let want = one.d(k, x / eps) / eps.powi(k as i32 + 1);
        let got = m.d(k, x);
        prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-300) + 1e-300);
    }

    #[test]
    fn derivatives_match_differences(kind in kinds(), q in 0usize..=4, x in -0.9f64..0.9, k in 0usize..K_MAX) {
        let m = Mollifier::from_kind(kind, q, 1.0).unwrap();
        let h = 1e-4;
        let fd = (m.d(k, x - 2.0 * h) - 8.0 * m.d(k, x - h) + 8.0 * m.d(k, x + h) - m.d(k, x + 2.0 * h)) / (12.0 * h);
        let an = m.d(k + 1, x);
        prop_assert!((fd - an).abs() <= 1e-5 * (1.0 + an.abs()));
    }
}
