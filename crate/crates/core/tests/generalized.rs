use std::f64::consts::PI;
use std::sync::Arc;

use genvar::generalized::*;
use genvar::{Mollifier, MollifierFamily, MollifierKind};
use proptest::prelude::*;

fn gauss(q: usize, eps: f64) -> Mollifier {
    Mollifier::from_kind(MollifierKind::Gaussian { sigma: 1.0 }, q, eps).unwrap()
}

#[test]
fn quadratic_is_reproduced() {
    for eps in [1.0, 0.3, 0.05] {
        let f = convolve(|x| x * x, &gauss(2, eps));
        for x in [-1.5, 0.0, 0.7, 3.0] {
            assert!((f.eval(x) - x * x).abs() < 1e-9);
        }
    }
}

#[test]
fn gaussian_sine_convolution() {
    let f = convolve(f64::sin, &gauss(1, 0.1));
    let c = (-0.005f64).exp();
    for x in [0.3, 1.2, 2.5] {
        assert!((f.eval(x) - c * x.sin()).abs() < 1e-12);
    }
}

#[test]
fn regularized_derivative_commutes() {
    let m = gauss(2, 0.2);
    let f = convolve(|x| (x * 1.3).sin() + x.powi(3), &m);
    let g = convolve(|x| 1.3 * (x * 1.3).cos() + 3.0 * x * x, &m);
    for x in [-0.4, 0.1, 0.9] {
        assert!((f.deriv(1, x).unwrap() - g.eval(x)).abs() < 1e-10);
    }
}

#[test]
fn product_error_order() {
    let fam = Arc::new(MollifierFamily::build(MollifierKind::Gaussian { sigma: 1.0 }, 4).unwrap());
    let err = |eps: f64| {
        let a = convolve(f64::sin, &Mollifier::new(fam.clone(), 2, eps).unwrap());
        let b = convolve(f64::cos, &Mollifier::new(fam.clone(), 4, eps).unwrap());
        let p = a.mul(&b);
        assert_eq!(p.order, Some(2));
        [0.2, 0.8, 1.4].iter().map(|&x| (p.eval(x) - x.sin() * x.cos()).abs()).fold(0.0, f64::max)
    };
    let fit = fit_slope(&[(0.4, err(0.4)), (0.2, err(0.2)), (0.1, err(0.1))]);
    assert!(fit.slope > 2.7, "slope {}", fit.slope);
}

#[test]
fn window_values() {
    let m = Mollifier::from_kind(MollifierKind::CosineSquared, 1, 0.2).unwrap();
    let half = Window::new(0.0, f64::INFINITY, m.clone()).unwrap();
    assert!((half.eval(0.0) - 0.5).abs() < 1e-15);
    let w = Window::new(0.0, 1.0, m.clone()).unwrap();
    assert!((w.deriv(1, 0.0) - m.eval(0.0)).abs() < 1e-14);
    assert_eq!(w.eval(0.5), 1.0);
    assert_eq!(w.eval(-0.25), 0.0);
    assert!(Window::new(1.0, 1.0, m).is_err());
}

#[test]
fn window_half_weight_at_edge() {
    let m = Mollifier::from_kind(MollifierKind::CosineSquared, 1, 0.1).unwrap();
    let w = Window::new(0.0, 2.0, m.clone()).unwrap();
    let v = genvar::quadrature::adaptive(|x| w.eval(x) * m.eval(x - 2.0), 1.9, 2.1, 1e-13);
    assert!((v - 0.5).abs() < 1e-10);
}

#[test]
fn window_complement_sums_to_one() {
    let m = gauss(2, 0.3);
    let w = Window::new(-1.0, 1.5, m).unwrap();
    for x in [-2.0, -1.0, -0.7, 0.0, 1.4, 1.5, 3.0] {
        assert!((w.eval(x) + w.complement(x) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn uniform_grid_uses_samples() {
    let m = Mollifier::from_kind(MollifierKind::CosineSquared, 1, 0.1).unwrap();
    let grid: Vec<f64> = (0..41).map(|k| -2.0 + 0.1 * k as f64).collect();
    let d = approx_decompose(|_| 1.0, &grid, &m).unwrap();
    assert!(d.simplified && d.coeffs.iter().all(|c| *c == 1.0));
    for x in [-0.55, 0.0, 0.33, 1.01] {
        assert!((d.reconstruct(&m, x) - 1.0).abs() < 0.1);
    }
}

#[test]
fn sine_reconstruction() {
    let eps = 2.0 * PI / 200.0;
    let m = Mollifier::from_kind(MollifierKind::CosineSquared, 1, eps).unwrap();
    let grid: Vec<f64> = (0..200).map(|k| k as f64 * eps).collect();
    let d = approx_decompose(f64::sin, &grid, &m).unwrap();
    let err = (0..500).map(|i| 0.2 + 5.8 * i as f64 / 499.0).map(|x| (d.reconstruct(&m, x) - x.sin()).abs()).fold(0.0, f64::max);
    assert!(err <= 0.05, "{err}");
    assert!(approx_decompose(f64::sin, &[], &m).is_err());
}

#[test]
fn inner_products() {
    let c = Mollifier::from_kind(MollifierKind::CosineSquared, 1, 0.5).unwrap();
    assert!((mollifier_inner(&c, &c, 0.3, 0.3) - 1.5).abs() < 1e-12);
    assert_eq!(mollifier_inner(&c, &c, 0.0, 1.01), 0.0);
    let eps = 0.4;
    let g = gauss(0, eps);
    let want = 1.0 / (2.0 * eps * PI.sqrt());
    assert!((mollifier_inner(&g, &g, 0.1, 0.1) - want).abs() < 1e-10);
}

#[test]
fn order_fits() {
    let fam = Arc::new(MollifierFamily::build(MollifierKind::Gaussian { sigma: 1.0 }, 4).unwrap());
    let probes: Vec<f64> = (0..9).map(|i| 0.1 + 0.15 * i as f64).collect();
    let eps = [0.4, 0.2, 0.1, 0.05];
    let f1 = order_estimate(&f64::sin, &fam, 1, &eps, &probes).unwrap();
    assert!((1.75..=2.25).contains(&f1.slope), "{}", f1.slope);
    let f3 = order_estimate(&f64::sin, &fam, 3, &eps, &probes).unwrap();
    assert!((3.7..=4.3).contains(&f3.slope), "{}", f3.slope);
    let poly = order_estimate(&|x: f64| x * x - x, &fam, 2, &eps, &probes).unwrap();
    assert!(poly.floor_reached);
    assert!(order_estimate(&f64::sin, &fam, 1, &[0.1, 0.2, 0.3], &probes).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn polynomials_reproduced(q in 0usize..=6, eps in 0.05f64..1.0, x in -2.0f64..2.0, c in proptest::collection::vec(-1.0f64..1.0, 7)) {
        let m = Mollifier::from_kind(MollifierKind::Bump { p: 2 }, q, eps).unwrap();
        let deg = q;
        let coef = c.clone();
        let p = move |y: f64| (0..=deg).map(|k| coef[k] * y.powi(k as i32)).sum::<f64>();
        let exact = p(x);
        let f = convolve(p, &m);
        prop_assert!((f.eval(x) - exact).abs() <= 1e-9);
    }

    #[test]
    fn window_in_unit_interval(a in -2.0f64..0.0, len in 0.1f64..3.0, eps in 0.05f64..1.0, x in -4.0f64..4.0) {
        let m = Mollifier::from_kind(MollifierKind::CosineSquared, 1, eps).unwrap();
        let w = Window::new(a, a + len, m.clone()).unwrap();
        let v = w.eval(x);
        prop_assert!((-1e-15..=1.0 + 1e-15).contains(&v));
        let d = w.deriv(1, x) - (m.eval(x - a) - m.eval(x - a - len));
        prop_assert!(d.abs() < 1e-12);
    }
}
