use std::f64::consts::PI;
use std::sync::Arc;

use genvar::generalized::mollifier_inner;
use genvar::variation::*;
use genvar::{Mollifier, MollifierKind, Window};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};

fn cos2(eps: f64) -> Mollifier {
    Mollifier::from_kind(MollifierKind::CosineSquared, 1, eps).unwrap()
}

fn square() -> FnLagrangian {
    FnLagrangian::new(1, 0, |_, j| j[0][0] * j[0][0], |_, j, _, k| if k == 0 { 2.0 * j[0][0] } else { 0.0 })
}

fn quad(mass: f64, k: f64) -> FnLagrangian {
    FnLagrangian::new(
        1,
        1,
        move |_, j| 0.5 * mass * j[0][1] * j[0][1] - 0.5 * k * j[0][0] * j[0][0],
        move |_, j, _, o| match o {
            0 => -k * j[0][0],
            1 => mass * j[0][1],
            _ => 0.0,
        },
    )
}

fn cosine() -> FnField {
    FnField::scalar(|k, t| match k % 4 {
        0 => t.cos(),
        1 => -t.sin(),
        2 => -t.cos(),
        _ => t.sin(),
    })
}

fn sine() -> FnField {
    FnField::scalar(|k, t| match k % 4 {
        0 => t.sin(),
        1 => t.cos(),
        2 => -t.sin(),
        _ => -t.cos(),
    })
}

#[test]
fn square_functional_gateaux() {
    let m = cos2(0.05);
    let i = Functional::new(Arc::new(square()), Window::line(m.clone())).unwrap().with_domain(-10.0, 10.0).unwrap();
    let p = VariationProbe::new(PI / 2.0, m.clone(), 0);
    let d1 = gateaux(&i, &sine(), &p, 1).unwrap();
    assert!((d1.value - 2.0).abs() < 1e-2 && !d1.unstable);
    let d2 = gateaux(&i, &sine(), &p, 2).unwrap();
    let want = 2.0 * mollifier_inner(&m, &m, PI / 2.0, PI / 2.0);
    assert!((d2.value - want).abs() < 1e-6 * want, "{} vs {}", d2.value, want);
}

#[test]
fn quad_interior_extremal() {
    let m = cos2(0.1);
    let w = Window::new(0.0, 3.0, m.clone()).unwrap();
    let i = Functional::new(Arc::new(quad(1.0, 1.0)), w).unwrap();
    for y in [0.7, 1.5, 2.2] {
        assert!(i.el_residual(&cosine(), 0, y, &m).abs() < 1e-6);
        let g = gateaux(&i, &cosine(), &VariationProbe::new(y, m.clone(), 0), 1).unwrap();
        assert!(g.value.abs() < 1e-6);
    }
}

#[test]
fn quad_boundary_term_diverges() {
    let tf = 2.0;
    let scaled: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&eps| {
            let m = cos2(eps);
            let i = Functional::new(Arc::new(quad(1.0, 1.0)), Window::new(0.0, tf, m.clone()).unwrap()).unwrap();
            eps * i.el_residual(&cosine(), 0, tf, &m)
        })
        .collect();
    // ε·δS → m q̇(t_f) ∫η² ε = −sin(2)·3/4 up to sign convention
    for s in &scaled {
        assert!((s.abs() - 0.75 * tf.sin()).abs() < 0.05, "{scaled:?}");
    }
}

#[test]
fn el_matches_gateaux_on_random_probes() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let m = cos2(0.2);
    let (a, b) = (0.0, 2.5);
    let lag = FnLagrangian::new(
        1,
        1,
        |x, j| j[0][1].powi(2) * (1.0 + 0.3 * x) - j[0][0].powi(3) / 3.0,
        |x, j, _, k| match k {
            0 => -j[0][0].powi(2),
            1 => 2.0 * j[0][1] * (1.0 + 0.3 * x),
            _ => 0.0,
        },
    );
    let i = Functional::new(Arc::new(lag), Window::new(a, b, m.clone()).unwrap()).unwrap();
    let field = FnField::scalar(|k, t| match k {
        0 => (1.3 * t).sin() + 0.2 * t,
        1 => 1.3 * (1.3 * t).cos() + 0.2,
        _ => -1.69 * (1.3 * t).sin(),
    });
    let mut ys: Vec<f64> = (0..18).map(|_| rng.gen_range(a - 0.1..b + 0.1)).collect();
    ys.extend([a, b]);
    for y in ys {
        let el = i.el_residual(&field, 0, y, &m);
        let g = gateaux(&i, &field, &VariationProbe::new(y, m.clone(), 0), 1).unwrap().value;
        assert!((el - g).abs() <= 1e-6f64.max(1e-4 * g.abs()), "y={y}: {el} vs {g}");
    }
}

#[test]
fn half_weight_at_edge() {
    let m = cos2(0.1);
    let i = Functional::new(Arc::new(square()), Window::new(0.0, 1.0, m.clone()).unwrap()).unwrap();
    let f = FnField::scalar(|k, _| if k == 0 { 1.0 } else { 0.0 });
    let edge = i.el_residual(&f, 0, 1.0, &m);
    let inner = i.el_residual(&f, 0, 0.5, &m);
    assert!((edge - 0.5 * inner).abs() < 1e-6, "{edge} {inner}");
}

#[test]
fn lambda_halving_is_stable() {
    let m = cos2(0.1);
    let i = Functional::new(Arc::new(quad(1.0, 2.0)), Window::new(0.0, 2.0, m.clone()).unwrap()).unwrap();
    let g = gateaux(&i, &sine(), &VariationProbe::new(0.9, m, 0), 1).unwrap();
    assert!(g.lambda_drift <= 1e-6 && !g.unstable);
}

#[test]
fn legendre_clebsch_signs() {
    let m = cos2(0.01);
    let w = Window::new(0.0, 2.0, m.clone()).unwrap();
    let i = Functional::new(Arc::new(quad(1.0, 1.0)), w.clone()).unwrap();
    let lc = legendre_clebsch(&i, &cosine(), 0, 1.0, &m).unwrap();
    assert_eq!(lc.dominant_sign, 1);
    let g2 = gateaux(&i, &cosine(), &VariationProbe::new(1.0, m.clone(), 0), 2).unwrap().value;
    assert!((lc.value - g2).abs() < 0.1 * g2.abs(), "{} vs {}", lc.value, g2);
    let neg = FnLagrangian::new(1, 1, |_, j| -j[0][1] * j[0][1], |_, j, _, k| if k == 1 { -2.0 * j[0][1] } else { 0.0 });
    let i2 = Functional::new(Arc::new(neg), w).unwrap();
    assert_eq!(legendre_clebsch(&i2, &cosine(), 0, 1.0, &m).unwrap().dominant_sign, -1);
}

#[test]
fn legendre_clebsch_needs_first_order_functional() {
    let m = cos2(0.1);
    let i = Functional::new(Arc::new(square()), Window::new(0.0, 1.0, m.clone()).unwrap()).unwrap();
    assert!(legendre_clebsch(&i, &cosine(), 0, 0.5, &m).is_err());
}

fn random_gl3(rng: &mut impl Rng, norm: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
    let n = a.norm();
    a * (norm / n)
}

fn fd_variation(f: &DMatrix<f64>, tau: &DMatrix<f64>, w: f64) -> DMatrix<f64> {
    let h = 1e-4;
    let e = |s: f64| (f + tau * (s * w)).exp();
    let d = |h: f64| (e(h) - e(-h)) / (2.0 * h);
    (d(0.5 * h) * 4.0 - d(h)) / 3.0
}

#[test]
fn lie_lemma_matches_differences() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    let m = cos2(0.5);
    for _ in 0..20 {
        let nf = rng.gen_range(0.1..1.0);
        let f = random_gl3(&mut rng, nf);
        let tau = random_gl3(&mut rng, 1.0);
        let (x, y) = (0.1, 0.0);
        let got = lie_exp_variation(&f, &tau, x, y, &m, LIE_TERMS).unwrap();
        let want = fd_variation(&f, &tau, m.eval(x - y));
        assert!((&got - &want).norm() <= 1e-8 * want.norm());
    }
}

#[test]
fn lie_trivial_cases() {
    let m = cos2(0.5);
    let tau = DMatrix::from_fn(3, 3, |i, j| (i + 2 * j) as f64);
    let c = adjoint_series(&DMatrix::zeros(3, 3), &tau, LIE_TERMS).unwrap();
    assert_eq!(c, tau);
    let f = &tau * 0.1;
    assert!((adjoint_series(&f, &tau, LIE_TERMS).unwrap() - &tau).norm() < 1e-14);
    let v = lie_exp_variation(&DMatrix::zeros(3, 3), &tau, 0.2, 0.0, &m, LIE_TERMS).unwrap();
    assert!((v - &tau * m.eval(0.2)).norm() < 1e-14);
    assert!(lie_exp_variation(&DMatrix::zeros(2, 2), &tau, 0.0, 0.0, &m, LIE_TERMS).is_err());
}

#[test]
fn lie_variation_commutes_with_derivative() {
    let m = cos2(0.5);
    let f = |x: f64| DMatrix::from_row_slice(3, 3, &[0.1 * x, 0.2, 0.0, x * x * 0.1, 0.0, 0.3, 0.05, -0.1 * x, 0.2]);
    let tau = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
    let y = 0.0;
    let x = 0.2;
    let h = 1e-4;
    let var = |x: f64| lie_exp_variation(&f(x), &tau, x, y, &m, LIE_TERMS).unwrap();
    let d_of_var = (var(x + h) - var(x - h)) / (2.0 * h);
    // variation of ∂_x e^{f}: d/dλ of ∂_x exp(f(x) + λ η(x−y) τ)
    let g = |x: f64, lam: f64| (f(x) + &tau * (lam * m.eval(x - y))).exp();
    let dx = |lam: f64| (g(x + h, lam) - g(x - h, lam)) / (2.0 * h);
    let var_of_d = (dx(1e-4) - dx(-1e-4)) / 2e-4;
    assert!((&d_of_var - &var_of_d).norm() <= 1e-6 * var_of_d.norm());
}
