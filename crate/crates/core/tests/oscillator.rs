use genvar::oscillator::*;
use genvar::variation::Field;
use num_complex::Complex64;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn table_rows_are_stationary() {
    let cfg = HOConfig::default();
    let rows = ho_table(&cfg).unwrap();
    assert_eq!(rows.len(), 12);
    for r in &rows {
        assert!(r.error.is_none(), "{} {}: {:?}", r.kind, r.eps, r.error);
        assert!(r.ds.abs() <= 1e-6, "{} {}: δS = {}", r.kind, r.eps, r.ds);
        match r.kind.as_str() {
            "oc" => assert_eq!(r.d2s, 0.0),
            "quad" => assert!(rel(r.d2s, quad_second_variation_cos2(1.0, 1.0, r.eps)) < 1e-6, "{}: {}", r.eps, r.d2s),
            "holo" => assert!(rel(r.d2s, holo_second_variation_cos2(1.0, r.eps)) < 1e-6, "{}: {}", r.eps, r.d2s),
            k => panic!("unexpected kind {k}"),
        }
    }
}

#[test]
fn second_variation_scaling() {
    // leading terms: ε⁻³ for the quadratic action, ε⁻¹ for the holomorphic one
    let q = quad_second_variation_cos2(1.0, 1.0, 0.1) / quad_second_variation_cos2(1.0, 1.0, 1.0);
    let h = holo_second_variation_cos2(1.0, 0.1) / holo_second_variation_cos2(1.0, 1.0);
    assert!((h - 10.0).abs() < 1e-12);
    assert!(q > 1000.0);
    let q_small = quad_second_variation_cos2(1.0, 1.0, 1e-3) / quad_second_variation_cos2(1.0, 1.0, 1e-2);
    assert!((q_small - 1000.0).abs() < 1.0);
}

#[test]
fn oc_extremal_is_rotating_coherent_amplitude() {
    let cfg = HOConfig::default();
    let ex = ho_extremal(&cfg, HOKind::Oc, 0.5).unwrap();
    for t in [1.0, 3.0, 4.5, 8.0, 10.0] {
        // α(t) = i e^{−i(t − 4.5)}
        let s = t - 4.5;
        assert!((ex.dense.deriv(0, 0, t) - s.sin()).abs() < 1e-8);
        assert!((ex.dense.deriv(1, 0, t) - s.cos()).abs() < 1e-8);
    }
}

#[test]
fn quad_extremal_near_anchor_is_sine() {
    let cfg = HOConfig::default();
    let ex = ho_extremal(&cfg, HOKind::Quad, 0.01).unwrap();
    for t in [3.0, 4.5, 6.0] {
        assert!((ex.dense.deriv(0, 0, t) - (t - 4.5).sin()).abs() < 1e-6, "{t}");
    }
}

#[test]
fn divergence_signature_at_wide_window() {
    let sig = divergence_signature(&HOConfig::default(), 1.0).unwrap();
    assert!(sig.quad_growth_left >= 2.0 && sig.quad_growth_right >= 2.0, "{sig:?}");
    assert!(sig.oc_alpha_deviation < 0.1);
}

#[test]
fn coherent_overlap_modulus() {
    let a = Complex64::new(0.3, -1.2);
    let b = Complex64::new(-0.4, 0.5);
    let o = coherent_overlap(a, b);
    assert!((o.norm_sqr() - (-(a - b).norm_sqr()).exp()).abs() < 1e-15);
    assert!((coherent_overlap(a, a) - 1.0).norm() < 1e-15);
    assert!((coherent_overlap(b, a) - o.conj()).norm() < 1e-15);
}

#[test]
fn config_validation() {
    assert!(HOConfig { mass: 0.0, ..Default::default() }.validate().is_err());
    assert!(HOConfig { anchor: 20.0, ..Default::default() }.validate().is_err());
    assert!(HOConfig { eps: vec![], ..Default::default() }.validate().is_err());
    assert!(HOKind::parse("bogus").is_err());
    assert_eq!(HOKind::parse("OC").unwrap(), HOKind::Oc);
    let scaled = HOConfig { mass: 1.0, k: 4.0, ..Default::default() }.with_scaled_times();
    assert_eq!((scaled.t_i, scaled.t_f, scaled.anchor), (0.5, 5.0, 2.25));
}

#[test]
fn second_order_action_has_no_anchored_solver() {
    let err = ho_extremal(&HOConfig::default(), HOKind::Second, 0.5).unwrap_err();
    assert!(err.is_validation());
}

#[test]
fn boundary_costs_shift_the_action_by_overlap_phases() {
    let beta = Complex64::new(0.2, 0.9);
    let cfg = HOConfig { boundary_costs: true, beta_i: beta, beta_f: beta, ..Default::default() };
    let plain = HOConfig::default();
    let with = ho_row(&cfg, HOKind::Oc, 0.5).unwrap().s;
    let without = ho_row(&plain, HOKind::Oc, 0.5).unwrap().s;
    let alpha = |t: f64| Complex64::new((t - 4.5).sin(), (t - 4.5).cos());
    let h = |a: Complex64| (beta.conj() * a).im;
    assert!((with - without - h(alpha(10.0)) + h(alpha(1.0))).abs() < 1e-8);
}
