use genvar_web::*;
use num_complex::Complex64;

#[test]
fn mollifier_curve_columns() {
    let s = mollifier_curve_native("bump", 4, 0.5, 101).unwrap();
    assert_eq!(s.len(), 101);
    assert_eq!(s.n_columns(), 3);
    assert_eq!(s.name(2), "q=4");
    let x = s.x();
    assert_eq!((x[0], x[100]), (-0.5, 0.5));
    // compact support: zero at the ends, mass ≈ 1 by the trapezoid rule
    let c = s.column(0);
    assert_eq!(c[0], 0.0);
    let mass: f64 = c.iter().sum::<f64>() * (x[1] - x[0]);
    assert!((mass - 1.0).abs() < 1e-3);
}

#[test]
fn mollifier_curve_rejects_unknown_kind() {
    assert!(mollifier_curve_native("triangle", 2, 1.0, 10).is_err());
}

#[test]
fn oc_extremal_stays_on_unit_circle() {
    let s = oscillator_extremal_checked("oc");
    assert_eq!(s.name(0), "window");
    let (re, im) = (s.column(1), s.column(2));
    for i in 0..s.len() {
        assert!(((re[i] * re[i] + im[i] * im[i]).sqrt() - 1.0).abs() < 1e-8);
    }
    assert_eq!(oscillator_extremal_checked("quad").n_columns(), 2);
}

fn oscillator_extremal_checked(kind: &str) -> Series {
    ho_extremal_native(kind, 0.5, 200).unwrap()
}

#[test]
fn euler_propagator_is_first_order() {
    let s = propagator_convergence_native(Complex64::new(0.7, -0.3), Complex64::new(0.2, 0.5), 1.0, 1.0, &[101, 1001, 10001]).unwrap();
    assert!((s.slope().unwrap() - 1.0).abs() < 0.1);
    assert!(s.column(0).windows(2).all(|w| w[1] < w[0]));
    assert!(propagator_convergence_native(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 1.0, 1.0, &[1]).is_err());
}
