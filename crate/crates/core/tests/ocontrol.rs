use genvar::ocontrol::*;
use genvar::variation::Field;
use genvar::{Mollifier, MollifierKind, Window};
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn cos2(eps: f64) -> Mollifier {
    Mollifier::from_kind(MollifierKind::CosineSquared, 1, eps).unwrap()
}

/// Nonlinear two-state, one-control problem with random coefficients.
fn random_problem(rng: &mut StdRng) -> OCProblem {
    let c: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let c1 = c.clone();
    let c2 = c.clone();
    let c3 = c.clone();
    let c4 = c.clone();
    let c5 = c.clone();
    let c6 = c.clone();
    let c7 = c.clone();
    let c8 = c.clone();
    let (hi, hf) = (c[8], c[9]);
    OCProblem::new(2, 1)
        .with_dynamics(
            move |q, u, _| DVector::from_vec(vec![q[1] + c1[0] * q[0].sin() + c1[1] * u[0], -c1[2] * q[0] + c1[3] * q[1] * u[0] + c1[4] * q[0] * q[0]]),
            move |q, u, _| DMatrix::from_row_slice(2, 2, &[c2[0] * q[0].cos(), 1.0, -c2[2] + 2.0 * c2[4] * q[0], c2[3] * u[0]]),
            move |q, _, _| DMatrix::from_row_slice(2, 1, &[c3[1], c3[3] * q[1]]),
        )
        .with_dynamics_hessian(move |q, _, _, s| {
            let mut h = DMatrix::zeros(3, 3);
            if s == 0 {
                h[(0, 0)] = -c4[0] * q[0].sin();
            } else {
                h[(0, 0)] = 2.0 * c4[4];
                h[(1, 2)] = c4[3];
                h[(2, 1)] = c4[3];
            }
            h
        })
        .with_running_cost(
            move |q, u, _| 0.5 * c5[5] * u[0] * u[0] + c5[6] * q[0] * q[0] * q[1] + c5[7] * q[1] * u[0],
            move |q, u, _| DVector::from_vec(vec![2.0 * c6[6] * q[0] * q[1], c6[6] * q[0] * q[0] + c6[7] * u[0]]),
            move |q, u, _| DVector::from_vec(vec![c7[5] * u[0] + c7[7] * q[1]]),
        )
        .with_running_cost_hessian(move |q, _, _| {
            DMatrix::from_row_slice(3, 3, &[
                2.0 * c8[6] * q[1], 2.0 * c8[6] * q[0], 0.0,
                2.0 * c8[6] * q[0], 0.0, c8[7],
                0.0, c8[7], c8[5],
            ])
        })
        .with_initial_cost(
            BoundaryCost::new(move |q| hi * q[0] * q[0], move |q| DVector::from_vec(vec![2.0 * hi * q[0], 0.0]))
                .with_hessian(move |_| DMatrix::from_row_slice(2, 2, &[2.0 * hi, 0.0, 0.0, 0.0])),
        )
        .with_terminal_cost(
            BoundaryCost::new(move |q| hf * (q[0] * q[1] + q[1] * q[1]), move |q| DVector::from_vec(vec![hf * q[1], hf * (q[0] + 2.0 * q[1])]))
                .with_hessian(move |_| DMatrix::from_row_slice(2, 2, &[0.0, hf, hf, 2.0 * hf])),
        )
        .checked()
        .unwrap()
}

fn random_trajectory(rng: &mut StdRng, m: &Mollifier) -> Trajectory {
    let a: Vec<(f64, f64, f64)> = (0..5).map(|_| (rng.gen_range(0.3..1.0), rng.gen_range(0.5..2.0), rng.gen_range(0.0..6.0))).collect();
    let wave = move |k: usize, t: f64| a[k].0 * (a[k].1 * t + a[k].2).sin();
    let (w1, w2, w3) = (wave.clone(), wave.clone(), wave);
    Trajectory::from_fns(
        -0.6,
        0.005,
        641,
        (2, 2, 1),
        move |t| vec![w1(0, t), w1(1, t)],
        move |t| vec![w2(2, t), w2(3, t)],
        move |t| vec![w3(4, t)],
        m.clone(),
    )
    .unwrap()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn first_variation_matches_gateaux() {
    let mut rng = StdRng::seed_from_u64(3);
    let m = cos2(0.2);
    let w = Window::new(0.0, 2.0, m.clone()).unwrap();
    for _ in 0..3 {
        let pr = random_problem(&mut rng);
        let tr = random_trajectory(&mut rng, &m);
        let mut taus: Vec<f64> = (0..8).map(|_| rng.gen_range(-0.2..2.2)).collect();
        taus.extend([0.0, 2.0]);
        for tau in taus {
            let dir = [Direction::Q, Direction::P, Direction::U][rng.gen_range(0..3)];
            let c = rng.gen_range(0..dir.len(&pr));
            let cf = first_variation(&pr, &tr, &w, dir, c, tau, &m).unwrap();
            let g = oc_gateaux(&pr, &tr, &w, Probe { dir, comp: c, tau }, &m, 1e-4 * m.eps()).unwrap();
            assert!(rel_close(cf, g, 1e-5), "{dir:?}{c} at {tau}: {cf} vs {g}");
        }
    }
}

#[test]
fn blocks_match_cross_differences() {
    let mut rng = StdRng::seed_from_u64(5);
    let m = cos2(0.2);
    let w = Window::new(0.0, 2.0, m.clone()).unwrap();
    let pr = random_problem(&mut rng);
    let tr = random_trajectory(&mut rng, &m);
    let lam = 1e-3 * m.eps();
    for (t1, t2) in [(0.7, 0.8), (1.0, 1.0), (1.95, 2.05), (0.02, -0.1)] {
        let bl = second_variation_blocks(&pr, &tr, &w, t1, t2, &m).unwrap();
        let pairs: [(&DMatrix<f64>, Direction, Direction); 6] = [
            (&bl.qq, Direction::Q, Direction::Q),
            (&bl.uq, Direction::U, Direction::Q),
            (&bl.up, Direction::U, Direction::P),
            (&bl.uu, Direction::U, Direction::U),
            (&bl.pq, Direction::P, Direction::Q),
            (&bl.pp, Direction::P, Direction::P),
        ];
        for (blk, d1, d2) in pairs {
            for i in 0..blk.nrows() {
                for j in 0..blk.ncols() {
                    let g = oc_gateaux2(
                        &pr,
                        &tr,
                        &w,
                        Probe { dir: d1, comp: i, tau: t1 },
                        Probe { dir: d2, comp: j, tau: t2 },
                        &m,
                        lam,
                    )
                    .unwrap();
                    assert!(rel_close(blk[(i, j)], g, 1e-5), "{d1:?}{i}/{d2:?}{j} at ({t1},{t2}): {} vs {g}", blk[(i, j)]);
                }
            }
        }
        assert!(bl.pp.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn pointwise_residuals_match_dynamics() {
    let mut rng = StdRng::seed_from_u64(9);
    let m = cos2(0.2);
    let pr = random_problem(&mut rng);
    let tr = random_trajectory(&mut rng, &m);
    let t = 1.1;
    let r = pmp_residuals(&pr, &tr, t).unwrap();
    let q = [tr.deriv(0, 0, t), tr.deriv(1, 0, t)];
    let u = [tr.deriv(4, 0, t)];
    let f = pr.f(&q, &u, t);
    for c in 0..2 {
        assert!((r.state[c] - (tr.deriv(c, 1, t) - f[c])).abs() < 1e-14);
    }
    assert_eq!(r.control.len(), 1);
}

#[test]
fn interior_residuals_do_not_depend_on_eps() {
    let pr = OCProblem::new(1, 0)
        .with_dynamics(|q, _, t| DVector::from_element(1, q[0] + t), |_, _, _| DMatrix::identity(1, 1), |_, _, _| DMatrix::zeros(1, 0))
        .checked()
        .unwrap();
    let res = |eps: f64| {
        let tr = Trajectory::from_fns(-1.0, 0.01, 401, (1, 1, 0), |t| vec![3.0 * t - 1.0], |_| vec![0.5], |_| vec![], cos2(eps)).unwrap();
        pmp_residuals(&pr, &tr, 1.2).unwrap()
    };
    let (a, b) = (res(0.5), res(0.1));
    assert!((a.state[0] - b.state[0]).abs() < 1e-12 && (a.adjoint[0] - b.adjoint[0]).abs() < 1e-12);
}

#[test]
fn action_trivial_cases() {
    let m = cos2(0.1);
    let w = Window::new(0.0, 2.0, m.clone()).unwrap();
    // q̇ = f exactly and no cost: every term vanishes
    let pr = OCProblem::new(1, 0)
        .with_dynamics(|_, _, _| DVector::from_element(1, 2.0), |_, _, _| DMatrix::zeros(1, 1), |_, _, _| DMatrix::zeros(1, 0))
        .checked()
        .unwrap();
    let tr = Trajectory::from_fns(-1.0, 0.01, 401, (1, 1, 0), |t| vec![2.0 * t], |t| vec![t.cos()], |_| vec![], m).unwrap();
    assert!(oc_action(&pr, &tr, &w).unwrap().abs() < 1e-12);
}

#[test]
fn adjoint_of_linear_dynamics() {
    let a = DMatrix::from_row_slice(2, 2, &[0.1, 1.0, -2.0, -0.3]);
    let a2 = a.clone();
    let pr = OCProblem::new(2, 0)
        .with_dynamics(move |q, _, _| &a2 * DVector::from_column_slice(q), {
            let a3 = a.clone();
            move |_, _, _| a3.clone()
        }, |_, _, _| DMatrix::zeros(2, 0))
        .checked()
        .unwrap();
    let times: Vec<f64> = (0..=200).map(|i| i as f64 * 0.01).collect();
    let pf = [0.7, -0.4];
    let ps = integrate_adjoint(&pr, &|t| vec![t, 1.0], &|_| vec![], &times, &pf).unwrap();
    for (i, t) in times.iter().enumerate().step_by(50) {
        let want = (-a.transpose() * (t - 2.0)).exp() * DVector::from_column_slice(&pf);
        for c in 0..2 {
            assert!((ps[i][c] - want[c]).abs() < 1e-8);
        }
    }
    let zero = OCProblem::new(2, 0);
    let pz = integrate_adjoint(&zero, &|t| vec![t, t], &|_| vec![], &times, &pf).unwrap();
    assert!(pz.iter().all(|p| p == &pf.to_vec()));
}

#[test]
fn adjoint_blowup_is_reported() {
    let pr = OCProblem::new(1, 0)
        .with_dynamics(|q, _, _| DVector::from_element(1, 40.0 * q[0]), |_, _, _| DMatrix::from_element(1, 1, 40.0), |_, _, _| DMatrix::zeros(1, 0));
    let times: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.01).collect();
    let err = integrate_adjoint(&pr, &|_| vec![0.0], &|_| vec![], &times, &[1.0]).unwrap_err();
    assert!(matches!(err, genvar::Error::UnstableStep(_)));
}

#[test]
fn harmonic_adjoint_is_i_alpha() {
    let pr = genvar::oscillator::ho_oc_problem(&genvar::oscillator::HOConfig::default()).unwrap();
    // α(t) = i e^{−i(t − 4.5)}, realified as (Re α, Im α)
    let alpha = |t: f64| {
        let s = t - 4.5;
        vec![s.sin(), s.cos()]
    };
    let times: Vec<f64> = (0..=900).map(|i| 1.0 + i as f64 * 0.01).collect();
    let af = alpha(10.0);
    // π* = iα  ⇔  p = (Re π, −Im π) = (−Im α, Re α)
    let ps = integrate_adjoint(&pr, &alpha, &|_| vec![], &times, &[-af[1], af[0]]).unwrap();
    for (i, t) in times.iter().enumerate() {
        let a = alpha(*t);
        assert!((ps[i][0] + a[1]).abs() < 1e-9 && (ps[i][1] - a[0]).abs() < 1e-9);
    }
}

#[test]
fn linear_extremal_matches_closed_form() {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -0.3]);
    let qm = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5]);
    let (a1, a2, q1, q2) = (a.clone(), a.clone(), qm.clone(), qm.clone());
    let pr = OCProblem::new(2, 1)
        .with_dynamics(
            move |q, u, _| &a1 * DVector::from_column_slice(q) + DVector::from_vec(vec![0.0, u[0]]),
            move |_, _, _| a2.clone(),
            |_, _, _| DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        )
        .with_dynamics_hessian(|_, _, _, _| DMatrix::zeros(3, 3))
        .with_running_cost(
            move |q, u, _| {
                let v = DVector::from_column_slice(q);
                0.5 * u[0] * u[0] + 0.5 * v.dot(&(&q1 * &v))
            },
            move |q, _, _| &q2 * DVector::from_column_slice(q),
            |_, u, _| DVector::from_element(1, u[0]),
        )
        .with_running_cost_hessian(|_, _, _| DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 1.0]))
        .checked()
        .unwrap();
    let m = cos2(0.1);
    let w = Window::line(m.clone());
    let cfg = AnchorConfig { anchor: 2.0, span: (0.0, 4.0), dt: 0.01, floor: 1e-3 };
    let (q0, p0) = ([0.3, -0.2], [0.1, 0.4]);
    let ex = extremize_oc(&pr, &w, &cfg, &q0, &p0, &[0.0], &m).unwrap();
    // ż = H z with z = (q, p), u = Bᵀp
    let mut h = DMatrix::zeros(4, 4);
    h.view_mut((0, 0), (2, 2)).copy_from(&a);
    h[(1, 3)] = 1.0;
    h.view_mut((2, 0), (2, 2)).copy_from(&qm);
    h.view_mut((2, 2), (2, 2)).copy_from(&(-a.transpose()));
    let z0 = DVector::from_vec(vec![q0[0], q0[1], p0[0], p0[1]]);
    for t in [0.3, 1.234, 2.0, 3.5, 3.9] {
        let z = (&h * (t - 2.0)).exp() * &z0;
        for c in 0..4 {
            assert!((ex.dense.deriv(c, 0, t) - z[c]).abs() < 1e-8, "t={t} c={c}");
        }
        assert!((ex.dense.deriv(4, 0, t) - z[3]).abs() < 1e-8);
    }
}
