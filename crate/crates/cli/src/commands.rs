use std::sync::Arc;

use genvar::generalized::{convolve, fit_slope_above, order_estimate, ERROR_FLOOR};
use genvar::oscillator::{
    coherent_overlap, holo_second_variation_cos2, ho_extremal, ho_table, quad_second_variation_cos2, HOConfig, HOKind,
};
use genvar::pathintegral::{gaussian_oracle, ho_propagator, quad_gaussian_pi, HOFlow, ORACLE_DAMPING};
use genvar::scalarfield::{
    chi, re_h_antisymmetric, scalar_boundary_cost, scalar_oc_action, scalar_pmp_check, OverlapSign, ScalarLattice,
};
use genvar::tensorfield::{diffeo_order_check, CoordMap, TensorFieldRep};
use genvar::variation::{lie_exp_variation, Field};
use genvar::{Error, Mollifier, MollifierFamily, MollifierKind, Window};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::args::*;
use crate::output::{num, opt, Artifact};

/// A finished run: the table, and a numerical failure to report after it is written.
pub struct Run {
    pub artifact: Artifact,
    pub failure: Option<String>,
}

impl From<Artifact> for Run {
    fn from(artifact: Artifact) -> Self {
        Run { artifact, failure: None }
    }
}

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

fn test_function(name: &str) -> genvar::Result<Scalar> {
    Ok(match name {
        "sin" => Arc::new(f64::sin),
        "cos" => Arc::new(f64::cos),
        "exp" => Arc::new(f64::exp),
        "gauss" => Arc::new(|x: f64| (-x * x).exp()),
        "abs" => Arc::new(f64::abs),
        "step" => Arc::new(|x: f64| if x >= 0.0 { 1.0 } else { 0.0 }),
        "x2" => Arc::new(|x: f64| x * x),
        _ => return Err(Error::InvalidParameter(format!("unknown function `{name}` (sin, cos, exp, gauss, abs, step, x2)"))),
    })
}

fn grid(from: f64, to: f64, samples: usize) -> genvar::Result<Vec<f64>> {
    if samples < 2 || !(to > from) {
        return Err(Error::InvalidParameter(format!("need from < to and at least two samples (got [{from}, {to}], {samples})")));
    }
    let h = (to - from) / (samples - 1) as f64;
    Ok((0..samples).map(|i| from + i as f64 * h).collect())
}

fn complex(v: &[f64], name: &str) -> genvar::Result<Complex64> {
    match v {
        [re, im] => Ok(Complex64::new(*re, *im)),
        _ => Err(Error::InvalidParameter(format!("--{name} takes `re,im`"))),
    }
}

pub fn mollifier(a: &MollifierArgs) -> genvar::Result<Run> {
    let kind = MollifierKind::parse(&a.kind)?;
    let fam = Arc::new(MollifierFamily::build(kind, a.q)?);
    let mut orders: Vec<usize> = (0..=a.q).step_by(2).collect();
    if a.q % 2 == 1 {
        orders.push(a.q);
    }
    let ms: Vec<Mollifier> = orders.iter().map(|&q| Mollifier::new(fam.clone(), q, a.eps)).collect::<Result<_, _>>()?;
    let half = match (a.range, kind) {
        (Some(r), _) => r,
        (None, MollifierKind::Gaussian { sigma }) => 4.0 * sigma * a.eps,
        (None, k) => k.radius() * a.eps,
    };
    let names: Vec<String> = orders.iter().map(|q| format!("eta_q{q}")).collect();
    let mut header = vec!["x"];
    header.extend(names.iter().map(String::as_str));
    let mut art = Artifact::new(&header);
    for x in grid(-half, half, a.samples)? {
        let mut row = vec![num(x)];
        for m in &ms {
            row.push(num(m.eval_k(a.deriv, x)?));
        }
        art.row(row);
    }
    art.note("family", kind);
    for (q, m) in orders.iter().zip(&ms) {
        let mo = m.moments(*q)?;
        let worst = mo.iter().enumerate().map(|(n, v)| if n == 0 { (v - 1.0).abs() } else { v.abs() }).fold(0.0, f64::max);
        art.note(&format!("moment_error_q{q}"), num(worst));
    }
    Ok(art.into())
}

pub fn regularize(a: &RegularizeArgs) -> genvar::Result<Run> {
    let f = test_function(&a.function)?;
    let m = Mollifier::from_kind(MollifierKind::parse(&a.mollifier)?, a.q, a.eps)?;
    let f2 = f.clone();
    let g = convolve(move |x| f2(x), &m);
    let mut art = Artifact::new(&["x", "f", "f_reg", "abs_error"]);
    let mut worst: f64 = 0.0;
    for x in grid(a.from, a.to, a.samples)? {
        let (v, r) = (f(x), g.eval(x));
        worst = worst.max((r - v).abs());
        art.row(vec![num(x), num(v), num(r), num((r - v).abs())]);
    }
    art.note("mollifier", m.id());
    art.note("max_abs_error", num(worst));
    Ok(art.into())
}

pub fn order(a: &OrderArgs) -> genvar::Result<Run> {
    let f = test_function(&a.function)?;
    let fam = Arc::new(MollifierFamily::build(MollifierKind::parse(&a.mollifier)?, a.q)?);
    let probes = grid(a.from, a.to, a.probes)?;
    let fit = order_estimate(&*f, &fam, a.q, &a.eps, &probes)?;
    let mut art = Artifact::new(&["eps", "error", "local_slope"]);
    for (i, &(e, err)) in fit.points.iter().enumerate() {
        let local = (i > 0).then(|| {
            let (e0, r0) = fit.points[i - 1];
            (err / r0).ln() / (e / e0).ln()
        });
        art.row(vec![num(e), num(err), opt(local)]);
    }
    art.note("slope", num(fit.slope));
    art.note("expected_slope", a.q + 1);
    art.note("floor_reached", fit.floor_reached);
    Ok(art.into())
}

fn parse_points(s: &str) -> genvar::Result<Vec<Vec<f64>>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let v: Vec<f64> = p
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| Error::InvalidParameter(format!("bad probe point `{p}`")))?;
            if v.len() == 2 {
                Ok(v)
            } else {
                Err(Error::InvalidParameter(format!("probe `{p}` must have two coordinates")))
            }
        })
        .collect()
}

pub fn diffeo_check(a: &DiffeoArgs) -> genvar::Result<Run> {
    let map = match a.map.as_str() {
        "polar" => CoordMap::polar(),
        "rotation" => CoordMap::rotation(a.angle),
        m => return Err(Error::InvalidParameter(format!("unknown map `{m}` (polar, rotation)"))),
    };
    let field = match a.field.as_str() {
        "quadratic" => TensorFieldRep::vector(2, "x", |x| vec![x[0] * x[0], x[0] * x[1]])?,
        "linear" => TensorFieldRep::vector(2, "x", |x| vec![x[0], x[1]])?,
        "trig" => TensorFieldRep::vector(2, "x", |x| vec![x[1].sin(), x[0].cos()])?,
        f => return Err(Error::InvalidParameter(format!("unknown field `{f}` (quadratic, linear, trig)"))),
    };
    let probes = parse_points(&a.probes)?;
    let fam = Arc::new(MollifierFamily::build(MollifierKind::parse(&a.mollifier)?, a.q)?);
    let fit = diffeo_order_check(&field, &map, &fam, a.q, &a.eps, &probes)?;
    let mut art = Artifact::new(&["eps", "max_error"]);
    for &(e, err) in &fit.points {
        art.row(vec![num(e), num(err)]);
    }
    art.note("slope", num(fit.slope));
    art.note("expected_slope", a.q + 1);
    art.note("floor_reached", fit.floor_reached);
    Ok(art.into())
}

pub fn lie_check(a: &LieArgs) -> genvar::Result<Run> {
    if a.dim == 0 || !(a.norm > 0.0) {
        return Err(Error::InvalidParameter("need dim ≥ 1 and norm > 0".into()));
    }
    let m = Mollifier::from_kind(MollifierKind::parse(&a.mollifier)?, 1, a.eps)?;
    let mut rng = StdRng::seed_from_u64(a.seed);
    let rand_mat = |rng: &mut StdRng, norm: f64| {
        let x = DMatrix::from_fn(a.dim, a.dim, |_, _| rng.gen_range(-1.0..1.0));
        let n = x.norm();
        x * (norm / n)
    };
    let wt = m.eval(a.x - a.y);
    let mut art = Artifact::new(&["pair", "norm_f", "rel_error"]);
    let mut worst: f64 = 0.0;
    for i in 0..a.pairs {
        let nf = rng.gen_range(0.1 * a.norm..=a.norm);
        let f = rand_mat(&mut rng, nf);
        let tau = rand_mat(&mut rng, 1.0);
        let got = lie_exp_variation(&f, &tau, a.x, a.y, &m, a.terms)?;
        let e = |s: f64| (&f + &tau * (s * wt)).exp();
        let d = |h: f64| (e(h) - e(-h)) / (2.0 * h);
        let want = (d(0.5e-4) * 4.0 - d(1e-4)) / 3.0;
        let rel = (&got - &want).norm() / want.norm().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        art.row(vec![i.to_string(), num(nf), num(rel)]);
    }
    art.note("max_rel_error", num(worst));
    Ok(art.into())
}

fn ho_config(h: &HoArgs, eps: Vec<f64>) -> genvar::Result<HOConfig> {
    let cfg = HOConfig {
        mass: h.mass,
        k: h.k,
        eps,
        kind: MollifierKind::parse(&h.mollifier)?,
        q: h.q,
        boundary_costs: h.boundary_costs,
        beta_i: complex(&h.beta_i, "beta-i")?,
        beta_f: complex(&h.beta_f, "beta-f")?,
        ..Default::default()
    };
    cfg.validate()?;
    Ok(cfg.with_scaled_times())
}

pub fn ho_extremal_cmd(a: &HoExtremalArgs) -> genvar::Result<Run> {
    let kind = HOKind::parse(&a.kind)?;
    let cfg = ho_config(&a.ho, vec![a.eps])?;
    let ex = ho_extremal(&cfg, kind, a.eps)?;
    let d = &ex.dense;
    let names: Vec<String> = match (kind, d.dim()) {
        (HOKind::Quad, 1) => vec!["q".into()],
        (HOKind::Holo, 2) => vec!["re_alpha".into(), "im_alpha".into()],
        (HOKind::Oc, 4) => vec!["re_alpha".into(), "im_alpha".into(), "p0".into(), "p1".into()],
        (_, n) => (0..n).map(|c| format!("c{c}")).collect(),
    };
    let w = cfg.window(a.eps)?;
    let mut header = vec!["t", "window"];
    header.extend(names.iter().map(String::as_str));
    let mut art = Artifact::new(&header);
    for t in grid(d.t_start(), d.t_end(), a.samples)? {
        let mut row = vec![num(t), num(w.eval(t))];
        row.extend((0..d.dim()).map(|c| num(d.deriv(c, 0, t))));
        art.row(row);
    }
    art.note("kind", kind.name());
    art.note("anchor", num(cfg.anchor));
    art.note("t_i", num(cfg.t_i));
    art.note("t_f", num(cfg.t_f));
    Ok(art.into())
}

pub fn ho_table_cmd(a: &HoTableArgs) -> genvar::Result<Run> {
    let cfg = ho_config(&a.ho, a.eps.clone())?;
    let rows = ho_table(&cfg)?;
    let cos2 = cfg.kind == MollifierKind::CosineSquared && !cfg.boundary_costs;
    let mut art = Artifact::new(&["kind", "eps", "mollifier", "S", "dS", "d2S", "d2S_half", "d2S_oracle", "error"]);
    let mut failed = Vec::new();
    for r in &rows {
        let oracle = match r.kind.as_str() {
            "quad" if cos2 => Some(quad_second_variation_cos2(cfg.mass, cfg.k, r.eps)),
            "holo" if cos2 => Some(holo_second_variation_cos2(cfg.omega(), r.eps)),
            "oc" => Some(0.0),
            _ => None,
        };
        if let Some(e) = &r.error {
            failed.push(format!("{} ε={}: {e}", r.kind, r.eps));
        }
        art.row(vec![
            r.kind.clone(),
            num(r.eps),
            r.mollifier.clone(),
            num(r.s),
            num(r.ds),
            num(r.d2s),
            num(r.d2s_half()),
            opt(oracle),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    let max_ds = rows.iter().filter(|r| r.error.is_none()).map(|r| r.ds.abs()).fold(0.0, f64::max);
    art.note("max_abs_dS", num(max_ds));
    let failure = (!failed.is_empty()).then(|| failed.join("; "));
    Ok(Run { artifact: art, failure })
}

pub fn scalar_check(a: &ScalarArgs) -> genvar::Result<Run> {
    let lat = ScalarLattice::plane_wave_extremal(a.nt, a.nx, a.a, a.b, a.pad, a.length, a.mass, a.mode)?;
    let m = Mollifier::from_kind(MollifierKind::parse(&a.mollifier)?, 1, a.eps)?;
    let w = Window::new(a.a, a.b, m)?;
    let sign = OverlapSign::parse(&a.sign)?;
    let ch = chi(&lat, &w)?;
    let factor = Complex64::from_polar(a.zeta_scale, a.zeta_phase);
    let zeta = ch.map(|_, z| z * factor);
    let r = scalar_pmp_check(&lat, &w, &zeta)?;
    let h = scalar_boundary_cost(&zeta, &ch, lat.dx(), sign)?;
    let anti = re_h_antisymmetric(&zeta, &ch, lat.dx());
    let s = scalar_oc_action(&lat, &w, Some(&zeta), sign)?;
    let mut art = Artifact::new(&["quantity", "value"]);
    for (k, v) in [
        ("phi_minus_psi", r.phi_psi),
        ("pi_n_minus_p_n", r.pi_normal),
        ("zeta_minus_chi", r.zeta_chi),
        ("adjoint_residual", r.adjoint),
        ("state_residual", r.state),
        ("re_h", h.re),
        ("im_h", h.im),
        ("re_h_antisymmetric", anti),
        ("re_h_identity_error", (h.re - anti).abs()),
        ("action_re", s.re),
        ("action_im", s.im),
    ] {
        art.row(vec![k.into(), num(v)]);
    }
    art.note("max_boundary_residual", num(r.max_boundary()));
    Ok(art.into())
}

pub fn propagate(a: &PropagateArgs) -> genvar::Result<Run> {
    let bi = complex(&a.beta_i, "beta-i")?;
    let bf = complex(&a.beta_f, "beta-f")?;
    let mode = match a.flow.as_str() {
        "euler" => HOFlow::Euler,
        "exact" => HOFlow::Exact,
        f => return Err(Error::InvalidParameter(format!("unknown flow `{f}` (euler, exact)"))),
    };
    let exact = coherent_overlap(bf, bi * Complex64::from_polar(1.0, -a.omega * a.t));
    let mut art = Artifact::new(&["n", "dt", "amp_re", "amp_im", "exact_re", "exact_im", "abs_error"]);
    let mut pts = Vec::new();
    for &n in &a.n {
        let amp = ho_propagator(bi, bf, a.omega, a.t, n, mode)?;
        let dt = a.t / (n.max(2) - 1) as f64;
        let err = (amp - exact).norm();
        pts.push((dt, err));
        art.row(vec![n.to_string(), num(dt), num(amp.re), num(amp.im), num(exact.re), num(exact.im), num(err)]);
    }
    if mode == HOFlow::Euler && pts.len() >= 2 {
        let fit = fit_slope_above(&pts, ERROR_FLOOR);
        art.note("slope", num(fit.slope));
        art.note("floor_reached", fit.floor_reached);
    }
    Ok(art.into())
}

pub fn quad_pi(a: &QuadPiArgs) -> genvar::Result<Run> {
    let m = Mollifier::from_kind(MollifierKind::parse(&a.mollifier)?, 0, a.eps)?;
    let w = Window::new(a.a, a.b, m)?;
    let mut art = Artifact::new(&[
        "n", "gaussian_re", "gaussian_im", "gaussian_abs", "paper_re", "paper_im", "paper_abs", "oracle_re", "oracle_im",
        "rel_error", "cond",
    ]);
    let mut worst: Option<f64> = None;
    for &n in &a.n {
        let r = quad_gaussian_pi(&w, n, a.dt, a.mass, a.k)?;
        let oracle = if a.no_oracle || n > 3 {
            None
        } else {
            match gaussian_oracle(&r.a, a.dt, &ORACLE_DAMPING) {
                Ok(o) => Some(o),
                Err(e) if e.is_validation() => {
                    art.note(&format!("oracle_skipped_n{n}"), e);
                    None
                }
                Err(e) => return Err(e),
            }
        };
        let rel = oracle.map(|o| (r.gaussian.norm() - o.norm()).abs() / o.norm());
        if let Some(v) = rel {
            worst = Some(worst.map_or(v, |w: f64| w.max(v)));
        }
        art.row(vec![
            n.to_string(),
            num(r.gaussian.re),
            num(r.gaussian.im),
            num(r.gaussian.norm()),
            num(r.paper.re),
            num(r.paper.im),
            num(r.paper.norm()),
            opt(oracle.map(|o| o.re)),
            opt(oracle.map(|o| o.im)),
            opt(rel),
            num(r.cond),
        ]);
    }
    if let Some(v) = worst {
        art.note("max_rel_error", num(v));
    }
    Ok(art.into())
}

