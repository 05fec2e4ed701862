//! wasm-bindgen bindings for the static demo page in `www/`.
//!
//! Each operation returns a [`Series`]: one abscissa and named columns.

use std::sync::Arc;

use genvar::generalized::fit_slope;
use genvar::oscillator::{coherent_overlap, ho_extremal, HOConfig, HOKind};
use genvar::pathintegral::{ho_propagator, HOFlow};
use genvar::variation::Field;
use genvar::{Mollifier, MollifierFamily, MollifierKind};
use num_complex::Complex64;
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    x: Vec<f64>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    /// Fitted log-log slope when the operation computes one.
    slope: Option<f64>,
}

#[wasm_bindgen]
impl Series {
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }
    pub fn len(&self) -> usize {
        self.x.len()
    }
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }
    pub fn name(&self, i: usize) -> String {
        self.names.get(i).cloned().unwrap_or_default()
    }
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.columns.get(i).cloned().unwrap_or_default()
    }
    pub fn slope(&self) -> Option<f64> {
        self.slope
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// `η_q` for every even order up to `q_max` (and `q_max` itself) on its support.
pub fn mollifier_curve_native(kind: &str, q_max: usize, eps: f64, samples: usize) -> genvar::Result<Series> {
    let kind = MollifierKind::parse(kind)?;
    let fam = Arc::new(MollifierFamily::build(kind, q_max)?);
    let mut orders: Vec<usize> = (0..=q_max).step_by(2).collect();
    if q_max % 2 == 1 {
        orders.push(q_max);
    }
    let half = match kind {
        MollifierKind::Gaussian { sigma } => 4.0 * sigma * eps,
        k => k.radius() * eps,
    };
    let x = grid(-half, half, samples);
    let mut columns = Vec::new();
    for &q in &orders {
        let m = Mollifier::new(fam.clone(), q, eps)?;
        columns.push(x.iter().map(|&t| m.eval(t)).collect());
    }
    Ok(Series { x, names: orders.iter().map(|q| format!("q={q}")).collect(), columns, slope: None })
}

/// Anchored extremal of the oscillator action `kind` (quad, oc, holo) with
/// the cosine-squared window at width `eps`.
pub fn ho_extremal_native(kind: &str, eps: f64, samples: usize) -> genvar::Result<Series> {
    let kind = HOKind::parse(kind)?;
    let cfg = HOConfig { eps: vec![eps], ..Default::default() };
    let ex = ho_extremal(&cfg, kind, eps)?;
    let d = &ex.dense;
    let w = cfg.window(eps)?;
    let x = grid(d.t_start(), d.t_end(), samples);
    let shown = match kind {
        HOKind::Quad => vec![(0, "q")],
        _ => vec![(0, "Re α"), (1, "Im α")],
    };
    let mut names = vec!["window".to_string()];
    let mut columns = vec![x.iter().map(|&t| w.eval(t)).collect::<Vec<f64>>()];
    for (c, n) in shown {
        names.push(n.into());
        columns.push(x.iter().map(|&t| d.deriv(c, 0, t)).collect());
    }
    Ok(Series { x, names, columns, slope: None })
}

/// Error of the Euler coherent-state propagator against the exact flow,
/// one point per slice count, with the fitted order.
pub fn propagator_convergence_native(beta_i: Complex64, beta_f: Complex64, omega: f64, t: f64, slices: &[u32]) -> genvar::Result<Series> {
    let exact = coherent_overlap(beta_f, beta_i * Complex64::from_polar(1.0, -omega * t));
    let mut x = Vec::new();
    let mut err = Vec::new();
    for &n in slices {
        let n = n as usize;
        let amp = ho_propagator(beta_i, beta_f, omega, t, n, HOFlow::Euler)?;
        x.push(t / (n - 1) as f64);
        err.push((amp - exact).norm());
    }
    let pts: Vec<(f64, f64)> = x.iter().copied().zip(err.iter().copied()).collect();
    let slope = (pts.len() >= 2).then(|| fit_slope(&pts).slope);
    Ok(Series { x, names: vec!["|error|".into()], columns: vec![err], slope })
}

fn js(e: genvar::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn mollifier_curve(kind: &str, q_max: usize, eps: f64, samples: usize) -> Result<Series, JsError> {
    mollifier_curve_native(kind, q_max, eps, samples).map_err(js)
}

#[wasm_bindgen]
pub fn oscillator_extremal(kind: &str, eps: f64, samples: usize) -> Result<Series, JsError> {
    ho_extremal_native(kind, eps, samples).map_err(js)
}

#[wasm_bindgen]
pub fn propagator_convergence(
    bi_re: f64,
    bi_im: f64,
    bf_re: f64,
    bf_im: f64,
    omega: f64,
    t: f64,
    slices: &[u32],
) -> Result<Series, JsError> {
    propagator_convergence_native(Complex64::new(bi_re, bi_im), Complex64::new(bf_re, bf_im), omega, t, slices).map_err(js)
}
