//! Harmonic-oscillator actions: quadratic, optimal-control, holomorphic and
//! second-order forms, their anchored extremals and variation tables.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generalized::Window;
use crate::mollifiers::{Mollifier, MollifierKind};
use crate::ocontrol::{
    extremize_functional, extremize_oc, oc_action, oc_gateaux, second_variation_blocks, AnchorConfig, BoundaryCost,
    Direction, Extremal, OCProblem, Probe, VariationReport,
};
use crate::variation::{gateaux, FnLagrangian, Functional, Jet, VariationProbe};

/// The four oscillator actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HOKind {
    Quad,
    Oc,
    Holo,
    Second,
}

impl HOKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quad" => Ok(Self::Quad),
            "oc" => Ok(Self::Oc),
            "holo" => Ok(Self::Holo),
            "second" | "2nd" => Ok(Self::Second),
            other => Err(Error::InvalidParameter(format!("unknown action kind '{other}' (quad, oc, holo, second)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Quad => "quad",
            Self::Oc => "oc",
            Self::Holo => "holo",
            Self::Second => "second",
        }
    }
}

#[derive(Debug, Clone)]
pub struct HOConfig {
    pub mass: f64,
    pub k: f64,
    pub t_i: f64,
    pub t_f: f64,
    pub anchor: f64,
    pub eps: Vec<f64>,
    pub kind: MollifierKind,
    pub q: usize,
    /// Add the coherent log-overlap costs to the OC action.
    pub boundary_costs: bool,
    pub beta_i: Complex64,
    pub beta_f: Complex64,
    /// Grid step is `min(dt_max, ε/steps_per_eps)`.
    pub dt_max: f64,
    pub steps_per_eps: f64,
    /// Window weight below which functional extremals are cut.
    pub floor: f64,
}

impl Default for HOConfig {
    fn default() -> Self {
        Self {
            mass: 1.0,
            k: 1.0,
            t_i: 1.0,
            t_f: 10.0,
            anchor: 4.5,
            eps: vec![1.0, 0.5, 0.1, 0.01],
            kind: MollifierKind::CosineSquared,
            q: 1,
            boundary_costs: false,
            beta_i: Complex64::new(0.0, 0.0),
            beta_f: Complex64::new(0.0, 0.0),
            dt_max: 0.01,
            steps_per_eps: 40.0,
            floor: 1e-3,
        }
    }
}

impl HOConfig {
    pub fn omega(&self) -> f64 {
        (self.k / self.mass).sqrt()
    }

    /// Scales the default times `1/ω`, `10/ω`, `4.5/ω` to the configured `m`, `k`.
    pub fn with_scaled_times(mut self) -> Self {
        let w = self.omega();
        self.t_i = 1.0 / w;
        self.t_f = 10.0 / w;
        self.anchor = 4.5 / w;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.k > 0.0) {
            return Err(Error::InvalidParameter(format!("m={} and k={} must be positive", self.mass, self.k)));
        }
        if !(self.t_i < self.anchor && self.anchor < self.t_f) {
            return Err(Error::InvalidParameter(format!(
                "need t_i < anchor < t_f (got {}, {}, {})",
                self.t_i, self.anchor, self.t_f
            )));
        }
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::InvalidParameter("ε list must be nonempty and positive".into()));
        }
        if !(self.floor > 0.0 && self.floor < 0.5 && self.dt_max > 0.0 && self.steps_per_eps >= 1.0) {
            return Err(Error::InvalidParameter("invalid grid or floor settings".into()));
        }
        Ok(())
    }

    pub fn mollifier(&self, eps: f64) -> Result<Mollifier> {
        Mollifier::from_kind(self.kind, self.q, eps)
    }

    pub fn window(&self, eps: f64) -> Result<Window> {
        Window::new(self.t_i, self.t_f, self.mollifier(eps)?)
    }

    pub fn dt(&self, eps: f64) -> f64 {
        self.dt_max.min(eps / self.steps_per_eps)
    }

    fn anchor_config(&self, eps: f64) -> Result<AnchorConfig> {
        let m = self.mollifier(eps)?;
        let margin = 2.0 * self.dt(eps);
        Ok(AnchorConfig {
            anchor: self.anchor,
            span: (self.t_i - m.radius() - margin, self.t_f + m.radius() + margin),
            dt: self.dt(eps),
            floor: self.floor,
        })
    }
}

/// `⟨α|β⟩ = exp(−|α|²/2 − |β|²/2 + α*β)`.
pub fn coherent_overlap(alpha: Complex64, beta: Complex64) -> Complex64 {
    (-0.5 * alpha.norm_sqr() - 0.5 * beta.norm_sqr() + alpha.conj() * beta).exp()
}

/// A built action: a windowed functional or an OC problem with its window.
#[derive(Clone)]
pub enum HOAction {
    Functional(Functional),
    Control(OCProblem, Window),
}

fn quad_lagrangian(mass: f64, k: f64) -> FnLagrangian {
    FnLagrangian::new(
        1,
        1,
        move |_, j: &[Jet]| 0.5 * mass * j[0][1] * j[0][1] - 0.5 * k * j[0][0] * j[0][0],
        move |_, j: &[Jet], _, d| if d == 0 { -k * j[0][0] } else { mass * j[0][1] },
    )
    .with_second(move |_, _, a, b| match (a.1, b.1) {
        (0, 0) => -k,
        (1, 1) => mass,
        _ => 0.0,
    })
}

/// `−Im[α*α̇ + iω|α|²]` for `α = x + iy`: `yẋ − xẏ − ω(x² + y²)`.
fn holo_lagrangian(w: f64) -> FnLagrangian {
    FnLagrangian::new(
        2,
        1,
        move |_, j: &[Jet]| {
            let (x, y) = (j[0][0], j[1][0]);
            y * j[0][1] - x * j[1][1] - w * (x * x + y * y)
        },
        move |_, j: &[Jet], c, d| match (c, d) {
            (0, 0) => -j[1][1] - 2.0 * w * j[0][0],
            (0, 1) => j[1][0],
            (1, 0) => j[0][1] - 2.0 * w * j[1][0],
            _ => -j[0][0],
        },
    )
    .with_second(move |_, _, a, b| match (a, b) {
        ((0, 0), (0, 0)) | ((1, 0), (1, 0)) => -2.0 * w,
        ((0, 0), (1, 1)) | ((1, 1), (0, 0)) => -1.0,
        ((0, 1), (1, 0)) | ((1, 0), (0, 1)) => 1.0,
        _ => 0.0,
    })
}

/// `π (k q + m q̈)` over components `(q, π)`.
fn second_lagrangian(mass: f64, k: f64) -> FnLagrangian {
    FnLagrangian::new(
        2,
        2,
        move |_, j: &[Jet]| j[1][0] * (k * j[0][0] + mass * j[0][2]),
        move |_, j: &[Jet], c, d| match (c, d) {
            (0, 0) => k * j[1][0],
            (0, 2) => mass * j[1][0],
            (1, 0) => k * j[0][0] + mass * j[0][2],
            _ => 0.0,
        },
    )
    .with_second(move |_, _, a, b| match (a, b) {
        ((0, 0), (1, 0)) | ((1, 0), (0, 0)) => k,
        ((0, 2), (1, 0)) | ((1, 0), (0, 2)) => mass,
        _ => 0.0,
    })
}

/// Realified OC problem: `q = (Re α, Im α)`, `p = (Re π, −Im π)` so that
/// `Re[π(α̇ + iωα)] = p·(q̇ − f)` with `f = (ω Im α, −ω Re α)`.
pub fn ho_oc_problem(cfg: &HOConfig) -> Result<OCProblem> {
    let w = cfg.omega();
    let mut pr = OCProblem::new(2, 0)
        .complex(true)
        .with_dynamics(
            move |q, _, _| DVector::from_vec(vec![w * q[1], -w * q[0]]),
            move |_, _, _| DMatrix::from_row_slice(2, 2, &[0.0, w, -w, 0.0]),
            |_, _, _| DMatrix::zeros(2, 0),
        )
        .with_dynamics_hessian(|_, _, _, _| DMatrix::zeros(2, 2));
    if cfg.boundary_costs {
        pr = pr.with_initial_cost(log_overlap_cost(cfg.beta_i)).with_terminal_cost(log_overlap_cost(cfg.beta_f));
    }
    pr.checked()
}

/// Real part of `−i log⟨β|α⟩`, which is `Im(β*α)`.
fn log_overlap_cost(beta: Complex64) -> BoundaryCost {
    let (a, b) = (beta.re, beta.im);
    BoundaryCost::new(move |q| a * q[1] - b * q[0], move |_| DVector::from_vec(vec![-b, a]))
        .with_hessian(|_| DMatrix::zeros(2, 2))
}

pub fn build_ho(cfg: &HOConfig, kind: HOKind, eps: f64) -> Result<HOAction> {
    cfg.validate()?;
    let window = cfg.window(eps)?;
    let lag = match kind {
        HOKind::Quad => quad_lagrangian(cfg.mass, cfg.k),
        HOKind::Holo => holo_lagrangian(cfg.omega()),
        HOKind::Second => second_lagrangian(cfg.mass, cfg.k),
        HOKind::Oc => return Ok(HOAction::Control(ho_oc_problem(cfg)?, window)),
    };
    Ok(HOAction::Functional(Functional::new(Arc::new(lag), window)?))
}

/// Anchored extremal with the default anchor values: `q = 0, q̇ = 1` (quad),
/// `α = i, π = 1` (oc), `α = i` (holo).
pub fn ho_extremal(cfg: &HOConfig, kind: HOKind, eps: f64) -> Result<Extremal> {
    let m = cfg.mollifier(eps)?;
    let ac = cfg.anchor_config(eps)?;
    match build_ho(cfg, kind, eps)? {
        HOAction::Control(pr, w) => extremize_oc(&pr, &w, &ac, &[0.0, 1.0], &[1.0, 0.0], &[], &m),
        HOAction::Functional(f) => match kind {
            HOKind::Quad => extremize_functional(&f, &ac, &[0.0], &[1.0], &m),
            HOKind::Holo => extremize_functional(&f, &ac, &[0.0, 1.0], &[cfg.omega(), 0.0], &m),
            _ => Err(Error::InvalidParameter("no anchored extremal solver for the second-order action".into())),
        },
    }
}

/// `S`, `δS` and raw `δ²S` with the probe at the anchor in component 0
/// (`q` or `Re α`), using the regularizing mollifier for the variation.
pub fn ho_row(cfg: &HOConfig, kind: HOKind, eps: f64) -> Result<VariationReport> {
    let m = cfg.mollifier(eps)?;
    let ex = ho_extremal(cfg, kind, eps)?;
    let field = &ex.dense;
    let (s, ds, d2s) = match build_ho(cfg, kind, eps)? {
        HOAction::Control(pr, w) => {
            let s = oc_action(&pr, field, &w)?;
            let probe = Probe { dir: Direction::Q, comp: 0, tau: cfg.anchor };
            let ds = oc_gateaux(&pr, field, &w, probe, &m, 1e-4 * eps)?;
            let d2s = second_variation_blocks(&pr, field, &w, cfg.anchor, cfg.anchor, &m)?.qq[(0, 0)];
            (s, ds, d2s)
        }
        HOAction::Functional(f) => {
            let f = f.with_domain(field.t_start(), field.t_end())?;
            let s = f.action(field);
            let probe = VariationProbe::new(cfg.anchor, m.clone(), 0);
            let ds = gateaux(&f, field, &probe, 1)?.value;
            let d2s = gateaux(&f, field, &probe, 2)?.value;
            (s, ds, d2s)
        }
    };
    Ok(VariationReport { kind: kind.name().into(), eps, mollifier: m.id(), s, ds, d2s, error: None })
}

/// One row per `(ε, kind)` for `kind ∈ {quad, oc, holo}`, in `ε`-major order.
/// Failed rows carry the error and NaN values.
pub fn ho_table(cfg: &HOConfig) -> Result<Vec<VariationReport>> {
    cfg.validate()?;
    let jobs: Vec<(f64, HOKind)> =
        cfg.eps.iter().flat_map(|&e| [HOKind::Quad, HOKind::Oc, HOKind::Holo].map(|k| (e, k))).collect();
    Ok(jobs
        .par_iter()
        .map(|&(eps, kind)| {
            ho_row(cfg, kind, eps).unwrap_or_else(|e| VariationReport {
                kind: kind.name().into(),
                eps,
                mollifier: cfg.mollifier(eps).map(|m| m.id()).unwrap_or_default(),
                s: f64::NAN,
                ds: f64::NAN,
                d2s: f64::NAN,
                error: Some(e.to_string()),
            })
        })
        .collect())
}

/// `∫(m η̇_ε² − k η_ε²)` for the cosine-squared kernel `cos²(πx/2ε)/ε`:
/// `m π²/(4ε³) − 3k/(4ε)`.
pub fn quad_second_variation_cos2(mass: f64, k: f64, eps: f64) -> f64 {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    mass * pi2 / (4.0 * eps.powi(3)) - 3.0 * k / (4.0 * eps)
}

/// `−2ω ∫η_ε² = −3ω/(2ε)` for the cosine-squared kernel.
pub fn holo_second_variation_cos2(omega: f64, eps: f64) -> f64 {
    -1.5 * omega / eps
}

/// Growth of the quadratic-action extremal toward the window edges and the
/// largest deviation of `|α|` from 1 along the OC extremal.
#[derive(Debug, Clone, Copy)]
pub struct DivergenceSignature {
    /// `max |q|` near each edge over the anchor amplitude `|q̇(anchor)|/ω`.
    pub quad_growth_left: f64,
    pub quad_growth_right: f64,
    pub oc_alpha_deviation: f64,
}

pub fn divergence_signature(cfg: &HOConfig, eps: f64) -> Result<DivergenceSignature> {
    let quad = ho_extremal(cfg, HOKind::Quad, eps)?;
    let oc = ho_extremal(cfg, HOKind::Oc, eps)?;
    let amp = 1.0 / cfg.omega();
    let mid = 0.5 * (cfg.t_i + cfg.t_f);
    let d = &quad.dense;
    let mut left: f64 = 0.0;
    let mut right: f64 = 0.0;
    for (i, y) in d.states().iter().enumerate() {
        let t = d.t_start() + i as f64 * d.step();
        if t < mid {
            left = left.max(y[0].abs());
        } else {
            right = right.max(y[0].abs());
        }
    }
    let dev = oc
        .dense
        .states()
        .iter()
        .map(|y| ((y[0] * y[0] + y[1] * y[1]).sqrt() - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(DivergenceSignature { quad_growth_left: left / amp, quad_growth_right: right / amp, oc_alpha_deviation: dev })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variation::{Field, FnField};

    #[test]
    fn overlap_values() {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        assert!((coherent_overlap(one, one) - 1.0).norm() < 1e-15);
        assert!((coherent_overlap(z, one).re - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn quad_cosine_is_interior_extremal() {
        let cfg = HOConfig::default();
        let HOAction::Functional(f) = build_ho(&cfg, HOKind::Quad, 0.5).unwrap() else { panic!() };
        let field = FnField::scalar(|k, t| match k % 4 {
            0 => t.cos(),
            1 => -t.sin(),
            2 => -t.cos(),
            _ => t.sin(),
        });
        let m = cfg.mollifier(0.5).unwrap();
        assert!(f.el_residual(&field, 0, 5.0, &m).abs() < 1e-8);
    }

    #[test]
    fn oc_state_keeps_unit_modulus() {
        let cfg = HOConfig::default();
        let ex = ho_extremal(&cfg, HOKind::Oc, 0.5).unwrap();
        let d = &ex.dense;
        for t in [1.0, 4.5, 7.0, 10.0] {
            let r = (d.deriv(0, 0, t).powi(2) + d.deriv(1, 0, t).powi(2)).sqrt();
            assert!((r - 1.0).abs() < 1e-9, "{t}: {r}");
        }
    }
}
