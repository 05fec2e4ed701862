//! Gateaux derivatives of window-weighted functionals against mollifier
//! perturbations, the closed-form first variation with boundary terms,
//! second variations and the matrix-exponential variation lemma.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::generalized::Window;
use crate::mollifiers::Mollifier;
use crate::quadrature::{gl16, panels_integrate};

/// Highest field derivative any functional may consume.
pub const MAX_ORDER: usize = 2;
/// `[T, T', T'']` for one component.
pub type Jet = [f64; MAX_ORDER + 1];

/// A vector field on the line with derivative access.
pub trait Field: Send + Sync {
    fn dim(&self) -> usize;
    /// `d^k/dt^k` of component `c`.
    fn deriv(&self, c: usize, k: usize, t: f64) -> f64;

    fn jets(&self, t: f64) -> Vec<Jet> {
        (0..self.dim())
            .map(|c| [self.deriv(c, 0, t), self.deriv(c, 1, t), self.deriv(c, 2, t)])
            .collect()
    }
}

/// Field given by a closure `(component, k, t) -> value`.
#[derive(Clone)]
pub struct FnField {
    dim: usize,
    f: Arc<dyn Fn(usize, usize, f64) -> f64 + Send + Sync>,
}

impl FnField {
    pub fn new(dim: usize, f: impl Fn(usize, usize, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { dim, f: Arc::new(f) }
    }

    /// Scalar field from a closure `(k, t) -> d^k T/dt^k`.
    pub fn scalar(f: impl Fn(usize, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(1, move |_, k, t| f(k, t))
    }
}

impl Field for FnField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn deriv(&self, c: usize, k: usize, t: f64) -> f64 {
        (self.f)(c, k, t)
    }
}

/// `T + λ η_ε(· − y)` in one component.
pub struct Perturbed<'a> {
    pub base: &'a dyn Field,
    pub comp: usize,
    pub y: f64,
    pub lambda: f64,
    pub m: &'a Mollifier,
}

impl Field for Perturbed<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn deriv(&self, c: usize, k: usize, t: f64) -> f64 {
        let v = self.base.deriv(c, k, t);
        if c == self.comp {
            v + self.lambda * self.m.d(k, t - self.y)
        } else {
            v
        }
    }
}

/// Integrand `F(x, T, ∂T, ∂²T)` with its partial derivatives.
pub trait Lagrangian: Send + Sync {
    fn dim(&self) -> usize;
    /// Highest derivative order `n` appearing in `F`.
    fn order(&self) -> usize;
    fn value(&self, x: f64, j: &[Jet]) -> f64;
    /// `∂F/∂(∂^k T^c)`.
    fn partial(&self, x: f64, j: &[Jet], c: usize, k: usize) -> f64;
    /// `∂²F/∂(∂^{k1} T^{c1}) ∂(∂^{k2} T^{c2})`; central differences of
    /// [`Lagrangian::partial`] unless overridden.
    fn second(&self, x: f64, j: &[Jet], a: (usize, usize), b: (usize, usize)) -> f64 {
        let h = 1e-5 * (1.0 + j[b.0][b.1].abs());
        let mut jp = j.to_vec();
        let mut jm = j.to_vec();
        jp[b.0][b.1] += h;
        jm[b.0][b.1] -= h;
        (self.partial(x, &jp, a.0, a.1) - self.partial(x, &jm, a.0, a.1)) / (2.0 * h)
    }
}

type ValueFn = dyn Fn(f64, &[Jet]) -> f64 + Send + Sync;
type PartialFn = dyn Fn(f64, &[Jet], usize, usize) -> f64 + Send + Sync;
type SecondFn = dyn Fn(f64, &[Jet], (usize, usize), (usize, usize)) -> f64 + Send + Sync;

/// Closure-backed [`Lagrangian`].
#[derive(Clone)]
pub struct FnLagrangian {
    dim: usize,
    order: usize,
    value: Arc<ValueFn>,
    partial: Arc<PartialFn>,
    second: Option<Arc<SecondFn>>,
}

impl FnLagrangian {
    pub fn new(
        dim: usize,
        order: usize,
        value: impl Fn(f64, &[Jet]) -> f64 + Send + Sync + 'static,
        partial: impl Fn(f64, &[Jet], usize, usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { dim, order, value: Arc::new(value), partial: Arc::new(partial), second: None }
    }

    /// Supplies analytic second partials.
    pub fn with_second(
        mut self,
        second: impl Fn(f64, &[Jet], (usize, usize), (usize, usize)) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.second = Some(Arc::new(second));
        self
    }
}

impl Lagrangian for FnLagrangian {
    fn dim(&self) -> usize {
        self.dim
    }
    fn order(&self) -> usize {
        self.order
    }
    fn value(&self, x: f64, j: &[Jet]) -> f64 {
        (self.value)(x, j)
    }
    fn partial(&self, x: f64, j: &[Jet], c: usize, k: usize) -> f64 {
        (self.partial)(x, j, c, k)
    }
    fn second(&self, x: f64, j: &[Jet], a: (usize, usize), b: (usize, usize)) -> f64 {
        match &self.second {
            Some(s) => s(x, j, a, b),
            None => {
                let h = 1e-5 * (1.0 + j[b.0][b.1].abs());
                let mut jp = j.to_vec();
                let mut jm = j.to_vec();
                jp[b.0][b.1] += h;
                jm[b.0][b.1] -= h;
                (self.partial(x, &jp, a.0, a.1) - self.partial(x, &jm, a.0, a.1)) / (2.0 * h)
            }
        }
    }
}

/// `I[T] = ∫ Ĩ(x) F(x, T, ∂T, …) dx`.
#[derive(Clone)]
pub struct Functional {
    lag: Arc<dyn Lagrangian>,
    window: Window,
    domain: (f64, f64),
    /// Maximum quadrature panel width.
    pub panel: f64,
}

impl Functional {
    /// Builds the functional after checking the supplied partials against
    /// central differences of `F` on deterministic pseudo-random jets.
    pub fn new(lag: Arc<dyn Lagrangian>, window: Window) -> Result<Self> {
        let domain = window.support();
        if lag.order() > MAX_ORDER {
            return Err(Error::DerivativeOrder { requested: lag.order(), max: MAX_ORDER });
        }
        let panel = (0.25 * window.mollifier().radius()).min(0.25);
        let f = Self { lag, window, domain, panel };
        f.self_check()?;
        Ok(f)
    }

    /// Restricts integration to `[lo, hi]` (needed for windows on the whole line).
    pub fn with_domain(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!("domain [{lo}, {hi}] is empty")));
        }
        let (a, b) = self.window.support();
        self.domain = (lo.max(a), hi.min(b));
        Ok(self)
    }

    pub fn lagrangian(&self) -> &Arc<dyn Lagrangian> {
        &self.lag
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn self_check(&self) -> Result<()> {
        let d = self.lag.dim();
        let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let (lo, hi) = self.domain;
        let (lo, hi) = if lo.is_finite() && hi.is_finite() { (lo, hi) } else { (-1.0, 1.0) };
        for _ in 0..8 {
            let x = lo + (hi - lo) * 0.5 * (next() + 1.0);
            let jets: Vec<Jet> = (0..d).map(|_| [next(), next(), next()]).collect();
            for c in 0..d {
                for k in 0..=self.lag.order() {
                    let h = 1e-6;
                    let mut jp = jets.clone();
                    let mut jm = jets.clone();
                    jp[c][k] += h;
                    jm[c][k] -= h;
                    let fd = (self.lag.value(x, &jp) - self.lag.value(x, &jm)) / (2.0 * h);
                    let an = self.lag.partial(x, &jets, c, k);
                    let scale = fd.abs().max(an.abs()).max(1.0);
                    if (fd - an).abs() > 1e-6 * scale {
                        return Err(Error::PartialCheck(format!(
                            "∂F/∂(∂^{k} T^{c}) at x={x}: supplied {an}, differences {fd}"
                        )));
                    }
                    for c2 in 0..d {
                        for k2 in 0..=self.lag.order() {
                            let h = 1e-5;
                            let mut jp = jets.clone();
                            let mut jm = jets.clone();
                            jp[c2][k2] += h;
                            jm[c2][k2] -= h;
                            let fd = (self.lag.partial(x, &jp, c, k) - self.lag.partial(x, &jm, c, k)) / (2.0 * h);
                            let an = self.lag.second(x, &jets, (c, k), (c2, k2));
                            let scale = fd.abs().max(an.abs()).max(1.0);
                            if (fd - an).abs() > 1e-6 * scale {
                                return Err(Error::PartialCheck(format!(
                                    "second partial ({c},{k})x({c2},{k2}) at x={x}: supplied {an}, differences {fd}"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `∫_{lo}^{hi} g` with panels split at the window kinks and `extra` points.
    pub fn integrate(&self, g: impl Fn(f64) -> f64, lo: f64, hi: f64, extra: &[f64]) -> f64 {
        let (lo, hi) = (lo.max(self.domain.0), hi.min(self.domain.1));
        if !(lo < hi) {
            return 0.0;
        }
        let mut breaks = self.window.breaks();
        breaks.extend_from_slice(extra);
        panels_integrate(g, lo, hi, &breaks, self.panel)
    }

    /// `I[T]` over the whole domain.
    pub fn action(&self, field: &dyn Field) -> f64 {
        let (lo, hi) = self.domain;
        self.integrate(|x| self.window.eval(x) * self.lag.value(x, &field.jets(x)), lo, hi, &[])
    }

    /// Strong-form density `Σ_k (−1)^k d^k/dx^k [Ĩ ∂F/∂(∂^k T^c)]`, with window
    /// derivatives from the exact identity and the total derivatives of the
    /// partials by Richardson-extrapolated central differences.
    pub fn el_density(&self, field: &dyn Field, c: usize, x: f64) -> f64 {
        let g = |k: usize, t: f64| self.lag.partial(t, &field.jets(t), c, k);
        let h = 1e-2 * self.window.mollifier().eps().min(1.0);
        let dg = |k: usize, m: usize| -> f64 {
            match m {
                0 => g(k, x),
                1 => {
                    let d = |h: f64| (g(k, x + h) - g(k, x - h)) / (2.0 * h);
                    (4.0 * d(0.5 * h) - d(h)) / 3.0
                }
                2 => {
                    let g0 = g(k, x);
                    let d = |h: f64| (g(k, x + h) - 2.0 * g0 + g(k, x - h)) / (h * h);
                    (4.0 * d(0.5 * h) - d(h)) / 3.0
                }
                _ => unreachable!(),
            }
        };
        let mut s = 0.0;
        for k in 0..=self.lag.order() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let mut c_kj = 1.0;
            for j in 0..=k {
                s += sign * c_kj * self.window.deriv(j, x) * dg(k, k - j);
                c_kj = c_kj * (k - j) as f64 / (j + 1) as f64;
            }
        }
        s
    }

    /// Closed-form first variation `∫ el_density(x) η_ε(x − y) dx`.
    pub fn el_residual(&self, field: &dyn Field, c: usize, y: f64, m: &Mollifier) -> f64 {
        let r = m.radius();
        self.integrate(|x| self.el_density(field, c, x) * m.eval(x - y), y - r, y + r, &[y])
    }
}

/// Perturbation `λ η_ε(· − y)` applied to component `comp`.
#[derive(Debug, Clone)]
pub struct VariationProbe {
    pub y: f64,
    pub lambda: f64,
    pub m: Mollifier,
    pub comp: usize,
}

impl VariationProbe {
    /// Default amplitude `λ = ε·1e-4`.
    pub fn new(y: f64, m: Mollifier, comp: usize) -> Self {
        let lambda = m.eps() * 1e-4;
        Self { y, lambda, m, comp }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= self.m.eps() * 1e-3) {
            return Err(Error::InvalidParameter(format!(
                "λ={} must satisfy 0 < λ ≤ ε·1e-3 (ε={})",
                self.lambda,
                self.m.eps()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GateauxValue {
    pub value: f64,
    /// Relative change when λ is halved.
    pub lambda_drift: f64,
    pub unstable: bool,
}

/// Relative λ-halving drift above which a Gateaux value is flagged.
pub const LAMBDA_DRIFT_TOL: f64 = 1e-6;

fn gateaux_raw(i: &Functional, field: &dyn Field, p: &VariationProbe, order: u8, lambda: f64) -> f64 {
    let r = p.m.radius();
    let plus = Perturbed { base: field, comp: p.comp, y: p.y, lambda, m: &p.m };
    let minus = Perturbed { base: field, comp: p.comp, y: p.y, lambda: -lambda, m: &p.m };
    let lag = i.lagrangian();
    let w = i.window();
    i.integrate(
        |x| {
            let fp = lag.value(x, &plus.jets(x));
            let fm = lag.value(x, &minus.jets(x));
            let v = if order == 1 {
                (fp - fm) / (2.0 * lambda)
            } else {
                let f0 = lag.value(x, &field.jets(x));
                (fp - 2.0 * f0 + fm) / (lambda * lambda)
            };
            w.eval(x) * v
        },
        p.y - r,
        p.y + r,
        &[p.y],
    )
}

/// Order-1 or order-2 Gateaux derivative by central differences in λ.
/// The differences are taken under the integral, which is the same number as
/// differencing `I` itself without the cancellation of large totals.
pub fn gateaux(i: &Functional, field: &dyn Field, probe: &VariationProbe, order: u8) -> Result<GateauxValue> {
    probe.validate()?;
    if !(order == 1 || order == 2) {
        return Err(Error::InvalidParameter(format!("variation order {order} (1 or 2)")));
    }
    if probe.comp >= field.dim() {
        return Err(Error::Dimension(format!("component {} of a {}-field", probe.comp, field.dim())));
    }
    let lam = if order == 1 { probe.lambda } else { probe.lambda * 10.0 };
    let v = gateaux_raw(i, field, probe, order, lam);
    let v2 = gateaux_raw(i, field, probe, order, 0.5 * lam);
    let scale = v.abs().max(v2.abs()).max(1e-300);
    let drift = (v - v2).abs() / scale;
    let unstable = drift > LAMBDA_DRIFT_TOL && (v - v2).abs() > 1e-10;
    Ok(GateauxValue { value: v2, lambda_drift: drift, unstable })
}

#[derive(Debug, Clone, Copy)]
pub struct LegendreClebsch {
    /// `[F_TT − d/dx F_TT'] ∫η_ε² + F_T'T' ∫η_ε'²`.
    pub value: f64,
    /// The printed two-scale formula with `η_ε(0)` and `ε η_ε''(0)`.
    pub literal_value: f64,
    /// Sign of `∂²F/∂(∂T)²`, which controls the `ε → 0` behavior.
    pub dominant_sign: i8,
}

/// Legendre-Clebsch expansion of the diagonal second variation.
pub fn legendre_clebsch(i: &Functional, field: &dyn Field, c: usize, y: f64, m: &Mollifier) -> Result<LegendreClebsch> {
    let lag = i.lagrangian();
    if lag.order() != 1 {
        return Err(Error::InvalidParameter("Legendre-Clebsch needs a first-order functional".into()));
    }
    let e0 = m.d(0, 0.0);
    if m.d(1, 0.0).abs() > 1e-12 * e0 / m.eps() {
        return Err(Error::InvalidParameter("mollifier needs η'(0) = 0".into()));
    }
    let w = i.window();
    let coef = |t: f64, a: (usize, usize), b: (usize, usize)| w.eval(t) * lag.second(t, &field.jets(t), a, b);
    let ftt = coef(y, (c, 0), (c, 0));
    let fpp = coef(y, (c, 1), (c, 1));
    let h = 1e-4;
    let dftp = (coef(y + h, (c, 0), (c, 1)) - coef(y - h, (c, 0), (c, 1))) / (2.0 * h);
    let r = m.radius();
    let rule = gl16();
    let n = 16;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    for j in 0..n {
        let a = -r + 2.0 * r * j as f64 / n as f64;
        let b = a + 2.0 * r / n as f64;
        s0 += rule.integrate(|u| m.d(0, u).powi(2), a, b);
        s1 += rule.integrate(|u| m.d(1, u).powi(2), a, b);
    }
    let value = (ftt - dftp) * s0 + fpp * s1;
    let literal_value = (ftt - dftp) * e0 - fpp * m.eps() * m.d(2, 0.0);
    let dominant_sign = if fpp > 0.0 {
        1
    } else if fpp < 0.0 {
        -1
    } else {
        0
    };
    Ok(LegendreClebsch { value, literal_value, dominant_sign })
}

/// Default truncation order of the adjoint series.
pub const LIE_TERMS: usize = 30;

/// `η_ε(x − y) e^f C`, `C = Σ_{n≥0} (−1)^n/(n+1)! ad_f^n(τ)`.
pub fn lie_exp_variation(
    f: &DMatrix<f64>,
    tau: &DMatrix<f64>,
    x: f64,
    y: f64,
    m: &Mollifier,
    terms: usize,
) -> Result<DMatrix<f64>> {
    if !f.is_square() || f.shape() != tau.shape() {
        return Err(Error::Dimension(format!(
            "f is {:?}, tau is {:?}; both must be the same square shape",
            f.shape(),
            tau.shape()
        )));
    }
    let c = adjoint_series(f, tau, terms)?;
    Ok(f.clone().exp() * c * m.eval(x - y))
}

/// `Σ_{n=0}^{terms} (−1)^n/(n+1)! ad_f^n(τ)` with a truncation bound check.
pub fn adjoint_series(f: &DMatrix<f64>, tau: &DMatrix<f64>, terms: usize) -> Result<DMatrix<f64>> {
    let mut term = tau.clone();
    let mut sum = tau.clone();
    let mut fact = 1.0;
    for n in 1..=terms {
        term = f * &term - &term * f;
        fact *= (n + 1) as f64;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum += &term * (sign / fact);
    }
    let nf = f.norm();
    let mut bound = tau.norm();
    for n in 1..=terms + 1 {
        bound *= 2.0 * nf / (n + 1) as f64;
    }
    if bound > 1e-13 * sum.norm().max(tau.norm()) {
        return Err(Error::Series(format!(
            "{terms} terms leave a remainder bound {bound:e} for ‖f‖ = {nf}"
        )));
    }
    Ok(sum)
}
