//! Regularization by convolution, regularized indicator windows and
//! convergence-order estimation.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mollifiers::{Mollifier, MollifierFamily, K_MAX};
use crate::quadrature::{gl64, GaussLegendre};

/// `(k, x) -> f^{(k)}(x)`.
pub type Rep = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Raw,
    Convolved,
    Window,
    Derived,
}

/// A representative of a generalized function on the real line.
#[derive(Clone)]
pub struct GenFunction {
    rep: Rep,
    /// Moment order of the regularization, `None` for exact functions.
    pub order: Option<usize>,
    pub provenance: Provenance,
    pub mollifier: Option<String>,
    max_deriv: usize,
}

impl std::fmt::Debug for GenFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GenFunction")
            .field("order", &self.order)
            .field("provenance", &self.provenance)
            .field("mollifier", &self.mollifier)
            .field("max_deriv", &self.max_deriv)
            .finish()
    }
}

fn min_order(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl GenFunction {
    /// Exact function with no derivative access.
    pub fn raw(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            rep: Arc::new(move |_, x| f(x)),
            order: None,
            provenance: Provenance::Raw,
            mollifier: None,
            max_deriv: 0,
        }
    }

    /// Exact function with analytic derivatives up to `max_deriv`.
    pub fn raw_with_derivs(
        max_deriv: usize,
        f: impl Fn(usize, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            rep: Arc::new(f),
            order: None,
            provenance: Provenance::Raw,
            mollifier: None,
            max_deriv,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.rep)(0, x)
    }

    pub fn deriv(&self, k: usize, x: f64) -> Result<f64> {
        if k > self.max_deriv {
            return Err(Error::DerivativeOrder { requested: k, max: self.max_deriv });
        }
        Ok((self.rep)(k, x))
    }

    pub fn max_deriv(&self) -> usize {
        self.max_deriv
    }

    pub fn scale(&self, c: f64) -> Self {
        let r = self.rep.clone();
        Self {
            rep: Arc::new(move |k, x| c * r(k, x)),
            provenance: Provenance::Derived,
            ..self.clone()
        }
    }

    pub fn add(&self, other: &GenFunction) -> Self {
        let (a, b) = (self.rep.clone(), other.rep.clone());
        Self {
            rep: Arc::new(move |k, x| a(k, x) + b(k, x)),
            order: min_order(self.order, other.order),
            provenance: Provenance::Derived,
            mollifier: self.mollifier.clone().or_else(|| other.mollifier.clone()),
            max_deriv: self.max_deriv.min(other.max_deriv),
        }
    }

    /// Pointwise product; derivatives by the Leibniz rule.
    pub fn mul(&self, other: &GenFunction) -> Self {
        let (a, b) = (self.rep.clone(), other.rep.clone());
        Self {
            rep: Arc::new(move |k, x| {
                let mut c = 1.0;
                let mut s = 0.0;
                for j in 0..=k {
                    s += c * a(j, x) * b(k - j, x);
                    c = c * (k - j) as f64 / (j + 1) as f64;
                }
                s
            }),
            order: min_order(self.order, other.order),
            provenance: Provenance::Derived,
            mollifier: self.mollifier.clone().or_else(|| other.mollifier.clone()),
            max_deriv: self.max_deriv.min(other.max_deriv),
        }
    }

    pub fn derivative(&self) -> Result<Self> {
        if self.max_deriv == 0 {
            return Err(Error::DerivativeOrder { requested: 1, max: 0 });
        }
        let r = self.rep.clone();
        Ok(Self {
            rep: Arc::new(move |k, x| r(k + 1, x)),
            provenance: Provenance::Derived,
            max_deriv: self.max_deriv - 1,
            ..self.clone()
        })
    }
}

/// Value of `∫ f(y) η_ε^{(k)}(y - x) dy` and the Richardson difference
/// between one and two panels per mollifier half-support.
pub fn convolve_at(f: &dyn Fn(f64) -> f64, m: &Mollifier, k: usize, x: f64) -> (f64, f64) {
    let r = m.radius();
    let rule = gl64();
    let base = if m.family().kind().compact() { 2 + m.q() } else { 2 };
    let coarse = panel_sum(rule, f, m, k, x, r, base);
    let fine = panel_sum(rule, f, m, k, x, r, 2 * base);
    (fine, (fine - coarse).abs())
}

fn panel_sum(
    rule: &GaussLegendre,
    f: &dyn Fn(f64) -> f64,
    m: &Mollifier,
    k: usize,
    x: f64,
    r: f64,
    per_half: usize,
) -> f64 {
    let n = 2 * per_half;
    let h = 2.0 * r / n as f64;
    let mut s = 0.0;
    for j in 0..n {
        let lo = -r + j as f64 * h;
        s += rule.integrate(|u| f(x + u) * m.d(k, u), lo, lo + h);
    }
    s
}

/// The η-regularization `f̃(x) = ∫ f(y) η_ε(y − x) dy`.
pub fn convolve(f: impl Fn(f64) -> f64 + Send + Sync + 'static, m: &Mollifier) -> GenFunction {
    let m2 = m.clone();
    let f = Arc::new(f);
    GenFunction {
        rep: Arc::new(move |k, x| {
            // d/dx η(y − x) = −η'(y − x)
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * convolve_at(&*f, &m2, k, x).0
        }),
        order: Some(m.q()),
        provenance: Provenance::Convolved,
        mollifier: Some(m.id()),
        max_deriv: K_MAX,
    }
}

/// Regularized indicator `Ĩ_{[a,b]} = 1_{[a,b]} * η_ε`. Infinite ends allowed.
#[derive(Debug, Clone)]
pub struct Window {
    pub a: f64,
    pub b: f64,
    m: Mollifier,
}

impl Window {
    pub fn new(a: f64, b: f64, m: Mollifier) -> Result<Self> {
        if a.is_nan() || b.is_nan() || a >= b {
            return Err(Error::InvalidParameter(format!("window needs a < b, got [{a}, {b}]")));
        }
        Ok(Self { a, b, m })
    }

    /// The window on the whole line, identically 1.
    pub fn line(m: Mollifier) -> Self {
        Self { a: f64::NEG_INFINITY, b: f64::INFINITY, m }
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.m
    }

    pub fn eval(&self, x: f64) -> f64 {
        let lo = if self.a.is_finite() { self.m.cdf(x - self.a) } else { 1.0 };
        let hi = if self.b.is_finite() { self.m.cdf(x - self.b) } else { 0.0 };
        lo - hi
    }

    /// `Ĩ^{(k)}(x)`, using `Ĩ' = η_ε(x − a) − η_ε(x − b)`.
    pub fn deriv(&self, k: usize, x: f64) -> f64 {
        if k == 0 {
            return self.eval(x);
        }
        let mut s = 0.0;
        if self.a.is_finite() {
            s += self.m.d(k - 1, x - self.a);
        }
        if self.b.is_finite() {
            s -= self.m.d(k - 1, x - self.b);
        }
        s
    }

    /// Regularized indicator of the complement `ℝ ∖ [a, b]`.
    pub fn complement(&self, x: f64) -> f64 {
        let below = if self.a.is_finite() { self.m.cdf(self.a - x) } else { 0.0 };
        let above = if self.b.is_finite() { self.m.cdf(x - self.b) } else { 0.0 };
        below + above
    }

    /// Interval where the window can be nonzero.
    pub fn support(&self) -> (f64, f64) {
        (self.a - self.m.radius(), self.b + self.m.radius())
    }

    /// Interval where the window equals 1.
    pub fn plateau(&self) -> (f64, f64) {
        (self.a + self.m.radius(), self.b - self.m.radius())
    }

    /// Breakpoints for panel quadrature of window-weighted integrands.
    pub fn breaks(&self) -> Vec<f64> {
        let r = self.m.radius();
        let mut v = Vec::new();
        for e in [self.a, self.b] {
            if e.is_finite() {
                v.extend([e - r, e, e + r]);
            }
        }
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Riemann-mollifier coefficients `f_k` with reconstruction `Σ f_k η_ε(y_k − x)`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub grid: Vec<f64>,
    pub coeffs: Vec<f64>,
    /// Uniform grid with spacing ε: coefficients are plain samples `f(y_k)`
    /// and the kernel is `ε η_ε = η(·/ε)`.
    pub simplified: bool,
}

impl Decomposition {
    pub fn reconstruct(&self, m: &Mollifier, x: f64) -> f64 {
        let w = if self.simplified { m.eps() } else { 1.0 };
        let r = m.radius();
        self.grid
            .iter()
            .zip(&self.coeffs)
            .filter(|(y, _)| (**y - x).abs() < r || !m.family().kind().compact())
            .map(|(y, c)| c * w * m.eval(y - x))
            .sum()
    }
}

pub fn approx_decompose(f: impl Fn(f64) -> f64, grid: &[f64], m: &Mollifier) -> Result<Decomposition> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("approximation grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("approximation grid must be strictly increasing".into()));
    }
    let n = grid.len();
    let spacing = |k: usize| {
        if n == 1 {
            m.eps()
        } else if k + 1 < n {
            grid[k + 1] - grid[k]
        } else {
            grid[k] - grid[k - 1]
        }
    };
    let simplified = (0..n).all(|k| (spacing(k) - m.eps()).abs() <= 1e-12 * m.eps().max(1.0));
    let coeffs = (0..n)
        .map(|k| if simplified { f(grid[k]) } else { f(grid[k]) * spacing(k) })
        .collect();
    Ok(Decomposition { grid: grid.to_vec(), coeffs, simplified })
}

/// `∫ η_ε(z − x) η'_{ε'}(z − y) dz` for two mollifiers.
pub fn mollifier_inner(m1: &Mollifier, m2: &Mollifier, x: f64, y: f64) -> f64 {
    let (lo, hi) = ((x - m1.radius()).max(y - m2.radius()), (x + m1.radius()).min(y + m2.radius()));
    if hi <= lo {
        return 0.0;
    }
    let rule = gl64();
    let n = 8;
    let h = (hi - lo) / n as f64;
    let mut s = 0.0;
    for j in 0..n {
        let a = lo + j as f64 * h;
        s += rule.integrate(|z| m1.eval(z - x) * m2.eval(z - y), a, a + h);
    }
    s
}

/// Result of a log-log convergence fit.
#[derive(Debug, Clone)]
pub struct OrderFit {
    pub slope: f64,
    pub points: Vec<(f64, f64)>,
    /// Some error reached the quadrature floor; the slope is not meaningful.
    pub floor_reached: bool,
}

/// Error level below which a fit is flagged unreliable.
pub const ERROR_FLOOR: f64 = 1e-12;

pub fn fit_slope(points: &[(f64, f64)]) -> OrderFit {
    fit_slope_above(points, ERROR_FLOOR)
}

/// [`fit_slope`] with a caller-chosen error floor.
pub fn fit_slope_above(points: &[(f64, f64)], floor: f64) -> OrderFit {
    let n = points.len() as f64;
    let floor_reached = points.iter().any(|p| !(p.1 > floor));
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.max(1e-300).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    OrderFit { slope: sxy / sxx, points: points.to_vec(), floor_reached }
}

pub(crate) fn check_eps_list(eps: &[f64]) -> Result<()> {
    if eps.len() < 3 {
        return Err(Error::InvalidParameter("need at least three ε values".into()));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("ε values must be strictly decreasing".into()));
    }
    Ok(())
}

/// Fits the slope of `log ‖f̃ − f‖∞` against `log ε` on `probes`.
pub fn order_estimate(
    f: &(dyn Fn(f64) -> f64 + Sync),
    family: &Arc<MollifierFamily>,
    q: usize,
    eps_list: &[f64],
    probes: &[f64],
) -> Result<OrderFit> {
    check_eps_list(eps_list)?;
    let mut points = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let m = Mollifier::new(family.clone(), q, eps)?;
        let err = probes
            .iter()
            .map(|&x| (convolve_at(f, &m, 0, x).0 - f(x)).abs())
            .fold(0.0, f64::max);
        points.push((eps, err));
    }
    Ok(fit_slope(&points))
}
