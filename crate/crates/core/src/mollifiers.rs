//! Mollifier families of arbitrary moment order.
//!
//! A family starts from an even mother function `η_0` and adds derivative
//! corrections `η_q = η_{q-1} + α_q ∂^q η_0` so that moments `1..=q` vanish.
//! All mother derivatives are analytic.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive, gl16};

/// Highest moment order a family may be built to.
pub const Q_MAX_LIMIT: usize = 10;
/// Highest derivative of `η_q` available through [`Mollifier::eval_k`].
pub const K_MAX: usize = 4;
const NDER: usize = Q_MAX_LIMIT + K_MAX + 2;
const COEFF_TOL: f64 = 1e-12;
const MOMENT_TOL: f64 = 1e-9;
const GAUSS_CUT: f64 = 12.0;
const TABLE_CELLS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MollifierKind {
    Bump { p: u32 },
    Gaussian { sigma: f64 },
    CosineSquared,
}

impl fmt::Display for MollifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MollifierKind::Bump { p } => write!(f, "bump(p={p})"),
            MollifierKind::Gaussian { sigma } => write!(f, "gaussian(sigma={sigma})"),
            MollifierKind::CosineSquared => write!(f, "cos2"),
        }
    }
}

impl MollifierKind {
    /// Parses `bump`, `bump:4`, `gaussian`, `gaussian:0.5`, `cos2`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let bad = |m: &str| Error::InvalidParameter(format!("mollifier `{s}`: {m}"));
        match name {
            "bump" => {
                let p = match arg {
                    Some(a) => a.parse().map_err(|_| bad("p must be an integer"))?,
                    None => 2,
                };
                Ok(MollifierKind::Bump { p })
            }
            "gaussian" | "gauss" => {
                let sigma = match arg {
                    Some(a) => a.parse().map_err(|_| bad("sigma must be a number"))?,
                    None => 1.0,
                };
                Ok(MollifierKind::Gaussian { sigma })
            }
            "cos2" | "cosine-squared" | "cos-squared" => Ok(MollifierKind::CosineSquared),
            _ => Err(bad("unknown kind (bump, gaussian, cos2)")),
        }
    }

    /// Half-width of the unscaled support used for quadrature.
    pub fn radius(&self) -> f64 {
        match self {
            MollifierKind::Bump { .. } | MollifierKind::CosineSquared => 1.0,
            MollifierKind::Gaussian { sigma } => GAUSS_CUT * sigma,
        }
    }

    pub fn compact(&self) -> bool {
        !matches!(self, MollifierKind::Gaussian { .. })
    }
}

/// Cumulative tables for mothers without closed-form antiderivatives.
#[derive(Debug, Clone)]
struct Tables {
    knots: Vec<f64>,
    mass: Vec<f64>,
    first: Vec<f64>,
}

/// A mother function with its moment-cancelling coefficients.
#[derive(Debug, Clone)]
pub struct MollifierFamily {
    kind: MollifierKind,
    q_max: usize,
    alphas: Vec<f64>,
    norm: f64,
    roots: Vec<Complex64>,
    tables: Option<Tables>,
}

impl MollifierFamily {
    pub fn build(kind: MollifierKind, q_max: usize) -> Result<Self> {
        match kind {
            MollifierKind::Bump { p } if p < 2 || p % 2 != 0 => {
                return Err(Error::InvalidParameter(format!(
                    "bump exponent p={p} must be even and at least 2"
                )))
            }
            MollifierKind::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                return Err(Error::InvalidParameter(format!("gaussian sigma={sigma} must be positive")))
            }
            _ => {}
        }
        if q_max > Q_MAX_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "q_max={q_max} exceeds the supported limit {Q_MAX_LIMIT}"
            )));
        }
        let q_max = if kind == MollifierKind::CosineSquared { q_max.min(1) } else { q_max };
        let roots = match kind {
            MollifierKind::Bump { p } => (0..p)
                .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / p as f64))
                .collect(),
            _ => Vec::new(),
        };
        let mut fam = MollifierFamily {
            kind,
            q_max,
            alphas: vec![1.0],
            norm: 1.0,
            roots,
            tables: None,
        };
        if let MollifierKind::Bump { .. } = kind {
            let mass = adaptive(|x| fam.mother_raw(x), -1.0, 1.0, COEFF_TOL * 1e-2);
            if !(mass > 0.0) {
                return Err(Error::Quadrature("bump normalization integral".into()));
            }
            fam.norm = 1.0 / mass;
            fam.tables = Some(fam.build_tables());
        }
        if kind == MollifierKind::CosineSquared {
            let mass = adaptive(|x| fam.mother_derivs(x, 0)[0], -1.0, 1.0, COEFF_TOL);
            if (mass - 1.0).abs() > MOMENT_TOL {
                return Err(Error::MomentCheck { order: 0, value: mass - 1.0, tol: MOMENT_TOL });
            }
        }
        let r = kind.radius();
        for q in 1..=q_max {
            if q % 2 == 1 {
                // even mother: odd moments vanish by symmetry
                fam.alphas.push(0.0);
                continue;
            }
            let prev = q - 1;
            let mut fact = 1.0;
            for j in 2..=q {
                fact *= j as f64;
            }
            let m = fam.moment_unscaled(prev, q, r);
            if !m.is_finite() {
                return Err(Error::Quadrature(format!("moment integral ∫x^{q} η_{prev}")));
            }
            fam.alphas.push(-m / fact);
        }
        Ok(fam)
    }

    pub fn kind(&self) -> MollifierKind {
        self.kind
    }

    pub fn q_max(&self) -> usize {
        self.q_max
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Normalization factor of the mother (A_p for the bump, 1 otherwise).
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        if self.kind.compact() {
            Some((-1.0, 1.0))
        } else {
            None
        }
    }

    fn mother_raw(&self, x: f64) -> f64 {
        match self.kind {
            MollifierKind::Bump { p } => {
                let d = bump_denominator(x, p);
                if d >= 0.0 {
                    0.0
                } else {
                    (1.0 / d).exp()
                }
            }
            _ => unreachable!(),
        }
    }

    /// Derivatives `∂^n η_0(x)` for `n = 0..=upto`.
    pub fn mother_derivs(&self, x: f64, upto: usize) -> [f64; NDER] {
        let mut out = [0.0; NDER];
        assert!(upto < NDER, "derivative order {upto} beyond table");
        match self.kind {
            MollifierKind::Gaussian { sigma } => {
                let u = x / sigma;
                let g = (-0.5 * u * u).exp() / (sigma * (2.0 * PI).sqrt());
                let mut h0 = 1.0;
                let mut h1 = u;
                let mut s = 1.0;
                out[0] = g;
                if upto >= 1 {
                    s *= -1.0 / sigma;
                    out[1] = s * h1 * g;
                }
                for n in 2..=upto {
                    let h2 = u * h1 - (n - 1) as f64 * h0;
                    h0 = h1;
                    h1 = h2;
                    s *= -1.0 / sigma;
                    out[n] = s * h1 * g;
                }
            }
            MollifierKind::CosineSquared => {
                if x.abs() < 1.0 {
                    out[0] = (0.5 * PI * x).cos().powi(2);
                    let mut pk = 0.5;
                    for (n, o) in out.iter_mut().enumerate().take(upto + 1).skip(1) {
                        pk *= PI;
                        *o = pk * (PI * x + n as f64 * 0.5 * PI).cos();
                    }
                }
            }
            MollifierKind::Bump { p } => {
                let d = bump_denominator(x, p);
                if d >= 0.0 {
                    return out;
                }
                out[0] = self.norm * (1.0 / d).exp();
                if out[0] == 0.0 {
                    return out;
                }
                // g = 1/(x^p - 1) = Σ_j (r_j/p)/(x - r_j) over the p-th roots of unity
                let mut gd = [0.0; NDER];
                let inv_p = 1.0 / p as f64;
                for (k, slot) in gd.iter_mut().enumerate().take(upto + 1).skip(1) {
                    // g^{(k)} = Σ_j (r_j/p) (-1)^k k! (x - r_j)^{-(k+1)}
                    let mut fact = 1.0;
                    for j in 2..=k {
                        fact *= j as f64;
                    }
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let mut acc = Complex64::new(0.0, 0.0);
                    for r in &self.roots {
                        acc += r * (Complex64::new(x, 0.0) - r).powi(-(k as i32 + 1));
                    }
                    *slot = sign * fact * inv_p * acc.re;
                }
                // η^{(n+1)} = Σ_j C(n,j) η^{(j)} g^{(n-j+1)}
                for n in 0..upto {
                    let mut c = 1.0;
                    let mut acc = 0.0;
                    for j in 0..=n {
                        acc += c * out[j] * gd[n - j + 1];
                        c = c * (n - j) as f64 / (j + 1) as f64;
                    }
                    out[n + 1] = acc;
                }
            }
        }
        out
    }

    /// `∂^k η_q(x)` on the unscaled axis.
    pub fn eta_q_deriv(&self, q: usize, k: usize, x: f64) -> f64 {
        let d = self.mother_derivs(x, q + k);
        let mut s = 0.0;
        for (n, a) in self.alphas.iter().enumerate().take(q + 1) {
            if *a != 0.0 {
                s += a * d[n + k];
            }
        }
        s
    }

    fn moment_unscaled(&self, q: usize, n: usize, r: f64) -> f64 {
        adaptive(|x| x.powi(n as i32) * self.eta_q_deriv(q, 0, x), -r, r, COEFF_TOL)
    }

    fn build_tables(&self) -> Tables {
        let knots: Vec<f64> = (0..=TABLE_CELLS)
            .map(|j| -1.0 + 2.0 * j as f64 / TABLE_CELLS as f64)
            .collect();
        let mut mass = vec![0.0; knots.len()];
        let mut first = vec![0.0; knots.len()];
        let rule = gl16();
        for j in 1..knots.len() {
            let (a, b) = (knots[j - 1], knots[j]);
            mass[j] = mass[j - 1] + rule.integrate(|x| self.mother_derivs(x, 0)[0], a, b);
            first[j] = first[j - 1] + rule.integrate(|x| x * self.mother_derivs(x, 0)[0], a, b);
        }
        Tables { knots, mass, first }
    }

    /// `Φ_0(x) = ∫_{-∞}^x η_0` and `M_0(x) = ∫_{-∞}^x y η_0(y) dy`.
    fn mother_cdf(&self, x: f64) -> (f64, f64) {
        match self.kind {
            MollifierKind::Gaussian { sigma } => {
                let phi = 0.5 * (1.0 + libm::erf(x / (sigma * std::f64::consts::SQRT_2)));
                let eta = self.mother_derivs(x, 0)[0];
                (phi, -sigma * sigma * eta)
            }
            MollifierKind::CosineSquared => {
                if x <= -1.0 {
                    (0.0, 0.0)
                } else if x >= 1.0 {
                    (1.0, 0.0)
                } else {
                    let phi = 0.5 * (x + 1.0) + (PI * x).sin() / (2.0 * PI);
                    let psi = 0.25 * (x + 1.0).powi(2) - ((PI * x).cos() + 1.0) / (2.0 * PI * PI);
                    (phi, x * phi - psi)
                }
            }
            MollifierKind::Bump { .. } => {
                if x <= -1.0 {
                    return (0.0, 0.0);
                }
                let t = self.tables.as_ref().expect("bump tables");
                if x >= 1.0 {
                    return (t.mass[TABLE_CELLS], t.first[TABLE_CELLS]);
                }
                let j = (((x + 1.0) * 0.5 * TABLE_CELLS as f64) as usize).min(TABLE_CELLS - 1);
                let a = t.knots[j];
                let rule = gl16();
                let m = rule.integrate(|y| self.mother_derivs(y, 0)[0], a, x);
                let f = rule.integrate(|y| y * self.mother_derivs(y, 0)[0], a, x);
                (t.mass[j] + m, t.first[j] + f)
            }
        }
    }

    /// `Φ_q(x) = ∫_{-∞}^x η_q` on the unscaled axis.
    pub fn cdf(&self, q: usize, x: f64) -> f64 {
        let (phi, _) = self.mother_cdf(x);
        let d = self.mother_derivs(x, q);
        let mut s = phi;
        for n in 1..=q.min(self.q_max) {
            s += self.alphas[n] * d[n - 1];
        }
        s
    }

    /// `Ψ_q(x) = ∫_{-∞}^x Φ_q` on the unscaled axis.
    pub fn cdf2(&self, q: usize, x: f64) -> f64 {
        let (phi, m) = self.mother_cdf(x);
        let mut s = x * phi - m;
        if q >= 1 {
            s += self.alphas[1] * phi;
        }
        if q >= 2 {
            let d = self.mother_derivs(x, q);
            for n in 2..=q.min(self.q_max) {
                s += self.alphas[n] * d[n - 2];
            }
        }
        s
    }
}

/// `x^p - 1` as `(x - 1)(1 + x + ... + x^{p-1})`, accurate near `|x| = 1`.
fn bump_denominator(x: f64, p: u32) -> f64 {
    if x < 0.0 {
        return bump_denominator(-x, p);
    }
    let mut s = 0.0;
    let mut xp = 1.0;
    for _ in 0..p {
        s += xp;
        xp *= x;
    }
    (x - 1.0) * s
}

/// A family member of order `q` rescaled to width `ε`.
#[derive(Debug, Clone)]
pub struct Mollifier {
    family: Arc<MollifierFamily>,
    q: usize,
    eps: f64,
}

impl Mollifier {
    pub fn new(family: Arc<MollifierFamily>, q: usize, eps: f64) -> Result<Self> {
        if q > family.q_max {
            return Err(Error::InvalidParameter(format!(
                "order q={q} exceeds family q_max={}",
                family.q_max
            )));
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon={eps} must lie in (0, 1]")));
        }
        Ok(Self { family, q, eps })
    }

    /// Builds a fresh family and picks order `q` from it.
    pub fn from_kind(kind: MollifierKind, q: usize, eps: f64) -> Result<Self> {
        let fam = MollifierFamily::build(kind, q)?;
        let q = q.min(fam.q_max);
        Self::new(Arc::new(fam), q, eps)
    }

    /// The same family and order at another scale.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.family.clone(), self.q, eps)
    }

    pub fn family(&self) -> &Arc<MollifierFamily> {
        &self.family
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn id(&self) -> String {
        format!("{}/q={}/eps={}", self.family.kind, self.q, self.eps)
    }

    /// Half-width of the scaled support.
    pub fn radius(&self) -> f64 {
        self.family.kind.radius() * self.eps
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.d(0, x)
    }

    /// `d^k/dx^k [η(x/ε)/ε]`.
    pub fn eval_k(&self, k: usize, x: f64) -> Result<f64> {
        if k > K_MAX {
            return Err(Error::DerivativeOrder { requested: k, max: K_MAX });
        }
        Ok(self.d(k, x))
    }

    /// Unchecked derivative, `k <= K_MAX`.
    #[inline]
    pub fn d(&self, k: usize, x: f64) -> f64 {
        let u = x / self.eps;
        if self.family.kind.compact() && u.abs() >= 1.0 {
            return 0.0;
        }
        self.family.eta_q_deriv(self.q, k, u) / self.eps.powi(k as i32 + 1)
    }

    /// All derivatives `0..=K_MAX` at once.
    pub fn jet(&self, x: f64) -> [f64; K_MAX + 1] {
        let mut out = [0.0; K_MAX + 1];
        let u = x / self.eps;
        if self.family.kind.compact() && u.abs() >= 1.0 {
            return out;
        }
        let d = self.family.mother_derivs(u, self.q + K_MAX);
        let mut scale = 1.0 / self.eps;
        for (k, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for (n, a) in self.family.alphas.iter().enumerate().take(self.q + 1) {
                s += a * d[n + k];
            }
            *o = s * scale;
            scale /= self.eps;
        }
        out
    }

    /// `Φ_ε(x) = ∫_{-∞}^x η_ε`.
    pub fn cdf(&self, x: f64) -> f64 {
        let u = x / self.eps;
        let r = self.family.kind.radius();
        if u <= -r {
            0.0
        } else if u >= r {
            1.0
        } else {
            self.family.cdf(self.q, u)
        }
    }

    /// `Ψ_ε(x) = ∫_{-∞}^x Φ_ε`.
    pub fn cdf2(&self, x: f64) -> f64 {
        let u = x / self.eps;
        let r = self.family.kind.radius();
        if u <= -r {
            0.0
        } else if u >= r {
            x
        } else {
            self.eps * self.family.cdf2(self.q, u)
        }
    }

    /// `∫ x^n η_ε(x) dx` for `n = 0..=n_max`.
    pub fn moments(&self, n_max: usize) -> Result<Vec<f64>> {
        let r = self.family.kind.radius();
        let mut out = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let m = adaptive(
                |u| u.powi(n as i32) * self.family.eta_q_deriv(self.q, 0, u),
                -r,
                r,
                COEFF_TOL,
            );
            if !m.is_finite() {
                return Err(Error::Quadrature(format!("moment {n} of {}", self.id())));
            }
            out.push(m * self.eps.powi(n as i32));
        }
        Ok(out)
    }

    /// Checks `|m_0 - 1|` and `|m_n|, 1 <= n <= q` against `tol`.
    pub fn check_moments(&self, tol: f64) -> Result<()> {
        let m = self.moments(self.q)?;
        if (m[0] - 1.0).abs() > tol {
            return Err(Error::MomentCheck { order: 0, value: m[0] - 1.0, tol });
        }
        for (n, v) in m.iter().enumerate().skip(1) {
            if v.abs() > tol {
                return Err(Error::MomentCheck { order: n, value: *v, tol });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let fam = MollifierFamily::build(MollifierKind::Bump { p: 2 }, 4).unwrap();
        for &x in &[-0.7, -0.2, 0.0, 0.35, 0.8] {
            let d = fam.mother_derivs(x, 5);
            for n in 0..5 {
                let num = fd(|y| fam.mother_derivs(y, 5)[n], x, 1e-4);
                assert!((num - d[n + 1]).abs() < 1e-6 * (1.0 + d[n + 1].abs()), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn bump_second_derivative_closed_form() {
        // ∂²η_0 = η_0 (6x⁴ - 2)/(x² - 1)⁴
        let fam = MollifierFamily::build(MollifierKind::Bump { p: 2 }, 0).unwrap();
        for &x in &[-0.5, 0.1, 0.6] {
            let d = fam.mother_derivs(x, 2);
            let want = d[0] * (6.0 * x.powi(4) - 2.0) / (x * x - 1.0).powi(4);
            assert!((d[2] - want).abs() < 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn higher_p_bump_is_normalized() {
        let m = Mollifier::from_kind(MollifierKind::Bump { p: 4 }, 4, 1.0).unwrap();
        m.check_moments(1e-9).unwrap();
    }

    #[test]
    fn gaussian_and_cos2_derivatives_match_differences() {
        for kind in [MollifierKind::Gaussian { sigma: 0.7 }, MollifierKind::CosineSquared] {
            let fam = MollifierFamily::build(kind, 1).unwrap();
            for &x in &[-0.6, 0.2, 0.5] {
                let d = fam.mother_derivs(x, 4);
                for n in 0..4 {
                    let num = fd(|y| fam.mother_derivs(y, 4)[n], x, 1e-4);
                    assert!((num - d[n + 1]).abs() < 1e-7 * (1.0 + d[n + 1].abs()));
                }
            }
        }
    }

    #[test]
    fn antiderivatives_differentiate_back() {
        for kind in [
            MollifierKind::Bump { p: 2 },
            MollifierKind::Gaussian { sigma: 1.0 },
            MollifierKind::CosineSquared,
        ] {
            let m = Mollifier::from_kind(kind, 4, 0.3).unwrap();
            for &x in &[-0.25, -0.1, 0.0, 0.07, 0.2] {
                let a = fd(|y| m.cdf(y), x, 1e-5);
                assert!((a - m.eval(x)).abs() < 1e-7, "{kind} cdf at {x}");
                let b = fd(|y| m.cdf2(y), x, 1e-5);
                assert!((b - m.cdf(x)).abs() < 1e-8, "{kind} cdf2 at {x}");
            }
            assert!((m.cdf(10.0) - 1.0).abs() < 1e-14);
            assert!((m.cdf2(10.0) - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cos2_fixed_at_order_one() {
        let fam = MollifierFamily::build(MollifierKind::CosineSquared, 6).unwrap();
        assert_eq!(fam.q_max(), 1);
        assert_eq!(fam.alphas(), &[1.0, 0.0]);
    }

    #[test]
    fn invalid_parameters() {
        assert!(MollifierFamily::build(MollifierKind::Bump { p: 3 }, 2).is_err());
        assert!(MollifierFamily::build(MollifierKind::Gaussian { sigma: 0.0 }, 2).is_err());
        let m = Mollifier::from_kind(MollifierKind::CosineSquared, 1, 0.5).unwrap();
        assert!(matches!(m.eval_k(K_MAX + 1, 0.0), Err(Error::DerivativeOrder { .. })));
        assert!(m.with_eps(0.0).is_err());
    }
}
