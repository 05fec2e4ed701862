//! Optimal-control actions `S = h_f − h_i + ∫ w (p·(q̇ − f) + f⁰)`, their
//! first and second variations, adjoint back-propagation and extremal solvers.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::generalized::Window;
use crate::mollifiers::Mollifier;
use crate::quadrature::{gl16, panel_nodes};
use crate::variation::{Field, Functional, Jet, Perturbed};

pub type VecFn = Arc<dyn Fn(&[f64], &[f64], f64) -> DVector<f64> + Send + Sync>;
pub type MatFn = Arc<dyn Fn(&[f64], &[f64], f64) -> DMatrix<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64], &[f64], f64) -> f64 + Send + Sync>;
/// Hessian of `f^σ` over `z = (q, u)`, called with `σ`.
pub type HessFn = Arc<dyn Fn(&[f64], &[f64], f64, usize) -> DMatrix<f64> + Send + Sync>;
type CostFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type CostGrad = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;
type CostHess = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Relative tolerance of the finite-difference self-checks.
pub const PARTIAL_TOL: f64 = 1e-6;
/// Norm above which an integration is declared unstable.
pub const BLOWUP: f64 = 1e12;

/// Boundary cost `h(q)` with gradient and optional Hessian.
#[derive(Clone)]
pub struct BoundaryCost {
    h: CostFn,
    grad: CostGrad,
    hess: Option<CostHess>,
}

impl BoundaryCost {
    pub fn zero(n: usize) -> Self {
        Self::new(|_| 0.0, move |_| DVector::zeros(n)).with_hessian(move |_| DMatrix::zeros(n, n))
    }

    pub fn new(
        h: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { h: Arc::new(h), grad: Arc::new(grad), hess: None }
    }

    pub fn with_hessian(mut self, hess: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.hess = Some(Arc::new(hess));
        self
    }

    pub fn value(&self, q: &[f64]) -> f64 {
        (self.h)(q)
    }

    pub fn gradient(&self, q: &[f64]) -> DVector<f64> {
        (self.grad)(q)
    }

    pub fn hessian(&self, q: &[f64]) -> DMatrix<f64> {
        match &self.hess {
            Some(h) => h(q),
            None => fd_jacobian(q.len(), q.len(), |d| self.gradient(&shift(q, d)).as_slice().to_vec()),
        }
    }
}

fn shift(x: &[f64], d: (usize, f64)) -> Vec<f64> {
    let mut y = x.to_vec();
    y[d.0] += d.1;
    y
}

/// Central-difference Jacobian: `g((j, h))` evaluates at `x + h e_j`.
fn fd_jacobian(rows: usize, cols: usize, g: impl Fn((usize, f64)) -> Vec<f64>) -> DMatrix<f64> {
    let h = 1e-6;
    let mut j = DMatrix::zeros(rows, cols);
    for c in 0..cols {
        let p = g((c, h));
        let m = g((c, -h));
        for r in 0..rows {
            j[(r, c)] = (p[r] - m[r]) / (2.0 * h);
        }
    }
    j
}

/// Dynamics, running cost and boundary costs of an optimal-control problem.
#[derive(Clone)]
pub struct OCProblem {
    pub n: usize,
    pub m: usize,
    /// States are complex and stored as (re, im) pairs.
    pub complex: bool,
    f: VecFn,
    f_q: MatFn,
    f_u: MatFn,
    f_hess: Option<HessFn>,
    f0: ScalarFn,
    f0_q: VecFn,
    f0_u: VecFn,
    f0_hess: Option<MatFn>,
    pub h_i: BoundaryCost,
    pub h_f: BoundaryCost,
}

impl std::fmt::Debug for OCProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "OCProblem(n={}, m={}, complex={})", self.n, self.m, self.complex)
    }
}

impl OCProblem {
    /// Zero dynamics, zero costs.
    pub fn new(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            complex: false,
            f: Arc::new(move |_, _, _| DVector::zeros(n)),
            f_q: Arc::new(move |_, _, _| DMatrix::zeros(n, n)),
            f_u: Arc::new(move |_, _, _| DMatrix::zeros(n, m)),
            f_hess: Some(Arc::new(move |_, _, _, _| DMatrix::zeros(n + m, n + m))),
            f0: Arc::new(|_, _, _| 0.0),
            f0_q: Arc::new(move |_, _, _| DVector::zeros(n)),
            f0_u: Arc::new(move |_, _, _| DVector::zeros(m)),
            f0_hess: Some(Arc::new(move |_, _, _| DMatrix::zeros(n + m, n + m))),
            h_i: BoundaryCost::zero(n),
            h_f: BoundaryCost::zero(n),
        }
    }

    pub fn complex(mut self, flag: bool) -> Self {
        self.complex = flag;
        self
    }

    /// Sets `f`, `∂f/∂q` (n×n) and `∂f/∂u` (n×m); clears any Hessian.
    pub fn with_dynamics(
        mut self,
        f: impl Fn(&[f64], &[f64], f64) -> DVector<f64> + Send + Sync + 'static,
        f_q: impl Fn(&[f64], &[f64], f64) -> DMatrix<f64> + Send + Sync + 'static,
        f_u: impl Fn(&[f64], &[f64], f64) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.f = Arc::new(f);
        self.f_q = Arc::new(f_q);
        self.f_u = Arc::new(f_u);
        self.f_hess = None;
        self
    }

    pub fn with_dynamics_hessian(
        mut self,
        h: impl Fn(&[f64], &[f64], f64, usize) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.f_hess = Some(Arc::new(h));
        self
    }

    /// Sets `f⁰` and its gradients; clears any Hessian.
    pub fn with_running_cost(
        mut self,
        f0: impl Fn(&[f64], &[f64], f64) -> f64 + Send + Sync + 'static,
        f0_q: impl Fn(&[f64], &[f64], f64) -> DVector<f64> + Send + Sync + 'static,
        f0_u: impl Fn(&[f64], &[f64], f64) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        self.f0 = Arc::new(f0);
        self.f0_q = Arc::new(f0_q);
        self.f0_u = Arc::new(f0_u);
        self.f0_hess = None;
        self
    }

    pub fn with_running_cost_hessian(
        mut self,
        h: impl Fn(&[f64], &[f64], f64) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.f0_hess = Some(Arc::new(h));
        self
    }

    pub fn with_initial_cost(mut self, h: BoundaryCost) -> Self {
        self.h_i = h;
        self
    }

    pub fn with_terminal_cost(mut self, h: BoundaryCost) -> Self {
        self.h_f = h;
        self
    }

    pub fn f(&self, q: &[f64], u: &[f64], t: f64) -> DVector<f64> {
        (self.f)(q, u, t)
    }
    pub fn f_q(&self, q: &[f64], u: &[f64], t: f64) -> DMatrix<f64> {
        (self.f_q)(q, u, t)
    }
    pub fn f_u(&self, q: &[f64], u: &[f64], t: f64) -> DMatrix<f64> {
        (self.f_u)(q, u, t)
    }
    pub fn f0(&self, q: &[f64], u: &[f64], t: f64) -> f64 {
        (self.f0)(q, u, t)
    }
    pub fn f0_q(&self, q: &[f64], u: &[f64], t: f64) -> DVector<f64> {
        (self.f0_q)(q, u, t)
    }
    pub fn f0_u(&self, q: &[f64], u: &[f64], t: f64) -> DVector<f64> {
        (self.f0_u)(q, u, t)
    }

    fn split<'a>(&self, z: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        z.split_at(self.n)
    }

    /// Hessian of `f^σ` over `(q, u)`.
    pub fn f_hess(&self, q: &[f64], u: &[f64], t: f64, sigma: usize) -> DMatrix<f64> {
        match &self.f_hess {
            Some(h) => h(q, u, t, sigma),
            None => {
                let z: Vec<f64> = q.iter().chain(u).copied().collect();
                let k = self.n + self.m;
                fd_jacobian(k, k, |d| {
                    let zz = shift(&z, d);
                    let (qq, uu) = self.split(&zz);
                    let a = self.f_q(qq, uu, t);
                    let b = self.f_u(qq, uu, t);
                    (0..self.n).map(|c| a[(sigma, c)]).chain((0..self.m).map(|c| b[(sigma, c)])).collect()
                })
            }
        }
    }

    /// Hessian of `f⁰` over `(q, u)`.
    pub fn f0_hess(&self, q: &[f64], u: &[f64], t: f64) -> DMatrix<f64> {
        match &self.f0_hess {
            Some(h) => h(q, u, t),
            None => {
                let z: Vec<f64> = q.iter().chain(u).copied().collect();
                let k = self.n + self.m;
                fd_jacobian(k, k, |d| {
                    let zz = shift(&z, d);
                    let (qq, uu) = self.split(&zz);
                    self.f0_q(qq, uu, t).iter().chain(self.f0_u(qq, uu, t).iter()).copied().collect()
                })
            }
        }
    }

    /// Checks every supplied partial against central differences on
    /// deterministic pseudo-random points.
    pub fn checked(self) -> Result<Self> {
        let (n, m) = (self.n, self.m);
        let mut state: u64 = 0x2545_f491_4f6c_dd1d;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let cmp = |what: &str, an: &DMatrix<f64>, fd: &DMatrix<f64>| -> Result<()> {
            if an.shape() != fd.shape() {
                return Err(Error::Dimension(format!("{what}: shape {:?}, expected {:?}", an.shape(), fd.shape())));
            }
            for (a, b) in an.iter().zip(fd.iter()) {
                if (a - b).abs() > PARTIAL_TOL * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::PartialCheck(format!("{what}: supplied {a}, differences {b}")));
                }
            }
            Ok(())
        };
        for _ in 0..6 {
            let q: Vec<f64> = (0..n).map(|_| next()).collect();
            let u: Vec<f64> = (0..m).map(|_| next()).collect();
            let t = next();
            if self.f(&q, &u, t).len() != n {
                return Err(Error::Dimension("f has the wrong length".into()));
            }
            let fdq = fd_jacobian(n, n, |d| self.f(&shift(&q, d), &u, t).as_slice().to_vec());
            cmp("∂f/∂q", &self.f_q(&q, &u, t), &fdq)?;
            let fdu = fd_jacobian(n, m, |d| self.f(&q, &shift(&u, d), t).as_slice().to_vec());
            cmp("∂f/∂u", &self.f_u(&q, &u, t), &fdu)?;
            let g0q = fd_jacobian(1, n, |d| vec![self.f0(&shift(&q, d), &u, t)]);
            cmp("∂f⁰/∂q", &DMatrix::from_row_slice(1, n, self.f0_q(&q, &u, t).as_slice()), &g0q)?;
            let g0u = fd_jacobian(1, m, |d| vec![self.f0(&q, &shift(&u, d), t)]);
            cmp("∂f⁰/∂u", &DMatrix::from_row_slice(1, m, self.f0_u(&q, &u, t).as_slice()), &g0u)?;
            for (name, h) in [("h_i", &self.h_i), ("h_f", &self.h_f)] {
                let g = fd_jacobian(1, n, |d| vec![h.value(&shift(&q, d))]);
                cmp(&format!("∇{name}"), &DMatrix::from_row_slice(1, n, h.gradient(&q).as_slice()), &g)?;
                if h.hess.is_some() {
                    let fd = fd_jacobian(n, n, |d| h.gradient(&shift(&q, d)).as_slice().to_vec());
                    cmp(&format!("∇²{name}"), &h.hessian(&q), &fd)?;
                }
            }
            if self.f_hess.is_some() {
                let probe = Self { f_hess: None, ..self.clone() };
                for s in 0..n {
                    cmp("∇²f", &self.f_hess(&q, &u, t, s), &probe.f_hess(&q, &u, t, s))?;
                }
            }
            if self.f0_hess.is_some() {
                let probe = Self { f0_hess: None, ..self.clone() };
                cmp("∇²f⁰", &self.f0_hess(&q, &u, t), &probe.f0_hess(&q, &u, t))?;
            }
        }
        Ok(self)
    }
}

/// Uniform-grid samples with `q` as a linear spline (N values) and `p`, `u`
/// piecewise constant (N−1 values), evaluated after convolution with the
/// trajectory mollifier. Outside the grid the fields are held constant.
#[derive(Debug, Clone)]
pub struct Trajectory {
    t0: f64,
    dt: f64,
    n_pts: usize,
    pub nq: usize,
    pub np: usize,
    pub nu: usize,
    q: Vec<f64>,
    p: Vec<f64>,
    u: Vec<f64>,
    m: Mollifier,
}

impl Trajectory {
    /// Row-major samples: `q` is `n_pts × nq`, `p` and `u` are `(n_pts−1) × np|nu`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        t0: f64,
        dt: f64,
        n_pts: usize,
        dims: (usize, usize, usize),
        q: Vec<f64>,
        p: Vec<f64>,
        u: Vec<f64>,
        m: Mollifier,
    ) -> Result<Self> {
        let (nq, np, nu) = dims;
        if n_pts < 2 || !(dt > 0.0) || !t0.is_finite() {
            return Err(Error::InvalidParameter(format!("grid needs N ≥ 2 and Δt > 0 (N={n_pts}, Δt={dt})")));
        }
        if q.len() != n_pts * nq || p.len() != (n_pts - 1) * np || u.len() != (n_pts - 1) * nu {
            return Err(Error::Dimension(format!(
                "sample lengths q={}, p={}, u={} do not match N={n_pts}, dims={dims:?}",
                q.len(),
                p.len(),
                u.len()
            )));
        }
        Ok(Self { t0, dt, n_pts, nq, np, nu, q, p, u, m })
    }

    /// Samples closures: `q` at the nodes, `p` and `u` as panel averages.
    #[allow(clippy::too_many_arguments)]
    pub fn from_fns(
        t0: f64,
        dt: f64,
        n_pts: usize,
        dims: (usize, usize, usize),
        q: impl Fn(f64) -> Vec<f64>,
        p: impl Fn(f64) -> Vec<f64>,
        u: impl Fn(f64) -> Vec<f64>,
        m: Mollifier,
    ) -> Result<Self> {
        let (nq, np, nu) = dims;
        let mut qs = Vec::with_capacity(n_pts * nq);
        for i in 0..n_pts {
            qs.extend(q(t0 + i as f64 * dt).into_iter().take(nq));
        }
        let avg = |g: &dyn Fn(f64) -> Vec<f64>, k: usize| -> Vec<f64> {
            let mut out = Vec::with_capacity((n_pts - 1) * k);
            let r = crate::quadrature::GaussLegendre::new(4);
            for i in 0..n_pts.saturating_sub(1) {
                let a = t0 + i as f64 * dt;
                let mut acc = vec![0.0; k];
                for (t, w) in r.mapped(a, a + dt) {
                    for (s, v) in acc.iter_mut().zip(g(t)) {
                        *s += w * v / dt;
                    }
                }
                out.extend(acc);
            }
            out
        };
        let ps = avg(&p, np);
        let us = avg(&u, nu);
        Self::new(t0, dt, n_pts, dims, qs, ps, us, m)
    }

    pub fn t_start(&self) -> f64 {
        self.t0
    }
    pub fn t_end(&self) -> f64 {
        self.t0 + (self.n_pts - 1) as f64 * self.dt
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn n_pts(&self) -> usize {
        self.n_pts
    }
    pub fn mollifier(&self) -> &Mollifier {
        &self.m
    }
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }
    pub fn q_sample(&self, i: usize, c: usize) -> f64 {
        self.q[i * self.nq + c]
    }
    pub fn p_sample(&self, i: usize, c: usize) -> f64 {
        self.p[i * self.np + c]
    }
    pub fn u_sample(&self, i: usize, c: usize) -> f64 {
        self.u[i * self.nu + c]
    }
    pub fn q_samples(&self) -> &[f64] {
        &self.q
    }
    pub fn p_samples(&self) -> &[f64] {
        &self.p
    }
    pub fn u_samples(&self) -> &[f64] {
        &self.u
    }

    pub fn with_mollifier(&self, m: Mollifier) -> Self {
        Self { m, ..self.clone() }
    }

    /// Unregularized linear-spline value of `q^c`.
    pub fn q_spline(&self, c: usize, t: f64) -> f64 {
        let x = ((t - self.t0) / self.dt).clamp(0.0, (self.n_pts - 1) as f64);
        let i = (x.floor() as usize).min(self.n_pts - 2);
        let s = x - i as f64;
        (1.0 - s) * self.q_sample(i, c) + s * self.q_sample(i + 1, c)
    }

    fn knot_range(&self, t: f64) -> (Option<usize>, usize, isize) {
        let r = self.m.radius();
        let kf = ((t - r - self.t0) / self.dt).floor();
        let base = if kf < 0.0 { None } else { Some((kf as usize).min(self.n_pts - 1)) };
        let first = base.map_or(0, |k| k + 1);
        let last = (((t + r - self.t0) / self.dt).ceil() as isize).min(self.n_pts as isize - 1);
        (base, first, last)
    }

    fn spline_reg(&self, c: usize, k: usize, t: f64) -> f64 {
        let n = self.n_pts;
        let s = |i: usize| self.q[i * self.nq + c];
        let slope = |i: usize| if i + 1 < n { (s(i + 1) - s(i)) / self.dt } else { 0.0 };
        let jump = |i: usize| slope(i) - if i == 0 { 0.0 } else { slope(i - 1) };
        let (base, first, last) = self.knot_range(t);
        let mut v = match (k, base) {
            (0, Some(b)) => s(b) + slope(b) * (t - self.time(b)),
            (0, None) => s(0),
            (1, Some(b)) => slope(b),
            _ => 0.0,
        };
        let mut i = first as isize;
        while i <= last {
            let iu = i as usize;
            let x = t - self.time(iu);
            let j = jump(iu);
            v += j * match k {
                0 => self.m.cdf2(x),
                1 => self.m.cdf(x),
                _ => self.m.d(k - 2, x),
            };
            i += 1;
        }
        v
    }

    fn pwc_reg(&self, vals: &[f64], width: usize, c: usize, k: usize, t: f64) -> f64 {
        let n = self.n_pts;
        let v = |j: usize| vals[j * width + c];
        let (base, first, last) = self.knot_range(t);
        let mut out = if k == 0 { base.map_or(v(0), |b| v(b.min(n - 2))) } else { 0.0 };
        let lo = first.max(1) as isize;
        let hi = last.min(n as isize - 2);
        let mut i = lo;
        while i <= hi {
            let iu = i as usize;
            let x = t - self.time(iu);
            let j = v(iu) - v(iu - 1);
            out += j * if k == 0 { self.m.cdf(x) } else { self.m.d(k - 1, x) };
            i += 1;
        }
        out
    }

    /// Column names and node rows `t, q…, p…, u…` (p and u from the panel starting at the node).
    pub fn table(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let mut header = vec!["t".to_string()];
        header.extend((0..self.nq).map(|c| format!("q{c}")));
        header.extend((0..self.np).map(|c| format!("p{c}")));
        header.extend((0..self.nu).map(|c| format!("u{c}")));
        let rows = (0..self.n_pts)
            .map(|i| {
                let j = i.min(self.n_pts - 2);
                let mut r = vec![self.time(i)];
                r.extend((0..self.nq).map(|c| self.q_sample(i, c)));
                r.extend((0..self.np).map(|c| self.p_sample(j, c)));
                r.extend((0..self.nu).map(|c| self.u_sample(j, c)));
                r
            })
            .collect();
        (header, rows)
    }
}

impl Field for Trajectory {
    fn dim(&self) -> usize {
        self.nq + self.np + self.nu
    }
    fn deriv(&self, c: usize, k: usize, t: f64) -> f64 {
        if c < self.nq {
            self.spline_reg(c, k, t)
        } else if c < self.nq + self.np {
            self.pwc_reg(&self.p, self.np, c - self.nq, k, t)
        } else {
            self.pwc_reg(&self.u, self.nu, c - self.nq - self.np, k, t)
        }
    }
}

/// Field direction of a variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Q,
    P,
    U,
}

impl Direction {
    pub fn index(self, p: &OCProblem, c: usize) -> usize {
        match self {
            Direction::Q => c,
            Direction::P => p.n + c,
            Direction::U => 2 * p.n + c,
        }
    }

    pub fn len(self, p: &OCProblem) -> usize {
        match self {
            Direction::Q | Direction::P => p.n,
            Direction::U => p.m,
        }
    }
}

struct Point {
    q: Vec<f64>,
    qd: Vec<f64>,
    p: Vec<f64>,
    pd: Vec<f64>,
    u: Vec<f64>,
}

fn point(pr: &OCProblem, tr: &dyn Field, t: f64) -> Point {
    let (n, m) = (pr.n, pr.m);
    Point {
        q: (0..n).map(|c| tr.deriv(c, 0, t)).collect(),
        qd: (0..n).map(|c| tr.deriv(c, 1, t)).collect(),
        p: (0..n).map(|c| tr.deriv(n + c, 0, t)).collect(),
        pd: (0..n).map(|c| tr.deriv(n + c, 1, t)).collect(),
        u: (0..m).map(|c| tr.deriv(2 * n + c, 0, t)).collect(),
    }
}

fn check_field(pr: &OCProblem, tr: &dyn Field) -> Result<()> {
    if tr.dim() != 2 * pr.n + pr.m {
        return Err(Error::Dimension(format!(
            "trajectory has {} components, problem needs 2n+m = {}",
            tr.dim(),
            2 * pr.n + pr.m
        )));
    }
    Ok(())
}

fn edges(w: &Window) -> Result<(f64, f64)> {
    if !(w.a.is_finite() && w.b.is_finite()) {
        return Err(Error::InvalidParameter("the action needs a bounded window".into()));
    }
    Ok((w.a, w.b))
}

fn lagrangian(pr: &OCProblem, x: &Point, t: f64) -> f64 {
    let f = pr.f(&x.q, &x.u, t);
    let dyn_part: f64 = (0..pr.n).map(|c| x.p[c] * (x.qd[c] - f[c])).sum();
    dyn_part + pr.f0(&x.q, &x.u, t)
}

fn panel(w: &Window, m: Option<&Mollifier>) -> f64 {
    let r = m.map_or(w.mollifier().radius(), |m| m.radius().min(w.mollifier().radius()));
    0.25 * r.min(1.0)
}

/// `h_f(q(t_f)) − h_i(q(t_i)) + ∫_{lo}^{hi} w L dt`.
fn local_action(pr: &OCProblem, tr: &dyn Field, w: &Window, lo: f64, hi: f64, width: f64) -> f64 {
    let (a, b) = (w.a, w.b);
    let qa: Vec<f64> = (0..pr.n).map(|c| tr.deriv(c, 0, a)).collect();
    let qb: Vec<f64> = (0..pr.n).map(|c| tr.deriv(c, 0, b)).collect();
    let bc = pr.h_f.value(&qb) - pr.h_i.value(&qa);
    let (s0, s1) = w.support();
    let (lo, hi) = (lo.max(s0), hi.min(s1));
    let nodes = panel_nodes(lo, hi, &w.breaks(), width);
    bc + nodes.iter().map(|&(t, wt)| wt * w.eval(t) * lagrangian(pr, &point(pr, tr, t), t)).sum::<f64>()
}

/// The action over the whole window support.
pub fn oc_action(pr: &OCProblem, tr: &dyn Field, w: &Window) -> Result<f64> {
    check_field(pr, tr)?;
    edges(w)?;
    let (lo, hi) = w.support();
    Ok(local_action(pr, tr, w, lo, hi, panel(w, None)))
}

/// Pointwise weak-PMP residuals at `t`.
#[derive(Debug, Clone)]
pub struct PmpResiduals {
    /// `q̇ − f`.
    pub state: Vec<f64>,
    /// `ṗ_μ − (∂f⁰/∂q^μ − p_ν ∂f^ν/∂q^μ)`.
    pub adjoint: Vec<f64>,
    /// `∂f⁰/∂u − p_ν ∂f^ν/∂u`.
    pub control: Vec<f64>,
}

pub fn pmp_residuals(pr: &OCProblem, tr: &dyn Field, t: f64) -> Result<PmpResiduals> {
    check_field(pr, tr)?;
    let x = point(pr, tr, t);
    let f = pr.f(&x.q, &x.u, t);
    let fq = pr.f_q(&x.q, &x.u, t);
    let fu = pr.f_u(&x.q, &x.u, t);
    let p = DVector::from_column_slice(&x.p);
    let adj = pr.f0_q(&x.q, &x.u, t) - fq.transpose() * &p;
    let ctl = pr.f0_u(&x.q, &x.u, t) - fu.transpose() * &p;
    Ok(PmpResiduals {
        state: (0..pr.n).map(|c| x.qd[c] - f[c]).collect(),
        adjoint: (0..pr.n).map(|c| x.pd[c] - adj[c]).collect(),
        control: ctl.iter().copied().collect(),
    })
}

/// `(p(t_i) + ∇h_i(q(t_i)), p(t_f) + ∇h_f(q(t_f)))`.
pub fn pmp_boundary(pr: &OCProblem, tr: &dyn Field, w: &Window) -> Result<(Vec<f64>, Vec<f64>)> {
    check_field(pr, tr)?;
    let (a, b) = edges(w)?;
    let xa = point(pr, tr, a);
    let xb = point(pr, tr, b);
    let gi = pr.h_i.gradient(&xa.q);
    let gf = pr.h_f.gradient(&xb.q);
    Ok(((0..pr.n).map(|c| xa.p[c] + gi[c]).collect(), (0..pr.n).map(|c| xb.p[c] + gf[c]).collect()))
}

/// Closed-form first variation `δS/δ(dir^c)(τ)` against `η_ε(· − τ)`,
/// including the boundary-cost and window-derivative terms.
#[allow(clippy::too_many_arguments)]
pub fn first_variation(
    pr: &OCProblem,
    tr: &dyn Field,
    w: &Window,
    dir: Direction,
    c: usize,
    tau: f64,
    m: &Mollifier,
) -> Result<f64> {
    check_field(pr, tr)?;
    let (a, b) = edges(w)?;
    if c >= dir.len(pr) {
        return Err(Error::Dimension(format!("component {c} of {dir:?}")));
    }
    let r = m.radius();
    let mut bc = 0.0;
    if dir == Direction::Q {
        let qa: Vec<f64> = (0..pr.n).map(|k| tr.deriv(k, 0, a)).collect();
        let qb: Vec<f64> = (0..pr.n).map(|k| tr.deriv(k, 0, b)).collect();
        bc = pr.h_f.gradient(&qb)[c] * m.eval(b - tau) - pr.h_i.gradient(&qa)[c] * m.eval(a - tau);
    }
    let mut breaks = w.breaks();
    breaks.push(tau);
    let (s0, s1) = w.support();
    let nodes = panel_nodes((tau - r).max(s0), (tau + r).min(s1), &breaks, panel(w, Some(m)));
    let dens = |t: f64| -> f64 {
        let x = point(pr, tr, t);
        let wt = w.eval(t);
        match dir {
            Direction::Q => {
                let fq = pr.f_q(&x.q, &x.u, t);
                let pf: f64 = (0..pr.n).map(|nu| x.p[nu] * fq[(nu, c)]).sum();
                -w.deriv(1, t) * x.p[c] + wt * (pr.f0_q(&x.q, &x.u, t)[c] - pf - x.pd[c])
            }
            Direction::P => wt * (x.qd[c] - pr.f(&x.q, &x.u, t)[c]),
            Direction::U => {
                let fu = pr.f_u(&x.q, &x.u, t);
                let pf: f64 = (0..pr.n).map(|nu| x.p[nu] * fu[(nu, c)]).sum();
                wt * (pr.f0_u(&x.q, &x.u, t)[c] - pf)
            }
        }
    };
    Ok(bc + nodes.iter().map(|&(t, wt)| wt * dens(t) * m.eval(t - tau)).sum::<f64>())
}

/// A perturbation `λ η_ε(· − τ)` of one field component.
#[derive(Debug, Clone, Copy)]
pub struct Probe {
    pub dir: Direction,
    pub comp: usize,
    pub tau: f64,
}

/// Central-difference Gateaux derivative of the action (order 1).
pub fn oc_gateaux(pr: &OCProblem, tr: &dyn Field, w: &Window, probe: Probe, m: &Mollifier, lambda: f64) -> Result<f64> {
    check_field(pr, tr)?;
    edges(w)?;
    let r = m.radius();
    let idx = probe.dir.index(pr, probe.comp);
    let width = panel(w, Some(m));
    let s = |l: f64| {
        let f = Perturbed { base: tr, comp: idx, y: probe.tau, lambda: l, m };
        local_action(pr, &f, w, probe.tau - r, probe.tau + r, width)
    };
    Ok((s(lambda) - s(-lambda)) / (2.0 * lambda))
}

/// Central-difference second Gateaux derivative for a probe pair.
pub fn oc_gateaux2(
    pr: &OCProblem,
    tr: &dyn Field,
    w: &Window,
    p1: Probe,
    p2: Probe,
    m: &Mollifier,
    lambda: f64,
) -> Result<f64> {
    check_field(pr, tr)?;
    edges(w)?;
    let r = m.radius();
    let (lo, hi) = (p1.tau.min(p2.tau) - r, p1.tau.max(p2.tau) + r);
    let width = panel(w, Some(m));
    let (i1, i2) = (p1.dir.index(pr, p1.comp), p2.dir.index(pr, p2.comp));
    let s = |l1: f64, l2: f64| {
        let f1 = Perturbed { base: tr, comp: i1, y: p1.tau, lambda: l1, m };
        let f2 = Perturbed { base: &f1, comp: i2, y: p2.tau, lambda: l2, m };
        local_action(pr, &f2, w, lo, hi, width)
    };
    let l = lambda;
    Ok((s(l, l) - s(l, -l) - s(-l, l) + s(-l, -l)) / (4.0 * l * l))
}

/// All distinct second-variation blocks at `(t1, t2)`; the first index of each
/// block belongs to the field varied at `t1`.
#[derive(Debug, Clone)]
pub struct SecondVariationBlocks {
    pub qq: DMatrix<f64>,
    pub uq: DMatrix<f64>,
    pub up: DMatrix<f64>,
    pub uu: DMatrix<f64>,
    pub pq: DMatrix<f64>,
    pub pp: DMatrix<f64>,
}

/// Second-variation blocks with the kernel products integrated exactly
/// against the window (the form the Gateaux differences reproduce).
pub fn second_variation_blocks(
    pr: &OCProblem,
    tr: &dyn Field,
    w: &Window,
    t1: f64,
    t2: f64,
    m: &Mollifier,
) -> Result<SecondVariationBlocks> {
    check_field(pr, tr)?;
    let (a, b) = edges(w)?;
    let (n, mm) = (pr.n, pr.m);
    let mut bl = SecondVariationBlocks {
        qq: DMatrix::zeros(n, n),
        uq: DMatrix::zeros(mm, n),
        up: DMatrix::zeros(mm, n),
        uu: DMatrix::zeros(mm, mm),
        pq: DMatrix::zeros(n, n),
        pp: DMatrix::zeros(n, n),
    };
    let qa: Vec<f64> = (0..n).map(|k| tr.deriv(k, 0, a)).collect();
    let qb: Vec<f64> = (0..n).map(|k| tr.deriv(k, 0, b)).collect();
    bl.qq += pr.h_f.hessian(&qb) * (m.eval(b - t1) * m.eval(b - t2));
    bl.qq -= pr.h_i.hessian(&qa) * (m.eval(a - t1) * m.eval(a - t2));
    let r = m.radius();
    let (lo, hi) = (t1.max(t2) - r, t1.min(t2) + r);
    let (s0, s1) = w.support();
    let mut breaks = w.breaks();
    breaks.extend([t1, t2]);
    for (t, wq) in panel_nodes(lo.max(s0), hi.min(s1), &breaks, panel(w, Some(m))) {
        let e1 = m.eval(t - t1);
        let e2 = m.eval(t - t2);
        let k = wq * w.eval(t);
        if k == 0.0 || e1 == 0.0 {
            continue;
        }
        let x = point(pr, tr, t);
        let mut h = pr.f0_hess(&x.q, &x.u, t);
        for s in 0..n {
            if x.p[s] != 0.0 {
                h -= pr.f_hess(&x.q, &x.u, t, s) * x.p[s];
            }
        }
        let kk = k * e1 * e2;
        bl.qq += h.view((0, 0), (n, n)) * kk;
        bl.uq += h.view((n, 0), (mm, n)) * kk;
        bl.uu += h.view((n, n), (mm, mm)) * kk;
        let fq = pr.f_q(&x.q, &x.u, t);
        let fu = pr.f_u(&x.q, &x.u, t);
        bl.up -= fu.transpose() * kk;
        bl.pq -= fq * kk;
        let d2 = k * e1 * m.d(1, t - t2);
        for i in 0..n {
            bl.pq[(i, i)] += d2;
        }
    }
    Ok(bl)
}

/// Leading-order blocks with point-evaluated kernels `Ĩ(t₁) η_ε(t₁ − t₂)`,
/// as printed for the general action.
pub fn second_variation_blocks_local(
    pr: &OCProblem,
    tr: &dyn Field,
    w: &Window,
    t1: f64,
    t2: f64,
    m: &Mollifier,
) -> Result<SecondVariationBlocks> {
    check_field(pr, tr)?;
    let (a, b) = edges(w)?;
    let (n, mm) = (pr.n, pr.m);
    let x = point(pr, tr, t1);
    let qa: Vec<f64> = (0..n).map(|k| tr.deriv(k, 0, a)).collect();
    let qb: Vec<f64> = (0..n).map(|k| tr.deriv(k, 0, b)).collect();
    let mut h = pr.f0_hess(&x.q, &x.u, t1);
    for s in 0..n {
        h -= pr.f_hess(&x.q, &x.u, t1, s) * x.p[s];
    }
    let k = w.eval(t1) * m.eval(t1 - t2);
    let qq = pr.h_f.hessian(&qb) * (m.eval(b - t1) * m.eval(b - t2)) - pr.h_i.hessian(&qa) * (m.eval(a - t1) * m.eval(a - t2))
        + h.view((0, 0), (n, n)) * k;
    Ok(SecondVariationBlocks {
        qq,
        uq: h.view((n, 0), (mm, n)) * k,
        up: -pr.f_u(&x.q, &x.u, t1).transpose() * k,
        uu: h.view((n, n), (mm, mm)) * k,
        pq: -pr.f_q(&x.q, &x.u, t1) * k,
        pp: DMatrix::zeros(n, n),
    })
}

fn rk4_step(f: &dyn Fn(f64, &DVector<f64>) -> Result<DVector<f64>>, t: f64, y: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &(y + &k1 * (0.5 * h)))?;
    let k3 = f(t + 0.5 * h, &(y + &k2 * (0.5 * h)))?;
    let k4 = f(t + h, &(y + &k3 * h))?;
    let next = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    if !(next.norm() < BLOWUP) {
        return Err(Error::UnstableStep(format!("state norm {:e} at t={}", next.norm(), t + h)));
    }
    Ok(next)
}

/// Backward RK4 of `ṗ_μ = ∂f⁰/∂q^μ − p_ν ∂f^ν/∂q^μ` along given `q(t)`, `u(t)`,
/// from `p(times.last()) = p_final`. Returns `p` at every time.
pub fn integrate_adjoint(
    pr: &OCProblem,
    q: &dyn Fn(f64) -> Vec<f64>,
    u: &dyn Fn(f64) -> Vec<f64>,
    times: &[f64],
    p_final: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if p_final.len() != pr.n {
        return Err(Error::Dimension(format!("terminal adjoint of length {}", p_final.len())));
    }
    if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("adjoint grid must be strictly increasing".into()));
    }
    let rhs = |t: f64, p: &DVector<f64>| -> Result<DVector<f64>> {
        let qq = q(t);
        let uu = u(t);
        Ok(pr.f0_q(&qq, &uu, t) - pr.f_q(&qq, &uu, t).transpose() * p)
    };
    let mut out = vec![p_final.to_vec()];
    let mut y = DVector::from_column_slice(p_final);
    for w in times.windows(2).rev() {
        y = rk4_step(&rhs, w[1], &y, w[0] - w[1])?;
        out.push(y.iter().copied().collect());
    }
    out.reverse();
    Ok(out)
}

/// Solves `∂f⁰/∂u − p_ν ∂f^ν/∂u = 0` by Newton from `guess`.
pub fn solve_control(pr: &OCProblem, q: &[f64], p: &[f64], t: f64, guess: &[f64]) -> Result<Vec<f64>> {
    if pr.m == 0 {
        return Ok(Vec::new());
    }
    let pv = DVector::from_column_slice(p);
    let mut u = guess.to_vec();
    for _ in 0..50 {
        let g = pr.f0_u(q, &u, t) - pr.f_u(q, &u, t).transpose() * &pv;
        let mut h = pr.f0_hess(q, &u, t).view((pr.n, pr.n), (pr.m, pr.m)).into_owned();
        for s in 0..pr.n {
            h -= pr.f_hess(q, &u, t, s).view((pr.n, pr.n), (pr.m, pr.m)) * p[s];
        }
        let step = h
            .lu()
            .solve(&g)
            .ok_or_else(|| Error::NoConvergence(format!("singular control Hessian at t={t}")))?;
        for (ui, si) in u.iter_mut().zip(step.iter()) {
            *ui -= si;
        }
        if step.norm() <= 1e-14 * (1.0 + DVector::from_column_slice(&u).norm()) {
            return Ok(u);
        }
    }
    Err(Error::NoConvergence(format!("control equation at t={t} after 50 Newton steps")))
}

/// Interior-anchor initial-value setup shared by the extremal solvers.
#[derive(Debug, Clone)]
pub struct AnchorConfig {
    pub anchor: f64,
    /// Requested span; the grid is aligned so that the anchor is a node.
    pub span: (f64, f64),
    pub dt: f64,
    /// Integration stops where the window weight falls below this value.
    pub floor: f64,
}

impl AnchorConfig {
    fn grid(&self) -> Result<(f64, usize, usize)> {
        let (lo, hi) = self.span;
        if !(self.dt > 0.0) || !(lo < self.anchor && self.anchor < hi) {
            return Err(Error::InvalidParameter(format!(
                "anchor {} must lie inside ({lo}, {hi}) with Δt > 0",
                self.anchor
            )));
        }
        let left = ((self.anchor - lo) / self.dt).floor() as usize;
        let right = ((hi - self.anchor) / self.dt).floor() as usize;
        Ok((self.anchor - left as f64 * self.dt, left, right))
    }
}

/// Integrates `rhs` with RK4 half-steps from the anchor node to both ends;
/// returns states at every half node of the `[t0, t0 + (left+right)Δt]` grid.
fn sweep(
    rhs: &dyn Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
    cfg: &AnchorConfig,
    y0: DVector<f64>,
    keep: &dyn Fn(f64) -> bool,
) -> Result<(f64, Vec<DVector<f64>>)> {
    let (_, left, right) = cfg.grid()?;
    let h = 0.5 * cfg.dt;
    let mut fwd = vec![y0.clone()];
    let mut t = cfg.anchor;
    for _ in 0..2 * right {
        if !keep(t + h) || !keep(t + 2.0 * h) && fwd.len() % 2 == 1 {
            break;
        }
        let y = rk4_step(rhs, t, fwd.last().expect("nonempty"), h)?;
        fwd.push(y);
        t += h;
    }
    if fwd.len() % 2 == 0 {
        fwd.pop();
    }
    let mut bwd = vec![y0];
    t = cfg.anchor;
    for _ in 0..2 * left {
        if !keep(t - h) || !keep(t - 2.0 * h) && bwd.len() % 2 == 1 {
            break;
        }
        let y = rk4_step(rhs, t, bwd.last().expect("nonempty"), -h)?;
        bwd.push(y);
        t -= h;
    }
    if bwd.len() % 2 == 0 {
        bwd.pop();
    }
    let start = cfg.anchor - (bwd.len() - 1) as f64 * h;
    bwd.reverse();
    bwd.pop();
    bwd.extend(fwd);
    Ok((start, bwd))
}

fn ratio(w: &Window, t: f64, floor: f64) -> f64 {
    w.deriv(1, t) / w.eval(t).max(floor)
}

/// Cubic-Hermite dense output of an ODE solution on a uniform grid.
///
/// Component `c` reads state `value[c]`; its first derivative comes from
/// state `slope[c]` when the system carries it (second-order systems), and
/// from the stored right-hand side otherwise.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    t0: f64,
    h: f64,
    ys: Vec<DVector<f64>>,
    dys: Vec<DVector<f64>>,
    value: Vec<usize>,
    slope: Vec<Option<usize>>,
}

impl DenseSolution {
    pub fn t_start(&self) -> f64 {
        self.t0
    }
    pub fn t_end(&self) -> f64 {
        self.t0 + (self.ys.len() - 1) as f64 * self.h
    }
    pub fn step(&self) -> f64 {
        self.h
    }
    pub fn states(&self) -> &[DVector<f64>] {
        &self.ys
    }

    fn hermite(&self, s: usize, k: usize, t: f64) -> f64 {
        let n = self.ys.len();
        let x = ((t - self.t0) / self.h).clamp(0.0, (n - 1) as f64);
        let i = (x.floor() as usize).min(n - 2);
        let u = x - i as f64;
        let outside = t < self.t0 || t > self.t_end();
        if outside && k > 0 {
            return 0.0;
        }
        let (y0, y1) = (self.ys[i][s], self.ys[i + 1][s]);
        let (d0, d1) = (self.dys[i][s] * self.h, self.dys[i + 1][s] * self.h);
        match k {
            0 => {
                let u2 = u * u;
                let u3 = u2 * u;
                (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * d0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * d1
            }
            1 => {
                let u2 = u * u;
                ((6.0 * u2 - 6.0 * u) * y0 + (3.0 * u2 - 4.0 * u + 1.0) * d0 + (-6.0 * u2 + 6.0 * u) * y1 + (3.0 * u2 - 2.0 * u) * d1)
                    / self.h
            }
            2 => ((12.0 * u - 6.0) * y0 + (6.0 * u - 4.0) * d0 + (-12.0 * u + 6.0) * y1 + (6.0 * u - 2.0) * d1) / (self.h * self.h),
            3 => (12.0 * y0 + 6.0 * d0 - 12.0 * y1 + 6.0 * d1) / (self.h * self.h * self.h),
            _ => 0.0,
        }
    }
}

impl Field for DenseSolution {
    fn dim(&self) -> usize {
        self.value.len()
    }
    fn deriv(&self, c: usize, k: usize, t: f64) -> f64 {
        match (k, self.slope[c]) {
            (0, _) => self.hermite(self.value[c], 0, t),
            (_, Some(d)) => self.hermite(d, k - 1, t),
            (_, None) => self.hermite(self.value[c], k, t),
        }
    }
}

/// Extremal from an anchored solve: the sampled trajectory (linear-spline
/// and piecewise-constant scheme) and the dense ODE solution it came from.
#[derive(Debug, Clone)]
pub struct Extremal {
    pub trajectory: Trajectory,
    pub dense: DenseSolution,
}

/// Extremal of the windowed OC action by integrating the state equation,
/// the windowed adjoint equation `ṗ = ∂f⁰/∂q − p ∂f/∂q − (Ĩ'/Ĩ) p` and the
/// control condition from the anchor values `(q0, p0)`.
pub fn extremize_oc(
    pr: &OCProblem,
    w: &Window,
    cfg: &AnchorConfig,
    q0: &[f64],
    p0: &[f64],
    u_guess: &[f64],
    m: &Mollifier,
) -> Result<Extremal> {
    let (n, mm) = (pr.n, pr.m);
    if q0.len() != n || p0.len() != n || u_guess.len() != mm {
        return Err(Error::Dimension("anchor values do not match the problem".into()));
    }
    let last_u = std::sync::Mutex::new(u_guess.to_vec());
    let control = |t: f64, y: &DVector<f64>| -> Result<Vec<f64>> {
        let guess = last_u.lock().expect("lock").clone();
        let u = solve_control(pr, &y.as_slice()[..n], &y.as_slice()[n..], t, &guess)?;
        *last_u.lock().expect("lock") = u.clone();
        Ok(u)
    };
    let rhs_u = |t: f64, y: &DVector<f64>, u: &[f64]| -> DVector<f64> {
        let (q, p) = y.as_slice().split_at(n);
        let pv = DVector::from_column_slice(p);
        let qd = pr.f(q, u, t);
        let pd = pr.f0_q(q, u, t) - pr.f_q(q, u, t).transpose() * &pv - &pv * ratio(w, t, cfg.floor);
        DVector::from_iterator(2 * n, qd.iter().chain(pd.iter()).copied())
    };
    let rhs = |t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let u = control(t, y)?;
        Ok(rhs_u(t, y, &u))
    };
    let y0 = DVector::from_iterator(2 * n, q0.iter().chain(p0).copied());
    let (start, ys) = sweep(&rhs, cfg, y0, &|_| true)?;
    let h = 0.5 * cfg.dt;
    let us: Vec<Vec<f64>> = ys
        .iter()
        .enumerate()
        .map(|(i, y)| control(start + i as f64 * h, y))
        .collect::<Result<_>>()?;
    let mut full = Vec::with_capacity(ys.len());
    let mut dfull = Vec::with_capacity(ys.len());
    for (i, (y, u)) in ys.iter().zip(&us).enumerate() {
        let d = rhs_u(start + i as f64 * h, y, u);
        full.push(DVector::from_iterator(2 * n + mm, y.iter().chain(u.iter()).copied()));
        dfull.push(DVector::from_iterator(2 * n + mm, d.iter().copied().chain(std::iter::repeat(0.0).take(mm))));
    }
    // control slopes by differences of the node values
    for c in 0..mm {
        let k = 2 * n + c;
        let last = full.len() - 1;
        for i in 0..=last {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(last));
            dfull[i][k] = (full[b][k] - full[a][k]) / ((b - a) as f64 * h);
        }
    }
    let trajectory = build_from_half_nodes(start, cfg.dt, &ys, &us, n, n, mm, m)?;
    let dense = DenseSolution {
        t0: start,
        h,
        ys: full,
        dys: dfull,
        value: (0..2 * n + mm).collect(),
        slope: vec![None; 2 * n + mm],
    };
    Ok(Extremal { trajectory, dense })
}

#[allow(clippy::too_many_arguments)]
fn build_from_half_nodes(
    start: f64,
    dt: f64,
    ys: &[DVector<f64>],
    us: &[Vec<f64>],
    nq: usize,
    np: usize,
    nu: usize,
    m: &Mollifier,
) -> Result<Trajectory> {
    let n_pts = ys.len().div_ceil(2);
    if n_pts < 2 {
        return Err(Error::NoConvergence("extremal integration stopped at the anchor".into()));
    }
    let mut q = Vec::with_capacity(n_pts * nq);
    for i in 0..n_pts {
        q.extend_from_slice(&ys[2 * i].as_slice()[..nq]);
    }
    let simpson = |a: f64, b: f64, c: f64| (a + 4.0 * b + c) / 6.0;
    let mut p = Vec::with_capacity((n_pts - 1) * np);
    let mut u = Vec::with_capacity((n_pts - 1) * nu);
    for i in 0..n_pts - 1 {
        for c in 0..np {
            p.push(simpson(ys[2 * i][nq + c], ys[2 * i + 1][nq + c], ys[2 * i + 2][nq + c]));
        }
        for c in 0..nu {
            u.push(simpson(us[2 * i][c], us[2 * i + 1][c], us[2 * i + 2][c]));
        }
    }
    Trajectory::new(start, dt, n_pts, (nq, np, nu), q, p, u, m.clone())
}

/// Extremal of a first-order windowed functional `∫ Ĩ F(t, T, T')` from anchor
/// values. Regular Lagrangians integrate
/// `M T'' = F_T − F_{T'T} T' − ∂_t F_{T'} − (Ĩ'/Ĩ) F_{T'}` with `M = F_{T'T'}`;
/// Lagrangians linear in `T'` (`M = 0`) solve the same relation for `T'`.
/// Integration stops where `Ĩ` drops below `cfg.floor`.
pub fn extremize_functional(
    i: &Functional,
    cfg: &AnchorConfig,
    t0: &[f64],
    v0: &[f64],
    m: &Mollifier,
) -> Result<Extremal> {
    let lag = i.lagrangian().clone();
    let w = i.window().clone();
    let d = lag.dim();
    if lag.order() != 1 {
        return Err(Error::DerivativeOrder { requested: lag.order(), max: 1 });
    }
    if t0.len() != d || v0.len() != d {
        return Err(Error::Dimension("anchor values do not match the functional".into()));
    }
    let jets = |x: &[f64], v: &[f64]| -> Vec<Jet> { (0..d).map(|c| [x[c], v[c], 0.0]).collect() };
    let mass = |t: f64, j: &[Jet]| DMatrix::from_fn(d, d, |a, b| lag.second(t, j, (a, 1), (b, 1)));
    // F_T − F_{T'T} T' − ∂_t F_{T'} − r F_{T'} (without the M T'' term).
    let force = |t: f64, j: &[Jet]| -> DVector<f64> {
        let r = ratio(&w, t, cfg.floor);
        let h = 1e-6 * (1.0 + t.abs());
        DVector::from_fn(d, |a, _| {
            let ft = lag.partial(t, j, a, 0);
            let mix: f64 = (0..d).map(|b| lag.second(t, j, (a, 1), (b, 0)) * j[b][1]).sum();
            let dt = (lag.partial(t + h, j, a, 1) - lag.partial(t - h, j, a, 1)) / (2.0 * h);
            ft - mix - dt - r * lag.partial(t, j, a, 1)
        })
    };
    let m0 = mass(cfg.anchor, &jets(t0, v0));
    let keep = |t: f64| w.eval(t) >= cfg.floor;
    let h = 0.5 * cfg.dt;
    if m0.amax() > 1e-12 {
        let rhs = |t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
            let (x, v) = y.as_slice().split_at(d);
            let j = jets(x, v);
            let acc = mass(t, &j)
                .lu()
                .solve(&force(t, &j))
                .ok_or_else(|| Error::NoConvergence(format!("singular F_T'T' at t={t}")))?;
            Ok(DVector::from_iterator(2 * d, v.iter().copied().chain(acc.iter().copied())))
        };
        let y0 = DVector::from_iterator(2 * d, t0.iter().chain(v0).copied());
        let (start, ys) = sweep(&rhs, cfg, y0, &keep)?;
        let dys = ys
            .iter()
            .enumerate()
            .map(|(k, y)| rhs(start + k as f64 * h, y))
            .collect::<Result<Vec<_>>>()?;
        let us = vec![Vec::new(); ys.len()];
        let trajectory = build_from_half_nodes(start, cfg.dt, &ys, &us, d, 0, 0, m)?;
        let dense = DenseSolution {
            t0: start,
            h,
            ys,
            dys,
            value: (0..d).collect(),
            slope: (d..2 * d).map(Some).collect(),
        };
        Ok(Extremal { trajectory, dense })
    } else {
        let last_v = std::sync::Mutex::new(v0.to_vec());
        let rhs = |t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
            let x = y.as_slice();
            let mut v = last_v.lock().expect("lock").clone();
            let mut converged = false;
            for _ in 0..30 {
                let g = force(t, &jets(x, &v));
                let jac = fd_jacobian(d, d, |s| force(t, &jets(x, &shift(&v, s))).as_slice().to_vec());
                let step = jac
                    .lu()
                    .solve(&g)
                    .ok_or_else(|| Error::NoConvergence(format!("degenerate first-order system at t={t}")))?;
                for (vi, si) in v.iter_mut().zip(step.iter()) {
                    *vi -= si;
                }
                if step.norm() <= 1e-13 * (1.0 + DVector::from_column_slice(&v).norm()) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::NoConvergence(format!("velocity solve at t={t}")));
            }
            *last_v.lock().expect("lock") = v.clone();
            Ok(DVector::from_column_slice(&v))
        };
        let y0 = DVector::from_column_slice(t0);
        let (start, ys) = sweep(&rhs, cfg, y0, &keep)?;
        let dys = ys
            .iter()
            .enumerate()
            .map(|(k, y)| rhs(start + k as f64 * h, y))
            .collect::<Result<Vec<_>>>()?;
        let us = vec![Vec::new(); ys.len()];
        let trajectory = build_from_half_nodes(start, cfg.dt, &ys, &us, d, 0, 0, m)?;
        let dense = DenseSolution { t0: start, h, ys, dys, value: (0..d).collect(), slope: vec![None; d] };
        Ok(Extremal { trajectory, dense })
    }
}

/// One Table-style row.
#[derive(Debug, Clone)]
pub struct VariationReport {
    pub kind: String,
    pub eps: f64,
    pub mollifier: String,
    pub s: f64,
    pub ds: f64,
    /// Raw `d²/dλ²`.
    pub d2s: f64,
    pub error: Option<String>,
}

impl VariationReport {
    /// The `½ d²/dλ²` (Taylor coefficient) convention.
    pub fn d2s_half(&self) -> f64 {
        0.5 * self.d2s
    }
}

/// Node-wise RK4 integration reused by tests and the path integral.
pub fn rk4(f: &dyn Fn(f64, &DVector<f64>) -> Result<DVector<f64>>, t: f64, y: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
    rk4_step(f, t, y, h)
}

/// Gauss-Legendre mean of `g` over `[a, b]` (panel averages for samples).
pub fn panel_average(g: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    gl16().integrate(g, a, b) / (b - a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mollifiers::MollifierKind;

    fn cos2(eps: f64) -> Mollifier {
        Mollifier::from_kind(MollifierKind::CosineSquared, 1, eps).unwrap()
    }

    #[test]
    fn wrong_partial_rejected() {
        let p = OCProblem::new(1, 0).with_dynamics(
            |q, _, _| DVector::from_element(1, q[0] * q[0]),
            |q, _, _| DMatrix::from_element(1, 1, q[0]),
            |_, _, _| DMatrix::zeros(1, 0),
        );
        assert!(matches!(p.checked(), Err(Error::PartialCheck(_))));
    }

    #[test]
    fn regularized_spline_reproduces_lines() {
        let m = cos2(0.05);
        let tr = Trajectory::from_fns(0.0, 0.01, 201, (1, 1, 0), |t| vec![2.0 * t - 1.0], |_| vec![3.0], |_| vec![], m)
            .unwrap();
        for &t in &[0.3, 1.0, 1.7] {
            assert!((tr.deriv(0, 0, t) - (2.0 * t - 1.0)).abs() < 1e-12);
            assert!((tr.deriv(0, 1, t) - 2.0).abs() < 1e-12);
            assert!(tr.deriv(0, 2, t).abs() < 1e-9);
            assert!((tr.deriv(1, 0, t) - 3.0).abs() < 1e-12);
        }
        // constant extrapolation, smoothed over the kernel radius
        assert!((tr.deriv(0, 0, 2.5) - 3.0).abs() < 1e-12);
        assert!((tr.deriv(0, 0, -0.5) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_adjoint_gives_boundary_costs_only() {
        let hf = BoundaryCost::new(|q| q[0] * q[0], |q| DVector::from_element(1, 2.0 * q[0]));
        let pr = OCProblem::new(1, 0).with_terminal_cost(hf).checked().unwrap();
        let m = cos2(0.1);
        let tr = Trajectory::from_fns(-1.0, 0.01, 401, (1, 1, 0), |t| vec![t.sin()], |_| vec![0.0], |_| vec![], m.clone())
            .unwrap();
        let w = Window::new(0.0, 2.0, m).unwrap();
        let s = oc_action(&pr, &tr, &w).unwrap();
        assert!((s - tr.deriv(0, 0, 2.0).powi(2)).abs() < 1e-12);
    }
}
