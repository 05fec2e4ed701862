//! Optimal-control path integral: discrete action, Dirac-root integration,
//! flow-map propagation, the coherent oscillator propagator and the
//! quadratic Gaussian path integral.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::generalized::Window;
use crate::mollifiers::Mollifier;
use crate::ocontrol::{OCProblem, Trajectory};
use crate::oscillator::coherent_overlap;
use crate::quadrature::{gl16, panel_nodes};
use crate::variation::Field;

type ControlFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// One-step rule of the flow map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowRule {
    /// `q ↦ q + Δt f(q)`.
    Euler,
    /// RK4 with the given number of substeps over `Δt`.
    Exact { substeps: usize },
}

/// Discrete flow `q_{n+1} = W(q_n)` of `q̇ = f(q, u(t), t)` on `t_n = t_1 + (n−1)Δt`.
#[derive(Clone)]
pub struct FlowMap {
    problem: OCProblem,
    control: ControlFn,
    pub rule: FlowRule,
    pub t1: f64,
    pub dt: f64,
}

impl FlowMap {
    pub fn new(problem: OCProblem, rule: FlowRule, t1: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("Δt = {dt} must be positive")));
        }
        if let FlowRule::Exact { substeps: 0 } = rule {
            return Err(Error::InvalidParameter("exact flow needs at least one substep".into()));
        }
        let m = problem.m;
        Ok(Self { problem, control: Arc::new(move |_| vec![0.0; m]), rule, t1, dt })
    }

    pub fn with_control(mut self, u: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.control = Arc::new(u);
        self
    }

    pub fn problem(&self) -> &OCProblem {
        &self.problem
    }

    pub fn control(&self, t: f64) -> Vec<f64> {
        (self.control)(t)
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t1 + n as f64 * self.dt
    }

    /// Step from slice `n` (0-based) to `n + 1`.
    pub fn step(&self, n: usize, q: &[f64]) -> Vec<f64> {
        let t = self.time(n);
        match self.rule {
            FlowRule::Euler => {
                let f = self.problem.f(q, &self.control(t), t);
                q.iter().zip(f.iter()).map(|(a, b)| a + self.dt * b).collect()
            }
            FlowRule::Exact { substeps } => {
                let h = self.dt / substeps as f64;
                let rhs = |s: f64, y: &DVector<f64>| -> DVector<f64> { self.problem.f(y.as_slice(), &self.control(s), s) };
                let mut y = DVector::from_column_slice(q);
                for j in 0..substeps {
                    let s = t + j as f64 * h;
                    let k1 = rhs(s, &y);
                    let k2 = rhs(s + 0.5 * h, &(&y + &k1 * (0.5 * h)));
                    let k3 = rhs(s + 0.5 * h, &(&y + &k2 * (0.5 * h)));
                    let k4 = rhs(s + h, &(&y + &k3 * h));
                    y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
                }
                y.iter().copied().collect()
            }
        }
    }

    /// `k` steps starting at slice `n`; errors when the orbit blows up.
    pub fn iterate(&self, n: usize, q: &[f64], k: usize) -> Result<Vec<f64>> {
        let mut y = q.to_vec();
        for j in 0..k {
            y = self.step(n + j, &y);
            if !y.iter().all(|v| v.is_finite() && v.abs() < 1e12) {
                return Err(Error::UnstableStep(format!("flow left the bounded region at step {}", n + j + 1)));
            }
        }
        Ok(y)
    }

    /// Orbit `q_1, …, q_N` from `q_1`.
    pub fn orbit(&self, q1: &[f64], n_pts: usize) -> Result<Vec<Vec<f64>>> {
        let mut out = vec![q1.to_vec()];
        for n in 0..n_pts.saturating_sub(1) {
            let next = self.iterate(n, out.last().expect("nonempty"), 1)?;
            out.push(next);
        }
        Ok(out)
    }
}

/// Samples of the discretized fields: `q` at `N` nodes, `p` and `u` on `N−1` slices.
#[derive(Debug, Clone)]
pub struct DiscreteSamples {
    pub t1: f64,
    pub dt: f64,
    pub q: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
}

impl DiscreteSamples {
    fn check(&self, pr: &OCProblem) -> Result<usize> {
        let n = self.q.len();
        if n < 2 || self.p.len() != n - 1 || self.u.len() != n - 1 {
            return Err(Error::Dimension(format!(
                "scheme needs N q-samples and N−1 p/u samples (got {}, {}, {})",
                n,
                self.p.len(),
                self.u.len()
            )));
        }
        if self.q.iter().chain(&self.p).any(|v| v.len() != pr.n) || self.u.iter().any(|v| v.len() != pr.m) {
            return Err(Error::Dimension("sample vectors do not match the problem dimensions".into()));
        }
        Ok(n)
    }

    /// Regularized continuum trajectory of the samples.
    pub fn trajectory(&self, pr: &OCProblem, m: &Mollifier) -> Result<Trajectory> {
        let n = self.check(pr)?;
        Trajectory::new(
            self.t1,
            self.dt,
            n,
            (pr.n, pr.n, pr.m),
            self.q.concat(),
            self.p.concat(),
            self.u.concat(),
            m.clone(),
        )
    }
}

/// `h_f(q_N) − h_i(q_1) + Σ p_n·(q_{n+1} − q_n − Δt f(q_n, u_n, t_n)) + S⁰`,
/// with `S⁰ = ∫ f⁰` over the regularized reconstruction on `[t_1, t_N]`.
pub fn discrete_action(pr: &OCProblem, s: &DiscreteSamples, m: &Mollifier) -> Result<f64> {
    let n = s.check(pr)?;
    let mut total = pr.h_f.value(&s.q[n - 1]) - pr.h_i.value(&s.q[0]);
    for k in 0..n - 1 {
        let t = s.t1 + k as f64 * s.dt;
        let f = pr.f(&s.q[k], &s.u[k], t);
        for c in 0..pr.n {
            total += s.p[k][c] * (s.q[k + 1][c] - s.q[k][c] - s.dt * f[c]);
        }
    }
    let tr = s.trajectory(pr, m)?;
    let (lo, hi) = (s.t1, s.t1 + (n - 1) as f64 * s.dt);
    let knots: Vec<f64> = (0..n).map(|k| s.t1 + k as f64 * s.dt).collect();
    let width = 0.25 * m.radius().min(s.dt);
    let s0: f64 = panel_nodes(lo, hi, &knots, width)
        .iter()
        .map(|&(t, w)| {
            let q: Vec<f64> = (0..pr.n).map(|c| tr.deriv(c, 0, t)).collect();
            let u: Vec<f64> = (0..pr.m).map(|c| tr.deriv(2 * pr.n + c, 0, t)).collect();
            w * pr.f0(&q, &u, t)
        })
        .sum();
    Ok(total + s0)
}

/// Smallest `|G'|` accepted at a Dirac root.
pub const ROOT_SLOPE_MIN: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct DeltaResult {
    pub value: Complex64,
    /// `(x₀, G'(x₀))` for every root found.
    pub roots: Vec<(f64, f64)>,
    /// Set when `G` has no root in the domain (the integral is 0).
    pub no_root: bool,
}

fn slope(g: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-5 * (1.0 + x.abs());
    let d = |h: f64| (g(x + h) - g(x - h)) / (2.0 * h);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

fn bisect(g: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut ga = g(a);
    for _ in 0..200 {
        let c = 0.5 * (a + b);
        if c <= a || c >= b {
            break;
        }
        let gc = g(c);
        if gc == 0.0 {
            return c;
        }
        if (gc < 0.0) == (ga < 0.0) {
            a = c;
            ga = gc;
        } else {
            b = c;
        }
    }
    0.5 * (a + b)
}

/// `∫ δ(G(x)) φ(x) dx = Σ φ(x₀)/|G'(x₀)|` over the roots of `G` in `[lo, hi]`,
/// located by a `samples`-interval sign scan and bisection.
pub fn delta_integrate(
    g: &dyn Fn(f64) -> f64,
    phi: &dyn Fn(f64) -> Result<Complex64>,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<DeltaResult> {
    if !(lo < hi) || samples == 0 {
        return Err(Error::InvalidParameter(format!("bad scan domain [{lo}, {hi}] with {samples} samples")));
    }
    let h = (hi - lo) / samples as f64;
    let xs: Vec<f64> = (0..=samples).map(|i| lo + i as f64 * h).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let mut roots = Vec::new();
    for i in 0..samples {
        let (a, b) = (gs[i], gs[i + 1]);
        if a == 0.0 {
            roots.push(xs[i]);
        } else if b != 0.0 && (a < 0.0) != (b < 0.0) {
            roots.push(bisect(g, xs[i], xs[i + 1]));
        }
    }
    if gs[samples] == 0.0 {
        roots.push(xs[samples]);
    }
    let mut value = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(roots.len());
    for x0 in roots {
        let d = slope(g, x0);
        if d.abs() < ROOT_SLOPE_MIN {
            return Err(Error::DeltaDivergence { root: x0, slope: d.abs(), threshold: ROOT_SLOPE_MIN });
        }
        value += phi(x0)? / d.abs();
        out.push((x0, d));
    }
    let no_root = out.is_empty();
    Ok(DeltaResult { value, roots: out, no_root })
}

/// Initial boundary state `ψ(q₁)`, independent of `p`.
#[derive(Clone)]
pub enum BoundaryState {
    PointMass(Vec<f64>),
    /// Density integrated over the box `[lo, hi]` with `nodes` Gauss points per axis.
    Density {
        psi: Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>,
        lo: Vec<f64>,
        hi: Vec<f64>,
        nodes: usize,
    },
}

#[derive(Debug, Clone)]
pub struct PathIntegralResult {
    pub amplitude: Complex64,
    pub n_pts: usize,
    pub dt: f64,
    pub eps: Option<f64>,
    pub mollifier: Option<String>,
    /// Difference to an oracle when one was evaluated.
    pub error_estimate: Option<f64>,
    /// Flowed point `W^{N−1}(q₁)` for a point-mass state.
    pub final_point: Option<Vec<f64>>,
}

/// Weight `e^{i(h_f(q_N) + h_i(q_1) + S⁰)}` of one orbit, `S⁰` by the trapezoid rule.
fn orbit_weight(flow: &FlowMap, orbit: &[Vec<f64>], final_state: &dyn Fn(&[f64]) -> Complex64) -> Complex64 {
    let pr = flow.problem();
    let n = orbit.len();
    let f0 = |k: usize| {
        let t = flow.time(k);
        pr.f0(&orbit[k], &flow.control(t), t)
    };
    let mut s0 = 0.0;
    for k in 0..n - 1 {
        s0 += 0.5 * flow.dt * (f0(k) + f0(k + 1));
    }
    let phase = pr.h_f.value(&orbit[n - 1]) + pr.h_i.value(&orbit[0]) + s0;
    Complex64::from_polar(1.0, phase) * final_state(&orbit[n - 1]).conj()
}

/// Reduced propagator `∫ dq₁ ψ(q₁) ψ'*(W^{N−1}(q₁)) e^{i(h_f + h_i + S⁰)}`.
pub fn oc_propagate(
    flow: &FlowMap,
    boundary: &BoundaryState,
    n_pts: usize,
    final_state: &dyn Fn(&[f64]) -> Complex64,
) -> Result<PathIntegralResult> {
    if n_pts < 2 {
        return Err(Error::InvalidParameter("N must be at least 2".into()));
    }
    let n = flow.problem().n;
    let (amplitude, final_point) = match boundary {
        BoundaryState::PointMass(q1) => {
            if q1.len() != n {
                return Err(Error::Dimension(format!("point mass of dimension {}", q1.len())));
            }
            let orbit = flow.orbit(q1, n_pts)?;
            (orbit_weight(flow, &orbit, final_state), Some(orbit[n_pts - 1].clone()))
        }
        BoundaryState::Density { psi, lo, hi, nodes } => {
            if lo.len() != n || hi.len() != n || *nodes == 0 {
                return Err(Error::Dimension("density box does not match the state dimension".into()));
            }
            let rule = crate::quadrature::GaussLegendre::new(*nodes);
            let axes: Vec<Vec<(f64, f64)>> = (0..n).map(|d| rule.mapped(lo[d], hi[d]).collect()).collect();
            let total = axes.iter().map(|a| a.len()).product::<usize>();
            let mut acc = Complex64::new(0.0, 0.0);
            for idx in 0..total {
                let mut rem = idx;
                let mut q = Vec::with_capacity(n);
                let mut w = 1.0;
                for a in &axes {
                    let (x, wx) = a[rem % a.len()];
                    rem /= a.len();
                    q.push(x);
                    w *= wx;
                }
                let orbit = flow.orbit(&q, n_pts)?;
                acc += psi(&q) * orbit_weight(flow, &orbit, final_state) * w;
            }
            (acc, None)
        }
    };
    Ok(PathIntegralResult {
        amplitude,
        n_pts,
        dt: flow.dt,
        eps: None,
        mollifier: None,
        error_estimate: None,
        final_point,
    })
}

/// Nested elimination `∫dq₂ δ(q₂ − W(q₁)) ⋯ ∫dq_N δ(q_N − W(q_{N−1})) e^{i(…)}`
/// for scalar states and a point-mass `ψ`, each level by [`delta_integrate`]
/// over `[lo, hi]`.
pub fn oc_propagate_nested(
    flow: &FlowMap,
    q1: f64,
    n_pts: usize,
    final_state: &dyn Fn(&[f64]) -> Complex64,
    domain: (f64, f64),
    samples: usize,
) -> Result<DeltaResult> {
    if flow.problem().n != 1 {
        return Err(Error::Dimension("nested elimination is implemented for scalar states".into()));
    }
    if n_pts < 2 {
        return Err(Error::InvalidParameter("N must be at least 2".into()));
    }
    fn level(
        flow: &FlowMap,
        path: &mut Vec<f64>,
        n_pts: usize,
        final_state: &dyn Fn(&[f64]) -> Complex64,
        domain: (f64, f64),
        samples: usize,
    ) -> Result<DeltaResult> {
        let k = path.len() - 1;
        let prev = path[k];
        let target = flow.step(k, &[prev])[0];
        let g = move |x: f64| x - target;
        let cell = std::cell::RefCell::new(path.clone());
        let phi = |x: f64| -> Result<Complex64> {
            let mut p = cell.borrow().clone();
            p.push(x);
            if p.len() == n_pts {
                let orbit: Vec<Vec<f64>> = p.iter().map(|v| vec![*v]).collect();
                Ok(orbit_weight(flow, &orbit, final_state))
            } else {
                Ok(level(flow, &mut p, n_pts, final_state, domain, samples)?.value)
            }
        };
        delta_integrate(&g, &phi, domain.0, domain.1, samples)
    }
    let mut path = vec![q1];
    level(flow, &mut path, n_pts, final_state, domain, samples)
}

/// Per-step residual of a scalar problem when `q` uses the same
/// `q_l Δt η_ε(t − t_l)` scheme as `p`: the `q̇` overlap terms with the
/// neighbours replace the spline difference `q_{n+1} − q_n`.
pub fn comb_step_residual(flow: &FlowMap, m: &Mollifier, q: &[f64], n: usize) -> f64 {
    let dt = flow.dt;
    let tn = flow.time(n);
    let field = |t: f64| -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for (l, ql) in q.iter().enumerate() {
            let s = t - flow.time(l);
            v += ql * dt * m.eval(s);
            d += ql * dt * m.d(1, s);
        }
        (v, d)
    };
    let r = m.radius();
    let nodes = panel_nodes(tn - r, tn + r, &[tn], 0.25 * r);
    let pr = flow.problem();
    nodes
        .iter()
        .map(|&(t, w)| {
            let (v, d) = field(t);
            let f = pr.f(&[v], &flow.control(t), t)[0];
            w * m.eval(t - tn) * (d - f)
        })
        .sum()
}

/// Flow mode of the coherent propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HOFlow {
    Euler,
    Exact,
}

/// `⟨β_f|W^{T}(β_i)⟩` with `W = (1 − iωΔt)^{N−1}`, `Δt = T/(N−1)` (Euler) or `e^{−iωT}`.
pub fn ho_propagator(beta_i: Complex64, beta_f: Complex64, omega: f64, t: f64, n_pts: usize, mode: HOFlow) -> Result<Complex64> {
    if n_pts < 2 {
        return Err(Error::InvalidParameter("N must be at least 2".into()));
    }
    let flowed = match mode {
        HOFlow::Exact => Complex64::from_polar(1.0, -omega * t) * beta_i,
        HOFlow::Euler => {
            let dt = t / (n_pts - 1) as f64;
            Complex64::new(1.0, -omega * dt).powu((n_pts - 1) as u32) * beta_i
        }
    };
    Ok(coherent_overlap(beta_f, flowed))
}

/// Second-variation kernel of the windowed quadratic action at leading order:
/// `−m(η''(t₁−t₂) Ĩ(t₁) + η'(t₁−t₂) Ĩ'(t₁)) − k η(t₁−t₂)`.
pub fn quad_kernel(m: &Mollifier, w: &Window, mass: f64, k: f64, t1: f64, t2: f64) -> f64 {
    let s = t1 - t2;
    -mass * (m.d(2, s) * w.eval(t1) + m.d(1, s) * w.deriv(1, t1)) - k * m.eval(s)
}

#[derive(Debug, Clone)]
pub struct QuadPiResult {
    /// `A(t_n, t_l)`, `n, l = 1..N−1`.
    pub a: DMatrix<f64>,
    /// `∫ Π dq_n e^{−iΔt²/2 qᵀAq}` from the eigenvalues of the symmetric part.
    pub gaussian: Complex64,
    /// `((−2iπ)^{N/2} Δt^N det(A)^{1/2})⁻¹`.
    pub paper: Complex64,
    pub det: f64,
    pub cond: f64,
}

/// Quadratic path integral on `t_n = a + (n−1)Δt`, `a` the window's left edge;
/// `η` is the window's mollifier.
pub fn quad_gaussian_pi(w: &Window, n_pts: usize, dt: f64, mass: f64, k: f64) -> Result<QuadPiResult> {
    if n_pts < 2 || !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("need N ≥ 2 and Δt > 0 (N={n_pts}, Δt={dt})")));
    }
    let m = w.mollifier();
    let n = n_pts - 1;
    let t = |i: usize| w.a + i as f64 * dt;
    let a = DMatrix::from_fn(n, n, |i, j| -quad_kernel(m, w, mass, k, t(i), t(j)));
    let sym = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let amax = eig.eigenvalues.amax();
    let amin = eig.eigenvalues.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    let cond = if amin > 0.0 { amax / amin } else { f64::INFINITY };
    if !(cond < 1e14) {
        return Err(Error::SingularMatrix { cond });
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut gaussian = Complex64::new(1.0, 0.0);
    for lam in eig.eigenvalues.iter() {
        gaussian *= (Complex64::new(two_pi, 0.0) / Complex64::new(0.0, dt * dt * lam)).sqrt();
    }
    let det = a.determinant();
    let pref = Complex64::new(0.0, -two_pi).powf(n_pts as f64 / 2.0);
    let paper = (pref * dt.powi(n_pts as i32) * Complex64::new(det, 0.0).sqrt()).inv();
    Ok(QuadPiResult { a, gaussian, paper, det, cond })
}

/// `∫ e^{−iΔt²/2 qᵀAq − δ|q|²} dq` by direct quadrature for one or two
/// variables (two use polar coordinates with `s = r²` on each ray).
pub fn damped_gaussian_quadrature(a: &DMatrix<f64>, dt: f64, delta: f64) -> Result<Complex64> {
    let n = a.nrows();
    if !(delta > 0.0) || a.ncols() != n {
        return Err(Error::InvalidParameter("need δ > 0 and a square matrix".into()));
    }
    let g = gl16();
    let decay = 40.0;
    // ∫_0^S e^{−s(iQ + δ)} ds with panels of a quarter wavelength
    let ray = |qf: f64, smax: f64, jac: &dyn Fn(f64) -> f64| -> Complex64 {
        let width = if qf.abs() > 0.0 { (0.5 * std::f64::consts::PI / qf.abs()).min(1.0) } else { 1.0 };
        let panels = (smax / width).ceil() as usize;
        let h = smax / panels as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            for (s, w) in g.mapped(p as f64 * h, (p + 1) as f64 * h) {
                acc += Complex64::new(-delta * s, -qf * s).exp() * (w * jac(s));
            }
        }
        acc
    };
    match n {
        1 => {
            let alpha = 0.5 * dt * dt * a[(0, 0)];
            // integrate q directly on [0, R], twice for the even integrand
            let r = (decay / delta).sqrt();
            let width = (0.25 * std::f64::consts::PI / (2.0 * alpha.abs() * r).max(1e-12)).min(0.5);
            let panels = (r / width).ceil() as usize;
            let h = r / panels as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..panels {
                for (q, w) in g.mapped(p as f64 * h, (p + 1) as f64 * h) {
                    acc += Complex64::new(-delta * q * q, -alpha * q * q).exp() * w;
                }
            }
            Ok(acc * 2.0)
        }
        2 => {
            let sym = (a + a.transpose()) * 0.5;
            let ev = SymmetricEigen::new(sym.clone()).eigenvalues;
            if ev[0] * ev[1] <= 0.0 {
                return Err(Error::InvalidParameter("the polar oracle needs a sign-definite matrix".into()));
            }
            let smax = decay / delta;
            let nth = 128;
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..nth {
                let th = 2.0 * std::f64::consts::PI * j as f64 / nth as f64;
                let (c, s) = (th.cos(), th.sin());
                let quad = sym[(0, 0)] * c * c + 2.0 * sym[(0, 1)] * c * s + sym[(1, 1)] * s * s;
                acc += ray(0.5 * dt * dt * quad, smax, &|_| 0.5);
            }
            Ok(acc * (2.0 * std::f64::consts::PI / nth as f64))
        }
        _ => Err(Error::Dimension("the quadrature oracle handles one or two variables".into())),
    }
}

/// Damping values used by [`gaussian_oracle`] by default.
pub const ORACLE_DAMPING: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// `δ → 0` limit of [`damped_gaussian_quadrature`] by polynomial
/// extrapolation through the given damping values.
pub fn gaussian_oracle(a: &DMatrix<f64>, dt: f64, deltas: &[f64]) -> Result<Complex64> {
    if deltas.is_empty() {
        return Err(Error::InvalidParameter("no damping values".into()));
    }
    let mut p: Vec<Complex64> = deltas.iter().map(|&d| damped_gaussian_quadrature(a, dt, d)).collect::<Result<_>>()?;
    // Neville at δ = 0
    for k in 1..deltas.len() {
        for i in 0..deltas.len() - k {
            let (di, dk) = (deltas[i], deltas[i + k]);
            p[i] = (p[i + 1] * di - p[i] * dk) / (di - dk);
        }
    }
    Ok(p[0])
}
