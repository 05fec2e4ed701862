//! Coordinate-dependent regularization of tensor components and the
//! diffeomorphism operator between regularized coordinate systems.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generalized::{check_eps_list, fit_slope_above, OrderFit};
use crate::mollifiers::{Mollifier, MollifierFamily, MollifierKind};
use crate::quadrature::gl16;

/// All components at a point, in [`TensorFieldRep::index_tuples`] order.
type CompFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type PointMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type JacMap = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Gaussian truncation radius (in σ) for multi-dimensional kernels.
pub const GAUSS_CUT_ND: f64 = 8.0;
/// Error floor of the two-dimensional kernel quadrature.
pub const DIFFEO_FLOOR: f64 = 1e-9;
/// Jacobian condition number above which a map is treated as degenerate.
pub const COND_LIMIT: f64 = 1e8;

/// Components of an (r, s) tensor field on ℝⁿ. Index tuples list the r upper
/// indices first, then the s lower ones.
#[derive(Clone)]
pub struct TensorFieldRep {
    pub rank: (usize, usize),
    pub n: usize,
    pub coords: String,
    comps: CompFn,
    reg: Option<Mollifier>,
}

impl std::fmt::Debug for TensorFieldRep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TensorFieldRep")
            .field("rank", &self.rank)
            .field("n", &self.n)
            .field("coords", &self.coords)
            .field("reg", &self.reg.as_ref().map(|m| m.id()))
            .finish()
    }
}

impl TensorFieldRep {
    pub fn new(
        rank: (usize, usize),
        n: usize,
        coords: impl Into<String>,
        comps: impl Fn(&[usize], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("tensor field on ℝ⁰".into()));
        }
        let idxs = tuples(n, rank.0 + rank.1);
        let all = move |x: &[f64]| idxs.iter().map(|i| comps(i, x)).collect();
        Ok(Self { rank, n, coords: coords.into(), comps: Arc::new(all), reg: None })
    }

    /// Vector field from a closure returning all n components.
    pub fn vector(n: usize, coords: impl Into<String>, v: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Result<Self> {
        Self::new((1, 0), n, coords, move |i, x| v(x)[i[0]])
    }

    pub fn scalar(n: usize, coords: impl Into<String>, s: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Self::new((0, 0), n, coords, move |_, x| s(x))
    }

    pub fn n_components(&self) -> usize {
        self.n.pow((self.rank.0 + self.rank.1) as u32)
    }

    pub fn regularization(&self) -> Option<&Mollifier> {
        self.reg.as_ref()
    }

    pub fn component(&self, idx: &[usize], x: &[f64]) -> Result<f64> {
        if idx.len() != self.rank.0 + self.rank.1 || idx.iter().any(|&i| i >= self.n) {
            return Err(Error::Dimension(format!("index {idx:?} for rank {:?} in {} dims", self.rank, self.n)));
        }
        if x.len() != self.n {
            return Err(Error::Dimension(format!("point of length {} in {} dims", x.len(), self.n)));
        }
        let flat = idx.iter().fold(0, |acc, &i| acc * self.n + i);
        Ok((self.comps)(x)[flat])
    }

    /// All components at `x`, in [`TensorFieldRep::index_tuples`] order.
    pub fn components(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!("point of length {} in {} dims", x.len(), self.n)));
        }
        Ok((self.comps)(x))
    }

    /// All index tuples in lexicographic order.
    pub fn index_tuples(&self) -> Vec<Vec<usize>> {
        tuples(self.n, self.rank.0 + self.rank.1)
    }
}

fn tuples(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..n).map(move |i| {
                    let mut t = t.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

/// One-dimensional nodes `(offset, weight·η_ε(offset))` over the kernel support.
fn kernel_nodes(m: &Mollifier) -> Vec<(f64, f64)> {
    let (r, panels) = match m.family().kind() {
        MollifierKind::Gaussian { sigma } => (GAUSS_CUT_ND * sigma * m.eps(), 2),
        _ => (m.radius(), 2),
    };
    let rule = gl16();
    let h = 2.0 * r / panels as f64;
    let mut v = Vec::with_capacity(16 * panels);
    for j in 0..panels {
        let lo = -r + j as f64 * h;
        for (u, w) in rule.mapped(lo, lo + h) {
            v.push((u, w * m.eval(u)));
        }
    }
    v
}

/// `∫ g(x + z) Π η_ε(z_i) dz` by the tensor-product kernel rule, for a
/// vector-valued `g`.
fn kernel_integrate(nodes: &[(f64, f64)], x: &[f64], g: &dyn Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let n = x.len();
    let k = nodes.len();
    let mut idx = vec![0usize; n];
    let mut p = x.to_vec();
    let mut s: Vec<f64> = Vec::new();
    loop {
        let mut w = 1.0;
        for d in 0..n {
            let (u, wd) = nodes[idx[d]];
            p[d] = x[d] + u;
            w *= wd;
        }
        if w != 0.0 {
            let v = g(&p);
            if s.is_empty() {
                s = vec![0.0; v.len()];
            }
            for (acc, vi) in s.iter_mut().zip(v) {
                *acc += w * vi;
            }
        }
        let mut d = 0;
        loop {
            if d == n {
                return s;
            }
            idx[d] += 1;
            if idx[d] < k {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Each component convolved with the tensor-product mollifier in the
/// current coordinates (no volume-invariant measure).
pub fn regularize_tensor(t: &TensorFieldRep, m: &Mollifier) -> TensorFieldRep {
    let nodes = Arc::new(kernel_nodes(m));
    let base = t.comps.clone();
    TensorFieldRep {
        rank: t.rank,
        n: t.n,
        coords: t.coords.clone(),
        comps: Arc::new(move |x| kernel_integrate(&nodes, x, &|y| base(y))),
        reg: Some(m.clone()),
    }
}

/// A diffeomorphism `x = f(X)` with inverse and Jacobian `∂x/∂X`.
#[derive(Clone)]
pub struct CoordMap {
    pub n: usize,
    pub name: String,
    forward: PointMap,
    inverse: PointMap,
    jacobian: JacMap,
}

impl std::fmt::Debug for CoordMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CoordMap({}, n={})", self.name, self.n)
    }
}

impl CoordMap {
    pub fn new(
        n: usize,
        name: impl Into<String>,
        forward: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        inverse: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        jacobian: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { n, name: name.into(), forward: Arc::new(forward), inverse: Arc::new(inverse), jacobian: Arc::new(jacobian) }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, "identity", |x| x.to_vec(), |x| x.to_vec(), move |_| DMatrix::identity(n, n))
    }

    /// Rotation of the plane: `x = R(θ) X`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(
            2,
            format!("rotation({theta})"),
            move |p| vec![c * p[0] - s * p[1], s * p[0] + c * p[1]],
            move |p| vec![c * p[0] + s * p[1], -s * p[0] + c * p[1]],
            move |_| DMatrix::from_row_slice(2, 2, &[c, -s, s, c]),
        )
    }

    /// Polar coordinates `X = (r, θ)`, `x = (r cos θ, r sin θ)`.
    pub fn polar() -> Self {
        Self::new(
            2,
            "polar",
            |p| vec![p[0] * p[1].cos(), p[0] * p[1].sin()],
            |x| vec![x[0].hypot(x[1]), x[1].atan2(x[0])],
            |p| {
                let (s, c) = p[1].sin_cos();
                DMatrix::from_row_slice(2, 2, &[c, -p[0] * s, s, p[0] * c])
            },
        )
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        (self.forward)(x)
    }

    pub fn inverse(&self, x: &[f64]) -> Vec<f64> {
        (self.inverse)(x)
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        (self.jacobian)(x)
    }

    /// `self ∘ inner`: `x = f(g(Z))`.
    pub fn compose(&self, inner: &CoordMap) -> Result<CoordMap> {
        if self.n != inner.n {
            return Err(Error::Dimension(format!("compose {}-map with {}-map", self.n, inner.n)));
        }
        let (f1, g1) = (self.clone(), inner.clone());
        let (f2, g2) = (self.clone(), inner.clone());
        let (f3, g3) = (self.clone(), inner.clone());
        Ok(Self::new(
            self.n,
            format!("{}∘{}", self.name, inner.name),
            move |z| f1.forward(&g1.forward(z)),
            move |x| g2.inverse(&f2.inverse(x)),
            move |z| {
                let y = g3.forward(z);
                f3.jacobian(&y) * g3.jacobian(z)
            },
        ))
    }

    /// Round trip to 1e-10 and Jacobian condition number below [`COND_LIMIT`]
    /// at each X-coordinate point.
    pub fn check(&self, points: &[Vec<f64>]) -> Result<()> {
        for p in points {
            if p.len() != self.n {
                return Err(Error::Dimension(format!("point {p:?} in {} dims", self.n)));
            }
            let x = self.forward(p);
            let back = self.forward(&self.inverse(&x));
            let drift = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let cond = condition(&self.jacobian(p));
            if !(cond < COND_LIMIT) || drift > 1e-10 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                return Err(Error::JacobianDegenerate { point: p.clone(), cond });
            }
        }
        Ok(())
    }
}

fn condition(j: &DMatrix<f64>) -> f64 {
    let sv = j.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Transformation factor for new index tuple `new` and old tuple `old` at X.
fn factor(rank: (usize, usize), j: &DMatrix<f64>, jinv: &DMatrix<f64>, new: &[usize], old: &[usize]) -> f64 {
    let mut f = 1.0;
    for i in 0..rank.0 {
        f *= jinv[(new[i], old[i])];
    }
    for i in rank.0..rank.0 + rank.1 {
        f *= j[(old[i], new[i])];
    }
    f
}

/// Components of `t` transformed pointwise to the X coordinates.
pub fn pointwise_pullback(t: &TensorFieldRep, map: &CoordMap) -> Result<TensorFieldRep> {
    if t.n != map.n {
        return Err(Error::Dimension(format!("{}-field with a {}-map", t.n, map.n)));
    }
    let base = t.comps.clone();
    let map = map.clone();
    let rank = t.rank;
    let olds = t.index_tuples();
    Ok(TensorFieldRep {
        rank,
        n: t.n,
        coords: map.name.clone(),
        comps: Arc::new(move |xx| transformed(rank, &olds, &base, &map, xx)),
        reg: None,
    })
}

fn transformed(rank: (usize, usize), olds: &[Vec<usize>], base: &CompFn, map: &CoordMap, xx: &[f64]) -> Vec<f64> {
    let x = map.forward(xx);
    let j = map.jacobian(xx);
    let jinv = j.clone().try_inverse().unwrap_or_else(|| DMatrix::from_element(j.nrows(), j.ncols(), f64::NAN));
    let vals = base(&x);
    olds.iter()
        .map(|new| {
            olds.iter()
                .zip(&vals)
                .map(|(old, v)| {
                    let f = factor(rank, &j, &jinv, new, old);
                    if f != 0.0 {
                        f * v
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect()
}

/// The diffeomorphism operator: components in X coordinates from the
/// regularized `t̃` (given in x coordinates), with kernel `m2` in X.
/// Integrated in `Y` with `y = f(Y)`, where `d^n y = det(∂f) d^n Y` cancels
/// the operator's `1/det(∂f)`.
/// `region` lists X points whose kernel neighborhoods must be non-degenerate.
pub fn diffeo_apply(t: &TensorFieldRep, map: &CoordMap, m2: &Mollifier, region: &[Vec<f64>]) -> Result<TensorFieldRep> {
    if t.n != map.n {
        return Err(Error::Dimension(format!("{}-field with a {}-map", t.n, map.n)));
    }
    let nodes = kernel_nodes(m2);
    let r = nodes.first().map(|p| p.0.abs()).unwrap_or(0.0);
    let mut pts = Vec::new();
    for p in region {
        pts.push(p.clone());
        for corner in tuples(2, map.n) {
            pts.push(p.iter().zip(&corner).map(|(v, c)| v + if *c == 0 { -r } else { r }).collect());
        }
    }
    map.check(&pts)?;
    let nodes = Arc::new(nodes);
    let base = t.comps.clone();
    let mapc = map.clone();
    let rank = t.rank;
    let olds = t.index_tuples();
    Ok(TensorFieldRep {
        rank,
        n: t.n,
        coords: map.name.clone(),
        comps: Arc::new(move |xx| kernel_integrate(&nodes, xx, &|y| transformed(rank, &olds, &base, &mapc, y))),
        reg: Some(m2.clone()),
    })
}

/// Max error of the diffeomorphism operator against the exact transformed
/// components, one entry per ε.
pub fn diffeo_errors(
    t: &TensorFieldRep,
    map: &CoordMap,
    family: &Arc<MollifierFamily>,
    q: usize,
    eps_list: &[f64],
    probes: &[Vec<f64>],
) -> Result<Vec<(f64, f64)>> {
    let exact = pointwise_pullback(t, map)?;
    let mut points = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let m = Mollifier::new(family.clone(), q, eps)?;
        let tt = regularize_tensor(t, &m);
        let d = diffeo_apply(&tt, map, &m, probes)?;
        let err = probes
            .par_iter()
            .map(|p| {
                (d.comps)(p)
                    .iter()
                    .zip((exact.comps)(p))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        points.push((eps, err));
    }
    Ok(points)
}

/// Log-log slope of the diffeomorphism-operator error against ε.
pub fn diffeo_order_check(
    t: &TensorFieldRep,
    map: &CoordMap,
    family: &Arc<MollifierFamily>,
    q: usize,
    eps_list: &[f64],
    probes: &[Vec<f64>],
) -> Result<OrderFit> {
    check_eps_list(eps_list)?;
    Ok(fit_slope_above(&diffeo_errors(t, map, family, q, eps_list, probes)?, DIFFEO_FLOOR))
}
