//! 1+1D real scalar field: optimal-control action on a lattice, the coherent
//! boundary cost `h = i log⟨ζ|χ⟩` and the boundary matching conditions.
//!
//! Signature `(−, +)`, coordinates `(t, x)`, `x` periodic with period `L`.
//! The boundary is the pair of edges `t = a` (normal `−e_t`) and `t = b`
//! (normal `+e_t`) of the regularized time window. The normal is used with
//! the same numeric components in both index positions.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generalized::Window;
use crate::quadrature::gl16;

/// Sign `s` in the exponent `s·½|ζ − χ|²` of the boundary overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverlapSign {
    /// `s = −1`: the overlap decays with mismatch.
    #[default]
    Damping,
    /// `s = +1`.
    AsPrinted,
}

impl OverlapSign {
    pub fn value(self) -> f64 {
        match self {
            Self::Damping => -1.0,
            Self::AsPrinted => 1.0,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "damping" | "-1" => Ok(Self::Damping),
            "printed" | "as-printed" | "+1" | "1" => Ok(Self::AsPrinted),
            o => Err(Error::InvalidParameter(format!("overlap sign '{o}' (damping or printed)"))),
        }
    }
}

/// Finite-difference weights for the `m`-th derivative at `z` from nodes `x`.
pub fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|r| r[m]).collect()
}

/// Default stencil width (order 8 differences and interpolation).
pub const STENCIL: usize = 9;

/// Node samples of `ψ, P_t, P_x` (state) and `φ, π^t, π^x` (adjoint) on a
/// uniform `N_t × N_x` grid, row-major in `t`.
#[derive(Debug, Clone)]
pub struct ScalarLattice {
    pub nt: usize,
    pub nx: usize,
    pub t0: f64,
    pub dt: f64,
    /// Period in `x`; `Δx = L/N_x`.
    pub length: f64,
    pub mass: f64,
    pub psi: Vec<f64>,
    pub p: [Vec<f64>; 2],
    pub phi: Vec<f64>,
    pub pi: [Vec<f64>; 2],
}

/// Analytic field closures `(t, x) -> value` for building lattices.
pub struct FieldFns<'a> {
    pub psi: &'a (dyn Fn(f64, f64) -> f64 + Sync),
    pub p: [&'a (dyn Fn(f64, f64) -> f64 + Sync); 2],
    pub phi: &'a (dyn Fn(f64, f64) -> f64 + Sync),
    pub pi: [&'a (dyn Fn(f64, f64) -> f64 + Sync); 2],
}

impl ScalarLattice {
    pub fn new(nt: usize, nx: usize, t0: f64, dt: f64, length: f64, mass: f64) -> Result<Self> {
        if nt < STENCIL || nx < STENCIL || !(dt > 0.0) || !(length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lattice needs N_t, N_x ≥ {STENCIL} and positive spacings (got {nt}×{nx}, Δt={dt}, L={length})"
            )));
        }
        let z = vec![0.0; nt * nx];
        Ok(Self {
            nt,
            nx,
            t0,
            dt,
            length,
            mass,
            psi: z.clone(),
            p: [z.clone(), z.clone()],
            phi: z.clone(),
            pi: [z.clone(), z],
        })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.nx as f64
    }
    pub fn t(&self, it: usize) -> f64 {
        self.t0 + it as f64 * self.dt
    }
    pub fn x(&self, ix: usize) -> f64 {
        ix as f64 * self.dx()
    }
    pub fn t_end(&self) -> f64 {
        self.t(self.nt - 1)
    }

    pub fn fill(&mut self, f: &FieldFns<'_>) {
        let nx = self.nx;
        let coords: Vec<(f64, f64)> =
            (0..self.nt * nx).map(|i| (self.t(i / nx), self.x(i % nx))).collect();
        let eval = |g: &(dyn Fn(f64, f64) -> f64 + Sync)| -> Vec<f64> { coords.par_iter().map(|&(t, x)| g(t, x)).collect() };
        self.psi = eval(f.psi);
        self.p = [eval(f.p[0]), eval(f.p[1])];
        self.phi = eval(f.phi);
        self.pi = [eval(f.pi[0]), eval(f.pi[1])];
    }

    /// Lattice with `a` and `b` on nodes and `pad` nodes beyond each.
    pub fn spanning(nt: usize, nx: usize, a: f64, b: f64, pad: usize, length: f64, mass: f64) -> Result<Self> {
        if nt <= 2 * pad + 1 || !(b > a) {
            return Err(Error::InvalidParameter(format!("cannot place [{a}, {b}] with {pad} padding nodes on {nt} nodes")));
        }
        let dt = (b - a) / (nt - 1 - 2 * pad) as f64;
        Self::new(nt, nx, a - pad as f64 * dt, dt, length, mass)
    }

    /// Plane wave `ψ = cos(ωt − kx)`, `k = 2π·mode/L`, `ω² = k² + m²`, with
    /// `P_μ = ∂_μψ`, `φ = ψ`, `π^μ = −∂^μψ`.
    #[allow(clippy::too_many_arguments)]
    pub fn plane_wave_extremal(
        nt: usize,
        nx: usize,
        a: f64,
        b: f64,
        pad: usize,
        length: f64,
        mass: f64,
        mode: i32,
    ) -> Result<Self> {
        let mut lat = Self::spanning(nt, nx, a, b, pad, length, mass)?;
        let (k, w) = plane_wave_numbers(length, mass, mode);
        let psi = move |t: f64, x: f64| (w * t - k * x).cos();
        let pt = move |t: f64, x: f64| -w * (w * t - k * x).sin();
        let px = move |t: f64, x: f64| k * (w * t - k * x).sin();
        // π^t = −∂^tψ = ∂_tψ, π^x = −∂_xψ
        let mpx = move |t: f64, x: f64| -px(t, x);
        lat.fill(&FieldFns { psi: &psi, p: [&pt, &px], phi: &psi, pi: [&pt, &mpx] });
        Ok(lat)
    }

    fn at(&self, v: &[f64], it: usize, ix: usize) -> f64 {
        v[it * self.nx + ix]
    }

    fn t_stencil(&self, it: usize) -> usize {
        let half = STENCIL / 2;
        it.saturating_sub(half).min(self.nt - STENCIL)
    }

    /// `∂_t` of a node field at node `(it, ix)`.
    pub fn d_t(&self, v: &[f64], it: usize, ix: usize) -> f64 {
        let s = self.t_stencil(it);
        let xs: Vec<f64> = (0..STENCIL).map(|j| (s + j) as f64).collect();
        let w = fornberg(it as f64, &xs, 1);
        w.iter().enumerate().map(|(j, c)| c * self.at(v, s + j, ix)).sum::<f64>() / self.dt
    }

    /// Periodic `∂_x` at node `(it, ix)`.
    pub fn d_x(&self, v: &[f64], it: usize, ix: usize) -> f64 {
        let half = (STENCIL / 2) as isize;
        let xs: Vec<f64> = (-half..=half).map(|j| j as f64).collect();
        let w = fornberg(0.0, &xs, 1);
        let n = self.nx as isize;
        w.iter()
            .zip(-half..=half)
            .map(|(c, j)| c * self.at(v, it, (ix as isize + j).rem_euclid(n) as usize))
            .sum::<f64>()
            / self.dx()
    }

    /// Node field interpolated in `t` at column `ix`.
    pub fn interp_t(&self, v: &[f64], t: f64, ix: usize) -> f64 {
        let u = (t - self.t0) / self.dt;
        let it = u.round().clamp(0.0, (self.nt - 1) as f64) as usize;
        if (u - it as f64).abs() < 1e-12 {
            return self.at(v, it, ix);
        }
        let s = self.t_stencil(u.floor().max(0.0) as usize);
        let xs: Vec<f64> = (0..STENCIL).map(|j| (s + j) as f64).collect();
        let w = fornberg(u, &xs, 0);
        w.iter().enumerate().map(|(j, c)| c * self.at(v, s + j, ix)).sum()
    }

    fn check_window(&self, w: &Window) -> Result<()> {
        let (lo, hi) = w.support();
        if !(lo >= self.t0 - 1e-12 && hi <= self.t_end() + 1e-12) {
            return Err(Error::Dimension(format!(
                "window support [{lo}, {hi}] exceeds the lattice [{}, {}]",
                self.t0,
                self.t_end()
            )));
        }
        Ok(())
    }

    /// `∂^μP_μ − m²ψ` and `∂_μψ − P_μ` at a node.
    fn state_residuals(&self, it: usize, ix: usize) -> [f64; 3] {
        let div = -self.d_t(&self.p[0], it, ix) + self.d_x(&self.p[1], it, ix);
        [
            div - self.mass * self.mass * self.at(&self.psi, it, ix),
            self.d_t(&self.psi, it, ix) - self.at(&self.p[0], it, ix),
            self.d_x(&self.psi, it, ix) - self.at(&self.p[1], it, ix),
        ]
    }

    /// `π^μ + ∂^μφ` and `∂_μπ^μ + m²φ` at a node.
    fn adjoint_residuals(&self, it: usize, ix: usize) -> [f64; 3] {
        [
            self.at(&self.pi[0], it, ix) - self.d_t(&self.phi, it, ix),
            self.at(&self.pi[1], it, ix) + self.d_x(&self.phi, it, ix),
            self.d_t(&self.pi[0], it, ix) + self.d_x(&self.pi[1], it, ix) + self.mass * self.mass * self.at(&self.phi, it, ix),
        ]
    }

    /// `φ[∂^μP_μ − m²ψ] + π^μ[∂_μψ − P_μ]` at a node.
    fn density(&self, it: usize, ix: usize) -> f64 {
        let r = self.state_residuals(it, ix);
        self.at(&self.phi, it, ix) * r[0] + self.at(&self.pi[0], it, ix) * r[1] + self.at(&self.pi[1], it, ix) * r[2]
    }
}

pub fn plane_wave_numbers(length: f64, mass: f64, mode: i32) -> (f64, f64) {
    let k = 2.0 * std::f64::consts::PI * mode as f64 / length;
    (k, (k * k + mass * mass).sqrt())
}

/// Complex boundary data on the two time edges, one value per `x` node.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    pub lower: Vec<Complex64>,
    pub upper: Vec<Complex64>,
}

impl BoundaryField {
    pub fn map(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Self {
            lower: self.lower.iter().enumerate().map(|(i, z)| f(i, *z)).collect(),
            upper: self.upper.iter().enumerate().map(|(i, z)| f(i, *z)).collect(),
        }
    }

}

/// `χ = ψ + i n^μP_μ` at the window edges.
pub fn chi(lat: &ScalarLattice, w: &Window) -> Result<BoundaryField> {
    lat.check_window(w)?;
    let edge = |t: f64, n: f64| -> Vec<Complex64> {
        (0..lat.nx).map(|ix| Complex64::new(lat.interp_t(&lat.psi, t, ix), n * lat.interp_t(&lat.p[0], t, ix))).collect()
    };
    Ok(BoundaryField { lower: edge(w.a, -1.0), upper: edge(w.b, 1.0) })
}

/// `h = i log⟨ζ|χ⟩ = i ∫_{∂V} (s·½|ζ − χ|² + i Im(ζ*χ)) dx`, evaluated directly.
pub fn scalar_boundary_cost(zeta: &BoundaryField, chi: &BoundaryField, dx: f64, sign: OverlapSign) -> Result<Complex64> {
    if zeta.lower.len() != chi.lower.len() || zeta.upper.len() != chi.upper.len() {
        return Err(Error::Dimension("ζ and χ are sampled on different boundaries".into()));
    }
    let s = sign.value();
    let mut mismatch = 0.0;
    let mut phase = 0.0;
    for (z, c) in zeta.lower.iter().zip(&chi.lower).chain(zeta.upper.iter().zip(&chi.upper)) {
        mismatch += (z - c).norm_sqr() * dx;
        phase += (z.conj() * c).im * dx;
    }
    Ok(Complex64::new(-phase, 0.5 * s * mismatch))
}

/// `log⟨ζ|χ⟩` from the same boundary integral.
pub fn log_overlap(zeta: &BoundaryField, chi: &BoundaryField, dx: f64, sign: OverlapSign) -> Result<Complex64> {
    let h = scalar_boundary_cost(zeta, chi, dx, sign)?;
    Ok(h / Complex64::i())
}

/// `∫_{∂V} n^μ(ψP'_μ − ψ'P_μ)` with unprimed fields from `χ` and primed from `ζ`.
pub fn re_h_antisymmetric(zeta: &BoundaryField, chi: &BoundaryField, dx: f64) -> f64 {
    let mut s = 0.0;
    for (z, c) in zeta.lower.iter().zip(&chi.lower).chain(zeta.upper.iter().zip(&chi.upper)) {
        // χ = ψ + i n^μP_μ, so n^μP_μ = Im χ; likewise for ζ
        s += (c.re * z.im - z.re * c.im) * dx;
    }
    s
}

/// `∫ Ĩ(t)(φ[∂^μP_μ − m²ψ] + π^μ[∂_μψ − P_μ]) dt dx + h(ζ)`; the boundary
/// cost is omitted when `zeta` is `None`.
pub fn scalar_oc_action(lat: &ScalarLattice, w: &Window, zeta: Option<&BoundaryField>, sign: OverlapSign) -> Result<Complex64> {
    lat.check_window(w)?;
    let dens: Vec<f64> = (0..lat.nt * lat.nx).into_par_iter().map(|i| lat.density(i / lat.nx, i % lat.nx)).collect();
    // trapezoid in periodic x, then interpolated product integration in t
    let row: Vec<f64> = (0..lat.nt).map(|it| dens[it * lat.nx..(it + 1) * lat.nx].iter().sum::<f64>() * lat.dx()).collect();
    let rowlat = ScalarLattice { nx: 1, ..lat.clone() };
    let (lo, hi) = w.support();
    let mut breaks: Vec<f64> = (0..lat.nt).map(|i| lat.t(i)).filter(|t| *t > lo && *t < hi).collect();
    breaks.extend(w.breaks().into_iter().filter(|t| *t > lo && *t < hi));
    breaks.push(lo);
    breaks.push(hi);
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let g = gl16();
    let mut dyn_part = 0.0;
    for pair in breaks.windows(2) {
        dyn_part += g.integrate(|t| w.eval(t) * rowlat.interp_t(&row, t, 0), pair[0], pair[1]);
    }
    let h = match zeta {
        Some(z) => scalar_boundary_cost(z, &chi(lat, w)?, lat.dx(), sign)?,
        None => Complex64::new(0.0, 0.0),
    };
    Ok(Complex64::new(dyn_part, 0.0) + h)
}

/// Boundary matching and interior residuals (max norms).
#[derive(Debug, Clone, Copy)]
pub struct ScalarPmpReport {
    /// `φ − ψ` on the boundary.
    pub phi_psi: f64,
    /// `π^μn_μ − P_μn^μ` on the boundary.
    pub pi_normal: f64,
    /// `ζ − χ` on the boundary.
    pub zeta_chi: f64,
    /// Interior `π^μ + ∂^μφ`, `∂_μπ^μ + m²φ`.
    pub adjoint: f64,
    /// Interior `∂_μψ − P_μ`, `∂^μP_μ − m²ψ`.
    pub state: f64,
}

impl ScalarPmpReport {
    pub fn max_boundary(&self) -> f64 {
        self.phi_psi.max(self.pi_normal).max(self.zeta_chi)
    }
}

pub fn scalar_pmp_check(lat: &ScalarLattice, w: &Window, zeta: &BoundaryField) -> Result<ScalarPmpReport> {
    let ch = chi(lat, w)?;
    if zeta.lower.len() != lat.nx || zeta.upper.len() != lat.nx {
        return Err(Error::Dimension("ζ must have one value per x node on each edge".into()));
    }
    let mut phi_psi: f64 = 0.0;
    let mut pi_normal: f64 = 0.0;
    for (t, n) in [(w.a, -1.0), (w.b, 1.0)] {
        for ix in 0..lat.nx {
            phi_psi = phi_psi.max((lat.interp_t(&lat.phi, t, ix) - lat.interp_t(&lat.psi, t, ix)).abs());
            let pin = n * lat.interp_t(&lat.pi[0], t, ix);
            let pn = n * lat.interp_t(&lat.p[0], t, ix);
            pi_normal = pi_normal.max((pin - pn).abs());
        }
    }
    let zeta_chi = zeta
        .lower
        .iter()
        .zip(&ch.lower)
        .chain(zeta.upper.iter().zip(&ch.upper))
        .map(|(z, c)| (z - c).norm())
        .fold(0.0, f64::max);
    let half = STENCIL / 2;
    let interior: Vec<usize> = (half..lat.nt - half).flat_map(|it| (0..lat.nx).map(move |ix| it * lat.nx + ix)).collect();
    let (adjoint, state) = interior
        .par_iter()
        .map(|&i| {
            let (it, ix) = (i / lat.nx, i % lat.nx);
            let a = lat.adjoint_residuals(it, ix).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let s = lat.state_residuals(it, ix).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (a, s)
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)));
    Ok(ScalarPmpReport { phi_psi, pi_normal, zeta_chi, adjoint, state })
}
