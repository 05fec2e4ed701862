//! Gauss-Legendre rules, composite panels and an adaptive integrator.

use std::sync::OnceLock;

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over [a, b] with this rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }

    /// Maps the rule to [a, b] and returns `(points, weights)`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, w * h))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Shared 16-point rule.
pub fn gl16() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(16))
}

/// Shared 64-point rule.
pub fn gl64() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(64))
}

/// Composite rule: `panels` equal panels of the given rule on [a, b].
pub fn composite<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    f: F,
    a: f64,
    b: f64,
    panels: usize,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + k as f64 * h;
            rule.integrate(&f, lo, lo + h)
        })
        .sum()
}

/// Composite rule over consecutive breakpoints, `per` panels between each pair.
pub fn over_breaks<F: Fn(f64) -> f64>(rule: &GaussLegendre, f: F, breaks: &[f64], per: usize) -> f64 {
    breaks
        .windows(2)
        .map(|w| composite(rule, &f, w[0], w[1], per))
        .sum()
}

/// GL16 nodes and weights over `[lo, hi]`, split at the interior `breaks` and
/// then into equal panels no wider than `max_width`.
pub fn panel_nodes(lo: f64, hi: f64, breaks: &[f64], max_width: f64) -> Vec<(f64, f64)> {
    if !(lo < hi) {
        return Vec::new();
    }
    let mut v = vec![lo, hi];
    v.extend(breaks.iter().copied().filter(|b| *b > lo && *b < hi));
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let r = gl16();
    let mut out = Vec::new();
    for w in v.windows(2) {
        let n = ((w[1] - w[0]) / max_width).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / n as f64;
        for k in 0..n {
            let a = w[0] + k as f64 * h;
            out.extend(r.mapped(a, a + h));
        }
    }
    out
}

/// `∫ f` over the nodes of [`panel_nodes`].
pub fn panels_integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, breaks: &[f64], max_width: f64) -> f64 {
    panel_nodes(lo, hi, breaks, max_width).into_iter().map(|(x, w)| w * f(x)).sum()
}

/// Globally adaptive integration: the panel with the largest error estimate
/// (16-point vs two 16-point halves) is split until the summed estimate is
/// below `tol` or the panel budget is spent.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    adaptive_with_error(f, a, b, tol).0
}

/// As [`adaptive`], also returning the final error estimate.
pub fn adaptive_with_error<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const MAX_PANELS: usize = 4000;
    if b <= a {
        return (0.0, 0.0);
    }
    let r = gl16();
    let split = |lo: f64, hi: f64| {
        let m = 0.5 * (lo + hi);
        let whole = r.integrate(&f, lo, hi);
        let left = r.integrate(&f, lo, m);
        let right = r.integrate(&f, m, hi);
        let both = left + right;
        (lo, hi, both, (both - whole).abs())
    };
    let mut panels = vec![split(a, b)];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.3).sum();
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let floor = 4.0 * f64::EPSILON * panels.iter().map(|p| p.2.abs()).sum::<f64>();
        if total_err <= tol.max(floor) || panels.len() >= MAX_PANELS {
            return (total, total_err);
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = panels.swap_remove(idx);
        let m = 0.5 * (lo + hi);
        panels.push(split(lo, m));
        panels.push(split(m, hi));
    }
}
