//! Gauss-Legendre panel quadrature shared by the calculus modules.

use once_cell::sync::Lazy;

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Newton iteration on Legendre polynomials; exact to machine precision
    /// for the small orders used here.
    pub fn legendre(order: usize) -> Self {
        assert!(order >= 2);
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_eval(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussRule { nodes, weights }
    }
}

fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

static GL8: Lazy<GaussRule> = Lazy::new(|| GaussRule::legendre(8));
static GL16: Lazy<GaussRule> = Lazy::new(|| GaussRule::legendre(16));

pub fn gl8() -> &'static GaussRule {
    &GL8
}

pub fn gl16() -> &'static GaussRule {
    &GL16
}

/// Quadrature nodes `(point, weight)` for one interval [a, b].
pub fn panel_nodes(rule: &GaussRule, a: f64, b: f64, out: &mut Vec<(f64, f64)>) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    for (x, w) in rule.nodes.iter().zip(rule.weights.iter()) {
        out.push((mid + half * x, half * w));
    }
}

/// Composite Gauss nodes over [a, b] with panel length at most `max_len`.
pub fn composite_nodes(rule: &GaussRule, a: f64, b: f64, max_len: f64) -> Vec<(f64, f64)> {
    assert!(b >= a && max_len > 0.0);
    let n_panels = (((b - a) / max_len).ceil() as usize).max(1);
    let len = (b - a) / n_panels as f64;
    let mut out = Vec::with_capacity(n_panels * rule.nodes.len());
    for k in 0..n_panels {
        panel_nodes(rule, a + k as f64 * len, a + (k + 1) as f64 * len, &mut out);
    }
    out
}

/// Geometrically graded panels over [a, b] (a > 0), roughly `per_decade`
/// panels per decade; used for integrands with a scale hierarchy.
pub fn log_graded_nodes(rule: &GaussRule, a: f64, b: f64, per_decade: usize) -> Vec<(f64, f64)> {
    assert!(0.0 < a && a < b);
    let decades = (b / a).log10();
    let n_panels = ((decades * per_decade as f64).ceil() as usize).max(1);
    let ratio = (b / a).powf(1.0 / n_panels as f64);
    let mut out = Vec::with_capacity(n_panels * rule.nodes.len());
    let mut lo = a;
    for _ in 0..n_panels {
        let hi = lo * ratio;
        panel_nodes(rule, lo, hi, &mut out);
        lo = hi;
    }
    out
}

/// Scalar integral of `f` over composite Gauss nodes.
pub fn integrate<F: Fn(f64) -> f64>(nodes: &[(f64, f64)], f: F) -> f64 {
    nodes.iter().map(|&(x, w)| w * f(x)).sum()
}
