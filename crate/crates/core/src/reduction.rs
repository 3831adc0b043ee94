//! The subordinated semigroup T_B(lambda), the reduction group U(s) by
//! boundary-limit and Euler routes, the sine function, the principal-value
//! representation with its special functions, and uniform-boundedness scans.

use crate::error::{CoreError, Result};
use crate::measure::{Decay, FunctionOnLine, RealMeasure};
use crate::operator::DenseOperator;
use crate::phillips::CalcContext;
use crate::quad;
use crate::special;
use num_complex::Complex64;
use serde::Serialize;

pub type C64 = Complex64;

const PI: f64 = std::f64::consts::PI;

/// Oscillation-aware panel cap: half-period of the fastest eigencomponent.
fn osc_cap(ctx: &CalcContext) -> f64 {
    let omega = ctx.provider.max_frequency();
    (PI / (2.0 * omega.max(1e-3))).min(2.0)
}

/// Panel boundaries for the Poisson kernel (lambda/pi)/(lambda^2 + s^2) on
/// [0, t_end]: fine panels at the kernel scale |lambda|, dyadic refinement
/// into the peak at s = |Im lambda| (width Re lambda), log growth outward,
/// all capped at the oscillation limit.
fn poisson_panel_bounds(lambda: C64, t_end: f64, cap: f64) -> Vec<f64> {
    let alpha = lambda.re;
    let m = lambda.im.abs();
    let r = lambda.norm();
    let mut cuts: Vec<f64> = vec![0.0, t_end];
    // kernel scale around the origin
    let inner = (4.0 * r).min(t_end);
    let mut x = 0.0;
    while x < inner {
        x += r / 4.0;
        cuts.push(x.min(inner));
    }
    // log-graded out to t_end
    let mut y = inner.max(1e-12);
    while y < t_end {
        y *= 1.6;
        cuts.push(y.min(t_end));
    }
    // dyadic refinement into the peak
    if m > 4.0 * alpha && m < t_end {
        let mut d = m / 2.0;
        while d > alpha {
            for c in [m - d, m + d] {
                if c > 0.0 && c < t_end {
                    cuts.push(c);
                }
            }
            d *= 0.5;
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * t_end);
    // enforce the oscillation cap
    let mut bounds = Vec::with_capacity(cuts.len() * 2);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let parts = (((b - a) / cap).ceil() as usize).max(1);
        for k in 0..=parts {
            bounds.push(a + (b - a) * k as f64 / parts as f64);
        }
    }
    bounds.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * t_end);
    bounds
}

/// T_B(lambda) = (2 lambda/pi) int_0^infty Cos(s)/(lambda^2+s^2) ds,
/// the semigroup subordinated to the cosine family.
pub fn t_b_poisson(ctx: &CalcContext, lambda: C64) -> Result<DenseOperator> {
    if lambda.re <= 0.0 {
        return Err(CoreError::Invalid("subordination needs Re(lambda) > 0".into()));
    }
    if lambda.re < 1e-4 {
        return Err(CoreError::KernelPeakUnresolved {
            re_lambda: lambda.re,
        });
    }
    let spectral = ctx.provider.spectral_path().is_some();
    let t_end = if spectral {
        (2.0 * lambda.norm()).max(20.0)
    } else {
        // no closed tail on the series path; push the cutoff out and accept
        // the reported O(M |lambda| / T) truncation
        (2.0 * lambda.norm()).max(2000.0 * lambda.norm().max(1.0))
    };
    let cap = osc_cap(ctx);
    let bounds = poisson_panel_bounds(lambda, t_end, cap);
    let rule = quad::gl16();
    let mut nodes: Vec<(f64, C64)> = Vec::with_capacity((bounds.len() - 1) * rule.nodes.len());
    let mut raw = Vec::new();
    for w in bounds.windows(2) {
        raw.clear();
        quad::panel_nodes(rule, w[0], w[1], &mut raw);
        for &(s, wt) in &raw {
            nodes.push((s, 2.0 * lambda / PI / (lambda * lambda + s * s) * wt));
        }
    }
    let mut op = ctx.provider.integrate(nodes);
    if let Some(sd) = ctx.provider.spectral_path() {
        let diag: Vec<C64> = sd
            .sqrt_eigenvalues()
            .iter()
            .map(|&w| 2.0 * lambda / PI * special::poisson_tail_auto(w, lambda, t_end))
            .collect();
        op = op.add(&sd.assemble(&diag));
    }
    Ok(op)
}

/// (||T_B(l)T_B(m) - T_B(l+m)||, ||int_0^infty e^{-zr}T_B(r)dr - (z+B)^{-1}||
/// at z = 1).
pub fn semigroup_residuals(ctx: &CalcContext, lambda: C64, mu: C64) -> Result<(f64, f64)> {
    let first = t_b_poisson(ctx, lambda)?
        .matmul(&t_b_poisson(ctx, mu)?)
        .distance(&t_b_poisson(ctx, lambda + mu)?);

    let z = 1.0f64;
    let r_end = 30.0 / z;
    let b = ctx.define_b()?;
    // [0, r0] sits under the Re(lambda) floor of the Poisson quadrature;
    // int_0^{r0} e^{-r(z+B)} dr = r0 I - (r0^2/2)(zI + B) + O(r0^3)
    let r0 = 2e-4;
    let id = DenseOperator::identity(ctx.dim());
    let mut acc = id
        .scale(C64::new(r0, 0.0))
        .sub(&id.scale(C64::new(z, 0.0)).add(b).scale(C64::new(r0 * r0 / 2.0, 0.0)));
    for (r, w) in quad::composite_nodes(quad::gl16(), r0, r_end, 0.25) {
        let weight = C64::new((-z * r).exp() * w, 0.0);
        acc = acc.add(&t_b_poisson(ctx, C64::new(r, 0.0))?.scale(weight));
    }
    let resolvent = DenseOperator::identity(ctx.dim())
        .scale(C64::new(z, 0.0))
        .add(b)
        .inverse()?;
    Ok((first, acc.distance(&resolvent)))
}

/// U(s) as the boundary limit of T_B(alpha + is), Richardson-extrapolated
/// along a decreasing alpha schedule (floor 1e-4: the Poisson peak width is
/// alpha and direct quadrature cost grows like 1/alpha).
pub fn u_boundary(ctx: &CalcContext, s: f64, alpha_schedule: &[f64]) -> Result<DenseOperator> {
    if alpha_schedule.is_empty() {
        return Err(CoreError::Invalid("empty alpha schedule".into()));
    }
    for w in alpha_schedule.windows(2) {
        if w[1] >= w[0] {
            return Err(CoreError::Invalid("alpha schedule must decrease".into()));
        }
    }
    if *alpha_schedule.last().unwrap() < 1e-4 {
        return Err(CoreError::KernelPeakUnresolved {
            re_lambda: *alpha_schedule.last().unwrap(),
        });
    }
    let evals: Vec<DenseOperator> = alpha_schedule
        .iter()
        .map(|&a| t_b_poisson(ctx, C64::new(a, s)))
        .collect::<Result<_>>()?;
    // contraction check on the raw sequence
    if evals.len() >= 3 {
        for k in 0..evals.len() - 2 {
            let d0 = evals[k].distance(&evals[k + 1]);
            let d1 = evals[k + 1].distance(&evals[k + 2]);
            if d1 > 1e-10 && d0 / d1 < 1.5 {
                return Err(CoreError::NoConvergence { ratio: d0 / d1 });
            }
        }
    }
    // Neville extrapolation to alpha = 0, entrywise
    let mut table = evals;
    let n = table.len();
    for j in 1..n {
        for i in 0..n - j {
            let (ai, aij) = (alpha_schedule[i], alpha_schedule[i + j]);
            let num = table[i].sub(&table[i + 1]);
            table[i] = table[i + 1].add(&num.scale(C64::new(aij / (aij - ai), 0.0)));
        }
    }
    Ok(table[0].clone())
}

pub fn default_alpha_schedule() -> Vec<f64> {
    vec![0.1, 0.05, 0.025, 0.0125, 0.00625]
}

/// Sin(s) = int_0^s Cos(r) dr.
pub fn sine_function(ctx: &CalcContext, s: f64) -> DenseOperator {
    if s == 0.0 {
        return DenseOperator::identity(ctx.dim()).scale(C64::new(0.0, 0.0));
    }
    let (lo, hi, sign) = if s > 0.0 { (0.0, s, 1.0) } else { (s, 0.0, -1.0) };
    let nodes = quad::composite_nodes(quad::gl16(), lo, hi, osc_cap(ctx))
        .into_iter()
        .map(|(r, w)| (r, C64::new(sign * w, 0.0)));
    ctx.provider.integrate(nodes)
}

/// U(s) = Cos(s) - i B Sin(s) (the Euler route).
pub fn u_euler(ctx: &CalcContext, s: f64) -> Result<DenseOperator> {
    let b = ctx.define_b()?;
    let cos = ctx.provider.eval(s);
    let sin = sine_function(ctx, s);
    Ok(cos.sub(&b.matmul(&sin).scale(C64::new(0.0, 1.0))))
}

/// ||Cos(s) - (U(s) + U(-s))/2||.
pub fn cosine_recovery_residual(ctx: &CalcContext, s: f64) -> Result<f64> {
    let avg = u_euler(ctx, s)?.add(&u_euler(ctx, -s)?).scale(C64::new(0.5, 0.0));
    Ok(ctx.provider.eval(s).distance(&avg))
}

/// ||(U(h) - I)/h + iB||; O(h) for the generator -iB.
pub fn generator_residual(ctx: &CalcContext, h: f64) -> Result<f64> {
    let b = ctx.define_b()?;
    let diff = u_euler(ctx, h)?
        .sub(&DenseOperator::identity(ctx.dim()))
        .scale(C64::new(1.0 / h, 0.0));
    Ok(diff.add(&b.scale(C64::new(0.0, 1.0))).opnorm())
}

const PV_PANEL_BUDGET: usize = 500_000;

/// (1/pi) int_{a <= |r| <= b} Cos(s - r)/r dr, folded to
/// (1/pi) int_a^b [Cos(s-r) - Cos(s+r)]/r dr.
pub fn pv_truncated(ctx: &CalcContext, s: f64, a: f64, b: f64) -> Result<DenseOperator> {
    assert!(0.0 < a && a < b, "need 0 < a < b");
    let cap = osc_cap(ctx);
    // log panels where 1/r varies fast, oscillation-capped panels beyond
    let knee = 1.0f64.clamp(a, b);
    let mut bounds: Vec<f64> = vec![a];
    let mut x = a;
    while x < knee {
        x = (x * 1.5).min(knee);
        bounds.push(x);
    }
    while x < b {
        x = (x + cap).min(b);
        bounds.push(x);
    }
    if bounds.len() > PV_PANEL_BUDGET {
        return Err(CoreError::OscillationUnresolved {
            panels: bounds.len(),
            budget: PV_PANEL_BUDGET,
        });
    }
    let rule = quad::gl16();
    let mut nodes: Vec<(f64, C64)> = Vec::with_capacity((bounds.len() - 1) * rule.nodes.len() * 2);
    let mut raw = Vec::new();
    for w in bounds.windows(2) {
        let parts = (((w[1] - w[0]) / cap).ceil() as usize).max(1);
        for k in 0..parts {
            let (lo, hi) = (
                w[0] + (w[1] - w[0]) * k as f64 / parts as f64,
                w[0] + (w[1] - w[0]) * (k + 1) as f64 / parts as f64,
            );
            raw.clear();
            quad::panel_nodes(rule, lo, hi, &mut raw);
            for &(r, wt) in &raw {
                let weight = C64::new(wt / (PI * r), 0.0);
                nodes.push((s - r, weight));
                nodes.push((s + r, -weight));
            }
        }
    }
    Ok(ctx.provider.integrate(nodes))
}

/// Named access to the special functions of the principal-value analysis.
#[derive(Debug, Clone, Copy)]
pub enum SpecialKind {
    /// H(t) = int_0^1 sin(st)/s ds
    H,
    /// F(t) = Si(|t|) - pi/2
    F,
    /// G_{s,c}(t) = sgn(t) sin(st) F(ct)
    G,
}

pub fn eval_special(kind: SpecialKind, args: &[f64]) -> f64 {
    match kind {
        SpecialKind::H => special::h_fn(args[0]),
        SpecialKind::F => special::f_fn(args[0]),
        SpecialKind::G => special::g_fn(args[0], args[1], args[2]),
    }
}

/// G_{s,c}(B): spectral oracle when trustworthy, the regularized calculus
/// otherwise.
pub fn g_operator(ctx: &CalcContext, s: f64, c: f64) -> Result<DenseOperator> {
    assert!(c > 0.0);
    if let Some(sd) = ctx.provider.spectral_path() {
        let diag: Vec<C64> = sd
            .sqrt_eigenvalues()
            .iter()
            .map(|&w| C64::new(special::g_fn(s, c, w), 0.0))
            .collect();
        return Ok(sd.assemble(&diag));
    }
    ctx.phi(&FunctionOnLine::new(
        format!("G[{s},{c}]"),
        true,
        Decay::Bounded,
        move |t| C64::new(special::g_fn(s, c, t), 0.0),
    ))
}

/// Which family of operators a norm scan walks over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanTarget {
    /// T_B(lambda) over Re lambda > 0
    SemigroupOverLambda,
    /// U(s) over real s
    GroupOverS,
    /// G_{s,c}(B) over (s, c)
    GOverSC,
}

/// Norm scan over a parameter grid with its comparison ceiling.
#[derive(Debug, Clone, Serialize)]
pub struct BoundScanReport {
    pub target: String,
    /// One row of parameter components per scanned point.
    pub params: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
    pub supremum: f64,
    pub comparison: f64,
    pub satisfied: bool,
}

impl BoundScanReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param_re,param_im,norm,bound,satisfied\n");
        for (p, n) in self.params.iter().zip(self.norms.iter()) {
            let re = p.first().copied().unwrap_or(0.0);
            let im = p.get(1).copied().unwrap_or(0.0);
            out.push_str(&format!(
                "{re},{im},{n},{},{}\n",
                self.comparison,
                *n <= self.comparison * (1.0 + 1e-6)
            ));
        }
        out
    }
}

/// Default lambda grid: 10^k e^{i theta}, k in [-3, 3], theta in
/// +-{0.1 .. 1.47}; logarithmic coverage of modulus and argument.
pub fn default_lambda_grid() -> Vec<C64> {
    let mut grid = Vec::new();
    for k in -3..=3 {
        let r = 10f64.powi(k);
        for &th in &[0.1, 0.5, 1.0, 1.3, 1.47] {
            for sign in [1.0, -1.0] {
                grid.push(C64::from_polar(r, sign * th));
            }
        }
    }
    grid
}

/// Default s grid: +-[1e-3, 1e3], log-spaced.
pub fn default_s_grid() -> Vec<f64> {
    let mut grid = Vec::new();
    let n = 25;
    for k in 0..n {
        let v = 10f64.powf(-3.0 + 6.0 * k as f64 / (n - 1) as f64);
        grid.push(v);
        grid.push(-v);
    }
    grid
}

/// Scan the target family over the grid and compare against the transference
/// ceiling 5 M^2 (times sup|G| = pi/2 for the G family).
pub fn bound_scan(
    ctx: &CalcContext,
    target: ScanTarget,
    grid_lambda: &[C64],
    grid_s: &[f64],
    grid_sc: &[(f64, f64)],
) -> Result<BoundScanReport> {
    let m = ctx.provider.bound_m;
    let mut params = Vec::new();
    let mut norms = Vec::new();
    let (name, comparison) = match target {
        ScanTarget::SemigroupOverLambda => {
            for &lam in grid_lambda {
                params.push(vec![lam.re, lam.im]);
                norms.push(t_b_poisson(ctx, lam)?.opnorm());
            }
            ("T_B over Re lambda > 0", 5.0 * m * m)
        }
        ScanTarget::GroupOverS => {
            for &s in grid_s {
                params.push(vec![s, 0.0]);
                norms.push(u_euler(ctx, s)?.opnorm());
            }
            ("U over s", 5.0 * m * m)
        }
        ScanTarget::GOverSC => {
            for &(s, c) in grid_sc {
                params.push(vec![s, c]);
                norms.push(g_operator(ctx, s, c)?.opnorm());
            }
            ("G_{s,c}(B) over (s,c)", 5.0 * m * m * std::f64::consts::FRAC_PI_2)
        }
    };
    let supremum = norms.iter().cloned().fold(0.0, f64::max);
    Ok(BoundScanReport {
        target: name.into(),
        params,
        norms,
        supremum,
        comparison,
        satisfied: supremum <= comparison * (1.0 + 1e-6),
    })
}

/// Total variation of mu_c = c^{-1} delta_c + 1_{[c,infty)} r^{-2} dr;
/// exactly 2/c, witnessing the vanishing annulus limit.
pub fn pv_measure_tv(c: f64) -> f64 {
    RealMeasure::pv_tail_measure(c).tv_norm()
}
