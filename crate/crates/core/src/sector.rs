//! Contour (sectorial) functional calculus for the square root generator:
//! Psi(f) = (1/2 pi i) int_Gamma f(z) R(z, B) dz over the sector boundary,
//! its agreement with the measure calculus, the identification B = A^{1/2},
//! and the resolvent estimate on the strip.

use crate::error::{CoreError, Result};
use crate::measure::{Decay, FunctionOnLine};
use crate::operator::{resolvent, DenseOperator, SpectralData};
use crate::phillips::CalcContext;
use crate::quad;
use num_complex::Complex64;
use std::sync::Arc;

pub type C64 = Complex64;

const PI: f64 = std::f64::consts::PI;

/// Boundary of the sector S_{phi} traversed counterclockwise: upper ray
/// r e^{i phi} from r_max to r_min, then lower ray r e^{-i phi} outward.
#[derive(Debug, Clone)]
pub struct ContourSpec {
    pub angle: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub nodes_per_decade: usize,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec {
            angle: PI / 5.0,
            r_min: 1e-6,
            r_max: 1e6,
            nodes_per_decade: 8,
        }
    }
}

/// Holomorphic function on a sector with two-sided power decay
/// |f(z)| <= m_f min(|z|^s, |z|^{-s}).
#[derive(Clone)]
pub struct H0Function {
    pub ident: String,
    /// Decay exponent s > 0.
    pub s_decay: f64,
    /// Decay constant on the relevant sector.
    pub m_f: f64,
    eval: Arc<dyn Fn(C64) -> C64 + Send + Sync>,
}

impl H0Function {
    pub fn new(
        ident: impl Into<String>,
        s_decay: f64,
        m_f: f64,
        eval: impl Fn(C64) -> C64 + Send + Sync + 'static,
    ) -> Self {
        assert!(s_decay > 0.0 && m_f > 0.0);
        H0Function {
            ident: ident.into(),
            s_decay,
            m_f,
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, z: C64) -> C64 {
        (self.eval)(z)
    }

    /// Spot-check the decay envelope on the contour rays.
    pub fn check_decay(&self, angle: f64) -> Result<()> {
        for &r in &[1e-4, 1e4] {
            for sign in [1.0, -1.0] {
                let z = C64::from_polar(r, sign * angle);
                let bound = self.m_f * r.powf(self.s_decay).min(r.powf(-self.s_decay));
                if self.eval(z).norm() > bound * (1.0 + 1e-9) {
                    return Err(CoreError::Invalid(format!(
                        "{}: decay envelope violated at |z| = {r}",
                        self.ident
                    )));
                }
            }
        }
        Ok(())
    }

    /// f(z) = z(z-1)/((1+z)(1+z^2)) = (1+z)^{-1} - (1+z^2)^{-1}; the witness
    /// whose contour image is the resolvent gap (1+B)^{-1} - (1+B^2)^{-1}.
    pub fn witness_resolvent_gap() -> Self {
        H0Function::new("z(z-1)/((1+z)(1+z^2))", 1.0, 4.0, |z| {
            z * (z - 1.0) / ((1.0 + z) * (1.0 + z * z))
        })
    }

    /// f(z) = z/(1+z)^2.
    pub fn witness_rational() -> Self {
        H0Function::new("z/(1+z)^2", 1.0, 2.0, |z| z / ((1.0 + z) * (1.0 + z)))
    }

    /// Even extension f(|t|) for the measure-calculus route.
    pub fn even_restriction(&self) -> FunctionOnLine {
        let eval = self.eval.clone();
        FunctionOnLine::new(
            format!("even[{}]", self.ident),
            true,
            Decay::Polynomial(-1),
            move |t| eval(C64::new(t.abs(), 0.0)),
        )
    }
}

fn contour_nodes(spec: &ContourSpec) -> Vec<(f64, f64)> {
    quad::log_graded_nodes(quad::gl16(), spec.r_min, spec.r_max, spec.nodes_per_decade)
}

fn psi_single(
    f: &H0Function,
    b: &DenseOperator,
    spectrum: &[C64],
    spec: &ContourSpec,
) -> Result<DenseOperator> {
    // the contour must clear the spectrum: distance from each eigenvalue to
    // the rays, measured relative to the modulus of the nearest ray point
    for &lam in spectrum {
        for sign in [1.0f64, -1.0] {
            let t = (lam * C64::from_polar(1.0, -sign * spec.angle))
                .re
                .clamp(spec.r_min, spec.r_max);
            let dist = (lam - C64::from_polar(t, sign * spec.angle)).norm();
            if dist < 1e-3 * t {
                return Err(CoreError::ContourTooClose {
                    distance: dist,
                    radius: t,
                });
            }
        }
    }
    let dim = b.dim();
    let mut acc = DenseOperator::identity(dim).scale(C64::new(0.0, 0.0));
    let pref = 1.0 / (2.0 * PI * C64::new(0.0, 1.0));
    for &(r, w) in &contour_nodes(spec) {
        for sign in [1.0f64, -1.0] {
            let z = C64::from_polar(r, sign * spec.angle);
            // counterclockwise: the upper ray runs inward (negative dr)
            let orient = if sign > 0.0 { -1.0 } else { 1.0 };
            let dz = C64::from_polar(1.0, sign * spec.angle) * orient * w;
            acc = acc.add(&resolvent(b, z)?.scale(pref * f.eval(z) * dz));
        }
    }
    Ok(acc)
}

/// Psi(f) = (1/2 pi i) int_Gamma f(z) R(z, B) dz, with the truncation at
/// r_min/r_max certified by the decay envelope (error <= m_f r^s / (pi s)
/// per end) and contour independence verified by halving the angle.
pub fn contour_psi(f: &H0Function, b: &DenseOperator, spec: &ContourSpec) -> Result<DenseOperator> {
    f.check_decay(spec.angle)?;
    let spectrum = SpectralData::compute(b)
        .map(|s| s.eigenvalues)
        .unwrap_or_default();
    let main = psi_single(f, b, &spectrum, spec)?;
    let halved = ContourSpec {
        angle: spec.angle / 2.0,
        ..spec.clone()
    };
    let check = psi_single(f, b, &spectrum, &halved)?;
    let gap = main.distance(&check);
    let tail = 2.0 * f.m_f * spec.r_min.powf(f.s_decay) / (PI * f.s_decay);
    if gap > 1e-6 + tail {
        return Err(CoreError::Invalid(format!(
            "contour dependence detected: angle-halving moved Psi(f) by {gap:.3e}"
        )));
    }
    Ok(main)
}

/// ||Psi(f) - Phi(f restricted evenly to the line)||.
pub fn compat_residual(ctx: &CalcContext, f: &H0Function, spec: &ContourSpec) -> Result<f64> {
    let b = ctx.define_b()?;
    let psi = contour_psi(f, b, spec)?;
    let phi = ctx.phi(&f.even_restriction())?;
    Ok(psi.distance(&phi))
}

/// The double-ray kernel of the compatibility proof:
/// g(s) = (1/2 pi) [ int_{Gamma+} f(z) e^{i z |s|} dz
///                 + int_{Gamma-} f(z) e^{-i z |s|} dz ],
/// both exponents decaying off the rays.
pub fn proof_kernel(f: &H0Function, spec: &ContourSpec, s: f64) -> C64 {
    let s = s.abs();
    let mut acc = C64::new(0.0, 0.0);
    // truncate where the exponential damping e^{-r sin(angle) s} has died
    let r_top = if s > 0.0 {
        (40.0 / (spec.angle.sin() * s)).clamp(spec.r_min * 10.0, spec.r_max)
    } else {
        spec.r_max
    };
    // oscillation r cos(angle) s limits the panel length in r
    let cap = if s > 0.0 {
        (PI / (2.0 * spec.angle.cos() * s)).min(r_top / 4.0)
    } else {
        f64::INFINITY
    };
    let mut nodes = quad::log_graded_nodes(quad::gl16(), spec.r_min, r_top, spec.nodes_per_decade);
    if cap.is_finite() {
        // re-panel the oscillatory stretch uniformly
        let osc_from = (cap * 4.0).max(spec.r_min);
        if osc_from < r_top {
            nodes = quad::log_graded_nodes(
                quad::gl16(),
                spec.r_min,
                osc_from,
                spec.nodes_per_decade,
            );
            nodes.extend(quad::composite_nodes(quad::gl16(), osc_from, r_top, cap));
        }
    }
    for &(r, w) in &nodes {
        for sign in [1.0f64, -1.0] {
            let z = C64::from_polar(r, sign * spec.angle);
            let dz = C64::from_polar(1.0, sign * spec.angle);
            // upper ray: e^{izs}; lower ray: e^{-izs}; both decay like
            // e^{-r s sin(angle)}
            let kernel = (C64::new(0.0, sign) * z * s).exp();
            // orientation along each ray outward (the two rays are summed,
            // not subtracted, in the proof's display)
            acc += f.eval(z) * kernel * dz * w / (2.0 * PI);
        }
    }
    acc
}

/// max_t | int_R cos(s t) g(s) ds - f(t) |: the proof kernel represents f
/// through the cosine transform.
pub fn kernel_identity_residual(f: &H0Function, spec: &ContourSpec, t_grid: &[f64]) -> f64 {
    // g has an integrable log singularity at s = 0 (f ~ c/z on the rays), so
    // the transform grid must be graded toward 0; the tail decays like s^{-2}
    let s_max = 400.0;
    let t_top = t_grid.iter().fold(1.0f64, |m, &t| m.max(t.abs()));
    let mut nodes = quad::log_graded_nodes(quad::gl16(), 1e-6, 1.0, 4);
    nodes.extend(quad::composite_nodes(
        quad::gl16(),
        1.0,
        s_max,
        (8.0 / t_top).min(4.0),
    ));
    let g: Vec<C64> = nodes.iter().map(|&(s, _)| proof_kernel(f, spec, s)).collect();
    let mut worst = 0.0f64;
    for &t in t_grid {
        let mut acc = C64::new(0.0, 0.0);
        for (&(s, w), &gv) in nodes.iter().zip(&g) {
            // even integrand: 2 int_0^infty
            acc += 2.0 * w * gv * (t * s).cos();
        }
        worst = worst.max((acc - f.eval(C64::new(t, 0.0))).norm());
    }
    worst
}

/// Residuals of the square-root identification.
#[derive(Debug, Clone, Copy)]
pub struct SqrtIdentification {
    /// ||B^2 - A||
    pub b_square_vs_a: f64,
    /// ||B - A^{1/2}|| against the principal-branch spectral oracle
    pub b_vs_oracle: f64,
    /// ||(1+B)^{-1} - [Psi(f_gap) + (1+A)^{-1}]|| with the resolvent-gap
    /// witness
    pub replay_residual: f64,
}

pub fn sqrt_identification(ctx: &CalcContext, spec: &ContourSpec) -> Result<SqrtIdentification> {
    let a = ctx.generator();
    let b = ctx.define_b()?;
    let b_square_vs_a = b.matmul(b).distance(a);
    let sd = SpectralData::compute(a)?;
    let b_vs_oracle = b.distance(&sd.sqrt_oracle());

    let id = DenseOperator::identity(ctx.dim());
    let lhs = id.add(b).inverse()?;
    let psi = contour_psi(&H0Function::witness_resolvent_gap(), b, spec)?;
    let rhs = psi.add(&id.add(a).inverse()?);
    Ok(SqrtIdentification {
        b_square_vs_a,
        b_vs_oracle,
        replay_residual: lhs.distance(&rhs),
    })
}

/// ||R(lambda, A^{1/2}) - 2 lambda R(lambda^2, A) - R(-lambda, A^{1/2})||;
/// the partial-fraction identity linking the strip and the sector.
pub fn strip_identity_residual(ctx: &CalcContext, lambda: C64) -> Result<f64> {
    let a = ctx.generator();
    let sqrt_a = SpectralData::compute(a)?.sqrt_oracle();
    let r1 = resolvent(&sqrt_a, lambda)?;
    let r2 = resolvent(a, lambda * lambda)?;
    let r3 = resolvent(&sqrt_a, -lambda)?;
    Ok(r1.sub(&r2.scale(2.0 * lambda)).sub(&r3).opnorm())
}

/// (measured M_tilde, measured M_prime, M): M_tilde = sup |Im lambda|
/// ||R(lambda, A^{1/2})|| over the grid, M_prime = sup over the Re < 0 half
/// of ||lambda R(lambda, A^{1/2})||; the chain M_tilde <= M_prime + 2M must
/// hold.
pub fn strip_bound_fit(ctx: &CalcContext, grid: &[C64]) -> Result<(f64, f64, f64)> {
    let sqrt_a = SpectralData::compute(ctx.generator())?.sqrt_oracle();
    let mut m_tilde = 0.0f64;
    let mut m_prime = 0.0f64;
    for &lam in grid {
        if lam.im.abs() < 1e-3 {
            return Err(CoreError::Invalid(
                "strip grid must keep |Im lambda| >= 1e-3".into(),
            ));
        }
        let r = resolvent(&sqrt_a, lam)?;
        m_tilde = m_tilde.max(lam.im.abs() * r.opnorm());
        if lam.re < 0.0 {
            m_prime = m_prime.max(lam.norm() * r.opnorm());
        }
    }
    Ok((m_tilde, m_prime, ctx.provider.bound_m))
}

/// Default strip grid: log moduli, both half-planes, clear of the real axis.
pub fn default_strip_grid() -> Vec<C64> {
    let mut grid = Vec::new();
    for k in -2..=2 {
        let r = 10f64.powi(k);
        for &th in &[0.3, 0.8, 1.4, std::f64::consts::FRAC_PI_2, 1.8, 2.6] {
            for sign in [1.0, -1.0] {
                let z = C64::from_polar(r, sign * th);
                if z.im.abs() >= 1e-3 {
                    grid.push(z);
                }
            }
        }
    }
    grid
}
