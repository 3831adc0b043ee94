//! Complex measures on the line (atoms + gridded density + analytic tail),
//! the even-measure algebra, cosine/Fourier transforms, and the H1 -> L1
//! inversion.
//!
//! Fourier convention, fixed project-wide: (F g)(t) = int e^{-ist} g(s) ds,
//! inverse (1/2pi) int e^{ist} . dt.

use crate::error::{CoreError, Result};
use crate::special::cos_tail_over_r2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureRule {
    Midpoint,
    Trapezoid,
}

/// Uniformly gridded density values; the value at `left + k * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub left: f64,
    pub step: f64,
    pub values: Vec<C64>,
}

impl DensityGrid {
    pub fn right(&self) -> f64 {
        self.left + self.step * (self.values.len() - 1) as f64
    }

    pub fn position(&self, k: usize) -> f64 {
        self.left + self.step * k as f64
    }

    /// Linear interpolation, zero outside the grid.
    pub fn sample(&self, x: f64) -> C64 {
        let u = (x - self.left) / self.step;
        if u < 0.0 || u > (self.values.len() - 1) as f64 {
            return C64::new(0.0, 0.0);
        }
        let k = u.floor() as usize;
        if k + 1 >= self.values.len() {
            return self.values[self.values.len() - 1];
        }
        let frac = u - k as f64;
        self.values[k] * (1.0 - frac) + self.values[k + 1] * frac
    }

    fn quad_weight(&self, k: usize, rule: QuadratureRule) -> f64 {
        match rule {
            QuadratureRule::Midpoint => self.step,
            QuadratureRule::Trapezoid => {
                if k == 0 || k == self.values.len() - 1 {
                    0.5 * self.step
                } else {
                    self.step
                }
            }
        }
    }
}

/// Shape of an analytic tail density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TailKind {
    /// coefficient * r^exponent
    #[default]
    PowerLaw,
    /// coefficient / (1 + r^2); the exact residue of the kink subtraction
    /// in the Fourier inversion (a power law here would leak error O(from^-3)
    /// into every downstream operator)
    InverseQuadratic,
}

/// Analytic tail on [from, infinity), mirrored to (-infinity, -from] when
/// `symmetric`. Carries exact tail mass that plain grid truncation would lose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailDescriptor {
    pub exponent: f64,
    pub from: f64,
    pub coefficient_re: f64,
    pub coefficient_im: f64,
    pub symmetric: bool,
    #[serde(default)]
    pub kind: TailKind,
}

impl TailDescriptor {
    pub fn coefficient(&self) -> C64 {
        C64::new(self.coefficient_re, self.coefficient_im)
    }

    /// |coefficient| * int_from^infty (shape) dr (doubled when symmetric).
    pub fn mass(&self) -> f64 {
        let one_side = match self.kind {
            TailKind::PowerLaw => {
                assert!(self.exponent < -1.0, "tail must be integrable");
                self.coefficient().norm() * self.from.powf(self.exponent + 1.0)
                    / (-self.exponent - 1.0)
            }
            TailKind::InverseQuadratic => {
                self.coefficient().norm() * (std::f64::consts::FRAC_PI_2 - self.from.atan())
            }
        };
        if self.symmetric {
            2.0 * one_side
        } else {
            one_side
        }
    }

    /// int cos(t r) dTail(r); closed forms exist for r^-2 and 1/(1+r^2).
    pub fn cosine_transform(&self, t: f64) -> Result<C64> {
        let one_side = match self.kind {
            TailKind::PowerLaw => {
                if (self.exponent + 2.0).abs() > 1e-12 {
                    return Err(CoreError::TailUnresolved);
                }
                self.coefficient() * cos_tail_over_r2(t, self.from)
            }
            TailKind::InverseQuadratic => {
                self.coefficient()
                    * crate::special::poisson_kernel_tail(t, C64::new(1.0, 0.0), self.from)
            }
        };
        Ok(if self.symmetric { 2.0 * one_side } else { one_side })
    }

    /// Pointwise density value of the tail shape at r >= from.
    pub fn density_at(&self, r: f64) -> C64 {
        match self.kind {
            TailKind::PowerLaw => self.coefficient() * r.powf(self.exponent),
            TailKind::InverseQuadratic => self.coefficient() / (1.0 + r * r),
        }
    }
}

/// Complex measure on R: point atoms plus an optional gridded density and
/// analytic tail.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMeasure {
    pub atoms: Vec<(f64, C64)>,
    pub density: Option<DensityGrid>,
    pub tail: Option<TailDescriptor>,
    pub rule: QuadratureRule,
    /// Set when a convolution had to resample incommensurable grids.
    pub resampled: bool,
}

impl RealMeasure {
    pub fn zero() -> Self {
        RealMeasure {
            atoms: Vec::new(),
            density: None,
            tail: None,
            rule: QuadratureRule::Trapezoid,
            resampled: false,
        }
    }

    pub fn dirac(location: f64, weight: C64) -> Self {
        RealMeasure {
            atoms: vec![(location, weight)],
            ..RealMeasure::zero()
        }
    }

    /// (w/2)(delta_a + delta_{-a}).
    pub fn even_pair(a: f64, weight: C64) -> Self {
        RealMeasure {
            atoms: vec![(a, 0.5 * weight), (-a, 0.5 * weight)],
            ..RealMeasure::zero()
        }
    }

    pub fn from_atoms(atoms: Vec<(f64, C64)>) -> Self {
        RealMeasure {
            atoms,
            ..RealMeasure::zero()
        }
    }

    /// Sample `f(s) ds` on [left, right] with the given step.
    pub fn from_density_fn<F: Fn(f64) -> C64>(left: f64, right: f64, step: f64, f: F) -> Self {
        let n = ((right - left) / step).round() as usize;
        let values = (0..=n).map(|k| f(left + k as f64 * step)).collect();
        RealMeasure {
            atoms: Vec::new(),
            density: Some(DensityGrid { left, step, values }),
            tail: None,
            rule: QuadratureRule::Trapezoid,
            resampled: false,
        }
    }

    /// (1/2) e^{-lambda |s|} ds sampled out to where the tail is below 1e-14.
    pub fn exp_decay(lambda: f64, step: f64) -> Self {
        assert!(lambda > 0.0);
        let reach = (32.0 / lambda).min(2000.0);
        RealMeasure::from_density_fn(-reach, reach, step, move |s| {
            C64::new(0.5 * (-lambda * s.abs()).exp(), 0.0)
        })
    }

    /// The mu_c of the principal-value analysis:
    /// c^{-1} delta_c + 1_{[c,infty)} r^{-2} dr, with the tail held exactly.
    pub fn pv_tail_measure(c: f64) -> Self {
        assert!(c > 0.0);
        RealMeasure {
            atoms: vec![(c, C64::new(1.0 / c, 0.0))],
            density: None,
            tail: Some(TailDescriptor {
                exponent: -2.0,
                from: c,
                coefficient_re: 1.0,
                coefficient_im: 0.0,
                symmetric: false,
                kind: TailKind::PowerLaw,
            }),
            rule: QuadratureRule::Trapezoid,
            resampled: false,
        }
    }

    /// Total variation: sum of |atom weights| plus quadrature of |density|
    /// plus exact tail mass.
    pub fn tv_norm(&self) -> f64 {
        let mut tv: f64 = self.atoms.iter().map(|(_, w)| w.norm()).sum();
        if let Some(d) = &self.density {
            for (k, v) in d.values.iter().enumerate() {
                tv += d.quad_weight(k, self.rule) * v.norm();
            }
        }
        if let Some(t) = &self.tail {
            tv += t.mass();
        }
        tv
    }

    /// mu_e(A) = (mu(A) + mu(-A)) / 2.
    pub fn even_part(&self) -> RealMeasure {
        let mut atoms = Vec::with_capacity(2 * self.atoms.len());
        for &(s, w) in &self.atoms {
            atoms.push((s, 0.5 * w));
            atoms.push((-s, 0.5 * w));
        }
        let density = self.density.as_ref().map(|d| {
            let reach = d.right().abs().max(d.left.abs());
            let n = (reach / d.step).round() as usize;
            let left = -(n as f64) * d.step;
            let values = (0..=2 * n)
                .map(|k| {
                    let x = left + k as f64 * d.step;
                    0.5 * (d.sample(x) + d.sample(-x))
                })
                .collect();
            DensityGrid {
                left,
                step: d.step,
                values,
            }
        });
        let tail = self.tail.map(|t| {
            if t.symmetric {
                t
            } else {
                TailDescriptor {
                    coefficient_re: 0.5 * t.coefficient_re,
                    coefficient_im: 0.5 * t.coefficient_im,
                    symmetric: true,
                    ..t
                }
            }
        });
        RealMeasure {
            atoms,
            density,
            tail,
            rule: self.rule,
            resampled: self.resampled,
        }
    }

    /// Largest total-variation distance between this measure and another,
    /// comparing atoms (merged by location) and densities on a common grid.
    pub fn tv_distance(&self, other: &RealMeasure) -> f64 {
        let mut diff = 0.0;
        let mut merged: std::collections::BTreeMap<i64, C64> = Default::default();
        let key = |s: f64| (s / 1e-12).round() as i64;
        for &(s, w) in &self.atoms {
            *merged.entry(key(s)).or_insert(C64::new(0.0, 0.0)) += w;
        }
        for &(s, w) in &other.atoms {
            *merged.entry(key(s)).or_insert(C64::new(0.0, 0.0)) -= w;
        }
        diff += merged.values().map(|w| w.norm()).sum::<f64>();
        match (&self.density, &other.density) {
            (None, None) => {}
            (Some(d), None) | (None, Some(d)) => {
                for (k, v) in d.values.iter().enumerate() {
                    diff += d.quad_weight(k, self.rule) * v.norm();
                }
            }
            (Some(a), Some(b)) => {
                let step = a.step.min(b.step);
                let left = a.left.min(b.left);
                let right = a.right().max(b.right());
                let n = ((right - left) / step).round() as usize;
                for k in 0..=n {
                    let x = left + k as f64 * step;
                    diff += step * (a.sample(x) - b.sample(x)).norm();
                }
            }
        }
        match (&self.tail, &other.tail) {
            (None, None) => {}
            (Some(t), None) | (None, Some(t)) => diff += t.mass(),
            (Some(a), Some(b)) => {
                if a == b {
                } else {
                    diff += a.mass() + b.mass();
                }
            }
        }
        diff
    }

    /// Convolution. Atom*atom shifts atoms, atom*density translates the
    /// density, density*density is a discrete convolution on the common
    /// refinement (resampling incommensurable grids, flagged).
    pub fn convolve(&self, other: &RealMeasure) -> Result<RealMeasure> {
        if self.tail.is_some() || other.tail.is_some() {
            return Err(CoreError::TailUnresolved);
        }
        let mut out = RealMeasure::zero();
        for &(s, w) in &self.atoms {
            for &(t, v) in &other.atoms {
                out.atoms.push((s + t, w * v));
            }
        }
        let mut densities: Vec<DensityGrid> = Vec::new();
        let mut resampled = self.resampled || other.resampled;
        for (atoms, dens) in [(&self.atoms, &other.density), (&other.atoms, &self.density)] {
            if let Some(d) = dens {
                for &(s, w) in atoms.iter() {
                    // translate by s; off-grid shifts are realized by
                    // resampling through linear interpolation
                    let offset = s / d.step;
                    let exact = (offset - offset.round()).abs() < 1e-9;
                    if !exact {
                        resampled = true;
                    }
                    let values = d.values.iter().map(|&v| w * v).collect::<Vec<_>>();
                    densities.push(DensityGrid {
                        left: d.left + s,
                        step: d.step,
                        values,
                    });
                }
            }
        }
        if let (Some(a), Some(b)) = (&self.density, &other.density) {
            let (a, b, flag) = common_step(a, b);
            resampled |= flag;
            let n = a.values.len() + b.values.len() - 1;
            let mut values = if a.values.len().min(b.values.len()) > 64 {
                fft_linear_convolution(&a.values, &b.values)
            } else {
                let mut out = vec![C64::new(0.0, 0.0); n];
                for (i, &u) in a.values.iter().enumerate() {
                    for (j, &v) in b.values.iter().enumerate() {
                        out[i + j] += u * v;
                    }
                }
                out
            };
            values.truncate(n);
            for v in values.iter_mut() {
                *v *= a.step;
            }
            densities.push(DensityGrid {
                left: a.left + b.left,
                step: a.step,
                values,
            });
        }
        out.density = merge_densities(densities, &mut resampled);
        out.rule = self.rule;
        out.resampled = resampled;
        Ok(out)
    }

    /// (C mu)(t) = int cos(st) mu(ds); always an even function bounded by
    /// the total variation.
    pub fn cosine_transform(&self) -> FunctionOnLine {
        let m = self.clone();
        let tv = self.tv_norm();
        FunctionOnLine::new(
            format!("cosine_transform({:x})", self.structural_hash()),
            true,
            Decay::Bounded,
            move |t| m.cosine_transform_at(t),
        )
        .with_bound(tv)
    }

    pub fn cosine_transform_at(&self, t: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &(s, w) in &self.atoms {
            acc += w * (s * t).cos();
        }
        if let Some(d) = &self.density {
            for (k, v) in d.values.iter().enumerate() {
                acc += d.quad_weight(k, self.rule) * v * (d.position(k) * t).cos();
            }
        }
        if let Some(tail) = &self.tail {
            acc += tail.cosine_transform(t).unwrap_or_else(|_| C64::new(0.0, 0.0));
        }
        acc
    }

    /// Discrete integration nodes (location, complex weight) covering atoms
    /// and density, but not the analytic tail.
    pub fn quad_nodes(&self) -> Vec<(f64, C64)> {
        let mut nodes: Vec<(f64, C64)> = self.atoms.clone();
        if let Some(d) = &self.density {
            nodes.reserve(d.values.len());
            for (k, v) in d.values.iter().enumerate() {
                nodes.push((d.position(k), d.quad_weight(k, self.rule) * v));
            }
        }
        nodes
    }

    /// Stable identity of the measure's contents, for calculus caching.
    pub fn structural_hash(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for (s, w) in &self.atoms {
            s.to_bits().hash(&mut h);
            w.re.to_bits().hash(&mut h);
            w.im.to_bits().hash(&mut h);
        }
        if let Some(d) = &self.density {
            d.left.to_bits().hash(&mut h);
            d.step.to_bits().hash(&mut h);
            for v in &d.values {
                v.re.to_bits().hash(&mut h);
                v.im.to_bits().hash(&mut h);
            }
        }
        if let Some(t) = &self.tail {
            t.exponent.to_bits().hash(&mut h);
            t.from.to_bits().hash(&mut h);
            t.coefficient_re.to_bits().hash(&mut h);
            t.coefficient_im.to_bits().hash(&mut h);
            t.symmetric.hash(&mut h);
        }
        h.finish()
    }
}

pub(crate) fn fft_linear_convolution(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = (a.len() + b.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut fa: Vec<rustfft::num_complex::Complex<f64>> = a
        .iter()
        .map(|z| rustfft::num_complex::Complex::new(z.re, z.im))
        .chain(std::iter::repeat(rustfft::num_complex::Complex::new(0.0, 0.0)))
        .take(n)
        .collect();
    let mut fb: Vec<rustfft::num_complex::Complex<f64>> = b
        .iter()
        .map(|z| rustfft::num_complex::Complex::new(z.re, z.im))
        .chain(std::iter::repeat(rustfft::num_complex::Complex::new(0.0, 0.0)))
        .take(n)
        .collect();
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(fb.iter()) {
        *x *= *y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / n as f64;
    fa.iter().map(|z| C64::new(z.re * scale, z.im * scale)).collect()
}

fn common_step<'a>(a: &'a DensityGrid, b: &'a DensityGrid) -> (DensityGrid, DensityGrid, bool) {
    if (a.step - b.step).abs() < 1e-12 * a.step {
        return (a.clone(), b.clone(), false);
    }
    let step = a.step.min(b.step);
    let resample = |d: &DensityGrid| {
        let n = ((d.right() - d.left) / step).round() as usize;
        DensityGrid {
            left: d.left,
            step,
            values: (0..=n).map(|k| d.sample(d.left + k as f64 * step)).collect(),
        }
    };
    (resample(a), resample(b), true)
}

fn merge_densities(mut ds: Vec<DensityGrid>, resampled: &mut bool) -> Option<DensityGrid> {
    if ds.is_empty() {
        return None;
    }
    if ds.len() == 1 {
        return ds.pop();
    }
    let step = ds.iter().map(|d| d.step).fold(f64::INFINITY, f64::min);
    let left = ds.iter().map(|d| d.left).fold(f64::INFINITY, f64::min);
    let right = ds.iter().map(|d| d.right()).fold(f64::NEG_INFINITY, f64::max);
    let n = ((right - left) / step).round() as usize;
    let mut values = vec![C64::new(0.0, 0.0); n + 1];
    for d in &ds {
        if (d.step - step).abs() > 1e-12 * step {
            *resampled = true;
        }
        for (k, v) in values.iter_mut().enumerate() {
            *v += d.sample(left + k as f64 * step);
        }
    }
    Some(DensityGrid { left, step, values })
}

/// Polynomial growth/decay hint used to pick regularizers and truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decay {
    Integrable,
    Bounded,
    Polynomial(i32),
}

impl Decay {
    /// Growth degree d with |f(t)| = O(|t|^d).
    pub fn degree(&self) -> i32 {
        match self {
            Decay::Integrable => -2,
            Decay::Bounded => 0,
            Decay::Polynomial(d) => *d,
        }
    }
}

/// A scalar function on the line with the metadata the calculus needs.
#[derive(Clone)]
pub struct FunctionOnLine {
    pub ident: String,
    pub even: bool,
    pub decay: Decay,
    eval: Arc<dyn Fn(f64) -> C64 + Send + Sync>,
    deriv: Option<Arc<dyn Fn(f64) -> C64 + Send + Sync>>,
    pub sup_bound: Option<f64>,
}

impl std::fmt::Debug for FunctionOnLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionOnLine")
            .field("ident", &self.ident)
            .field("even", &self.even)
            .field("decay", &self.decay)
            .finish()
    }
}

impl FunctionOnLine {
    pub fn new<F>(ident: impl Into<String>, even: bool, decay: Decay, eval: F) -> Self
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        FunctionOnLine {
            ident: ident.into(),
            even,
            decay,
            eval: Arc::new(eval),
            deriv: None,
            sup_bound: None,
        }
    }

    pub fn with_deriv<F>(mut self, deriv: F) -> Self
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        self.deriv = Some(Arc::new(deriv));
        self
    }

    pub fn with_bound(mut self, b: f64) -> Self {
        self.sup_bound = Some(b);
        self
    }

    pub fn eval(&self, t: f64) -> C64 {
        (self.eval)(t)
    }

    /// Derivative: stored closure when given, else central differences.
    pub fn deriv(&self, t: f64) -> C64 {
        match &self.deriv {
            Some(d) => d(t),
            None => {
                let h = 1e-5 * (1.0 + t.abs());
                (self.eval(t + h) - self.eval(t - h)) / (2.0 * h)
            }
        }
    }

    /// One-sided derivative at 0+ by Richardson extrapolation; used for the
    /// kink subtraction in the Fourier inversion.
    pub fn deriv_zero_plus(&self) -> C64 {
        // 4-level Richardson on the forward difference at h, h/2, ...
        let h0 = 1e-2;
        let levels = 5usize;
        let mut vals: Vec<C64> = (0..levels)
            .map(|k| {
                let h = h0 / 2f64.powi(k as i32);
                (self.eval(h) - self.eval(0.0)) / h
            })
            .collect();
        // forward differences have O(h) error: Richardson with ratio 2
        for order in 1..levels {
            let f = 2f64.powi(order as i32);
            for k in 0..(levels - order) {
                vals[k] = (f * vals[k + 1] - vals[k]) / (f - 1.0);
            }
        }
        vals[0]
    }

    /// Pointwise product, combining decay degrees.
    pub fn product(&self, other: &FunctionOnLine) -> FunctionOnLine {
        let a = self.eval.clone();
        let b = other.eval.clone();
        let d = self.decay.degree() + other.decay.degree();
        FunctionOnLine::new(
            format!("({})*({})", self.ident, other.ident),
            self.even && other.even,
            Decay::Polynomial(d),
            move |t| a(t) * b(t),
        )
    }

    /// The regularizer family e_n(t) = (1 + t^2)^{-n}.
    pub fn regularizer(n: u32) -> FunctionOnLine {
        FunctionOnLine::new(
            format!("(1+t^2)^-{n}"),
            true,
            Decay::Polynomial(-2 * (n as i32)),
            move |t| C64::new((1.0 + t * t).powi(-(n as i32)), 0.0),
        )
        .with_deriv(move |t| {
            C64::new(
                -2.0 * n as f64 * t * (1.0 + t * t).powi(-(n as i32) - 1),
                0.0,
            )
        })
    }

    pub fn abs_t() -> FunctionOnLine {
        FunctionOnLine::new("|t|", true, Decay::Polynomial(1), |t| C64::new(t.abs(), 0.0))
            .with_deriv(|t| C64::new(t.signum(), 0.0))
    }

    /// lambda / (lambda^2 + t^2), the cosine transform of (1/2)e^{-lambda|s|}.
    pub fn poisson_symbol(lambda: C64) -> FunctionOnLine {
        FunctionOnLine::new(
            format!("lam/(lam^2+t^2)@{lambda}"),
            true,
            Decay::Polynomial(-2),
            move |t| lambda / (lambda * lambda + t * t),
        )
        .with_deriv(move |t| {
            let d = lambda * lambda + t * t;
            -lambda * 2.0 * t / (d * d)
        })
    }

    /// e^{-lambda |t|}, Re lambda > 0.
    pub fn exp_abs(lambda: C64) -> FunctionOnLine {
        FunctionOnLine::new(
            format!("exp(-lam|t|)@{lambda}"),
            true,
            Decay::Bounded,
            move |t| (-lambda * t.abs()).exp(),
        )
    }

    /// 1/(lambda - |t|), lambda off [0, infinity).
    pub fn inv_shifted_abs(lambda: C64) -> FunctionOnLine {
        FunctionOnLine::new(
            format!("1/(lam-|t|)@{lambda}"),
            true,
            Decay::Polynomial(-1),
            move |t| C64::new(1.0, 0.0) / (lambda - t.abs()),
        )
    }

    pub fn gaussian() -> FunctionOnLine {
        FunctionOnLine::new("exp(-t^2)", true, Decay::Integrable, |t| {
            C64::new((-t * t).exp(), 0.0)
        })
        .with_deriv(|t| C64::new(-2.0 * t * (-t * t).exp(), 0.0))
    }
}

/// Tuning for the Fourier inversion.
#[derive(Debug, Clone, Copy)]
pub struct BernsteinOptions {
    /// Half-width of the sampling window in t.
    pub omega: f64,
    /// Number of FFT points (power of two, divisible by 4).
    pub n_points: usize,
    /// Density kept on the grid out to this radius; beyond it the known
    /// 1/s^2 asymptote is carried as an analytic tail.
    pub keep_radius: f64,
}

impl Default for BernsteinOptions {
    fn default() -> Self {
        // dt = 2 omega / n_points fixes the Nyquist radius pi/dt = 402. The
        // kept band must reach far out: the inverse transform of a function
        // with a residual third-derivative jump decays only like s^-4, and
        // the part beyond keep_radius is dropped, an error that downstream
        // regularizer powers (1+A)^n amplify.
        BernsteinOptions {
            omega: 8192.0,
            n_points: 1 << 21,
            keep_radius: 350.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BernsteinResult {
    pub measure: RealMeasure,
    pub l1_norm: f64,
    pub h1_norm: f64,
    /// Estimated truncation/aliasing error of the inversion.
    pub aliasing_bound: f64,
}

/// Invert f in H1(R) to a density g with F(g) = f (Bernstein's lemma made
/// quantitative).
///
/// A kink of f at the origin makes g decay like 1/s^2, which plain window
/// truncation cannot afford. The jump kappa = f'(0+) - f'(0-) is therefore
/// split off through e^{-|t|}, whose inverse transform 1/(pi(1+s^2)) is
/// known in closed form; the smooth remainder is inverted by FFT and the
/// subtracted part is restored on the grid plus an exact power tail.
pub fn bernstein_inverse(f: &FunctionOnLine, opts: BernsteinOptions) -> Result<BernsteinResult> {
    let n = opts.n_points;
    assert!(n.is_power_of_two() && n % 4 == 0);
    let omega = opts.omega;
    let dt = 2.0 * omega / n as f64;

    // H1 tail test: |f| and |f'| must decay strictly faster than |t|^{-1/2}
    for probe in [&|t: f64| f.eval(t).norm() as f64, &|t: f64| f.deriv(t).norm()]
        as [&dyn Fn(f64) -> f64; 2]
    {
        let v_half = probe(0.5 * omega).max(1e-300);
        let v_full = probe(omega).max(1e-300);
        let slope = (v_full / v_half).ln() / 2f64.ln();
        if v_full > 1e-7 && slope > -0.6 {
            return Err(CoreError::NotH1 {
                what: format!(
                    "tail decay exponent {:.2} at Omega = {} (|f| = {:.3e})",
                    slope, omega, v_full
                ),
            });
        }
    }

    let kappa = if f.even {
        2.0 * f.deriv_zero_plus()
    } else {
        f.deriv_zero_plus() - {
            // odd-side derivative via reflection of the Richardson stencil
            let h0 = 1e-2;
            let levels = 5usize;
            let mut vals: Vec<C64> = (0..levels)
                .map(|k| {
                    let h = h0 / 2f64.powi(k as i32);
                    (f.eval(0.0) - f.eval(-h)) / h
                })
                .collect();
            for order in 1..levels {
                let fac = 2f64.powi(order as i32);
                for k in 0..(levels - order) {
                    vals[k] = (fac * vals[k + 1] - vals[k]) / (fac - 1.0);
                }
            }
            vals[0]
        }
    };

    // Window truncation of a 1/t^2 symbol costs 1/(pi Omega), far above
    // target accuracy, so the quadratic asymptote c2/t^2 is subtracted as
    // c2/(1+t^2) and restored as (c2/2) e^{-|s|} in closed form.
    let c2 = {
        let v = |t: f64| t * t * f.eval(t);
        let v_half = v(0.5 * omega);
        let v_full = v(omega);
        if v_full.norm() < 1.3 * v_half.norm().max(1e-300) {
            (4.0 * v_full - v_half) / 3.0
        } else {
            C64::new(0.0, 0.0)
        }
    };

    // smooth remainder f_s = f + (kappa/2) e^{-|t|} - c2/(1+t^2)
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(n);
    let mut buf: Vec<rustfft::num_complex::Complex<f64>> = (0..n)
        .map(|k| {
            let t = (k as f64 - n as f64 / 2.0) * dt;
            let v = f.eval(t) + 0.5 * kappa * (-t.abs()).exp() - c2 / (1.0 + t * t);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            rustfft::num_complex::Complex::new(sign * v.re, sign * v.im)
        })
        .collect();
    fft.process(&mut buf);

    let ds = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let s_max = std::f64::consts::PI / dt;
    let keep = opts.keep_radius.min(0.9 * s_max);
    // grid kept symmetric about s = 0 with an even number of intervals per
    // side, so downstream quadrature can subsample every other node
    let mut half = ((keep + s_max) / ds).floor() as usize - n / 2;
    half -= half % 2;
    let (k_lo, k_hi) = (n / 2 - half, n / 2 + half);
    let scale = dt / (2.0 * std::f64::consts::PI);
    let mut values = Vec::with_capacity(k_hi - k_lo + 1);
    for k in k_lo..=k_hi {
        let s = (k as f64 - n as f64 / 2.0) * ds;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let g_smooth = C64::new(buf[k].re, buf[k].im) * sign * scale;
        // restore the subtracted parts on the grid
        let poisson = 0.5 * kappa / (std::f64::consts::PI * (1.0 + s * s));
        let quad_asym = 0.5 * c2 * (-s.abs()).exp();
        values.push(g_smooth - poisson + quad_asym);
    }
    let left = (k_lo as f64 - n as f64 / 2.0) * ds;
    let tail = if kappa.norm() > 1e-13 {
        Some(TailDescriptor {
            exponent: -2.0,
            from: keep,
            coefficient_re: -(0.5 * kappa / std::f64::consts::PI).re,
            coefficient_im: -(0.5 * kappa / std::f64::consts::PI).im,
            symmetric: true,
            kind: TailKind::InverseQuadratic,
        })
    } else {
        None
    };
    let measure = RealMeasure {
        atoms: Vec::new(),
        density: Some(DensityGrid {
            left,
            step: ds,
            values,
        }),
        tail,
        rule: QuadratureRule::Trapezoid,
        resampled: false,
    };

    // window truncation error estimate (the kink tail itself is exact)
    let trunc = (f.eval(omega) - c2 / (1.0 + omega * omega)).norm() * omega / 2.0;
    let l1 = measure.tv_norm();

    // H1 norm from the samples of f and f'
    let mut l2f = 0.0;
    let mut l2df = 0.0;
    let coarse = (n / 4096).max(1);
    for k in (0..n).step_by(coarse) {
        let t = (k as f64 - n as f64 / 2.0) * dt;
        l2f += f.eval(t).norm_sqr() * dt * coarse as f64;
        l2df += f.deriv(t).norm_sqr() * dt * coarse as f64;
    }
    Ok(BernsteinResult {
        measure,
        l1_norm: l1,
        h1_norm: (l2f + l2df).sqrt(),
        aliasing_bound: trunc,
    })
}

// ---------------------------------------------------------------------------
// JSON serialization of measures
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    atoms: Vec<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<DensityJson>,
    rule: QuadratureRule,
}

#[derive(Serialize, Deserialize)]
struct DensityJson {
    left: f64,
    step: f64,
    values_re: Vec<f64>,
    values_im: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail: Option<TailDescriptor>,
}

impl RealMeasure {
    pub fn to_json(&self) -> serde_json::Value {
        let density = self.density.as_ref().map(|d| DensityJson {
            left: d.left,
            step: d.step,
            values_re: d.values.iter().map(|v| v.re).collect(),
            values_im: d.values.iter().map(|v| v.im).collect(),
            tail: self.tail,
        });
        serde_json::to_value(MeasureJson {
            atoms: self.atoms.iter().map(|&(s, w)| [s, w.re, w.im]).collect(),
            density,
            rule: self.rule,
        })
        .expect("measure serialization")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<RealMeasure> {
        let mj: MeasureJson = serde_json::from_value(v.clone())
            .map_err(|e| CoreError::Invalid(format!("measure json: {e}")))?;
        let (density, tail) = match mj.density {
            Some(d) => {
                if d.values_re.len() != d.values_im.len() {
                    return Err(CoreError::Invalid("density re/im length mismatch".into()));
                }
                let values = d
                    .values_re
                    .iter()
                    .zip(d.values_im.iter())
                    .map(|(&re, &im)| C64::new(re, im))
                    .collect();
                (
                    Some(DensityGrid {
                        left: d.left,
                        step: d.step,
                        values,
                    }),
                    d.tail,
                )
            }
            None => (None, None),
        };
        Ok(RealMeasure {
            atoms: mj.atoms.iter().map(|a| (a[0], C64::new(a[1], a[2]))).collect(),
            density,
            tail,
            rule: mj.rule,
            resampled: false,
        })
    }
}
