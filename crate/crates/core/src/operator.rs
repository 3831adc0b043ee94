//! Matrix generators, cosine families, resolvents and the spectral oracle.

use crate::error::{CoreError, Result};
use crate::quad;
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Inverse, Solve, SVD};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Matrix = Array2<C64>;

/// Square complex matrix acting on X = C^n.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub entries: Matrix,
}

impl DenseOperator {
    pub fn new(entries: Matrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(CoreError::Invalid(format!(
                "operator must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CoreError::Invalid("operator entries must be finite".into()));
        }
        Ok(DenseOperator { entries })
    }

    pub fn from_real(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut m = Matrix::zeros((n, n));
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n);
            for (j, v) in r.iter().enumerate() {
                m[[i, j]] = C64::new(*v, 0.0);
            }
        }
        DenseOperator::new(m)
    }

    pub fn scalar(a: C64) -> Self {
        DenseOperator {
            entries: Matrix::from_elem((1, 1), a),
        }
    }

    pub fn identity(dim: usize) -> Self {
        DenseOperator {
            entries: Matrix::eye(dim),
        }
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Matrix::zeros((n, n));
        for (i, d) in diag.iter().enumerate() {
            m[[i, i]] = *d;
        }
        DenseOperator { entries: m }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Operator (spectral) norm: largest singular value.
    pub fn opnorm(&self) -> f64 {
        opnorm(&self.entries)
    }

    pub fn matmul(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator {
            entries: self.entries.dot(&other.entries),
        }
    }

    pub fn add(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator {
            entries: &self.entries + &other.entries,
        }
    }

    pub fn sub(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator {
            entries: &self.entries - &other.entries,
        }
    }

    pub fn scale(&self, c: C64) -> DenseOperator {
        DenseOperator {
            entries: self.entries.mapv(|z| z * c),
        }
    }

    pub fn powi(&self, n: u32) -> DenseOperator {
        let mut acc = DenseOperator::identity(self.dim());
        for _ in 0..n {
            acc = acc.matmul(self);
        }
        acc
    }

    pub fn inverse(&self) -> Result<DenseOperator> {
        Ok(DenseOperator {
            entries: self.entries.inv()?,
        })
    }

    pub fn apply(&self, x: &Array1<C64>) -> Array1<C64> {
        self.entries.dot(x)
    }

    pub fn distance(&self, other: &DenseOperator) -> f64 {
        opnorm(&(&self.entries - &other.entries))
    }
}

pub fn opnorm(m: &Matrix) -> f64 {
    match m.svd(false, false) {
        Ok((_, s, _)) => s.iter().cloned().fold(0.0, f64::max),
        Err(_) => f64::NAN,
    }
}

/// Eigendecomposition A = V diag(lambda) V^{-1}, with its conditioning.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<C64>,
    pub eigvec_matrix: Matrix,
    pub eigvec_inverse: Matrix,
    pub condition_number: f64,
}

impl SpectralData {
    pub fn compute(a: &DenseOperator) -> Result<Self> {
        let (vals, vecs) = a.entries.eig()?;
        let inv = vecs.inv().map_err(|_| CoreError::NonDiagonalizable {
            condition_number: f64::INFINITY,
        })?;
        let cond = opnorm(&vecs) * opnorm(&inv);
        let data = SpectralData {
            eigenvalues: vals.to_vec(),
            eigvec_matrix: vecs,
            eigvec_inverse: inv,
            condition_number: cond,
        };
        // reconstruction sanity: V diag V^{-1} = A within 1e-10 * cond
        let recon = data.apply_scalar(|lam| lam);
        let scale = a.opnorm().max(1.0);
        if recon.distance(a) > 1e-10 * cond * scale {
            return Err(CoreError::NonDiagonalizable {
                condition_number: cond,
            });
        }
        Ok(data)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// V diag(f(lambda_i)) V^{-1}.
    pub fn apply_scalar<F: Fn(C64) -> C64>(&self, f: F) -> DenseOperator {
        let diag: Vec<C64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.assemble(&diag)
    }

    pub fn assemble(&self, diag: &[C64]) -> DenseOperator {
        let n = self.dim();
        let mut d = Matrix::zeros((n, n));
        for i in 0..n {
            d[[i, i]] = diag[i];
        }
        DenseOperator {
            entries: self.eigvec_matrix.dot(&d).dot(&self.eigvec_inverse),
        }
    }

    /// Principal square roots of the (nonnegative real, up to tolerance)
    /// eigenvalues; the frequencies of the cosine family.
    pub fn sqrt_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .map(|l| l.re.max(0.0).sqrt())
            .collect()
    }

    /// Oracle matrix square root via the principal branch.
    pub fn sqrt_oracle(&self) -> DenseOperator {
        let diag: Vec<C64> = self
            .sqrt_eigenvalues()
            .iter()
            .map(|&w| C64::new(w, 0.0))
            .collect();
        self.assemble(&diag)
    }
}

/// Brute-force oracle: f applied to the eigenvalues of a diagonalizable A.
/// Error amplification is bounded by the eigenvector condition number.
pub fn spectral_apply<F: Fn(C64) -> C64>(f: F, spectral: &SpectralData) -> DenseOperator {
    spectral.apply_scalar(f)
}

const COND_LIMIT: f64 = 1e8;
const SPECTRUM_TOL: f64 = 1e-8;

enum CosPath {
    /// cos(t sqrt(A)) evaluated through the eigendecomposition.
    Spectral { frequencies: Vec<f64> },
    /// Even Taylor series with double-angle scaling; reduced accuracy.
    Series,
}

/// Evaluator t -> Cos(t) for the cosine family generated by -A, with its
/// grid-estimated uniform bound M.
pub struct CosineProvider {
    pub generator: DenseOperator,
    pub spectral: Option<SpectralData>,
    path: CosPath,
    pub bound_m: f64,
    pub sample_grid_step: f64,
    pub sample_grid_max: f64,
    /// Set when the series fallback was taken.
    pub reduced_accuracy: bool,
}

impl CosineProvider {
    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    pub fn condition_number(&self) -> f64 {
        self.spectral
            .as_ref()
            .map(|s| s.condition_number)
            .unwrap_or(f64::INFINITY)
    }

    /// Cos(t); Cos(0) is the identity exactly, and evenness is structural.
    pub fn eval(&self, t: f64) -> DenseOperator {
        if t == 0.0 {
            return DenseOperator::identity(self.dim());
        }
        match &self.path {
            CosPath::Spectral { frequencies } => {
                let spectral = self.spectral.as_ref().expect("spectral path");
                let diag: Vec<C64> = frequencies
                    .iter()
                    .map(|&w| C64::new((w * t).cos(), 0.0))
                    .collect();
                spectral.assemble(&diag)
            }
            CosPath::Series => cos_series(&self.generator, t),
        }
    }

    pub fn apply(&self, t: f64, x: &Array1<C64>) -> Array1<C64> {
        match &self.path {
            CosPath::Spectral { frequencies } => {
                let spectral = self.spectral.as_ref().expect("spectral path");
                let mut y = spectral.eigvec_inverse.dot(x);
                for (yi, &w) in y.iter_mut().zip(frequencies.iter()) {
                    *yi *= (w * t).cos();
                }
                spectral.eigvec_matrix.dot(&y)
            }
            CosPath::Series => self.eval(t).apply(x),
        }
    }

    /// sum_j w_j Cos(s_j). On the spectral path the accumulation happens in
    /// the eigenbasis, so the cost per node is O(dim).
    pub fn integrate<I: IntoIterator<Item = (f64, C64)>>(&self, nodes: I) -> DenseOperator {
        match &self.path {
            CosPath::Spectral { frequencies } => {
                let spectral = self.spectral.as_ref().expect("spectral path");
                let mut acc = vec![C64::new(0.0, 0.0); frequencies.len()];
                for (s, w) in nodes {
                    for (a, &freq) in acc.iter_mut().zip(frequencies.iter()) {
                        *a += w * (freq * s).cos();
                    }
                }
                spectral.assemble(&acc)
            }
            CosPath::Series => {
                let n = self.dim();
                let mut acc = Matrix::zeros((n, n));
                for (s, w) in nodes {
                    acc = acc + self.eval(s).entries.mapv(|z| z * w);
                }
                DenseOperator { entries: acc }
            }
        }
    }

    /// Same accumulation applied to a single vector.
    pub fn integrate_apply<I: IntoIterator<Item = (f64, C64)>>(
        &self,
        nodes: I,
        x: &Array1<C64>,
    ) -> Array1<C64> {
        match &self.path {
            CosPath::Spectral { frequencies } => {
                let spectral = self.spectral.as_ref().expect("spectral path");
                let xe = spectral.eigvec_inverse.dot(x);
                let mut acc = Array1::<C64>::zeros(x.len());
                for (s, w) in nodes {
                    for ((a, &freq), xv) in acc.iter_mut().zip(frequencies.iter()).zip(xe.iter()) {
                        *a += w * (freq * s).cos() * xv;
                    }
                }
                spectral.eigvec_matrix.dot(&acc)
            }
            CosPath::Series => {
                let mut acc = Array1::<C64>::zeros(x.len());
                for (s, w) in nodes {
                    acc = acc + self.apply(s, x).mapv(|z| z * w);
                }
                acc
            }
        }
    }

    /// Spectral data, but only when the provider actually evaluates through
    /// it (None on the series fallback, where eigenvectors are untrusted).
    pub fn spectral_path(&self) -> Option<&SpectralData> {
        match &self.path {
            CosPath::Spectral { .. } => self.spectral.as_ref(),
            CosPath::Series => None,
        }
    }

    /// Largest frequency sqrt(lambda_max); controls oscillation-aware panel
    /// sizes downstream.
    pub fn max_frequency(&self) -> f64 {
        match &self.path {
            CosPath::Spectral { frequencies } => frequencies.iter().cloned().fold(0.0, f64::max),
            CosPath::Series => self.generator.opnorm().sqrt(),
        }
    }
}

fn cos_series(a: &DenseOperator, t: f64) -> DenseOperator {
    // Cos(2t) = 2 Cos(t)^2 - I lets the series run at a scaled argument.
    let norm = a.opnorm();
    let mut k = 0u32;
    let mut tt = t;
    while tt * tt * norm > 1.0 {
        tt *= 0.5;
        k += 1;
    }
    let b = a.scale(C64::new(tt * tt, 0.0));
    let n = a.dim();
    let mut term = DenseOperator::identity(n);
    let mut sum = DenseOperator::identity(n);
    for j in 1..40 {
        let jf = j as f64;
        term = term
            .matmul(&b)
            .scale(C64::new(-1.0 / ((2.0 * jf - 1.0) * (2.0 * jf)), 0.0));
        sum = sum.add(&term);
        if term.opnorm() < 1e-16 {
            break;
        }
    }
    let ident = DenseOperator::identity(n);
    for _ in 0..k {
        sum = sum.matmul(&sum).scale(C64::new(2.0, 0.0)).sub(&ident);
    }
    sum
}

/// Build the cosine family for a generator with spectrum in [0, inf).
pub fn make_cosine(a: DenseOperator) -> Result<CosineProvider> {
    let spectral = SpectralData::compute(&a);
    let (spectral, path, reduced) = match spectral {
        Ok(s) => {
            let offenders: Vec<C64> = s
                .eigenvalues
                .iter()
                .cloned()
                .filter(|l| l.re < -SPECTRUM_TOL || l.im.abs() > SPECTRUM_TOL)
                .collect();
            if !offenders.is_empty() {
                return Err(CoreError::NegativeSpectrum { offenders });
            }
            if s.condition_number > COND_LIMIT {
                (Some(s), CosPath::Series, true)
            } else {
                let frequencies = s.sqrt_eigenvalues();
                (Some(s), CosPath::Spectral { frequencies }, false)
            }
        }
        Err(_) => (None, CosPath::Series, true),
    };
    let mut provider = CosineProvider {
        generator: a,
        spectral,
        path,
        bound_m: 1.0,
        sample_grid_step: 0.05,
        sample_grid_max: 50.0,
        reduced_accuracy: reduced,
    };
    provider.bound_m = estimate_bound_m(&provider);
    Ok(provider)
}

/// sup_t ||Cos(t)|| over [0, 50] (evenness halves the scan): coarse grid then
/// golden-section refinement around local maxima. Normal generators with
/// nonnegative spectrum are unitary-diagonalizable, so M = 1 there.
pub fn estimate_bound_m(p: &CosineProvider) -> f64 {
    if is_normal(&p.generator) {
        return 1.0;
    }
    let step = p.sample_grid_step;
    let tmax = p.sample_grid_max;
    let n = (tmax / step).round() as usize;
    let norms: Vec<f64> = (0..=n).map(|k| p.eval(k as f64 * step).opnorm()).collect();
    let mut best = 1.0f64;
    for k in 1..n {
        if norms[k] >= norms[k - 1] && norms[k] >= norms[k + 1] {
            let refined = golden_max(
                |t| p.eval(t).opnorm(),
                (k - 1) as f64 * step,
                (k + 1) as f64 * step,
                1e-4,
            );
            best = best.max(refined);
        }
    }
    best.max(norms.iter().cloned().fold(1.0, f64::max))
}

fn is_normal(a: &DenseOperator) -> bool {
    let ah = conj_transpose(&a.entries);
    let comm = a.entries.dot(&ah) - ah.dot(&a.entries);
    let scale: f64 = a.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().max(1.0);
    comm.iter().map(|z| z.norm_sqr()).sum::<f64>() < 1e-24 * scale * scale
}

pub fn conj_transpose(m: &Matrix) -> Matrix {
    m.t().mapv(|z| z.conj())
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let phi = 0.618_033_988_749_894_9;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

/// ||Cos(t+s) + Cos(t-s) - 2 Cos(t) Cos(s)||.
pub fn dalembert_residual(p: &CosineProvider, t: f64, s: f64) -> f64 {
    let lhs = p.eval(t + s).add(&p.eval(t - s));
    let rhs = p.eval(t).matmul(&p.eval(s)).scale(C64::new(2.0, 0.0));
    lhs.distance(&rhs)
}

/// (lambda - A)^{-1}, rejecting points within 1e-12 of the spectrum.
pub fn resolvent(a: &DenseOperator, lambda: C64) -> Result<DenseOperator> {
    if let Ok(s) = SpectralData::compute(a) {
        let dist = s
            .eigenvalues
            .iter()
            .map(|&l| (l - lambda).norm())
            .fold(f64::INFINITY, f64::min);
        if dist <= 1e-12 {
            return Err(CoreError::SpectrumHit {
                lambda,
                distance: dist,
            });
        }
    }
    let n = a.dim();
    let lhs = DenseOperator::identity(n).scale(lambda).sub(a);
    let mut cols = Matrix::zeros((n, n));
    for j in 0..n {
        let mut e = Array1::<C64>::zeros(n);
        e[j] = C64::new(1.0, 0.0);
        let x = lhs.entries.solve(&e)?;
        for i in 0..n {
            cols[[i, j]] = x[i];
        }
    }
    DenseOperator::new(cols)
}

const LAPLACE_T_MAX: f64 = 400.0;

/// int_0^infty e^{-lambda t} Cos(t) dt, which recovers lambda (lambda^2+A)^{-1}.
///
/// Truncation T is chosen so M e^{-Re(lambda) T}/Re(lambda) < 1e-10; composite
/// Gauss panels resolve both the oscillation and the exponential scale.
pub fn laplace_recover(p: &CosineProvider, lambda: C64) -> Result<DenseOperator> {
    if lambda.re <= 0.0 {
        return Err(CoreError::Invalid("laplace_recover needs Re(lambda) > 0".into()));
    }
    if lambda.re * LAPLACE_T_MAX < 30.0 {
        return Err(CoreError::TailNotConverged {
            product: lambda.re * LAPLACE_T_MAX,
        });
    }
    let t_end = ((p.bound_m / (1e-10 * lambda.re)).ln() / lambda.re).min(LAPLACE_T_MAX);
    let omega = p.max_frequency().max(lambda.im.abs());
    let panel = (std::f64::consts::PI / (2.0 * omega.max(1e-3))).min(0.5 * t_end).min(2.0);
    let nodes: Vec<(f64, C64)> = quad::composite_nodes(quad::gl16(), 0.0, t_end, panel)
        .into_iter()
        .map(|(t, w)| (t, (-lambda * t).exp() * w))
        .collect();
    Ok(p.integrate(nodes))
}

/// max over samples of ||R(lambda^2, A)|| |lambda| |Im lambda| / M - 1,
/// clamped below at zero; 0 means the sectoriality bound holds everywhere.
pub fn sectoriality_residual(a: &DenseOperator, m_bound: f64, samples: &[C64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &lam in samples {
        assert!(lam.im != 0.0, "samples must avoid the real axis");
        let r = resolvent(a, lam * lam)?;
        let val = r.opnorm() * lam.norm() * lam.im.abs() / m_bound - 1.0;
        worst = worst.max(val);
    }
    Ok(worst.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_family(a: f64) -> CosineProvider {
        make_cosine(DenseOperator::scalar(C64::new(a, 0.0))).unwrap()
    }

    fn similarity_2x2() -> DenseOperator {
        // S diag(1,4) S^{-1} with S = [[1,1],[0,1]]
        DenseOperator::from_real(&[&[1.0, 3.0], &[0.0, 4.0]]).unwrap()
    }

    #[test]
    fn cosine_of_zero_generator_is_constant_one() {
        let p = scalar_family(0.0);
        for t in [-3.0, 0.0, 0.5, 17.0] {
            assert_abs_diff_eq!(p.eval(t).entries[[0, 0]].re, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn scalar_four_gives_cos_two_t() {
        let p = scalar_family(4.0);
        for t in [0.3, 1.0, -2.7] {
            assert_abs_diff_eq!(p.eval(t).entries[[0, 0]].re, (2.0 * t).cos(), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(p.bound_m, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_family_matches_spectral_oracle() {
        let a = DenseOperator::diagonal(&[C64::new(1.0, 0.0), C64::new(4.0, 0.0)]);
        let p = make_cosine(a).unwrap();
        let t = 0.83;
        let c = p.eval(t);
        assert_abs_diff_eq!(c.entries[[0, 0]].re, t.cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(c.entries[[1, 1]].re, (2.0 * t).cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(c.entries[[0, 1]].norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cos_zero_is_identity_exactly() {
        let p = make_cosine(similarity_2x2()).unwrap();
        assert_eq!(p.eval(0.0).entries, Matrix::eye(2));
    }

    #[test]
    fn evenness_holds_on_grid() {
        let p = make_cosine(similarity_2x2()).unwrap();
        for t in [0.1, 1.3, 7.7, 31.0] {
            assert!(p.eval(t).distance(&p.eval(-t)) < 1e-12);
        }
    }

    #[test]
    fn dalembert_trivial_and_scalar() {
        let p = scalar_family(4.0);
        assert_abs_diff_eq!(dalembert_residual(&p, 0.0, 1.7), 0.0, epsilon = 1e-14);
        assert!(dalembert_residual(&p, 0.3, 0.7) < 1e-12);
    }

    #[test]
    fn dalembert_on_nonnormal_family() {
        let p = make_cosine(similarity_2x2()).unwrap();
        for (t, s) in [(0.4, 1.9), (-2.0, 5.0), (11.0, -0.3)] {
            assert!(dalembert_residual(&p, t, s) < 1e-10);
        }
    }

    #[test]
    fn resolvent_examples() {
        let a0 = DenseOperator::scalar(C64::new(0.0, 0.0));
        let r = resolvent(&a0, C64::new(2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(r.entries[[0, 0]].re, 0.5, epsilon = 1e-14);

        let a4 = DenseOperator::scalar(C64::new(4.0, 0.0));
        let r = resolvent(&a4, C64::new(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(r.entries[[0, 0]].re, -1.0 / 3.0, epsilon = 1e-14);

        let ad = DenseOperator::diagonal(&[C64::new(1.0, 0.0), C64::new(4.0, 0.0)]);
        let r = resolvent(&ad, C64::new(0.0, 1.0)).unwrap();
        // entries equal 1/(i - lambda_k)
        assert!((r.entries[[0, 0]] - C64::new(1.0, 0.0) / (C64::new(0.0, 1.0) - C64::new(1.0, 0.0))).norm() < 1e-12);
        assert!((r.entries[[1, 1]] - C64::new(1.0, 0.0) / (C64::new(0.0, 1.0) - C64::new(4.0, 0.0))).norm() < 1e-12);
    }

    #[test]
    fn resolvent_rejects_spectrum_hit() {
        let a4 = DenseOperator::scalar(C64::new(4.0, 0.0));
        assert!(matches!(
            resolvent(&a4, C64::new(4.0, 0.0)),
            Err(CoreError::SpectrumHit { .. })
        ));
    }

    #[test]
    fn laplace_recover_scalar_examples() {
        let p0 = scalar_family(0.0);
        let r = laplace_recover(&p0, C64::new(2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(r.entries[[0, 0]].re, 0.5, epsilon = 1e-9);

        let p4 = scalar_family(4.0);
        let r = laplace_recover(&p4, C64::new(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(r.entries[[0, 0]].re, 0.2, epsilon = 1e-9);
    }

    #[test]
    fn laplace_recover_matches_direct_resolvent() {
        let p = make_cosine(similarity_2x2()).unwrap();
        for lam in [C64::new(0.5, 0.0), C64::new(1.0, 1.0), C64::new(2.0, -0.5)] {
            let got = laplace_recover(&p, lam).unwrap();
            let direct = resolvent(&p.generator.scale(C64::new(-1.0, 0.0)), lam * lam)
                .unwrap()
                .scale(lam);
            let rel = got.distance(&direct) / direct.opnorm();
            assert!(rel < 1e-6, "lambda {lam}: rel err {rel}");
        }
    }

    #[test]
    fn laplace_tail_guard() {
        let p = scalar_family(4.0);
        assert!(matches!(
            laplace_recover(&p, C64::new(0.01, 0.0)),
            Err(CoreError::TailNotConverged { .. })
        ));
    }

    #[test]
    fn negative_spectrum_rejected() {
        let a = DenseOperator::scalar(C64::new(-1.0, 0.0));
        assert!(matches!(
            make_cosine(a),
            Err(CoreError::NegativeSpectrum { .. })
        ));
    }

    #[test]
    fn sectoriality_holds_for_hermitian() {
        let a = DenseOperator::scalar(C64::new(4.0, 0.0));
        let samples = vec![C64::new(1.0, 1.0), C64::new(0.3, -2.0), C64::new(5.0, 0.7)];
        let r = sectoriality_residual(&a, 1.0, &samples).unwrap();
        assert_eq!(r, 0.0);

        let a0 = DenseOperator::scalar(C64::new(0.0, 0.0));
        assert_eq!(sectoriality_residual(&a0, 1.0, &samples).unwrap(), 0.0);
    }

    #[test]
    fn understated_bound_flags_violation() {
        // non-normal generator with M deliberately set to a value below the
        // true cosine bound must produce a positive residual somewhere
        let a = DenseOperator::from_real(&[&[1.0, 30.0], &[0.0, 4.0]]).unwrap();
        let mut samples = Vec::new();
        for k in -4..=4 {
            let r = 10f64.powi(k);
            samples.push(C64::new(r * 0.2, r * 0.98));
        }
        let res = sectoriality_residual(&a, 0.05, &samples).unwrap();
        assert!(res > 0.0);
    }

    #[test]
    fn spectral_apply_examples() {
        let a = DenseOperator::diagonal(&[C64::new(1.0, 0.0), C64::new(4.0, 0.0)]);
        let s = SpectralData::compute(&a).unwrap();
        let sq = s.sqrt_oracle();
        assert_abs_diff_eq!(sq.entries[[0, 0]].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sq.entries[[1, 1]].re, 2.0, epsilon = 1e-12);

        let ident = spectral_apply(|_| C64::new(1.0, 0.0), &s);
        assert!(ident.distance(&DenseOperator::identity(2)) < 1e-12);

        let a4 = DenseOperator::scalar(C64::new(4.0, 0.0));
        let s4 = SpectralData::compute(&a4).unwrap();
        let e = spectral_apply(|l| (-l.sqrt()).exp(), &s4);
        assert_abs_diff_eq!(e.entries[[0, 0]].re, (-2.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn series_fallback_agrees_with_spectral() {
        let a = similarity_2x2();
        let p = make_cosine(a.clone()).unwrap();
        for t in [0.7, 3.0, 12.0] {
            let series = cos_series(&a, t);
            assert!(p.eval(t).distance(&series) < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn spectral_cosine_matches_oracle_cos() {
        let p = make_cosine(similarity_2x2()).unwrap();
        let s = p.spectral.as_ref().unwrap();
        let t = 1.9;
        let oracle = s.apply_scalar(|l| C64::new((t * l.re.max(0.0).sqrt()).cos(), 0.0));
        assert!(p.eval(t).distance(&oracle) < 1e-10 * s.condition_number);
    }
}
