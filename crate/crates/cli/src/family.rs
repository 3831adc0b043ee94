//! Example operator families for the batch runner.

use cosred_core::operator::{make_cosine, opnorm, CosineProvider, DenseOperator};
use cosred_core::{C64, CoreError};
use serde::{Deserialize, Serialize};

pub type Result<T> = std::result::Result<T, CoreError>;

/// Operator family selector. Spectra must be nonnegative: the calculus is
/// built for generators with spectrum on [0, infinity).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    /// A = [a]
    Scalar { a: f64 },
    /// A = diag(spectrum)
    Diagonal { spectrum: Vec<f64> },
    /// A = S diag(spectrum) S^{-1} with measured cond(S) within 20% of
    /// cond_target
    Similarity { spectrum: Vec<f64>, cond_target: f64 },
    /// Periodic second-difference matrix on `dim` points
    #[serde(rename = "laplacian_1d")]
    Laplacian1d { dim: usize },
}

fn check_spectrum(spectrum: &[f64]) -> Result<()> {
    if spectrum.is_empty() {
        return Err(CoreError::Invalid("spectrum must be nonempty".into()));
    }
    for &s in spectrum {
        if !(s >= 0.0) {
            return Err(CoreError::Invalid(format!(
                "spectrum must be nonnegative, got {s}"
            )));
        }
    }
    Ok(())
}

/// cond(S) measured as ||S|| ||S^{-1}||.
fn cond_of(s: &DenseOperator) -> Result<f64> {
    Ok(s.opnorm() * s.inverse()?.opnorm())
}

/// S(c) = I + c N with N strictly upper triangular ones; cond grows
/// monotonically in c, so the target is reached by bisection.
fn similarity_transform(dim: usize, cond_target: f64) -> Result<DenseOperator> {
    if dim < 2 {
        return Err(CoreError::Invalid(
            "similarity family needs at least two spectrum points".into(),
        ));
    }
    if cond_target < 1.0 {
        return Err(CoreError::Invalid(
            "cond_target must be >= 1 (cond(S) >= 1 always)".into(),
        ));
    }
    let build = |c: f64| {
        let mut s = DenseOperator::identity(dim);
        for i in 0..dim {
            for j in (i + 1)..dim {
                s.entries[[i, j]] = C64::new(c, 0.0);
            }
        }
        s
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while cond_of(&build(hi))? < cond_target {
        hi *= 2.0;
        if hi > 1e8 {
            return Err(CoreError::Invalid(format!(
                "cond_target {cond_target} out of reach"
            )));
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if cond_of(&build(mid))? < cond_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(build(0.5 * (lo + hi)))
}

pub fn generate_matrix(spec: &FamilySpec) -> Result<DenseOperator> {
    match spec {
        FamilySpec::Scalar { a } => {
            check_spectrum(&[*a])?;
            Ok(DenseOperator::scalar(C64::new(*a, 0.0)))
        }
        FamilySpec::Diagonal { spectrum } => {
            check_spectrum(spectrum)?;
            let diag: Vec<C64> = spectrum.iter().map(|&s| C64::new(s, 0.0)).collect();
            Ok(DenseOperator::diagonal(&diag))
        }
        FamilySpec::Similarity {
            spectrum,
            cond_target,
        } => {
            check_spectrum(spectrum)?;
            let s = similarity_transform(spectrum.len(), *cond_target)?;
            let diag: Vec<C64> = spectrum.iter().map(|&v| C64::new(v, 0.0)).collect();
            let a = s
                .matmul(&DenseOperator::diagonal(&diag))
                .matmul(&s.inverse()?);
            let achieved = cond_of(&s)?;
            if (achieved - cond_target).abs() > 0.2 * cond_target {
                return Err(CoreError::Invalid(format!(
                    "similarity transform reached cond {achieved}, target {cond_target}"
                )));
            }
            Ok(a)
        }
        FamilySpec::Laplacian1d { dim } => {
            if *dim < 2 {
                return Err(CoreError::Invalid("laplacian_1d needs dim >= 2".into()));
            }
            let mut a = DenseOperator::identity(*dim).scale(C64::new(2.0, 0.0));
            for i in 0..*dim {
                a.entries[[i, (i + 1) % dim]] = C64::new(-1.0, 0.0);
                a.entries[[i, (i + *dim - 1) % dim]] = C64::new(-1.0, 0.0);
            }
            Ok(a)
        }
    }
}

pub fn generate_family(spec: &FamilySpec) -> Result<CosineProvider> {
    make_cosine(generate_matrix(spec)?)
}

/// Human/CI-facing summary emitted by `cosred gen`.
#[derive(Debug, Serialize)]
pub struct FamilySummary {
    pub dim: usize,
    pub bound_m: f64,
    pub condition_number: f64,
    pub spectrum: Vec<[f64; 2]>,
    pub generator_norm: f64,
}

pub fn summarize(provider: &CosineProvider) -> FamilySummary {
    let spectrum = provider
        .spectral
        .as_ref()
        .map(|s| s.eigenvalues.iter().map(|l| [l.re, l.im]).collect())
        .unwrap_or_default();
    FamilySummary {
        dim: provider.dim(),
        bound_m: provider.bound_m,
        condition_number: provider.condition_number(),
        spectrum,
        generator_norm: opnorm(&provider.generator.entries),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_and_diagonal() {
        let p = generate_family(&FamilySpec::Scalar { a: 4.0 }).unwrap();
        assert_eq!(p.dim(), 1);
        assert_eq!(p.bound_m, 1.0);
        // Cos(t) = cos(2t)
        assert!((p.eval(0.7).entries[[0, 0]].re - (1.4f64).cos()).abs() < 1e-12);

        let p = generate_family(&FamilySpec::Diagonal {
            spectrum: vec![0.0, 1.0, 4.0],
        })
        .unwrap();
        assert_eq!(p.bound_m, 1.0);
    }

    #[test]
    fn rejects_negative_spectrum() {
        assert!(generate_family(&FamilySpec::Scalar { a: -1.0 }).is_err());
        assert!(generate_family(&FamilySpec::Diagonal {
            spectrum: vec![1.0, -2.0]
        })
        .is_err());
    }

    #[test]
    fn similarity_reaches_cond_target() {
        for target in [2.0, 10.0, 100.0] {
            let spec = FamilySpec::Similarity {
                spectrum: vec![1.0, 4.0],
                cond_target: target,
            };
            let s = similarity_transform(2, target).unwrap();
            let achieved = cond_of(&s).unwrap();
            assert!(
                (achieved - target).abs() <= 0.2 * target,
                "{achieved} vs {target}"
            );
            generate_family(&spec).unwrap();
        }
    }

    #[test]
    fn laplacian_spectrum_and_bound() {
        let p = generate_family(&FamilySpec::Laplacian1d { dim: 16 }).unwrap();
        assert_eq!(p.bound_m, 1.0);
        // eigenvalues 2 - 2 cos(2 pi k / n), all in [0, 4]
        let sd = p.spectral.as_ref().unwrap();
        for l in &sd.eigenvalues {
            assert!(l.im.abs() < 1e-10 && l.re > -1e-10 && l.re < 4.0 + 1e-10);
        }
        // translation-average structure: Cos at t=0 is the identity
        assert!(p
            .eval(0.0)
            .distance(&DenseOperator::identity(16))
            < 1e-10);
    }
}
