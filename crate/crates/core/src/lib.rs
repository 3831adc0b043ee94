//! Numerical functional calculus for bounded cosine operator functions.
//!
//! Given a finite-dimensional generator `A` (with `-A` generating the cosine
//! family), this crate builds the Phillips calculus over even measures, the
//! subordinated holomorphic semigroup, the square-root reduction group, the
//! principal-value representation of the sine-type function, the transference
//! factorization through vector-valued convolution operators, and the
//! contour (sectorial) calculus, and checks every identity quantitatively
//! against an independent spectral oracle.

pub mod error;
pub mod measure;
pub mod operator;
pub mod phillips;
pub mod quad;
pub mod reduction;
pub mod sector;
pub mod special;
pub mod transference;

pub use error::{CoreError, Result};
pub use operator::{CosineProvider, DenseOperator, SpectralData};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
