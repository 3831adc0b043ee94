use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

/// Error type shared by every numerical module.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("matrix is numerically non-diagonalizable (condition number {condition_number:.3e})")]
    NonDiagonalizable { condition_number: f64 },

    #[error("spectrum leaves [0, inf): offending eigenvalues {offenders:?}")]
    NegativeSpectrum { offenders: Vec<Complex64> },

    #[error("resolvent point {lambda} is within {distance:.3e} of the spectrum")]
    SpectrumHit { lambda: Complex64, distance: f64 },

    #[error("resolvent point {lambda} too close to [0, inf) (distance {distance:.3e})")]
    SpectrumTooClose { lambda: Complex64, distance: f64 },

    #[error("Laplace tail not converged: Re(lambda) * T_max = {product:.3e} < 30")]
    TailNotConverged { product: f64 },

    #[error("function fails the H1 tail test: {what}")]
    NotH1 { what: String },

    #[error("no regularizer power n <= {max_n} renders the product H1")]
    NotRegularizable { max_n: u32 },

    #[error("density grids have incommensurable steps ({a} vs {b})")]
    GridMismatch { a: f64, b: f64 },

    #[error("Poisson kernel peak unresolved at Re(lambda) = {re_lambda:.3e}")]
    KernelPeakUnresolved { re_lambda: f64 },

    #[error("boundary limit did not contract (last ratio {ratio:.3})")]
    NoConvergence { ratio: f64 },

    #[error("oscillatory panel budget exceeded ({panels} panels requested, {budget} allowed)")]
    OscillationUnresolved { panels: usize, budget: usize },

    #[error("grid too coarse: step {step:.3e} does not cover [{left}, {right}]")]
    GridTooCoarse { step: f64, left: f64, right: f64 },

    #[error("grid function support overflow: needs [{need_left}, {need_right}], grid ends at [{left}, {right}]")]
    SupportOverflow {
        need_left: f64,
        need_right: f64,
        left: f64,
        right: f64,
    },

    #[error("grid function does not decay at the ends (|f| = {edge:.3e} > 1e-8)")]
    BoundaryLeakage { edge: f64 },

    #[error("contour clears the spectrum by only {distance:.3e} at |z| = {radius:.3e}")]
    ContourTooClose { distance: f64, radius: f64 },

    #[error("analytic tail of the measure cannot be paired with a closed cosine tail")]
    TailUnresolved,

    #[error("convergence-lemma hypothesis violated: {what}")]
    HypothesisViolated { what: String },

    #[error("linear algebra backend failure: {0}")]
    Linalg(String),

    #[error("{0}")]
    Invalid(String),
}

impl From<ndarray_linalg::error::LinalgError> for CoreError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        CoreError::Linalg(e.to_string())
    }
}
