use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("charge basis not converged at cutoff {cutoff}: relative drift {drift:e}")]
    Convergence { cutoff: usize, drift: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error(
        "fit did not converge after {iterations} iterations \
         (f01 residual {f01_residual:e} GHz, alpha residual {alpha_residual:e} GHz)"
    )]
    FitFailed {
        iterations: usize,
        f01_residual: f64,
        alpha_residual: f64,
    },

    #[error("transition from level {level} to the next level is resonant with the resonator")]
    ResonantDivergence { level: usize },

    #[error("system is not dispersive: g01/|f_r - f01| = {ratio}")]
    NotDispersive { ratio: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("steady state requires at least one collapse operator with a nonzero rate")]
    NoDissipation,

    #[error("Liouvillian is degenerate (relative pivot {pivot:e}); steady state is not unique")]
    Degenerate { pivot: f64 },

    #[error("meshing failed: {0}")]
    Meshing(String),

    #[error("field solve did not reach tolerance; residual history {history:?}")]
    SolverDivergence { history: Vec<f64> },

    #[error("no loss tangent configured for region `{0}`")]
    MissingLossTangent(String),

    #[error("sweep point (f_pump = {f_pump} GHz, amplitude = {amplitude} GHz): {source}")]
    SpectrumPoint {
        f_pump: f64,
        amplitude: f64,
        source: Box<Error>,
    },

    #[error("geometry point (d = {d_nm} nm, r = {r_nm} nm): {source}")]
    GeometryPoint { d_nm: f64, r_nm: f64, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
