use thiserror::Error;

/// Errors surfaced by the shell/fluid pipeline.
///
/// Numerical routines report *which* object went bad (node index, line
/// number, residual) so a failing run can be traced back to its input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("node {index} is {dist:.3e} from the unit sphere (tolerance {tol:.1e})")]
    OffSphere { index: usize, dist: f64, tol: f64 },

    #[error("interpolation basis is numerically singular (condition estimate {cond:.3e})")]
    DegeneratePointSet { cond: f64 },

    #[error("jet evaluation at a pole: |theta| = {theta_abs:.17} exceeds pi/2 - {guard:.1e}")]
    PoleSingularity { theta_abs: f64, guard: f64 },

    #[error("interpolation fit residual {residual:.3e} exceeds 1e-9 of the data scale")]
    FitResidual { residual: f64 },

    #[error("active-set solve did not converge within {iterations} iterations (best residual {residual:.3e})")]
    NnlsNonConvergence {
        iterations: usize,
        residual: f64,
        /// best iterate found before the cap
        best: Vec<f64>,
    },

    #[error("nonpositive metric determinant at node {index}: det = {det:.3e}")]
    DegenerateSurface { index: usize, det: f64 },

    #[error("collapsed element: I2 = {i2:.3e} implies vanishing current area")]
    CollapsedElement { i2: f64 },

    #[error("degenerate current triangle {index}: area = {area:.3e}")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("triangulation failed: {0}")]
    Triangulation(String),

    #[error("net spread force {net:.3e} exceeds solvability tolerance {tol:.3e} (relative to {scale:.3e})")]
    NetForce { net: f64, tol: f64, scale: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
