use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("arg of {z} is outside the branch window [{lo}, {hi}]")]
    Branch { z: Complex64, lo: f64, hi: f64 },

    #[error("division by zero (|k| = {0:e})")]
    DivisionByZero(f64),

    #[error("eigensolver failed: {0}")]
    EigenFailure(String),

    #[error("shifted matrix is singular at z = {0}")]
    SingularShift(Complex64),

    #[error("determinant vanishes on the path near z = {0}")]
    ZeroOnPath(Complex64),

    #[error("winding residual {0:.3} is not close to an integer")]
    NonIntegerWinding(f64),

    #[error("determinant nearly vanishes on the region boundary at z = {z} (|det| = {modulus:e})")]
    BoundaryZero { z: Complex64, modulus: f64 },

    #[error("subdivision budget exceeded at depth {0}")]
    BudgetExceeded(usize),

    #[error("sample point {z} is within {dist:e} of resonance {w}")]
    PathTooCloseToResonance { z: Complex64, w: Complex64, dist: f64 },

    #[error("profile too steep: arg(1 + i t theta phi'(t)) = {arg:.4} exceeds eps1 = {eps1} at t = {t}")]
    ProfileTooSteep { t: f64, arg: f64, eps1: f64 },

    #[error("real resonance {0} lies on the lambda grid")]
    RealResonanceOnGrid(Complex64),

    #[error("h = {0} is too small for the scattering integrator")]
    Stiffness(f64),

    #[error("grid too small: boundary sensitivity {0:e}")]
    GridTooSmall(f64),

    #[error("ill-conditioned fit (condition number {0:e})")]
    IllConditionedFit(f64),

    #[error("series in z does not decay by l = {0}")]
    SeriesDivergence(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
