//! Free resolvent kernel of `-h^2 d^2/dx^2` and the square-root branch used
//! to continue it onto the resonance sheet.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{c, Error, Result};

/// Square root `k(z) = |z|^{1/2} e^{i arg(z)/2}` with `arg z` taken in
/// `[arg_lo, arg_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtBranch {
    pub arg_lo: f64,
    pub arg_hi: f64,
}

const ARG_SLACK: f64 = 1e-12;

impl SqrtBranch {
    pub fn new(arg_lo: f64, arg_hi: f64) -> Result<Self> {
        if !(arg_lo < 0.0 && arg_hi > 0.0 && arg_hi - arg_lo < 2.0 * PI) {
            return Err(Error::InvalidInput(format!(
                "branch window [{arg_lo}, {arg_hi}] must contain 0 and be shorter than 2 pi"
            )));
        }
        Ok(Self { arg_lo, arg_hi })
    }

    /// The window `(-2 theta0, eps)`.
    pub fn sector(theta0: f64, eps: f64) -> Result<Self> {
        Self::new(-2.0 * theta0, eps)
    }

    /// Argument of `z` measured continuously inside the window.
    pub fn arg(&self, z: Complex64) -> Result<f64> {
        if z.norm() == 0.0 {
            return Err(Error::Branch { z, lo: self.arg_lo, hi: self.arg_hi });
        }
        let a = z.arg();
        [a, a - 2.0 * PI, a + 2.0 * PI]
            .into_iter()
            .find(|&t| t >= self.arg_lo - ARG_SLACK && t <= self.arg_hi + ARG_SLACK)
            .ok_or(Error::Branch { z, lo: self.arg_lo, hi: self.arg_hi })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.arg(z).is_ok()
    }
}

pub fn sqrt_branch(z: Complex64, b: &SqrtBranch) -> Result<Complex64> {
    let a = b.arg(z)?;
    Ok(Complex64::from_polar(z.norm().sqrt(), 0.5 * a))
}

/// Annular sector `{r e^{i phi}: r_min <= r <= r_max, -2 theta0 < phi < eps}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralRegion {
    pub branch: SqrtBranch,
    pub r_min: f64,
    pub r_max: f64,
    pub theta0: f64,
    pub eps: f64,
}

pub const DEFAULT_THETA0: f64 = 3.0 * PI / 8.0;
pub const DEFAULT_EPS: f64 = 0.3;
pub const DEFAULT_R_MIN: f64 = 0.25;

impl SpectralRegion {
    pub fn new(r_min: f64, r_max: f64, theta0: f64, eps: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min) {
            return Err(Error::InvalidInput(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]")));
        }
        if !(theta0 > 0.0 && theta0 < PI) {
            return Err(Error::InvalidInput(format!("theta0 = {theta0} outside (0, pi)")));
        }
        if !(eps > 0.0 && eps < 2.0 * PI - 2.0 * theta0) {
            return Err(Error::InvalidInput(format!("eps = {eps} outside (0, 2 pi - 2 theta0)")));
        }
        Ok(Self { branch: SqrtBranch::sector(theta0, eps)?, r_min, r_max, theta0, eps })
    }

    pub fn with_defaults(r_max: f64) -> Result<Self> {
        Self::new(DEFAULT_R_MIN, r_max, DEFAULT_THETA0, DEFAULT_EPS)
    }

    pub fn arg_lo(&self) -> f64 {
        -2.0 * self.theta0
    }

    pub fn arg_hi(&self) -> f64 {
        self.eps
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let r = z.norm();
        r >= self.r_min && r <= self.r_max && self.branch.arg(z).is_ok_and(|a| a > self.arg_lo() && a < self.arg_hi())
    }

    /// `r e^{i phi}` for a polar coordinate pair.
    pub fn point(r: f64, phi: f64) -> Complex64 {
        Complex64::from_polar(r, phi)
    }

    /// Positive real interval `[r_min, r_max]` contained in the region.
    pub fn real_interval(&self) -> (f64, f64) {
        (self.r_min, self.r_max)
    }
}

/// `i e^{ik|x-y|/h} / (2hk)`.
pub fn free_resolvent_kernel(x: f64, y: f64, k: Complex64, h: f64) -> Result<Complex64> {
    if k.norm() < 1e-300 {
        return Err(Error::DivisionByZero(k.norm()));
    }
    Ok(c(0.0, 1.0) * (c(0.0, 1.0) * k * ((x - y).abs() / h)).exp() / (2.0 * h * k))
}
