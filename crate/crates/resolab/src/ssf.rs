//! Derivative of the regularized spectral shift function from boundary
//! values of `ln D_p`, its Breit-Wigner decomposition, and a
//! scattering-matrix oracle for `p = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::determinants::{ln_perturbation_determinant, log_along_path, DetConfig};
use crate::potentials::Potential;
use crate::resonances::ResonanceSet;
use crate::special::unwrap_log;
use crate::{c, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SSFProfile {
    pub lambdas: Vec<f64>,
    pub xi_prime: Vec<f64>,
    pub eps_boundary: f64,
    pub p_order: usize,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreitWignerDecomposition {
    pub lorentzian_part: Vec<f64>,
    pub background_part: Vec<f64>,
    pub resonances_used: ResonanceSet,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(1e-4..=1e-2).contains(&eps) {
        return Err(Error::InvalidInput(format!("eps = {eps} outside [1e-4, 1e-2]")));
    }
    Ok(())
}

/// `-(1/pi) Im d/d lambda ln D_p(lambda + i eps)` by a central difference
/// with half-step `max(1e-5, eps / 10)`.
pub fn ssf_derivative(p_order: usize, pot: &Potential, lambda: f64, h: f64, eps: f64, cfg: &DetConfig) -> Result<f64> {
    check_eps(eps)?;
    if pot.is_zero() {
        return Ok(0.0);
    }
    let d = (eps / 10.0).max(1e-5);
    let lp = ln_perturbation_determinant(p_order, pot, c(lambda + d, eps), h, cfg)?;
    let lm = unwrap_log(lp, ln_perturbation_determinant(p_order, pot, c(lambda - d, eps), h, cfg)?);
    Ok(-(lp - lm).im / (2.0 * d) / PI)
}

/// `ssf_derivative` on a strictly increasing grid.
pub fn ssf_profile(p_order: usize, pot: &Potential, lambdas: &[f64], h: f64, eps: f64, cfg: &DetConfig) -> Result<SSFProfile> {
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("lambda grid must be strictly increasing".into()));
    }
    let xi_prime = lambdas.par_iter().map(|&l| ssf_derivative(p_order, pot, l, h, eps, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(SSFProfile { lambdas: lambdas.to_vec(), xi_prime, eps_boundary: eps, p_order, h })
}

/// `-sum m Im(w) / (pi |lambda - w|^2)`.
pub fn lorentzian(lambda: f64, rs: &ResonanceSet) -> f64 {
    rs.resonances.iter().map(|r| -(r.multiplicity as f64) * r.w.im / (PI * (lambda - r.w).norm_sqr())).sum()
}

pub fn breit_wigner_decompose(profile: &SSFProfile, rs: &ResonanceSet) -> Result<BreitWignerDecomposition> {
    if let (Some(&lo), Some(&hi)) = (profile.lambdas.first(), profile.lambdas.last()) {
        if let Some(r) = rs.resonances.iter().find(|r| r.w.im.abs() < 1e-12 * (1.0 + r.w.re.abs()) && r.w.re >= lo && r.w.re <= hi) {
            return Err(Error::RealResonanceOnGrid(r.w));
        }
    }
    let lorentzian_part: Vec<f64> = profile.lambdas.iter().map(|&l| lorentzian(l, rs)).collect();
    let background_part = profile.xi_prime.iter().zip(&lorentzian_part).map(|(x, l)| x - l).collect();
    Ok(BreitWignerDecomposition { lorentzian_part, background_part, resonances_used: rs.clone() })
}

/// `int_a^b xi'_p(lambda + i eps) d lambda`, from the change of
/// `arg D_p` along `[a, b] + i eps`.
pub fn integrated_ssf(p_order: usize, pot: &Potential, a: f64, b: f64, h: f64, eps: f64, cfg: &DetConfig) -> Result<f64> {
    let n = 64;
    let path: Vec<Complex64> = (0..=n).map(|i| c(a + (b - a) * i as f64 / n as f64, eps)).collect();
    let l = log_along_path(|z| ln_perturbation_determinant(p_order, pot, z, h, cfg), &path, 1e-300)?;
    Ok(-l.arg_increment() / PI)
}

type Sys = [Complex64; 2];

fn rk4_piece(y: Sys, x0: f64, x1: f64, v: f64, lam: f64, h: f64, max_step: f64) -> Sys {
    let n = ((x1 - x0).abs() / max_step).ceil().max(1.0) as usize;
    let s = (x1 - x0) / n as f64;
    let q = (v - lam) / (h * h);
    let f = |y: Sys| -> Sys { [y[1], q * y[0]] };
    let mut y = y;
    for _ in 0..n {
        let k1 = f(y);
        let k2 = f([y[0] + 0.5 * s * k1[0], y[1] + 0.5 * s * k1[1]]);
        let k3 = f([y[0] + 0.5 * s * k2[0], y[1] + 0.5 * s * k2[1]]);
        let k4 = f([y[0] + s * k3[0], y[1] + s * k3[1]]);
        y = [
            y[0] + s / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + s / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
    }
    y
}

/// Integrates `-h^2 u'' + V u = lambda u` from `from` to `to` through the
/// pieces of the support, sampling `V` at piece midpoints for constant
/// pieces and at RK stages otherwise.
fn propagate(pot: &Potential, lam: f64, h: f64, y: Sys, from: f64, to: f64) -> Sys {
    let mut b = vec![pot.support_lo, pot.support_hi];
    b.extend(pot.discontinuities.iter().copied().filter(|&d| d > pot.support_lo && d < pot.support_hi));
    b.sort_by(|p, q| p.partial_cmp(q).unwrap());
    b.dedup_by(|p, q| (*p - *q).abs() < 1e-13);
    if from > to {
        b.reverse();
    }
    let max_step = 1e-3 * h;
    let mut y = y;
    for w in b.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        y = match pot.smoothness {
            crate::potentials::Smoothness::PiecewiseConstant => rk4_piece(y, x0, x1, pot.eval(0.5 * (x0 + x1)), lam, h, max_step),
            _ => rk4_variable(pot, y, x0, x1, lam, h, max_step),
        };
    }
    y
}

fn rk4_variable(pot: &Potential, y: Sys, x0: f64, x1: f64, lam: f64, h: f64, max_step: f64) -> Sys {
    let n = ((x1 - x0).abs() / max_step).ceil().max(1.0) as usize;
    let s = (x1 - x0) / n as f64;
    let f = |x: f64, y: Sys| -> Sys { [y[1], (pot.eval(x) - lam) / (h * h) * y[0]] };
    let mut y = y;
    for i in 0..n {
        let x = x0 + i as f64 * s;
        let k1 = f(x, y);
        let k2 = f(x + 0.5 * s, [y[0] + 0.5 * s * k1[0], y[1] + 0.5 * s * k1[1]]);
        let k3 = f(x + 0.5 * s, [y[0] + 0.5 * s * k2[0], y[1] + 0.5 * s * k2[1]]);
        let k4 = f(x + s, [y[0] + s * k3[0], y[1] + s * k3[1]]);
        y = [
            y[0] + s / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + s / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
    }
    y
}

/// `S(lambda) = [[t, r'], [r, t]]` with plane waves `e^{+-i k x / h}`,
/// `k = sqrt(lambda)`.
pub fn scattering_matrix(pot: &Potential, lambda: f64, h: f64) -> Result<[[Complex64; 2]; 2]> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!("lambda = {lambda} must be positive")));
    }
    if h < 0.05 {
        return Err(Error::Stiffness(h));
    }
    if pot.is_zero() {
        return Ok([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]);
    }
    let kap = lambda.sqrt() / h;
    let i = c(0.0, 1.0);
    let (xl, xr) = (pot.support_lo, pot.support_hi);
    // decompose (u, u') at x into e^{i kap x} and e^{-i kap x} amplitudes
    let split = |y: Sys, x: f64| -> (Complex64, Complex64) {
        let ep = (i * kap * x).exp();
        let em = (-i * kap * x).exp();
        let a = 0.5 * (y[0] + y[1] / (i * kap)) / ep;
        let b = 0.5 * (y[0] - y[1] / (i * kap)) / em;
        (a, b)
    };
    // incident from the left: e^{i kap x} on the right
    let er = (i * kap * xr).exp();
    let yl = propagate(pot, lambda, h, [er, i * kap * er], xr, xl);
    let (a, b) = split(yl, xl);
    let t = 1.0 / a;
    let r = b / a;
    // incident from the right: e^{-i kap x} on the left
    let el = (-i * kap * xl).exp();
    let yr = propagate(pot, lambda, h, [el, -i * kap * el], xl, xr);
    let (ap, bp) = split(yr, xr);
    let rp = ap / bp;
    Ok([[t, rp], [r, t]])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BirmanKreinReport {
    /// `max |2 pi xi'_1 - d/d lambda arg det S|`.
    pub max_deviation: f64,
    pub max_xi_prime: f64,
    pub xi_prime: Vec<f64>,
    pub darg_det_s: Vec<f64>,
}

/// Compares `xi'_1(lambda + i eps)` with the phase derivative of `det S`.
pub fn birman_krein_check(pot: &Potential, lambda_grid: &[f64], h: f64, eps: f64, cfg: &DetConfig) -> Result<BirmanKreinReport> {
    let prof = ssf_profile(1, pot, lambda_grid, h, eps, cfg)?;
    let dl = 1e-4;
    let darg = lambda_grid
        .par_iter()
        .map(|&l| -> Result<f64> {
            let det = |x: f64| -> Result<Complex64> {
                let s = scattering_matrix(pot, x, h)?;
                Ok(s[0][0] * s[1][1] - s[0][1] * s[1][0])
            };
            let (p, m) = (det(l + dl)?, det(l - dl)?);
            Ok((p / m).arg() / (2.0 * dl))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_deviation = prof.xi_prime.iter().zip(&darg).map(|(x, d)| (2.0 * PI * x - d).abs()).fold(0.0, f64::max);
    let max_xi_prime = prof.xi_prime.iter().map(|x| x.abs()).fold(0.0, f64::max);
    Ok(BirmanKreinReport { max_deviation, max_xi_prime, xi_prime: prof.xi_prime, darg_det_s: darg })
}
