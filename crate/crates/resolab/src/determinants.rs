//! Fredholm determinants of order `p`, perturbation determinants `D_p(z, h)`
//! and branch-tracked logarithms along paths.

use std::f64::consts::PI;

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::freefield::{SpectralRegion, SqrtBranch};
use crate::nystrom::{converged, trace_power, NystromConfig};
use crate::potentials::Potential;
use crate::special::unwrap_log;
use crate::{c, Error, Result};

fn identity(n: usize) -> Mat<Complex64> {
    Mat::identity(n, n)
}

/// `det(I + M)`.
pub fn det1(m: MatRef<'_, Complex64>) -> Complex64 {
    if m.nrows() == 0 {
        return c(1.0, 0.0);
    }
    (identity(m.nrows()) + m).determinant()
}

/// Eigenvalues of a square complex matrix.
pub fn eigenvalues(m: MatRef<'_, Complex64>) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    m.eigenvalues().map_err(|e| Error::EigenFailure(format!("{e:?}")))
}

fn weierstrass_factor(l: Complex64, p: usize) -> Complex64 {
    let mut s = c(0.0, 0.0);
    let mut pw = c(1.0, 0.0);
    for j in 1..p {
        pw *= l;
        s += if j % 2 == 0 { pw } else { -pw } / j as f64;
    }
    (1.0 + l) * s.exp()
}

/// `prod (1 + l) exp(sum_{j<p} (-1)^j l^j / j)` over the eigenvalues of `M`.
pub fn detp_weierstrass(m: MatRef<'_, Complex64>, p: usize) -> Result<Complex64> {
    if p == 0 {
        return Err(Error::InvalidInput("p must be >= 1".into()));
    }
    Ok(eigenvalues(m)?.into_iter().map(|l| weierstrass_factor(l, p)).product())
}

/// `det(I + M) exp(sum_{j<p} (-1)^j tr(M^j) / j)`.
pub fn detp_via_correction(m: MatRef<'_, Complex64>, p: usize) -> Complex64 {
    assert!(p >= 1, "p must be >= 1");
    let mut s = c(0.0, 0.0);
    for j in 1..p {
        let t = trace_power(m, j) / j as f64;
        s += if j % 2 == 0 { t } else { -t };
    }
    det1(m) * s.exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetConfig {
    pub branch: SqrtBranch,
    pub nystrom: NystromConfig,
    /// Determinant moduli below this fraction of the largest modulus seen
    /// on a path count as zeros.
    pub zero_tol: f64,
}

impl DetConfig {
    pub fn new(branch: SqrtBranch) -> Self {
        Self { branch, nystrom: NystromConfig::default(), zero_tol: 1e-12 }
    }

    pub fn for_region(region: &SpectralRegion) -> Self {
        Self::new(region.branch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetValue {
    pub value: Complex64,
    /// A logarithm of `value`; finite even when `value` over- or underflows.
    pub ln_value: Complex64,
    pub p_order: usize,
    pub z: Complex64,
    pub h: f64,
}

/// `ln D_p(z, h)` with an arbitrary imaginary part.
pub fn ln_perturbation_determinant(p_order: usize, pot: &Potential, z: Complex64, h: f64, cfg: &DetConfig) -> Result<Complex64> {
    if p_order == 0 {
        return Err(Error::InvalidInput("p must be >= 1".into()));
    }
    let conv = converged(pot, z, h, &cfg.branch, p_order - 1, &cfg.nystrom)?;
    let mut ln = conv.ln_det1;
    for (j, t) in conv.traces.iter().enumerate() {
        let j = j + 1;
        ln += if j % 2 == 0 { *t } else { -*t } / j as f64;
    }
    Ok(ln)
}

/// `D_p(z, h) = det_p(I + V (H0 - z)^{-1})`.
pub fn perturbation_determinant(p_order: usize, pot: &Potential, z: Complex64, h: f64, cfg: &DetConfig) -> Result<DetValue> {
    let ln_value = ln_perturbation_determinant(p_order, pot, z, h, cfg)?;
    Ok(DetValue { value: ln_value.exp(), ln_value, p_order, z, h })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogDetPath {
    pub path: Vec<Complex64>,
    pub log_values: Vec<Complex64>,
    pub winding_basepoint: Complex64,
}

impl LogDetPath {
    /// Change of the imaginary part from the first to the last point.
    pub fn arg_increment(&self) -> f64 {
        self.log_values.last().map_or(0.0, |l| l.im - self.log_values[0].im)
    }
}

const MAX_BISECT: usize = 30;

/// Continuous logarithm of a function along a polygonal path, given an
/// evaluator of some logarithm. Segments are bisected until successive
/// arguments differ by less than `pi / 2`.
pub fn log_along_path<F>(f: F, path: &[Complex64], zero_tol: f64) -> Result<LogDetPath>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    if path.is_empty() {
        return Err(Error::InvalidInput("empty path".into()));
    }
    use rayon::prelude::*;
    let first: Vec<Complex64> = path.par_iter().map(|&z| f(z)).collect::<Result<_>>()?;
    let mut zs = vec![path[0]];
    let mut ls = vec![first[0]];
    for i in 1..path.len() {
        segment(&f, path[i - 1], path[i], first[i], &mut zs, &mut ls, 0)?;
    }
    let top = ls.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let floor = top + zero_tol.ln();
    if let Some(i) = ls.iter().position(|l| l.re < floor) {
        return Err(Error::ZeroOnPath(zs[i]));
    }
    Ok(LogDetPath { path: zs, log_values: ls, winding_basepoint: path[0] })
}

fn segment<F>(f: &F, a: Complex64, b: Complex64, lb: Complex64, zs: &mut Vec<Complex64>, ls: &mut Vec<Complex64>, depth: usize) -> Result<()>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let la = *ls.last().unwrap();
    let lb = unwrap_log(la, lb);
    if (lb.im - la.im).abs() < 0.5 * PI || depth >= MAX_BISECT {
        if depth >= MAX_BISECT {
            return Err(Error::ZeroOnPath(b));
        }
        zs.push(b);
        ls.push(lb);
        return Ok(());
    }
    let m = 0.5 * (a + b);
    let lm = f(m)?;
    segment(f, a, m, lm, zs, ls, depth + 1)?;
    segment(f, m, b, lb, zs, ls, depth + 1)
}

/// Branch-tracked `ln D_p` along `path`.
pub fn log_det_along_path(p_order: usize, pot: &Potential, path: &[Complex64], h: f64, cfg: &DetConfig) -> Result<LogDetPath> {
    if pot.is_zero() {
        return Ok(LogDetPath { path: path.to_vec(), log_values: vec![c(0.0, 0.0); path.len()], winding_basepoint: path[0] });
    }
    log_along_path(|z| ln_perturbation_determinant(p_order, pot, z, h, cfg), path, cfg.zero_tol)
}

fn shifted_inverse(a: MatRef<'_, Complex64>, z: Complex64) -> Result<Mat<Complex64>> {
    let n = a.nrows();
    let shifted = Mat::from_fn(n, n, |i, j| if i == j { a[(i, j)] - z } else { a[(i, j)] });
    let inv = shifted.partial_piv_lu().inverse();
    let resid = &shifted * &inv - identity(n);
    let bad = (0..n).any(|i| (0..n).any(|j| !inv[(i, j)].is_finite() || resid[(i, j)].norm() > 1e-6));
    if bad {
        return Err(Error::SingularShift(z));
    }
    Ok(inv)
}

/// `d^j/d eps^j (A + eps B - z)^{-1}` at `eps = 0`, i.e.
/// `(-1)^j j! R (B R)^j` with `R = (A - z)^{-1}`.
pub fn taylor_derivative_resolvent(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>, z: Complex64, j: usize) -> Result<Mat<Complex64>> {
    let r = shifted_inverse(a, z)?;
    let br = b * &r;
    let mut out = r.clone();
    let mut fact = 1.0;
    for i in 1..=j {
        out = &out * &br;
        fact *= -(i as f64);
    }
    Ok(out * faer::Scale(c(fact, 0.0)))
}

/// `tr(f(A+B) - f(A) - sum_{1<=j<p} (1/j!) d^j/d eps^j f(A + eps B)|_0)` for
/// `f(x) = (x - z)^{-k}`.
///
/// Each of the `k` resolvent factors is split as
/// `R1 = sum_{j<p} (-1)^j R (BR)^j + (-1)^p R1 (BR)^p`; the products are
/// accumulated by total order in `B`, so the Taylor polynomial is removed
/// without cancellation.
pub fn t_pk_trace(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>, z: Complex64, p: usize, k: usize) -> Result<Complex64> {
    if p == 0 || k == 0 {
        return Err(Error::InvalidInput("p and k must be >= 1".into()));
    }
    let n = a.nrows();
    let r = shifted_inverse(a, z)?;
    let ab = a + b;
    let r1 = shifted_inverse(ab.as_ref(), z)?;
    let br = b * &r;
    let mut terms = Vec::with_capacity(p);
    let mut t = r.clone();
    for j in 0..p {
        if j > 0 {
            t = &t * &br * faer::Scale(c(-1.0, 0.0));
        }
        terms.push(t.clone());
    }
    let mut rem = r1.clone();
    for _ in 0..p {
        rem = &rem * &br;
    }
    if p % 2 == 1 {
        rem = rem * faer::Scale(c(-1.0, 0.0));
    }
    // acc[d] is the sum of products of total order d (d = p collects >= p)
    let mut acc: Vec<Option<Mat<Complex64>>> = vec![None; p + 1];
    acc[0] = Some(identity(n));
    for _ in 0..k {
        let mut next: Vec<Option<Mat<Complex64>>> = vec![None; p + 1];
        let mut add = |slot: usize, m: Mat<Complex64>| {
            next[slot] = Some(match next[slot].take() {
                Some(x) => x + m,
                None => m,
            });
        };
        for (d, cur) in acc.iter().enumerate() {
            let Some(cur) = cur else { continue };
            for (j, tj) in terms.iter().enumerate() {
                add((d + j).min(p), cur * tj);
            }
            add(p, cur * &rem);
        }
        acc = next;
    }
    Ok(acc[p].as_ref().map_or(c(0.0, 0.0), |m| (0..n).map(|i| m[(i, i)]).sum()))
}
