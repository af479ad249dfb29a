//! The second-order correction `phi(z, h) = tr(V R0 V R0)` separating `D_3`
//! from `D_2`, its transform representation, and the growth of
//! `dz phi` on the lower sheet.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::determinants::DetConfig;
use crate::freefield::{sqrt_branch, SpectralRegion, SqrtBranch};
use crate::potentials::{density_with, Autocorrelation, Potential};
use crate::quadrature::Composite;
use crate::resonances::{factor_background, locate_resonances, SearchConfig, Window};
use crate::{c, Error, Result};

/// `E(y) = Vt(y) + Vt(-y)` for `y >= 0`.
fn even_autocorrelation(ac: &Autocorrelation, y: f64) -> f64 {
    ac.eval(y) + ac.eval(-y)
}

/// Composite rule on `[0, b]` resolving `e^{i x xi}` for `|xi| <= xi_max`.
fn oscillatory_rule(b: f64, breaks: &[f64], xi_max: f64, order: usize) -> Composite {
    let sub = ((b * xi_max / 2.0).ceil() as usize).max(4);
    Composite::on_interval(0.0, b, breaks, sub, order)
}

fn positive_breaks(p: &Potential) -> Vec<f64> {
    p.autocorrelation_breaks().into_iter().filter(|&x| x > 0.0).collect()
}

/// `-1/(2hk)^2 int Vt(y) e^{2ik|y|/h} dy`, refined until two successive
/// panel counts agree to `1e-14`.
pub fn phi_via_autocorr(pot: &Potential, k: Complex64, h: f64) -> Result<Complex64> {
    if k.norm() == 0.0 {
        return Err(Error::DivisionByZero(0.0));
    }
    if pot.is_zero() {
        return Ok(c(0.0, 0.0));
    }
    let ac = Autocorrelation::new(pot, 32);
    let b = ac.half_width;
    let breaks = positive_breaks(pot);
    let xi = 2.0 * k / h;
    let integral = |xi_max: f64| -> Complex64 {
        let rule = oscillatory_rule(b, &breaks, xi_max, 16);
        rule.nodes.iter().zip(&rule.weights).map(|(&y, &w)| w * even_autocorrelation(&ac, y) * (c(0.0, y) * xi).exp()).sum()
    };
    let mut xi_max = xi.norm().max(4.0);
    let mut prev = integral(xi_max);
    for _ in 0..6 {
        xi_max *= 2.0;
        let next = integral(xi_max);
        let done = (next - prev).norm() <= 1e-14 * next.norm();
        prev = next;
        if done {
            break;
        }
    }
    Ok(-prev / (2.0 * h * k).powi(2))
}

/// `-i a / (2 k^3 h) + (e^{4iak/h} - 1) / (8 k^4)` for the indicator of
/// `[-a, a]`.
pub fn phi_box_closed_form(a: f64, k: Complex64, h: f64) -> Result<Complex64> {
    if k.norm() == 0.0 {
        return Err(Error::DivisionByZero(0.0));
    }
    let i = c(0.0, 1.0);
    Ok(-i * a / (2.0 * k.powi(3) * h) + ((4.0 * i * a * k / h).exp() - 1.0) / (8.0 * k.powi(4)))
}

/// A real density on `[0, b]`, tabulated on a Gauss-Legendre rule, with
/// its inverse Fourier transform `(1/2pi) int e^{i x xi} g(x) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub b: f64,
    nodes: Vec<f64>,
    weighted: Vec<f64>,
    /// Largest `|g|` on the tabulation nodes.
    pub sup_norm: f64,
}

impl Density {
    pub fn from_fn<F: Fn(f64) -> f64>(b: f64, breaks: &[f64], xi_max: f64, g: F) -> Self {
        let rule = oscillatory_rule(b, breaks, xi_max, 16);
        let vals: Vec<f64> = rule.nodes.iter().map(|&x| g(x)).collect();
        let sup_norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let weighted = vals.iter().zip(&rule.weights).map(|(v, w)| v * w).collect();
        Self { b, nodes: rule.nodes, weighted, sup_norm }
    }

    /// `g = 1_{x >= 0} (3/2 E + x/2 E')` built from `pot`.
    pub fn counterexample(pot: &Potential, xi_max: f64) -> Self {
        let ac = Autocorrelation::new(pot, 32);
        let breaks = pot.autocorrelation_breaks();
        let b = ac.half_width;
        let nodes_breaks: Vec<f64> = breaks.iter().copied().filter(|&x| x > 0.0).collect();
        let rule = oscillatory_rule(b, &nodes_breaks, xi_max, 16);
        let vals: Vec<f64> = rule.nodes.par_iter().map(|&x| density_with(&ac, &breaks, x)).collect();
        let sup_norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let weighted = vals.iter().zip(&rule.weights).map(|(v, w)| v * w).collect();
        Self { b, nodes: rule.nodes, weighted, sup_norm }
    }

    /// `E = Vt(y) + Vt(-y)` on `[0, b]`.
    pub fn even_autocorrelation(pot: &Potential, xi_max: f64) -> Self {
        let ac = Autocorrelation::new(pot, 32);
        Self::from_fn(ac.half_width, &positive_breaks(pot), xi_max, |y| even_autocorrelation(&ac, y))
    }

    pub fn transform(&self, xi: Complex64) -> Complex64 {
        let s: Complex64 = self.nodes.iter().zip(&self.weighted).map(|(&x, &w)| w * (c(0.0, x) * xi).exp()).sum();
        s / (2.0 * PI)
    }
}

/// `-(2 pi / (2kh)^2) (F_inv E)(2k/h)`.
pub fn phi_via_transform(pot: &Potential, k: Complex64, h: f64) -> Result<Complex64> {
    if k.norm() == 0.0 {
        return Err(Error::DivisionByZero(0.0));
    }
    let xi = 2.0 * k / h;
    let e = Density::even_autocorrelation(pot, 2.0 * xi.norm().max(4.0));
    Ok(-2.0 * PI / (2.0 * k * h).powi(2) * e.transform(xi))
}

/// `pi / (2 z^2 h^2) (F_inv g)(2 z^{1/2} / h)` with a prepared density.
pub fn dz_phi_with(g: &Density, z: Complex64, h: f64, b: &SqrtBranch) -> Result<Complex64> {
    let k = sqrt_branch(z, b)?;
    Ok(PI / (2.0 * z * z * h * h) * g.transform(2.0 * k / h))
}

/// `dz phi` at `z`; the density is rebuilt for each call.
pub fn dz_phi(pot: &Potential, z: Complex64, h: f64, b: &SqrtBranch) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::DivisionByZero(0.0));
    }
    if pot.is_zero() {
        return Ok(c(0.0, 0.0));
    }
    let g = Density::counterexample(pot, 2.0 * 2.0 * z.norm().sqrt() / h);
    dz_phi_with(&g, z, h, b)
}

/// `sup |e^{b' Im xi / h} (F_inv g)(xi / h)|` over the quarter annulus
/// `1 <= |xi| <= 2`, `-pi/2 <= arg xi < 0`, on an `n x n` polar grid.
pub fn paley_wiener_sup(g: &Density, b_prime: f64, h: f64, n: usize) -> Result<f64> {
    if !(b_prime > 0.0 && b_prime < g.b) {
        return Err(Error::InvalidInput(format!("need 0 < b' < b = {}, got {b_prime}", g.b)));
    }
    let n = n.max(2);
    let vals: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let r = 1.0 + i as f64 / (n - 1) as f64;
            let a = -0.5 * PI * (1.0 - j as f64 / n as f64);
            let xi = Complex64::from_polar(r, a);
            ((b_prime * xi.im / h).exp() * g.transform(xi / h)).norm()
        })
        .collect();
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// The window `{r e^{-i theta}: 1 <= r <= 4, 0 <= theta <= pi - 0.01}`.
pub fn blowup_window() -> Window {
    Window { r_lo: 1.0, r_hi: 4.0, arg_lo: -(PI - 0.01), arg_hi: 0.0 }
}

/// Region enclosing the blow-up window, with a square-root branch whose
/// window reaches `arg z = -pi + 0.002`.
pub fn blowup_region() -> Result<SpectralRegion> {
    SpectralRegion::new(0.5, 4.5, 0.5 * PI - 1e-3, 0.3)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupScan {
    pub h_values: Vec<f64>,
    /// `sup_W |h e^{delta Im z^{1/2}/h} dz phi_3|`.
    pub weighted_sups: Vec<f64>,
    /// `sup_W |h dz phi_2|`.
    pub unweighted_p2_sups: Vec<f64>,
    pub delta: f64,
    pub window: Window,
    pub grid_n: usize,
}

/// `dz phi_3 = dz phi_2 + dz phi / 2` over the window for each `h`, with
/// `dz phi_2` from the factored background.
pub fn blowup_scan(pot: &Potential, h_values: &[f64], delta: f64, region: &SpectralRegion, w: &Window, grid_n: usize) -> Result<BlowupScan> {
    if h_values.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::InvalidInput("h values must be decreasing".into()));
    }
    if h_values.iter().any(|&h| !(0.05..=1.0).contains(&h)) {
        return Err(Error::InvalidInput("h values must lie in [0.05, 1]".into()));
    }
    let b = Autocorrelation::new(pot, 8).half_width;
    if !(delta > 0.0 && delta <= b / 4.0 + 1e-12) {
        return Err(Error::InvalidInput(format!("delta = {delta} must lie in (0, b/4 = {}]", b / 4.0)));
    }
    let pts = w.grid(grid_n);
    let cfg = SearchConfig::for_region(region);
    let branch = region.branch;
    let mut weighted_sups = Vec::with_capacity(h_values.len());
    let mut unweighted_p2_sups = Vec::with_capacity(h_values.len());
    for &h in h_values {
        if pot.is_zero() {
            weighted_sups.push(0.0);
            unweighted_p2_sups.push(0.0);
            continue;
        }
        let rs = locate_resonances(pot, region, h, &cfg)?;
        let bg = factor_background(2, pot, &rs, &pts, &DetConfig::for_region(region))?;
        let g = Density::counterexample(pot, 4.0 * w.r_hi.sqrt() / h);
        let mut wsup: f64 = 0.0;
        let mut usup: f64 = 0.0;
        for s in &bg.samples {
            let k = sqrt_branch(s.z, &branch)?;
            let d3 = s.dz_phi + 0.5 * dz_phi_with(&g, s.z, h, &branch)?;
            wsup = wsup.max(h * (delta * k.im / h).exp() * d3.norm());
            usup = usup.max(h * s.dz_phi.norm());
        }
        weighted_sups.push(wsup);
        unweighted_p2_sups.push(usup);
    }
    Ok(BlowupScan { h_values: h_values.to_vec(), weighted_sups, unweighted_p2_sups, delta, window: *w, grid_n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_value_at_two_i() {
        let want = (7.0 + (-8.0f64).exp()) / 128.0;
        let k = c(0.0, 2.0);
        let closed = phi_box_closed_form(1.0, k, 1.0).unwrap();
        assert!((closed - want).norm() < 1e-15);
        let integral = phi_via_autocorr(&Potential::unit_box(1.0).unwrap(), k, 1.0).unwrap();
        assert!((integral - want).norm() < 1e-13 * want, "{integral}");
    }

    #[test]
    fn zero_potential() {
        let z = Potential::zero();
        assert_eq!(phi_via_autocorr(&z, c(1.0, 1.0), 1.0).unwrap(), c(0.0, 0.0));
        let b = SqrtBranch::new(-2.0, 0.5).unwrap();
        assert_eq!(dz_phi(&z, c(1.0, -0.5), 0.5, &b).unwrap(), c(0.0, 0.0));
        let g = Density::from_fn(1.0, &[], 10.0, |_| 0.0);
        assert_eq!(paley_wiener_sup(&g, 0.5, 1.0, 20).unwrap(), 0.0);
    }

    #[test]
    fn decays_along_imaginary_axis() {
        let a = phi_box_closed_form(1.0, c(0.0, 10.0), 1.0).unwrap().norm();
        let b = phi_box_closed_form(1.0, c(0.0, 100.0), 1.0).unwrap().norm();
        assert!(b < 1e-2 * a && b < 1e-6);
    }

    #[test]
    fn box_density_is_linear() {
        let p = Potential::unit_box(1.0).unwrap();
        let g = Density::counterexample(&p, 20.0);
        assert_eq!(g.b, 2.0);
        // g = 6 - 4x on [0, 2]
        let direct = Density::from_fn(2.0, &[], 20.0, |x| 6.0 - 4.0 * x);
        for xi in [c(1.0, 0.0), c(3.0, -2.0), c(-0.5, 4.0)] {
            assert!((g.transform(xi) - direct.transform(xi)).norm() < 1e-8 * direct.transform(xi).norm());
        }
    }

    #[test]
    fn transform_bound() {
        let p = Potential::mollified_box(1.0, 1.0, 0.25).unwrap();
        let g = Density::counterexample(&p, 60.0);
        for xi in [c(2.0, -1.0), c(10.0, -5.0), c(0.3, -12.0), c(5.0, 3.0)] {
            let bound = g.b / (2.0 * PI) * g.sup_norm * (g.b * xi.im.abs()).exp();
            assert!(g.transform(xi).norm() <= bound);
        }
    }
}
