//! Zeta-regularized relative determinants from heat traces.
//!
//! `L u(t) = tr(e^{-t H_1} - sum_{j<p} (1/j!) d^j/d eps^j e^{-t H_eps}|_0)` is
//! computed on a Dirichlet grid, its small-`t` expansion
//! `sum a_j t^{-1/2 + j/2}` is fitted, and
//! `zeta_p(s, z) = (1/Gamma(s)) int_0^inf L u(t) e^{tz} t^{s-1} dt` is split at
//! `t_cut` into a tail `I`, a remainder `II` and the explicit series `III`.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::grid::{eigenvalues, GridSpec, Stencil};
use crate::potentials::Potential;
use crate::quadrature::Composite;
use crate::special::{rgamma, EULER_GAMMA};
use crate::{c, Error, Result};

/// Smallest admissible `t`.
pub const T_FLOOR: f64 = 1e-3;
/// Coupling step of the Taylor stencil.
pub const EPS_STEP: f64 = 1e-2;

/// Eigenvalues of `H_eps` at the stencil couplings, combined so that
/// `L u(t) = sum_k c_k tr e^{-t H_{eps_k}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatSpectrum {
    reference: Vec<f64>,
    shifted: Vec<(f64, Vec<f64>)>,
    pub lambda_min: f64,
    pub p_order: usize,
}

fn stencil(p_order: usize) -> Result<Vec<(f64, f64)>> {
    let d = EPS_STEP;
    let mut w = vec![(1.0, 1.0), (0.0, -1.0)];
    if p_order >= 2 {
        // Richardson on central first differences at d and d/2
        let a = 4.0 / (3.0 * d);
        let b = 1.0 / (6.0 * d);
        w.extend([(0.5 * d, -a), (-0.5 * d, a), (d, b), (-d, -b)]);
    }
    if p_order >= 3 {
        // half of the Richardson second difference
        let a = 8.0 / (3.0 * d * d);
        let b = 1.0 / (6.0 * d * d);
        w.extend([(0.5 * d, -a), (-0.5 * d, -a), (0.0, 2.0 * a), (d, b), (-d, b), (0.0, -2.0 * b)]);
    }
    if p_order == 0 || p_order > 3 {
        return Err(Error::InvalidInput(format!("heat traces support p in 1..=3, got {p_order}")));
    }
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (e, cf) in w {
        match merged.iter_mut().find(|(x, _)| *x == e) {
            Some(m) => m.1 += cf,
            None => merged.push((e, cf)),
        }
    }
    Ok(merged)
}

impl HeatSpectrum {
    pub fn new(pot: &Potential, h: f64, p_order: usize, g: &GridSpec) -> Result<Self> {
        let st = stencil(p_order)?;
        let spectra: Vec<Result<Vec<f64>>> = st.par_iter().map(|(e, _)| eigenvalues(pot, *e, h, g, Stencil::Fourth)).collect();
        let mut reference = Vec::new();
        let mut shifted = Vec::new();
        for ((e, cf), s) in st.iter().zip(spectra) {
            let s = s?;
            if *e == 0.0 {
                reference = s;
            } else {
                shifted.push((*cf, s));
            }
        }
        let lambda_min = shifted.iter().map(|(_, s)| s[0]).chain([reference[0]]).fold(f64::INFINITY, f64::min);
        Ok(Self { reference, shifted, lambda_min, p_order })
    }

    /// `L u(t)`; the stencil weights sum to zero, so each eigenvalue index
    /// contributes `e^{-t l0} sum_k c_k expm1(-t (l_k - l0))`.
    pub fn trace(&self, t: f64) -> f64 {
        (0..self.reference.len())
            .map(|i| {
                let l0 = self.reference[i];
                let inner: f64 = self.shifted.iter().map(|(cf, s)| cf * (-t * (s[i] - l0)).exp_m1()).sum();
                (-t * l0).exp() * inner
            })
            .sum()
    }
}

/// Aligned grid of step `step` with half length `8 * radius + h + 0.25`,
/// enough for `t <= 1/16`.
pub fn default_grid(pot: &Potential, h: f64, step: f64) -> Result<GridSpec> {
    GridSpec::aligned(8.0 * pot.radius().max(1.0) + h + 0.25, step)
}

fn check_grid(pot: &Potential, t: f64, h: f64, g: &GridSpec) -> Result<()> {
    if t < T_FLOOR {
        return Err(Error::InvalidInput(format!("t = {t} below the floor {T_FLOOR}")));
    }
    let need = 8.0 * pot.radius() + 4.0 * t.sqrt() * h;
    if g.half_length < need {
        return Err(Error::InvalidInput(format!("grid half length {} < {need}", g.half_length)));
    }
    Ok(())
}

/// Boundary sensitivity of the first-order trace `tr(e^{-t H_1} - e^{-t H_0})`
/// under `L -> 1.25 L`; the coupling stencil would only add roundoff.
fn boundary_sensitivity(pot: &Potential, h: f64, g: &GridSpec, t: f64) -> Result<()> {
    let big = GridSpec::aligned(1.25 * g.half_length, g.step())?;
    let value = HeatSpectrum::new(pot, h, 1, g)?.trace(t);
    let other = HeatSpectrum::new(pot, h, 1, &big)?.trace(t);
    let dev = (other - value).abs();
    if dev > 1e-6 * value.abs() {
        return Err(Error::GridTooSmall(dev / value.abs().max(f64::MIN_POSITIVE)));
    }
    Ok(())
}

/// `L u(t)` on `g`, checked against the same grid enlarged by 1.25.
pub fn regularized_heat_trace(pot: &Potential, t: f64, h: f64, p_order: usize, g: &GridSpec) -> Result<f64> {
    check_grid(pot, t, h, g)?;
    boundary_sensitivity(pot, h, g, t)?;
    let v = HeatSpectrum::new(pot, h, p_order, g)?.trace(t);
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatTraceSamples {
    pub t_values: Vec<f64>,
    pub traces: Vec<f64>,
    pub p_order: usize,
    pub h: f64,
    pub grid: GridSpec,
    pub spectrum: HeatSpectrum,
}

impl HeatTraceSamples {
    /// The samples with `t` in `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> Self {
        let (t_values, traces) = self.t_values.iter().zip(&self.traces).filter(|(t, _)| **t >= lo && **t <= hi).map(|(t, v)| (*t, *v)).unzip();
        Self { t_values, traces, ..self.clone() }
    }
}

/// Log-spaced `t` values.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1).max(1) as f64)).collect()
}

/// Heat traces at `t_values`; boundary sensitivity is checked at the
/// largest `t`.
pub fn heat_trace_samples(pot: &Potential, h: f64, p_order: usize, g: &GridSpec, t_values: &[f64]) -> Result<HeatTraceSamples> {
    if t_values.is_empty() || t_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("t values must be strictly increasing".into()));
    }
    let t_max = *t_values.last().unwrap();
    check_grid(pot, t_values[0], h, g)?;
    check_grid(pot, t_max, h, g)?;
    let spectrum = HeatSpectrum::new(pot, h, p_order, g)?;
    let traces: Vec<f64> = t_values.iter().map(|&t| spectrum.trace(t)).collect();
    boundary_sensitivity(pot, h, g, t_max)?;
    Ok(HeatTraceSamples { t_values: t_values.to_vec(), traces, p_order, h, grid: *g, spectrum })
}

/// `sum_j a_j t^{-1/2 + j/2}` with `a_j = 0` for `j < first = 2p`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatExpansion {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub first: usize,
    pub fit_residual: f64,
    pub condition: f64,
}

impl HeatExpansion {
    pub fn eval(&self, t: f64) -> f64 {
        self.coefficients.iter().enumerate().map(|(j, a)| a * t.powf(-0.5 + 0.5 * j as f64)).sum()
    }

    /// The first fitted coefficient `a_{2p}`.
    pub fn leading(&self) -> f64 {
        self.coefficients[self.first]
    }
}

/// Least squares fit of `j_count` terms starting at `j = 2p`.
pub fn fit_heat_expansion(samples: &HeatTraceSamples, j_count: usize) -> Result<HeatExpansion> {
    let m = samples.t_values.len();
    if j_count < 4 || m < 3 * j_count {
        return Err(Error::InvalidInput(format!("need J >= 4 and >= 3J samples, got J = {j_count} with {m} samples")));
    }
    let first = 2 * samples.p_order;
    let expo = |j: usize| -0.5 + 0.5 * (first + j) as f64;
    // rows scaled by the leading power, columns by their largest entry
    let rows: Vec<f64> = samples.t_values.iter().map(|t| t.powf(-expo(0))).collect();
    let mut a = Mat::<f64>::from_fn(m, j_count, |i, j| samples.t_values[i].powf(expo(j)) * rows[i]);
    let cols: Vec<f64> = (0..j_count).map(|j| (0..m).map(|i| a[(i, j)].abs()).fold(0.0, f64::max)).collect();
    for j in 0..j_count {
        for i in 0..m {
            a[(i, j)] /= cols[j];
        }
    }
    let y: Vec<f64> = (0..m).map(|i| samples.traces[i] * rows[i]).collect();
    let svd = a.thin_svd().map_err(|e| Error::EigenFailure(format!("{e:?}")))?;
    let s: Vec<f64> = (0..j_count).map(|k| svd.S().column_vector()[k]).collect();
    let condition = s[0] / s[j_count - 1];
    if !(condition <= 1e10) {
        return Err(Error::IllConditionedFit(condition));
    }
    let (u, v) = (svd.U(), svd.V());
    let uty: Vec<f64> = (0..j_count).map(|k| (0..m).map(|i| u[(i, k)] * y[i]).sum::<f64>() / s[k]).collect();
    let x: Vec<f64> = (0..j_count).map(|j| (0..j_count).map(|k| v[(j, k)] * uty[k]).sum()).collect();
    let resid: Vec<f64> = (0..m).map(|i| (0..j_count).map(|j| a[(i, j)] * x[j]).sum::<f64>() - y[i]).collect();
    let dof = (m - j_count).max(1) as f64;
    let sigma2 = resid.iter().map(|r| r * r).sum::<f64>() / dof;
    let mut coefficients = vec![0.0; first + j_count];
    let mut std_errors = vec![0.0; first + j_count];
    for j in 0..j_count {
        coefficients[first + j] = x[j] / cols[j];
        let var: f64 = (0..j_count).map(|k| (v[(j, k)] / s[k]).powi(2)).sum::<f64>() * sigma2;
        std_errors[first + j] = var.sqrt() / cols[j];
    }
    let ex = HeatExpansion { coefficients, std_errors, first, fit_residual: 0.0, condition };
    let scale = samples.traces.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let worst = samples.t_values.iter().zip(&samples.traces).map(|(t, v)| (ex.eval(*t) - v).abs()).fold(0.0, f64::max);
    let fit_residual = if scale > 0.0 { worst / scale } else { 0.0 };
    Ok(HeatExpansion { fit_residual, ..ex })
}

/// Leading small-`t` coefficient for `p = 1`: `-(2h)^{-1} pi^{-1/2} int V`.
pub fn weyl_leading_coefficient(pot: &Potential, h: f64) -> f64 {
    -pot.integral() / (2.0 * h * PI.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaConfig {
    /// Split point between the sampled remainder and the tail.
    pub t_cut: f64,
    /// The tail is integrated until `e^{-T (lambda_min - Re z)}` drops below
    /// this.
    pub tail_tol: f64,
    pub gl_order: usize,
}

impl Default for ZetaConfig {
    fn default() -> Self {
        Self { t_cut: 0.05, tail_tol: 1e-12, gl_order: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaEvaluation {
    pub s: Complex64,
    pub z: Complex64,
    pub value: Complex64,
    pub split: (Complex64, Complex64, Complex64),
}

/// `(t_min, t_cut, T)` for a point `z`.
fn limits(z: Complex64, samples: &HeatTraceSamples, cfg: &ZetaConfig) -> Result<(f64, f64, f64)> {
    let gap = samples.spectrum.lambda_min - z.re;
    if !(gap > 0.0) {
        return Err(Error::InvalidInput(format!("Re z = {} must lie below the spectrum ({})", z.re, samples.spectrum.lambda_min)));
    }
    let t_min = samples.t_values[0];
    if !(cfg.t_cut > t_min) {
        return Err(Error::InvalidInput(format!("t_cut = {} must exceed t_min = {t_min}", cfg.t_cut)));
    }
    let t_end = (cfg.tail_tol.recip().ln() / gap).max(2.0 * cfg.t_cut);
    Ok((t_min, cfg.t_cut, t_end))
}

/// `int_{t0}^{t1} f(t) dt / t` in `u = ln t`, panels narrow enough for the
/// oscillation `e^{i t Im z}`.
fn log_integral<F: Fn(f64) -> Complex64 + Sync>(f: F, t0: f64, t1: f64, im_z: f64, order: usize) -> Complex64 {
    let (u0, u1) = (t0.ln(), t1.ln());
    let width = 0.5 / (1.0 + t1 * im_z.abs() / 8.0);
    let panels = ((u1 - u0) / width).ceil().max(1.0) as usize;
    let rule = Composite::on_interval(u0, u1, &[], panels, order);
    let vals: Vec<Complex64> = rule.nodes.par_iter().map(|&u| f(u.exp())).collect();
    vals.iter().zip(&rule.weights).map(|(v, w)| v * *w).sum()
}

/// `sum_j a_j sum_l z^l / l! * g(alpha)` with `alpha = j/2 - 1/2 + l`.
fn series<G: Fn(f64) -> Complex64>(z: Complex64, ex: &HeatExpansion, g: G) -> Result<Complex64> {
    let mut total = c(0.0, 0.0);
    for (j, &a) in ex.coefficients.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let mut zl = c(1.0, 0.0);
        let mut part = c(0.0, 0.0);
        let mut done = false;
        for l in 0..200 {
            if l > 0 {
                zl *= z / l as f64;
            }
            let term = zl * g(0.5 * j as f64 - 0.5 + l as f64);
            part += term;
            if l > 0 && term.norm() < 1e-14 * part.norm().max(1e-300) {
                done = true;
                break;
            }
        }
        if !done {
            return Err(Error::SeriesDivergence(200));
        }
        total += a * part;
    }
    Ok(total)
}

/// `zeta_p(s, z) = I + II + III`.
pub fn zeta_eval(s: Complex64, z: Complex64, ex: &HeatExpansion, samples: &HeatTraceSamples, cfg: &ZetaConfig) -> Result<ZetaEvaluation> {
    let (t_min, t_cut, t_end) = limits(z, samples, cfg)?;
    let rg = rgamma(s);
    let lu = |t: f64| samples.spectrum.trace(t);
    let i_term = rg * log_integral(|t| lu(t) * (t * z).exp() * c(t, 0.0).powc(s), t_cut, t_end, z.im, cfg.gl_order);
    let ii_term = rg * log_integral(|t| (lu(t) - ex.eval(t)) * (t * z).exp() * c(t, 0.0).powc(s), t_min, t_cut, z.im, cfg.gl_order);
    let iii_term = series(z, ex, |alpha| {
        let sa = s + alpha;
        if sa.norm() == 0.0 {
            // 1 / (Gamma(s) s) -> 1 as s -> 0
            c(1.0, 0.0)
        } else {
            rg * c(t_cut, 0.0).powc(sa) / sa
        }
    })?;
    Ok(ZetaEvaluation { s, z, value: i_term + ii_term + iii_term, split: (i_term, ii_term, iii_term) })
}

/// `d/ds zeta_p(s, z)` at `s = 0`; uses `d/ds (1/Gamma(s)) = 1` there.
pub fn zeta_s_derivative_at_zero(z: Complex64, ex: &HeatExpansion, samples: &HeatTraceSamples, cfg: &ZetaConfig) -> Result<Complex64> {
    let (t_min, t_cut, t_end) = limits(z, samples, cfg)?;
    let lu = |t: f64| samples.spectrum.trace(t);
    let i_term = log_integral(|t| lu(t) * (t * z).exp(), t_cut, t_end, z.im, cfg.gl_order);
    let ii_term = log_integral(|t| (lu(t) - ex.eval(t)) * (t * z).exp(), t_min, t_cut, z.im, cfg.gl_order);
    let iii_term = series(z, ex, |alpha| {
        if alpha == 0.0 {
            c(t_cut.ln() + EULER_GAMMA, 0.0)
        } else {
            c(t_cut.powf(alpha) / alpha, 0.0)
        }
    })?;
    Ok(i_term + ii_term + iii_term)
}

/// `ln D_p^zeta(z) = -d/ds zeta_p(s, z)|_{s=0}`.
pub fn ln_dpzeta(z: Complex64, ex: &HeatExpansion, samples: &HeatTraceSamples, cfg: &ZetaConfig) -> Result<Complex64> {
    Ok(-zeta_s_derivative_at_zero(z, ex, samples, cfg)?)
}

pub fn dpzeta(z: Complex64, ex: &HeatExpansion, samples: &HeatTraceSamples, cfg: &ZetaConfig) -> Result<Complex64> {
    Ok(ln_dpzeta(z, ex, samples, cfg)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn well() -> Potential {
        Potential::box_potential(1.0, -1.0).unwrap()
    }

    fn samples(pot: &Potential, p: usize, step: f64) -> HeatTraceSamples {
        let g = default_grid(pot, 1.0, step).unwrap();
        heat_trace_samples(pot, 1.0, p, &g, &log_spaced(T_FLOOR, 0.05, 40)).unwrap()
    }

    #[test]
    fn stencil_weights_sum_to_zero() {
        for p in 1..=3 {
            let s: f64 = stencil(p).unwrap().iter().map(|w| w.1).sum();
            assert!(s.abs() < 1e-9, "{p} {s}");
        }
        assert!(stencil(4).is_err());
    }

    #[test]
    fn zero_potential_is_trivial() {
        let pot = Potential::zero();
        let sm = samples(&pot, 1, 0.05);
        assert!(sm.traces.iter().all(|&v| v == 0.0));
        let ex = fit_heat_expansion(&sm, 6).unwrap();
        assert!(ex.coefficients.iter().all(|&a| a == 0.0));
        let z = c(-1.0, 0.5);
        let cfg = ZetaConfig::default();
        assert_eq!(zeta_eval(c(0.7, 0.1), z, &ex, &sm, &cfg).unwrap().value, c(0.0, 0.0));
        assert_eq!(dpzeta(z, &ex, &sm, &cfg).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn first_order_weyl_term() {
        let pot = well();
        let sm = samples(&pot, 1, 0.02);
        let ex = fit_heat_expansion(&sm, 6).unwrap();
        let w = weyl_leading_coefficient(&pot, 1.0);
        assert!((ex.leading() / w - 1.0).abs() < 0.05, "{} {w}", ex.leading());
        assert!(ex.fit_residual < 1e-3);
    }

    #[test]
    fn regularity_and_gamma_factor_at_zero() {
        let pot = well();
        let sm = samples(&pot, 1, 0.04);
        let ex = fit_heat_expansion(&sm, 6).unwrap();
        let cfg = ZetaConfig::default();
        let z = c(-1.0, 0.5);
        let at = |s: f64| zeta_eval(c(s, 0.0), z, &ex, &sm, &cfg).unwrap();
        let z0 = at(0.0);
        assert_eq!(z0.split.0, c(0.0, 0.0));
        assert_eq!(z0.split.1, c(0.0, 0.0));
        let vals: Vec<Complex64> = [0.1, 0.05, 0.025].iter().map(|&s| at(s).value).collect();
        // two Richardson sweeps towards s = 0
        let sweep = |v: &[Complex64]| {
            let (r1, r2) = (2.0 * v[1] - v[0], 2.0 * v[2] - v[1]);
            (4.0 * r2 - r1) / 3.0
        };
        let lim = sweep(&vals);
        assert!((lim - z0.value).norm() < 1e-3 * (1.0 + z0.value.norm()), "{lim} {}", z0.value);
        let ratios: Vec<Complex64> = vals.iter().zip([0.1, 0.05, 0.025]).map(|(v, s)| v / s).collect();
        let d0 = zeta_s_derivative_at_zero(z, &ex, &sm, &cfg).unwrap();
        assert!((sweep(&ratios) - d0).norm() < 1e-2 * d0.norm(), "{ratios:?} {d0}");
    }
}
