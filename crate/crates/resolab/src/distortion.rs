//! Exterior complex scaling `x -> e^{i theta phi(|x|)} x` of
//! `-h^2 d^2/dx^2 + V` on a Dirichlet grid. Resonances in the uncovered
//! sector are eigenvalues of the scaled operator.

use faer::Mat;
use num_complex::Complex64;

use crate::freefield::SpectralRegion;
use crate::potentials::Potential;
use crate::{c, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingProfile {
    pub r1: f64,
    pub t_inf: f64,
    pub eps1: f64,
    pub theta: f64,
    /// `phi = 1` everywhere (dilation of the whole line).
    pub pure_dilation: bool,
}

impl ScalingProfile {
    /// Quintic smoothstep from `r1` to `t_inf`; fails when
    /// `arg(1 + i t theta phi'(t))` exceeds `eps1` somewhere.
    pub fn new(r1: f64, t_inf: f64, eps1: f64, theta: f64) -> Result<Self> {
        if !(r1 > 0.0 && t_inf > r1) {
            return Err(Error::InvalidInput(format!("need 0 < R1 < T_inf, got {r1}, {t_inf}")));
        }
        if !(eps1 > 0.0 && eps1 < 0.5 * std::f64::consts::PI) || !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::InvalidInput(format!("eps1 = {eps1}, theta = {theta} out of range")));
        }
        let sp = Self { r1, t_inf, eps1, theta, pure_dilation: false };
        let n = 2000;
        for i in 0..=n {
            let t = r1 + (t_inf - r1) * i as f64 / n as f64;
            let s = t * theta * sp.phi_derivative(t);
            let arg = s.atan();
            if s < 0.0 || arg > eps1 + 1e-12 {
                return Err(Error::ProfileTooSteep { t, arg, eps1 });
            }
        }
        Ok(sp)
    }

    /// `T_inf = 2 R1`.
    pub fn with_default_t_inf(r1: f64, eps1: f64, theta: f64) -> Result<Self> {
        Self::new(r1, 2.0 * r1, eps1, theta)
    }

    pub fn dilation(theta: f64) -> Self {
        Self { r1: 0.0, t_inf: 0.0, eps1: 0.0, theta, pure_dilation: true }
    }

    pub fn phi_fn(&self, t: f64) -> f64 {
        if self.pure_dilation {
            return 1.0;
        }
        let u = ((t - self.r1) / (self.t_inf - self.r1)).clamp(0.0, 1.0);
        u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }

    pub fn phi_derivative(&self, t: f64) -> f64 {
        if self.pure_dilation || t <= self.r1 || t >= self.t_inf {
            return 0.0;
        }
        let w = self.t_inf - self.r1;
        let u = (t - self.r1) / w;
        30.0 * u * u * (1.0 - u) * (1.0 - u) / w
    }

    /// `kappa'(x) = e^{i theta phi} (1 + i theta |x| phi'(|x|))`.
    pub fn jacobian(&self, x: f64) -> Complex64 {
        let t = x.abs();
        Complex64::from_polar(1.0, self.theta * self.phi_fn(t)) * c(1.0, self.theta * t * self.phi_derivative(t))
    }
}

/// `e^{i theta phi(|x|)} x`.
pub fn scaling_map(sp: &ScalingProfile, x: f64) -> Complex64 {
    Complex64::from_polar(1.0, sp.theta * sp.phi_fn(x.abs())) * x
}

/// Tridiagonal scaled operator on the interior nodes of `[-L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortedOperator {
    pub nodes: Vec<f64>,
    pub step: f64,
    pub diag: Vec<Complex64>,
    /// `(i+1, i)` entries.
    pub lower: Vec<Complex64>,
    /// `(i, i+1)` entries.
    pub upper: Vec<Complex64>,
    pub theta: f64,
    pub h: f64,
}

impl DistortedOperator {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn matrix(&self) -> Mat<Complex64> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if i == j + 1 {
                self.lower[j]
            } else if j == i + 1 {
                self.upper[i]
            } else {
                c(0.0, 0.0)
            }
        })
    }
}

/// `-h^2 (1/kappa') d/dx (1/kappa') d/dx + V` with Dirichlet ends, `V`
/// cell-averaged at the nodes.
pub fn build_distorted(p: &Potential, sp: &ScalingProfile, h: f64, l: f64, n_grid: usize) -> Result<DistortedOperator> {
    if !sp.pure_dilation {
        if sp.r1 <= p.radius() {
            return Err(Error::InvalidInput(format!("R1 = {} must exceed the support radius {}", sp.r1, p.radius())));
        }
        if l < 4.0 * sp.t_inf - 1e-12 {
            return Err(Error::InvalidInput(format!("L = {l} must be at least 4 T_inf = {}", 4.0 * sp.t_inf)));
        }
    }
    if n_grid < 800 {
        return Err(Error::InvalidInput(format!("n_grid = {n_grid} must be at least 800")));
    }
    let n = n_grid;
    let s = 2.0 * l / (n + 1) as f64;
    let nodes: Vec<f64> = (1..=n).map(|i| -l + i as f64 * s).collect();
    let hh = h * h / (s * s);
    let mut diag = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n - 1);
    let mut upper = Vec::with_capacity(n - 1);
    for (i, &x) in nodes.iter().enumerate() {
        let jc = sp.jacobian(x);
        let jp = sp.jacobian(x + 0.5 * s);
        let jm = sp.jacobian(x - 0.5 * s);
        let v = p.cell_average(x, s);
        diag.push(hh / jc * (1.0 / jp + 1.0 / jm) + v);
        if i + 1 < n {
            upper.push(-hh / (jc * jp));
        }
        if i > 0 {
            lower.push(-hh / (jc * jm));
        }
    }
    Ok(DistortedOperator { nodes, step: s, diag, lower, upper, theta: sp.theta, h })
}

/// All eigenvalues of the scaled operator.
pub fn all_eigenvalues(op: &DistortedOperator) -> Result<Vec<Complex64>> {
    op.matrix().eigenvalues().map_err(|e| Error::EigenFailure(format!("{e:?}")))
}

/// Eigenvalues inside `region`, merged into clusters of radius
/// `10 step^2`, sorted by real part.
pub fn distorted_spectrum(op: &DistortedOperator, region: &SpectralRegion) -> Result<Vec<(Complex64, usize)>> {
    let ev = all_eigenvalues(op)?;
    Ok(cluster(ev.into_iter().filter(|&l| region.contains(l)).collect(), 10.0 * op.step * op.step))
}

fn cluster(mut ev: Vec<Complex64>, radius: f64) -> Vec<(Complex64, usize)> {
    ev.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    let mut out: Vec<(Complex64, usize)> = Vec::new();
    for l in ev {
        if let Some(cl) = out.iter_mut().find(|(m, _)| (m - l).norm() < radius) {
            cl.0 = (cl.0 * cl.1 as f64 + l) / (cl.1 + 1) as f64;
            cl.1 += 1;
        } else {
            out.push((l, 1));
        }
    }
    out
}

/// Eigenvalues in `region` well away from the rotated continuum
/// `e^{-2 i theta} (0, inf)`.
pub fn isolated_eigenvalues(op: &DistortedOperator, region: &SpectralRegion, margin: f64) -> Result<Vec<(Complex64, usize)>> {
    Ok(distorted_spectrum(op, region)?.into_iter().filter(|(l, _)| l.arg() > -2.0 * op.theta + margin).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaReport {
    pub first: Vec<(Complex64, usize)>,
    pub second: Vec<(Complex64, usize)>,
    /// Largest distance from an eigenvalue of one list to the nearest of
    /// the other; infinite when exactly one list is empty.
    pub max_distance: f64,
    pub multiplicities_match: bool,
}

/// Isolated spectra for two scaling angles, matched pairwise.
pub fn theta_independence_check(p: &Potential, sps: &[ScalingProfile; 2], region: &SpectralRegion, h: f64, l: f64, n_grid: usize) -> Result<ThetaReport> {
    if sps[0].theta >= sps[1].theta {
        return Err(Error::InvalidInput("need theta1 < theta2".into()));
    }
    let margin = 0.05;
    let isolated = |sp: &ScalingProfile| -> Result<Vec<(Complex64, usize)>> {
        if 2.0 * sp.theta < -region.arg_lo() + margin {
            return Err(Error::InvalidInput(format!("theta = {} does not uncover the region", sp.theta)));
        }
        isolated_eigenvalues(&build_distorted(p, sp, h, l, n_grid)?, region, margin)
    };
    let (a, b) = rayon::join(|| isolated(&sps[0]), || isolated(&sps[1]));
    let (first, second) = (a?, b?);
    let nearest = |x: Complex64, ys: &[(Complex64, usize)]| ys.iter().map(|(y, m)| ((x - y).norm(), *m)).fold((f64::INFINITY, 0), |acc, v| if v.0 < acc.0 { v } else { acc });
    let mut max_distance: f64 = 0.0;
    let mut multiplicities_match = first.len() == second.len();
    for (x, m) in &first {
        let (d, mm) = nearest(*x, &second);
        max_distance = max_distance.max(d);
        multiplicities_match &= mm == *m;
    }
    for (y, _) in &second {
        max_distance = max_distance.max(nearest(*y, &first).0);
    }
    if first.is_empty() && second.is_empty() {
        max_distance = 0.0;
    }
    Ok(ThetaReport { first, second, max_distance, multiplicities_match })
}
