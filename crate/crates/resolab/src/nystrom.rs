//! Nystrom discretization of `K(z) = V (H0 - z)^{-1}` on the support of `V`.
//!
//! Two rules are provided. Gauss-Legendre panels give the plain dense
//! `KernelMatrix`. Uniform trapezoid panels give matrices whose error in
//! every determinant and trace expands in even powers of the step, which
//! the converged evaluators exploit by Romberg extrapolation over a ladder
//! of grids. The free kernel is semiseparable, so `det(I + M)` costs `O(N)`.

use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::freefield::{free_resolvent_kernel, sqrt_branch, SqrtBranch};
use crate::potentials::Potential;
use crate::quadrature::gl_reference;
use crate::special::romberg;
use crate::{c, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    GaussLegendre,
    Trapezoid,
}

#[derive(Debug, Clone)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
    pub rule: Rule,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn strictly_increasing(&self) -> bool {
        self.nodes.windows(2).all(|p| p[0] < p[1])
    }
}

fn pieces(p: &Potential) -> Vec<f64> {
    let mut b = vec![p.support_lo, p.support_hi];
    b.extend(p.discontinuities.iter().copied().filter(|&d| d > p.support_lo && d < p.support_hi));
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.dedup_by(|x, y| (*x - *y).abs() < 1e-13);
    b
}

/// Gauss-Legendre nodes on each subinterval between consecutive breakpoints.
pub fn build_quadrature(p: &Potential, n_per_piece: usize) -> Quadrature {
    let n = n_per_piece.max(4);
    let (t, w) = gl_reference(n);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for pair in pieces(p).windows(2) {
        let half = 0.5 * (pair[1] - pair[0]);
        let mid = 0.5 * (pair[1] + pair[0]);
        for (ti, wi) in t.iter().zip(&w) {
            nodes.push(mid + half * ti);
            weights.push(half * wi);
        }
    }
    Quadrature { nodes, weights, order: n, rule: Rule::GaussLegendre }
}

/// Base interval counts per piece, proportional to piece length.
fn trapezoid_counts(p: &Potential, n_total: usize) -> Vec<usize> {
    let b = pieces(p);
    let len = p.length();
    b.windows(2).map(|w| (((w[1] - w[0]) / len * n_total as f64).round() as usize).max(1)).collect()
}

fn trapezoid_from_counts(p: &Potential, counts: &[usize]) -> Quadrature {
    let b = pieces(p);
    let jumps = p.jump_points();
    let mut nodes: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (pair, &n) in b.windows(2).zip(counts) {
        let s = (pair[1] - pair[0]) / n as f64;
        for i in 0..=n {
            let x = if i == n { pair[1] } else { pair[0] + i as f64 * s };
            let w = if i == 0 || i == n { 0.5 * s } else { s };
            let merge = i == 0 && nodes.last().is_some_and(|&last| (last - x).abs() < 1e-13) && !jumps.iter().any(|&j| (j - x).abs() < 1e-13);
            if merge {
                *weights.last_mut().unwrap() += w;
            } else {
                nodes.push(x);
                weights.push(w);
            }
        }
    }
    Quadrature { nodes, weights, order: counts.iter().sum(), rule: Rule::Trapezoid }
}

/// Uniform trapezoid rule with about `n_intervals` intervals spread over the
/// pieces of the support. Breakpoints where `V` is continuous are shared
/// nodes; jump points carry one node per side.
pub fn build_trapezoid(p: &Potential, n_intervals: usize) -> Quadrature {
    trapezoid_from_counts(p, &trapezoid_counts(p, n_intervals.max(1)))
}

#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub matrix: Mat<Complex64>,
    pub quadrature: Quadrature,
    pub z: Complex64,
    pub k: Complex64,
    pub h: f64,
}

impl KernelMatrix {
    pub fn as_ref(&self) -> MatRef<'_, Complex64> {
        self.matrix.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// `M[i][j] = V(x_i) G0(x_i, x_j; k, h) w_j` with `k = sqrt_branch(z)`.
pub fn assemble(p: &Potential, z: Complex64, h: f64, q: &Quadrature, b: &SqrtBranch) -> Result<KernelMatrix> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("h must be positive, got {h}")));
    }
    let k = sqrt_branch(z, b)?;
    free_resolvent_kernel(0.0, 0.0, k, h)?;
    let v: Vec<f64> = q.nodes.iter().map(|&x| p.eval(x)).collect();
    let n = q.len();
    let matrix = Mat::from_fn(n, n, |i, j| {
        if v[i] == 0.0 {
            c(0.0, 0.0)
        } else {
            v[i] * free_resolvent_kernel(q.nodes[i], q.nodes[j], k, h).unwrap() * q.weights[j]
        }
    });
    Ok(KernelMatrix { matrix, quadrature: q.clone(), z, k, h })
}

/// `tr(M^j)`.
pub fn trace_power(m: MatRef<'_, Complex64>, j: usize) -> Complex64 {
    assert!(j >= 1, "trace_power needs j >= 1");
    let n = m.nrows();
    match j {
        1 => (0..n).map(|i| m[(i, i)]).sum(),
        2 => (0..n).map(|i| (0..n).map(|l| m[(i, l)] * m[(l, i)]).sum::<Complex64>()).sum(),
        _ => {
            let half = j / 2;
            let mut p = m.to_owned();
            for _ in 1..half {
                p = &p * m;
            }
            let q = if j % 2 == 0 { p.clone() } else { &p * m };
            (0..n).map(|i| (0..n).map(|l| p[(i, l)] * q[(l, i)]).sum::<Complex64>()).sum()
        }
    }
}

/// Singular values of `M`, descending.
pub fn singular_values(m: MatRef<'_, Complex64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut s = m.singular_values().map_err(|e| Error::EigenFailure(format!("{e:?}")))?;
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(s)
}

/// `ln det(I + M)` for the Nystrom matrix on nondecreasing nodes.
///
/// The kernel `e^{ik|x-y|/h}` is semiseparable, so `(I + M) y = 0` reduces
/// to a two-term recursion for the partial sums left and right of each
/// node; the determinant is the surviving right amplitude.
pub fn structured_ln_det1(nodes: &[f64], weights: &[f64], v: &[f64], k: Complex64, h: f64) -> Complex64 {
    let n = nodes.len();
    let cf = c(0.0, 1.0) / (2.0 * h * k);
    let two_ik = c(0.0, 2.0) * k / h;
    let (mut a, mut b) = (c(0.0, 0.0), c(1.0, 0.0));
    let mut ln_scale = 0.0;
    for i in 0..n {
        let s = cf * v[i] * weights[i] * (a + b);
        a -= s;
        b += s;
        if i + 1 < n {
            a *= (two_ik * (nodes[i + 1] - nodes[i])).exp();
        }
        let m = a.norm().max(b.norm());
        if !(1e-100..=1e100).contains(&m) && m > 0.0 {
            a /= m;
            b /= m;
            ln_scale += m.ln();
        }
    }
    b.ln() + ln_scale
}

/// `tr(M^j)` for `j <= 3` in `O(N)` on nondecreasing nodes.
pub fn structured_trace(nodes: &[f64], weights: &[f64], v: &[f64], k: Complex64, h: f64, j: usize) -> Complex64 {
    let cf = c(0.0, 1.0) / (2.0 * h * k);
    let a: Vec<Complex64> = (0..nodes.len()).map(|i| cf * v[i] * weights[i]).collect();
    let two_ik = c(0.0, 2.0) * k / h;
    match j {
        1 => a.iter().sum(),
        2 => {
            let mut s = c(0.0, 0.0);
            let mut tr = a[0] * a[0];
            for i in 1..a.len() {
                s = (two_ik * (nodes[i] - nodes[i - 1])).exp() * (s + a[i - 1]);
                tr += a[i] * (a[i] + 2.0 * s);
            }
            tr
        }
        3 => {
            let mut tr = a[0] * a[0] * a[0];
            let (mut big_a, mut big_b) = (c(0.0, 0.0), c(0.0, 0.0));
            let mut prefix = a[0];
            for m in 1..a.len() {
                let e = (two_ik * (nodes[m] - nodes[m - 1])).exp();
                let prev = prefix - a[m - 1];
                big_a = e * (big_a + a[m - 1]);
                big_b = e * (big_b + a[m - 1] * (3.0 * a[m - 1] - 6.0 * (prev + a[m - 1])));
                tr += a[m] * a[m] * a[m] + a[m] * ((6.0 * prefix + 3.0 * a[m]) * big_a + big_b);
                prefix += a[m];
            }
            tr
        }
        _ => panic!("structured_trace supports j <= 3"),
    }
}

/// Grid ladder and resolution controls for converged evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NystromConfig {
    /// Minimum number of intervals on the finest grid.
    pub n_min: usize,
    /// Number of grids in the Romberg ladder.
    pub levels: usize,
    /// Upper bound on `|k| / h * step` on the coarsest grid.
    pub kappa_step: f64,
    /// Cap on the number of intervals on the finest grid.
    pub n_max: usize,
}

impl Default for NystromConfig {
    fn default() -> Self {
        Self { n_min: 256, levels: 5, kappa_step: 0.1, n_max: 1 << 17 }
    }
}

fn feature_scale(p: &Potential) -> f64 {
    use crate::potentials::Shape;
    match &p.shape {
        Shape::Box { .. } => f64::INFINITY,
        Shape::MollifiedBox { width, .. } => width / 8.0,
        Shape::GaussianBump { sigma, .. } => sigma / 4.0,
        Shape::Table { xs, .. } => xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min),
    }
}

/// Ladder of trapezoid rules `n_c, 2 n_c, ..., 2^{L-1} n_c` intervals.
pub fn ladder(p: &Potential, k: Complex64, h: f64, cfg: &NystromConfig) -> Vec<Quadrature> {
    let levels = cfg.levels.max(1);
    let scale = 1usize << (levels - 1);
    let len = p.length();
    let by_kappa = (len * k.norm() / h / cfg.kappa_step).ceil() as usize;
    let by_feature = (len / feature_scale(p)).ceil() as usize;
    let by_min = cfg.n_min.div_ceil(scale);
    let cap = (cfg.n_max / scale).max(4);
    let n_c = by_kappa.max(by_feature).max(by_min).clamp(4, cap);
    let base = trapezoid_counts(p, n_c);
    (0..levels)
        .map(|m| {
            let counts: Vec<usize> = base.iter().map(|&b| b << m).collect();
            trapezoid_from_counts(p, &counts)
        })
        .collect()
}

/// Extrapolated `ln det(I + K)` and `tr(K^j)` for `j = 1..=max_trace`.
#[derive(Debug, Clone)]
pub struct Converged {
    pub ln_det1: Complex64,
    pub traces: Vec<Complex64>,
    pub n_finest: usize,
}

pub fn converged(p: &Potential, z: Complex64, h: f64, b: &SqrtBranch, max_trace: usize, cfg: &NystromConfig) -> Result<Converged> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("h must be positive, got {h}")));
    }
    let k = sqrt_branch(z, b)?;
    free_resolvent_kernel(0.0, 0.0, k, h)?;
    if p.is_zero() {
        return Ok(Converged { ln_det1: c(0.0, 0.0), traces: vec![c(0.0, 0.0); max_trace], n_finest: 0 });
    }
    let rules = ladder(p, k, h, cfg);
    let mut lns = Vec::with_capacity(rules.len());
    let mut tr: Vec<Vec<Complex64>> = vec![Vec::with_capacity(rules.len()); max_trace];
    for q in &rules {
        let v: Vec<f64> = q.nodes.iter().map(|&x| p.eval(x)).collect();
        lns.push(structured_ln_det1(&q.nodes, &q.weights, &v, k, h));
        let mut dense: Option<KernelMatrix> = None;
        for j in 1..=max_trace {
            let t = if j <= 3 {
                structured_trace(&q.nodes, &q.weights, &v, k, h, j)
            } else {
                if dense.is_none() {
                    dense = Some(assemble(p, z, h, q, b)?);
                }
                trace_power(dense.as_ref().unwrap().as_ref(), j)
            };
            tr[j - 1].push(t);
        }
    }
    let reference = lns.last().unwrap().re;
    let scaled: Vec<Complex64> = lns.iter().map(|l| (l - reference).exp()).collect();
    let ln_det1 = romberg(&scaled).ln() + reference;
    let traces = tr.iter().map(|t| romberg(t)).collect();
    Ok(Converged { ln_det1, traces, n_finest: rules.last().unwrap().order })
}

/// Extrapolated `tr((V R0)^j)` over a trapezoid ladder whose finest grid
/// has at least `n` intervals.
pub fn converged_trace_power(p: &Potential, z: Complex64, h: f64, j: usize, n: usize, b: &SqrtBranch) -> Result<Complex64> {
    let cfg = NystromConfig { n_min: n, levels: 4, kappa_step: f64::INFINITY, n_max: n };
    Ok(converged(p, z, h, b, j, &cfg)?.traces[j - 1])
}
