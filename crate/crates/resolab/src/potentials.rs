//! Compactly supported real potentials and their autocorrelations.

use std::sync::Arc;

use crate::quadrature::{gl_reference, Composite};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    PiecewiseConstant,
    Mollified,
    Smooth,
}

#[derive(Debug, Clone)]
pub enum Shape {
    Box { a: f64, depth: f64 },
    MollifiedBox { a: f64, depth: f64, width: f64, step: Arc<SmoothStep> },
    GaussianBump { a: f64, depth: f64, sigma: f64 },
    Table { xs: Vec<f64>, vs: Vec<f64> },
}

/// A real potential supported in `[support_lo, support_hi]`.
#[derive(Debug, Clone)]
pub struct Potential {
    pub shape: Shape,
    pub support_lo: f64,
    pub support_hi: f64,
    pub smoothness: Smoothness,
    /// Points where `V` or one of its low derivatives changes character;
    /// used as quadrature breakpoints.
    pub discontinuities: Vec<f64>,
}

impl Potential {
    /// `depth` times the indicator of `[-a, a]`.
    pub fn box_potential(a: f64, depth: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidInput(format!("box half-width must be positive, got {a}")));
        }
        Ok(Self {
            shape: Shape::Box { a, depth },
            support_lo: -a,
            support_hi: a,
            smoothness: Smoothness::PiecewiseConstant,
            discontinuities: vec![-a, a],
        })
    }

    /// The characteristic function of `[-a, a]`.
    pub fn unit_box(a: f64) -> Result<Self> {
        Self::box_potential(a, 1.0)
    }

    /// The identically vanishing potential, carried on `[-1, 1]`.
    pub fn zero() -> Self {
        Self::box_potential(1.0, 0.0).unwrap()
    }

    /// Box of half-width `a` convolved with the standard `C^inf` bump of
    /// total width `width`.
    pub fn mollified_box(a: f64, depth: f64, width: f64) -> Result<Self> {
        if !(a > 0.0 && width > 0.0 && width < 2.0 * a) {
            return Err(Error::InvalidInput(format!(
                "mollified box needs a > 0 and 0 < width < 2a (a = {a}, width = {width})"
            )));
        }
        let hw = 0.5 * width;
        Ok(Self {
            shape: Shape::MollifiedBox { a, depth, width, step: Arc::new(SmoothStep::new()) },
            support_lo: -a - hw,
            support_hi: a + hw,
            smoothness: Smoothness::Mollified,
            discontinuities: vec![-a - hw, -a + hw, a - hw, a + hw],
        })
    }

    /// `depth * exp(-x^2 / (2 sigma^2))` cut off at `|x| = a`, `sigma = a/8`.
    pub fn gaussian_bump(a: f64, depth: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidInput(format!("bump half-width must be positive, got {a}")));
        }
        Ok(Self {
            shape: Shape::GaussianBump { a, depth, sigma: a / 8.0 },
            support_lo: -a,
            support_hi: a,
            smoothness: Smoothness::Smooth,
            discontinuities: vec![-a, a],
        })
    }

    /// Linear interpolation of tabulated values, zero outside the table.
    pub fn table(xs: Vec<f64>, vs: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != vs.len() {
            return Err(Error::InvalidInput("table needs at least two (x, V) rows".into()));
        }
        if !xs.windows(2).all(|p| p[0] < p[1]) {
            return Err(Error::InvalidInput("table abscissae must be strictly increasing".into()));
        }
        if vs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("table values must be finite".into()));
        }
        let (lo, hi) = (xs[0], *xs.last().unwrap());
        Ok(Self {
            discontinuities: xs.clone(),
            shape: Shape::Table { xs, vs },
            support_lo: lo,
            support_hi: hi,
            smoothness: Smoothness::Mollified,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.support_lo || x > self.support_hi {
            return 0.0;
        }
        match &self.shape {
            Shape::Box { depth, .. } => *depth,
            Shape::MollifiedBox { a, depth, width, step } => {
                let s = 2.0 / width;
                depth * (step.cdf((x + a) * s) - step.cdf((x - a) * s))
            }
            Shape::GaussianBump { depth, sigma, .. } => depth * (-x * x / (2.0 * sigma * sigma)).exp(),
            Shape::Table { xs, vs } => {
                let i = match xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
                    Ok(i) => return vs[i],
                    Err(i) => i,
                };
                let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
                vs[i - 1] + t * (vs[i] - vs[i - 1])
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.shape {
            Shape::Box { depth, .. }
            | Shape::MollifiedBox { depth, .. }
            | Shape::GaussianBump { depth, .. } => *depth == 0.0,
            Shape::Table { vs, .. } => vs.iter().all(|&v| v == 0.0),
        }
    }

    pub fn length(&self) -> f64 {
        self.support_hi - self.support_lo
    }

    /// Largest `|x|` in the support.
    pub fn radius(&self) -> f64 {
        self.support_lo.abs().max(self.support_hi.abs())
    }

    /// Interior points where `V` jumps.
    pub fn jump_points(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Table { xs, vs } => {
                let mut out = Vec::new();
                if vs[0] != 0.0 {
                    out.push(xs[0]);
                }
                if *vs.last().unwrap() != 0.0 {
                    out.push(*xs.last().unwrap());
                }
                out.retain(|&p| p > self.support_lo && p < self.support_hi);
                out
            }
            _ => Vec::new(),
        }
    }

    /// `int V dx`.
    pub fn integral(&self) -> f64 {
        Composite::on_interval(self.support_lo, self.support_hi, &self.discontinuities, 4, 24).integrate(|x| self.eval(x))
    }

    /// Average of `V` over `[x - d/2, x + d/2]`.
    pub fn cell_average(&self, x: f64, d: f64) -> f64 {
        let lo = (x - 0.5 * d).max(self.support_lo);
        let hi = (x + 0.5 * d).min(self.support_hi);
        if hi <= lo {
            return 0.0;
        }
        Composite::on_interval(lo, hi, &self.discontinuities, 1, 8).integrate(|t| self.eval(t)) / d
    }

    /// Breakpoints of the autocorrelation: pairwise differences of the
    /// breakpoints of `V`.
    pub fn autocorrelation_breaks(&self) -> Vec<f64> {
        let d = &self.discontinuities;
        let mut out: Vec<f64> = d.iter().flat_map(|p| d.iter().map(move |q| p - q)).collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        out
    }
}

/// Cumulative distribution of the normalized bump `exp(-1/(1-s^2))` on
/// `[-1, 1]`, tabulated once and evaluated by cubic Hermite interpolation.
#[derive(Debug)]
pub struct SmoothStep {
    knots: usize,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

impl SmoothStep {
    const KNOTS: usize = 4096;

    pub fn new() -> Self {
        let n = Self::KNOTS;
        let (t, w) = gl_reference(12);
        let dx = 2.0 / n as f64;
        let mut values = vec![0.0; n + 1];
        for i in 0..n {
            let lo = -1.0 + i as f64 * dx;
            let piece: f64 = t.iter().zip(&w).map(|(ti, wi)| 0.5 * dx * wi * bump(lo + 0.5 * dx * (ti + 1.0))).sum();
            values[i + 1] = values[i] + piece;
        }
        let norm = values[n];
        for v in &mut values {
            *v /= norm;
        }
        let slopes = (0..=n).map(|i| bump(-1.0 + i as f64 * dx) / norm).collect();
        Self { knots: n, values, slopes }
    }

    /// Mass of the bump on `[-1, s]`.
    pub fn cdf(&self, s: f64) -> f64 {
        if s <= -1.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return 1.0;
        }
        let dx = 2.0 / self.knots as f64;
        let u = (s + 1.0) / dx;
        let i = (u.floor() as usize).min(self.knots - 1);
        let t = u - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * dx, self.slopes[i + 1] * dx);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1
    }
}

impl Default for SmoothStep {
    fn default() -> Self {
        Self::new()
    }
}

pub fn eval_potential(p: &Potential, x: f64) -> f64 {
    p.eval(x)
}

/// `y -> int V(x) V(x - y) dx`, computed by composite Gauss-Legendre.
#[derive(Debug, Clone)]
pub struct Autocorrelation {
    pub half_width: f64,
    potential: Potential,
    quad_order: usize,
}

impl Autocorrelation {
    pub fn new(p: &Potential, quad_order: usize) -> Self {
        Self { half_width: p.length(), potential: p.clone(), quad_order: quad_order.max(8) }
    }

    pub fn eval(&self, y: f64) -> f64 {
        let p = &self.potential;
        let lo = p.support_lo.max(p.support_lo + y);
        let hi = p.support_hi.min(p.support_hi + y);
        if hi <= lo {
            return 0.0;
        }
        let mut pts = p.discontinuities.clone();
        pts.extend(p.discontinuities.iter().map(|d| d + y));
        Composite::on_interval(lo, hi, &pts, 1, self.quad_order).integrate(|x| p.eval(x) * p.eval(x - y))
    }
}

pub fn autocorrelation(p: &Potential, y: f64, quad_order: usize) -> f64 {
    Autocorrelation::new(p, quad_order).eval(y)
}

pub fn box_autocorrelation(a: f64, y: f64) -> f64 {
    (2.0 * a - y.abs()).max(0.0)
}

const FD_STEP: f64 = 1e-5;

/// The density `g` built from `E(x) = Vt(x) + Vt(-x)`:
/// `g(x) = 1_{x >= 0} (3/2 E(x) + x/2 E'(x))`.
pub fn counterexample_density(p: &Potential, x: f64) -> f64 {
    density_with(&Autocorrelation::new(p, 32), &p.autocorrelation_breaks(), x)
}

pub(crate) fn density_with(ac: &Autocorrelation, breaks: &[f64], x: f64) -> f64 {
    let b = ac.half_width;
    if x < 0.0 || x > b {
        return 0.0;
    }
    let e = |t: f64| ac.eval(t) + ac.eval(-t);
    let near = breaks.iter().copied().filter(|&c| c >= 0.0).find(|&c| (x - c).abs() < FD_STEP);
    let de = match near {
        Some(c) if c >= 0.5 * b => (3.0 * e(x) - 4.0 * e(x - FD_STEP) + e(x - 2.0 * FD_STEP)) / (2.0 * FD_STEP),
        Some(_) => (-3.0 * e(x) + 4.0 * e(x + FD_STEP) - e(x + 2.0 * FD_STEP)) / (2.0 * FD_STEP),
        None => (e(x + FD_STEP) - e(x - FD_STEP)) / (2.0 * FD_STEP),
    };
    1.5 * e(x) + 0.5 * x * de
}
