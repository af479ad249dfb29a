//! Resonances as zeros of `D_1(., h)`: argument-principle subdivision with
//! Newton refinement, multiplicities, and the holomorphic background
//! `phi_p` left after the zeros are factored out.
//!
//! Boxes are rectangles in `w = ln z`, i.e. polar rectangles in `z`, so the
//! bisection midpoints of a parent edge are shared by its children.

use std::f64::consts::PI;

use log::{debug, warn};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::determinants::{ln_perturbation_determinant, log_along_path, DetConfig, LogDetPath};
use crate::freefield::{SpectralRegion, SqrtBranch};
use crate::potentials::Potential;
use crate::special::unwrap_log;
use crate::{c, Error, Result};

/// `round(Delta Im log / 2 pi)` for a closed path.
pub fn winding_number(path_log: &LogDetPath) -> Result<i64> {
    let (Some(first), Some(last)) = (path_log.path.first(), path_log.path.last()) else {
        return Err(Error::InvalidInput("empty path".into()));
    };
    if (first - last).norm() > 1e-12 * (1.0 + first.norm()) {
        return Err(Error::InvalidInput("path is not closed".into()));
    }
    let n = path_log.arg_increment() / (2.0 * PI);
    let r = n - n.round();
    if r.abs() >= 0.05 {
        return Err(Error::NonIntegerWinding(n));
    }
    Ok(n.round() as i64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub w: Complex64,
    pub multiplicity: usize,
    pub newton_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceSet {
    pub resonances: Vec<Resonance>,
    pub region: SpectralRegion,
    pub h: f64,
    /// Winding of `D_1` around the region boundary.
    pub boundary_winding: i64,
    /// Largest `|D_1|` on the region boundary.
    pub boundary_max: f64,
}

impl ResonanceSet {
    pub fn count(&self) -> usize {
        self.resonances.iter().map(|r| r.multiplicity).sum()
    }

    pub fn positions(&self) -> Vec<Complex64> {
        self.resonances.iter().map(|r| r.w).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub det: DetConfig,
    /// Minimum samples per box edge before adaptive bisection; raised to
    /// follow the free phase `k L / h`.
    pub edge_points: usize,
    /// Boxes with winding > 1 are reported as a multiple zero below this
    /// diameter.
    pub min_box: f64,
    pub max_depth: usize,
    /// `|D_1|` on the region boundary relative to its nearby maximum must
    /// exceed this.
    pub boundary_tol: f64,
}

impl SearchConfig {
    pub fn new(det: DetConfig) -> Self {
        Self { det, edge_points: 12, min_box: 1e-8, max_depth: 40, boundary_tol: 1e-8 }
    }

    pub fn for_region(region: &SpectralRegion) -> Self {
        Self::new(DetConfig::for_region(region))
    }
}

/// Rectangle `[u0, u1] x [a0, a1]` in `w = ln z`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct LogBox {
    u0: f64,
    u1: f64,
    a0: f64,
    a1: f64,
    depth: usize,
}

fn to_z(u: f64, a: f64) -> Complex64 {
    Complex64::from_polar(u.exp(), a)
}

fn to_w(z: Complex64, a_hint: f64) -> (f64, f64) {
    let a = z.arg();
    let k = ((a_hint - a) / (2.0 * PI)).round();
    (z.norm().ln(), a + 2.0 * PI * k)
}

impl LogBox {
    fn corners(&self) -> [Complex64; 4] {
        [c(self.u0, self.a0), c(self.u1, self.a0), c(self.u1, self.a1), c(self.u0, self.a1)]
    }

    fn boundary(&self, per_edge: usize) -> Vec<Complex64> {
        let k = self.corners();
        let mut pts = Vec::with_capacity(4 * per_edge + 1);
        for e in 0..4 {
            let (p, q) = (k[e], k[(e + 1) % 4]);
            for i in 0..per_edge {
                pts.push(p + (q - p) * (i as f64 / per_edge as f64));
            }
        }
        pts.push(k[0]);
        pts
    }

    fn contains(&self, u: f64, a: f64) -> bool {
        u >= self.u0 && u <= self.u1 && a >= self.a0 && a <= self.a1
    }

    fn center(&self) -> (f64, f64) {
        (0.5 * (self.u0 + self.u1), 0.5 * (self.a0 + self.a1))
    }

    /// Diameter of the image in `z`.
    fn z_size(&self) -> f64 {
        let r = self.u1.exp();
        (r - self.u0.exp()).max(r * (self.a1 - self.a0))
    }

    fn split(&self, fu: f64, fa: f64) -> [LogBox; 4] {
        let um = self.u0 + fu * (self.u1 - self.u0);
        let am = self.a0 + fa * (self.a1 - self.a0);
        let d = self.depth + 1;
        [
            LogBox { u0: self.u0, u1: um, a0: self.a0, a1: am, depth: d },
            LogBox { u0: um, u1: self.u1, a0: self.a0, a1: am, depth: d },
            LogBox { u0: self.u0, u1: um, a0: am, a1: self.a1, depth: d },
            LogBox { u0: um, u1: self.u1, a0: am, a1: self.a1, depth: d },
        ]
    }
}

struct Searcher<'a> {
    pot: &'a Potential,
    h: f64,
    cfg: &'a SearchConfig,
}

impl Searcher<'_> {
    /// `ln D_1` at `z = e^w`.
    fn ln_d(&self, w: Complex64) -> Result<Complex64> {
        ln_perturbation_determinant(1, self.pot, to_z(w.re, w.im), self.h, &self.cfg.det)
    }

    /// Samples per edge: at least `edge_points`, and about one per radian
    /// of the free phase `k L / h` along the longest edge.
    fn per_edge(&self, b: &LogBox) -> usize {
        let len = (b.u1 - b.u0).max(b.a1 - b.a0);
        let rate = (0.5 * b.u1).exp() * self.pot.length() / self.h;
        self.cfg.edge_points.max((len * rate).ceil() as usize)
    }

    /// Zeros on an edge surface as unresolved phase jumps; the region
    /// boundary is screened separately against its local modulus.
    fn winding(&self, b: &LogBox) -> Result<(i64, LogDetPath)> {
        let path = b.boundary(self.per_edge(b));
        let l = log_along_path(|w| self.ln_d(w), &path, 0.0)?;
        Ok((winding_number(&l)?, l))
    }

    /// Newton on `D_1` scaled by its modulus at the box center, with a
    /// central-difference derivative.
    fn newton(&self, b: &LogBox) -> Option<(Complex64, f64)> {
        let (u, a) = b.center();
        let mut z = to_z(u, a);
        let step = 1e-6 * b.z_size();
        let mut hint = a;
        let scale = self.ln_d(c(u, a)).ok()?.re;
        let f = |z: Complex64, hint: f64| -> Option<Complex64> { Some((self.ln_d(to_wc(z, hint)).ok()? - scale).exp()) };
        for _ in 0..60 {
            let df = (f(z + step, hint)? - f(z - step, hint)?) / (2.0 * step);
            let dz = -f(z, hint)? / df;
            if !dz.is_finite() {
                return None;
            }
            z += dz;
            let (uu, aa) = to_w(z, hint);
            hint = aa;
            if !b.contains(uu, aa) {
                return None;
            }
            if dz.norm() < 1e-15 * z.norm() {
                break;
            }
        }
        let res = self.ln_d(to_wc(z, hint)).ok()?.re.exp();
        Some((z, res))
    }
}

fn to_wc(z: Complex64, hint: f64) -> Complex64 {
    let (u, a) = to_w(z, hint);
    c(u, a)
}

enum Outcome {
    Empty,
    Found(Resonance),
    Split(Vec<LogBox>),
}

/// Zeros of `D_1(., h)` in `region`, with multiplicities.
pub fn locate_resonances(pot: &Potential, region: &SpectralRegion, h: f64, cfg: &SearchConfig) -> Result<ResonanceSet> {
    let root = LogBox { u0: region.r_min.ln(), u1: region.r_max.ln(), a0: region.arg_lo(), a1: region.arg_hi(), depth: 0 };
    if pot.is_zero() {
        return Ok(ResonanceSet { resonances: Vec::new(), region: *region, h, boundary_winding: 0, boundary_max: 1.0 });
    }
    let s = Searcher { pot, h, cfg };
    let (total, l) = s.winding(&root)?;
    let mags: Vec<f64> = l.log_values.iter().map(|v| v.re).collect();
    let top = mags.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // each sample against the largest value within two initial spacings
    let reach = 2.0 * (root.u1 - root.u0).max(root.a1 - root.a0) / s.per_edge(&root) as f64;
    for (i, (&m, w)) in mags.iter().zip(&l.path).enumerate() {
        let local = mags.iter().zip(&l.path).filter(|(_, v)| (*v - w).norm() <= reach).map(|(&v, _)| v).fold(m, f64::max);
        if m - local < cfg.boundary_tol.ln() {
            debug!("boundary sample {i} is {} below its neighbourhood", local - m);
            return Err(Error::BoundaryZero { z: to_z(w.re, w.im), modulus: m.exp() });
        }
    }
    let boundary_max = top.exp();
    let mut found = Vec::new();
    let mut queue = vec![(root, total)];
    while !queue.is_empty() {
        let outcomes: Vec<Result<Outcome>> = queue
            .par_iter()
            .map(|(b, n)| -> Result<Outcome> {
                if *n == 0 {
                    return Ok(Outcome::Empty);
                }
                if b.depth > cfg.max_depth {
                    return Err(Error::BudgetExceeded(b.depth));
                }
                if *n == 1 {
                    if let Some((w, res)) = s.newton(b) {
                        return Ok(Outcome::Found(Resonance { w, multiplicity: 1, newton_residual: res }));
                    }
                } else if b.z_size() < cfg.min_box {
                    let (u, a) = b.center();
                    let w = to_z(u, a);
                    warn!("multiple zero of order {n} reported at {w}");
                    let res = s.ln_d(c(u, a))?.re.exp();
                    return Ok(Outcome::Found(Resonance { w, multiplicity: *n as usize, newton_residual: res }));
                }
                Ok(Outcome::Split(split_box(&s, b)?))
            })
            .collect();
        let mut next = Vec::new();
        for o in outcomes {
            match o? {
                Outcome::Empty => {}
                Outcome::Found(r) => found.push(r),
                Outcome::Split(children) => next.extend(children),
            }
        }
        let wound: Vec<Result<(LogBox, i64)>> = next.par_iter().map(|b| s.winding(b).map(|(n, _)| (*b, n))).collect();
        queue = wound.into_iter().collect::<Result<Vec<_>>>()?;
        debug!("{} boxes pending, {} zeros found", queue.len(), found.len());
    }
    found.sort_by(|a, b| (a.w.re, a.w.im).partial_cmp(&(b.w.re, b.w.im)).unwrap());
    let counted: i64 = found.iter().map(|r| r.multiplicity as i64).sum();
    if counted != total {
        warn!("located multiplicity {counted} differs from boundary winding {total}");
    }
    Ok(ResonanceSet { resonances: found, region: *region, h, boundary_winding: total, boundary_max })
}

/// Split a box into four children whose windings are computable; split
/// fractions are perturbed when an internal edge runs into a zero.
fn split_box(s: &Searcher, b: &LogBox) -> Result<Vec<LogBox>> {
    for &(fu, fa) in &[(0.5, 0.5), (0.43, 0.57), (0.61, 0.39), (0.37, 0.45), (0.55, 0.66)] {
        let kids = b.split(fu, fa);
        let ok = kids.iter().all(|k| matches!(s.winding(k), Ok(_)));
        if ok {
            return Ok(kids.to_vec());
        }
    }
    Err(Error::BudgetExceeded(b.depth))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundSample {
    pub z: Complex64,
    pub phi: Complex64,
    pub dz_phi: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundProfile {
    pub samples: Vec<BackgroundSample>,
    pub p_order: usize,
    pub h: f64,
    pub branch_anchor: Complex64,
}

/// Anchor of the `phi_p` branch: `r_min + 0.05 i r_min`.
pub fn branch_anchor(region: &SpectralRegion) -> Complex64 {
    c(region.r_min, 0.05 * region.r_min)
}

/// Points from `a` to `b` along a straight line in `(ln |z|, arg z)`, with
/// arguments taken in the branch window.
fn log_segment(a: Complex64, b: Complex64, n: usize, branch: &SqrtBranch) -> Result<Vec<Complex64>> {
    let wa = c(a.norm().ln(), branch.arg(a)?);
    let wb = c(b.norm().ln(), branch.arg(b)?);
    Ok((0..=n)
        .map(|i| {
            let w = wa + (wb - wa) * (i as f64 / n as f64);
            to_z(w.re, w.im)
        })
        .collect())
}

/// `phi_p(z) = ln D_p(z) - sum m(w) ln(z - w)` with its `z`-derivative along
/// `sample_path`.
pub fn factor_background(p_order: usize, pot: &Potential, rs: &ResonanceSet, sample_path: &[Complex64], cfg: &DetConfig) -> Result<BackgroundProfile> {
    let anchor = branch_anchor(&rs.region);
    let h = rs.h;
    if sample_path.is_empty() {
        return Ok(BackgroundProfile { samples: Vec::new(), p_order, h, branch_anchor: anchor });
    }
    for &z in sample_path {
        for r in &rs.resonances {
            let d = (z - r.w).norm();
            if d < 1e-4 {
                return Err(Error::PathTooCloseToResonance { z, w: r.w, dist: d });
            }
        }
    }
    if pot.is_zero() {
        let samples = sample_path.iter().map(|&z| BackgroundSample { z, phi: c(0.0, 0.0), dz_phi: c(0.0, 0.0) }).collect();
        return Ok(BackgroundProfile { samples, p_order, h, branch_anchor: anchor });
    }
    let ln_f = |z: Complex64| -> Result<Complex64> {
        let mut l = ln_perturbation_determinant(p_order, pot, z, h, cfg)?;
        for r in &rs.resonances {
            l -= r.multiplicity as f64 * (z - r.w).ln();
        }
        Ok(l)
    };
    let mut path = log_segment(anchor, sample_path[0], 32, &cfg.branch)?;
    let lead = path.len() - 1;
    path.extend_from_slice(&sample_path[1..]);
    let tracked = log_along_path(ln_f, &path, 1e-300)?;
    // keep only the values at the requested points
    let mut phis = Vec::with_capacity(sample_path.len());
    let mut idx = 0;
    let mut want = lead;
    for (i, z) in tracked.path.iter().enumerate() {
        if idx < path.len() && (*z - path[idx]).norm() == 0.0 {
            if idx == want {
                phis.push(tracked.log_values[i]);
                want += 1;
            }
            idx += 1;
        }
    }
    let step = 1e-4 * rs.region.r_min;
    let derivs: Vec<Result<Complex64>> = sample_path
        .par_iter()
        .zip(phis.par_iter())
        .map(|(&z, &phi)| {
            let f = |d: f64| -> Result<Complex64> { Ok(unwrap_log(phi, ln_f(z + d * step)?)) };
            Ok((-f(2.0)? + 8.0 * f(1.0)? - 8.0 * f(-1.0)? + f(-2.0)?) / (12.0 * step))
        })
        .collect();
    let samples = sample_path
        .iter()
        .zip(phis)
        .zip(derivs)
        .map(|((&z, phi), d)| Ok(BackgroundSample { z, phi, dz_phi: d? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(BackgroundProfile { samples, p_order, h, branch_anchor: anchor })
}

/// Polar rectangle `{r e^{i phi}: r_lo <= r <= r_hi, arg_lo <= phi <= arg_hi}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub r_lo: f64,
    pub r_hi: f64,
    pub arg_lo: f64,
    pub arg_hi: f64,
}

impl Window {
    /// `n x n` polar grid ordered as a serpentine, so consecutive points are
    /// neighbours.
    pub fn grid(&self, n: usize) -> Vec<Complex64> {
        let n = n.max(2);
        let mut pts = Vec::with_capacity(n * n);
        for i in 0..n {
            let r = self.r_lo + (self.r_hi - self.r_lo) * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let jj = if i % 2 == 0 { j } else { n - 1 - j };
                let a = self.arg_lo + (self.arg_hi - self.arg_lo) * jj as f64 / (n - 1) as f64;
                pts.push(Complex64::from_polar(r, a));
            }
        }
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub h: f64,
    pub resonance_count: usize,
    /// `sup_W |dz phi_p|`.
    pub sup: f64,
    /// `sup_W |h e^{delta Im z^{1/2} / h} dz phi_p|`.
    pub weighted_sup: f64,
}

/// `sup_W |dz phi_p|` for each `h`.
pub fn scaling_study(p_order: usize, pot: &Potential, region: &SpectralRegion, h_list: &[f64], w: &Window, grid_n: usize, delta: f64, cfg: &SearchConfig) -> Result<Vec<ScalingRow>> {
    if h_list.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::InvalidInput("h_list must be decreasing".into()));
    }
    let pts = w.grid(grid_n);
    let mut rows = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let rs = locate_resonances(pot, region, h, cfg)?;
        let bg = factor_background(p_order, pot, &rs, &pts, &cfg.det)?;
        let mut sup: f64 = 0.0;
        let mut wsup: f64 = 0.0;
        for s in &bg.samples {
            let k = crate::freefield::sqrt_branch(s.z, &region.branch)?;
            sup = sup.max(s.dz_phi.norm());
            wsup = wsup.max(h * (delta * k.im / h).exp() * s.dz_phi.norm());
        }
        rows.push(ScalingRow { h, resonance_count: rs.count(), sup, weighted_sup: wsup });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(center: Complex64, r: f64, n: usize) -> Vec<Complex64> {
        (0..=n).map(|i| center + Complex64::from_polar(r, 2.0 * PI * i as f64 / n as f64)).collect()
    }

    #[test]
    fn winding_examples() {
        let cl = circle(c(0.0, 0.0), 1.0, 64);
        let one = log_along_path(|_| Ok(c(0.0, 0.0)), &cl, 1e-12).unwrap();
        assert_eq!(winding_number(&one).unwrap(), 0);
        let lin = log_along_path(|z| Ok((z - c(0.3, -0.1)).ln()), &cl, 1e-12).unwrap();
        assert_eq!(winding_number(&lin).unwrap(), 1);
        let cc = c(2.0, 1.0);
        let sq = log_along_path(|z| Ok(2.0 * (z - cc).ln()), &circle(cc, 0.5, 16), 1e-12).unwrap();
        assert_eq!(winding_number(&sq).unwrap(), 2);
    }

    #[test]
    fn open_path_rejected() {
        let l = LogDetPath { path: vec![c(0.0, 0.0), c(1.0, 0.0)], log_values: vec![c(0.0, 0.0); 2], winding_basepoint: c(0.0, 0.0) };
        assert!(winding_number(&l).is_err());
        let l = LogDetPath { path: vec![c(0.0, 0.0), c(0.0, 0.0)], log_values: vec![c(0.0, 0.0), c(0.0, 1.0)], winding_basepoint: c(0.0, 0.0) };
        assert!(matches!(winding_number(&l), Err(Error::NonIntegerWinding(_))));
    }

    #[test]
    fn free_operator_has_no_resonances() {
        let region = SpectralRegion::with_defaults(4.0).unwrap();
        let rs = locate_resonances(&Potential::zero(), &region, 1.0, &SearchConfig::for_region(&region)).unwrap();
        assert!(rs.resonances.is_empty());
        let pts = Window { r_lo: 1.0, r_hi: 2.0, arg_lo: -0.5, arg_hi: 0.0 }.grid(4);
        let bg = factor_background(2, &Potential::zero(), &rs, &pts, &SearchConfig::for_region(&region).det).unwrap();
        assert!(bg.samples.iter().all(|s| s.phi == c(0.0, 0.0) && s.dz_phi == c(0.0, 0.0)));
    }

    #[test]
    fn window_grid_is_serpentine() {
        let w = Window { r_lo: 1.0, r_hi: 2.0, arg_lo: -1.0, arg_hi: 0.0 };
        let g = w.grid(5);
        assert_eq!(g.len(), 25);
        assert!(g.windows(2).all(|p| (p[1] - p[0]).norm() < 0.6));
    }
}
