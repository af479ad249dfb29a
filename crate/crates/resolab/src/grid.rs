//! Finite-difference Dirichlet operators `-h^2 d^2/dx^2 + eps V` on `[-L, L]`.

use faer::Mat;

use crate::potentials::Potential;
use crate::{Error, Result};

/// Uniform interior grid of `[-L, L]` with Dirichlet ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_length: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if !(half_length > 0.0) || n < 8 {
            return Err(Error::InvalidInput(format!("bad grid: L = {half_length}, n = {n}")));
        }
        Ok(Self { half_length, n })
    }

    /// Grid with spacing close to `step`.
    pub fn with_step(half_length: f64, step: f64) -> Result<Self> {
        Self::new(half_length, ((2.0 * half_length / step).round() as usize).saturating_sub(1))
    }

    /// Grid with spacing exactly `step` and nodes on `step * Z`; the half
    /// length is rounded up to a multiple of `step`.
    pub fn aligned(half_length: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidInput(format!("bad step {step}")));
        }
        let m = (half_length / step - 1e-9).ceil().max(1.0);
        Self::new(m * step, 2 * m as usize - 1)
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_length / (self.n + 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let s = self.step();
        (1..=self.n).map(|i| -self.half_length + i as f64 * s).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    Second,
    Fourth,
}

/// Dense real symmetric matrix of `-h^2 D^2 + eps V` with `V` cell-averaged.
pub fn operator(p: &Potential, eps: f64, h: f64, g: &GridSpec, stencil: Stencil) -> Mat<f64> {
    let n = g.n;
    let s = g.step();
    let xs = g.nodes();
    let v: Vec<f64> = xs.iter().map(|&x| p.cell_average(x, s)).collect();
    let c = h * h / (s * s);
    let mut m = Mat::<f64>::zeros(n, n);
    match stencil {
        Stencil::Second => {
            for i in 0..n {
                m[(i, i)] = 2.0 * c + eps * v[i];
                if i + 1 < n {
                    m[(i, i + 1)] = -c;
                    m[(i + 1, i)] = -c;
                }
            }
        }
        Stencil::Fourth => {
            let c = c / 12.0;
            for i in 0..n {
                m[(i, i)] = 30.0 * c + eps * v[i];
                if i + 1 < n {
                    m[(i, i + 1)] = -16.0 * c;
                    m[(i + 1, i)] = -16.0 * c;
                }
                if i + 2 < n {
                    m[(i, i + 2)] = c;
                    m[(i + 2, i)] = c;
                }
            }
            // odd reflection across the Dirichlet ends
            m[(0, 0)] -= c;
            m[(n - 1, n - 1)] -= c;
        }
    }
    m
}

/// Diagonal and sub-diagonals of the grid operator.
fn bands(p: &Potential, eps: f64, h: f64, g: &GridSpec, stencil: Stencil) -> [Vec<f64>; 3] {
    let n = g.n;
    let s = g.step();
    let c = h * h / (s * s);
    let v: Vec<f64> = g.nodes().iter().map(|&x| p.cell_average(x, s)).collect();
    match stencil {
        Stencil::Second => [v.iter().map(|vi| 2.0 * c + eps * vi).collect(), vec![-c; n - 1], vec![0.0; n - 2]],
        Stencil::Fourth => {
            let c = c / 12.0;
            let mut d: Vec<f64> = v.iter().map(|vi| 30.0 * c + eps * vi).collect();
            d[0] -= c;
            d[n - 1] -= c;
            [d, vec![-16.0 * c; n - 1], vec![c; n - 2]]
        }
    }
}

/// Lower band storage with room for one bulge below the pentadiagonal band.
struct Band {
    n: usize,
    a: Vec<[f64; 4]>,
}

impl Band {
    fn get(&self, r: usize, c: usize) -> f64 {
        let (r, c) = if r >= c { (r, c) } else { (c, r) };
        if r - c > 3 { 0.0 } else { self.a[c][r - c] }
    }

    fn set(&mut self, r: usize, c: usize, v: f64) {
        let (r, c) = if r >= c { (r, c) } else { (c, r) };
        if r - c <= 3 {
            self.a[c][r - c] = v;
        }
    }

    /// `G^T A G` for the rotation acting on rows and columns `p, p + 1`.
    fn rotate(&mut self, p: usize, cs: f64, sn: f64) {
        let lo = p.saturating_sub(3);
        let hi = (p + 5).min(self.n);
        let m = hi - lo;
        let mut w = [[0.0; 8]; 8];
        for i in 0..m {
            for j in 0..m {
                w[i][j] = self.get(lo + i, lo + j);
            }
        }
        let (i0, i1) = (p - lo, p + 1 - lo);
        for row in w.iter_mut().take(m) {
            let (x, y) = (row[i0], row[i1]);
            row[i0] = cs * x + sn * y;
            row[i1] = -sn * x + cs * y;
        }
        for j in 0..m {
            let (x, y) = (w[i0][j], w[i1][j]);
            w[i0][j] = cs * x + sn * y;
            w[i1][j] = -sn * x + cs * y;
        }
        for i in 0..m {
            for j in 0..=i {
                self.set(lo + i, lo + j, w[i][j]);
            }
        }
    }
}

/// Givens reduction of a symmetric pentadiagonal matrix to tridiagonal form,
/// chasing each bulge off the end.
fn pentadiagonal_to_tridiagonal(d: &[f64], e1: &[f64], e2: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = d.len();
    let mut b = Band { n, a: vec![[0.0; 4]; n] };
    for i in 0..n {
        b.a[i][0] = d[i];
        if i + 1 < n {
            b.a[i][1] = e1[i];
        }
        if i + 2 < n {
            b.a[i][2] = e2[i];
        }
    }
    for j in 0..n.saturating_sub(2) {
        // zero (j + 2, j), then the fill (k + 3, k) it pushes down the band
        let (mut row, mut col) = (j + 2, j);
        while row < n {
            let x = b.get(row - 1, col);
            let y = b.get(row, col);
            if y != 0.0 {
                let r = x.hypot(y);
                b.rotate(row - 1, x / r, y / r);
                b.set(row, col, 0.0);
            }
            col = row - 1;
            row += 2;
            if row >= n || b.get(row, col) == 0.0 {
                break;
            }
        }
    }
    ((0..n).map(|i| b.a[i][0]).collect(), (0..n - 1).map(|i| b.a[i][1]).collect())
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL.
fn tridiagonal_eigenvalues(mut d: Vec<f64>, off: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    let mut e: Vec<f64> = off.to_vec();
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::EigenFailure("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                let r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                let g2 = d[i + 1] - p;
                let r2 = (d[i] - g2) * s + 2.0 * c * b;
                p = s * r2;
                d[i + 1] = g2 + p;
                g = c * r2 - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(d)
}

/// Ascending eigenvalues of the grid operator, from its band structure.
pub fn eigenvalues(p: &Potential, eps: f64, h: f64, g: &GridSpec, stencil: Stencil) -> Result<Vec<f64>> {
    let [d, e1, e2] = bands(p, eps, h, g, stencil);
    let (td, te) = match stencil {
        Stencil::Second => (d, e1),
        Stencil::Fourth => pentadiagonal_to_tridiagonal(&d, &e1, &e2),
    };
    tridiagonal_eigenvalues(td, &te)
}

/// Negative eigenvalues of `-h^2 d^2/dx^2 + V` on a box of half-length
/// `8 * radius`.
pub fn bound_states(p: &Potential, h: f64, step: f64) -> Result<Vec<f64>> {
    let g = GridSpec::with_step(8.0 * p.radius().max(1.0), step)?;
    Ok(eigenvalues(p, 1.0, h, &g, Stencil::Fourth)?.into_iter().filter(|&e| e < 0.0).collect())
}
