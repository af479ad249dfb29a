//! Gauss-Legendre helpers shared by the integration routines.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// sorted by node.
pub fn gl_reference(n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = NonZeroUsize::new(n.max(1)).unwrap();
    let rule = GaussLegendre::new(n);
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

/// Composite Gauss-Legendre rule with `n` points on each of the panels
/// delimited by the sorted, deduplicated `breaks`.
#[derive(Debug, Clone)]
pub struct Composite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Composite {
    pub fn new(breaks: &[f64], n: usize) -> Self {
        let (t, w) = gl_reference(n);
        let mut nodes = Vec::with_capacity(breaks.len() * n);
        let mut weights = Vec::with_capacity(breaks.len() * n);
        for pair in breaks.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if hi - lo <= 0.0 {
                continue;
            }
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (ti, wi) in t.iter().zip(&w) {
                nodes.push(mid + half * ti);
                weights.push(half * wi);
            }
        }
        Self { nodes, weights }
    }

    /// Breaks are the given points clipped to `[lo, hi]`, plus each panel
    /// split into `sub` equal pieces.
    pub fn on_interval(lo: f64, hi: f64, points: &[f64], sub: usize, n: usize) -> Self {
        Self::new(&panel_breaks(lo, hi, points, sub), n)
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

pub fn panel_breaks(lo: f64, hi: f64, points: &[f64], sub: usize) -> Vec<f64> {
    let mut b = vec![lo, hi];
    b.extend(points.iter().copied().filter(|&p| p > lo && p < hi));
    b.sort_by(|a, b| a.partial_cmp(b).unwrap());
    b.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * (1.0 + b.abs()));
    let sub = sub.max(1);
    let mut out = Vec::with_capacity((b.len() - 1) * sub + 1);
    for pair in b.windows(2) {
        for s in 0..sub {
            out.push(pair[0] + (pair[1] - pair[0]) * s as f64 / sub as f64);
        }
    }
    out.push(*b.last().unwrap());
    out
}
