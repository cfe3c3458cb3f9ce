//! Composite Gauss–Legendre rules on the circle [0, 1).
//!
//! Panels are aligned to caller-supplied breakpoints (cylinder arc ends), so
//! integrands that are smooth on each arc converge spectrally.

use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss–Legendre nodes and weights on [0, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Golub–Welsch: eigen-decomposition of the Jacobi matrix.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut jac = DMatrix::<f64>::zeros(order, order);
        for k in 1..order {
            let kf = k as f64;
            let beta = kf / (4.0 * kf * kf - 1.0).sqrt();
            jac[(k, k - 1)] = beta;
            jac[(k - 1, k)] = beta;
        }
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|k| {
                let v0 = eig.eigenvectors[(0, k)];
                (0.5 * (eig.eigenvalues[k] + 1.0), v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GaussLegendre {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}

pub const DEFAULT_ORDER: usize = 16;

/// A composite rule on [0, 1): nodes with Lebesgue weights.
#[derive(Clone, Debug, Default)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    /// Panels between consecutive `breaks` (sorted, inside [0, 1]), each
    /// split so that the whole rule has at least `min_panels` panels.
    pub fn aligned(breaks: &[f64], min_panels: usize, base: &GaussLegendre) -> Self {
        let mut pts: Vec<f64> = breaks.iter().copied().filter(|b| (0.0..=1.0).contains(b)).collect();
        pts.push(0.0);
        pts.push(1.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let mut rule = CompositeRule::default();
        for win in pts.windows(2) {
            let (a, b) = (win[0], win[1]);
            let len = b - a;
            if len <= 0.0 {
                continue;
            }
            let pieces = ((len * min_panels as f64).ceil() as usize).max(1);
            let h = len / pieces as f64;
            for p in 0..pieces {
                let lo = a + p as f64 * h;
                for (x, w) in base.nodes.iter().zip(&base.weights) {
                    rule.nodes.push(lo + h * x);
                    rule.weights.push(h * w);
                }
            }
        }
        rule
    }

    pub fn uniform(panels: usize, base: &GaussLegendre) -> Self {
        Self::aligned(&[], panels, base)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}
