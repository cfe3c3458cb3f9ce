//! Quadrature realization for the circle systems.
//!
//! Vectors and functions are closures θ ↦ f(θ) on [0, 1). Each closure carries
//! the depth of the cylinder partition its discontinuities live on, and inner
//! products use Gauss–Legendre panels aligned to that partition, so indicator
//! jumps never fall inside a panel.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use nalgebra::{Cholesky, DMatrix};

use super::{BasisSpec, Realization, TruncationBasis};
use crate::dynamics::{decompose, BranchDecomposition, SystemDescriptor};
use crate::error::{Error, Result};
use crate::quadrature::{CompositeRule, GaussLegendre, DEFAULT_ORDER};
use crate::scalar::{FloatScalar, C64};

type Eval<S> = Arc<dyn Fn(f64) -> S + Send + Sync>;

/// Dense Fourier coefficients c_lo, c_{lo+1}, ...
#[derive(Debug)]
struct Poly {
    lo: i64,
    coeffs: Vec<C64>,
}

/// Local maximizations started by `func_sup`.
const SUP_REFINE_STARTS: usize = 4;

/// Products of trigonometric polynomials stay explicit up to this many modes.
const MAX_POLY_LEN: usize = 1024;

/// A function on the circle together with the partition depth of its jumps.
/// Trigonometric polynomials keep their coefficients so that linear
/// combinations of them evaluate in one pass.
#[derive(Clone)]
pub struct CircleFn<S> {
    pub depth: usize,
    f: Eval<S>,
    poly: Option<Arc<Poly>>,
}

impl<S: FloatScalar> CircleFn<S> {
    pub fn new(depth: usize, f: impl Fn(f64) -> S + Send + Sync + 'static) -> Self {
        CircleFn { depth, f: Arc::new(f), poly: None }
    }

    fn from_poly(lo: i64, coeffs: Vec<C64>) -> Self {
        let poly = Arc::new(Poly { lo, coeffs });
        let p = Arc::clone(&poly);
        CircleFn { depth: 0, f: Arc::new(move |t| S::from_c64(trig_eval(p.lo, &p.coeffs, t))), poly: Some(poly) }
    }

    pub fn eval(&self, theta: f64) -> S {
        (self.f)(theta)
    }
}

impl<S> std::fmt::Debug for CircleFn<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CircleFn(depth {})", self.depth)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureOptions {
    /// Minimum panel count; nodes = panels × order.
    pub panels: usize,
    pub order: usize,
    /// Partition depths are capped so that at most this many breakpoints are used.
    pub max_breaks: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { panels: 256, order: DEFAULT_ORDER, max_breaks: 1024 }
    }
}

impl QuadratureOptions {
    /// Options with roughly `nodes` quadrature nodes.
    pub fn with_nodes(nodes: usize) -> Self {
        let d = QuadratureOptions::default();
        QuadratureOptions { panels: (nodes / d.order).max(1), ..d }
    }
}

/// Nodes with weights already multiplied by ρ.
struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

pub struct CircleRealization<S: FloatScalar> {
    sys: SystemDescriptor,
    decomp: Arc<BranchDecomposition>,
    options: QuadratureOptions,
    base: GaussLegendre,
    rules: Mutex<HashMap<usize, Arc<Rule>>>,
    _scalar: std::marker::PhantomData<S>,
}

fn cis(x: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * x)
}

/// Evaluate Σ c_k e^{2πikθ} by stepping powers of e^{2πiθ}.
fn trig_eval(lo: i64, coeffs: &[C64], theta: f64) -> C64 {
    let z = cis(theta);
    let mut p = cis(lo as f64 * theta);
    let mut acc = C64::new(0.0, 0.0);
    for c in coeffs {
        acc += c * p;
        p *= z;
    }
    acc
}

impl<S: FloatScalar> CircleRealization<S> {
    pub fn new(sys: SystemDescriptor, options: QuadratureOptions) -> Result<Self> {
        if !sys.kind.is_circle() {
            return Err(Error::Unsupported(format!("{} is not a circle system", sys.kind.name())));
        }
        let decomp = Arc::new(decompose(&sys)?);
        Ok(CircleRealization {
            sys,
            decomp,
            options,
            base: GaussLegendre::new(options.order),
            rules: Mutex::new(HashMap::new()),
            _scalar: std::marker::PhantomData,
        })
    }

    pub fn options(&self) -> QuadratureOptions {
        self.options
    }

    pub fn decomp_arc(&self) -> Arc<BranchDecomposition> {
        Arc::clone(&self.decomp)
    }

    pub fn func(&self, depth: usize, f: impl Fn(f64) -> S + Send + Sync + 'static) -> CircleFn<S> {
        CircleFn::new(depth, f)
    }

    /// e^{2πikθ}.
    pub fn mode(&self, k: i64) -> CircleFn<S> {
        CircleFn::from_poly(k, vec![C64::new(1.0, 0.0)])
    }

    /// Σ c_k e^{2πikθ}.
    pub fn trig_poly(&self, terms: &[(i64, C64)]) -> CircleFn<S> {
        if terms.is_empty() {
            return CircleFn::new(0, |_| S::zero());
        }
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut dense = vec![C64::new(0.0, 0.0); (hi - lo + 1) as usize];
        for &(k, c) in terms {
            dense[(k - lo) as usize] += c;
        }
        CircleFn::from_poly(lo, dense)
    }

    fn capped_depth(&self, depth: usize) -> usize {
        let n = self.sys.branch_count.max(2);
        let mut d = 0;
        while d < depth && n.pow(d as u32 + 1) <= self.options.max_breaks {
            d += 1;
        }
        d
    }

    fn rule(&self, depth: usize) -> Arc<Rule> {
        let depth = self.capped_depth(depth.max(1));
        if let Some(r) = self.rules.lock().unwrap().get(&depth) {
            return Arc::clone(r);
        }
        let breaks = self.decomp.breakpoints(depth);
        let CompositeRule { nodes, weights } = CompositeRule::aligned(&breaks, self.options.panels, &self.base);
        let weights = nodes.iter().zip(&weights).map(|(&x, &w)| w * self.decomp.rho(x)).collect();
        let rule = Arc::new(Rule { nodes, weights });
        self.rules.lock().unwrap().insert(depth, Arc::clone(&rule));
        rule
    }

    /// Number of nodes used at the given depth.
    pub fn node_count(&self, depth: usize) -> usize {
        self.rule(depth).nodes.len()
    }

    fn sample(&self, rule: &Rule, v: &CircleFn<S>) -> Vec<C64> {
        rule.nodes.iter().map(|&x| v.eval(x).to_c64()).collect()
    }

    fn weighted_fourier(&self, k_max: usize) -> Result<Vec<CircleFn<S>>> {
        let rho = self.decomp.density().cloned().unwrap_or_else(crate::dynamics::TrigDensity::uniform);
        let modes = BasisSpec::FourierModes { k_max, weighted: true }.modes();
        let m = modes.len();
        let gram = DMatrix::from_fn(m, m, |a, b| rho.coefficient(modes[a] - modes[b]));
        let chol = Cholesky::new(gram).ok_or_else(|| Error::InvalidSystem("density Gram matrix not positive".into()))?;
        let l = chol.l();
        // columns of L^{-*} give coefficients of the orthonormal vectors
        let l_inv = l.clone().try_inverse().ok_or_else(|| Error::InvalidSystem("singular Gram factor".into()))?;
        let coeffs = l_inv.adjoint();
        Ok((0..m)
            .map(|j| {
                let terms: Vec<(i64, C64)> = (0..=j).map(|i| (modes[i], coeffs[(i, j)])).collect();
                self.trig_poly(&terms)
            })
            .collect())
    }
}

impl<S: FloatScalar> Realization for CircleRealization<S> {
    type S = S;
    type Vector = CircleFn<S>;
    type Func = CircleFn<S>;

    fn system(&self) -> &SystemDescriptor {
        &self.sys
    }

    fn decomposition(&self) -> &BranchDecomposition {
        &self.decomp
    }

    fn basis(&self, spec: &BasisSpec) -> Result<TruncationBasis<Self>> {
        let vectors = match *spec {
            BasisSpec::FourierModes { k_max, weighted: false } if self.decomp.density().is_none() => {
                let k = k_max as i64;
                (-k..=k).map(|m| self.mode(m)).collect()
            }
            BasisSpec::FourierModes { k_max, weighted: true } if self.decomp.density().is_some() => self.weighted_fourier(k_max)?,
            _ => return Err(Error::BasisMismatch(format!("{} on {}", spec.label(), self.sys.kind.name()))),
        };
        Ok(TruncationBasis { spec: spec.clone(), vectors })
    }

    fn section(&self, i: usize, v: &CircleFn<S>) -> CircleFn<S> {
        let (d, v) = (Arc::clone(&self.decomp), v.clone());
        CircleFn::new(v.depth + 1, move |x| {
            if d.branch_of_angle(x) != i {
                return S::zero();
            }
            let scale = d.weight_at_preimage(x).sqrt().recip();
            v.eval(d.phi_angle(x)) * S::from_c64(C64::new(scale, 0.0))
        })
    }

    fn section_adj(&self, i: usize, v: &CircleFn<S>) -> CircleFn<S> {
        let (d, v) = (Arc::clone(&self.decomp), v.clone());
        CircleFn::new(v.depth.saturating_sub(1), move |y| {
            let x = d.psi_angle(i, y);
            v.eval(x) * S::from_c64(C64::new(d.weight_at_preimage(x).sqrt(), 0.0))
        })
    }

    fn compose(&self, v: &CircleFn<S>) -> CircleFn<S> {
        let (d, v) = (Arc::clone(&self.decomp), v.clone());
        CircleFn::new(v.depth + 1, move |x| v.eval(d.phi_angle(x)))
    }

    fn compose_adj(&self, v: &CircleFn<S>) -> CircleFn<S> {
        let (d, v) = (Arc::clone(&self.decomp), v.clone());
        CircleFn::new(v.depth.saturating_sub(1), move |y| {
            let mut acc = S::zero();
            for i in 0..d.branch_count() {
                let x = d.psi_angle(i, y);
                acc += v.eval(x) * S::from_c64(C64::new(d.weight_at_preimage(x), 0.0));
            }
            acc
        })
    }

    fn multiply(&self, f: &CircleFn<S>, v: &CircleFn<S>) -> CircleFn<S> {
        self.func_mul(f, v)
    }

    fn combine(&self, terms: Vec<(S, CircleFn<S>)>) -> CircleFn<S> {
        self.func_combine(terms)
    }

    fn zero_vector(&self) -> CircleFn<S> {
        CircleFn::from_poly(0, vec![C64::new(0.0, 0.0)])
    }

    fn inner(&self, a: &CircleFn<S>, b: &CircleFn<S>) -> S {
        let rule = self.rule(a.depth.max(b.depth));
        let mut acc = C64::new(0.0, 0.0);
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            acc += a.eval(x).to_c64().conj() * b.eval(x).to_c64() * w;
        }
        S::from_c64(acc)
    }

    fn gram(&self, rows: &[CircleFn<S>], cols: &[CircleFn<S>]) -> DMatrix<S> {
        let depth = rows.iter().chain(cols).map(|v| v.depth).max().unwrap_or(0);
        let rule = self.rule(depth);
        let q = rule.nodes.len();
        let a = DMatrix::from_fn(q, rows.len(), |_, _| C64::new(0.0, 0.0));
        let mut a = a;
        for (j, v) in rows.iter().enumerate() {
            for (t, z) in self.sample(&rule, v).into_iter().enumerate() {
                a[(t, j)] = z * rule.weights[t];
            }
        }
        let mut b = DMatrix::from_element(q, cols.len(), C64::new(0.0, 0.0));
        for (k, v) in cols.iter().enumerate() {
            for (t, z) in self.sample(&rule, v).into_iter().enumerate() {
                b[(t, k)] = z;
            }
        }
        (a.adjoint() * b).map(S::from_c64)
    }

    fn constant(&self, c: S) -> CircleFn<S> {
        CircleFn::from_poly(0, vec![c.to_c64()])
    }

    fn as_vector(&self, f: &CircleFn<S>) -> CircleFn<S> {
        f.clone()
    }

    fn as_func(&self, v: &CircleFn<S>) -> CircleFn<S> {
        v.clone()
    }

    fn func_mul(&self, a: &CircleFn<S>, b: &CircleFn<S>) -> CircleFn<S> {
        if let (Some(p), Some(q)) = (&a.poly, &b.poly) {
            if p.coeffs.len() + q.coeffs.len() <= MAX_POLY_LEN {
                let mut out = vec![C64::new(0.0, 0.0); p.coeffs.len() + q.coeffs.len() - 1];
                for (j, x) in p.coeffs.iter().enumerate() {
                    for (k, y) in q.coeffs.iter().enumerate() {
                        out[j + k] += x * y;
                    }
                }
                return CircleFn::from_poly(p.lo + q.lo, out);
            }
        }
        let (a, b) = (a.clone(), b.clone());
        CircleFn::new(a.depth.max(b.depth), move |x| a.eval(x) * b.eval(x))
    }

    fn func_combine(&self, terms: Vec<(S, CircleFn<S>)>) -> CircleFn<S> {
        if !terms.is_empty() && terms.iter().all(|(_, f)| f.poly.is_some()) {
            let polys: Vec<(C64, &Poly)> = terms.iter().map(|(c, f)| (c.to_c64(), f.poly.as_deref().unwrap())).collect();
            let lo = polys.iter().map(|(_, p)| p.lo).min().unwrap();
            let hi = polys.iter().map(|(_, p)| p.lo + p.coeffs.len() as i64 - 1).max().unwrap();
            let mut dense = vec![C64::new(0.0, 0.0); (hi - lo + 1) as usize];
            for (c, p) in polys {
                for (k, z) in p.coeffs.iter().enumerate() {
                    dense[(p.lo - lo) as usize + k] += c * z;
                }
            }
            return CircleFn::from_poly(lo, dense);
        }
        let depth = terms.iter().map(|(_, f)| f.depth).max().unwrap_or(0);
        CircleFn::new(depth, move |x| {
            let mut acc = S::zero();
            for (c, f) in &terms {
                acc += *c * f.eval(x);
            }
            acc
        })
    }

    fn func_conj(&self, a: &CircleFn<S>) -> CircleFn<S> {
        if let Some(p) = &a.poly {
            let hi = p.lo + p.coeffs.len() as i64 - 1;
            return CircleFn::from_poly(-hi, p.coeffs.iter().rev().map(|z| z.conj()).collect());
        }
        let a = a.clone();
        CircleFn::new(a.depth, move |x| a.eval(x).conjugate())
    }

    fn compose_phi(&self, a: &CircleFn<S>) -> CircleFn<S> {
        self.compose(a)
    }

    fn compose_psi(&self, i: usize, a: &CircleFn<S>) -> CircleFn<S> {
        let (d, a) = (Arc::clone(&self.decomp), a.clone());
        CircleFn::new(a.depth.saturating_sub(1), move |y| a.eval(d.psi_angle(i, y)))
    }

    fn indicator(&self, i: usize) -> CircleFn<S> {
        let d = Arc::clone(&self.decomp);
        CircleFn::new(1, move |x| if d.branch_of_angle(x) == i { S::one() } else { S::zero() })
    }

    fn weight(&self, i: usize) -> CircleFn<S> {
        let d = Arc::clone(&self.decomp);
        CircleFn::new(0, move |y| S::from_c64(C64::new(d.weight_angle(i, y), 0.0)))
    }

    fn sqrt_weight(&self, i: usize) -> CircleFn<S> {
        let d = Arc::clone(&self.decomp);
        CircleFn::new(0, move |y| S::from_c64(C64::new(d.weight_angle(i, y).sqrt(), 0.0)))
    }

    fn inv_sqrt_weight(&self, i: usize) -> CircleFn<S> {
        let d = Arc::clone(&self.decomp);
        CircleFn::new(0, move |y| S::from_c64(C64::new(d.weight_angle(i, y).sqrt().recip(), 0.0)))
    }

    fn density(&self) -> CircleFn<S> {
        let d = Arc::clone(&self.decomp);
        CircleFn::new(0, move |y| S::from_c64(C64::new(d.density_angle(y), 0.0)))
    }

    fn sqrt_density(&self) -> CircleFn<S> {
        let d = Arc::clone(&self.decomp);
        CircleFn::new(0, move |y| S::from_c64(C64::new(d.density_angle(y).sqrt(), 0.0)))
    }

    fn inv_sqrt_density(&self) -> CircleFn<S> {
        let d = Arc::clone(&self.decomp);
        CircleFn::new(0, move |y| S::from_c64(C64::new(d.density_angle(y).sqrt().recip(), 0.0)))
    }

    fn inv_density(&self) -> CircleFn<S> {
        let d = Arc::clone(&self.decomp);
        CircleFn::new(0, move |y| S::from_c64(C64::new(d.density_angle(y).recip(), 0.0)))
    }

    fn transfer(&self, a: &CircleFn<S>) -> CircleFn<S> {
        let (d, a) = (Arc::clone(&self.decomp), a.clone());
        CircleFn::new(a.depth.saturating_sub(1), move |y| {
            let mut acc = S::zero();
            let mut w = 0.0;
            for i in 0..d.branch_count() {
                let x = d.psi_angle(i, y);
                let u = d.weight_at_preimage(x);
                w += u;
                acc += a.eval(x) * S::from_c64(C64::new(u, 0.0));
            }
            acc * S::from_c64(C64::new(w.recip(), 0.0))
        })
    }

    fn func_distance(&self, a: &CircleFn<S>, b: &CircleFn<S>) -> f64 {
        let rule = self.rule(a.depth.max(b.depth));
        rule.nodes.iter().map(|&x| (a.eval(x).to_c64() - b.eval(x).to_c64()).norm()).fold(0.0, f64::max)
    }

    /// Node maximum refined by golden-section search around the largest samples.
    fn func_sup(&self, a: &CircleFn<S>) -> f64 {
        let rule = self.rule(a.depth);
        let abs = |x: f64| a.eval(x.rem_euclid(1.0)).to_c64().norm();
        let xs = &rule.nodes;
        let vals: Vec<f64> = xs.iter().map(|&x| abs(x)).collect();
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
        let mut best = vals.iter().copied().fold(0.0, f64::max);
        let invphi = (5f64.sqrt() - 1.0) / 2.0;
        for &k in order.iter().take(SUP_REFINE_STARTS) {
            let lo = if k == 0 { xs[xs.len() - 1] - 1.0 } else { xs[k - 1] };
            let hi = if k + 1 == xs.len() { xs[0] + 1.0 } else { xs[k + 1] };
            let (mut a0, mut b0) = (lo, hi);
            let mut c = b0 - invphi * (b0 - a0);
            let mut d = a0 + invphi * (b0 - a0);
            let (mut fc, mut fd) = (abs(c), abs(d));
            for _ in 0..60 {
                if fc > fd {
                    b0 = d;
                    d = c;
                    fd = fc;
                    c = b0 - invphi * (b0 - a0);
                    fc = abs(c);
                } else {
                    a0 = c;
                    c = d;
                    fc = fd;
                    d = a0 + invphi * (b0 - a0);
                    fd = abs(d);
                }
            }
            best = best.max(fc).max(fd);
        }
        best
    }

    fn func_real_range(&self, a: &CircleFn<S>) -> (f64, f64, f64) {
        let rule = self.rule(a.depth);
        rule.nodes.iter().map(|&x| a.eval(x).to_c64()).fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, im), z| {
            (lo.min(z.re), hi.max(z.re), f64::max(im, z.im.abs()))
        })
    }

    fn test_functions(&self) -> Vec<(String, CircleFn<S>)> {
        let one = C64::new(1.0, 0.0);
        vec![
            ("one".into(), self.mode(0)),
            ("e1".into(), self.mode(1)),
            ("cos".into(), self.trig_poly(&[(1, one * 0.5), (-1, one * 0.5)])),
            ("e-2+e3/2".into(), self.trig_poly(&[(-2, one), (3, one * 0.5)])),
        ]
    }
}
