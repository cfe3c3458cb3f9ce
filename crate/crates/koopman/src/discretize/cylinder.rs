//! Exact realization for the full shift and the shift × rotation product.
//!
//! Vectors are finite sums of e_w ⊗ e_k with e_w = N^{|w|/2} χ_{[w]} (unit
//! vectors in L²) and e_k(t) = e^{2πikt}; for the pure shift only k = 0 occurs.
//! Functions are stored by their values on cylinders, Σ F_{w,k} χ_{[w]} e_k.
//! Every operation is a finite sum, so with an exact scalar every compression
//! is exact.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_traits::Zero;

use super::{BasisSpec, Realization, TruncationBasis};
use crate::dynamics::{decompose, BranchDecomposition, SystemDescriptor, SystemKind};
use crate::error::{Error, Result};
use crate::scalar::{Scalar, C64};

type Coeffs<S> = BTreeMap<(usize, i64), S>;

/// Element of L² in the orthonormal cylinder basis at a given depth.
#[derive(Clone, Debug, PartialEq)]
pub struct CylVec<S: Scalar> {
    pub depth: usize,
    pub coeffs: Coeffs<S>,
}

/// Bounded function constant on depth-`depth` cylinders (times modes in t).
#[derive(Clone, Debug, PartialEq)]
pub struct CylFn<S: Scalar> {
    pub depth: usize,
    pub values: Coeffs<S>,
}

/// Samples of the rotation factor used when taking sup norms.
const TORUS_SAMPLES: usize = 64;

pub struct CylinderRealization<S: Scalar> {
    sys: SystemDescriptor,
    decomp: BranchDecomposition,
    n: usize,
    tau: Option<f64>,
    sqrt_n: S,
    inv_sqrt_n: S,
}

fn insert<S: Scalar>(map: &mut Coeffs<S>, key: (usize, i64), c: S) {
    if c.is_zero() {
        return;
    }
    let e = map.entry(key).or_insert_with(S::zero);
    *e += c;
    if e.is_zero() {
        map.remove(&key);
    }
}

impl<S: Scalar> CylinderRealization<S> {
    pub fn new(sys: SystemDescriptor) -> Result<Self> {
        let decomp = decompose(&sys)?;
        let tau = match sys.kind {
            SystemKind::FullShift => None,
            SystemKind::ProductShiftRotation => {
                let tau = sys.rotation().expect("rotation parameter");
                if S::try_from_c64(C64::new(1.0, 0.0)).is_none() {
                    return Err(Error::Unsupported("rotation phases need a floating scalar".into()));
                }
                Some(tau)
            }
            k => return Err(Error::Unsupported(format!("{} has no cylinder realization", k.name()))),
        };
        let n = sys.branch_count;
        let sqrt_n = S::sqrt_nat(n as u64);
        let inv_sqrt_n = sqrt_n.inv().expect("N > 0");
        Ok(CylinderRealization { sys, decomp, n, tau, sqrt_n, inv_sqrt_n })
    }

    pub fn symbols(&self) -> usize {
        self.n
    }

    fn words(&self, depth: usize) -> usize {
        self.n.pow(depth as u32)
    }

    /// e^{2πikτ}, or 1 for the pure shift.
    fn phase(&self, k: i64) -> S {
        match self.tau {
            Some(tau) if k != 0 => S::try_from_c64(C64::from_polar(1.0, 2.0 * PI * k as f64 * tau)).expect("float"),
            _ => S::one(),
        }
    }

    fn refine(&self, map: &Coeffs<S>, from: usize, to: usize, scale: Option<&S>) -> Coeffs<S> {
        let mut cur = map.clone();
        for _ in from..to {
            let mut next = Coeffs::new();
            for (&(w, k), c) in &cur {
                let c = match scale {
                    Some(s) => c.clone() * s.clone(),
                    None => c.clone(),
                };
                for j in 0..self.n {
                    next.insert((w * self.n + j, k), c.clone());
                }
            }
            cur = next;
        }
        cur
    }

    fn vec_at(&self, v: &CylVec<S>, depth: usize) -> Coeffs<S> {
        self.refine(&v.coeffs, v.depth, depth, Some(&self.inv_sqrt_n))
    }

    fn fn_at(&self, f: &CylFn<S>, depth: usize) -> Coeffs<S> {
        self.refine(&f.values, f.depth, depth, None)
    }

    /// A function from its values on depth-`depth` cylinders, indexed as words.
    pub fn cylinder_function(&self, depth: usize, values: impl IntoIterator<Item = (usize, S)>) -> CylFn<S> {
        let mut map = Coeffs::new();
        for (w, c) in values {
            assert!(w < self.words(depth), "cylinder index out of range");
            insert(&mut map, (w, 0), c);
        }
        CylFn { depth, values: map }
    }

    /// A function Σ F_{w,k} χ_{[w]} e_k.
    pub fn product_function(&self, depth: usize, values: impl IntoIterator<Item = ((usize, i64), S)>) -> CylFn<S> {
        let mut map = Coeffs::new();
        for (key, c) in values {
            insert(&mut map, key, c);
        }
        CylFn { depth, values: map }
    }

    /// Indicator of [w] for a 0-based word index at `depth`.
    pub fn word_indicator(&self, depth: usize, w: usize) -> CylFn<S> {
        self.cylinder_function(depth, [(w, S::one())])
    }

    /// Unit vector e_w ⊗ e_k.
    pub fn unit(&self, depth: usize, w: usize, k: i64) -> CylVec<S> {
        let mut coeffs = Coeffs::new();
        coeffs.insert((w, k), S::one());
        CylVec { depth, coeffs }
    }

    /// Sampled values per word on the common depth, as complex doubles.
    fn samples(&self, f: &Coeffs<S>, depth: usize) -> Vec<C64> {
        let grid: Vec<f64> = if self.tau.is_some() {
            (0..TORUS_SAMPLES).map(|j| j as f64 / TORUS_SAMPLES as f64).collect()
        } else {
            vec![0.0]
        };
        let mut per_word: BTreeMap<usize, Vec<(i64, C64)>> = BTreeMap::new();
        for (&(w, k), c) in f {
            per_word.entry(w).or_default().push((k, c.to_c64()));
        }
        let mut out = Vec::new();
        if per_word.len() < self.words(depth) {
            out.push(C64::zero());
        }
        for terms in per_word.values() {
            for &t in &grid {
                out.push(terms.iter().map(|&(k, c)| c * C64::from_polar(1.0, 2.0 * PI * k as f64 * t)).sum());
            }
        }
        out
    }
}

impl<S: Scalar> Realization for CylinderRealization<S> {
    type S = S;
    type Vector = CylVec<S>;
    type Func = CylFn<S>;

    fn system(&self) -> &SystemDescriptor {
        &self.sys
    }

    fn decomposition(&self) -> &BranchDecomposition {
        &self.decomp
    }

    fn basis(&self, spec: &BasisSpec) -> Result<TruncationBasis<Self>> {
        let vectors = match *spec {
            BasisSpec::CylinderDepth { symbols, depth } if symbols == self.n => {
                (0..self.words(depth)).map(|w| self.unit(depth, w, 0)).collect()
            }
            BasisSpec::TensorProduct { symbols, depth, k_max } if symbols == self.n && self.tau.is_some() => {
                let k = k_max as i64;
                (0..self.words(depth)).flat_map(|w| (-k..=k).map(move |m| (w, m))).map(|(w, m)| self.unit(depth, w, m)).collect()
            }
            _ => return Err(Error::BasisMismatch(format!("{} on {}", spec.label(), self.sys.kind.name()))),
        };
        Ok(TruncationBasis { spec: spec.clone(), vectors })
    }

    fn section(&self, i: usize, v: &CylVec<S>) -> CylVec<S> {
        let offset = i * self.words(v.depth);
        let mut coeffs = Coeffs::new();
        for (&(w, k), c) in &v.coeffs {
            insert(&mut coeffs, (offset + w, k), c.clone() * self.phase(k));
        }
        CylVec { depth: v.depth + 1, coeffs }
    }

    fn section_adj(&self, i: usize, v: &CylVec<S>) -> CylVec<S> {
        let depth = v.depth.max(1);
        let block = self.words(depth - 1);
        let mut coeffs = Coeffs::new();
        for (&(w, k), c) in &self.vec_at(v, depth) {
            if w / block == i {
                insert(&mut coeffs, (w % block, k), c.clone() * self.phase(k).conj());
            }
        }
        CylVec { depth: depth - 1, coeffs }
    }

    fn compose(&self, v: &CylVec<S>) -> CylVec<S> {
        let block = self.words(v.depth);
        let mut coeffs = Coeffs::new();
        for (&(w, k), c) in &v.coeffs {
            let c = c.clone() * self.phase(k) * self.inv_sqrt_n.clone();
            for j in 0..self.n {
                insert(&mut coeffs, (j * block + w, k), c.clone());
            }
        }
        CylVec { depth: v.depth + 1, coeffs }
    }

    fn compose_adj(&self, v: &CylVec<S>) -> CylVec<S> {
        let depth = v.depth.max(1);
        let block = self.words(depth - 1);
        let mut coeffs = Coeffs::new();
        for (&(w, k), c) in &self.vec_at(v, depth) {
            insert(&mut coeffs, (w % block, k), c.clone() * self.phase(k).conj() * self.inv_sqrt_n.clone());
        }
        CylVec { depth: depth - 1, coeffs }
    }

    fn multiply(&self, f: &CylFn<S>, v: &CylVec<S>) -> CylVec<S> {
        let depth = f.depth.max(v.depth);
        let (fv, vv) = (self.fn_at(f, depth), self.vec_at(v, depth));
        let mut by_word: BTreeMap<usize, Vec<(i64, &S)>> = BTreeMap::new();
        for ((w, m), c) in &fv {
            by_word.entry(*w).or_default().push((*m, c));
        }
        let mut coeffs = Coeffs::new();
        for (&(w, k), c) in &vv {
            if let Some(fs) = by_word.get(&w) {
                for &(m, fc) in fs {
                    insert(&mut coeffs, (w, k + m), fc.clone() * c.clone());
                }
            }
        }
        CylVec { depth, coeffs }
    }

    fn combine(&self, terms: Vec<(S, CylVec<S>)>) -> CylVec<S> {
        let depth = terms.iter().map(|(_, v)| v.depth).max().unwrap_or(0);
        let mut coeffs = Coeffs::new();
        for (a, v) in &terms {
            if a.is_zero() {
                continue;
            }
            for (key, c) in self.vec_at(v, depth) {
                insert(&mut coeffs, key, a.clone() * c);
            }
        }
        CylVec { depth, coeffs }
    }

    fn zero_vector(&self) -> CylVec<S> {
        CylVec { depth: 0, coeffs: Coeffs::new() }
    }

    fn inner(&self, a: &CylVec<S>, b: &CylVec<S>) -> S {
        let depth = a.depth.max(b.depth);
        let (av, bv) = (self.vec_at(a, depth), self.vec_at(b, depth));
        let mut acc = S::zero();
        for (key, c) in &av {
            if let Some(d) = bv.get(key) {
                acc += c.conj() * d.clone();
            }
        }
        acc
    }

    fn constant(&self, c: S) -> CylFn<S> {
        self.cylinder_function(0, [(0, c)])
    }

    fn as_vector(&self, f: &CylFn<S>) -> CylVec<S> {
        let scale = (0..f.depth).fold(S::one(), |acc, _| acc * self.inv_sqrt_n.clone());
        CylVec { depth: f.depth, coeffs: f.values.iter().map(|(k, c)| (*k, c.clone() * scale.clone())).collect() }
    }

    fn as_func(&self, v: &CylVec<S>) -> CylFn<S> {
        let scale = (0..v.depth).fold(S::one(), |acc, _| acc * self.sqrt_n.clone());
        CylFn { depth: v.depth, values: v.coeffs.iter().map(|(k, c)| (*k, c.clone() * scale.clone())).collect() }
    }

    fn func_mul(&self, a: &CylFn<S>, b: &CylFn<S>) -> CylFn<S> {
        let depth = a.depth.max(b.depth);
        let (av, bv) = (self.fn_at(a, depth), self.fn_at(b, depth));
        let mut values = Coeffs::new();
        for (&(w, m), c) in &av {
            for (&(_, k), d) in bv.range((w, i64::MIN)..=(w, i64::MAX)) {
                insert(&mut values, (w, m + k), c.clone() * d.clone());
            }
        }
        CylFn { depth, values }
    }

    fn func_combine(&self, terms: Vec<(S, CylFn<S>)>) -> CylFn<S> {
        let depth = terms.iter().map(|(_, f)| f.depth).max().unwrap_or(0);
        let mut values = Coeffs::new();
        for (a, f) in &terms {
            for (key, c) in self.fn_at(f, depth) {
                insert(&mut values, key, a.clone() * c);
            }
        }
        CylFn { depth, values }
    }

    fn func_conj(&self, a: &CylFn<S>) -> CylFn<S> {
        CylFn { depth: a.depth, values: a.values.iter().map(|(&(w, k), c)| ((w, -k), c.conj())).collect() }
    }

    fn compose_phi(&self, a: &CylFn<S>) -> CylFn<S> {
        let block = self.words(a.depth);
        let mut values = Coeffs::new();
        for (&(w, k), c) in &a.values {
            let c = c.clone() * self.phase(k);
            for j in 0..self.n {
                insert(&mut values, (j * block + w, k), c.clone());
            }
        }
        CylFn { depth: a.depth + 1, values }
    }

    fn compose_psi(&self, i: usize, a: &CylFn<S>) -> CylFn<S> {
        let depth = a.depth.max(1);
        let block = self.words(depth - 1);
        let mut values = Coeffs::new();
        for (&(w, k), c) in &self.fn_at(a, depth) {
            if w / block == i {
                insert(&mut values, (w % block, k), c.clone() * self.phase(k).conj());
            }
        }
        CylFn { depth: depth - 1, values }
    }

    fn indicator(&self, i: usize) -> CylFn<S> {
        self.word_indicator(1, i)
    }

    fn weight(&self, _i: usize) -> CylFn<S> {
        self.constant(S::from_ratio(1, self.n as i64))
    }

    fn sqrt_weight(&self, _i: usize) -> CylFn<S> {
        self.constant(self.inv_sqrt_n.clone())
    }

    fn inv_sqrt_weight(&self, _i: usize) -> CylFn<S> {
        self.constant(self.sqrt_n.clone())
    }

    fn density(&self) -> CylFn<S> {
        self.constant(S::one())
    }

    fn sqrt_density(&self) -> CylFn<S> {
        self.constant(S::one())
    }

    fn inv_sqrt_density(&self) -> CylFn<S> {
        self.constant(S::one())
    }

    fn inv_density(&self) -> CylFn<S> {
        self.constant(S::one())
    }

    fn func_distance(&self, a: &CylFn<S>, b: &CylFn<S>) -> f64 {
        let diff = self.func_combine(vec![(S::one(), a.clone()), (-S::one(), b.clone())]);
        if diff.values.is_empty() {
            return 0.0;
        }
        self.samples(&diff.values, diff.depth).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn func_real_range(&self, a: &CylFn<S>) -> (f64, f64, f64) {
        let s = self.samples(&a.values, a.depth);
        s.iter().fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, im), z| (lo.min(z.re), hi.max(z.re), im.max(z.im.abs())))
    }

    fn test_functions(&self) -> Vec<(String, CylFn<S>)> {
        let n = self.n;
        let mut out = vec![
            ("one".to_string(), self.constant(S::one())),
            ("chi[1]".to_string(), self.word_indicator(1, 0)),
            (
                "chi[1,2]+2chi[2,1]".to_string(),
                self.cylinder_function(2, [(1, S::one()), (n, S::from_int(2))]),
            ),
            (
                "graded-depth-3".to_string(),
                self.cylinder_function(3, (0..self.words(3)).map(|w| (w, S::from_ratio(w as i64 % 5 - 2, 3)))),
            ),
        ];
        if self.tau.is_some() {
            out.push(("e1(t)".into(), self.product_function(0, [((0, 1), S::one())])));
            out.push(("chi[2]e-1(t)".into(), self.product_function(1, [((1, -1), S::one())])));
        }
        out
    }
}
