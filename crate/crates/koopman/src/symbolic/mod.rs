//! Exact rewriting in the Cuntz algebra O_N: linear combinations of
//! s_μ s_ν* with Gaussian-rational coefficients, in a canonical form.

mod faithful;
mod module;
mod syntax;

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;

pub use faithful::{faithfulness_check, represent, FaithfulnessWitness};
pub use module::{module_unitary_check, u_n, verify_basis, BasisVerdict, BasisWitness, ModuleMatrix};
pub use syntax::parse;

use crate::error::{Error, Result};

/// Gaussian rational.
pub type Coeff = Complex<BigRational>;

pub type Word = Vec<u8>;

pub fn coeff(re: i64, im: i64) -> Coeff {
    Complex::new(BigRational::from_integer(BigInt::from(re)), BigRational::from_integer(BigInt::from(im)))
}

pub fn ratio(num: i64, den: i64) -> Coeff {
    Complex::new(BigRational::new(num.into(), den.into()), BigRational::zero())
}

/// Σ c_{μν} s_μ s_ν* over an alphabet of size n, kept canonical.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CuntzElement {
    n: usize,
    terms: BTreeMap<(Word, Word), Coeff>,
}

impl CuntzElement {
    pub fn zero(n: usize) -> Self {
        CuntzElement { n, terms: BTreeMap::new() }
    }

    pub fn one(n: usize) -> Self {
        Self::word(n, &[], &[])
    }

    /// s_μ s_ν*. Panics on letters outside 1..=n.
    pub fn word(n: usize, mu: &[u8], nu: &[u8]) -> Self {
        Self::term(n, coeff(1, 0), mu, nu)
    }

    pub fn term(n: usize, c: Coeff, mu: &[u8], nu: &[u8]) -> Self {
        assert!(mu.iter().chain(nu).all(|&l| l >= 1 && l as usize <= n), "letter outside 1..={n}");
        let mut terms = BTreeMap::new();
        terms.insert((mu.to_vec(), nu.to_vec()), c);
        Self::from_terms(n, terms)
    }

    /// s_i.
    pub fn s(n: usize, i: u8) -> Self {
        Self::word(n, &[i], &[])
    }

    /// s_i*.
    pub fn s_adj(n: usize, i: u8) -> Self {
        Self::word(n, &[], &[i])
    }

    pub fn from_terms(n: usize, terms: BTreeMap<(Word, Word), Coeff>) -> Self {
        normalize(CuntzElement { n, terms })
    }

    pub fn alphabet(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<(Word, Word), Coeff> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        *self == Self::one(self.n)
    }

    pub fn scale(&self, c: &Coeff) -> Self {
        let terms = self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect();
        Self::from_terms(self.n, terms)
    }

    pub fn adjoint(&self) -> Self {
        let terms = self.terms.iter().map(|((m, v), c)| ((v.clone(), m.clone()), c.conj())).collect();
        Self::from_terms(self.n, terms)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut terms = self.terms.clone();
        for (k, c) in &other.terms {
            *terms.entry(k.clone()).or_insert_with(Coeff::zero) += c;
        }
        Ok(Self::from_terms(self.n, terms))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut terms: BTreeMap<(Word, Word), Coeff> = BTreeMap::new();
        for ((mu, nu), a) in &self.terms {
            for ((alpha, beta), b) in &other.terms {
                let Some(key) = word_product(mu, nu, alpha, beta) else { continue };
                *terms.entry(key).or_insert_with(Coeff::zero) += a * b;
            }
        }
        Ok(Self::from_terms(self.n, terms))
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.n == other.n { Ok(()) } else { Err(Error::AlphabetMismatch(self.n, other.n)) }
    }
}

/// (s_μ s_ν*)(s_α s_β*) by prefix comparison of ν and α.
fn word_product(mu: &[u8], nu: &[u8], alpha: &[u8], beta: &[u8]) -> Option<(Word, Word)> {
    if let Some(rest) = alpha.strip_prefix(nu) {
        Some(([mu, rest].concat(), beta.to_vec()))
    } else {
        nu.strip_prefix(alpha).map(|rest| (mu.to_vec(), [beta, rest].concat()))
    }
}

pub fn multiply(a: &CuntzElement, b: &CuntzElement) -> Result<CuntzElement> {
    a.try_mul(b)
}

type Term = ((Word, Word), Coeff);

/// Canonical form. Terms are grouped by the gauge degree |μ| − |ν|; each
/// group is expanded to a common depth with s_μ s_ν* = Σ_i s_{μi} s_{νi}*
/// and then collapsed bottom-up, so equal elements get equal term maps.
pub fn normalize(a: CuntzElement) -> CuntzElement {
    let n = a.n;
    let mut groups: BTreeMap<i64, Vec<Term>> = BTreeMap::new();
    for (k, c) in a.terms {
        if !c.is_zero() {
            groups.entry(k.0.len() as i64 - k.1.len() as i64).or_default().push((k, c));
        }
    }
    let mut terms = BTreeMap::new();
    for (_, group) in groups {
        let depth = group.iter().map(|((m, v), _)| m.len().min(v.len())).max().unwrap_or(0);
        let mut level: BTreeMap<(Word, Word), Coeff> = BTreeMap::new();
        for ((m, v), c) in group {
            let extra = depth - m.len().min(v.len());
            for tail in all_words(n, extra) {
                let key = ([m.as_slice(), &tail].concat(), [v.as_slice(), &tail].concat());
                *level.entry(key).or_insert_with(Coeff::zero) += c.clone();
            }
        }
        level.retain(|_, c| !c.is_zero());
        for lv in (1..=depth).rev() {
            level = collapse_level(n, level, lv);
        }
        terms.extend(level);
    }
    CuntzElement { n, terms }
}

/// Replace every complete sibling set {(μi, νi) : i = 1..n} with equal
/// coefficients by (μ, ν), among terms with min(|μ|, |ν|) = depth.
fn collapse_level(n: usize, terms: BTreeMap<(Word, Word), Coeff>, depth: usize) -> BTreeMap<(Word, Word), Coeff> {
    let mut siblings: BTreeMap<(Word, Word), Vec<(u8, Coeff)>> = BTreeMap::new();
    for ((m, v), c) in &terms {
        if m.len().min(v.len()) == depth && m.last() == v.last() {
            let parent = (m[..m.len() - 1].to_vec(), v[..v.len() - 1].to_vec());
            siblings.entry(parent).or_default().push((*m.last().unwrap(), c.clone()));
        }
    }
    let mut out = terms;
    for ((pm, pv), kids) in siblings {
        if kids.len() == n && kids.iter().all(|(_, c)| *c == kids[0].1) {
            for (i, _) in &kids {
                out.remove(&([pm.as_slice(), &[*i]].concat(), [pv.as_slice(), &[*i]].concat()));
            }
            out.insert((pm, pv), kids[0].1.clone());
        }
    }
    out
}

fn all_words(n: usize, len: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out.into_iter().flat_map(|w| (1..=n as u8).map(move |i| [w.as_slice(), &[i]].concat())).collect();
    }
    out
}

/// Every s_μ s_ν* with |μ| + |ν| ≤ max_total.
pub fn words_up_to(n: usize, max_total: usize) -> Vec<CuntzElement> {
    let mut out = Vec::new();
    for total in 0..=max_total {
        for lm in 0..=total {
            for mu in all_words(n, lm) {
                for nu in all_words(n, total - lm) {
                    out.push(CuntzElement::word(n, &mu, &nu));
                }
            }
        }
    }
    out
}

/// s_μ s_ν* with |μ|, |ν| ≤ max_len drawn uniformly per letter.
pub fn random_word<G: Rng>(n: usize, max_len: usize, rng: &mut G) -> CuntzElement {
    let draw = |rng: &mut G| {
        let len = rng.random_range(0..=max_len);
        (0..len).map(|_| rng.random_range(1..=n as u8)).collect::<Word>()
    };
    let mu = draw(rng);
    let nu = draw(rng);
    CuntzElement::word(n, &mu, &nu)
}

impl Add for &CuntzElement {
    type Output = CuntzElement;
    fn add(self, rhs: Self) -> CuntzElement {
        self.try_add(rhs).expect("alphabet mismatch")
    }
}

impl Sub for &CuntzElement {
    type Output = CuntzElement;
    fn sub(self, rhs: Self) -> CuntzElement {
        self.try_add(&-rhs).expect("alphabet mismatch")
    }
}

impl Neg for &CuntzElement {
    type Output = CuntzElement;
    fn neg(self) -> CuntzElement {
        self.scale(&coeff(-1, 0))
    }
}

impl Mul for &CuntzElement {
    type Output = CuntzElement;
    fn mul(self, rhs: Self) -> CuntzElement {
        self.try_mul(rhs).expect("alphabet mismatch")
    }
}

impl std::fmt::Display for CuntzElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&syntax::print(self))
    }
}

impl std::str::FromStr for CuntzElement {
    type Err = Error;

    /// Parses over the smallest alphabet containing every letter (at least 2).
    fn from_str(s: &str) -> Result<Self> {
        parse(s, syntax::max_letter(s).max(2))
    }
}

#[cfg(test)]
mod tests;
