//! Operator expressions over a realization.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{OperatorMatrix, Realization, TruncationBasis};

/// A finite-rank operator given by a matrix between two truncation bases,
/// acting as Σ_jk T_jk e_j ⟨e'_k, ·⟩.
pub struct FiniteOp<R: Realization> {
    pub matrix: DMatrix<R::S>,
    pub domain: TruncationBasis<R>,
    pub codomain: TruncationBasis<R>,
}

/// Expression tree for bounded operators on L²(X, μ).
pub enum Op<R: Realization> {
    Identity,
    Section(usize),
    SectionAdj(usize),
    Compose,
    ComposeAdj,
    Mult(R::Func),
    Finite(Arc<FiniteOp<R>>),
    Scale(R::S, Box<Op<R>>),
    Sum(Vec<Op<R>>),
    /// Chain([A, B, C]) = A ∘ B ∘ C.
    Chain(Vec<Op<R>>),
}

impl<R: Realization> Clone for Op<R> {
    fn clone(&self) -> Self {
        match self {
            Op::Identity => Op::Identity,
            Op::Section(i) => Op::Section(*i),
            Op::SectionAdj(i) => Op::SectionAdj(*i),
            Op::Compose => Op::Compose,
            Op::ComposeAdj => Op::ComposeAdj,
            Op::Mult(f) => Op::Mult(f.clone()),
            Op::Finite(t) => Op::Finite(Arc::clone(t)),
            Op::Scale(c, a) => Op::Scale(c.clone(), a.clone()),
            Op::Sum(v) => Op::Sum(v.clone()),
            Op::Chain(v) => Op::Chain(v.clone()),
        }
    }
}

impl<R: Realization> std::fmt::Debug for Op<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Op::Identity => write!(f, "I"),
            Op::Section(i) => write!(f, "S{}", i + 1),
            Op::SectionAdj(i) => write!(f, "S{}*", i + 1),
            Op::Compose => write!(f, "C"),
            Op::ComposeAdj => write!(f, "C*"),
            Op::Mult(_) => write!(f, "M"),
            Op::Finite(t) => write!(f, "T[{}x{}]", t.matrix.nrows(), t.matrix.ncols()),
            Op::Scale(_, a) => write!(f, "c·{a:?}"),
            Op::Sum(v) => f.debug_list().entries(v).finish(),
            Op::Chain(v) => {
                for (k, a) in v.iter().enumerate() {
                    if k > 0 {
                        write!(f, "∘")?;
                    }
                    write!(f, "{a:?}")?;
                }
                Ok(())
            }
        }
    }
}

impl<R: Realization> Op<R> {
    pub fn finite(matrix: DMatrix<R::S>, domain: TruncationBasis<R>, codomain: TruncationBasis<R>) -> Self {
        assert_eq!(matrix.nrows(), codomain.size());
        assert_eq!(matrix.ncols(), domain.size());
        Op::Finite(Arc::new(FiniteOp { matrix, domain, codomain }))
    }

    /// Adjoint, built structurally.
    pub fn adjoint(&self, r: &R) -> Self {
        match self {
            Op::Identity => Op::Identity,
            Op::Section(i) => Op::SectionAdj(*i),
            Op::SectionAdj(i) => Op::Section(*i),
            Op::Compose => Op::ComposeAdj,
            Op::ComposeAdj => Op::Compose,
            Op::Mult(f) => Op::Mult(r.func_conj(f)),
            Op::Finite(t) => Op::finite(super::matrix::adjoint(&t.matrix), t.codomain.clone(), t.domain.clone()),
            Op::Scale(c, a) => Op::Scale(crate::scalar::Scalar::conj(c), Box::new(a.adjoint(r))),
            Op::Sum(v) => Op::Sum(v.iter().map(|a| a.adjoint(r)).collect()),
            Op::Chain(v) => Op::Chain(v.iter().rev().map(|a| a.adjoint(r)).collect()),
        }
    }

    pub fn then(self, rhs: Op<R>) -> Op<R> {
        Op::Chain(vec![self, rhs])
    }
}

pub fn apply<R: Realization>(r: &R, op: &Op<R>, v: &R::Vector) -> R::Vector {
    match op {
        Op::Identity => v.clone(),
        Op::Section(i) => r.section(*i, v),
        Op::SectionAdj(i) => r.section_adj(*i, v),
        Op::Compose => r.compose(v),
        Op::ComposeAdj => r.compose_adj(v),
        Op::Mult(f) => r.multiply(f, v),
        Op::Finite(t) => {
            let coords = t.domain.coordinates(r, v);
            let out: Vec<R::S> = (0..t.matrix.nrows())
                .map(|j| {
                    let mut acc = <R::S as num_traits::Zero>::zero();
                    for (k, c) in coords.iter().enumerate() {
                        acc += t.matrix[(j, k)].clone() * c.clone();
                    }
                    acc
                })
                .collect();
            t.codomain.synthesize(r, &out)
        }
        Op::Scale(c, a) => r.combine(vec![(c.clone(), apply(r, a, v))]),
        Op::Sum(terms) => {
            let one = <R::S as num_traits::One>::one();
            r.combine(terms.iter().map(|a| (one.clone(), apply(r, a, v))).collect())
        }
        Op::Chain(ops) => ops.iter().rev().fold(v.clone(), |acc, a| apply(r, a, &acc)),
    }
}

/// `apply` over many vectors at once; finite-rank factors take all their
/// coordinates from a single Gram matrix.
pub fn apply_many<R: Realization>(r: &R, op: &Op<R>, vs: &[R::Vector]) -> Vec<R::Vector> {
    match op {
        Op::Finite(t) => {
            let coords = r.gram(&t.domain.vectors, vs);
            let out = crate::discretize::matrix::matmul(&t.matrix, &coords);
            (0..vs.len()).map(|k| t.codomain.synthesize(r, out.column(k).as_slice())).collect()
        }
        Op::Scale(c, a) => apply_many(r, a, vs).into_iter().map(|v| r.combine(vec![(c.clone(), v)])).collect(),
        Op::Sum(terms) => {
            let one = <R::S as num_traits::One>::one();
            let images: Vec<Vec<R::Vector>> = terms.iter().map(|a| apply_many(r, a, vs)).collect();
            (0..vs.len()).map(|k| r.combine(images.iter().map(|im| (one.clone(), im[k].clone())).collect())).collect()
        }
        Op::Chain(ops) => ops.iter().rev().fold(vs.to_vec(), |acc, a| apply_many(r, a, &acc)),
        _ => vs.iter().map(|v| apply(r, op, v)).collect(),
    }
}

/// Matrix ⟨codomain_j, op(domain_k)⟩.
pub fn compress<R: Realization>(
    r: &R,
    op: &Op<R>,
    codomain: &TruncationBasis<R>,
    domain: &TruncationBasis<R>,
) -> OperatorMatrix<R::S> {
    let images = apply_many(r, op, &domain.vectors);
    OperatorMatrix::new(domain.spec.clone(), codomain.spec.clone(), r.gram(&codomain.vectors, &images))
}
