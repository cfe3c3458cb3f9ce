use num_traits::Zero;

use super::{words_up_to, CuntzElement};
use crate::discretize::{apply, CylinderRealization, Op, Realization};
use crate::dynamics::SystemDescriptor;
use crate::error::{Error, Result};
use crate::scalar::{Scalar, Surd};

type Shift = CylinderRealization<Surd>;

/// The operator of an element in the full-shift representation. Only real
/// rational coefficients are representable over `Surd`.
pub fn represent(a: &CuntzElement) -> Result<Op<Shift>> {
    let mut terms = Vec::new();
    for ((mu, nu), c) in a.terms() {
        if !c.im.is_zero() {
            return Err(Error::Unsupported(format!("complex coefficient {c} over an exact real field")));
        }
        let chain = mu
            .iter()
            .map(|&l| Op::Section(l as usize - 1))
            .chain(nu.iter().rev().map(|&l| Op::SectionAdj(l as usize - 1)))
            .collect::<Vec<_>>();
        let word = if chain.is_empty() { Op::Identity } else { Op::Chain(chain) };
        terms.push(Op::Scale(Surd::rational(c.re.clone()), Box::new(word)));
    }
    Ok(Op::Sum(terms))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaithfulnessWitness {
    pub left: CuntzElement,
    pub right: CuntzElement,
    pub product: CuntzElement,
    /// Index of the depth-`depth` cylinder unit vector where the actions differ.
    pub vector: usize,
}

/// Compare symbolic products a·b with the composed shift operators on every
/// depth-`depth` cylinder unit vector, for all words with |μ| + |ν| ≤ max_total.
/// Returns the first disagreement.
pub fn faithfulness_check(n: usize, max_total: usize, depth: usize) -> Result<Option<FaithfulnessWitness>> {
    let r = Shift::new(SystemDescriptor::full_shift(n)?)?;
    let words = words_up_to(n, max_total);
    let units: Vec<_> = (0..n.pow(depth as u32)).map(|w| r.unit(depth, w, 0)).collect();
    let ops = words.iter().map(represent).collect::<Result<Vec<_>>>()?;
    // images[a][v] = a·e_v
    let images: Vec<Vec<_>> = ops.iter().map(|op| units.iter().map(|v| apply(&r, op, v)).collect()).collect();
    for (ia, a) in words.iter().enumerate() {
        for (ib, b) in words.iter().enumerate() {
            let product = a.try_mul(b)?;
            let op = represent(&product)?;
            for (iv, _) in units.iter().enumerate() {
                let lhs = apply(&r, &ops[ia], &images[ib][iv]);
                let rhs = apply(&r, &op, &units[iv]);
                let diff = r.combine(vec![(Surd::from_int(1), lhs), (Surd::from_int(-1), rhs)]);
                if !r.inner(&diff, &diff).is_zero() {
                    return Ok(Some(FaithfulnessWitness { left: a.clone(), right: b.clone(), product, vector: iv }));
                }
            }
        }
    }
    Ok(None)
}
