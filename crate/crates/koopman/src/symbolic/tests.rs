use std::collections::BTreeMap;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::discretize::{CylinderRealization, Op, Realization};
use crate::error::Error;
use crate::scalar::Scalar;
use num_complex::Complex;
use num_rational::BigRational;
use crate::scalar::Surd;

fn s(i: u8) -> CuntzElement {
    CuntzElement::s(2, i)
}

fn sa(i: u8) -> CuntzElement {
    CuntzElement::s_adj(2, i)
}

fn w(mu: &[u8], nu: &[u8]) -> CuntzElement {
    CuntzElement::word(2, mu, nu)
}

fn one() -> CuntzElement {
    CuntzElement::one(2)
}

#[test]
fn cuntz_relations() {
    assert!((&sa(1) * &s(2)).is_zero());
    assert!((&sa(1) * &s(1)).is_one());
    let proj = &(&s(1) * &sa(1)) + &(&s(2) * &sa(2));
    assert_eq!(proj, one());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let x = random_word(2, 4, &mut rng);
        assert_eq!(&proj * &x, x);
    }
}

#[test]
fn collapse_examples() {
    let a = &w(&[1, 1], &[1, 1]) + &w(&[1, 2], &[1, 2]);
    assert_eq!(a, w(&[1], &[1]));
    assert_eq!(a.terms().len(), 1);
    let single = w(&[2, 1], &[1]);
    assert_eq!(normalize(single.clone()), single);
    assert_eq!(single.terms().keys().next().unwrap(), &(vec![2, 1], vec![1]));
}

#[test]
fn collapse_matches_the_shift_matrices() {
    // s_{11}s_{11}* + s_{12}s_{12}* and s_1s_1* act identically on depth-3 cylinders.
    let r = CylinderRealization::<Surd>::new(crate::dynamics::SystemDescriptor::full_shift(2).unwrap()).unwrap();
    let b = r.basis(&crate::discretize::BasisSpec::CylinderDepth { symbols: 2, depth: 3 }).unwrap();
    let raw = Op::Sum(vec![
        Op::Chain(vec![Op::Section(0), Op::Section(0), Op::SectionAdj(0), Op::SectionAdj(0)]),
        Op::Chain(vec![Op::Section(0), Op::Section(1), Op::SectionAdj(1), Op::SectionAdj(0)]),
    ]);
    let collapsed = represent(&w(&[1], &[1])).unwrap();
    let m1 = crate::discretize::compress(&r, &raw, &b, &b).entries;
    let m2 = crate::discretize::compress(&r, &collapsed, &b, &b).entries;
    assert_eq!(m1, m2);
    let diag = DMatrix::from_fn(8, 8, |i, j| if i == j && i < 4 { Surd::from_int(1) } else { Surd::from_int(0) });
    assert_eq!(m2, diag);
}

#[test]
fn canonical_form_is_unique_across_levels() {
    // 1 + s_1s_1* expands to 2 s_1s_1* + s_2s_2*.
    let a = &one() + &w(&[1], &[1]);
    let b = &w(&[1], &[1]).scale(&coeff(2, 0)) + &w(&[2], &[2]);
    assert_eq!(a, b);
    let c = &(&w(&[1, 1], &[1, 1]) + &w(&[1, 2], &[1, 2])).scale(&coeff(2, 0)) + &w(&[2], &[2]);
    assert_eq!(a, c);
}

#[test]
fn alphabet_mismatch_is_an_error() {
    let a = CuntzElement::s(2, 1);
    let b = CuntzElement::s(3, 3);
    assert_eq!(a.try_mul(&b), Err(Error::AlphabetMismatch(2, 3)));
    assert!(a.try_add(&b).is_err());
}

#[test]
fn parse_examples() {
    let a = parse("(3/2+1/2i)*s[1,2]·s*[2]", 2).unwrap();
    assert_eq!(a, CuntzElement::term(2, Complex::new(BigRational::new(3.into(), 2.into()), BigRational::new(1.into(), 2.into())), &[1, 2], &[2]));
    assert_eq!(parse("s[1]·s*[1] + s[2]·s*[2]", 2).unwrap(), one());
    assert_eq!(parse("s*[1].s[2]", 2).unwrap(), CuntzElement::zero(2));
    assert_eq!(parse("1 - s[1]·s*[1]", 2).unwrap(), w(&[2], &[2]));
    assert_eq!(parse("2*s[1] + (-1/2i)", 2).unwrap(), &s(1).scale(&coeff(2, 0)) + &one().scale(&ratio(-1, 2).mul(Complex::i())));
    assert_eq!(parse("0", 2).unwrap(), CuntzElement::zero(2));
    assert!(matches!(parse("s[3]", 2), Err(Error::Parse { pos: 2, .. })));
    assert!(parse("s[1] +", 2).is_err());
    assert!(parse("s[1] x", 2).is_err());
    assert_eq!("s[3]·s*[1]".parse::<CuntzElement>().unwrap().alphabet(), 3);
}

#[test]
fn printing_round_trips() {
    for text in ["(3/2+1/2i)*s[1,2]·s*[2]", "1", "0", "(-1)*s[2]", "(1/3-2i)*s*[1,1]", "(7)"] {
        let a = parse(text, 2).unwrap();
        let printed = a.to_string();
        assert_eq!(parse(&printed, 2).unwrap(), a, "{text} -> {printed}");
    }
    assert_eq!(parse("(3/2+1/2i)*s[1,2]·s*[2]", 2).unwrap().to_string(), "(3/2+1/2i)*s[1,2]·s*[2]");
}

#[test]
fn basis_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let xs: Vec<_> = (0..100).map(|_| random_word(2, 4, &mut rng)).collect();
    assert!(verify_basis(&[one()], &xs).unwrap().holds());
    assert!(verify_basis(&[s(1), s(2)], &xs).unwrap().holds());
    assert!(verify_basis(&[s(1), s(2)], &[w(&[2], &[1])]).unwrap().holds());
    match verify_basis(&[s(1)], &[s(2)]).unwrap() {
        BasisVerdict::Fails(BasisWitness::Reconstruction { x, got }) => {
            assert_eq!(x, s(2));
            assert!(got.is_zero());
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        verify_basis(&[s(1), s(1)], &[]).unwrap(),
        BasisVerdict::Fails(BasisWitness::Inner { i: 0, j: 1, .. })
    ));
}

#[test]
fn unitary_rows() {
    let u2 = ModuleMatrix::row(vec![s(1), s(2)]).unwrap();
    assert!(module_unitary_check(&u2).unwrap());
    assert_eq!(u_n(2), u2);
    assert_eq!(u_n(3), ModuleMatrix::row(vec![s(1), w(&[2, 1], &[]), w(&[2, 2], &[])]).unwrap());
    for n in 2..=4 {
        assert!(module_unitary_check(&u_n(n)).unwrap(), "U_{n}");
    }
    let bad = ModuleMatrix::row(vec![s(1), s(1)]).unwrap();
    assert!(!module_unitary_check(&bad).unwrap());
    assert!(ModuleMatrix::new(0, 1, vec![]).is_err());
}

#[test]
fn symbolic_products_agree_with_the_shift_representation() {
    assert_eq!(faithfulness_check(2, 3, 3).unwrap(), None);
}

#[test]
fn faithfulness_check_detects_a_wrong_rule() {
    // Sanity of the harness: s_1 s_1* is not the identity operator.
    let r = CylinderRealization::<Surd>::new(crate::dynamics::SystemDescriptor::full_shift(2).unwrap()).unwrap();
    let v = r.unit(2, 3, 0);
    let p = represent(&w(&[1], &[1])).unwrap();
    assert_ne!(crate::discretize::apply(&r, &p, &v), v);
}

fn element() -> impl Strategy<Value = CuntzElement> {
    let word = prop::collection::vec(1u8..=2, 0..3);
    let term = (word.clone(), word, -3i64..=3, -2i64..=2);
    prop::collection::vec(term, 0..4).prop_map(|ts| {
        let mut map = BTreeMap::new();
        for (mu, nu, re, im) in ts {
            *map.entry((mu, nu)).or_insert_with(|| coeff(0, 0)) += coeff(re, im);
        }
        CuntzElement::from_terms(2, map)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_idempotent(a in element()) {
        prop_assert_eq!(normalize(a.clone()), a);
    }

    #[test]
    fn adjoint_is_an_involutive_antihomomorphism(a in element(), b in element()) {
        prop_assert_eq!(a.adjoint().adjoint(), a.clone());
        prop_assert_eq!((&a * &b).adjoint(), &b.adjoint() * &a.adjoint());
    }

    #[test]
    fn multiplication_is_associative(a in element(), b in element(), c in element()) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
    }

    #[test]
    fn print_parse_round_trip(a in element()) {
        prop_assert_eq!(parse(&a.to_string(), 2).unwrap(), a);
    }

    #[test]
    fn no_redex_survives(a in element()) {
        // No complete sibling set with equal coefficients remains.
        for (mu, nu) in a.terms().keys() {
            if mu.is_empty() || nu.is_empty() || mu.last() != nu.last() {
                continue;
            }
            let parent = (mu[..mu.len() - 1].to_vec(), nu[..nu.len() - 1].to_vec());
            let kids: Vec<_> = (1..=2u8)
                .map(|i| a.terms().get(&([parent.0.as_slice(), &[i]].concat(), [parent.1.as_slice(), &[i]].concat())))
                .collect();
            prop_assert!(!(kids.iter().all(|k| k.is_some()) && kids[0] == kids[1]));
        }
    }
}
