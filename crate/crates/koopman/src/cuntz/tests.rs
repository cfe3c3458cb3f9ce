use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_traits::{One, Zero};

use super::*;
use crate::discretize::{
    composition_operator, polar_decompose, CircleRealization, CylinderRealization, QuadratureOptions, DEFAULT_SPILLOVER,
};
use crate::dynamics::{SystemDescriptor, TrigDensity, Word};
use crate::scalar::{Surd, C64};

fn fourier(k: usize) -> BasisSpec {
    BasisSpec::FourierModes { k_max: k, weighted: false }
}

fn cyl(n: usize, d: usize) -> BasisSpec {
    BasisSpec::CylinderDepth { symbols: n, depth: d }
}

fn circle(n: usize) -> CircleRealization<C64> {
    CircleRealization::new(SystemDescriptor::circle_monomial(n).unwrap(), QuadratureOptions::default()).unwrap()
}

fn shift(n: usize) -> CylinderRealization<Surd> {
    CylinderRealization::new(SystemDescriptor::full_shift(n).unwrap()).unwrap()
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn transfer_for<R: Realization>(r: &R, bin: &TruncationBasis<R>, bout: &TruncationBasis<R>) -> TransferData<R> {
    let comp = composition_operator(r, bin, bout, DEFAULT_SPILLOVER).unwrap();
    let polar = polar_decompose(&comp.matrix).unwrap();
    transfer(r, &polar, bin, bout, &r.test_functions()).unwrap()
}

#[test]
fn shift_sections_prepend_letters_exactly() {
    let r = shift(2);
    let (bin, bout) = (r.basis(&cyl(2, 3)).unwrap(), r.basis(&cyl(2, 4)).unwrap());
    let fam = cuntz_from_sections(&r, &bin, &bout);
    let w = Word(vec![2, 1, 2]).index(2);
    let iw = Word(vec![1, 2, 1, 2]).index(2);
    let col = fam.isometries[0].entries.column(w);
    for (row, x) in col.iter().enumerate() {
        assert_eq!(*x, if row == iw { Surd::one() } else { Surd::zero() });
    }
    assert_eq!(fam.defects, FamilyDefects { relations: 0.0, completeness: 0.0 });
}

#[test]
fn shift_three_letters_is_exact() {
    let r = shift(3);
    let (bin, bout) = (r.basis(&cyl(3, 2)).unwrap(), r.basis(&cyl(3, 3)).unwrap());
    let fam = cuntz_from_sections(&r, &bin, &bout);
    assert_eq!(fam.defects.relations, 0.0);
    assert_eq!(fam.defects.completeness, 0.0);
}

#[test]
fn monomial_sections_match_the_closed_form() {
    let r = circle(2);
    let (bin, bout) = (r.basis(&fourier(16)).unwrap(), r.basis(&fourier(32)).unwrap());
    let fam = cuntz_from_sections(&r, &bin, &bout);
    assert!(fam.defects.relations <= 1e-8, "{:?}", fam.defects);
    assert!(fam.defects.completeness <= 1e-8, "{:?}", fam.defects);
    let f = r.trig_poly(&[(1, c(1.0, 0.0)), (-3, c(0.0, 0.5))]);
    let s1f = r.section(0, &f);
    for k in 0..100 {
        let t = (k as f64 + 0.5) / 100.0;
        let want = if t < 0.5 { f.eval(2.0 * t) * 2f64.sqrt() } else { c(0.0, 0.0) };
        assert!((s1f.eval(t) - want).norm() < 1e-13);
    }
}

#[test]
fn blaschke_sections_form_a_family() {
    let sys = SystemDescriptor::blaschke(vec![c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
    let r = CircleRealization::<C64>::new(sys, QuadratureOptions::default()).unwrap();
    let (bin, bout) = (r.basis(&fourier(8)).unwrap(), r.basis(&fourier(32)).unwrap());
    let fam = cuntz_from_sections(&r, &bin, &bout);
    assert!(fam.defects.relations <= 1e-6 && fam.defects.completeness <= 1e-6, "{:?}", fam.defects);
}

#[test]
fn monomial_transfer_averages_over_preimages() {
    let r = circle(2);
    let (bin, bout) = (r.basis(&fourier(16)).unwrap(), r.basis(&fourier(32)).unwrap());
    let t = transfer_for(&r, &bin, &bout);
    assert!(t.max_route_defect() < 1e-10 && t.polar_defect < 1e-10);
    let a = r.trig_poly(&[(2, c(1.0, 0.0)), (3, c(0.0, 1.0)), (-1, c(0.4, 0.0))]);
    let la = t.apply(&r, &a);
    for k in 0..64 {
        let y = (k as f64 + 0.25) / 64.0;
        let want = (a.eval(y / 2.0) + a.eval((y + 1.0) / 2.0)) * 0.5;
        assert!((la.eval(y) - want).norm() < 1e-13);
    }
    let one = r.constant(C64::one());
    assert!(r.func_distance(&t.apply(&r, &one), &one) < 1e-8);
}

#[test]
fn transfer_is_unital_positive_and_a_module_map() {
    let sys = SystemDescriptor::blaschke(vec![c(0.0, 0.0), c(0.3, 0.4)]).unwrap();
    let r = CircleRealization::<C64>::new(sys, QuadratureOptions::default()).unwrap();
    let (bin, bout) = (r.basis(&fourier(6)).unwrap(), r.basis(&fourier(64)).unwrap());
    let t = transfer_for(&r, &bin, &bout);
    let one = r.constant(C64::one());
    assert!(r.func_distance(&t.apply(&r, &one), &one) < 1e-8);
    let pos = r.trig_poly(&[(0, c(1.0, 0.0)), (1, c(0.5, 0.0)), (-1, c(0.5, 0.0))]);
    assert!(r.func_real_range(&t.apply(&r, &pos)).0 >= -1e-12);
    let tests = r.test_functions();
    for (_, a) in &tests {
        for (_, b) in &tests {
            let lhs = r.func_mul(a, &t.apply(&r, b));
            let rhs = t.apply(&r, &r.func_mul(&r.compose_phi(a), b));
            assert!(r.func_distance(&lhs, &rhs) < 1e-8);
        }
    }
}

#[test]
fn weighted_polar_factor_is_square_root_of_density() {
    let rho = TrigDensity { constant: 1.0, cos: vec![0.5], sin: vec![] };
    let sys = SystemDescriptor::weighted_monomial(2, rho).unwrap();
    let r = CircleRealization::<C64>::new(sys, QuadratureOptions::default()).unwrap();
    let spec = |k| BasisSpec::FourierModes { k_max: k, weighted: true };
    let (bin, bout) = (r.basis(&spec(32)).unwrap(), r.basis(&spec(64)).unwrap());
    let t = transfer_for(&r, &bin, &bout);
    assert!(t.polar_defect < 1e-6, "{}", t.polar_defect);
    // a_φ = M_{ρ^{-1/2}} since w = 1/ρ
    for k in 0..50 {
        let y = k as f64 / 50.0;
        let want = (1.0 + 0.5 * (2.0 * PI * y).cos()).powf(-0.5);
        assert!((t.a_phi.eval(y).re - want).abs() < 1e-12);
    }
}

#[test]
fn module_basis_is_root_n_times_indicators() {
    let r = circle(2);
    let (bin, bout) = (r.basis(&fourier(8)).unwrap(), r.basis(&fourier(16)).unwrap());
    let t = transfer_for(&r, &bin, &bout);
    let xis = module_basis_from_sections(&r, &t).unwrap();
    for (i, xi) in xis.iter().enumerate() {
        let want = r.func_combine(vec![(C64::new(2f64.sqrt(), 0.0), r.indicator(i))]);
        assert!(r.func_distance(&xi.func, &want) < 1e-14);
    }
    assert!(orthonormality_defect(&r, &t, &xis) < 1e-12);

    let s = shift(2);
    let (bin, bout) = (s.basis(&cyl(2, 2)).unwrap(), s.basis(&cyl(2, 3)).unwrap());
    let t = transfer_for(&s, &bin, &bout);
    let xis = module_basis_from_sections(&s, &t).unwrap();
    for (i, xi) in xis.iter().enumerate() {
        assert_eq!(xi.func, s.func_combine(vec![(Surd::sqrt_nat(2), s.indicator(i))]));
    }
    assert_eq!(orthonormality_defect(&s, &t, &xis), 0.0);
}

#[test]
fn module_basis_reconstructs_functions() {
    let r = circle(2);
    let (bin, bout) = (r.basis(&fourier(8)).unwrap(), r.basis(&fourier(16)).unwrap());
    let t = transfer_for(&r, &bin, &bout);
    let xis = module_basis_from_sections(&r, &t).unwrap();
    let a = r.mode(1);
    let terms = xis
        .iter()
        .map(|xi| {
            let coeff = t.apply(&r, &r.func_mul(&r.func_conj(&xi.func), &a));
            (C64::one(), xi.right_action(&r, &coeff).func)
        })
        .collect();
    assert!(r.func_distance(&r.func_combine(terms), &a) < 1e-6);
}

#[test]
fn lifted_family_equals_sections_family() {
    let r = circle(2);
    let (bin, bout) = (r.basis(&fourier(16)).unwrap(), r.basis(&fourier(32)).unwrap());
    let t = transfer_for(&r, &bin, &bout);
    let xis = module_basis_from_sections(&r, &t).unwrap();
    let lifted = lift_to_cuntz(&r, &t, &xis, &bin, &bout).unwrap();
    let sections = cuntz_from_sections(&r, &bin, &bout);
    for (a, b) in lifted.isometries.iter().zip(&sections.isometries) {
        assert!(spectral_norm(&(a.entries.clone() - b.entries.clone())) < 1e-8);
    }

    let s = shift(2);
    let (bin, bout) = (s.basis(&cyl(2, 3)).unwrap(), s.basis(&cyl(2, 4)).unwrap());
    let t = transfer_for(&s, &bin, &bout);
    let xis = module_basis_from_sections(&s, &t).unwrap();
    let lifted = lift_to_cuntz(&s, &t, &xis, &bin, &bout).unwrap();
    let sections = cuntz_from_sections(&s, &bin, &bout);
    for (a, b) in lifted.isometries.iter().zip(&sections.isometries) {
        assert_eq!(a.entries, b.entries);
    }
}

#[test]
fn lift_rejects_non_orthonormal_vectors() {
    let r = circle(2);
    let (bin, bout) = (r.basis(&fourier(4)).unwrap(), r.basis(&fourier(8)).unwrap());
    let t = transfer_for(&r, &bin, &bout);
    let bad = vec![ModuleVector { func: r.indicator(0) }, ModuleVector { func: r.indicator(1) }];
    assert!(matches!(lift_to_cuntz(&r, &t, &bad, &bin, &bout), Err(Error::NotOrthonormal { .. })));
}

#[test]
fn right_twisted_module_basis_still_lifts() {
    let r = circle(2);
    let (bin, bout) = (r.basis(&fourier(16)).unwrap(), r.basis(&fourier(32)).unwrap());
    let t = transfer_for(&r, &bin, &bout);
    let xis: Vec<_> = module_basis_from_sections(&r, &t).unwrap().iter().map(|xi| xi.right_action(&r, &r.mode(1))).collect();
    let fam = lift_to_cuntz(&r, &t, &xis, &bin, &bout).unwrap();
    assert!(fam.defects.relations < 1e-8 && fam.defects.completeness < 1e-8, "{:?}", fam.defects);
}

fn rotation(angle: f64) -> DMatrix<C64> {
    let (s, co) = angle.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
}

#[test]
fn identity_twist_returns_the_family() {
    let r = circle(2);
    let (bin, bout) = (r.basis(&fourier(8)).unwrap(), r.basis(&fourier(16)).unwrap());
    let s = cuntz_from_sections(&r, &bin, &bout);
    let q = twist_family(&r, &s, &TwistSpec::Scalar(DMatrix::identity(2, 2))).unwrap();
    for (a, b) in q.isometries.iter().zip(&s.isometries) {
        assert!(spectral_norm(&(a.entries.clone() - b.entries.clone())) < 1e-14);
    }
    let p = pairing_matrix(&r, &s, &q, 1e-8).unwrap();
    assert!(p.max_scalarity() < 1e-12);
    assert_eq!(p.recovered_n, Some(2));
}

#[test]
fn rotation_twist_is_recovered_by_the_pairing() {
    let r = circle(2);
    let (bin, bout) = (r.basis(&fourier(16)).unwrap(), r.basis(&fourier(32)).unwrap());
    let s = cuntz_from_sections(&r, &bin, &bout);
    let u = rotation(PI / 3.0);
    let q = twist_family(&r, &s, &TwistSpec::Scalar(u.clone())).unwrap();
    assert!(q.defects.relations < 1e-8 && q.defects.completeness < 1e-8);
    let p = pairing_matrix(&r, &s, &q, 1e-8).unwrap();
    assert!(p.max_scalarity() < 1e-8);
    assert!((p.scalar_matrix() - u).norm() < 1e-8);
    assert!(p.row_unitarity < 1e-8 && p.column_unitarity < 1e-8);
    assert_eq!(p.recovered_n, Some(2));
}

#[test]
fn function_twist_breaks_scalarity_but_keeps_the_size() {
    let r = circle(2);
    let (bin, bout) = (r.basis(&fourier(16)).unwrap(), r.basis(&fourier(32)).unwrap());
    let s = cuntz_from_sections(&r, &bin, &bout);
    let q = twist_family(&r, &s, &TwistSpec::Functions(vec![r.mode(0), r.mode(1)])).unwrap();
    assert!(q.defects.relations < 1e-8 && q.defects.completeness < 1e-8);
    let p = pairing_matrix(&r, &s, &q, 1e-8).unwrap();
    assert!(p.scalarity[1][1] >= 0.5, "{}", p.scalarity[1][1]);
    assert!(p.scalarity[0][0] < 1e-10);
    assert!(p.row_unitarity < 1e-8 && p.column_unitarity < 1e-8);
    assert_eq!(p.recovered_n, Some(2));
}

#[test]
fn non_unitary_twists_are_rejected() {
    let r = circle(2);
    let (bin, bout) = (r.basis(&fourier(4)).unwrap(), r.basis(&fourier(8)).unwrap());
    let s = cuntz_from_sections(&r, &bin, &bout);
    let u = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    assert!(matches!(twist_family(&r, &s, &TwistSpec::Scalar(u)), Err(Error::NotUnitary { .. })));
    let m = r.trig_poly(&[(0, c(0.5, 0.0))]);
    assert!(matches!(twist_family(&r, &s, &TwistSpec::Functions(vec![m.clone(), m])), Err(Error::NotUnitary { .. })));
}

#[test]
fn pairing_needs_a_shared_domain() {
    let r = circle(2);
    let s = cuntz_from_sections(&r, &r.basis(&fourier(4)).unwrap(), &r.basis(&fourier(8)).unwrap());
    let q = cuntz_from_sections(&r, &r.basis(&fourier(5)).unwrap(), &r.basis(&fourier(10)).unwrap());
    assert!(matches!(pairing_matrix(&r, &s, &q, 1e-8), Err(Error::BasisMismatch(_))));
}

#[test]
fn pairing_of_differently_sized_families_recovers_nothing() {
    let r = shift(2);
    let (bin, bout) = (r.basis(&cyl(2, 2)).unwrap(), r.basis(&cyl(2, 4)).unwrap());
    let s = cuntz_from_sections(&r, &bin, &bout);
    let words: Vec<Op<_>> =
        (0..2).flat_map(|i| (0..2).map(move |j| Op::Chain(vec![Op::Section(i), Op::Section(j)]))).collect();
    let q = CuntzFamily::from_ops(&r, Route::Twisted, words, &bin, &bout);
    assert_eq!(q.defects.relations, 0.0);
    let p = pairing_matrix(&r, &s, &q, 1e-8).unwrap();
    assert_eq!(p.entries.len(), 2);
    assert_eq!(p.entries[0].len(), 4);
    assert_eq!(p.recovered_n, None);
    assert!(p.max_scalarity() > 0.5);
}

#[test]
fn scaled_family_reports_relation_defect() {
    let r = shift(2);
    let (bin, bout) = (r.basis(&cyl(2, 2)).unwrap(), r.basis(&cyl(2, 3)).unwrap());
    let ops = vec![Op::Scale(Surd::from_ratio(11, 10), Box::new(Op::Section(0))), Op::Section(1)];
    let fam = CuntzFamily::from_ops(&r, Route::Sections, ops, &bin, &bout);
    assert!(fam.defects.relations >= 0.2);
}
