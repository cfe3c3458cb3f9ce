//! Public-API checks against values computed independently here.

use std::f64::consts::PI;

use koopman::discretize::{BasisSpec, CylinderRealization, Realization};
use koopman::dynamics::{decompose, evaluate_map, Point, SystemDescriptor, TrigDensity};
use koopman::quadrature::{CompositeRule, GaussLegendre};
use koopman::symbolic::CuntzElement;
use koopman::{cuntz, verify, Surd, C64};
use proptest::prelude::*;

fn blaschke_oracle(zeros: &[C64], theta: f64) -> f64 {
    let z = C64::from_polar(1.0, 2.0 * PI * theta);
    let b = zeros.iter().fold(C64::new(1.0, 0.0), |acc, a| acc * (z - a) / (C64::new(1.0, 0.0) - a.conj() * z));
    (b.arg() / (2.0 * PI)).rem_euclid(1.0)
}

fn circle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

#[test]
fn blaschke_map_matches_direct_product() {
    let zeros = vec![C64::new(0.0, 0.0), C64::new(0.5, 0.0)];
    let sys = SystemDescriptor::blaschke(zeros.clone()).unwrap();
    for k in 0..97 {
        let t = k as f64 / 97.0;
        let Point::Angle(got) = evaluate_map(&sys, &Point::Angle(t)).unwrap() else { panic!("not an angle") };
        assert!(circle_gap(got, blaschke_oracle(&zeros, t)) < 1e-12, "theta {t}");
    }
}

#[test]
fn inverse_branches_invert_the_map() {
    let zeros = vec![C64::new(0.0, 0.0), C64::new(0.3, 0.4)];
    let sys = SystemDescriptor::blaschke(zeros.clone()).unwrap();
    let d = decompose(&sys).unwrap();
    for i in 0..d.branch_count() {
        for k in 0..25 {
            let y = (k as f64 + 0.5) / 25.0;
            let x = d.psi_angle(i, y);
            assert!(circle_gap(blaschke_oracle(&zeros, x), y) < 1e-10);
            assert_eq!(d.branch_of_angle(x), i);
        }
    }
}

#[test]
fn density_antiderivative_and_coefficients() {
    let rho = TrigDensity { constant: 1.0, cos: vec![0.3, -0.1], sin: vec![0.2] };
    // Simpson on 2000 subintervals.
    let simpson = |b: f64| {
        let m = 2000;
        let h = b / m as f64;
        (0..=m).map(|j| rho.eval(j as f64 * h) * if j == 0 || j == m { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 }).sum::<f64>() * h / 3.0
    };
    for b in [0.1, 0.37, 0.5, 0.91, 1.0] {
        assert!((rho.antiderivative(b) - simpson(b)).abs() < 1e-10);
    }
    // Rectangle rule is exact for trigonometric polynomials of low degree.
    let m = 64;
    for k in -3i64..=3 {
        let c: C64 = (0..m)
            .map(|j| {
                let t = j as f64 / m as f64;
                C64::from_polar(rho.eval(t), -2.0 * PI * k as f64 * t)
            })
            .sum::<C64>()
            / m as f64;
        assert!((rho.coefficient(k) - c).norm() < 1e-12, "mode {k}");
    }
}

#[test]
fn gauss_legendre_integrates_polynomials_exactly() {
    let gl = GaussLegendre::new(8);
    let rule = CompositeRule::uniform(3, &gl);
    for p in 0..16 {
        let got = rule.integrate(|x| x.powi(p));
        assert!((got - 1.0 / (p as f64 + 1.0)).abs() < 1e-13, "degree {p}");
    }
}

#[test]
fn exact_shift_sections_satisfy_relations_exactly() {
    let r = CylinderRealization::<Surd>::new(SystemDescriptor::full_shift(2).unwrap()).unwrap();
    let bin = r.basis(&BasisSpec::CylinderDepth { symbols: 2, depth: 3 }).unwrap();
    let bout = r.basis(&BasisSpec::CylinderDepth { symbols: 2, depth: 4 }).unwrap();
    let fam = cuntz::cuntz_from_sections(&r, &bin, &bout);
    let rep = verify::check_cuntz(&fam, 0.0);
    assert!(rep.all_pass(), "{rep:?}");
    // Independent: the isometries are 0/1 matrices with one 1 per column.
    for s in &fam.isometries {
        for j in 0..s.entries.ncols() {
            let col: Vec<String> = s.entries.column(j).iter().map(|x| x.to_string()).collect();
            assert_eq!(col.iter().filter(|x| *x == "1").count(), 1);
            assert!(col.iter().all(|x| x == "0" || x == "1"));
        }
    }
}

#[test]
fn symbolic_cuntz_relations() {
    for n in 2..=4usize {
        let mut sum = CuntzElement::zero(n);
        for i in 1..=n as u8 {
            for j in 1..=n as u8 {
                let p = &CuntzElement::s_adj(n, i) * &CuntzElement::s(n, j);
                if i == j {
                    assert!(p.is_one());
                } else {
                    assert!(p.is_zero());
                }
            }
            sum = &sum + &(&CuntzElement::s(n, i) * &CuntzElement::s_adj(n, i));
        }
        assert!(sum.is_one());
    }
}

proptest! {
    #[test]
    fn monomial_map_is_multiplication_mod_one(t in 0.0f64..1.0, n in 2usize..6) {
        let sys = SystemDescriptor::circle_monomial(n).unwrap();
        let Point::Angle(got) = evaluate_map(&sys, &Point::Angle(t)).unwrap() else { panic!("not an angle") };
        prop_assert!(circle_gap(got, n as f64 * t) < 1e-12);
    }

    #[test]
    fn shift_drops_first_symbol(s in proptest::collection::vec(1u8..=3, 1..12)) {
        let sys = SystemDescriptor::full_shift(3).unwrap();
        prop_assert_eq!(evaluate_map(&sys, &Point::Symbols(s.clone())).unwrap(), Point::Symbols(s[1..].to_vec()));
    }

    #[test]
    fn adjoint_reverses_products(a in proptest::collection::vec(1u8..=2, 0..4), b in proptest::collection::vec(1u8..=2, 0..4),
                                 c in proptest::collection::vec(1u8..=2, 0..4), d in proptest::collection::vec(1u8..=2, 0..4)) {
        let x = CuntzElement::word(2, &a, &b);
        let y = CuntzElement::word(2, &c, &d);
        prop_assert_eq!((&x * &y).adjoint(), &y.adjoint() * &x.adjoint());
    }
}
