//! Exact checks in the symbolic Cuntz algebra, independent of any system.

use koopman::symbolic::{faithfulness_check, module_unitary_check, random_word, u_n, verify_basis, CuntzElement, ModuleMatrix};
use koopman::verify::{CheckRecord, VerificationReport};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SAMPLE_WORDS: usize = 100;

fn exact(name: &str, holds: bool) -> CheckRecord {
    CheckRecord::defect(name, if holds { 0.0 } else { 1.0 }, 0.0)
}

pub fn run(n: usize, seed: u64) -> VerificationReport {
    let mut rep = VerificationReport::default();
    let proj = (1..=n as u8).fold(CuntzElement::zero(n), |acc, i| &acc + &(&CuntzElement::s(n, i) * &CuntzElement::s_adj(n, i)));
    rep.push(exact("completeness", proj.is_one()).with("normal-form", &proj));

    let orth = (1..=n as u8).all(|i| {
        (1..=n as u8).all(|j| {
            let p = &CuntzElement::s_adj(n, i) * &CuntzElement::s(n, j);
            if i == j { p.is_one() } else { p.is_zero() }
        })
    });
    rep.push(exact("relations", orth));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<_> = (0..SAMPLE_WORDS).map(|_| random_word(n, 4, &mut rng)).collect();
    let unit = verify_basis(&[CuntzElement::one(n)], &xs);
    rep.push(basis_record("basis.unit", unit));
    let gens: Vec<_> = (1..=n as u8).map(|i| CuntzElement::s(n, i)).collect();
    rep.push(basis_record("basis.generators", verify_basis(&gens, &xs)));

    let rows: Vec<(String, ModuleMatrix)> = if n == 2 {
        (2..=4).map(|k| (format!("unitary.u{k}"), u_n(k))).collect()
    } else {
        vec![("unitary.generators".into(), ModuleMatrix::row(gens).expect("nonempty row"))]
    };
    for (name, u) in rows {
        let ok = module_unitary_check(&u).unwrap_or(false);
        rep.push(exact(&name, ok).with("cols", u.cols));
    }

    let (total, depth) = if n == 2 { (3, 3) } else { (2, 2) };
    let rec = match faithfulness_check(n, total, depth) {
        Ok(None) => exact("faithfulness", true),
        Ok(Some(w)) => exact("faithfulness", false).with("left", &w.left).with("right", &w.right),
        Err(e) => exact("faithfulness", false).with("error", e),
    };
    rep.push(rec.with("max-total", total).with("depth", depth));
    rep.with("alphabet", n).with("seed", seed)
}

fn basis_record(name: &str, v: koopman::Result<koopman::symbolic::BasisVerdict>) -> CheckRecord {
    match v {
        Ok(v) if v.holds() => exact(name, true),
        Ok(v) => exact(name, false).with("witness", format!("{v:?}")),
        Err(e) => exact(name, false).with("error", e),
    }
    .with("samples", SAMPLE_WORDS)
}
