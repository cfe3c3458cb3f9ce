//! Defect measurements for the identities a Cuntz family, its transfer
//! operator and its module basis must satisfy, collected into reports.

mod report;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use report::{CheckRecord, Comparison, VerificationReport};

use crate::cuntz::{identity_defect, pairing_matrix, CuntzFamily, ModuleVector, TransferData};
use crate::discretize::matrix::{is_zero_matrix, rank, spectral_norm};
use crate::discretize::{compress, singular_bounds, OperatorMatrix, Op, Realization, TruncationBasis};
use crate::dynamics::{cylinder, Word};
use crate::error::Result;
use crate::scalar::{Scalar, C64};

/// Exact paths.
pub const EXACT: f64 = 0.0;
/// Closed-form circle paths.
pub const CLOSED_FORM: f64 = 1e-8;
/// Numerically inverted branches and general quadrature.
pub const QUADRATURE: f64 = 1e-6;

fn interior<S: Scalar>(m: &DMatrix<S>, idx: &[usize]) -> DMatrix<S> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])].clone())
}

fn context<R: Realization>(fam: &CuntzFamily<R>) -> Vec<(&'static str, String)> {
    vec![("domain", fam.domain.spec.label()), ("codomain", fam.codomain.spec.label())]
}

/// Relations S_i*S_j = δ_ij and Σ S_iS_i* = I (interior block).
pub fn check_cuntz<R: Realization>(fam: &CuntzFamily<R>, tolerance: f64) -> VerificationReport {
    let ctx = context(fam);
    VerificationReport::from(vec![
        CheckRecord::defect("cuntz.relations", fam.defects.relations, tolerance).with_all(&ctx),
        CheckRecord::defect("cuntz.completeness", fam.defects.completeness, tolerance).with_all(&ctx),
    ])
}

/// max_f ‖Σ_i S_i M_f S_i* − M_{f∘φ}‖ on the interior block.
pub fn check_implements<R: Realization>(
    r: &R,
    fam: &CuntzFamily<R>,
    fs: &[(String, R::Func)],
    tolerance: f64,
) -> VerificationReport {
    let idx = fam.domain.spec.interior();
    let mut worst: f64 = 0.0;
    let mut witness = String::new();
    for (name, f) in fs {
        let lhs = compress(r, &fam.extension(r, &Op::Mult(f.clone())), &fam.domain, &fam.domain);
        let rhs = compress(r, &Op::Mult(r.compose_phi(f)), &fam.domain, &fam.domain);
        let d = spectral_norm(&interior(&(lhs.entries - rhs.entries), &idx));
        if d >= worst {
            worst = d;
            witness = name.clone();
        }
    }
    let rec = CheckRecord::defect("implements", worst, tolerance).with_all(&context(fam)).with("worst-function", witness);
    VerificationReport::from(vec![rec])
}

/// max_a ‖T M_a − M_{a∘φ} T‖ compressed on `basis`.
pub fn check_intertwiner<R: Realization>(
    r: &R,
    t: &Op<R>,
    basis: &TruncationBasis<R>,
    fs: &[(String, R::Func)],
    tolerance: f64,
) -> VerificationReport {
    let mut worst: f64 = 0.0;
    for (_, a) in fs {
        let lhs = Op::Chain(vec![t.clone(), Op::Mult(a.clone())]);
        let rhs = Op::Chain(vec![Op::Mult(r.compose_phi(a)), t.clone()]);
        let m = compress(r, &lhs, basis, basis).entries - compress(r, &rhs, basis, basis).entries;
        worst = worst.max(spectral_norm(&m));
    }
    VerificationReport::from(vec![CheckRecord::defect("intertwiner", worst, tolerance).with("basis", basis.spec.label())])
}

/// dim ker(C − J) for a composition matrix and the inclusion of its domain.
pub fn fixed_space_dimension<S: Scalar>(c: &DMatrix<S>, j: &DMatrix<S>, cutoff: f64) -> usize {
    let diff = c.clone() - j.clone();
    if is_zero_matrix(&diff) {
        return diff.ncols();
    }
    diff.ncols() - rank(&diff, cutoff)
}

/// Dimension of {f ∈ span(basis_in) : f∘φ = f}, with `basis_out` holding
/// both the pullbacks and the domain itself.
pub fn fixed_space_masa<R: Realization>(
    r: &R,
    basis_in: &TruncationBasis<R>,
    basis_out: &TruncationBasis<R>,
    cutoff: f64,
) -> usize {
    let c = compress(r, &Op::Compose, basis_out, basis_in);
    let j = compress(r, &Op::Identity, basis_out, basis_in);
    fixed_space_dimension(&c.entries, &j.entries, cutoff)
}

/// Dimension of {T : T P = P T for every P} in the operator space of the
/// projections' basis.
pub fn commutant_dimension<S: Scalar>(projections: &[DMatrix<S>], cutoff: f64) -> usize {
    let Some(first) = projections.first() else { return 0 };
    let n = first.nrows();
    let mut rows: Vec<BTreeMap<usize, S>> = Vec::new();
    for p in projections {
        // (TP − PT)_{ab} = Σ_c T_{ac} P_{cb} − P_{ac} T_{cb}; unknown T_{xy} at x·n + y
        for a in 0..n {
            for b in 0..n {
                let mut row: BTreeMap<usize, S> = BTreeMap::new();
                for c in 0..n {
                    if !p[(c, b)].is_zero() {
                        *row.entry(a * n + c).or_insert_with(S::zero) += p[(c, b)].clone();
                    }
                    if !p[(a, c)].is_zero() {
                        *row.entry(c * n + b).or_insert_with(S::zero) -= p[(a, c)].clone();
                    }
                }
                row.retain(|_, x| !x.is_zero());
                if !row.is_empty() {
                    rows.push(row);
                }
            }
        }
    }
    let r = if S::EXACT {
        sparse_rank(rows, n * n)
    } else if rows.is_empty() {
        0
    } else {
        let m = DMatrix::from_fn(rows.len(), n * n, |i, j| rows[i].get(&j).cloned().unwrap_or_else(S::zero));
        rank(&m, cutoff)
    };
    n * n - r
}

/// Exact rank by incremental elimination on sparse rows, stopping at `max`.
fn sparse_rank<S: Scalar>(rows: Vec<BTreeMap<usize, S>>, max: usize) -> usize {
    // leading column -> row scaled so that its leading entry is 1
    let mut pivots: BTreeMap<usize, BTreeMap<usize, S>> = BTreeMap::new();
    for mut row in rows {
        while let Some((&lead, v)) = row.iter().next() {
            let v = v.clone();
            match pivots.get(&lead) {
                Some(p) => {
                    for (c, x) in p {
                        *row.entry(*c).or_insert_with(S::zero) -= v.clone() * x.clone();
                    }
                    row.retain(|_, x| !x.is_zero());
                }
                None => {
                    let inv = v.inv().expect("nonzero pivot");
                    let scaled = row.into_iter().map(|(c, x)| (c, x * inv.clone())).collect();
                    pivots.insert(lead, scaled);
                    break;
                }
            }
        }
        if pivots.len() == max {
            break;
        }
    }
    pivots.len()
}

/// Words of length 1..=depth over an alphabet of size n.
pub fn words_up_to(n: usize, depth: usize) -> Vec<Word> {
    (1..=depth).flat_map(|d| Word::all(d, n)).collect()
}

/// Commutant of the range projections S_w S_w*, |w| ≤ depth, compressed on `ambient`.
pub fn word_projection_commutant<R: Realization>(
    r: &R,
    fam: &CuntzFamily<R>,
    depth: usize,
    ambient: &TruncationBasis<R>,
    cutoff: f64,
) -> usize {
    let projections: Vec<DMatrix<R::S>> = words_up_to(fam.size(), depth)
        .iter()
        .map(|w| {
            let s_w: Vec<Op<R>> = w.letters().iter().map(|&l| fam.ops[l as usize - 1].clone()).collect();
            let s_w_adj: Vec<Op<R>> = s_w.iter().rev().map(|s| s.adjoint(r)).collect();
            let chain = Op::Chain(s_w.into_iter().chain(s_w_adj).collect());
            compress(r, &chain, ambient, ambient).entries
        })
        .collect();
    commutant_dimension(&projections, cutoff)
}

/// A random operator on `basis`: complex Gaussian entries normalized to unit
/// spectral norm for floats, small rationals for exact scalars.
pub fn random_operator<R: Realization>(basis: &TruncationBasis<R>, rng: &mut ChaCha8Rng) -> DMatrix<R::S> {
    let n = basis.size();
    let m = DMatrix::from_fn(n, n, |_, _| R::S::random(rng));
    if R::S::EXACT {
        return m;
    }
    let norm = spectral_norm(&m);
    match R::S::try_from_c64(C64::new(1.0 / norm, 0.0)) {
        Some(s) if norm > 0.0 => m.map(|x| x * s.clone()),
        _ => m,
    }
}

fn finite<R: Realization>(t: DMatrix<R::S>, basis: &TruncationBasis<R>) -> Op<R> {
    Op::finite(t, basis.clone(), basis.clone())
}

/// max over seeded random T of ‖α_S(T) − α_Q(T)‖ (interior block), with the
/// pairing scalarity of the two families.
pub fn compare_extensions<R: Realization>(
    r: &R,
    s: &CuntzFamily<R>,
    q: &CuntzFamily<R>,
    trials: usize,
    seed: u64,
    tolerance: f64,
) -> Result<VerificationReport> {
    let dom = &s.domain;
    let idx = dom.spec.interior();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut witness) = (0.0f64, 0usize);
    for trial in 0..trials {
        let t = finite(random_operator(dom, &mut rng), dom);
        let diff = Op::Sum(vec![
            s.extension(r, &t),
            Op::Scale(-<R::S as num_traits::One>::one(), Box::new(q.extension(r, &t))),
        ]);
        let d = spectral_norm(&interior(&compress(r, &diff, dom, dom).entries, &idx));
        if d > worst {
            worst = d;
            witness = trial;
        }
    }
    let pairing = pairing_matrix(r, s, q, tolerance)?;
    Ok(VerificationReport::from(vec![
        CheckRecord::defect("extensions.difference", worst, tolerance)
            .with("seed", seed)
            .with("trials", trials)
            .with("witness-trial", witness)
            .with("domain", dom.spec.label()),
        CheckRecord::defect("extensions.scalarity", pairing.max_scalarity(), QUADRATURE).with("domain", dom.spec.label()),
    ]))
}

/// Orthonormality 𝓛(ξ̄_iξ_j) = δ_ij and reconstruction a = Σ ξ_i·α(𝓛(ξ̄_i a)).
pub fn check_module_basis<R: Realization>(
    r: &R,
    t: &TransferData<R>,
    xis: &[ModuleVector<R>],
    fs: &[(String, R::Func)],
    tolerance: f64,
) -> VerificationReport {
    let ortho = crate::cuntz::orthonormality_defect(r, t, xis);
    let one = <R::S as num_traits::One>::one();
    let mut worst: f64 = 0.0;
    for (_, a) in fs {
        let terms = xis
            .iter()
            .map(|xi| {
                let coeff = t.apply(r, &r.func_mul(&r.func_conj(&xi.func), a));
                (one.clone(), xi.right_action(r, &coeff).func)
            })
            .collect();
        worst = worst.max(r.func_distance(&r.func_combine(terms), a));
    }
    VerificationReport::from(vec![
        CheckRecord::defect("module.orthonormality", ortho, tolerance).with("size", xis.len()),
        CheckRecord::defect("module.reconstruction", worst, tolerance).with("size", xis.len()),
    ])
}

/// K = max over cylinders of μ(φ(U_w))/μ(U_w) = μ(U_{w₂…})/μ(U_w), |w| ≤ depth.
pub fn phi_boundedness<R: Realization>(r: &R, depth: usize) -> Result<f64> {
    let sys = r.system();
    let decomp = r.decomposition();
    let mut worst: f64 = 0.0;
    for w in words_up_to(sys.branch_count, depth) {
        let tail = Word(w.letters()[1..].to_vec());
        let whole = cylinder(sys, decomp, &w)?.measure;
        let image = if tail.is_empty() { 1.0 } else { cylinder(sys, decomp, &tail)?.measure };
        if whole > 0.0 {
            worst = worst.max(image / whole);
        }
    }
    Ok(worst)
}

/// Empirical constants between ‖a‖_𝓛 = ‖𝓛(|a|²)‖^{1/2} and ‖a‖_∞.
pub fn check_norm_equivalence<R: Realization>(
    r: &R,
    t: &TransferData<R>,
    samples: &[(String, R::Func)],
    c1: f64,
    k_const: f64,
) -> VerificationReport {
    let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
    for (_, a) in samples {
        let xi = ModuleVector::<R> { func: a.clone() };
        let sup = xi.sup_norm(r);
        if sup == 0.0 {
            continue;
        }
        let ratio = xi.module_norm(r, t) / sup;
        hi = hi.max(ratio);
        lo = lo.min(ratio);
    }
    let m = c1 * k_const.sqrt();
    VerificationReport::from(vec![
        CheckRecord::defect("norms.upper", hi, 1.0 + 1e-8),
        CheckRecord::lower_bound("norms.lower", lo, 1.0 / m - 1e-8).with("M", m).with("c1", c1).with("K", k_const),
    ])
}

/// β_i(a) = S_i* M_a S_i equals M_{a∘ψ_i}, and β_i(α(a)) = a.
pub fn check_left_inverses<R: Realization>(
    r: &R,
    fam: &CuntzFamily<R>,
    fs: &[(String, R::Func)],
    tolerance: f64,
) -> VerificationReport {
    let dom = &fam.domain;
    let idx = dom.spec.interior();
    let (mut mult, mut inv) = (0.0f64, 0.0f64);
    for (i, s) in fam.ops.iter().enumerate() {
        let s_adj = s.adjoint(r);
        let beta = |f: &R::Func| compress(r, &Op::Chain(vec![s_adj.clone(), Op::Mult(f.clone()), s.clone()]), dom, dom).entries;
        let mult_by = |f: R::Func| compress(r, &Op::Mult(f), dom, dom).entries;
        for (_, a) in fs {
            let d = beta(a) - mult_by(r.compose_psi(i, a));
            mult = mult.max(spectral_norm(&interior(&d, &idx)));
            let d = beta(&r.compose_phi(a)) - mult_by(a.clone());
            inv = inv.max(spectral_norm(&interior(&d, &idx)));
        }
    }
    VerificationReport::from(vec![
        CheckRecord::defect("left-inverse.multiplication", mult, tolerance).with("domain", dom.spec.label()),
        CheckRecord::defect("left-inverse.identity", inv, tolerance).with("domain", dom.spec.label()),
    ])
}

/// Lower bound required of the non-surjectivity residual.
pub const NON_SURJECTIVITY_BOUND: f64 = 0.5;

/// T = S_1* α_S(T) S_1 for random T, and the relative least-squares residual
/// of S_1 against {α_S(M_g)} with g running over the domain basis functions.
pub fn check_injectivity_identity<R: Realization>(
    r: &R,
    fam: &CuntzFamily<R>,
    trials: usize,
    seed: u64,
    tolerance: f64,
) -> VerificationReport {
    let dom = &fam.domain;
    let idx = dom.spec.interior();
    let s1 = &fam.ops[0];
    let s1_adj = s1.adjoint(r);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for trial in 0..=trials {
        let t = if trial == 0 { DMatrix::identity(dom.size(), dom.size()) } else { random_operator(dom, &mut rng) };
        let op = finite(t, dom);
        let back = Op::Chain(vec![s1_adj.clone(), fam.extension(r, &op), s1.clone()]);
        let d = compress(r, &back, dom, dom).entries - compress(r, &op, dom, dom).entries;
        worst = worst.max(spectral_norm(&interior(&d, &idx)));
    }
    let residual = non_surjectivity_residual(r, fam);
    VerificationReport::from(vec![
        CheckRecord::defect("injectivity.identity", worst, tolerance).with("seed", seed).with("trials", trials),
        CheckRecord::lower_bound("injectivity.non-surjective", residual, NON_SURJECTIVITY_BOUND).with("domain", dom.spec.label()),
    ])
}

/// min_c ‖Σ c_k α_S(M_{g_k}) − S_1‖_F / ‖S_1‖_F on the domain basis.
pub fn non_surjectivity_residual<R: Realization>(r: &R, fam: &CuntzFamily<R>) -> f64 {
    let dom = &fam.domain;
    let n = dom.size();
    let target = compress(r, &fam.ops[0], dom, dom).to_c64();
    let columns: Vec<DMatrix<C64>> = dom
        .vectors
        .iter()
        .map(|v| compress(r, &fam.extension(r, &Op::Mult(r.as_func(v))), dom, dom).to_c64())
        .collect();
    let a = DMatrix::from_fn(n * n, columns.len(), |row, k| columns[k][(row / n, row % n)]);
    let b = DVector::from_fn(n * n, |row, _| target[(row / n, row % n)]);
    let svd = a.clone().svd(true, true);
    let c = svd.solve(&b, 1e-12).expect("least squares");
    let res = (&a * c - &b).norm();
    let scale = b.norm();
    if scale == 0.0 { 0.0 } else { res / scale }
}

/// Singular value bounds of a compressed operator as a report.
pub fn check_singular_bounds<S: Scalar>(c: &OperatorMatrix<S>, tolerance: f64) -> VerificationReport {
    let b = singular_bounds(c);
    VerificationReport::from(vec![
        CheckRecord::defect("composition.isometry", (b.c0 - 1.0).abs().max((b.c1 - 1.0).abs()), tolerance)
            .with("c0", b.c0)
            .with("c1", b.c1),
    ])
}

/// Relation defects of an explicit matrix list (used for exported matrices).
pub fn matrix_relations<S: Scalar>(isometries: &[DMatrix<S>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in isometries.iter().enumerate() {
        for (j, b) in isometries.iter().enumerate() {
            let g = crate::discretize::matrix::matmul(&crate::discretize::matrix::adjoint(a), b);
            worst = worst.max(if i == j { identity_defect(&g) } else { spectral_norm(&g) });
        }
    }
    worst
}
