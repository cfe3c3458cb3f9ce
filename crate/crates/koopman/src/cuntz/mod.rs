//! Cuntz families implementing the endomorphism α(f) = f∘φ, built from
//! sections or from the polar decomposition of C_φ and a module basis, plus
//! the transfer operator and the pairing between two families.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::discretize::matrix::{adjoint, matmul, normalized_frobenius, spectral_norm};
use crate::discretize::{compress, BasisSpec, OperatorMatrix, Op, Polar, Realization, TruncationBasis};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Sections,
    PolarModuleBasis,
    Twisted,
}

/// Relation defects measured by action on the domain basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FamilyDefects {
    /// max_{i,j} ‖S_i*S_j − δ_ij I‖.
    pub relations: f64,
    /// ‖Σ S_i S_i* − I‖ on the interior block.
    pub completeness: f64,
}

/// Serializable summary of a family.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyMetadata {
    pub route: Route,
    pub size: usize,
    pub domain: BasisSpec,
    pub codomain: BasisSpec,
    pub defects: FamilyDefects,
}

pub struct CuntzFamily<R: Realization> {
    pub route: Route,
    /// The isometries as operator expressions.
    pub ops: Vec<Op<R>>,
    /// Compressions of the isometries from the domain into the codomain basis.
    pub isometries: Vec<OperatorMatrix<R::S>>,
    pub domain: TruncationBasis<R>,
    pub codomain: TruncationBasis<R>,
    pub defects: FamilyDefects,
}

impl<R: Realization> CuntzFamily<R> {
    /// Compress and measure a list of operators. No relation is enforced here;
    /// the recorded defects say how far the list is from a Cuntz family.
    pub fn from_ops(r: &R, route: Route, ops: Vec<Op<R>>, domain: &TruncationBasis<R>, codomain: &TruncationBasis<R>) -> Self {
        let isometries = ops.iter().map(|op| compress(r, op, codomain, domain)).collect();
        let defects = relation_defects(r, &ops, domain);
        CuntzFamily { route, ops, isometries, domain: domain.clone(), codomain: codomain.clone(), defects }
    }

    pub fn size(&self) -> usize {
        self.ops.len()
    }

    pub fn metadata(&self) -> FamilyMetadata {
        FamilyMetadata {
            route: self.route,
            size: self.size(),
            domain: self.domain.spec.clone(),
            codomain: self.codomain.spec.clone(),
            defects: self.defects,
        }
    }

    /// Σ_i S_i T S_i* as an expression.
    pub fn extension(&self, r: &R, t: &Op<R>) -> Op<R> {
        Op::Sum(self.ops.iter().map(|s| Op::Chain(vec![s.clone(), t.clone(), s.adjoint(r)])).collect())
    }
}

pub(crate) fn identity_defect<S: Scalar>(m: &DMatrix<S>) -> f64 {
    spectral_norm(&(m.clone() - DMatrix::identity(m.nrows(), m.ncols())))
}

pub(crate) fn interior_block<S: Scalar>(m: &OperatorMatrix<S>, spec: &BasisSpec) -> DMatrix<S> {
    let idx = spec.interior();
    m.block(&idx, &idx)
}

fn relation_defects<R: Realization>(r: &R, ops: &[Op<R>], domain: &TruncationBasis<R>) -> FamilyDefects {
    let mut relations: f64 = 0.0;
    for (i, si) in ops.iter().enumerate() {
        let si_adj = si.adjoint(r);
        for (j, sj) in ops.iter().enumerate() {
            let g = compress(r, &Op::Chain(vec![si_adj.clone(), sj.clone()]), domain, domain).entries;
            let d = if i == j { identity_defect(&g) } else { spectral_norm(&g) };
            relations = relations.max(d);
        }
    }
    let sum = Op::Sum(ops.iter().map(|s| Op::Chain(vec![s.clone(), s.adjoint(r)])).collect());
    let p = compress(r, &sum, domain, domain);
    let completeness = identity_defect(&interior_block(&p, &domain.spec));
    FamilyDefects { relations, completeness }
}

/// S_i f = χ_{U_i}·(f∘φ)·(u_i∘φ)^{-1/2}.
pub fn cuntz_from_sections<R: Realization>(r: &R, basis_in: &TruncationBasis<R>, basis_out: &TruncationBasis<R>) -> CuntzFamily<R> {
    let ops = (0..r.branch_count()).map(Op::Section).collect();
    CuntzFamily::from_ops(r, Route::Sections, ops, basis_in, basis_out)
}

pub const ROUTE_TOLERANCE: f64 = 1e-6;
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-6;
pub const UNITARY_TOLERANCE: f64 = 1e-10;

/// Agreement between the operator route and the pointwise formula for one test function.
#[derive(Clone, Debug, Serialize)]
pub struct RouteComparison {
    pub function: String,
    /// max |⟨e_j, S_φ* M_a S_φ 1⟩ − ⟨e_j, 𝓛(a)⟩| over interior j.
    pub route_defect: f64,
    /// ‖S_φ* M_a S_φ − M_{𝓛(a)}‖ on the interior block.
    pub off_multiplication_defect: f64,
}

/// The transfer operator 𝓛 with the polar data of C_φ.
pub struct TransferData<R: Realization> {
    /// S_φ = C_φ a_φ^{-1} as an exact expression.
    pub s_phi: Op<R>,
    /// h with a_φ = M_h, namely h = √w.
    pub a_phi: R::Func,
    /// w = Σ u_i.
    pub w: R::Func,
    pub inv_w: R::Func,
    /// ‖a_φ(polar) − M_{√w}‖ on the interior block of the domain.
    pub polar_defect: f64,
    pub comparisons: Vec<RouteComparison>,
}

impl<R: Realization> TransferData<R> {
    /// 𝓛(a)(y) = w(y)^{-1} Σ_i u_i(y) a(ψ_i(y)).
    pub fn apply(&self, r: &R, a: &R::Func) -> R::Func {
        r.transfer(a)
    }

    pub fn max_route_defect(&self) -> f64 {
        self.comparisons.iter().map(|c| c.route_defect).fold(0.0, f64::max)
    }

    pub fn max_off_multiplication(&self) -> f64 {
        self.comparisons.iter().map(|c| c.off_multiplication_defect).fold(0.0, f64::max)
    }
}

/// Build 𝓛 pointwise and reconcile it with S_φ* M_a S_φ, where S_φ is the
/// isometric factor of `polar` (compressed from `basis_in` into `basis_out`).
pub fn transfer<R: Realization>(
    r: &R,
    polar: &Polar<R::S>,
    basis_in: &TruncationBasis<R>,
    basis_out: &TruncationBasis<R>,
    tests: &[(String, R::Func)],
) -> Result<TransferData<R>> {
    if polar.isometry.domain != basis_in.spec || polar.isometry.codomain != basis_out.spec {
        return Err(Error::BasisMismatch("polar factor does not match the given bases".into()));
    }
    let data: TransferData<R> = TransferData {
        s_phi: Op::Chain(vec![Op::Compose, Op::Mult(r.inv_sqrt_density())]),
        a_phi: r.sqrt_density(),
        w: r.density(),
        inv_w: r.inv_density(),
        polar_defect: 0.0,
        comparisons: vec![],
    };
    let interior = basis_in.spec.interior();
    let sqrt_w = compress(r, &Op::Mult(data.a_phi.clone()), basis_in, basis_in);
    let polar_defect = spectral_norm(&(polar.positive.block(&interior, &interior) - sqrt_w.block(&interior, &interior)));

    let one = r.as_vector(&r.constant(<R::S as num_traits::One>::one()));
    let c1 = DMatrix::from_vec(basis_in.size(), 1, basis_in.coordinates(r, &one));
    let s = &polar.isometry.entries;
    let s_adj = adjoint(s);
    let mut comparisons = Vec::with_capacity(tests.len());
    for (name, a) in tests {
        let ma = compress(r, &Op::Mult(a.clone()), basis_out, basis_out).entries;
        let ra = matmul(&s_adj, &matmul(&ma, s));
        let image = matmul(&ra, &c1);
        let la = data.apply(r, a);
        let coords = basis_in.coordinates(r, &r.as_vector(&la));
        let route_defect = interior.iter().map(|&j| (image[(j, 0)].clone() - coords[j].clone()).abs_f64()).fold(0.0, f64::max);
        let mla = compress(r, &Op::Mult(la), basis_in, basis_in).entries;
        let off = spectral_norm(&(DMatrix::from_fn(interior.len(), interior.len(), |p, q| {
            ra[(interior[p], interior[q])].clone() - mla[(interior[p], interior[q])].clone()
        })));
        if route_defect > ROUTE_TOLERANCE {
            return Err(Error::RoutesDisagree { defect: route_defect });
        }
        comparisons.push(RouteComparison { function: name.clone(), route_defect, off_multiplication_defect: off });
    }
    Ok(TransferData { polar_defect, comparisons, ..data })
}

/// An element ξ of the module L^∞(X, μ)_𝓛.
pub struct ModuleVector<R: Realization> {
    pub func: R::Func,
}

impl<R: Realization> Clone for ModuleVector<R> {
    fn clone(&self) -> Self {
        ModuleVector { func: self.func.clone() }
    }
}

impl<R: Realization> ModuleVector<R> {
    /// ξ·a = ξ α(a).
    pub fn right_action(&self, r: &R, a: &R::Func) -> Self {
        ModuleVector { func: r.func_mul(&self.func, &r.compose_phi(a)) }
    }

    /// ⟨self, other⟩_𝓛 = 𝓛(ξ̄ η).
    pub fn inner(&self, r: &R, t: &TransferData<R>, other: &Self) -> R::Func {
        t.apply(r, &r.func_mul(&r.func_conj(&self.func), &other.func))
    }

    /// ‖ξ‖_𝓛 = ‖𝓛(|ξ|²)‖_∞^{1/2}.
    pub fn module_norm(&self, r: &R, t: &TransferData<R>) -> f64 {
        r.func_sup(&self.inner(r, t, self)).sqrt()
    }

    pub fn sup_norm(&self, r: &R) -> f64 {
        r.func_sup(&self.func)
    }
}

/// max_{i,j} sup |⟨ξ_i, ξ_j⟩_𝓛 − δ_ij|.
pub fn orthonormality_defect<R: Realization>(r: &R, t: &TransferData<R>, xis: &[ModuleVector<R>]) -> f64 {
    let (zero, one) = (<R::S as num_traits::Zero>::zero(), <R::S as num_traits::One>::one());
    let mut worst: f64 = 0.0;
    for (i, a) in xis.iter().enumerate() {
        for (j, b) in xis.iter().enumerate() {
            let target = r.constant(if i == j { one.clone() } else { zero.clone() });
            worst = worst.max(r.func_distance(&a.inner(r, t, b), &target));
        }
    }
    worst
}

/// ξ_i = χ_{U_i}·((w/u_i)∘φ)^{1/2}, the vectors with ξ_i S_φ = S_i.
pub fn module_basis_from_sections<R: Realization>(r: &R, t: &TransferData<R>) -> Result<Vec<ModuleVector<R>>> {
    let xis: Vec<ModuleVector<R>> = (0..r.branch_count())
        .map(|i| {
            let weight = r.func_mul(&r.sqrt_density(), &r.inv_sqrt_weight(i));
            ModuleVector { func: r.func_mul(&r.indicator(i), &r.compose_phi(&weight)) }
        })
        .collect();
    let defect = orthonormality_defect(r, t, &xis);
    if defect > ORTHONORMALITY_TOLERANCE {
        return Err(Error::NotOrthonormal { defect });
    }
    Ok(xis)
}

/// The family {M_{ξ_i} S_φ}.
pub fn lift_to_cuntz<R: Realization>(
    r: &R,
    t: &TransferData<R>,
    xis: &[ModuleVector<R>],
    basis_in: &TruncationBasis<R>,
    basis_out: &TruncationBasis<R>,
) -> Result<CuntzFamily<R>> {
    let defect = orthonormality_defect(r, t, xis);
    if defect > ORTHONORMALITY_TOLERANCE {
        return Err(Error::NotOrthonormal { defect });
    }
    let ops = xis.iter().map(|xi| Op::Chain(vec![Op::Mult(xi.func.clone()), t.s_phi.clone()])).collect();
    Ok(CuntzFamily::from_ops(r, Route::PolarModuleBasis, ops, basis_in, basis_out))
}

/// A twist applied to a family.
pub enum TwistSpec<R: Realization> {
    /// Q_j = Σ_i S_i u_ij.
    Scalar(DMatrix<R::S>),
    /// Q_i = S_i M_{m_i} with |m_i| = 1.
    Functions(Vec<R::Func>),
}

pub fn twist_family<R: Realization>(r: &R, s: &CuntzFamily<R>, u: &TwistSpec<R>) -> Result<CuntzFamily<R>> {
    let n = s.size();
    let ops = match u {
        TwistSpec::Scalar(m) => {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::AlphabetMismatch(n, m.nrows()));
            }
            let defect = identity_defect(&matmul(&adjoint(m), m));
            if defect > UNITARY_TOLERANCE {
                return Err(Error::NotUnitary { defect });
            }
            (0..n)
                .map(|j| Op::Sum((0..n).map(|i| Op::Scale(m[(i, j)].clone(), Box::new(s.ops[i].clone()))).collect()))
                .collect()
        }
        TwistSpec::Functions(ms) => {
            if ms.len() != n {
                return Err(Error::AlphabetMismatch(n, ms.len()));
            }
            let one = r.constant(<R::S as num_traits::One>::one());
            for m in ms {
                let defect = r.func_distance(&r.func_mul(&r.func_conj(m), m), &one);
                if defect > UNITARY_TOLERANCE {
                    return Err(Error::NotUnitary { defect });
                }
            }
            s.ops.iter().zip(ms).map(|(op, m)| Op::Chain(vec![op.clone(), Op::Mult(m.clone())])).collect()
        }
    };
    Ok(CuntzFamily::from_ops(r, Route::Twisted, ops, &s.domain, &s.codomain))
}

/// The array U_ij = S_i* Q_j with its scalarity and block-unitarity defects.
pub struct Pairing<S: Scalar> {
    pub entries: Vec<Vec<OperatorMatrix<S>>>,
    /// ‖U_ij − λ_ij I‖_F/√dim with λ_ij = tr(U_ij)/dim.
    pub scalarity: Vec<Vec<f64>>,
    pub lambdas: Vec<Vec<S>>,
    /// max_{i,k} ‖Σ_j U_ij U_kj* − δ_ik I‖ (by action, interior block).
    pub row_unitarity: f64,
    /// max_{j,l} ‖Σ_i U_ij* U_il − δ_jl I‖ (by action, interior block).
    pub column_unitarity: f64,
    /// The common size, reported only when the pairing is square and block-unitary.
    pub recovered_n: Option<usize>,
}

impl<S: Scalar> Pairing<S> {
    pub fn max_scalarity(&self) -> f64 {
        self.scalarity.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// The matrix of λ_ij.
    pub fn scalar_matrix(&self) -> DMatrix<S> {
        DMatrix::from_fn(self.lambdas.len(), self.lambdas.first().map_or(0, |r| r.len()), |i, j| self.lambdas[i][j].clone())
    }
}

pub fn pairing_matrix<R: Realization>(r: &R, s: &CuntzFamily<R>, q: &CuntzFamily<R>, tolerance: f64) -> Result<Pairing<R::S>> {
    if s.domain.spec != q.domain.spec {
        return Err(Error::BasisMismatch(format!("{} vs {}", s.domain.spec.label(), q.domain.spec.label())));
    }
    let dom = &s.domain;
    let dim = dom.size();
    let s_adj: Vec<Op<R>> = s.ops.iter().map(|a| a.adjoint(r)).collect();
    let q_adj: Vec<Op<R>> = q.ops.iter().map(|a| a.adjoint(r)).collect();
    let mut entries = Vec::new();
    let mut scalarity = Vec::new();
    let mut lambdas = Vec::new();
    for si in &s_adj {
        let (mut er, mut sr, mut lr) = (Vec::new(), Vec::new(), Vec::new());
        for qj in &q.ops {
            let u = compress(r, &Op::Chain(vec![si.clone(), qj.clone()]), dom, dom);
            let trace = (0..dim).fold(<R::S as num_traits::Zero>::zero(), |acc, k| acc + u.entries[(k, k)].clone());
            let lambda = trace * R::S::from_ratio(1, dim as i64);
            let off = u.entries.clone() - DMatrix::from_diagonal_element(dim, dim, lambda.clone());
            sr.push(normalized_frobenius(&off));
            lr.push(lambda);
            er.push(u);
        }
        entries.push(er);
        scalarity.push(sr);
        lambdas.push(lr);
    }
    let block_defect = |left: &[Op<R>], mid_l: &[Op<R>], mid_r: &[Op<R>], right: &[Op<R>]| {
        let mut worst: f64 = 0.0;
        for (a, la) in left.iter().enumerate() {
            for (b, rb) in right.iter().enumerate() {
                let sum = Op::Sum(
                    mid_l.iter().zip(mid_r).map(|(x, y)| Op::Chain(vec![la.clone(), x.clone(), y.clone(), rb.clone()])).collect(),
                );
                let m = compress(r, &sum, dom, dom);
                let blk = interior_block(&m, &dom.spec);
                worst = worst.max(if a == b { identity_defect(&blk) } else { spectral_norm(&blk) });
            }
        }
        worst
    };
    let row_unitarity = block_defect(&s_adj, &q.ops, &q_adj, &s.ops);
    let column_unitarity = block_defect(&q_adj, &s.ops, &s_adj, &q.ops);
    let mut pairing = Pairing { entries, scalarity, lambdas, row_unitarity, column_unitarity, recovered_n: None };
    if s.size() == q.size() && row_unitarity <= tolerance && column_unitarity <= tolerance {
        pairing.recovered_n = Some(s.size());
    }
    Ok(pairing)
}

#[cfg(test)]
mod tests;
