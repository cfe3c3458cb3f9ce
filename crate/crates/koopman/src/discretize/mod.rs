//! Truncated orthonormal bases, compressions of operators on L²(X, μ), and the
//! composition operator with its polar decomposition.
//!
//! Operators are never multiplied as truncated matrices when an identity is
//! being checked. Instead an [`Op`] expression is applied to each domain basis
//! vector in the underlying realization (exact cylinder sums or closures
//! evaluated by quadrature) and only the final result is compressed.

mod circle;
mod cylinder;
pub mod matrix;
mod op;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use circle::{CircleFn, CircleRealization, QuadratureOptions};
pub use cylinder::{CylFn, CylVec, CylinderRealization};
pub use matrix::{OperatorMatrix, SingularBounds};
pub use op::{apply, apply_many, compress, FiniteOp, Op};

use crate::dynamics::{BranchDecomposition, SystemDescriptor};
use crate::error::{Error, Result};
use crate::scalar::{FloatScalar, Scalar, C64};

/// Descriptor of a truncation basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BasisSpec {
    /// Modes |k| ≤ k_max; `weighted` bases are orthonormalized against ρ dθ.
    FourierModes { k_max: usize, weighted: bool },
    /// Normalized indicators of the N^depth cylinders.
    CylinderDepth { symbols: usize, depth: usize },
    /// Cylinder indicators times Fourier modes in the second factor.
    TensorProduct { symbols: usize, depth: usize, k_max: usize },
}

impl BasisSpec {
    pub fn size(&self) -> usize {
        match *self {
            BasisSpec::FourierModes { k_max, .. } => 2 * k_max + 1,
            BasisSpec::CylinderDepth { symbols, depth } => symbols.pow(depth as u32),
            BasisSpec::TensorProduct { symbols, depth, k_max } => symbols.pow(depth as u32) * (2 * k_max + 1),
        }
    }

    /// Fourier mode attached to each index (empty for cylinder bases).
    ///
    /// Plain Fourier bases run −K..K. Weighted bases are orthonormalized in the
    /// order 0, 1, −1, 2, −2, … so that every prefix spans a symmetric band.
    pub fn modes(&self) -> Vec<i64> {
        match *self {
            BasisSpec::FourierModes { k_max, weighted: false } => (-(k_max as i64)..=k_max as i64).collect(),
            BasisSpec::FourierModes { k_max, weighted: true } => band_order(k_max),
            BasisSpec::TensorProduct { k_max, .. } => (-(k_max as i64)..=k_max as i64).collect(),
            BasisSpec::CylinderDepth { .. } => vec![],
        }
    }

    /// Indices of the interior block: Fourier modes with |k| ≤ K/2, every
    /// cylinder index, and tensor indices whose mode satisfies the same bound.
    pub fn interior(&self) -> Vec<usize> {
        match *self {
            BasisSpec::FourierModes { k_max, .. } => {
                let half = (k_max / 2) as i64;
                self.modes().iter().enumerate().filter(|(_, k)| k.abs() <= half).map(|(j, _)| j).collect()
            }
            BasisSpec::CylinderDepth { .. } => (0..self.size()).collect(),
            BasisSpec::TensorProduct { k_max, .. } => {
                let width = 2 * k_max + 1;
                let half = k_max / 2;
                (0..self.size()).filter(|j| (j % width).abs_diff(k_max) <= half).collect()
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            BasisSpec::FourierModes { k_max, weighted } => format!("fourier-{k_max}{}", if weighted { "w" } else { "" }),
            BasisSpec::CylinderDepth { depth, .. } => format!("cylinder-{depth}"),
            BasisSpec::TensorProduct { depth, k_max, .. } => format!("tensor-{depth}x{k_max}"),
        }
    }
}

fn band_order(k_max: usize) -> Vec<i64> {
    let mut out = vec![0];
    for k in 1..=k_max as i64 {
        out.push(k);
        out.push(-k);
    }
    out
}

/// Basis vectors of a [`BasisSpec`] inside a realization.
pub struct TruncationBasis<R: Realization> {
    pub spec: BasisSpec,
    pub vectors: Vec<R::Vector>,
}

impl<R: Realization> Clone for TruncationBasis<R> {
    fn clone(&self) -> Self {
        TruncationBasis { spec: self.spec.clone(), vectors: self.vectors.clone() }
    }
}

impl<R: Realization> std::fmt::Debug for TruncationBasis<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TruncationBasis").field("spec", &self.spec).finish()
    }
}

impl<R: Realization> TruncationBasis<R> {
    pub fn size(&self) -> usize {
        self.vectors.len()
    }

    /// Coordinates ⟨e_j, v⟩.
    pub fn coordinates(&self, r: &R, v: &R::Vector) -> Vec<R::S> {
        r.gram(&self.vectors, std::slice::from_ref(v)).iter().cloned().collect()
    }

    /// Σ c_j e_j.
    pub fn synthesize(&self, r: &R, coords: &[R::S]) -> R::Vector {
        r.combine(coords.iter().cloned().zip(self.vectors.iter().cloned()).collect())
    }
}

/// A concrete model of L²(X, μ) and L^∞(X, μ) for one system: the primitive
/// operators S_i, C_φ, M_f act on vectors; functions form an algebra with
/// the pullbacks along φ and the sections ψ_i.
///
/// Branch indices are 0-based throughout.
pub trait Realization: Send + Sync + Sized {
    type S: Scalar;
    type Vector: Clone + Send + Sync;
    type Func: Clone + Send + Sync;

    fn system(&self) -> &SystemDescriptor;
    fn decomposition(&self) -> &BranchDecomposition;

    fn branch_count(&self) -> usize {
        self.system().branch_count
    }

    fn basis(&self, spec: &BasisSpec) -> Result<TruncationBasis<Self>>;

    /// S_i f = χ_{U_i} (f∘φ) (u_i∘φ)^{-1/2}.
    fn section(&self, i: usize, v: &Self::Vector) -> Self::Vector;
    fn section_adj(&self, i: usize, v: &Self::Vector) -> Self::Vector;
    /// C_φ f = f∘φ.
    fn compose(&self, v: &Self::Vector) -> Self::Vector;
    fn compose_adj(&self, v: &Self::Vector) -> Self::Vector;
    fn multiply(&self, f: &Self::Func, v: &Self::Vector) -> Self::Vector;
    fn combine(&self, terms: Vec<(Self::S, Self::Vector)>) -> Self::Vector;
    fn zero_vector(&self) -> Self::Vector;
    /// ⟨a, b⟩_μ, antilinear in `a`.
    fn inner(&self, a: &Self::Vector, b: &Self::Vector) -> Self::S;

    /// Matrix of ⟨rows_j, cols_k⟩.
    fn gram(&self, rows: &[Self::Vector], cols: &[Self::Vector]) -> DMatrix<Self::S> {
        DMatrix::from_fn(rows.len(), cols.len(), |j, k| self.inner(&rows[j], &cols[k]))
    }

    fn norm_sqr(&self, v: &Self::Vector) -> f64 {
        self.inner(v, v).to_c64().re
    }

    fn constant(&self, c: Self::S) -> Self::Func;
    fn as_vector(&self, f: &Self::Func) -> Self::Vector;
    fn as_func(&self, v: &Self::Vector) -> Self::Func;
    fn func_mul(&self, a: &Self::Func, b: &Self::Func) -> Self::Func;
    fn func_combine(&self, terms: Vec<(Self::S, Self::Func)>) -> Self::Func;
    fn func_conj(&self, a: &Self::Func) -> Self::Func;
    /// a∘φ.
    fn compose_phi(&self, a: &Self::Func) -> Self::Func;
    /// a∘ψ_i.
    fn compose_psi(&self, i: usize, a: &Self::Func) -> Self::Func;
    fn indicator(&self, i: usize) -> Self::Func;
    /// u_i.
    fn weight(&self, i: usize) -> Self::Func;
    fn sqrt_weight(&self, i: usize) -> Self::Func;
    fn inv_sqrt_weight(&self, i: usize) -> Self::Func;
    /// w = Σ u_i.
    fn density(&self) -> Self::Func;
    fn sqrt_density(&self) -> Self::Func;
    fn inv_sqrt_density(&self) -> Self::Func;
    fn inv_density(&self) -> Self::Func;

    /// The transfer operator 𝓛(a) = w^{-1} Σ_i u_i (a∘ψ_i).
    fn transfer(&self, a: &Self::Func) -> Self::Func {
        let one = <Self::S as num_traits::One>::one();
        let n = self.branch_count();
        let terms = (0..n).map(|i| (one.clone(), self.func_mul(&self.weight(i), &self.compose_psi(i, a)))).collect();
        self.func_mul(&self.inv_density(), &self.func_combine(terms))
    }

    /// Sampled sup |a − b|; exact on cylinder functions.
    fn func_distance(&self, a: &Self::Func, b: &Self::Func) -> f64;
    /// Sampled (min, max) of the real part and max of |imaginary part|.
    fn func_real_range(&self, a: &Self::Func) -> (f64, f64, f64);

    fn func_sup(&self, a: &Self::Func) -> f64 {
        self.func_distance(a, &self.constant(<Self::S as num_traits::Zero>::zero()))
    }

    /// A small family of bounded test functions for the identity checks.
    fn test_functions(&self) -> Vec<(String, Self::Func)>;

    /// Bounded functions spanning the truncated function algebra, used as a
    /// regression basis (the functions behind the basis vectors).
    fn basis_functions(&self, spec: &BasisSpec) -> Result<Vec<Self::Func>> {
        Ok(self.basis(spec)?.vectors.iter().map(|v| self.as_func(v)).collect())
    }
}

/// Compression of M_f from `basis` into `codomain`.
pub fn multiplication_operator<R: Realization>(
    r: &R,
    f: &R::Func,
    basis: &TruncationBasis<R>,
    codomain: &TruncationBasis<R>,
) -> OperatorMatrix<R::S> {
    compress(r, &Op::Mult(f.clone()), codomain, basis)
}

/// Compression of C_φ together with the mass each pulled-back basis vector
/// leaves outside the codomain.
#[derive(Clone, Debug)]
pub struct CompositionOperator<S: Scalar> {
    pub matrix: OperatorMatrix<S>,
    /// Per column 1 − ‖P(e_k∘φ)‖²/‖e_k∘φ‖².
    pub spillover: Vec<f64>,
}

impl<S: Scalar> CompositionOperator<S> {
    pub fn max_spillover(&self) -> f64 {
        self.spillover.iter().copied().fold(0.0, f64::max)
    }
}

pub const DEFAULT_SPILLOVER: f64 = 1e-8;

pub fn composition_operator<R: Realization>(
    r: &R,
    basis_in: &TruncationBasis<R>,
    basis_out: &TruncationBasis<R>,
    spillover_tolerance: f64,
) -> Result<CompositionOperator<R::S>> {
    let images: Vec<R::Vector> = basis_in.vectors.iter().map(|v| r.compose(v)).collect();
    let entries = r.gram(&basis_out.vectors, &images);
    let spillover: Vec<f64> = images
        .iter()
        .enumerate()
        .map(|(k, img)| {
            let total = r.norm_sqr(img);
            let kept: f64 = entries.column(k).iter().map(|x| x.to_c64().norm_sqr()).sum();
            if total == 0.0 { 0.0 } else { ((total - kept) / total).max(0.0) }
        })
        .collect();
    if let Some((column, &mass)) = spillover.iter().enumerate().find(|(_, &m)| m > spillover_tolerance) {
        return Err(Error::Spillover { column, mass, tolerance: spillover_tolerance });
    }
    let matrix = OperatorMatrix::new(basis_in.spec.clone(), basis_out.spec.clone(), entries);
    Ok(CompositionOperator { matrix, spillover })
}

/// C = S·a with a = (C*C)^{1/2} and S an isometry.
#[derive(Clone, Debug)]
pub struct Polar<S: Scalar> {
    pub isometry: OperatorMatrix<S>,
    pub positive: OperatorMatrix<S>,
}

pub const RANK_CUTOFF: f64 = 1e-10;

/// Polar decomposition. Floating types go through the SVD C = UΣV*, giving
/// S = UV* and a = VΣV*. Exact types are supported only when C is already
/// an isometry, where S = C and a = I.
pub fn polar_decompose<S: Scalar>(c: &OperatorMatrix<S>) -> Result<Polar<S>> {
    if S::EXACT {
        let ctc = matrix::matmul(&matrix::adjoint(&c.entries), &c.entries);
        let id = DMatrix::<S>::identity(c.cols(), c.cols());
        if ctc != id {
            return Err(Error::ExactPolarUnsupported);
        }
        return Ok(Polar { isometry: c.clone(), positive: OperatorMatrix::identity(c.domain.clone()) });
    }
    let m = c.to_c64();
    let svd = m.svd(true, true);
    let sigma_min = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if c.cols() > c.rows() || sigma_min <= RANK_CUTOFF {
        return Err(Error::RankDeficient { sigma_min: if c.cols() > c.rows() { 0.0 } else { sigma_min } });
    }
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v requested");
    let sigma = DMatrix::from_diagonal(&svd.singular_values.map(|s| C64::new(s, 0.0)));
    let iso = &u * &v_t;
    let pos = v_t.adjoint() * sigma * &v_t;
    let back = |m: DMatrix<C64>| m.map(|z| S::try_from_c64(z).expect("float scalar"));
    Ok(Polar {
        isometry: OperatorMatrix::new(c.domain.clone(), c.codomain.clone(), back(iso)),
        positive: OperatorMatrix::new(c.domain.clone(), c.domain.clone(), back(pos)),
    })
}

/// (σ_min, σ_max) of the truncation; (0, 0) for the zero matrix.
pub fn singular_bounds<S: Scalar>(c: &OperatorMatrix<S>) -> SingularBounds {
    if matrix::is_zero_matrix(&c.entries) {
        return SingularBounds { c0: 0.0, c1: 0.0 };
    }
    let s = matrix::singular_values(&c.to_c64());
    let c0 = if c.cols() > c.rows() { 0.0 } else { s.last().copied().unwrap_or(0.0) };
    SingularBounds { c0, c1: s.first().copied().unwrap_or(0.0) }
}

/// Pick the realization for a floating scalar from a system kind.
pub fn float_realization<S: FloatScalar>(sys: &SystemDescriptor, options: QuadratureOptions) -> Result<AnyRealization<S>> {
    if sys.kind.is_circle() {
        Ok(AnyRealization::Circle(CircleRealization::new(sys.clone(), options)?))
    } else {
        Ok(AnyRealization::Cylinder(CylinderRealization::new(sys.clone())?))
    }
}

/// Either realization, for callers that branch on the system kind at runtime.
pub enum AnyRealization<S: FloatScalar> {
    Circle(CircleRealization<S>),
    Cylinder(CylinderRealization<S>),
}
