//! Dense operator matrices between truncation bases, plus the small amount of
//! linear algebra the checks need (spectral norms, ranks, export).

use std::io::{self, Write};

use nalgebra::DMatrix;
use serde::Serialize;

use super::BasisSpec;
use crate::scalar::{Scalar, C64};

/// Matrix of an operator from `domain` to `codomain` (codomain.size × domain.size).
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix<S: Scalar> {
    pub domain: BasisSpec,
    pub codomain: BasisSpec,
    pub entries: DMatrix<S>,
}

/// Header magic of the binary export: eight bytes, then rows and cols as u64 LE.
pub const MATRIX_MAGIC: &[u8; 8] = b"KOOPMAT1";

impl<S: Scalar> OperatorMatrix<S> {
    pub fn new(domain: BasisSpec, codomain: BasisSpec, entries: DMatrix<S>) -> Self {
        assert_eq!(entries.nrows(), codomain.size(), "codomain size");
        assert_eq!(entries.ncols(), domain.size(), "domain size");
        OperatorMatrix { domain, codomain, entries }
    }

    pub fn identity(basis: BasisSpec) -> Self {
        let n = basis.size();
        OperatorMatrix::new(basis.clone(), basis, DMatrix::identity(n, n))
    }

    pub fn zeros(domain: BasisSpec, codomain: BasisSpec) -> Self {
        let (r, c) = (codomain.size(), domain.size());
        OperatorMatrix::new(domain, codomain, DMatrix::zeros(r, c))
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            entries: adjoint(&self.entries),
        }
    }

    /// self ∘ rhs.
    pub fn compose(&self, rhs: &OperatorMatrix<S>) -> Self {
        assert_eq!(self.domain, rhs.codomain, "composition across different bases");
        OperatorMatrix {
            domain: rhs.domain.clone(),
            codomain: self.codomain.clone(),
            entries: matmul(&self.entries, &rhs.entries),
        }
    }

    pub fn sub(&self, rhs: &OperatorMatrix<S>) -> Self {
        assert_eq!(self.entries.shape(), rhs.entries.shape());
        OperatorMatrix {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            entries: self.entries.clone() - rhs.entries.clone(),
        }
    }

    pub fn to_c64(&self) -> DMatrix<C64> {
        self.entries.map(|x| x.to_c64())
    }

    /// Principal sub-block on the given codomain rows and domain columns.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<S> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.entries[(rows[i], cols[j])].clone())
    }

    /// Row-major complex doubles behind a 24-byte header.
    pub fn write_binary<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(MATRIX_MAGIC)?;
        out.write_all(&(self.rows() as u64).to_le_bytes())?;
        out.write_all(&(self.cols() as u64).to_le_bytes())?;
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                let z = self.entries[(i, j)].to_c64();
                out.write_all(&z.re.to_le_bytes())?;
                out.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "row,col,re,im")?;
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                let z = self.entries[(i, j)].to_c64();
                writeln!(out, "{i},{j},{:e},{:e}", z.re, z.im)?;
            }
        }
        Ok(())
    }
}

/// Parse the binary layout back (rows, cols, row-major entries).
pub fn read_binary(bytes: &[u8]) -> Option<DMatrix<C64>> {
    if bytes.len() < 24 || &bytes[..8] != MATRIX_MAGIC {
        return None;
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().ok()?) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().ok()?) as usize;
    let body = &bytes[24..];
    if body.len() != rows * cols * 16 {
        return None;
    }
    let f = |k: usize| f64::from_le_bytes(body[8 * k..8 * k + 8].try_into().unwrap());
    Some(DMatrix::from_fn(rows, cols, |i, j| {
        let k = 2 * (i * cols + j);
        C64::new(f(k), f(k + 1))
    }))
}

pub fn adjoint<S: Scalar>(m: &DMatrix<S>) -> DMatrix<S> {
    DMatrix::from_fn(m.ncols(), m.nrows(), |i, j| m[(j, i)].conj())
}

/// Product that skips zero entries; exact scalars make this worthwhile.
pub fn matmul<S: Scalar>(a: &DMatrix<S>, b: &DMatrix<S>) -> DMatrix<S> {
    assert_eq!(a.ncols(), b.nrows());
    let mut out = DMatrix::<S>::zeros(a.nrows(), b.ncols());
    for k in 0..a.ncols() {
        for i in 0..a.nrows() {
            let aik = &a[(i, k)];
            if aik.is_zero() {
                continue;
            }
            for j in 0..b.ncols() {
                let bkj = &b[(k, j)];
                if !bkj.is_zero() {
                    out[(i, j)] += aik.clone() * bkj.clone();
                }
            }
        }
    }
    out
}

pub fn is_zero_matrix<S: Scalar>(m: &DMatrix<S>) -> bool {
    m.iter().all(|x| x.is_zero())
}

pub fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Spectral norm; literally 0 when every entry is zero, so exact paths report exact zeros.
pub fn spectral_norm<S: Scalar>(m: &DMatrix<S>) -> f64 {
    if is_zero_matrix(m) {
        return 0.0;
    }
    singular_values(&m.map(|x| x.to_c64())).first().copied().unwrap_or(0.0)
}

/// ‖m‖_F / √(cols).
pub fn normalized_frobenius<S: Scalar>(m: &DMatrix<S>) -> f64 {
    if is_zero_matrix(m) || m.ncols() == 0 {
        return 0.0;
    }
    let s: f64 = m.iter().map(|x| x.to_c64().norm_sqr()).sum();
    (s / m.ncols() as f64).sqrt()
}

/// Rank by exact elimination for exact scalars, by singular values above
/// `cutoff` otherwise.
pub fn rank<S: Scalar>(m: &DMatrix<S>, cutoff: f64) -> usize {
    if S::EXACT {
        exact_rank(m)
    } else {
        singular_values(&m.map(|x| x.to_c64())).iter().filter(|&&s| s > cutoff).count()
    }
}

/// Gaussian elimination with literal zero tests.
pub fn exact_rank<S: Scalar>(m: &DMatrix<S>) -> usize {
    let mut rows: Vec<Vec<S>> = (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect();
    let ncols = m.ncols();
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else { continue };
        rows.swap(rank, p);
        let inv = rows[rank][col].inv().expect("nonzero pivot");
        let pivot: Vec<S> = rows[rank].iter().map(|x| x.clone() * inv.clone()).collect();
        for row in rows.iter_mut().skip(rank + 1) {
            if row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (x, p) in row.iter_mut().zip(&pivot).skip(col) {
                if !p.is_zero() {
                    *x -= f.clone() * p.clone();
                }
            }
        }
        rows[rank] = pivot;
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Summary of a spectrum used in reports.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SingularBounds {
    pub c0: f64,
    pub c1: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Surd;

    fn spec(n: usize) -> BasisSpec {
        BasisSpec::CylinderDepth { symbols: n, depth: 1 }
    }

    #[test]
    fn exact_rank_of_known_matrices() {
        let m = DMatrix::from_fn(3, 3, |i, j| Surd::from_int((i * 3 + j) as i64));
        assert_eq!(exact_rank(&m), 2);
        let id = DMatrix::<Surd>::identity(4, 4);
        assert_eq!(exact_rank(&id), 4);
        let r2 = Surd::sqrt_nat(2);
        let m = DMatrix::from_row_slice(2, 2, &[r2.clone(), Surd::from_int(1), Surd::from_int(2), r2]);
        assert_eq!(exact_rank(&m), 1);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(3.0, 0.0), C64::new(0.0, -4.0)]));
        assert!((spectral_norm(&m) - 4.0).abs() < 1e-14);
        assert_eq!(spectral_norm(&DMatrix::<Surd>::zeros(2, 2)), 0.0);
    }

    #[test]
    fn binary_round_trip() {
        let entries = DMatrix::from_fn(2, 2, |i, j| C64::new(i as f64, j as f64 - 0.5));
        let m = OperatorMatrix::new(spec(2), spec(2), entries.clone());
        let mut buf = Vec::new();
        m.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 24 + 4 * 16);
        assert_eq!(read_binary(&buf).unwrap(), entries);
    }

    #[test]
    fn skipping_matmul_matches_nalgebra() {
        let a = DMatrix::from_fn(3, 4, |i, j| C64::new((i + 2 * j) as f64 % 3.0, 0.5 * j as f64));
        let b = DMatrix::from_fn(4, 2, |i, j| C64::new(i as f64 - j as f64, 1.0));
        assert!((matmul(&a, &b) - &a * &b).norm() < 1e-14);
    }
}
