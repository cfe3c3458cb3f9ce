use super::CuntzElement;
use crate::error::{Error, Result};

/// Matrix over O_N, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuleMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<CuntzElement>,
}

impl ModuleMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<CuntzElement>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::Unsupported(format!("{rows}x{cols} module matrix with {} entries", entries.len())));
        }
        let n = entries[0].alphabet();
        if let Some(e) = entries.iter().find(|e| e.alphabet() != n) {
            return Err(Error::AlphabetMismatch(n, e.alphabet()));
        }
        Ok(ModuleMatrix { rows, cols, entries })
    }

    pub fn row(entries: Vec<CuntzElement>) -> Result<Self> {
        Self::new(1, entries.len(), entries)
    }

    pub fn identity(n: usize, size: usize) -> Self {
        let entries = (0..size * size)
            .map(|k| if k / size == k % size { CuntzElement::one(n) } else { CuntzElement::zero(n) })
            .collect();
        ModuleMatrix { rows: size, cols: size, entries }
    }

    pub fn alphabet(&self) -> usize {
        self.entries[0].alphabet()
    }

    pub fn get(&self, i: usize, j: usize) -> &CuntzElement {
        &self.entries[i * self.cols + j]
    }

    pub fn adjoint(&self) -> Self {
        let entries = (0..self.rows * self.cols)
            .map(|k| self.get(k % self.rows, k / self.rows).adjoint())
            .collect();
        ModuleMatrix { rows: self.cols, cols: self.rows, entries }
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Unsupported(format!("{}x{} times {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        let n = self.alphabet();
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = CuntzElement::zero(n);
                for k in 0..self.cols {
                    acc = acc.try_add(&self.get(i, k).try_mul(other.get(k, j))?)?;
                }
                entries.push(acc);
            }
        }
        Ok(ModuleMatrix { rows: self.rows, cols: other.cols, entries })
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && *self == Self::identity(self.alphabet(), self.rows)
    }
}

/// U U* = 1 and U* U = 1 over O_N.
pub fn module_unitary_check(u: &ModuleMatrix) -> Result<bool> {
    let adj = u.adjoint();
    Ok(u.multiply(&adj)?.is_identity() && adj.multiply(u)?.is_identity())
}

/// The 1×n row [s_1, s_2s_1, s_2s_2s_1, …, s_2^{n-1}] over O_2 obtained by
/// repeatedly splitting the last entry x into [x s_1, x s_2].
pub fn u_n(n: usize) -> ModuleMatrix {
    assert!(n >= 1);
    let mut row = vec![CuntzElement::one(2)];
    for _ in 1..n {
        let last = row.pop().unwrap();
        row.push(&last * &CuntzElement::s(2, 1));
        row.push(&last * &CuntzElement::s(2, 2));
    }
    ModuleMatrix::row(row).expect("nonempty row")
}

#[derive(Clone, Debug, PartialEq)]
pub enum BasisWitness {
    /// b_i* b_j ≠ δ_ij.
    Inner { i: usize, j: usize, got: CuntzElement },
    /// Σ_i b_i (b_i* x) ≠ x.
    Reconstruction { x: CuntzElement, got: CuntzElement },
}

#[derive(Clone, Debug, PartialEq)]
pub enum BasisVerdict {
    Holds,
    Fails(BasisWitness),
}

impl BasisVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, BasisVerdict::Holds)
    }
}

/// Exact check that `basis` is an orthonormal module basis of O_N over itself,
/// reporting the first failure.
pub fn verify_basis(basis: &[CuntzElement], xs: &[CuntzElement]) -> Result<BasisVerdict> {
    let Some(first) = basis.first() else { return Err(Error::Unsupported("empty basis".into())) };
    let n = first.alphabet();
    for (i, b) in basis.iter().enumerate() {
        for (j, c) in basis.iter().enumerate() {
            let got = b.adjoint().try_mul(c)?;
            let want = if i == j { CuntzElement::one(n) } else { CuntzElement::zero(n) };
            if got != want {
                return Ok(BasisVerdict::Fails(BasisWitness::Inner { i, j, got }));
            }
        }
    }
    for x in xs {
        let mut got = CuntzElement::zero(n);
        for b in basis {
            got = got.try_add(&b.try_mul(&b.adjoint().try_mul(x)?)?)?;
        }
        if got != *x {
            return Ok(BasisVerdict::Fails(BasisWitness::Reconstruction { x: x.clone(), got }));
        }
    }
    Ok(BasisVerdict::Holds)
}
