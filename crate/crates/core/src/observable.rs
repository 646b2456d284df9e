//! Hermitian observables, Kronecker-sum embeddings and expectation values.

use crate::error::{Error, Result};
use crate::linalg::{eigh, max_offdiag_from_hermitian, real_trace_product, CMatrix};
use crate::state::{max_total_dim, DensityMatrix};

const HERMITIAN_TOL: f64 = 1e-12;
const IMAG_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Observable {
    entries: CMatrix,
    label: String,
}

impl Observable {
    pub fn new(entries: CMatrix, label: impl Into<String>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidObservable("matrix is not square".into()));
        }
        let dev = max_offdiag_from_hermitian(&entries);
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidObservable(format!(
                "not Hermitian, worst deviation {dev:.3e}"
            )));
        }
        Ok(Self {
            entries,
            label: label.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eig(&self) -> (Vec<f64>, CMatrix) {
        eigh(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig().0[0]
    }

    pub fn operator_norm(&self) -> f64 {
        crate::linalg::operator_norm(&self.entries)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            entries: self.entries.kronecker(&other.entries),
            label: format!("{}x{}", self.label, other.label),
        }
    }
}

/// Kronecker sum sum_i I ⊗ .. ⊗ A ⊗ .. ⊗ I on the n-fold space, the
/// observable of n non-interacting copies.
pub fn sum_embed(a: &Observable, n: usize) -> Result<Observable> {
    assert!(n >= 1, "sum_embed needs n >= 1");
    let d = a.dim();
    let total = d.checked_pow(n as u32).unwrap_or(usize::MAX);
    let cap = max_total_dim();
    if total > cap {
        return Err(Error::DimensionCapExceeded {
            requested: total,
            cap,
        });
    }
    let mut out = CMatrix::zeros(total, total);
    for slot in 0..n {
        let left = d.pow(slot as u32);
        let right = d.pow((n - 1 - slot) as u32);
        let term = CMatrix::identity(left, left)
            .kronecker(&a.entries)
            .kronecker(&CMatrix::identity(right, right));
        out += term;
    }
    Observable::new(out, format!("{}(n={})", a.label, n))
}

/// Real part of tr(rho A); errors if the imaginary residue exceeds 1e-10.
pub fn expectation(rho: &DensityMatrix, a: &Observable) -> Result<f64> {
    if rho.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: rho.dim(),
        });
    }
    let mut im = 0.0f64;
    let n = rho.dim();
    for i in 0..n {
        for j in 0..n {
            im += (rho.entries()[(i, j)] * a.entries()[(j, i)]).im;
        }
    }
    if im.abs() > IMAG_TOL {
        return Err(Error::ImaginaryResidue(im.abs()));
    }
    Ok(real_trace_product(rho.entries(), a.entries()))
}
