//! Entropies and divergences, all in bits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eigh, SUPPORT_EPS};
use crate::state::DensityMatrix;

/// A real number or a positive-infinity marker, the codomain of the
/// relative entropy when the support condition fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ExtendedReal {
    Finite(f64),
    Infinity,
}

impl ExtendedReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    /// Finite value, panicking on the infinity marker.
    pub fn expect_finite(&self) -> f64 {
        match self {
            ExtendedReal::Finite(v) => *v,
            ExtendedReal::Infinity => panic!("expected a finite value, got infinity"),
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(*v),
            ExtendedReal::Infinity => None,
        }
    }
}

impl std::fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::Infinity => write!(f, "inf"),
        }
    }
}

fn xlog2x(x: f64) -> f64 {
    if x < 1e-12 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Von Neumann entropy -sum lambda log2 lambda in bits, with the 0 log 0 = 0
/// convention for eigenvalues below 1e-12.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let (vals, _) = rho.eig();
    -vals.iter().map(|&l| xlog2x(l)).sum::<f64>()
}

/// Relative entropy tr[rho (log2 rho - log2 sigma)] computed in the
/// eigenbases of the two operators. Returns the infinity marker when an
/// eigenvector of rho with eigenvalue above 1e-10 overlaps the null space of
/// sigma by more than 1e-10 in squared norm.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ExtendedReal> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    let (p, u) = rho.eig();
    let (q, v) = sigma.eig();
    let overlap = u.adjoint() * &v; // overlap[(i,j)] = <u_i|v_j>

    let n = rho.dim();
    let mut acc = 0.0f64;
    for i in 0..n {
        if p[i] <= SUPPORT_EPS {
            continue;
        }
        let mut null_mass = 0.0f64;
        let mut cross = 0.0f64;
        for j in 0..n {
            let w = overlap[(i, j)].norm_sqr();
            if q[j] <= SUPPORT_EPS {
                null_mass += w;
            } else {
                cross += w * q[j].log2();
            }
        }
        if null_mass > SUPPORT_EPS {
            return Ok(ExtendedReal::Infinity);
        }
        acc += p[i] * p[i].log2() - p[i] * cross;
    }
    Ok(ExtendedReal::Finite(acc))
}

/// Trace norm distance ||rho - sigma||_1 = sum |eigenvalues of rho - sigma|.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    let diff = rho.entries() - sigma.entries();
    let (vals, _) = eigh(&diff);
    Ok(vals.iter().map(|v| v.abs()).sum())
}

/// Binary entropy h(p) = -p log2 p - (1-p) log2 (1-p).
pub fn binary_entropy(p: f64) -> f64 {
    -xlog2x(p) - xlog2x(1.0 - p)
}

/// Binary relative entropy d(x || p) in bits.
pub fn binary_kl(x: f64, p: f64) -> f64 {
    let mut acc = 0.0;
    if x > 1e-15 {
        acc += x * (x / p).log2();
    }
    if 1.0 - x > 1e-15 {
        acc += (1.0 - x) * ((1.0 - x) / (1.0 - p)).log2();
    }
    acc
}
