//! Density matrices on finite tensor-product spaces.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{cr, eigh, max_offdiag_from_hermitian, trace, CMatrix, CVector};
use crate::DEFAULT_MAX_DIM;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = -1e-10;

/// Cap on the total dimension of composite operators, overridable through
/// the `MULTIRES_MAX_DIM` environment variable (read once per process).
pub fn max_total_dim() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("MULTIRES_MAX_DIM")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(DEFAULT_MAX_DIM)
    })
}

/// Positive semidefinite, unit-trace Hermitian operator together with the
/// tensor factorisation of its underlying space.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    entries: CMatrix,
    subsystem_dims: Vec<usize>,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-12 elementwise), unit trace (1e-12) and
    /// positive semidefiniteness (min eigenvalue >= -1e-10).
    pub fn new(entries: CMatrix, subsystem_dims: Vec<usize>) -> Result<Self> {
        let dim = entries.nrows();
        if entries.ncols() != dim {
            return Err(Error::InvalidDensity("matrix is not square".into()));
        }
        let prod: usize = subsystem_dims.iter().product();
        if subsystem_dims.is_empty() || prod != dim {
            return Err(Error::InvalidDensity(format!(
                "subsystem dims {:?} do not multiply to {}",
                subsystem_dims, dim
            )));
        }
        let herm = max_offdiag_from_hermitian(&entries);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian, worst deviation {herm:.3e}"
            )));
        }
        let tr = trace(&entries);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace is {tr}")));
        }
        let state = Self {
            entries,
            subsystem_dims,
        };
        let lam_min = state.min_eigenvalue();
        if lam_min < PSD_TOL {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {lam_min:.3e}"
            )));
        }
        Ok(state)
    }

    /// Skips validation; for internal constructions that are exact.
    pub(crate) fn new_unchecked(entries: CMatrix, subsystem_dims: Vec<usize>) -> Self {
        Self {
            entries,
            subsystem_dims,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn subsystem_dims(&self) -> &[usize] {
        &self.subsystem_dims
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (vals, _) = eigh(&self.entries);
        vals[0]
    }

    pub fn eig(&self) -> (Vec<f64>, CMatrix) {
        eigh(&self.entries)
    }

    /// |psi><psi| from a state vector (normalised internally).
    pub fn pure(ket: &CVector, subsystem_dims: Vec<usize>) -> Result<Self> {
        let norm = ket.norm();
        if norm < 1e-300 {
            return Err(Error::InvalidDensity("zero state vector".into()));
        }
        let v = ket.unscale(norm);
        let m = crate::linalg::projector(&v);
        Self::new(m, subsystem_dims)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let m = CMatrix::identity(dim, dim).scale(1.0 / dim as f64);
        Self::new_unchecked(m, vec![dim])
    }

    /// Diagonal state in the computational basis.
    pub fn from_probabilities(probs: &[f64], subsystem_dims: Vec<usize>) -> Result<Self> {
        let dim = probs.len();
        let mut m = CMatrix::zeros(dim, dim);
        for (i, &p) in probs.iter().enumerate() {
            if p < -1e-12 {
                return Err(Error::InvalidDensity(format!("negative weight {p}")));
            }
            m[(i, i)] = cr(p);
        }
        Self::new(m, subsystem_dims)
    }

    /// Kronecker composition; subsystem dims are concatenated.
    pub fn tensor(&self, other: &Self) -> Self {
        let m = self.entries.kronecker(&other.entries);
        let mut dims = self.subsystem_dims.clone();
        dims.extend_from_slice(&other.subsystem_dims);
        Self::new_unchecked(m, dims)
    }

    /// n-fold tensor power, guarded by the dimension cap.
    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDensity("zero-fold tensor power".into()));
        }
        let total = self.dim().checked_pow(n as u32).unwrap_or(usize::MAX);
        if total > max_total_dim() {
            return Err(Error::DimensionCapExceeded {
                requested: total,
                cap: max_total_dim(),
            });
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self);
        }
        Ok(out)
    }

    /// Reduced state on the kept factors (indices into `subsystem_dims`,
    /// ascending order of the kept list is preserved).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let k = self.subsystem_dims.len();
        if keep.is_empty() || keep.iter().any(|&i| i >= k) {
            return Err(Error::BadKeepIndices);
        }
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();

        let dims = &self.subsystem_dims;
        let kept_dims: Vec<usize> = keep_sorted.iter().map(|&i| dims[i]).collect();
        let traced: Vec<usize> = (0..k).filter(|i| !keep_sorted.contains(i)).collect();
        let out_dim: usize = kept_dims.iter().product();
        let tr_dim: usize = traced.iter().map(|&i| dims[i]).product();

        // Strides of each factor in the row-major composite index.
        let mut strides = vec![1usize; k];
        for i in (0..k.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let unrank = |mut idx: usize, factors: &[usize]| -> usize {
            // Maps a multi-index over `factors` to a composite offset.
            let mut off = 0;
            for &f in factors.iter().rev() {
                let d = dims[f];
                off += (idx % d) * strides[f];
                idx /= d;
            }
            off
        };

        let mut out = CMatrix::zeros(out_dim, out_dim);
        for a in 0..out_dim {
            let base_a = unrank(a, &keep_sorted);
            for b in 0..out_dim {
                let base_b = unrank(b, &keep_sorted);
                let mut acc = cr(0.0);
                for t in 0..tr_dim {
                    let off = unrank(t, &traced);
                    acc += self.entries[(base_a + off, base_b + off)];
                }
                out[(a, b)] = acc;
            }
        }
        Ok(Self::new_unchecked(out, kept_dims))
    }

    /// Convex mixture of two states on the same space.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let m = self.entries.scale(lambda) + other.entries.scale(1.0 - lambda);
        Ok(Self::new_unchecked(m, self.subsystem_dims.clone()))
    }

    /// Diagonal weights in the eigenbasis of a Hermitian matrix, mostly used
    /// to read populations off in a fixed basis.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }
}

/// Hilbert-Schmidt-distributed random state, GG†/tr(GG†) with standard
/// complex Gaussian G; deterministic in (dim, seed).
pub fn random_density(dim: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_density_with(dim, &mut rng)
}

/// Same ensemble, driven by a caller-owned generator.
pub fn random_density_with(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let mut g = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let (a, b) = gaussian_pair(rng);
            g[(i, j)] = crate::linalg::c(a, b);
        }
    }
    let w = &g * g.adjoint();
    let t = trace(&w).re;
    DensityMatrix::new_unchecked(w.scale(1.0 / t), vec![dim])
}

/// Box-Muller pair of independent standard normals.
fn gaussian_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    (r * th.cos(), r * th.sin())
}
