//! Maximum-entropy (grand-canonical) states for a list of conserved charges.
//!
//! Base-2 convention: tau_beta = 2^(-sum_i beta_i A_i) / Z with
//! Z = tr 2^(-sum_i beta_i A_i), so inverse temperatures are in
//! 1/(bit-energy) units. Multiply by ln 2 for the natural-log convention.

use crate::error::{Error, Result};
use crate::linalg::{cr, eigh, CMatrix};
use crate::observable::Observable;
use crate::state::DensityMatrix;

fn exponent_matrix(charges: &[Observable], betas: &[f64]) -> Result<CMatrix> {
    if charges.is_empty() || charges.len() != betas.len() {
        return Err(Error::InfeasibleTargets(
            "charges and betas must be nonempty lists of equal length".into(),
        ));
    }
    let dim = charges[0].dim();
    for ch in charges {
        if ch.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: ch.dim(),
            });
        }
    }
    let mut k = CMatrix::zeros(dim, dim);
    for (ch, &b) in charges.iter().zip(betas) {
        k += ch.entries().scale(b);
    }
    Ok(k)
}

/// tau = 2^(-sum beta_i A_i) / Z via the eigendecomposition of the exponent.
pub fn gibbs_state(charges: &[Observable], betas: &[f64]) -> Result<DensityMatrix> {
    let k = exponent_matrix(charges, betas)?;
    let (vals, vecs) = eigh(&k);
    let dim = k.nrows();
    // Shift by the minimum eigenvalue so the largest weight is exactly 1.
    let kmin = vals[0];
    let weights: Vec<f64> = vals.iter().map(|&v| 2f64.powf(-(v - kmin))).collect();
    let z: f64 = weights.iter().sum();
    let mut diag = CMatrix::zeros(dim, dim);
    for (i, &w) in weights.iter().enumerate() {
        diag[(i, i)] = cr(w / z);
    }
    let m = &vecs * diag * vecs.adjoint();
    Ok(DensityMatrix::new_unchecked(
        m,
        vec![dim], // callers can re-wrap with a finer factorisation if needed
    ))
}

/// log2 of the partition function, shift-stabilised.
pub fn log2_partition(charges: &[Observable], betas: &[f64]) -> Result<f64> {
    let k = exponent_matrix(charges, betas)?;
    let (vals, _) = eigh(&k);
    let kmin = vals[0];
    let s: f64 = vals.iter().map(|&v| 2f64.powf(-(v - kmin))).sum();
    Ok(s.log2() - kmin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{relative_entropy, von_neumann_entropy};
    use crate::linalg::{c, cr, CMatrix};
    use crate::observable::expectation;

    pub(crate) fn pauli_x() -> Observable {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = cr(1.0);
        m[(1, 0)] = cr(1.0);
        Observable::new(m, "Sx").unwrap()
    }

    pub(crate) fn pauli_z() -> Observable {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = cr(1.0);
        m[(1, 1)] = cr(-1.0);
        Observable::new(m, "Sz").unwrap()
    }

    #[test]
    fn zero_betas_give_uniform_state() {
        let tau = gibbs_state(&[pauli_x(), pauli_z()], &[0.0, 0.0]).unwrap();
        let target = crate::state::DensityMatrix::maximally_mixed(2);
        assert!((tau.entries() - target.entries()).norm() < 1e-13);
    }

    #[test]
    fn large_beta_approaches_ground_state() {
        let mut h = CMatrix::zeros(2, 2);
        h[(1, 1)] = cr(1.0);
        let h = Observable::new(h, "H").unwrap();
        let tau = gibbs_state(&[h], &[200.0]).unwrap();
        assert!((tau.entries()[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noncommuting_charges_give_valid_state() {
        let tau = gibbs_state(&[pauli_x(), pauli_z()], &[1.0, 1.0]).unwrap();
        crate::state::DensityMatrix::new(tau.entries().clone(), vec![2]).unwrap();
        // Closed form: exponent K = Sx + Sz has eigenvalues +-sqrt(2);
        // <K> = -sqrt(2) tanh(sqrt(2) ln 2).
        let k_obs = Observable::new(
            (pauli_x().entries() + pauli_z().entries()).clone_owned(),
            "K",
        )
        .unwrap();
        let got = expectation(&tau, &k_obs).unwrap();
        let b = 2f64.sqrt();
        let expect = -b * (b * std::f64::consts::LN_2).tanh();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_to_gibbs_matches_affine_form() {
        // D(rho || tau) = sum_i beta_i <A_i>_rho - S(rho) + log2 Z.
        let charges = [pauli_x(), pauli_z()];
        let betas = [0.7, -0.3];
        let tau = gibbs_state(&charges, &betas).unwrap();
        let rho = crate::state::random_density(2, 11);
        let lhs = relative_entropy(&rho, &tau).unwrap().expect_finite();
        let mut rhs = -von_neumann_entropy(&rho) + log2_partition(&charges, &betas).unwrap();
        for (ch, &b) in charges.iter().zip(&betas) {
            rhs += b * expectation(&rho, ch).unwrap();
        }
        assert!((lhs - rhs).abs() < 1e-10, "affine identity off by {}", lhs - rhs);
    }

    #[test]
    fn imaginary_parts_stay_suppressed() {
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 1)] = c(0.3, 0.4);
        m[(1, 0)] = c(0.3, -0.4);
        m[(2, 2)] = cr(-1.0);
        let a = Observable::new(m, "A").unwrap();
        let tau = gibbs_state(&[a], &[1.3]).unwrap();
        crate::state::DensityMatrix::new(tau.entries().clone(), vec![3]).unwrap();
    }
}
