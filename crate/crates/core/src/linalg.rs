//! Dense Hermitian primitives. Every spectral computation in the crate goes
//! through [`eigh`]; matrix functions (exp, log) are applied to the
//! eigenvalues, never through series expansions.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Eigenvalues below this are treated as part of the null space.
pub const SUPPORT_EPS: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
///
/// The input is symmetrised as (M + M†)/2 first so that accumulated
/// floating-point drift cannot leak into the factorisation.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eigh needs a square matrix");
    if n == 1 {
        return (vec![m[(0, 0)].re], CMatrix::identity(1, 1));
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let decomp = nalgebra::linalg::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        decomp.eigenvalues[a]
            .partial_cmp(&decomp.eigenvalues[b])
            .expect("non-finite eigenvalue")
    });
    let vals: Vec<f64> = order.iter().map(|&i| decomp.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &decomp.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Applies `f` to the eigenvalues of a Hermitian matrix.
pub fn hermitian_fn(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = eigh(m);
    let n = m.nrows();
    let mut diag = CMatrix::zeros(n, n);
    for (i, &v) in vals.iter().enumerate() {
        diag[(i, i)] = cr(f(v));
    }
    &vecs * diag * vecs.adjoint()
}

pub fn trace(m: &CMatrix) -> C64 {
    let mut t = cr(0.0);
    for i in 0..m.nrows() {
        t += m[(i, i)];
    }
    t
}

/// Real part of tr(AB); both inputs Hermitian in practice.
pub fn real_trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut t = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = a[(i, j)] * b[(j, i)];
            t += p.re;
        }
    }
    t
}

pub fn max_offdiag_from_hermitian(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

/// Largest singular value of a Hermitian matrix, i.e. max |eigenvalue|.
pub fn operator_norm(m: &CMatrix) -> f64 {
    let (vals, _) = eigh(m);
    vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Projector |v><v| of a (normalised) column vector.
pub fn projector(v: &CVector) -> CMatrix {
    let n = v.len();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = v[i] * v[j].conj();
        }
    }
    out
}
