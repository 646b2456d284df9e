//! Convex invariant sets of states and closest-state solvers under the
//! relative entropy.
//!
//! Three representations are supported: a singleton, a box-constrained
//! parameterized family, and the convex hull of finitely many extreme
//! states. Each keeps a solver suited to its structure: the singleton is
//! closed-form, the polytope runs Frank-Wolfe with a Loewner-form gradient,
//! and the family runs multi-start projected gradient descent guarded by a
//! brute-force grid oracle in tests.

use std::sync::Arc;

use crate::entropy::{binary_entropy, relative_entropy, trace_distance, von_neumann_entropy, ExtendedReal};
use crate::error::{Error, Result};
use crate::linalg::{cr, eigh, CMatrix};
use crate::state::DensityMatrix;

/// Parameter-to-state map of a [`ParamFamily`].
pub type StateBuilder = Arc<dyn Fn(&[f64]) -> DensityMatrix + Send + Sync>;

/// Box-constrained parameter family of states.
#[derive(Clone)]
pub struct ParamFamily {
    pub bounds: Vec<(f64, f64)>,
    pub builder: StateBuilder,
    pub label: String,
}

impl std::fmt::Debug for ParamFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParamFamily")
            .field("bounds", &self.bounds)
            .field("label", &self.label)
            .finish()
    }
}

impl ParamFamily {
    pub fn build(&self, theta: &[f64]) -> DensityMatrix {
        (self.builder)(theta)
    }

    pub fn params(&self) -> usize {
        self.bounds.len()
    }

    fn clamp(&self, theta: &mut [f64]) {
        for (t, &(lo, hi)) in theta.iter_mut().zip(&self.bounds) {
            *t = t.max(lo).min(hi);
        }
    }
}

#[derive(Debug, Clone)]
pub enum SetKind {
    Singleton(DensityMatrix),
    ParamFamily(ParamFamily),
    VertexPolytope {
        vertices: Vec<DensityMatrix>,
        /// Set on the two-qubit separable-slice polytope whose closest-state
        /// problem has the binary-entropy closed form on Bell-diagonal
        /// inputs.
        bell_fast_path: bool,
    },
}

#[derive(Debug, Clone)]
pub struct FreeSetSpec {
    pub kind: SetKind,
    pub dim: usize,
    pub full_rank_witness: Option<DensityMatrix>,
    pub label: String,
}

impl FreeSetSpec {
    pub fn singleton(state: DensityMatrix, label: impl Into<String>) -> Self {
        let dim = state.dim();
        let witness = if state.min_eigenvalue() > 0.0 {
            Some(state.clone())
        } else {
            None
        };
        Self {
            kind: SetKind::Singleton(state),
            dim,
            full_rank_witness: witness,
            label: label.into(),
        }
    }

    pub fn polytope(
        vertices: Vec<DensityMatrix>,
        full_rank_witness: Option<DensityMatrix>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::BadTheory("polytope needs at least one vertex".into()));
        }
        let dim = vertices[0].dim();
        if vertices.iter().any(|v| v.dim() != dim) {
            return Err(Error::BadTheory("polytope vertices of unequal dims".into()));
        }
        Ok(Self {
            kind: SetKind::VertexPolytope {
                vertices,
                bell_fast_path: false,
            },
            dim,
            full_rank_witness,
            label: label.into(),
        })
    }

    pub fn family(
        family: ParamFamily,
        full_rank_witness: Option<DensityMatrix>,
        label: impl Into<String>,
    ) -> Self {
        let dim = family.build(&mid_point(&family.bounds)).dim();
        Self {
            kind: SetKind::ParamFamily(family),
            dim,
            full_rank_witness,
            label: label.into(),
        }
    }

    /// A maximal-support element used as the Frank-Wolfe starting point and
    /// for support checks.
    fn interior_element(&self) -> DensityMatrix {
        match &self.kind {
            SetKind::Singleton(s) => s.clone(),
            SetKind::ParamFamily(f) => f.build(&mid_point(&f.bounds)),
            SetKind::VertexPolytope { vertices, .. } => {
                let mut acc = CMatrix::zeros(self.dim, self.dim);
                for v in vertices {
                    acc += v.entries();
                }
                DensityMatrix::new_unchecked(
                    acc.scale(1.0 / vertices.len() as f64),
                    vertices[0].subsystem_dims().to_vec(),
                )
            }
        }
    }
}

fn mid_point(bounds: &[(f64, f64)]) -> Vec<f64> {
    bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect()
}

/// Result of a closest-state solve: the minimiser, the distance in bits, and
/// a certificate on suboptimality (exactly 0 for singletons).
#[derive(Debug, Clone)]
pub struct ClosestStateResult {
    pub argmin: DensityMatrix,
    pub value: ExtendedReal,
    pub iterations: usize,
    pub certificate_gap: f64,
    pub converged: bool,
}

/// Decides membership of `rho` in the set within trace distance `tol`.
pub fn membership(set: &FreeSetSpec, rho: &DensityMatrix, tol: f64) -> Result<bool> {
    if rho.dim() != set.dim {
        return Err(Error::DimensionMismatch {
            expected: set.dim,
            got: rho.dim(),
        });
    }
    match &set.kind {
        SetKind::Singleton(s) => Ok(trace_distance(s, rho)? <= tol),
        SetKind::VertexPolytope { vertices, .. } => {
            let (w, _) = simplex_least_squares(vertices, rho);
            let mixed = mix_vertices(vertices, &w);
            Ok(trace_distance(&mixed, rho)? <= tol)
        }
        SetKind::ParamFamily(fam) => {
            let objective = |theta: &[f64]| {
                trace_distance(&fam.build(theta), rho).unwrap_or(f64::INFINITY)
            };
            let (best, _theta, _gap) = multi_start_descent(fam, &objective, 400);
            Ok(best <= tol)
        }
    }
}

/// inf_{sigma in F} D(rho || sigma), in bits.
pub fn closest_state(
    set: &FreeSetSpec,
    rho: &DensityMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<ClosestStateResult> {
    if rho.dim() != set.dim {
        return Err(Error::DimensionMismatch {
            expected: set.dim,
            got: rho.dim(),
        });
    }
    match &set.kind {
        SetKind::Singleton(s) => Ok(ClosestStateResult {
            argmin: s.clone(),
            value: clamp_nonneg(relative_entropy(rho, s)?),
            iterations: 0,
            certificate_gap: 0.0,
            converged: true,
        }),
        SetKind::VertexPolytope {
            vertices,
            bell_fast_path,
        } => {
            if *bell_fast_path {
                if let Some(weights) = crate::theories::bell_diagonal_weights(rho) {
                    return Ok(css_closed_form(&weights));
                }
            }
            frank_wolfe(vertices, rho, tol, max_iter)
        }
        SetKind::ParamFamily(fam) => param_family_closest(fam, rho, max_iter),
    }
}

/// Closed form for the separable-slice polytope on Bell-diagonal states:
/// the distance is 1 - h(singlet weight) and the minimiser keeps the
/// triplet profile rescaled onto weight 1/2.
fn css_closed_form(weights: &[f64; 4]) -> ClosestStateResult {
    let x = weights[0];
    let value = 1.0 - binary_entropy(x);
    // Normalise by the actual triplet mass; near x = 1 the difference
    // 1 - x cancels catastrophically against the sum of tiny weights.
    let w1 = weights[1].max(0.0);
    let w2 = weights[2].max(0.0);
    let w3 = weights[3].max(0.0);
    let rest = w1 + w2 + w3;
    let q: [f64; 3] = if rest > 1e-12 {
        [w1 / (2.0 * rest), w2 / (2.0 * rest), w3 / (2.0 * rest)]
    } else {
        [1.0 / 6.0; 3]
    };
    let argmin = crate::theories::bell_diagonal(&[0.5, q[0], q[1], q[2]]);
    ClosestStateResult {
        argmin,
        value: ExtendedReal::Finite(value.max(0.0)),
        iterations: 0,
        certificate_gap: 0.0,
        converged: true,
    }
}

/// Gradient of sigma -> -tr[rho log2 sigma] in the Loewner
/// (divided-difference) form, evaluated through the eigendecomposition of
/// sigma.
fn cross_entropy_gradient(rho: &CMatrix, sigma: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(sigma);
    let n = sigma.nrows();
    let rho_t = vecs.adjoint() * rho * &vecs;
    let mut g = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (vals[i].max(1e-300), vals[j].max(1e-300));
            let phi = if (a - b).abs() < 1e-14 * a.max(b).max(1e-300) {
                1.0 / a
            } else {
                (a.ln() - b.ln()) / (a - b)
            };
            g[(i, j)] = rho_t[(i, j)] * cr(phi / std::f64::consts::LN_2);
        }
    }
    -(&vecs * g * vecs.adjoint())
}

fn regularize(sigma: &DensityMatrix) -> DensityMatrix {
    if sigma.min_eigenvalue() > 1e-12 {
        return sigma.clone();
    }
    let d = sigma.dim();
    let eps = 1e-12;
    let m = sigma.entries().scale(1.0 - eps)
        + CMatrix::identity(d, d).scale(eps / d as f64);
    DensityMatrix::new_unchecked(m, sigma.subsystem_dims().to_vec())
}

fn mix_vertices(vertices: &[DensityMatrix], w: &[f64]) -> DensityMatrix {
    let d = vertices[0].dim();
    let mut acc = CMatrix::zeros(d, d);
    for (v, &wi) in vertices.iter().zip(w) {
        acc += v.entries().scale(wi);
    }
    DensityMatrix::new_unchecked(acc, vertices[0].subsystem_dims().to_vec())
}

fn objective_bits(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    match relative_entropy(rho, sigma) {
        Ok(ExtendedReal::Finite(v)) => v,
        _ => f64::INFINITY,
    }
}

/// Frank-Wolfe over the vertex hull: linearize with the Loewner gradient,
/// move toward the best vertex with an exact (golden-section) line search,
/// stop when the duality gap drops below `tol`. Ties in vertex selection
/// break toward the lowest index.
fn frank_wolfe(
    vertices: &[DensityMatrix],
    rho: &DensityMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<ClosestStateResult> {
    let start = FreeSetSpec::polytope(vertices.to_vec(), None, "tmp")?
        .interior_element();
    // Support check against the maximal-support element of the hull.
    if !relative_entropy(rho, &start)?.is_finite() {
        return Ok(ClosestStateResult {
            argmin: start,
            value: ExtendedReal::Infinity,
            iterations: 0,
            certificate_gap: 0.0,
            converged: true,
        });
    }
    let mut sigma = start;
    let mut value = objective_bits(rho, &sigma);
    let mut gap = f64::INFINITY;
    let mut iters = 0;
    for k in 0..max_iter {
        iters = k + 1;
        let sig_reg = regularize(&sigma);
        let grad = cross_entropy_gradient(rho.entries(), sig_reg.entries());
        let mut best_idx = 0usize;
        let mut best_score = f64::INFINITY;
        for (i, v) in vertices.iter().enumerate() {
            let s = crate::linalg::real_trace_product(&grad, v.entries());
            if s < best_score - 1e-15 {
                best_score = s;
                best_idx = i;
            }
        }
        let here = crate::linalg::real_trace_product(&grad, sigma.entries());
        gap = here - best_score;
        if gap <= tol {
            break;
        }
        let target = &vertices[best_idx];
        let t = golden_section(
            |t| {
                let cand = sigma.mix(target, 1.0 - t).unwrap();
                objective_bits(rho, &cand)
            },
            0.0,
            1.0,
            1e-10,
        );
        sigma = sigma.mix(target, 1.0 - t).unwrap();
        value = objective_bits(rho, &regularize(&sigma));
    }
    Ok(ClosestStateResult {
        argmin: sigma,
        value: clamp_nonneg(ExtendedReal::Finite(value)),
        iterations: iters,
        certificate_gap: gap.max(0.0),
        converged: gap <= tol,
    })
}

/// Rounds sub-noise negatives up to zero; the distance is nonnegative.
fn clamp_nonneg(v: ExtendedReal) -> ExtendedReal {
    match v {
        ExtendedReal::Finite(x) if x < 0.0 && x > -1e-9 => ExtendedReal::Finite(0.0),
        other => other,
    }
}

/// Golden-section minimiser of a unimodal function on [lo, hi].
fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64, width: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > width {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Multi-start projected gradient descent over the family's parameter box.
/// Returns (best objective, argmin parameters, projected-gradient gap bound).
fn multi_start_descent(
    fam: &ParamFamily,
    objective: &dyn Fn(&[f64]) -> f64,
    max_iter: usize,
) -> (f64, Vec<f64>, f64) {
    const STARTS: usize = 8;
    const PRIMES: [usize; 6] = [2, 3, 5, 7, 11, 13];
    let k = fam.params();
    let mut best_val = f64::INFINITY;
    let mut best_theta = mid_point(&fam.bounds);
    let mut best_gap = f64::INFINITY;
    for s in 0..STARTS {
        let mut theta: Vec<f64> = (0..k)
            .map(|d| {
                let (lo, hi) = fam.bounds[d];
                lo + (hi - lo) * halton(s + 1, PRIMES[d % PRIMES.len()])
            })
            .collect();
        fam.clamp(&mut theta);
        let (val, th, gap) = projected_descent(fam, objective, theta, max_iter);
        if val < best_val - 1e-15 {
            best_val = val;
            best_theta = th;
            best_gap = gap;
        }
    }
    (best_val, best_theta, best_gap)
}

/// Radical-inverse (van der Corput) sequence used for the multi-start spread.
fn halton(mut index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

fn projected_descent(
    fam: &ParamFamily,
    objective: &dyn Fn(&[f64]) -> f64,
    mut theta: Vec<f64>,
    max_iter: usize,
) -> (f64, Vec<f64>, f64) {
    let k = fam.params();
    let spans: Vec<f64> = fam.bounds.iter().map(|&(lo, hi)| hi - lo).collect();
    let mut f_here = objective(&theta);
    let mut gap = f64::INFINITY;
    for _ in 0..max_iter {
        // Central-difference gradient.
        let mut grad = vec![0.0; k];
        for d in 0..k {
            let h = (1e-6 * spans[d]).max(1e-9);
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[d] = (tp[d] + h).min(fam.bounds[d].1);
            tm[d] = (tm[d] - h).max(fam.bounds[d].0);
            let denom = tp[d] - tm[d];
            grad[d] = if denom > 0.0 {
                (objective(&tp) - objective(&tm)) / denom
            } else {
                0.0
            };
        }
        gap = projected_gap(&theta, &grad, &fam.bounds);
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm2.sqrt() < 1e-14 {
            break;
        }
        let mut eta = 1.0;
        let mut moved = false;
        while eta > 1e-16 {
            let mut cand: Vec<f64> = theta
                .iter()
                .zip(&grad)
                .map(|(t, g)| t - eta * g)
                .collect();
            fam.clamp(&mut cand);
            let f_cand = objective(&cand);
            let step: f64 = cand
                .iter()
                .zip(&theta)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if f_cand <= f_here - 1e-4 * eta * gnorm2 || (f_cand < f_here && step > 0.0) {
                theta = cand;
                f_here = f_cand;
                moved = step >= 1e-8;
                break;
            }
            eta *= 0.5;
        }
        if !moved {
            break;
        }
    }
    // Recompute the projected gradient bound at the final point.
    (f_here, theta, gap)
}

/// First-order suboptimality bound over the box: sum |g_i| * span_i over the
/// coordinates whose gradient points inward.
fn projected_gap(theta: &[f64], grad: &[f64], bounds: &[(f64, f64)]) -> f64 {
    let mut gap = 0.0;
    for ((&t, &g), &(lo, hi)) in theta.iter().zip(grad).zip(bounds) {
        let active_lo = (t - lo).abs() < 1e-12 && g > 0.0;
        let active_hi = (hi - t).abs() < 1e-12 && g < 0.0;
        if !(active_lo || active_hi) {
            gap += g.abs() * (hi - lo);
        }
    }
    gap
}

fn param_family_closest(
    fam: &ParamFamily,
    rho: &DensityMatrix,
    max_iter: usize,
) -> Result<ClosestStateResult> {
    let objective = |theta: &[f64]| objective_bits(rho, &fam.build(theta));
    let (val, theta, gap) = multi_start_descent(fam, &objective, max_iter);
    if !val.is_finite() {
        return Ok(ClosestStateResult {
            argmin: fam.build(&theta),
            value: ExtendedReal::Infinity,
            iterations: max_iter,
            certificate_gap: 0.0,
            converged: true,
        });
    }
    Ok(ClosestStateResult {
        argmin: fam.build(&theta),
        value: clamp_nonneg(ExtendedReal::Finite(val)),
        iterations: max_iter,
        certificate_gap: gap,
        converged: gap.is_finite(),
    })
}

/// Brute-force minimum of D(rho || sigma(theta)) over a uniform parameter
/// grid; the independent oracle for `closest_state` in tests. Rejected for
/// more than 4 effective parameters.
pub fn grid_oracle(set: &FreeSetSpec, rho: &DensityMatrix, resolution: usize) -> Result<f64> {
    assert!(resolution >= 1);
    match &set.kind {
        SetKind::Singleton(s) => Ok(objective_bits(rho, s)),
        SetKind::ParamFamily(fam) => {
            let k = fam.params();
            if k > 4 {
                return Err(Error::GridOracleTooManyParams(k));
            }
            let mut best = f64::INFINITY;
            let total = (resolution + 1).pow(k as u32);
            for flat in 0..total {
                let mut idx = flat;
                let mut theta = vec![0.0; k];
                for (t, &(lo, hi)) in theta.iter_mut().zip(&fam.bounds) {
                    let step = idx % (resolution + 1);
                    idx /= resolution + 1;
                    *t = lo + (hi - lo) * step as f64 / resolution as f64;
                }
                best = best.min(objective_bits(rho, &fam.build(&theta)));
            }
            Ok(best)
        }
        SetKind::VertexPolytope { vertices, .. } => {
            let v = vertices.len();
            if v.saturating_sub(1) > 4 {
                return Err(Error::GridOracleTooManyParams(v - 1));
            }
            let mut best = f64::INFINITY;
            let mut counts = vec![0usize; v];
            simplex_grid(&mut counts, 0, resolution, &mut |counts| {
                let w: Vec<f64> = counts
                    .iter()
                    .map(|&c| c as f64 / resolution as f64)
                    .collect();
                let sigma = mix_vertices(vertices, &w);
                best = best.min(objective_bits(rho, &sigma));
            });
            Ok(best)
        }
    }
}

fn simplex_grid(
    counts: &mut Vec<usize>,
    pos: usize,
    remaining: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if pos == counts.len() - 1 {
        counts[pos] = remaining;
        visit(counts);
        return;
    }
    for c in 0..=remaining {
        counts[pos] = c;
        simplex_grid(counts, pos + 1, remaining - c, visit);
    }
}

/// Distance to the n-fold product extension of a set,
/// F^(n) = { s_1 x ... x s_n : s_i in F }.
///
/// The cross-entropy term separates over the factors, so the distance is
/// exactly sum_i E_F(rho_i) + sum_i S(rho_i) - S(rho) with rho_i the
/// single-copy marginals; correlations enter through the mutual-information
/// correction.
pub fn tensor_power_distance(
    set: &FreeSetSpec,
    rho: &DensityMatrix,
    copies: usize,
) -> Result<ClosestStateResult> {
    assert!(copies >= 1);
    if copies == 1 {
        return closest_state(set, rho, 1e-9, 2000);
    }
    let factors = rho.subsystem_dims().len();
    if !factors.is_multiple_of(copies) {
        return Err(Error::BadTheory(format!(
            "{factors} tensor factors do not split into {copies} copies"
        )));
    }
    let block = factors / copies;
    let mut total = -von_neumann_entropy(rho);
    let mut gap = 0.0;
    let mut iterations = 0;
    let mut converged = true;
    let mut witness: Option<DensityMatrix> = None;
    for c in 0..copies {
        let keep: Vec<usize> = (c * block..(c + 1) * block).collect();
        let marginal = rho.partial_trace(&keep)?;
        let res = closest_state(set, &marginal, 1e-9, 2000)?;
        let value = match res.value {
            ExtendedReal::Finite(v) => v,
            ExtendedReal::Infinity => {
                return Ok(ClosestStateResult {
                    argmin: res.argmin,
                    value: ExtendedReal::Infinity,
                    iterations: res.iterations,
                    certificate_gap: 0.0,
                    converged: true,
                })
            }
        };
        total += value + von_neumann_entropy(&marginal);
        gap += res.certificate_gap;
        iterations += res.iterations;
        converged &= res.converged;
        witness = Some(match witness {
            None => res.argmin,
            Some(w) => w.tensor(&res.argmin),
        });
    }
    Ok(ClosestStateResult {
        argmin: witness.expect("copies >= 1"),
        value: ExtendedReal::Finite(total),
        iterations,
        certificate_gap: gap,
        converged,
    })
}

/// Least-squares feasibility over the simplex: the best Frobenius
/// approximation of `rho` by a convex combination of the vertices.
fn simplex_least_squares(vertices: &[DensityMatrix], rho: &DensityMatrix) -> (Vec<f64>, f64) {
    let v = vertices.len();
    if v == 1 {
        let d = (vertices[0].entries() - rho.entries()).norm();
        return (vec![1.0], d);
    }
    // Gram matrix and linear term of ||sum w_i V_i - rho||_F^2.
    let mut gram = vec![vec![0.0; v]; v];
    let mut lin = vec![0.0; v];
    for i in 0..v {
        for j in 0..v {
            gram[i][j] =
                crate::linalg::real_trace_product(vertices[i].entries(), vertices[j].entries());
        }
        lin[i] = crate::linalg::real_trace_product(vertices[i].entries(), rho.entries());
    }
    let lipschitz: f64 = gram
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut w = vec![1.0 / v as f64; v];
    for _ in 0..5000 {
        let mut grad = vec![0.0; v];
        for i in 0..v {
            grad[i] = -2.0 * lin[i];
            for j in 0..v {
                grad[i] += 2.0 * gram[i][j] * w[j];
            }
        }
        let mut next: Vec<f64> = w
            .iter()
            .zip(&grad)
            .map(|(wi, g)| wi - g / (2.0 * lipschitz))
            .collect();
        project_simplex(&mut next);
        let delta: f64 = next
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        w = next;
        if delta < 1e-14 {
            break;
        }
    }
    let mixed = mix_vertices(vertices, &w);
    let resid = (mixed.entries() - rho.entries()).norm();
    (w, resid)
}

/// Euclidean projection onto the probability simplex (sort-based).
fn project_simplex(y: &mut [f64]) {
    let n = y.len();
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut tau = 0.0;
    let mut hit = 0;
    for (j, &s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - 1.0) / (j + 1) as f64;
        if s - t > 0.0 {
            tau = t;
            hit = j + 1;
        }
    }
    if hit == 0 {
        let u = 1.0 / n as f64;
        y.iter_mut().for_each(|v| *v = u);
        return;
    }
    for v in y.iter_mut() {
        *v = (*v - tau).max(0.0);
    }
}
