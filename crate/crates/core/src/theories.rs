//! Built-in theory instances: thermodynamics with one or two conserved
//! charges, and two-qubit local control under an energy restriction.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::free_sets::{FreeSetSpec, ParamFamily, SetKind};
use crate::gibbs::{gibbs_state, log2_partition};
use crate::linalg::{c, cr, projector, CMatrix, CVector};
use crate::monotones::Monotone;
use crate::observable::{expectation, Observable};
use crate::state::{random_density_with, DensityMatrix};

/// A completely positive map on states, used for sampled channel checks.
pub type Channel = Arc<dyn Fn(&DensityMatrix) -> DensityMatrix + Send + Sync>;

/// How states of a theory's space are drawn for sampling-based checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSpace {
    /// Hilbert-Schmidt measure over the full state space.
    HilbertSchmidt,
    /// Uniform simplex weights over the two-qubit Bell-diagonal slice.
    BellDiagonal,
}

/// States of a declared battery at several fill levels, together with which
/// monotones must stay fixed across them and which one varies.
#[derive(Debug, Clone)]
pub struct BatteryFamily {
    pub label: String,
    pub states: Vec<DensityMatrix>,
    pub fixed: Vec<Monotone>,
    pub varying: Monotone,
}

/// A full multi-resource theory: monotones, their invariant sets, the
/// tractable state family used for curve tracing, and sampling metadata.
#[derive(Debug, Clone)]
pub struct TheorySpec {
    pub label: String,
    pub dim: usize,
    pub monotones: Vec<Monotone>,
    pub invariant_sets: Vec<FreeSetSpec>,
    pub state_family: Option<ParamFamily>,
    pub sample_space: SampleSpace,
    pub battery_families: Vec<BatteryFamily>,
    /// Conserved charges, present for the thermodynamic instances.
    pub charges: Option<Vec<Observable>>,
    /// (E0, E1) of the local-control Hamiltonian, when applicable.
    pub energy_levels: Option<(f64, f64)>,
}

impl TheorySpec {
    pub fn resource_count(&self) -> usize {
        self.monotones.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.monotones.len() != self.invariant_sets.len() {
            return Err(Error::BadTheory(
                "monotones and invariant sets must correspond one-to-one".into(),
            ));
        }
        for m in &self.monotones {
            if m.base_dim() != self.dim {
                return Err(Error::BadTheory(format!(
                    "monotone {} has dim {}, theory has {}",
                    m.label,
                    m.base_dim(),
                    self.dim
                )));
            }
        }
        for s in &self.invariant_sets {
            if s.dim != self.dim {
                return Err(Error::BadTheory(format!(
                    "invariant set {} has dim {}, theory has {}",
                    s.label, s.dim, self.dim
                )));
            }
        }
        Ok(())
    }

    pub fn sample_state(&self, rng: &mut ChaCha8Rng) -> DensityMatrix {
        match self.sample_space {
            SampleSpace::HilbertSchmidt => random_density_with(self.dim, rng),
            SampleSpace::BellDiagonal => sample_bell_diagonal_with(rng),
        }
    }

    /// Position of a state in the resource diagram, one value per monotone.
    pub fn coordinates(&self, rho: &DensityMatrix) -> Result<crate::monotones::ResourceCoordinates> {
        let values = self
            .monotones
            .iter()
            .map(|m| m.value(rho))
            .collect::<Result<Vec<f64>>>()?;
        Ok(crate::monotones::ResourceCoordinates { values })
    }

    /// Channels that preserve every invariant set of the theory; used by the
    /// second-law checks of the property suite.
    pub fn sample_channels(&self) -> Vec<(String, Channel)> {
        let mut out: Vec<(String, Channel)> = Vec::new();
        match (&self.charges, self.energy_levels) {
            (Some(charges), _) if charges.len() == 1 => {
                // Dephasing in the charge eigenbasis: a uniform mixture of
                // phase unitaries, unital and charge-preserving.
                let (_, vecs) = charges[0].eig();
                out.push((
                    "charge-dephasing".into(),
                    Arc::new(move |rho: &DensityMatrix| dephase_in_basis(rho, &vecs)),
                ));
            }
            (_, Some(_)) => {
                out.push((
                    "bell-twirl".into(),
                    Arc::new(|rho: &DensityMatrix| twirl_bell(rho)),
                ));
                out.push((
                    "triplet-reshuffle".into(),
                    Arc::new(|rho: &DensityMatrix| {
                        allowed_map_e_eta(rho, &[0.2, 0.5, 0.3]).expect("valid eta")
                    }),
                ));
            }
            _ => {}
        }
        out
    }
}

fn dephase_in_basis(rho: &DensityMatrix, basis: &CMatrix) -> DensityMatrix {
    let in_basis = basis.adjoint() * rho.entries() * basis;
    let n = rho.dim();
    let mut diag = CMatrix::zeros(n, n);
    for i in 0..n {
        diag[(i, i)] = in_basis[(i, i)];
    }
    let back = basis * diag * basis.adjoint();
    DensityMatrix::new_unchecked(back, rho.subsystem_dims().to_vec())
}

pub fn diag_observable(entries: &[f64], label: &str) -> Observable {
    let n = entries.len();
    let mut m = CMatrix::zeros(n, n);
    for (i, &v) in entries.iter().enumerate() {
        m[(i, i)] = cr(v);
    }
    Observable::new(m, label).expect("diagonal matrices are Hermitian")
}

// ---------------------------------------------------------------------------
// Bell basis machinery for the two-qubit theory.

/// Bell kets in the computational basis, ordered (singlet, triplet 1..3).
pub fn bell_kets() -> [CVector; 4] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [
        CVector::from_iterator(4, [cr(0.0), cr(r), cr(-r), cr(0.0)]),
        CVector::from_iterator(4, [cr(0.0), cr(r), cr(r), cr(0.0)]),
        CVector::from_iterator(4, [cr(r), cr(0.0), cr(0.0), cr(-r)]),
        CVector::from_iterator(4, [cr(r), cr(0.0), cr(0.0), cr(r)]),
    ]
}

/// Unitary whose columns are the Bell kets.
pub fn bell_basis_matrix() -> CMatrix {
    let kets = bell_kets();
    let mut b = CMatrix::zeros(4, 4);
    for (k, ket) in kets.iter().enumerate() {
        for i in 0..4 {
            b[(i, k)] = ket[i];
        }
    }
    b
}

/// Pure Bell state k (0 = singlet).
pub fn bell_basis_state(k: usize) -> DensityMatrix {
    let kets = bell_kets();
    DensityMatrix::new_unchecked(projector(&kets[k]), vec![2, 2])
}

/// Bell-diagonal state with the given weights (singlet first).
pub fn bell_diagonal(weights: &[f64; 4]) -> DensityMatrix {
    let sum: f64 = weights.iter().sum();
    debug_assert!((sum - 1.0).abs() < 1e-9, "weights must sum to 1");
    let kets = bell_kets();
    let mut m = CMatrix::zeros(4, 4);
    for (w, ket) in weights.iter().zip(&kets) {
        m += projector(ket).scale(*w);
    }
    DensityMatrix::new_unchecked(m, vec![2, 2])
}

/// Bell-basis weights if `rho` is diagonal there (off-diagonal mass below
/// 1e-11), else `None`.
pub fn bell_diagonal_weights(rho: &DensityMatrix) -> Option<[f64; 4]> {
    if rho.dim() != 4 {
        return None;
    }
    let b = bell_basis_matrix();
    let in_bell = b.adjoint() * rho.entries() * &b;
    let mut off = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                off += in_bell[(i, j)].norm_sqr();
            }
        }
    }
    if off.sqrt() > 1e-11 {
        return None;
    }
    Some([
        in_bell[(0, 0)].re,
        in_bell[(1, 1)].re,
        in_bell[(2, 2)].re,
        in_bell[(3, 3)].re,
    ])
}

/// Full dephasing onto the Bell basis; reported by callers that apply it to
/// off-slice states before Bell-diagonal logic.
pub fn twirl_bell(rho: &DensityMatrix) -> DensityMatrix {
    let b = bell_basis_matrix();
    dephase_in_basis(rho, &b)
}

/// The separable cross-section vertex polytope: each vertex mixes the
/// singlet evenly with one triplet state.
pub fn css_polytope() -> FreeSetSpec {
    let vertices: Vec<DensityMatrix> = (1..=3)
        .map(|i| {
            let mut w = [0.0; 4];
            w[0] = 0.5;
            w[i] = 0.5;
            bell_diagonal(&w)
        })
        .collect();
    let witness = bell_diagonal(&[0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]);
    let mut set = FreeSetSpec::polytope(vertices, Some(witness), "F_css").expect("three vertices");
    if let SetKind::VertexPolytope { bell_fast_path, .. } = &mut set.kind {
        *bell_fast_path = true;
    }
    set
}

/// Maximally mixed state on the singlet/first-triplet plane, a member of the
/// separable cross-section.
pub fn sigma_mm() -> DensityMatrix {
    bell_diagonal(&[0.5, 0.5, 0.0, 0.0])
}

/// Uniform-simplex Bell-diagonal sample.
pub fn sample_bell_diagonal(seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_bell_diagonal_with(&mut rng)
}

pub fn sample_bell_diagonal_with(rng: &mut ChaCha8Rng) -> DensityMatrix {
    let mut w = [0.0f64; 4];
    let mut sum = 0.0;
    for v in w.iter_mut() {
        *v = -(rng.random::<f64>().max(1e-300)).ln();
        sum += *v;
    }
    for v in w.iter_mut() {
        *v /= sum;
    }
    bell_diagonal(&w)
}

/// Correlated two-copy state diagonal in the Bell x Bell basis.
pub fn sample_bell_pair_diagonal_with(rng: &mut ChaCha8Rng) -> DensityMatrix {
    let mut w = [0.0f64; 16];
    let mut sum = 0.0;
    for v in w.iter_mut() {
        *v = -(rng.random::<f64>().max(1e-300)).ln();
        sum += *v;
    }
    let kets = bell_kets();
    let mut m = CMatrix::zeros(16, 16);
    for k in 0..4 {
        for l in 0..4 {
            let ket = kets[k].kronecker(&kets[l]);
            m += projector(&ket).scale(w[4 * k + l] / sum);
        }
    }
    DensityMatrix::new_unchecked(m, vec![2, 2, 2, 2])
}

/// Bell-diagonal probability vector over (singlet, triplets).
#[derive(Debug, Clone, Copy)]
pub struct BellDiagonalState {
    pub p: [f64; 4],
}

impl BellDiagonalState {
    pub fn new(p: [f64; 4]) -> Result<Self> {
        if p.iter().any(|&x| x < -1e-12) {
            return Err(Error::InvalidDensity("negative Bell weight".into()));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDensity(format!("Bell weights sum to {sum}")));
        }
        Ok(Self { p })
    }

    /// Member of the restricted slice iff the singlet weight is at least 1/2.
    pub fn in_restricted_slice(&self) -> bool {
        self.p[0] >= 0.5 - 1e-12
    }

    pub fn to_density(&self) -> DensityMatrix {
        bell_diagonal(&self.p)
    }
}

// ---------------------------------------------------------------------------
// Thermodynamics with conserved charges.

/// Thermodynamic theory for 1 or 2 conserved charges: one average-observable
/// monotone per charge plus the purity monotone, with the max-entropy family
/// as the curve-tracing slice. Charges need a nondegenerate minimum
/// eigenvalue.
pub fn build_thermo_theory(charges: &[Observable]) -> Result<TheorySpec> {
    if charges.is_empty() || charges.len() > 2 {
        return Err(Error::BadTheory("thermo theory takes 1 or 2 charges".into()));
    }
    let dim = charges[0].dim();
    for ch in charges {
        if ch.dim() != dim {
            return Err(Error::BadTheory("charges of unequal dims".into()));
        }
    }
    let mut monotones = Vec::new();
    let mut sets = Vec::new();
    for ch in charges {
        let (vals, vecs) = ch.eig();
        if vals.len() > 1 && vals[1] - vals[0] < 1e-10 {
            return Err(Error::BadTheory(format!(
                "charge {} has a degenerate ground space (gap {:.3e})",
                ch.label(),
                vals[1] - vals[0]
            )));
        }
        let ground = DensityMatrix::new_unchecked(
            projector(&vecs.column(0).into_owned()),
            vec![dim],
        );
        monotones.push(Monotone::avg_observable(ch.clone(), format!("M_{}", ch.label())));
        sets.push(FreeSetSpec::singleton(ground, format!("ground_{}", ch.label())));
    }
    monotones.push(Monotone::rel_entropy_distance(
        FreeSetSpec::singleton(DensityMatrix::maximally_mixed(dim), "uniform"),
        "E_FS",
    ));
    sets.push(FreeSetSpec::singleton(
        DensityMatrix::maximally_mixed(dim),
        "uniform",
    ));

    let family_charges: Vec<Observable> = charges.to_vec();
    let k = charges.len();
    let family = ParamFamily {
        bounds: vec![(0.0, 60.0); k],
        builder: Arc::new(move |betas: &[f64]| {
            gibbs_state(&family_charges, betas).expect("valid Gibbs parameters")
        }),
        label: "max-entropy".into(),
    };

    let battery_families = thermo_batteries(charges, dim);

    let theory = TheorySpec {
        label: if k == 1 { "thermo".into() } else { "thermo-2charges".into() },
        dim,
        monotones,
        invariant_sets: sets,
        state_family: Some(family),
        sample_space: SampleSpace::HilbertSchmidt,
        battery_families,
        charges: Some(charges.to_vec()),
        energy_levels: None,
    };
    theory.validate()?;
    Ok(theory)
}

fn thermo_batteries(charges: &[Observable], dim: usize) -> Vec<BatteryFamily> {
    let mut fams = Vec::new();
    // One battery per charge: the extreme eigenstates store that charge. The
    // family is declared only when the other monotones are genuinely flat on
    // it (pure states pin the purity; the other charge's mean must match).
    for (i, ch) in charges.iter().enumerate() {
        let (_, vecs) = ch.eig();
        let lo = DensityMatrix::new_unchecked(projector(&vecs.column(0).into_owned()), vec![dim]);
        let hi = DensityMatrix::new_unchecked(
            projector(&vecs.column(dim - 1).into_owned()),
            vec![dim],
        );
        let mut fixed = vec![Monotone::rel_entropy_distance(
            FreeSetSpec::singleton(DensityMatrix::maximally_mixed(dim), "uniform"),
            "E_FS",
        )];
        let mut ok = true;
        for (j, other) in charges.iter().enumerate() {
            if i == j {
                continue;
            }
            let a = expectation(&lo, other).unwrap_or(f64::NAN);
            let b = expectation(&hi, other).unwrap_or(f64::NAN);
            if (a - b).abs() > 1e-9 {
                ok = false;
            }
            fixed.push(Monotone::avg_observable(other.clone(), format!("M_{}", other.label())));
        }
        if ok {
            fams.push(BatteryFamily {
                label: format!("battery_{}", ch.label()),
                states: vec![lo, hi],
                fixed,
                varying: Monotone::avg_observable(ch.clone(), format!("M_{}", ch.label())),
            });
        }
    }
    // Purity battery: cells with trivial charges, pure vs maximally mixed.
    let trivial: Vec<Monotone> = charges
        .iter()
        .map(|ch| {
            Monotone::avg_observable(
                diag_observable(&vec![0.0; dim], &format!("{}_cell", ch.label())),
                format!("M_{}", ch.label()),
            )
        })
        .collect();
    let pure = {
        let mut p = vec![0.0; dim];
        p[0] = 1.0;
        DensityMatrix::from_probabilities(&p, vec![dim]).expect("basis state")
    };
    fams.push(BatteryFamily {
        label: "battery_purity".into(),
        states: vec![pure, DensityMatrix::maximally_mixed(dim)],
        fixed: trivial,
        varying: Monotone::rel_entropy_distance(
            FreeSetSpec::singleton(DensityMatrix::maximally_mixed(dim), "uniform"),
            "E_FS",
        ),
    });
    fams
}

// ---------------------------------------------------------------------------
// Jaynes inverse problem.

#[derive(Debug, Clone)]
pub struct BetaSolve {
    pub betas: Vec<f64>,
    pub iterations: usize,
    /// Set when the dual Hessian's condition number exceeds 1e12, e.g. for
    /// linearly dependent charges.
    pub degenerate: bool,
}

/// Inverse temperatures reproducing the target expectations, by Newton
/// descent on the convex dual log2 Z(beta) + beta . targets with the exact
/// gradient (targets - <A>) and a finite-difference Hessian.
pub fn solve_betas(charges: &[Observable], targets: &[f64], tol: f64) -> Result<BetaSolve> {
    if charges.is_empty() || charges.len() != targets.len() {
        return Err(Error::InfeasibleTargets(
            "need as many targets as charges".into(),
        ));
    }
    feasibility_probe(charges, targets)?;

    let k = charges.len();
    let grad = |betas: &[f64]| -> Result<Vec<f64>> {
        let tau = gibbs_state(charges, betas)?;
        charges
            .iter()
            .zip(targets)
            .map(|(ch, &t)| Ok(t - expectation(&tau, ch)?))
            .collect()
    };
    let dual = |betas: &[f64]| -> Result<f64> {
        let mut v = log2_partition(charges, betas)?;
        for (b, t) in betas.iter().zip(targets) {
            v += b * t;
        }
        Ok(v)
    };

    let mut betas = vec![0.0; k];
    let mut degenerate = false;
    let mut iterations = 0;
    for _ in 0..400 {
        iterations += 1;
        let g = grad(&betas)?;
        let gmax = g.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if gmax <= tol {
            return Ok(BetaSolve {
                betas,
                iterations,
                degenerate,
            });
        }
        // Finite-difference Hessian of the dual (symmetrised).
        let h = 1e-4;
        let mut hess = vec![vec![0.0; k]; k];
        for i in 0..k {
            let mut bp = betas.clone();
            let mut bm = betas.clone();
            bp[i] += h;
            bm[i] -= h;
            let gp = grad(&bp)?;
            let gm = grad(&bm)?;
            for j in 0..k {
                hess[i][j] += (gp[j] - gm[j]) / (2.0 * h) / 2.0;
                hess[j][i] += (gp[j] - gm[j]) / (2.0 * h) / 2.0;
            }
        }
        let cond = condition_number(&hess);
        if cond > 1e12 {
            degenerate = true;
        }
        let dir = match solve_small(&hess, &g) {
            Some(d) if d.iter().all(|x| x.is_finite()) => d.iter().map(|x| -x).collect(),
            _ => {
                degenerate = true;
                g.iter().map(|x| -x).collect::<Vec<f64>>()
            }
        };
        // Backtracking line search on the dual. Near convergence the dual's
        // decrease falls below floating-point resolution, so the full Newton
        // step is also accepted on a gradient-norm drop.
        let f0 = dual(&betas)?;
        let slope: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let mut eta = 1.0;
        loop {
            let cand: Vec<f64> = betas.iter().zip(&dir).map(|(b, d)| b + eta * d).collect();
            if dual(&cand)? <= f0 + 1e-4 * eta * slope {
                betas = cand;
                break;
            }
            if eta == 1.0 {
                let gc = grad(&cand)?;
                let gc_max = gc.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                if gc_max < 0.5 * gmax {
                    betas = cand;
                    break;
                }
            }
            if eta < 1e-14 {
                betas = cand;
                break;
            }
            eta *= 0.5;
        }
    }
    let g = grad(&betas)?;
    let gmax = g.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if gmax <= tol {
        Ok(BetaSolve {
            betas,
            iterations,
            degenerate,
        })
    } else {
        Err(Error::InfeasibleTargets(format!(
            "dual descent stalled with residual {gmax:.3e}"
        )))
    }
}

/// Probes bounded betas and rejects targets outside the convex hull of the
/// probed expectation points.
fn feasibility_probe(charges: &[Observable], targets: &[f64]) -> Result<()> {
    const RADIUS: f64 = 30.0;
    let k = charges.len();
    let mut points: Vec<Vec<f64>> = Vec::new();
    let probes: Vec<Vec<f64>> = if k == 1 {
        (0..50)
            .map(|i| vec![-RADIUS + 2.0 * RADIUS * i as f64 / 49.0])
            .collect()
    } else {
        let mut v: Vec<Vec<f64>> = (0..50)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / 50.0;
                vec![RADIUS * th.cos(), RADIUS * th.sin()]
            })
            .collect();
        v.push(vec![0.0, 0.0]);
        v
    };
    for betas in &probes {
        let tau = gibbs_state(charges, betas)?;
        let mut p = Vec::with_capacity(k);
        for ch in charges {
            p.push(expectation(&tau, ch)?);
        }
        points.push(p);
    }
    let inside = if k == 1 {
        let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        targets[0] >= lo - 1e-9 && targets[0] <= hi + 1e-9
    } else {
        let hull = convex_hull_2d(&points);
        if hull.len() >= 3 {
            point_in_hull_2d(&hull, (targets[0], targets[1]))
        } else {
            // Linearly dependent charges flatten the expectation hull onto
            // a segment; accept targets on it.
            point_near_segment(&points, (targets[0], targets[1]), 1e-7)
        }
    };
    if inside {
        Ok(())
    } else {
        Err(Error::InfeasibleTargets(format!(
            "targets {:?} outside the probed expectation hull",
            targets
        )))
    }
}

fn convex_hull_2d(points: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().chain(pts.iter().rev().skip(1)) {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn point_near_segment(points: &[Vec<f64>], p: (f64, f64), tol: f64) -> bool {
    let a = points
        .iter()
        .min_by(|x, y| x[0].partial_cmp(&y[0]).unwrap())
        .expect("nonempty probes");
    let b = points
        .iter()
        .max_by(|x, y| x[0].partial_cmp(&y[0]).unwrap())
        .expect("nonempty probes");
    let (ax, ay, bx, by) = (a[0], a[1], b[0], b[1]);
    let len2 = (bx - ax) * (bx - ax) + (by - ay) * (by - ay);
    if len2 < 1e-300 {
        return ((p.0 - ax).powi(2) + (p.1 - ay).powi(2)).sqrt() <= tol;
    }
    let t = (((p.0 - ax) * (bx - ax) + (p.1 - ay) * (by - ay)) / len2).clamp(0.0, 1.0);
    let (cx, cy) = (ax + t * (bx - ax), ay + t * (by - ay));
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt() <= tol
}

fn point_in_hull_2d(hull: &[(f64, f64)], p: (f64, f64)) -> bool {
    if hull.len() < 3 {
        return false;
    }
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        if cross < -1e-9 {
            return false;
        }
    }
    true
}

fn condition_number(hess: &[Vec<f64>]) -> f64 {
    match hess.len() {
        1 => {
            if hess[0][0].abs() < 1e-300 {
                f64::INFINITY
            } else {
                1.0
            }
        }
        2 => {
            let (a, b, d) = (hess[0][0], hess[0][1], hess[1][1]);
            let tr = a + d;
            let det = a * d - b * b;
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            let l1 = (tr / 2.0 + disc).abs();
            let l2 = (tr / 2.0 - disc).abs();
            if l2 < 1e-300 {
                f64::INFINITY
            } else {
                l1 / l2
            }
        }
        _ => 1.0,
    }
}

fn solve_small(hess: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    match hess.len() {
        1 => {
            if hess[0][0].abs() < 1e-300 {
                None
            } else {
                Some(vec![rhs[0] / hess[0][0]])
            }
        }
        2 => {
            let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
            if det.abs() < 1e-300 {
                return None;
            }
            Some(vec![
                (rhs[0] * hess[1][1] - rhs[1] * hess[0][1]) / det,
                (hess[0][0] * rhs[1] - hess[1][0] * rhs[0]) / det,
            ])
        }
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Local control under an energy restriction.

/// Two-qubit theory whose ground state is the singlet: energy monotone plus
/// the distance to the separable cross-section, with the Bell-diagonal
/// singlet/first-triplet slice as state family.
pub fn build_local_control_theory(e0: f64, e1: f64) -> Result<TheorySpec> {
    if e0 >= e1 {
        return Err(Error::BadTheory(format!(
            "need E0 < E1, got E0 = {e0}, E1 = {e1}"
        )));
    }
    let kets = bell_kets();
    let mut h = projector(&kets[0]).scale(e0);
    for ket in &kets[1..] {
        h += projector(ket).scale(e1);
    }
    let hamiltonian = Observable::new(h, "H")?;
    let css = css_polytope();

    let monotones = vec![
        Monotone::avg_observable(hamiltonian.clone(), "M_H"),
        Monotone::rel_entropy_distance(css.clone(), "E_css"),
    ];
    let sets = vec![
        FreeSetSpec::singleton(bell_basis_state(0), "singlet"),
        css,
    ];

    let family = ParamFamily {
        bounds: vec![(0.5, 1.0)],
        builder: Arc::new(|theta: &[f64]| {
            let p0 = theta[0].clamp(0.0, 1.0);
            BellDiagonalState::new([p0, 1.0 - p0, 0.0, 0.0])
                .expect("valid slice weights")
                .to_density()
        }),
        label: "bell-slice".into(),
    };

    let theory = TheorySpec {
        label: "local-control".into(),
        dim: 4,
        monotones,
        invariant_sets: sets,
        state_family: Some(family),
        sample_space: SampleSpace::BellDiagonal,
        battery_families: local_control_batteries(&hamiltonian),
        charges: None,
        energy_levels: Some((e0, e1)),
    };
    theory.validate()?;
    Ok(theory)
}

fn local_control_batteries(hamiltonian: &Observable) -> Vec<BatteryFamily> {
    let s = bell_basis_state(0);
    let t1 = bell_basis_state(1);
    let mm = sigma_mm();
    let css_monotone = || Monotone::rel_entropy_distance(css_polytope(), "E_css");
    let energy_monotone = || Monotone::avg_observable(hamiltonian.clone(), "M_H");
    // Energy battery: two cells, fill levels k = 0, 1, 2 singlets. Every
    // cell is a pure Bell state, so the stored entanglement is pinned at
    // one bit per cell.
    let energy = BatteryFamily {
        label: "battery_W".into(),
        states: vec![t1.tensor(&t1), s.tensor(&t1), s.tensor(&s)],
        fixed: vec![css_monotone()],
        varying: energy_monotone(),
    };
    // Entanglement battery: cells carry the trivial Hamiltonian, so the
    // energy monotone of the battery is identically zero.
    let trivial = Monotone::avg_observable(
        diag_observable(&[0.0; 4], "H_E"),
        "M_H",
    );
    let entanglement = BatteryFamily {
        label: "battery_E".into(),
        states: vec![mm.tensor(&mm), s.tensor(&mm), s.tensor(&s)],
        fixed: vec![trivial],
        varying: css_monotone(),
    };
    vec![energy, entanglement]
}

/// The triplet-reshuffling channel: preserves the singlet weight and
/// redistributes the triplet weight according to `eta`, via a swap-style
/// unitary with a qutrit ancilla prepared in diag(eta).
pub fn allowed_map_e_eta(rho: &DensityMatrix, eta: &[f64; 3]) -> Result<DensityMatrix> {
    if eta.iter().any(|&q| q < -1e-12) {
        return Err(Error::InvalidDensity("negative ancilla weight".into()));
    }
    let sum: f64 = eta.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDensity(format!(
            "ancilla weights sum to {sum}"
        )));
    }
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    // Work in the Bell-indexed basis: composite index = bell * 3 + ancilla.
    let b = bell_basis_matrix();
    let rho_bell = b.adjoint() * rho.entries() * &b;
    let dim = 12usize;
    let mut joint = CMatrix::zeros(dim, dim);
    for k in 0..4 {
        for l in 0..4 {
            for j in 0..3 {
                joint[(k * 3 + j, l * 3 + j)] = rho_bell[(k, l)] * cr(eta[j]);
            }
        }
    }
    // U maps |t_i, theta_j> -> |t_j, theta_i| and leaves |s, theta_j> alone.
    let perm = |idx: usize| -> usize {
        let (bell, anc) = (idx / 3, idx % 3);
        if bell == 0 {
            idx
        } else {
            let i = bell - 1;
            (anc + 1) * 3 + i
        }
    };
    let mut permuted = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        for s in 0..dim {
            permuted[(perm(r), perm(s))] = joint[(r, s)];
        }
    }
    // Trace out the ancilla.
    let mut out_bell = CMatrix::zeros(4, 4);
    for k in 0..4 {
        for l in 0..4 {
            let mut acc = c(0.0, 0.0);
            for j in 0..3 {
                acc += permuted[(k * 3 + j, l * 3 + j)];
            }
            out_bell[(k, l)] = acc;
        }
    }
    let back = &b * out_bell * b.adjoint();
    Ok(DensityMatrix::new_unchecked(back, vec![2, 2]))
}
