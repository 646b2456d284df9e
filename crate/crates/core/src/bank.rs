//! Bank states and the machinery around them: Pareto-minimality detection,
//! tracing the bank curve in the two-monotone diagram, tangent construction
//! of the bank monotone, exchange rates, and the first-law balance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::entropy::{relative_entropy, ExtendedReal};
use crate::error::{Error, Result};
use crate::free_sets::ParamFamily;
use crate::state::DensityMatrix;
use crate::theories::TheorySpec;

const PARETO_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct BankPoint {
    pub e1: f64,
    pub e2: f64,
    pub witness: DensityMatrix,
    /// Family parameters that realise the witness; empty for synthetic curves.
    pub param: Vec<f64>,
}

/// Sampled Pareto frontier of the two-monotone diagram.
#[derive(Debug, Clone)]
pub struct BankCurve {
    pub points: Vec<BankPoint>,
    pub monotone_labels: (String, String),
}

impl BankCurve {
    /// Checks the frontier invariants: strictly increasing E1, non-increasing
    /// E2, and discrete convexity against chords.
    pub fn validate(&self) -> Result<()> {
        let pts = &self.points;
        if pts.len() < 2 {
            return Err(Error::CurveInvariant("fewer than two points".into()));
        }
        for w in pts.windows(2) {
            if w[1].e1 <= w[0].e1 {
                return Err(Error::CurveInvariant(format!(
                    "E1 not strictly increasing at {:.6} -> {:.6}",
                    w[0].e1, w[1].e1
                )));
            }
            if w[1].e2 > w[0].e2 + 1e-9 {
                return Err(Error::CurveInvariant(format!(
                    "E2 increases from {:.6} to {:.6} near E1 = {:.6}",
                    w[0].e2, w[1].e2, w[1].e1
                )));
            }
        }
        for w in pts.windows(3) {
            let t = (w[1].e1 - w[0].e1) / (w[2].e1 - w[0].e1);
            let chord = (1.0 - t) * w[0].e2 + t * w[2].e2;
            if w[1].e2 > chord + 1e-6 {
                return Err(Error::CurveInvariant(format!(
                    "convexity violated at E1 = {:.6}: point {:.6} above chord {:.6}",
                    w[1].e1, w[1].e2, chord
                )));
            }
        }
        Ok(())
    }
}

/// Coefficients of the affine bank monotone alpha E1 + beta E2 - gamma,
/// vanishing on the anchor and tangent to the state space.
#[derive(Debug, Clone, Serialize)]
pub struct BankMonotoneCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub anchor: (f64, f64),
    /// Central-difference consistency check: |slope(h) - slope(h/2)|.
    pub richardson_discrepancy: f64,
}

impl BankMonotoneCoeffs {
    pub fn f_bank(&self, e1: f64, e2: f64) -> f64 {
        self.alpha * e1 + self.beta * e2 - self.gamma
    }

    /// Exchange rate -beta/alpha; infinite when alpha vanishes.
    pub fn rate(&self) -> ExtendedReal {
        if self.alpha.abs() <= 1e-12 {
            ExtendedReal::Infinity
        } else {
            ExtendedReal::Finite(-self.beta / self.alpha)
        }
    }
}

#[derive(Debug, Clone)]
pub struct BankVerdict {
    pub is_bank: bool,
    pub counterexample: Option<DensityMatrix>,
    /// True when the verdict comes from an optimisation over a declared
    /// state family rather than from sampling alone.
    pub certified: bool,
    pub note: String,
}

/// Report of the proportionality check between the bank monotone and the
/// relative-entropy distance from the anchor subset.
#[derive(Debug, Clone, Serialize)]
pub struct BankRelEntReport {
    pub scale: f64,
    pub max_rel_deviation: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FirstLawReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub rate: ExtendedReal,
}

fn two_resource(theory: &TheorySpec) -> Result<()> {
    if theory.resource_count() != 2 {
        return Err(Error::BadTheory(format!(
            "expected a two-resource theory, got {} monotones",
            theory.resource_count()
        )));
    }
    Ok(())
}

/// (E1, E2) coordinates of a state.
pub fn resource_pair(theory: &TheorySpec, rho: &DensityMatrix) -> Result<(f64, f64)> {
    Ok((
        theory.monotones[0].value(rho)?,
        theory.monotones[1].value(rho)?,
    ))
}

/// Pareto-minimality in the (E1, E2) diagram: true when no state reaches a
/// strictly smaller value of one monotone without exceeding the other.
/// Theories with a declared state family get an optimisation certificate;
/// sampling over the theory's space backs it up either way.
pub fn is_bank_state(
    theory: &TheorySpec,
    rho: &DensityMatrix,
    samples: usize,
    seed: u64,
) -> Result<BankVerdict> {
    two_resource(theory)?;
    let (e1, e2) = resource_pair(theory, rho)?;

    let dominates = |c1: f64, c2: f64| -> bool {
        (c1 <= e1 - PARETO_TOL && c2 <= e2 + PARETO_TOL)
            || (c1 <= e1 + PARETO_TOL && c2 <= e2 - PARETO_TOL)
    };

    let mut certified = false;
    if let Some(family) = &theory.state_family {
        certified = true;
        let grid = family_grid(family, 600);
        for theta in &grid {
            let sigma = family.build(theta);
            let (c1, c2) = resource_pair(theory, &sigma)?;
            if dominates(c1, c2) {
                return Ok(BankVerdict {
                    is_bank: false,
                    counterexample: Some(sigma),
                    certified: true,
                    note: format!(
                        "dominated by a family state at ({c1:.6}, {c2:.6}) vs ({e1:.6}, {e2:.6})"
                    ),
                });
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let sigma = theory.sample_state(&mut rng);
        let (c1, c2) = resource_pair(theory, &sigma)?;
        if dominates(c1, c2) {
            return Ok(BankVerdict {
                is_bank: false,
                counterexample: Some(sigma),
                certified,
                note: "dominated by a sampled state".into(),
            });
        }
    }
    Ok(BankVerdict {
        is_bank: true,
        counterexample: None,
        certified,
        note: if certified {
            format!("no dominator over the family grid or {samples} samples")
        } else {
            format!("sampling verdict only ({samples} samples); not a certificate")
        },
    })
}

fn family_grid(family: &ParamFamily, per_dim: usize) -> Vec<Vec<f64>> {
    let k = family.params();
    let steps = if k == 1 { per_dim } else { (per_dim as f64).sqrt() as usize };
    let mut out = Vec::new();
    let total = (steps + 1).pow(k as u32);
    for flat in 0..total {
        let mut idx = flat;
        let mut theta = vec![0.0; k];
        for (t, &(lo, hi)) in theta.iter_mut().zip(&family.bounds) {
            let s = idx % (steps + 1);
            idx /= steps + 1;
            *t = lo + (hi - lo) * s as f64 / steps as f64;
        }
        out.push(theta);
    }
    out
}

/// Traces the Pareto frontier over the declared state family: for each E1
/// target, the minimiser of E2 subject to E1 = target. Targets outside the
/// achievable interval are omitted with a note. The traced curve must pass
/// the frontier invariants.
pub fn trace_bank_curve(
    theory: &TheorySpec,
    grid: &[f64],
) -> Result<(BankCurve, Vec<String>)> {
    two_resource(theory)?;
    let family = theory
        .state_family
        .as_ref()
        .ok_or_else(|| Error::BadTheory("curve tracing needs a state family".into()))?;

    let mut targets: Vec<f64> = grid.to_vec();
    targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    targets.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut notes = Vec::new();
    let mut points: Vec<BankPoint> = Vec::new();
    for &target in &targets {
        match constrained_min_e2(theory, family, target)? {
            Some((theta, e1, e2)) => {
                points.push(BankPoint {
                    e1,
                    e2,
                    witness: family.build(&theta),
                    param: theta,
                });
            }
            None => notes.push(format!("target E1 = {target:.6} outside the achievable interval; omitted")),
        }
    }
    points.sort_by(|a, b| a.e1.partial_cmp(&b.e1).unwrap());
    points.dedup_by(|a, b| (a.e1 - b.e1).abs() < 1e-9);

    let curve = BankCurve {
        points,
        monotone_labels: (
            theory.monotones[0].label.clone(),
            theory.monotones[1].label.clone(),
        ),
    };
    curve.validate()?;
    Ok((curve, notes))
}

/// min E2 subject to E1 = target over the family. One-parameter families are
/// swept and bisected along each bracketing segment; wider families fall back
/// to penalty continuation with coordinate descent.
fn constrained_min_e2(
    theory: &TheorySpec,
    family: &ParamFamily,
    target: f64,
) -> Result<Option<(Vec<f64>, f64, f64)>> {
    let eval = |theta: &[f64]| -> Result<(f64, f64)> {
        resource_pair(theory, &family.build(theta))
    };
    if family.params() == 1 {
        let (lo, hi) = family.bounds[0];
        let n = 512;
        let mut thetas = Vec::with_capacity(n + 1);
        let mut e1s = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let th = lo + (hi - lo) * i as f64 / n as f64;
            thetas.push(th);
            e1s.push(eval(&[th])?.0);
        }
        let mut best: Option<(Vec<f64>, f64, f64)> = None;
        fn consider(best: &mut Option<(Vec<f64>, f64, f64)>, theta: f64, pair: (f64, f64)) {
            if best.as_ref().is_none_or(|b| pair.1 < b.2) {
                *best = Some((vec![theta], pair.0, pair.1));
            }
        }
        for i in 0..n {
            let (a, b) = (e1s[i] - target, e1s[i + 1] - target);
            if a == 0.0 {
                consider(&mut best, thetas[i], eval(&[thetas[i]])?);
                continue;
            }
            if a * b <= 0.0 {
                // Bisect the bracketing segment.
                let (mut tl, mut th) = (thetas[i], thetas[i + 1]);
                let (mut fl, _) = (a, b);
                for _ in 0..80 {
                    let mid = 0.5 * (tl + th);
                    let fm = eval(&[mid])?.0 - target;
                    if (fl <= 0.0) == (fm <= 0.0) {
                        tl = mid;
                        fl = fm;
                    } else {
                        th = mid;
                    }
                }
                let t = 0.5 * (tl + th);
                consider(&mut best, t, eval(&[t])?);
            }
        }
        if best.is_none() {
            // Snap to an endpoint when the target misses the achievable
            // interval by a hair.
            for &th in &[lo, hi] {
                let pair = eval(&[th])?;
                if (pair.0 - target).abs() <= 1e-6 {
                    consider(&mut best, th, pair);
                }
            }
        }
        return Ok(best);
    }

    // Penalty continuation for multi-parameter families.
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for start in family_grid(family, 16) {
        let mut theta = start;
        for pen in [1e3, 1e5, 1e7] {
            theta = coordinate_descent(family, &theta, |th| {
                let (e1, e2) = eval(th).unwrap_or((f64::NAN, f64::INFINITY));
                e2 + pen * (e1 - target) * (e1 - target)
            });
        }
        let (e1, e2) = eval(&theta)?;
        if (e1 - target).abs() <= 1e-6 && best.as_ref().is_none_or(|b| e2 < b.2) {
            best = Some((theta, e1, e2));
        }
    }
    Ok(best)
}

fn coordinate_descent(
    family: &ParamFamily,
    start: &[f64],
    objective: impl Fn(&[f64]) -> f64,
) -> Vec<f64> {
    let mut theta = start.to_vec();
    for _ in 0..40 {
        let mut moved = 0.0f64;
        for d in 0..family.params() {
            let (lo, hi) = family.bounds[d];
            let before = theta[d];
            let mut probe = theta.clone();
            let best = golden_min(
                |x| {
                    probe[d] = x;
                    objective(&probe)
                },
                lo,
                hi,
                1e-10 * (hi - lo).max(1e-10),
            );
            theta[d] = best;
            moved = moved.max((best - before).abs());
        }
        if moved < 1e-10 {
            break;
        }
    }
    theta
}

fn golden_min(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, width: f64) -> f64 {
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

/// Tangent-line coefficients at an interior curve point: the slope comes
/// from central finite differences (in the family parameter when available,
/// h = 1e-4 with a Richardson consistency check at h/2), alpha = -slope,
/// beta = 1, and gamma pins the zero on the anchor.
pub fn tangent_coeffs(
    theory: &TheorySpec,
    curve: &BankCurve,
    anchor_index: usize,
) -> Result<BankMonotoneCoeffs> {
    let pts = &curve.points;
    if pts.len() < 3 {
        return Err(Error::CurveInvariant("need at least three points".into()));
    }
    if anchor_index == 0 || anchor_index + 1 >= pts.len() {
        return Err(Error::EndpointAnchor);
    }
    let (prev, here, next) = (&pts[anchor_index - 1], &pts[anchor_index], &pts[anchor_index + 1]);

    // Local strict convexity.
    let s_left = (here.e2 - prev.e2) / (here.e1 - prev.e1);
    let s_right = (next.e2 - here.e2) / (next.e1 - here.e1);
    if s_right - s_left <= 1e-8 {
        return Err(Error::NonConvexNeighborhood(format!(
            "slopes {s_left:.6} -> {s_right:.6} around E1 = {:.6}",
            here.e1
        )));
    }

    let (slope, discrepancy) = match (&theory.state_family, here.param.len()) {
        (Some(family), 1) => {
            let slope_at = |h: f64| -> Result<f64> {
                let (lo, hi) = family.bounds[0];
                let tp = (here.param[0] + h).min(hi);
                let tm = (here.param[0] - h).max(lo);
                let (e1p, e2p) = resource_pair(theory, &family.build(&[tp]))?;
                let (e1m, e2m) = resource_pair(theory, &family.build(&[tm]))?;
                Ok((e2p - e2m) / (e1p - e1m))
            };
            let s_h = slope_at(1e-4)?;
            let s_h2 = slope_at(5e-5)?;
            // Richardson extrapolation of the central difference.
            ((4.0 * s_h2 - s_h) / 3.0, (s_h - s_h2).abs())
        }
        _ => {
            let s = (next.e2 - prev.e2) / (next.e1 - prev.e1);
            (s, (s_right - s_left).abs())
        }
    };
    if !slope.is_finite() || slope >= 0.0 {
        return Err(Error::NonConvexNeighborhood(format!(
            "tangent slope {slope:.6} is not strictly negative"
        )));
    }
    let alpha = -slope;
    let beta = 1.0;
    let gamma = alpha * here.e1 + beta * here.e2;
    Ok(BankMonotoneCoeffs {
        alpha,
        beta,
        gamma,
        anchor: (here.e1, here.e2),
        richardson_discrepancy: discrepancy,
    })
}

/// Tangent-plane coefficients for the three-resource thermodynamic theory,
/// from the cross product of the two finite-difference tangent vectors of
/// the max-entropy surface, sign-normalised so the purity coefficient is +1.
pub fn normal_vector_coeffs(theory: &TheorySpec, betas: &[f64], h: f64) -> Result<Vec<f64>> {
    let charges = theory
        .charges
        .as_ref()
        .filter(|c| c.len() == 2)
        .ok_or_else(|| Error::BadTheory("needs the two-charge thermodynamic theory".into()))?;
    if theory.resource_count() != 3 || betas.len() != 2 {
        return Err(Error::BadTheory(
            "normal-vector construction needs three resources and two betas".into(),
        ));
    }
    let coords = |b: &[f64]| -> Result<[f64; 3]> {
        let tau = crate::gibbs::gibbs_state(charges, b)?;
        Ok([
            theory.monotones[0].value(&tau)?,
            theory.monotones[1].value(&tau)?,
            theory.monotones[2].value(&tau)?,
        ])
    };
    let mut tangents = [[0.0f64; 3]; 2];
    for i in 0..2 {
        let mut bp = betas.to_vec();
        let mut bm = betas.to_vec();
        bp[i] += h;
        bm[i] -= h;
        let cp = coords(&bp)?;
        let cm = coords(&bm)?;
        for k in 0..3 {
            tangents[i][k] = (cp[k] - cm[k]) / (2.0 * h);
        }
    }
    let (u, v) = (tangents[0], tangents[1]);
    let n = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if norm < 1e-10 {
        return Err(Error::DegenerateCrossProduct(norm));
    }
    if n[2].abs() < 1e-12 * norm {
        return Err(Error::DegenerateCrossProduct(n[2].abs()));
    }
    Ok(vec![n[0] / n[2], n[1] / n[2], 1.0])
}

/// Balances alpha dW1 + beta dW2 against the change of the bank monotone on
/// the main system.
pub fn first_law_check(
    theory: &TheorySpec,
    coeffs: &BankMonotoneCoeffs,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    dw1: f64,
    dw2: f64,
) -> Result<FirstLawReport> {
    two_resource(theory)?;
    let (r1, r2) = resource_pair(theory, rho)?;
    let (s1, s2) = resource_pair(theory, sigma)?;
    let lhs = coeffs.alpha * dw1 + coeffs.beta * dw2;
    let rhs = coeffs.f_bank(r1, r2) - coeffs.f_bank(s1, s2);
    Ok(FirstLawReport {
        lhs,
        rhs,
        residual: lhs - rhs,
        rate: coeffs.rate(),
    })
}

/// Least-squares proportionality between the bank monotone and the
/// relative-entropy distance from the anchor witness, over sampled states.
pub fn bank_vs_relent_check(
    theory: &TheorySpec,
    coeffs: &BankMonotoneCoeffs,
    anchor_witness: &DensityMatrix,
    sampler: &mut dyn FnMut(&mut ChaCha8Rng) -> DensityMatrix,
    samples: usize,
    seed: u64,
) -> Result<BankRelEntReport> {
    two_resource(theory)?;
    bank_vs_relent_check_multi(
        theory,
        &[coeffs.alpha, coeffs.beta],
        anchor_witness,
        sampler,
        samples,
        seed,
    )
}

/// Same check for an arbitrary resource count: the affine monotone is
/// sum_i c_i E_i - gamma with gamma pinned so it vanishes on the witness.
pub fn bank_vs_relent_check_multi(
    theory: &TheorySpec,
    coeff_vector: &[f64],
    anchor_witness: &DensityMatrix,
    sampler: &mut dyn FnMut(&mut ChaCha8Rng) -> DensityMatrix,
    samples: usize,
    seed: u64,
) -> Result<BankRelEntReport> {
    if coeff_vector.len() != theory.resource_count() {
        return Err(Error::BadTheory(format!(
            "{} coefficients for {} monotones",
            coeff_vector.len(),
            theory.resource_count()
        )));
    }
    let f_of = |rho: &DensityMatrix| -> Result<f64> {
        let mut acc = 0.0;
        for (m, &c) in theory.monotones.iter().zip(coeff_vector) {
            acc += c * m.value(rho)?;
        }
        Ok(acc)
    };
    let gamma = f_of(anchor_witness)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let rho = sampler(&mut rng);
        let f = f_of(&rho)? - gamma;
        let d = match relative_entropy(&rho, anchor_witness)? {
            ExtendedReal::Finite(v) => v,
            ExtendedReal::Infinity => {
                return Err(Error::InfeasibleTargets(
                    "sampled state has infinite distance to the anchor witness".into(),
                ))
            }
        };
        pairs.push((f, d));
    }
    let num: f64 = pairs.iter().map(|(f, d)| f * d).sum();
    let den: f64 = pairs.iter().map(|(_, d)| d * d).sum();
    let scale = if den > 1e-300 { num / den } else { 0.0 };
    let mut max_rel = 0.0f64;
    for (f, d) in &pairs {
        let dev = (f - scale * d).abs() / f.abs().max(d.abs()).max(1e-9);
        max_rel = max_rel.max(dev);
    }
    Ok(BankRelEntReport {
        scale,
        max_rel_deviation: max_rel,
        samples,
    })
}

/// Minimum of the bank monotone over sampled states of the theory's space;
/// tangency demands it stay above -1e-6.
pub fn tangency_certificate(
    theory: &TheorySpec,
    coeffs: &BankMonotoneCoeffs,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_f = f64::INFINITY;
    for _ in 0..samples {
        let rho = theory.sample_state(&mut rng);
        let (e1, e2) = resource_pair(theory, &rho)?;
        min_f = min_f.min(coeffs.f_bank(e1, e2));
    }
    Ok(min_f)
}

/// Uniform grid over the achievable E1 interval of the theory's family.
pub fn default_e1_grid(theory: &TheorySpec, count: usize) -> Result<Vec<f64>> {
    let family = theory
        .state_family
        .as_ref()
        .ok_or_else(|| Error::BadTheory("no state family".into()))?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for theta in family_grid(family, 256) {
        let (e1, _) = resource_pair(theory, &family.build(&theta))?;
        lo = lo.min(e1);
        hi = hi.max(e1);
    }
    Ok((0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect())
}
