//! End-to-end acceptance suite. Each test exercises one numbered criterion
//! at its stated tolerance and prints one pass/fail line.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use multires_core::{
    back_action_scaling, bank_vs_relent_check_multi, bell_diagonal, binary_entropy,
    build_local_control_theory, build_thermo_theory, closest_state, default_e1_grid,
    diag_observable, expectation, first_law_check, gibbs_state, grid_oracle, normal_vector_coeffs,
    property_suite_m, random_density, relative_entropy, run_interconversion, solve_betas,
    tangency_certificate, tangent_coeffs, trace_bank_curve, trace_distance, transformation_cost,
    von_neumann_entropy, BatteryLedger, CMatrix, DensityMatrix, FreeSetSpec, Observable, SetKind,
};

fn report(n: usize, pass: bool, detail: &str) {
    println!(
        "criterion {n}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} failed: {detail}");
}

fn pauli_x() -> Observable {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 1)] = multires_core::C64::new(1.0, 0.0);
    m[(1, 0)] = multires_core::C64::new(1.0, 0.0);
    Observable::new(m, "Sx").unwrap()
}

fn pauli_z() -> Observable {
    diag_observable(&[1.0, -1.0], "Sz")
}

/// Criterion 1: the distance to the uniform state equals log2 d - S(rho)
/// within 1e-9 for a thousand random states at d in {2, 3, 4}, in under 10 s.
#[test]
fn criterion_1_purity_closed_form() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for d in [2usize, 3, 4] {
        let set = FreeSetSpec::singleton(DensityMatrix::maximally_mixed(d), "uniform");
        for seed in 0..1000u64 {
            let rho = random_density(d, seed * 3 + d as u64);
            let got = closest_state(&set, &rho, 1e-9, 10)
                .unwrap()
                .value
                .expect_finite();
            let want = (d as f64).log2() - von_neumann_entropy(&rho);
            worst = worst.max((got - want).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        1,
        worst <= 1e-9 && elapsed < 10.0,
        &format!("worst |E - (log2 d - S)| = {worst:.3e}, {elapsed:.2} s"),
    );
}

/// Criterion 2: the polytope solver on the separable cross-section matches
/// 1 - h(p0) within 1e-6 on the Bell-diagonal grid p0 = 0.5, 0.55, ..., 1.0,
/// and the brute-force grid oracle agrees within 1e-3.
#[test]
fn criterion_2_local_control_closed_form() {
    let mut css = multires_core::css_polytope();
    if let SetKind::VertexPolytope { bell_fast_path, .. } = &mut css.kind {
        *bell_fast_path = false; // exercise the Frank-Wolfe path itself
    }
    let mut worst_solver = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for i in 0..=10 {
        let p0 = 0.5 + 0.05 * i as f64;
        let rest = 1.0 - p0;
        let rho = bell_diagonal(&[p0, rest * 0.5, rest * 0.3, rest * 0.2]);
        let want = 1.0 - binary_entropy(p0);
        let got = closest_state(&css, &rho, 1e-9, 4000)
            .unwrap()
            .value
            .expect_finite();
        worst_solver = worst_solver.max((got - want).abs());
        let oracle = grid_oracle(&css, &rho, 200).unwrap();
        worst_oracle = worst_oracle.max((oracle - want).abs());
    }
    report(
        2,
        worst_solver <= 1e-6 && worst_oracle <= 1e-3,
        &format!("solver dev {worst_solver:.3e}, oracle dev {worst_oracle:.3e}"),
    );
}

/// Criterion 3: Jaynes round-trip for the noncommuting charge pair over a
/// hundred random beta pairs in [-3, 3]^2, recovered within 1e-6, under 30 s.
#[test]
fn criterion_3_jaynes_round_trip() {
    let start = Instant::now();
    let charges = [pauli_x(), pauli_z()];
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let betas = [
            -3.0 + 6.0 * rng.random::<f64>(),
            -3.0 + 6.0 * rng.random::<f64>(),
        ];
        let tau = gibbs_state(&charges, &betas).unwrap();
        let targets: Vec<f64> = charges
            .iter()
            .map(|ch| expectation(&tau, ch).unwrap())
            .collect();
        let solve = solve_betas(&charges, &targets, 1e-9).unwrap();
        for (got, want) in solve.betas.iter().zip(&betas) {
            worst = worst.max((got - want).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        3,
        worst <= 1e-6 && elapsed < 30.0,
        &format!("worst |beta - beta_hat| = {worst:.3e}, {elapsed:.2} s"),
    );
}

/// Criterion 4: the finite-difference tangent plane at random anchors
/// reproduces the (beta1, beta2, -1)-pattern coefficients of the distance
/// to the max-entropy state within relative 1e-4, and the affine monotone
/// matches that distance to 1e-6 after fitting one constant.
#[test]
fn criterion_4_thermo_tangent_identity() {
    let charges = [pauli_x(), pauli_z()];
    let theory = build_thermo_theory(&charges).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_rel = 0.0f64;
    let mut worst_dev = 0.0f64;
    for _ in 0..20 {
        let betas = [
            0.2 + 2.3 * rng.random::<f64>(),
            0.2 + 2.3 * rng.random::<f64>(),
        ];
        let coeffs = normal_vector_coeffs(&theory, &betas, 1e-4).unwrap();
        // Purity coefficient +1 in (M_A, M_B, E_FS) coordinates is the
        // (beta1, beta2, -1) pattern on (<A>, <B>, S).
        worst_rel = worst_rel.max((coeffs[0] - betas[0]).abs() / betas[0]);
        worst_rel = worst_rel.max((coeffs[1] - betas[1]).abs() / betas[1]);
        assert_eq!(coeffs[2], 1.0);

        let tau = gibbs_state(&charges, &betas).unwrap();
        let mut sampler =
            |rng: &mut ChaCha8Rng| multires_core::state::random_density_with(2, rng);
        let rep =
            bank_vs_relent_check_multi(&theory, &coeffs, &tau, &mut sampler, 300, 11).unwrap();
        assert!(rep.scale > 0.0);
        worst_dev = worst_dev.max(rep.max_rel_deviation);
    }
    report(
        4,
        worst_rel <= 1e-4 && worst_dev <= 1e-6,
        &format!("coeff rel dev {worst_rel:.3e}, distance dev {worst_dev:.3e}"),
    );
}

/// Criterion 5: first-law residual at 1e-8 for a hundred random qubit pairs
/// with banks at five temperatures, battery changes generated from the
/// monotone differences.
#[test]
fn criterion_5_first_law() {
    let theory = build_thermo_theory(&[diag_observable(&[0.0, 1.0], "H")]).unwrap();
    let grid = default_e1_grid(&theory, 201).unwrap();
    let (curve, _) = trace_bank_curve(&theory, &grid).unwrap();
    let anchors = [30usize, 70, 100, 130, 170];
    let mut worst = 0.0f64;
    let mut pair = 0u64;
    for &idx in &anchors {
        let coeffs = tangent_coeffs(&theory, &curve, idx).unwrap();
        for _ in 0..20 {
            pair += 1;
            let rho = random_density(2, 1000 + pair);
            let sigma = random_density(2, 5000 + pair);
            let dw1 = transformation_cost(&theory.monotones[0], &rho, &sigma).unwrap();
            let dw2 = transformation_cost(&theory.monotones[1], &rho, &sigma).unwrap();
            let rep = first_law_check(&theory, &coeffs, &rho, &sigma, dw1, dw2).unwrap();
            worst = worst.max(rep.residual.abs());
        }
    }
    report(
        5,
        worst <= 1e-8,
        &format!("worst residual {worst:.3e} over 100 pairs x 5 anchors"),
    );
}

/// Criterion 6: the protocol's realised exchange rate approaches the tangent
/// rate as n grows, within 2% relative at n = 10^4.
#[test]
fn criterion_6_interconversion_rate() {
    let mut detail = String::new();
    let mut ok = true;
    for &p0 in &[0.7f64, 0.9] {
        let rate_inf = -1.0 / (p0 / (1.0 - p0)).log2();
        let mut prev = f64::INFINITY;
        let mut final_rel = f64::NAN;
        for &n in &[100u64, 1000, 10_000] {
            let ledger = BatteryLedger::generous(n, 10);
            let t = run_interconversion(n, p0, 10, 0.0, 1.0, &ledger).unwrap();
            let err = (t.dw_w / t.dw_e - rate_inf).abs();
            ok &= err < prev;
            prev = err;
            final_rel = err / rate_inf.abs();
        }
        ok &= final_rel < 0.02;
        detail.push_str(&format!("p0={p0}: rel err at 1e4 = {final_rel:.4}; "));
    }
    report(6, ok, &detail);
}

/// Criterion 7: the back-action delta_n decays with log-log slope in
/// [-1.3, -0.7] over n = 10^2 .. 10^5.
#[test]
fn criterion_7_back_action_scaling() {
    let table = back_action_scaling(0.9, 10, &[100, 1000, 10_000, 100_000], 0.0, 1.0).unwrap();
    let slope = table.delta_slope;
    report(
        7,
        (-1.3..=-0.7).contains(&slope),
        &format!("delta_n log-log slope {slope:.4}"),
    );
}

/// Criterion 8: traced curves for both built-in theories pass the frontier
/// invariants at 200 grid points, and the tangent monotone stays above
/// -1e-6 over 10^4 sampled states per anchor.
#[test]
fn criterion_8_bank_curve_geometry() {
    let theories = [
        build_thermo_theory(&[diag_observable(&[0.0, 1.0], "H")]).unwrap(),
        build_local_control_theory(0.0, 1.0).unwrap(),
    ];
    let mut detail = String::new();
    let mut ok = true;
    for theory in &theories {
        let grid = default_e1_grid(theory, 200).unwrap();
        let (curve, _) = trace_bank_curve(theory, &grid).unwrap();
        curve.validate().unwrap();
        let anchors = [
            curve.points.len() / 4,
            curve.points.len() / 2,
            3 * curve.points.len() / 4,
        ];
        let mut min_f = f64::INFINITY;
        for &idx in &anchors {
            let coeffs = tangent_coeffs(theory, &curve, idx).unwrap();
            min_f = min_f.min(tangency_certificate(theory, &coeffs, 10_000, 3).unwrap());
        }
        ok &= min_f >= -1e-6;
        detail.push_str(&format!(
            "{}: {} points, min f_bank {min_f:+.3e}; ",
            theory.label,
            curve.points.len()
        ));
    }
    report(8, ok, &detail);
}

/// Criterion 9: property-suite margins. M3/M4/M5 at -1e-8 over a thousand
/// samples per built-in theory; singleton-set super-additivity at -1e-9 over
/// a thousand bipartite samples; the average-observable continuity bound
/// non-negative over a thousand pairs.
#[test]
fn criterion_9_property_suites() {
    let mut ok = true;
    let mut detail = String::new();

    for theory in [
        build_thermo_theory(&[diag_observable(&[0.0, 1.0], "H")]).unwrap(),
        build_local_control_theory(0.0, 1.0).unwrap(),
    ] {
        let rep = property_suite_m(&theory, 1000, 17).unwrap();
        let mut worst = f64::INFINITY;
        for r in &rep.records {
            if r.name.starts_with("M3") || r.name.starts_with("M4") || r.name.starts_with("M5") {
                worst = worst.min(r.worst_margin);
            }
        }
        ok &= worst >= -1e-8;
        detail.push_str(&format!("{} M3/M4/M5 margin {worst:+.3e}; ", theory.label));
    }

    // Super-additivity for singleton sets, via direct divergences.
    let gamma = random_density(2, 99);
    let joint = gamma.tensor(&gamma);
    let mut worst_super = f64::INFINITY;
    for seed in 0..1000u64 {
        let raw = random_density(4, 20_000 + seed);
        let rho = DensityMatrix::new(raw.entries().clone(), vec![2, 2]).unwrap();
        let whole = relative_entropy(&rho, &joint).unwrap().expect_finite();
        let a = rho.partial_trace(&[0]).unwrap();
        let b = rho.partial_trace(&[1]).unwrap();
        let parts = relative_entropy(&a, &gamma).unwrap().expect_finite()
            + relative_entropy(&b, &gamma).unwrap().expect_finite();
        worst_super = worst_super.min(whole - parts);
    }
    ok &= worst_super >= -1e-9;
    detail.push_str(&format!("super-additivity margin {worst_super:+.3e}; "));

    // Average-observable continuity bound.
    let h = diag_observable(&[0.0, 1.0], "H");
    let m = multires_core::Monotone::avg_observable(h.clone(), "M_H");
    let norm = h.operator_norm();
    let mut worst_lip = f64::INFINITY;
    for seed in 0..1000u64 {
        let rho = random_density(2, 40_000 + seed);
        let sigma = random_density(2, 60_000 + seed);
        let fa = m.value(&rho).unwrap();
        let fb = m.value(&sigma).unwrap();
        let dist = trace_distance(&rho, &sigma).unwrap();
        worst_lip = worst_lip.min(norm * dist - (fa - fb).abs());
    }
    ok &= worst_lip >= 0.0;
    detail.push_str(&format!("continuity-bound margin {worst_lip:+.3e}"));

    report(9, ok, &detail);
}
