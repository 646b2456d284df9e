//! Finite-n simulation of the energy/entanglement interconversion protocol:
//! typicalise the bank, swap singlets with the entanglement battery,
//! re-typicalise, with exact battery bookkeeping at every stage.
//!
//! Counts are tracked as exact reals (the typical-set sizes n h(p0) are not
//! integers); a parallel integer ledger reports the rounding residue as the
//! finite-size correction absorbed by a sub-linear ancilla.

use serde::Serialize;

use crate::entropy::binary_entropy;
use crate::error::{Error, Result};

/// Cell counts of the two batteries: the energy battery holds `energy_cells`
/// two-qubit cells of which `energy_ground` sit in the ground (singlet)
/// state; the entanglement battery holds `ent_cells` cells of which
/// `ent_singlets` are singlets (the rest sit in the separable two-level
/// mixture).
#[derive(Debug, Clone, Serialize)]
pub struct BatteryLedger {
    pub energy_cells: usize,
    pub energy_ground: f64,
    pub ent_cells: usize,
    pub ent_singlets: f64,
}

impl BatteryLedger {
    pub fn new(
        energy_cells: usize,
        energy_ground: f64,
        ent_cells: usize,
        ent_singlets: f64,
    ) -> Result<Self> {
        if energy_ground < 0.0 || energy_ground > energy_cells as f64 {
            return Err(Error::CapacityExceeded {
                required: energy_ground,
                available: energy_cells,
            });
        }
        if ent_singlets < 0.0 || ent_singlets > ent_cells as f64 {
            return Err(Error::CapacityExceeded {
                required: ent_singlets,
                available: ent_cells,
            });
        }
        Ok(Self {
            energy_cells,
            energy_ground,
            ent_cells,
            ent_singlets,
        })
    }

    /// A ledger with enough headroom for any run at the given n and r.
    pub fn generous(n: u64, r: i64) -> Self {
        let m = 4 * n as usize + 4 * r.unsigned_abs() as usize + 8;
        let l = 2 * r.unsigned_abs() as usize + 8;
        Self {
            energy_cells: m,
            energy_ground: m as f64 / 2.0,
            ent_cells: l,
            ent_singlets: l as f64 / 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolStep {
    pub label: String,
    pub bank: String,
    /// Ground-state count of the energy battery after this stage.
    pub energy_ground: f64,
    /// Singlet count of the entanglement battery after this stage.
    pub ent_singlets: f64,
    /// Bank energy plus energy-battery energy, in energy units.
    pub total_energy: f64,
    /// Bank entanglement plus entanglement-battery singlets, in bits.
    pub total_entanglement: f64,
}

/// Step-by-step ledger of one interconversion run.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolTrace {
    pub n: u64,
    pub p0_initial: f64,
    pub p0_final: f64,
    pub r: i64,
    /// Entanglement gained by the battery, in bits; equals r exactly.
    pub dw_e: f64,
    /// Energy gained by the battery, n (p0' - p0) (E1 - E0).
    pub dw_w: f64,
    /// Back-action on the bank in its own monotone, n * d(p0' || p0).
    pub delta_n: f64,
    pub steps: Vec<ProtocolStep>,
    /// Largest gap between the real-valued counts and their nearest
    /// integers, the finite-size correction a sub-linear ancilla absorbs.
    pub integer_residue: f64,
}

impl ProtocolTrace {
    /// One text record per stage.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "run n={} p0={:.6} r={} p0_final={:.12} dW_W={:.9e} dW_E={:.3} delta_n={:.9e} integer_residue={:.3e}\n",
            self.n, self.p0_initial, self.r, self.p0_final, self.dw_w, self.dw_e, self.delta_n,
            self.integer_residue
        ));
        for s in &self.steps {
            out.push_str(&format!(
                "stage={} bank=\"{}\" k={:.6} h={:.6} total_energy={:.9} total_entanglement={:.9}\n",
                s.label, s.bank, s.energy_ground, s.ent_singlets, s.total_energy,
                s.total_entanglement
            ));
        }
        out
    }
}

/// The unique p0' in [1/2, 1] with h(p0') = h(p0) + r/n, found by bisection
/// to 1e-12. Negative r walks back toward the singlet.
pub fn solve_p0_prime(p0: f64, r: i64, n: u64) -> Result<f64> {
    assert!(n >= 1);
    if !(0.5..1.0).contains(&p0) && p0 != 1.0 {
        return Err(Error::InfeasibleTargets(format!(
            "p0 = {p0} outside [1/2, 1)"
        )));
    }
    if r == 0 {
        return Ok(p0);
    }
    let target = binary_entropy(p0) + r as f64 / n as f64;
    if !(-1e-12..=1.0 + 1e-12).contains(&target) {
        return Err(Error::EntropyOutOfRange {
            target,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let target = target.clamp(0.0, 1.0);
    // h is strictly decreasing on [1/2, 1].
    let (mut lo, mut hi) = (0.5f64, 1.0f64);
    for _ in 0..200 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Runs the three bookkeeping stages and returns the full trace.
pub fn run_interconversion(
    n: u64,
    p0: f64,
    r: i64,
    e0: f64,
    e1: f64,
    ledger: &BatteryLedger,
) -> Result<ProtocolTrace> {
    if e0 >= e1 {
        return Err(Error::BadTheory(format!("need E0 < E1, got {e0}, {e1}")));
    }
    let gap = e1 - e0;
    let nf = n as f64;
    let p0_final = solve_p0_prime(p0, r, n)?;
    let h0 = binary_entropy(p0);
    let h1 = binary_entropy(p0_final);

    // Per-cell energies: singlet at e0, first triplet at e1, the separable
    // two-level mixture midway.
    let mm_energy = 0.5 * (e0 + e1);
    let bank_energy_in = nf * (p0 * e0 + (1.0 - p0) * e1);
    let bank_energy_typical = nf * h0 * mm_energy + nf * (1.0 - h0) * e0;
    let bank_energy_swapped = (nf * h0 + r as f64) * mm_energy + (nf * (1.0 - h0) - r as f64) * e0;
    let bank_energy_fin = nf * (p0_final * e0 + (1.0 - p0_final) * e1);

    // Bank entanglement in bits: only singlet cells carry it once typicalised.
    let bank_ent_in = nf * (1.0 - h0);
    let bank_ent_swapped = nf * (1.0 - h0) - r as f64;
    let bank_ent_fin = nf * (1.0 - h1);

    // Energy-battery compensations keep the total energy exact at each stage.
    let dk1 = (bank_energy_typical - bank_energy_in) / gap;
    let dk2 = (bank_energy_swapped - bank_energy_typical) / gap;
    let dk3 = (bank_energy_fin - bank_energy_swapped) / gap;

    let m = ledger.energy_cells;
    let l = ledger.ent_cells;
    let k0 = ledger.energy_ground;
    let h0_batt = ledger.ent_singlets;
    let k_states = [k0, k0 + dk1, k0 + dk1 + dk2, k0 + dk1 + dk2 + dk3];
    let h_states = [h0_batt, h0_batt, h0_batt + r as f64, h0_batt + r as f64];
    for &k in &k_states {
        if !(0.0..=m as f64).contains(&k) {
            return Err(Error::CapacityExceeded {
                required: k,
                available: m,
            });
        }
    }
    for &hh in &h_states {
        if !(0.0..=l as f64).contains(&hh) {
            return Err(Error::CapacityExceeded {
                required: hh,
                available: l,
            });
        }
    }

    let battery_energy = |k: f64| k * e0 + (m as f64 - k) * e1;
    let bank_energies = [
        bank_energy_in,
        bank_energy_typical,
        bank_energy_swapped,
        bank_energy_fin,
    ];
    let bank_ents = [bank_ent_in, bank_ent_in, bank_ent_swapped, bank_ent_fin];
    let labels = ["initial", "typicalize", "swap", "retypicalize"];
    let banks = [
        format!("rho_in^(n) at p0={p0:.6}"),
        format!("mm^({:.3}) x singlet^({:.3})", nf * h0, nf * (1.0 - h0)),
        format!(
            "mm^({:.3}) x singlet^({:.3})",
            nf * h0 + r as f64,
            nf * (1.0 - h0) - r as f64
        ),
        format!("rho_fin^(n) at p0={p0_final:.6}"),
    ];
    let steps: Vec<ProtocolStep> = (0..4)
        .map(|i| ProtocolStep {
            label: labels[i].to_string(),
            bank: banks[i].clone(),
            energy_ground: k_states[i],
            ent_singlets: h_states[i],
            total_energy: bank_energies[i] + battery_energy(k_states[i]),
            total_entanglement: bank_ents[i] + h_states[i],
        })
        .collect();

    // Battery gains over the whole run.
    let dw_e = r as f64;
    let dw_w = -(k_states[3] - k_states[0]) * gap;

    // Back-action of the bank against its anchor subset, through the
    // linear combination of the two monotones with the tangent slope.
    let log_odds = (p0 / (1.0 - p0)).log2();
    let delta_per_copy = (h0 - h1) + log_odds * (p0 - p0_final);
    let delta_n = nf * delta_per_copy;

    // Integer-rounding residue over the tracked counts.
    let residue = [nf * h0, nf * (1.0 - h0), nf * h1, dk1, dk2, dk3]
        .iter()
        .map(|x| (x - x.round()).abs())
        .fold(0.0f64, f64::max);

    Ok(ProtocolTrace {
        n,
        p0_initial: p0,
        p0_final,
        r,
        dw_e,
        dw_w,
        delta_n,
        steps,
        integer_residue: residue,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub n: u64,
    pub dw_w: f64,
    pub dw_e: f64,
    pub delta_n: f64,
    pub rate_error: f64,
}

/// Back-action and rate-convergence table over a list of bank sizes, with
/// least-squares log-log slopes.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    pub delta_slope: f64,
    pub rate_error_slope: f64,
    pub asymptotic_rate: f64,
}

impl ScalingTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,dW_W,dW_E,delta_n,rate_error\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                r.n, r.dw_w, r.dw_e, r.delta_n, r.rate_error
            ));
        }
        out
    }
}

pub fn back_action_scaling(
    p0: f64,
    r: i64,
    n_list: &[u64],
    e0: f64,
    e1: f64,
) -> Result<ScalingTable> {
    if r == 0 {
        return Err(Error::InfeasibleTargets(
            "scaling needs a nonzero exchange r".into(),
        ));
    }
    let gap = e1 - e0;
    let asymptotic_rate = -gap / (p0 / (1.0 - p0)).log2();
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let ledger = BatteryLedger::generous(n, r);
        let trace = run_interconversion(n, p0, r, e0, e1, &ledger)?;
        let rate = trace.dw_w / trace.dw_e;
        rows.push(ScalingRow {
            n,
            dw_w: trace.dw_w,
            dw_e: trace.dw_e,
            delta_n: trace.delta_n,
            rate_error: (rate - asymptotic_rate).abs(),
        });
    }
    let delta_slope = loglog_slope(rows.iter().map(|r| (r.n as f64, r.delta_n)));
    let rate_error_slope = loglog_slope(rows.iter().map(|r| (r.n as f64, r.rate_error)));
    Ok(ScalingTable {
        rows,
        delta_slope,
        rate_error_slope,
        asymptotic_rate,
    })
}

fn loglog_slope(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .filter(|(x, y)| *x > 0.0 && *y > 1e-300)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::binary_kl;

    #[test]
    fn p0_prime_no_exchange_is_identity() {
        let p = solve_p0_prime(0.83, 0, 1000).unwrap();
        assert!((p - 0.83).abs() < 1e-11);
    }

    #[test]
    fn p0_prime_agrees_with_first_order_expansion() {
        let p0 = 0.9;
        let n = 1000u64;
        let r = 10i64; // r/n = 0.01
        let got = solve_p0_prime(p0, r, n).unwrap();
        let expansion = p0 - (r as f64 / n as f64) / (p0 / (1.0 - p0)).log2();
        assert!(
            (got - expansion).abs() < 5e-4,
            "bisection {} vs expansion {}",
            got,
            expansion
        );
    }

    #[test]
    fn p0_prime_saturates_at_half() {
        // Choose p0 with h(p0) = 1 - r/n exactly, so the target entropy is 1.
        let (r, n) = (50i64, 100u64);
        let want_h = 1.0 - r as f64 / n as f64;
        let (mut lo, mut hi) = (0.5f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if binary_entropy(mid) > want_h {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p0 = 0.5 * (lo + hi);
        let got = solve_p0_prime(p0, r, n).unwrap();
        assert!((got - 0.5).abs() < 1e-6, "p0' = {got}");
    }

    #[test]
    fn p0_prime_rejects_unreachable_entropy() {
        assert!(matches!(
            solve_p0_prime(0.9, 1000, 100),
            Err(Error::EntropyOutOfRange { .. })
        ));
        assert!(matches!(
            solve_p0_prime(0.9, -1000, 100),
            Err(Error::EntropyOutOfRange { .. })
        ));
    }

    #[test]
    fn zero_exchange_run_is_an_identity_trace() {
        let ledger = BatteryLedger::generous(100, 0);
        let t = run_interconversion(100, 0.9, 0, 0.0, 1.0, &ledger).unwrap();
        assert_eq!(t.dw_e, 0.0);
        assert!(t.dw_w.abs() < 1e-12);
        assert!(t.delta_n.abs() < 1e-12);
        assert!((t.p0_final - 0.9).abs() < 1e-11);
    }

    #[test]
    fn totals_are_conserved_at_every_stage() {
        let ledger = BatteryLedger::generous(500, 7);
        let t = run_interconversion(500, 0.85, 7, 0.0, 1.0, &ledger).unwrap();
        let e0 = t.steps[0].total_energy;
        let q0 = t.steps[0].total_entanglement;
        for s in &t.steps {
            assert!(
                (s.total_energy - e0).abs() < 1e-9 * e0.abs().max(1.0),
                "energy drifted at {}",
                s.label
            );
            assert!(
                (s.total_entanglement - q0).abs() < 1e-9 * q0.abs().max(1.0),
                "entanglement drifted at {}",
                s.label
            );
        }
    }

    #[test]
    fn battery_entanglement_gain_is_exactly_r() {
        let ledger = BatteryLedger::generous(1000, 10);
        let t = run_interconversion(1000, 0.9, 10, 0.0, 1.0, &ledger).unwrap();
        assert_eq!(t.dw_e, 10.0);
        assert_eq!(
            t.steps.last().unwrap().ent_singlets - t.steps[0].ent_singlets,
            10.0
        );
    }

    #[test]
    fn sign_law_pay_energy_to_gain_entanglement() {
        for &(r, n) in &[(10i64, 1000u64), (-10, 1000)] {
            let ledger = BatteryLedger::generous(n, r);
            let t = run_interconversion(n, 0.8, r, 0.0, 1.0, &ledger).unwrap();
            if r > 0 {
                assert!(t.dw_w < 0.0, "energy must be paid, got {}", t.dw_w);
                assert!(t.p0_final < 0.8 && t.p0_final > 0.5);
            } else {
                assert!(t.dw_w > 0.0, "energy must be gained, got {}", t.dw_w);
                assert!(t.p0_final > 0.8);
            }
            assert!(t.delta_n > 0.0);
        }
    }

    #[test]
    fn delta_n_equals_binary_kl_of_the_drift() {
        // Dual route: the linear-combination bookkeeping against the
        // divergence d(p0' || p0) computed directly.
        let ledger = BatteryLedger::generous(2000, 15);
        let t = run_interconversion(2000, 0.87, 15, 0.0, 1.5, &ledger).unwrap();
        let direct = 2000.0 * binary_kl(t.p0_final, 0.87);
        assert!(
            (t.delta_n - direct).abs() < 1e-9 * direct.max(1.0),
            "ledger {} vs direct {}",
            t.delta_n,
            direct
        );
    }

    #[test]
    fn rate_approaches_the_tangent_rate() {
        let p0 = 0.9f64;
        let rate_inf = -1.0 / (p0 / (1.0 - p0)).log2();
        let mut last_err = f64::INFINITY;
        for &n in &[100u64, 1000, 10_000] {
            let ledger = BatteryLedger::generous(n, 10);
            let t = run_interconversion(n, p0, 10, 0.0, 1.0, &ledger).unwrap();
            let err = (t.dw_w / t.dw_e - rate_inf).abs();
            assert!(err < last_err, "error must shrink with n");
            last_err = err;
        }
        assert!(last_err / rate_inf.abs() < 0.02, "relative error {last_err}");
    }

    #[test]
    fn back_action_decays_inversely_with_n() {
        let mut prev = f64::INFINITY;
        for &n in &[100u64, 1000, 10_000] {
            let ledger = BatteryLedger::generous(n, 10);
            let t = run_interconversion(n, 0.9, 10, 0.0, 1.0, &ledger).unwrap();
            if prev.is_finite() {
                let ratio = t.delta_n / prev;
                assert!(
                    (ratio - 0.1).abs() < 0.03,
                    "consecutive delta_n ratio {ratio} should be near 1/10"
                );
            }
            prev = t.delta_n;
        }
    }

    #[test]
    fn scaling_table_slopes() {
        let table =
            back_action_scaling(0.9, 10, &[100, 1000, 10_000, 100_000], 0.0, 1.0).unwrap();
        assert!(
            table.delta_slope > -1.3 && table.delta_slope < -0.7,
            "delta slope {}",
            table.delta_slope
        );
        assert!(
            table.rate_error_slope <= -0.7,
            "rate-error slope {}",
            table.rate_error_slope
        );
        for r in &table.rows {
            assert_eq!(r.dw_e, 10.0);
        }
    }

    #[test]
    fn capacity_violations_are_rejected() {
        let tight = BatteryLedger::new(10, 5.0, 4, 2.0).unwrap();
        let err = run_interconversion(1000, 0.9, 10, 0.0, 1.0, &tight);
        assert!(matches!(err, Err(Error::CapacityExceeded { .. })));
    }

    #[test]
    fn reverse_direction_is_symmetric() {
        let n = 5000u64;
        let ledger = BatteryLedger::generous(n, 12);
        let fwd = run_interconversion(n, 0.85, 12, 0.0, 1.0, &ledger).unwrap();
        let back =
            run_interconversion(n, fwd.p0_final, -12, 0.0, 1.0, &ledger).unwrap();
        assert!((back.p0_final - 0.85).abs() < 1e-9);
        assert!((fwd.dw_w + back.dw_w).abs() < 1e-9);
        assert_eq!(fwd.dw_e, -back.dw_e);
    }
}
