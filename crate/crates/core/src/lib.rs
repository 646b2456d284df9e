//! Numerical toolkit for two- and three-resource state theories on
//! finite-dimensional quantum systems.
//!
//! The library is organised around a handful of building blocks:
//!
//! * dense Hermitian linear algebra and entropic divergences ([`state`],
//!   [`observable`], [`entropy`], [`gibbs`]),
//! * convex sets of states with closest-state solvers ([`free_sets`]),
//! * resource quantifiers and their finite-scale property suites
//!   ([`monotones`]),
//! * Pareto bank curves, tangent exchange rates and the first-law balance
//!   ([`bank`]),
//! * the two built-in theories (multi-charge thermodynamics and two-qubit
//!   local control) in [`theories`],
//! * the finite-n energy/entanglement interconversion protocol in
//!   [`protocol`],
//! * CSV/SVG emission and the config file model ([`export`], [`config`]).
//!
//! All entropies and relative entropies are in bits (base-2 logarithms),
//! and inverse temperatures are in the matching 1/(bit-energy) units; the
//! conversion to natural-log conventions is a factor of ln 2.

pub mod bank;
pub mod config;
pub mod entropy;
pub mod error;
pub mod export;
pub mod free_sets;
pub mod gibbs;
pub mod linalg;
pub mod monotones;
pub mod observable;
pub mod protocol;
pub mod state;
pub mod theories;

pub use bank::{
    bank_vs_relent_check, bank_vs_relent_check_multi, default_e1_grid, first_law_check, is_bank_state, normal_vector_coeffs,
    resource_pair, tangency_certificate, tangent_coeffs, trace_bank_curve, BankCurve,
    BankMonotoneCoeffs, BankPoint, BankRelEntReport, BankVerdict, FirstLawReport,
};
pub use config::{SolverConfig, TheoryConfig};
pub use entropy::{
    binary_entropy, binary_kl, relative_entropy, trace_distance, von_neumann_entropy, ExtendedReal,
};
pub use error::{Error, Result};
pub use free_sets::{
    closest_state, grid_oracle, membership, tensor_power_distance, ClosestStateResult,
    FreeSetSpec, ParamFamily, SetKind,
};
pub use gibbs::{gibbs_state, log2_partition};
pub use linalg::{eigh, C64, CMatrix, CVector};
pub use monotones::{
    delta_w, property_suite_broken_demo, property_suite_f, property_suite_m,
    regularization_trend, regularization_trend_capped, transformation_cost, BatteryDelta,
    EvalResult, Monotone, MonotoneKind,
    PropertyRecord, PropertyReport, RegularizationTrend, ResourceCoordinates, Verdict,
};
pub use observable::{expectation, sum_embed, Observable};
pub use protocol::{
    back_action_scaling, run_interconversion, solve_p0_prime, BatteryLedger, ProtocolTrace,
    ScalingTable,
};
pub use state::{max_total_dim, random_density, DensityMatrix};
pub use theories::{
    allowed_map_e_eta, bell_basis_state, bell_diagonal, build_local_control_theory,
    build_thermo_theory, css_polytope, diag_observable, sigma_mm, solve_betas, twirl_bell,
    BatteryFamily, BellDiagonalState, BetaSolve, SampleSpace, TheorySpec,
};

/// Default cap on the total Hilbert-space dimension of composite operators.
pub const DEFAULT_MAX_DIM: usize = 4096;
