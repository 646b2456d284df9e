//! Config-file model: JSON documents with matrix literals as nested arrays
//! of [re, im] pairs, row-major. Dims are inferred from the literal;
//! subsystem dims may be given explicitly.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_sets::{FreeSetSpec, ParamFamily};
use crate::linalg::{c, CMatrix};
use crate::monotones::Monotone;
use crate::observable::Observable;
use crate::state::DensityMatrix;
use crate::theories::{build_local_control_theory, build_thermo_theory, SampleSpace, TheorySpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixLiteral(pub Vec<Vec<[f64; 2]>>);

impl MatrixLiteral {
    pub fn to_cmatrix(&self) -> Result<CMatrix> {
        let n = self.0.len();
        if n == 0 || self.0.iter().any(|row| row.len() != n) {
            return Err(Error::Config("matrix literal must be square".into()));
        }
        let mut m = CMatrix::zeros(n, n);
        for (i, row) in self.0.iter().enumerate() {
            for (j, &[re, im]) in row.iter().enumerate() {
                m[(i, j)] = c(re, im);
            }
        }
        Ok(m)
    }

    pub fn from_cmatrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect();
        Self(rows)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ObservableConfig {
    pub matrix: MatrixLiteral,
    #[serde(default)]
    pub label: Option<String>,
}

impl ObservableConfig {
    fn build(&self, fallback: &str) -> Result<Observable> {
        Observable::new(
            self.matrix.to_cmatrix()?,
            self.label.clone().unwrap_or_else(|| fallback.to_string()),
        )
        .map_err(|e| Error::Config(format!("bad observable: {e}")))
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct StateConfig {
    pub matrix: MatrixLiteral,
    #[serde(default)]
    pub subsystem_dims: Option<Vec<usize>>,
}

impl StateConfig {
    fn build(&self) -> Result<DensityMatrix> {
        let m = self.matrix.to_cmatrix()?;
        let dims = self
            .subsystem_dims
            .clone()
            .unwrap_or_else(|| vec![m.nrows()]);
        DensityMatrix::new(m, dims).map_err(|e| Error::Config(format!("bad state: {e}")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BuiltinConfig {
    Thermo { charges: Vec<ObservableConfig> },
    LocalControl { e0: f64, e1: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MonotoneConfig {
    AvgObservable {
        matrix: MatrixLiteral,
        label: String,
    },
    RelEntropySingleton {
        state: StateConfig,
        label: String,
    },
    RelEntropyPolytope {
        vertices: Vec<StateConfig>,
        label: String,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilyConfig {
    /// Max-entropy family over the given charges.
    Gibbs { charges: Vec<ObservableConfig> },
    /// Piecewise mixtures along a list of states, one parameter.
    MixturePath { states: Vec<StateConfig> },
}

#[derive(Debug, Clone, Deserialize)]
pub struct CustomConfig {
    pub monotones: Vec<MonotoneConfig>,
    #[serde(default)]
    pub state_family: Option<FamilyConfig>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_tol() -> f64 {
    1e-8
}
fn default_grid() -> usize {
    200
}
fn default_samples() -> usize {
    1000
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            grid: default_grid(),
            seed: 0,
            samples: default_samples(),
        }
    }
}

/// Top-level theory description: exactly one of `builtin` or `custom`.
#[derive(Debug, Clone, Deserialize)]
pub struct TheoryConfig {
    pub label: String,
    #[serde(default)]
    pub builtin: Option<BuiltinConfig>,
    #[serde(default)]
    pub custom: Option<CustomConfig>,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
}

impl TheoryConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Config(format!(
                "parse failed at line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })
    }

    pub fn solver(&self) -> SolverConfig {
        self.solver.clone().unwrap_or_default()
    }

    pub fn to_theory(&self) -> Result<TheorySpec> {
        match (&self.builtin, &self.custom) {
            (Some(_), Some(_)) => Err(Error::Config(
                "config must have exactly one of builtin/custom, found both".into(),
            )),
            (None, None) => Err(Error::Config(
                "config must have exactly one of builtin/custom, found neither".into(),
            )),
            (Some(b), None) => self.build_builtin(b),
            (None, Some(c)) => self.build_custom(c),
        }
    }

    fn build_builtin(&self, b: &BuiltinConfig) -> Result<TheorySpec> {
        match b {
            BuiltinConfig::Thermo { charges } => {
                let obs: Vec<Observable> = charges
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c.build(&format!("A{i}")))
                    .collect::<Result<_>>()?;
                let mut theory =
                    build_thermo_theory(&obs).map_err(|e| Error::Config(e.to_string()))?;
                theory.label = self.label.clone();
                Ok(theory)
            }
            BuiltinConfig::LocalControl { e0, e1 } => {
                let mut theory = build_local_control_theory(*e0, *e1)
                    .map_err(|e| Error::Config(e.to_string()))?;
                theory.label = self.label.clone();
                Ok(theory)
            }
        }
    }

    fn build_custom(&self, cfg: &CustomConfig) -> Result<TheorySpec> {
        if cfg.monotones.is_empty() {
            return Err(Error::Config("custom theory needs monotones".into()));
        }
        let mut monotones = Vec::new();
        let mut sets = Vec::new();
        let mut dim = None;
        for (i, mc) in cfg.monotones.iter().enumerate() {
            let (m, set) = match mc {
                MonotoneConfig::AvgObservable { matrix, label } => {
                    let obs = Observable::new(matrix.to_cmatrix()?, label.clone())
                        .map_err(|e| Error::Config(e.to_string()))?;
                    let (vals, vecs) = obs.eig();
                    if vals.len() > 1 && vals[1] - vals[0] < 1e-10 {
                        return Err(Error::Config(format!(
                            "monotone {i}: observable has a degenerate ground space"
                        )));
                    }
                    let ground = DensityMatrix::new_unchecked(
                        crate::linalg::projector(&vecs.column(0).into_owned()),
                        vec![obs.dim()],
                    );
                    (
                        Monotone::avg_observable(obs, label.clone()),
                        FreeSetSpec::singleton(ground, format!("ground_{label}")),
                    )
                }
                MonotoneConfig::RelEntropySingleton { state, label } => {
                    let s = state.build()?;
                    let set = FreeSetSpec::singleton(s, label.clone());
                    (
                        Monotone::rel_entropy_distance(set.clone(), label.clone()),
                        set,
                    )
                }
                MonotoneConfig::RelEntropyPolytope { vertices, label } => {
                    let verts: Vec<DensityMatrix> =
                        vertices.iter().map(|v| v.build()).collect::<Result<_>>()?;
                    let set = FreeSetSpec::polytope(verts, None, label.clone())
                        .map_err(|e| Error::Config(e.to_string()))?;
                    (
                        Monotone::rel_entropy_distance(set.clone(), label.clone()),
                        set,
                    )
                }
            };
            match dim {
                None => dim = Some(m.base_dim()),
                Some(d) if d != m.base_dim() => {
                    return Err(Error::Config("monotones have mixed dimensions".into()))
                }
                _ => {}
            }
            monotones.push(m);
            sets.push(set);
        }
        let dim = dim.expect("at least one monotone");
        let state_family = match &cfg.state_family {
            None => None,
            Some(FamilyConfig::Gibbs { charges }) => {
                let obs: Vec<Observable> = charges
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c.build(&format!("A{i}")))
                    .collect::<Result<_>>()?;
                if obs.iter().any(|o| o.dim() != dim) {
                    return Err(Error::Config("family charges have the wrong dim".into()));
                }
                let k = obs.len();
                Some(ParamFamily {
                    bounds: vec![(0.0, 60.0); k],
                    builder: Arc::new(move |betas: &[f64]| {
                        crate::gibbs::gibbs_state(&obs, betas).expect("valid Gibbs parameters")
                    }),
                    label: "max-entropy".into(),
                })
            }
            Some(FamilyConfig::MixturePath { states }) => {
                if states.len() < 2 {
                    return Err(Error::Config("mixture path needs at least two states".into()));
                }
                let built: Vec<DensityMatrix> =
                    states.iter().map(|s| s.build()).collect::<Result<_>>()?;
                if built.iter().any(|s| s.dim() != dim) {
                    return Err(Error::Config("family states have the wrong dim".into()));
                }
                let hi = (built.len() - 1) as f64;
                Some(ParamFamily {
                    bounds: vec![(0.0, hi)],
                    builder: Arc::new(move |theta: &[f64]| {
                        let t = theta[0].clamp(0.0, hi);
                        let i = (t.floor() as usize).min(built.len() - 2);
                        let frac = t - i as f64;
                        built[i]
                            .mix(&built[i + 1], 1.0 - frac)
                            .expect("path states share a dimension")
                    }),
                    label: "mixture-path".into(),
                })
            }
        };
        let theory = TheorySpec {
            label: self.label.clone(),
            dim,
            monotones,
            invariant_sets: sets,
            state_family,
            sample_space: SampleSpace::HilbertSchmidt,
            battery_families: Vec::new(),
            charges: None,
            energy_levels: None,
        };
        theory.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(theory)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermo_qubit_config_round_trip() {
        let text = r#"{
            "label": "thermo-qubit",
            "builtin": {
                "kind": "thermo",
                "charges": [
                    {"matrix": [[[0,0],[0,0]],[[0,0],[1,0]]], "label": "H"}
                ]
            },
            "solver": {"tol": 1e-8, "grid": 100, "seed": 7}
        }"#;
        let cfg = TheoryConfig::from_json(text).unwrap();
        let theory = cfg.to_theory().unwrap();
        assert_eq!(theory.resource_count(), 2);
        assert_eq!(cfg.solver().seed, 7);
        assert_eq!(cfg.solver().grid, 100);
    }

    #[test]
    fn local_control_config() {
        let text = r#"{
            "label": "lc",
            "builtin": {"kind": "local-control", "e0": 0.0, "e1": 1.0}
        }"#;
        let theory = TheoryConfig::from_json(text).unwrap().to_theory().unwrap();
        assert_eq!(theory.dim, 4);
        assert!(theory.energy_levels.is_some());
    }

    #[test]
    fn rejects_both_or_neither() {
        let neither = r#"{"label": "x"}"#;
        assert!(TheoryConfig::from_json(neither)
            .unwrap()
            .to_theory()
            .is_err());
        let both = r#"{
            "label": "x",
            "builtin": {"kind": "local-control", "e0": 0, "e1": 1},
            "custom": {"monotones": [
                {"kind": "avg-observable", "matrix": [[[0,0],[0,0]],[[0,0],[1,0]]], "label": "M"}
            ]}
        }"#;
        assert!(TheoryConfig::from_json(both).unwrap().to_theory().is_err());
    }

    #[test]
    fn parse_errors_carry_position() {
        let bad = "{\"label\": }";
        match TheoryConfig::from_json(bad) {
            Err(Error::Config(msg)) => assert!(msg.contains("line"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn custom_mixture_path_family_builds() {
        let text = r#"{
            "label": "custom",
            "custom": {
                "monotones": [
                    {"kind": "avg-observable", "matrix": [[[0,0],[0,0]],[[0,0],[1,0]]], "label": "M_A"},
                    {"kind": "rel-entropy-singleton",
                     "state": {"matrix": [[[0.5,0],[0,0]],[[0,0],[0.5,0]]]},
                     "label": "E_FS"}
                ],
                "state_family": {"kind": "mixture-path", "states": [
                    {"matrix": [[[1,0],[0,0]],[[0,0],[0,0]]]},
                    {"matrix": [[[0.5,0],[0,0]],[[0,0],[0.5,0]]]}
                ]}
            }
        }"#;
        let theory = TheoryConfig::from_json(text).unwrap().to_theory().unwrap();
        assert_eq!(theory.resource_count(), 2);
        let family = theory.state_family.as_ref().unwrap();
        let mid = family.build(&[0.5]);
        assert!((mid.entries()[(0, 0)].re - 0.75).abs() < 1e-12);
    }

    #[test]
    fn matrix_literal_rejects_ragged_input() {
        let lit = MatrixLiteral(vec![vec![[1.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]]);
        assert!(lit.to_cmatrix().is_err());
    }
}
