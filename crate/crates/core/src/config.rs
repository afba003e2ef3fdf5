//! Scenario files: a TOML tree naming the problem, its energy level, and the
//! solver settings. The grammar is documented in `configs/README.md`.

use serde::{Deserialize, Serialize};

use crate::builtins;
use crate::critical::ToleranceSet;
use crate::domain::{ScanOptions, SignedDistanceField};
use crate::error::{Error, Result};
use crate::flow::FlowConfig;
use crate::geometry::{Mat2, Point};
use crate::maupertuis::{
    coupled_oscillator, oscillator, ConstantKinetic, HamiltonianSpec, Monomial, OrbitOptions, OrbitTolerances,
    PolynomialPotential,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Chords of the Jacobi metric of a Hamiltonian, then brake orbits.
    Hamiltonian,
    /// Chords of a Riemannian disk given directly.
    Geometric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "snake_case", deny_unknown_fields)]
pub enum Problem {
    /// `½|p|² + λ₁² q₁² + λ₂² q₂²`.
    Oscillator { l1: f64, l2: f64 },
    /// The oscillator plus `c q₁² q₂²`.
    CoupledOscillator { l1: f64, l2: f64, coupling: f64 },
    /// `½ a^{ij} p_i p_j + Σ c q₁^i q₂^j` with a constant inverse kinetic matrix.
    Polynomial {
        terms: Vec<Monomial>,
        #[serde(default = "identity")]
        inverse_kinetic: [[f64; 2]; 2],
        #[serde(default)]
        center: [f64; 2],
    },
    /// Geodesic ball of radius `r0` on the unit sphere.
    SphericalCap { r0: f64 },
    /// Euclidean unit disk.
    FlatDisk,
    /// Euclidean half-plane.
    HalfPlane,
}

fn identity() -> [[f64; 2]; 2] {
    [[1.0, 0.0], [0.0, 1.0]]
}

impl Problem {
    pub fn is_hamiltonian(&self) -> bool {
        matches!(self, Self::Oscillator { .. } | Self::CoupledOscillator { .. } | Self::Polynomial { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConcavitySettings {
    /// Largest band tried; Hamiltonian problems default to the hill-region hint.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_band: Option<f64>,
    pub scan: ScanOptions,
}

impl Default for ConcavitySettings {
    fn default() -> Self {
        Self {
            max_band: None,
            scan: ScanOptions::default(),
        }
    }
}

fn default_reach() -> f64 {
    4.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub problem: Problem,
    /// Energy level `E`; Hamiltonian problems only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    /// Regularization `ε`; defaults to `0.05 (E - V(center))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_reg: Option<f64>,
    /// Chart radius searched for the boundary of a hill region.
    #[serde(default = "default_reach")]
    pub reach: f64,
    #[serde(default)]
    pub seed: u64,
    /// Skip the concavity gate.
    #[serde(default)]
    pub force: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default)]
    pub concavity: ConcavitySettings,
    #[serde(default)]
    pub flow: FlowConfig,
    /// Derived from the certified band when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceSet>,
    #[serde(default)]
    pub orbits: OrbitOptions,
    #[serde(default)]
    pub orbit_tolerances: OrbitTolerances,
}

/// Names accepted by [`ScenarioConfig::builtin`].
pub const BUILTIN_SCENARIOS: [&str; 5] = ["oscillator", "coupled_oscillator", "spherical_cap", "flat_disk", "half_plane"];

impl ScenarioConfig {
    pub fn new(mode: Mode, problem: Problem, energy: Option<f64>) -> Self {
        Self {
            mode,
            problem,
            energy,
            eps_reg: None,
            reach: default_reach(),
            seed: 0,
            force: false,
            output: None,
            concavity: ConcavitySettings::default(),
            flow: FlowConfig::default(),
            tolerances: None,
            orbits: OrbitOptions::default(),
            orbit_tolerances: OrbitTolerances::default(),
        }
    }

    /// The stock scenarios used by the acceptance runs.
    pub fn builtin(name: &str) -> Result<Self> {
        let sqrt2 = std::f64::consts::SQRT_2;
        let cfg = match name {
            "oscillator" => Self::new(Mode::Hamiltonian, Problem::Oscillator { l1: 1.0, l2: sqrt2 }, Some(1.0)),
            "coupled_oscillator" => Self::new(
                Mode::Hamiltonian,
                Problem::CoupledOscillator {
                    l1: 1.0,
                    l2: sqrt2,
                    coupling: 0.1,
                },
                Some(1.0),
            ),
            "spherical_cap" => {
                let mut c = Self::new(Mode::Geometric, Problem::SphericalCap { r0: 2.0 }, None);
                c.concavity.max_band = Some(0.25);
                c
            }
            "flat_disk" => Self::new(Mode::Geometric, Problem::FlatDisk, None),
            "half_plane" => Self::new(Mode::Geometric, Problem::HalfPlane, None),
            other => {
                return Err(Error::Config(format!(
                    "unknown builtin scenario {other:?}; expected one of {BUILTIN_SCENARIOS:?}"
                )))
            }
        };
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a scenario file, or a stock scenario written `builtin:<name>`.
    pub fn load(path: &str) -> Result<Self> {
        match path.strip_prefix("builtin:") {
            Some(name) => Self::builtin(name),
            None => Self::from_toml(&std::fs::read_to_string(path)?),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.mode, self.problem.is_hamiltonian()) {
            (Mode::Hamiltonian, false) => {
                return Err(Error::Config("hamiltonian mode needs a Hamiltonian problem".into()));
            }
            (Mode::Hamiltonian, true) if self.energy.is_none() => {
                return Err(Error::Config("hamiltonian mode needs an energy".into()));
            }
            _ => {}
        }
        if !(self.reach > 0.0) {
            return Err(Error::Config("reach must be positive".into()));
        }
        if let Problem::SphericalCap { r0 } = self.problem {
            if !(r0 > 0.0 && r0 < std::f64::consts::PI) {
                return Err(Error::Config(format!("cap radius must lie in ]0, π[, got {r0}")));
            }
        }
        self.orbits.validate()
    }

    /// The Hamiltonian of a Hamiltonian problem.
    pub fn hamiltonian(&self) -> Result<HamiltonianSpec> {
        let energy = self
            .energy
            .ok_or_else(|| Error::Config("hamiltonian problems need an energy".into()))?;
        Ok(match &self.problem {
            Problem::Oscillator { l1, l2 } => oscillator(*l1, *l2, energy),
            Problem::CoupledOscillator { l1, l2, coupling } => coupled_oscillator(*l1, *l2, *coupling, energy),
            Problem::Polynomial {
                terms,
                inverse_kinetic: a,
                center,
            } => HamiltonianSpec::new(
                ConstantKinetic {
                    inverse: Mat2::new(a[0][0], a[0][1], a[1][0], a[1][1]),
                },
                PolynomialPotential::new(terms.clone()),
                energy,
            )
            .with_center(Point::new(center[0], center[1])),
            _ => return Err(Error::Config("not a Hamiltonian problem".into())),
        })
    }

    /// The domain of a geometric problem.
    pub fn geometric_domain(&self) -> Result<SignedDistanceField> {
        Ok(match self.problem {
            Problem::SphericalCap { r0 } => builtins::spherical_cap(r0),
            Problem::FlatDisk => builtins::flat_disk(),
            Problem::HalfPlane => builtins::half_plane(),
            _ => return Err(Error::Config("not a geometric problem".into())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_round_trip() {
        for name in BUILTIN_SCENARIOS {
            let mut cfg = ScenarioConfig::builtin(name).unwrap();
            cfg.seed = 42;
            cfg.eps_reg = cfg.energy.map(|_| 0.05);
            let text = cfg.to_toml().unwrap();
            assert_eq!(ScenarioConfig::from_toml(&text).unwrap(), cfg, "{text}");
        }
    }

    #[test]
    fn polynomial_round_trip() {
        let mut cfg = ScenarioConfig::new(
            Mode::Hamiltonian,
            Problem::Polynomial {
                terms: vec![
                    Monomial { coef: 1.0, i: 2, j: 0 },
                    Monomial { coef: 2.0, i: 0, j: 2 },
                    Monomial { coef: 0.1, i: 2, j: 2 },
                ],
                inverse_kinetic: [[1.0, 0.1], [0.1, 2.0]],
                center: [0.0, 0.0],
            },
            Some(1.0),
        );
        cfg.tolerances = Some(ToleranceSet::for_band(0.01));
        cfg.output = Some("out".into());
        let text = cfg.to_toml().unwrap();
        assert_eq!(ScenarioConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn minimal_file_parses() {
        let cfg = ScenarioConfig::from_toml(
            r#"
            mode = "hamiltonian"
            energy = 1.0
            [problem]
            builtin = "oscillator"
            l1 = 1.0
            l2 = 1.4142135623730951
            [flow]
            n_theta = 16
            "#,
        )
        .unwrap();
        assert_eq!(cfg.flow.n_theta, 16);
        assert_eq!(cfg.flow.nodes, 256);
        assert_eq!(cfg.reach, 4.0);
    }

    #[test]
    fn inconsistent_files_are_rejected() {
        let geometric_in_hamiltonian = "mode = \"hamiltonian\"\nenergy = 1.0\n[problem]\nbuiltin = \"flat_disk\"\n";
        assert!(ScenarioConfig::from_toml(geometric_in_hamiltonian).is_err());
        let no_energy = "mode = \"hamiltonian\"\n[problem]\nbuiltin = \"oscillator\"\nl1 = 1.0\nl2 = 2.0\n";
        assert!(ScenarioConfig::from_toml(no_energy).is_err());
        let unknown = "mode = \"geometric\"\n[problem]\nbuiltin = \"torus\"\n";
        assert!(ScenarioConfig::from_toml(unknown).is_err());
        assert!(ScenarioConfig::builtin("torus").is_err());
    }
}
