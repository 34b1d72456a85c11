//! Experiment configuration: one JSON file describing the system, the domain,
//! and per-task parameter sections. Unknown keys are rejected so that typos
//! fail loudly instead of silently falling back to defaults.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::continuation::StepConfig;
use crate::domains::DomainModel;
use crate::dynamics::IntegratorConfig;
use crate::equilibria::{Normalization, SymmetryElement};
use crate::error::{Result, VortexError};
use crate::loopspace::NewtonOptions;
use crate::model::VortexSystem;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Number of vortices; must match the length of `strengths`.
    pub n: usize,
    /// Vortex strengths Γ_1, …, Γ_N (each nonzero).
    pub strengths: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory all artifacts and the run manifest are written to.
    pub directory: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationTask {
    /// Initial vortex positions [(x, y); N].
    pub initial_positions: Vec<(f64, f64)>,
    /// Integration horizon (positive or negative).
    pub t_end: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumTask {
    /// Initial guess for the configuration.
    pub initial_positions: Vec<(f64, f64)>,
    /// Either {"fix_omega": ω} or {"fix_scale": s}.
    pub normalization: Normalization,
    /// Optional symmetry (permutation, angle) for the restricted count.
    #[serde(default)]
    pub symmetry: Option<SymmetryElement>,
    /// Fourier truncation for the symmetry-restricted kernel count.
    #[serde(default = "default_truncation")]
    pub truncation: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumTask {
    /// Configuration to linearize at (taken as exact).
    pub positions: Vec<(f64, f64)>,
    /// Rotation frequency of the frame.
    pub omega: f64,
    #[serde(default)]
    pub symmetry: Option<SymmetryElement>,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobinTask {
    /// Search box corners [[x_lo, y_lo], [x_hi, y_hi]]; defaults to a box
    /// suited to the domain when omitted.
    #[serde(default)]
    pub search_box: Option<[[f64; 2]; 2]>,
    /// Seeds per axis for the Newton searches.
    #[serde(default = "default_grid")]
    pub grid: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicTask {
    /// Scaling parameter r > 0 of the loop problem.
    pub r: f64,
    /// Concentration center a₀ (a critical point of the Robin function).
    pub center: (f64, f64),
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default)]
    pub symmetry: Option<SymmetryElement>,
    #[serde(default)]
    pub newton: NewtonOptions,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationTask {
    /// Branch start r > 0.
    pub r_start: f64,
    /// Branch target (either side of r_start).
    pub r_target: f64,
    /// Concentration center a₀.
    pub center: (f64, f64),
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default)]
    pub symmetry: Option<SymmetryElement>,
    #[serde(default)]
    pub step: StepConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeTask {
    /// Radius of the circle on which the Brouwer index of ∇h is computed.
    pub r: f64,
    /// Concentration center a₀.
    pub center: (f64, f64),
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default)]
    pub symmetry: Option<SymmetryElement>,
}

fn default_truncation() -> usize {
    8
}

fn default_grid() -> usize {
    24
}

/// The complete experiment description. Task sections are optional; a command
/// errors if its section is missing.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub domain: DomainModel,
    #[serde(default)]
    pub integration: Option<IntegrationTask>,
    #[serde(default)]
    pub equilibrium: Option<EquilibriumTask>,
    #[serde(default)]
    pub spectrum: Option<SpectrumTask>,
    #[serde(default)]
    pub robin: Option<RobinTask>,
    #[serde(default)]
    pub periodic: Option<PeriodicTask>,
    #[serde(default)]
    pub continuation: Option<ContinuationTask>,
    #[serde(default)]
    pub degree: Option<DegreeTask>,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            VortexError::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| VortexError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.system.n != self.system.strengths.len() {
            return Err(VortexError::Config(format!(
                "system.n = {} but {} strengths given",
                self.system.n,
                self.system.strengths.len()
            )));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 {
                Ok(())
            } else {
                Err(VortexError::Config(format!("{name} must be positive, got {v}")))
            }
        };
        if let Some(t) = &self.integration {
            positive("integration.integrator.abs_tol", t.integrator.abs_tol)?;
            positive("integration.integrator.rel_tol", t.integrator.rel_tol)?;
            positive("integration.integrator.max_step", t.integrator.max_step)?;
            if t.initial_positions.len() != self.system.n {
                return Err(VortexError::Config(
                    "integration.initial_positions length must equal system.n".into(),
                ));
            }
        }
        if let Some(t) = &self.equilibrium {
            if t.initial_positions.len() != self.system.n {
                return Err(VortexError::Config(
                    "equilibrium.initial_positions length must equal system.n".into(),
                ));
            }
            positive("equilibrium.truncation", t.truncation as f64)?;
        }
        if let Some(t) = &self.spectrum {
            if t.positions.len() != self.system.n {
                return Err(VortexError::Config(
                    "spectrum.positions length must equal system.n".into(),
                ));
            }
        }
        if let Some(t) = &self.robin {
            if t.grid < 2 {
                return Err(VortexError::Config("robin.grid must be at least 2".into()));
            }
            if let Some([[x0, y0], [x1, y1]]) = t.search_box {
                if !(x0 < x1 && y0 < y1) {
                    return Err(VortexError::Config(
                        "robin.search_box corners must satisfy lo < hi per axis".into(),
                    ));
                }
            }
        }
        if let Some(t) = &self.periodic {
            positive("periodic.r", t.r)?;
            positive("periodic.newton.tolerance", t.newton.tolerance)?;
        }
        if let Some(t) = &self.continuation {
            positive("continuation.r_start", t.r_start)?;
            positive("continuation.r_target", t.r_target)?;
            positive("continuation.step.initial_step", t.step.initial_step)?;
            positive("continuation.step.min_step", t.step.min_step)?;
            positive("continuation.step.max_step", t.step.max_step)?;
            positive("continuation.step.newton.tolerance", t.step.newton.tolerance)?;
        }
        if let Some(t) = &self.degree {
            positive("degree.r", t.r)?;
        }
        Ok(())
    }

    pub fn system(&self) -> Result<VortexSystem> {
        VortexSystem::in_domain(self.system.strengths.clone(), self.domain.clone())
    }
}

/// Reference text for --help: every config key with units and defaults.
pub const CONFIG_REFERENCE: &str = r#"CONFIG FILE KEYS (JSON; unknown keys are rejected)

  system.n                         number of vortices (dimensionless)
  system.strengths                 vortex strengths Γ_k, each nonzero (circulation units)

  domain.kind                      "plane" (default) | "unit_disc" | "half_plane"
                                   the disc has radius 1; the half plane is {y > 0}

  output.directory                 directory for artifacts and the run manifest

  integration.initial_positions   [[x, y]; N] starting configuration (length units)
  integration.t_end                integration horizon, may be negative (time units)
  integration.integrator.method    "dormand_prince54" (default) | "implicit_midpoint"
  integration.integrator.abs_tol   absolute step tolerance (default 1e-12)
  integration.integrator.rel_tol   relative step tolerance (default 1e-10)
  integration.integrator.max_step  step ceiling / fixed midpoint step (default 0.1, time units)
  integration.integrator.collision_floor
                                   min pair distance before aborting (default 1e-12)

  equilibrium.initial_positions   [[x, y]; N] Newton initial guess
  equilibrium.normalization        {"fix_omega": ω} or {"fix_scale": s}
  equilibrium.symmetry             optional {"sigma": [perm], "theta": angle (rad)}
  equilibrium.truncation           Fourier modes for the restricted count (default 8)

  spectrum.positions               [[x, y]; N] configuration to linearize at
  spectrum.omega                   frame rotation frequency (1/time)
  spectrum.symmetry                optional symmetry, as above
  spectrum.truncation              Fourier modes (default 8)

  robin.search_box                 [[x_lo, y_lo], [x_hi, y_hi]] (default fits the domain)
  robin.grid                       Newton seeds per axis (default 24)

  periodic.r                       scaling parameter r > 0 (dimensionless)
  periodic.center                  [x, y] concentration center a₀
  periodic.truncation              Fourier modes (default 8)
  periodic.symmetry                optional symmetry, as above
  periodic.newton.max_iterations   corrector iteration cap (default 50)
  periodic.newton.tolerance        residual tolerance in the loop norm (default 1e-10)
  periodic.newton.pin_translations pin the translation means (default false; forced on the plane)
  periodic.newton.max_step         Newton step-length cap (default 10)

  continuation.r_start             seed value of r > 0
  continuation.r_target            target value of r > 0 (either side of r_start)
  continuation.center              [x, y] concentration center a₀
  continuation.truncation          Fourier modes (default 8)
  continuation.symmetry            optional symmetry, as above
  continuation.step.initial_step   first step in r (default 0.002)
  continuation.step.min_step       smallest step before giving up (default 1e-8)
  continuation.step.max_step       step ceiling (default 0.02)
  continuation.step.max_points     accepted-point budget (default 400)
  continuation.step.max_halvings   corrector retries per step (default 12)
  continuation.step.boundary_margin_factor
                                   stop when margins < factor × domain scale (default 1e-3)
  continuation.step.norm_cap       stop when the loop norm exceeds this (default 1e3)
  continuation.step.r_cap          stop when r exceeds this (default 1e2)
  continuation.step.locality_delta seed acceptance radius (default 0.1·|Z|)
  continuation.step.pseudo_arclength
                                   continue in arclength instead of r (default false)
  continuation.step.newton.*       corrector options, as under periodic.newton

  degree.r                         Brouwer-index circle radius (length units)
  degree.center                    [x, y] concentration center a₀
  degree.truncation                Fourier modes for the slice Jacobian (default 8)
  degree.symmetry                  optional symmetry, as above

ENVIRONMENT
  VORTEX_OUTPUT_DIR                overrides output.directory (the only env knob)
"#;

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        r#"{
            "system": { "n": 2, "strengths": [1.0, 1.0] },
            "domain": { "kind": "unit_disc" },
            "output": { "directory": "/tmp/out" }
        }"#
        .to_string()
    }

    #[test]
    fn minimal_config_parses() {
        let cfg: ExperimentConfig = serde_json::from_str(&minimal()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.system.n, 2);
        assert!(matches!(cfg.domain, DomainModel::UnitDisc));
        assert!(cfg.integration.is_none());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = minimal().replace(
            "\"system\"",
            "\"speling_mistake\": 1, \"system\"",
        );
        assert!(serde_json::from_str::<ExperimentConfig>(&text).is_err());
        // also inside nested sections
        let nested = r#"{
            "system": { "n": 1, "strengths": [1.0], "extra": true },
            "output": { "directory": "/tmp/out" }
        }"#;
        assert!(serde_json::from_str::<ExperimentConfig>(nested).is_err());
    }

    #[test]
    fn strength_count_mismatch_rejected() {
        let text = minimal().replace("\"n\": 2", "\"n\": 3");
        let cfg: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert!(matches!(cfg.validate(), Err(VortexError::Config(_))));
    }

    #[test]
    fn nonpositive_tolerances_rejected() {
        let text = r#"{
            "system": { "n": 2, "strengths": [1.0, 1.0] },
            "domain": { "kind": "unit_disc" },
            "periodic": { "r": 0.02, "center": [0.0, 0.0],
                          "newton": { "tolerance": -1e-10 } },
            "output": { "directory": "/tmp/out" }
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert!(matches!(cfg.validate(), Err(VortexError::Config(_))));
    }

    #[test]
    fn reference_covers_every_section() {
        for key in [
            "system.n",
            "domain.kind",
            "output.directory",
            "integration.t_end",
            "equilibrium.normalization",
            "spectrum.omega",
            "robin.grid",
            "periodic.r",
            "continuation.r_start",
            "degree.r",
            "VORTEX_OUTPUT_DIR",
        ] {
            assert!(CONFIG_REFERENCE.contains(key), "missing {key}");
        }
    }
}
