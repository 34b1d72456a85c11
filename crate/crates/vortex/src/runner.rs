//! Experiment orchestration behind the CLI: dispatch one command against a
//! parsed config, write the data artifacts, and record a run manifest with
//! the config hash. Data artifacts are deterministic; only the manifest's
//! wall-time field varies between identical reruns.

use nalgebra::Vector2;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::ExperimentConfig;
use crate::continuation::{continue_branch, seed_branch};
use crate::domains::{brouwer_index, find_critical_points, DomainModel};
use crate::dynamics::integrate;
use crate::equilibria::{
    solve_equilibrium, spectral_report, RelativeEquilibrium, SymmetryElement,
};
use crate::error::{Result, VortexError};
use crate::loopspace::{newton_periodic, PhaseCondition, SymmetrySubspace};
use crate::model::{Configuration, VortexSystem};
use crate::s1deg::degree_certificate;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Equilibrium,
    Spectrum,
    Robin,
    SolvePeriodic,
    Continue,
    Degree,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Equilibrium => "equilibrium",
            Command::Spectrum => "spectrum",
            Command::Robin => "robin",
            Command::SolvePeriodic => "solve-periodic",
            Command::Continue => "continue",
            Command::Degree => "degree",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_sha256: String,
    pub package_version: String,
    pub wall_time_ms: u128,
    pub artifacts: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub artifacts: Vec<PathBuf>,
    pub manifest_path: PathBuf,
}

fn require<'a, T>(section: &'a Option<T>, name: &str, command: &str) -> Result<&'a T> {
    section.as_ref().ok_or_else(|| {
        VortexError::Config(format!(
            "the `{command}` command needs the `{name}` section in the config"
        ))
    })
}

fn positions_to_config(pts: &[(f64, f64)]) -> Configuration {
    Configuration::from_points(pts)
}

struct ArtifactWriter {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl ArtifactWriter {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_raw(name, text.as_bytes())
    }

    fn write_raw(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }
}

fn build_subspace(
    sys: &VortexSystem,
    symmetry: &Option<SymmetryElement>,
) -> Result<Option<SymmetrySubspace>> {
    match symmetry {
        Some(g) => {
            let plane = VortexSystem::new(sys.gamma().to_vec())?;
            Ok(Some(SymmetrySubspace::new(&plane, g.clone())?))
        }
        None => Ok(None),
    }
}

fn solve_section_equilibrium(
    cfg: &ExperimentConfig,
    sys: &VortexSystem,
    command: &str,
) -> Result<RelativeEquilibrium> {
    let eq_task = require(&cfg.equilibrium, "equilibrium", command)?;
    solve_equilibrium(
        sys,
        &positions_to_config(&eq_task.initial_positions),
        eq_task.normalization.clone(),
    )
}

/// Run one command against the config at `config_path`. `output_override`
/// replaces the config's output directory (the CLI wires --output-dir and the
/// VORTEX_OUTPUT_DIR variable into it).
pub fn run(
    command: Command,
    config_path: &Path,
    output_override: Option<&Path>,
) -> Result<RunReport> {
    let start = Instant::now();
    let raw = std::fs::read(config_path).map_err(|e| {
        VortexError::Config(format!("cannot read {}: {e}", config_path.display()))
    })?;
    let config_sha256 = hex(&Sha256::digest(&raw));
    let cfg = ExperimentConfig::from_path(config_path)?;
    let out_dir = output_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output.directory.clone());
    let mut w = ArtifactWriter::new(&out_dir)?;
    let sys = cfg.system()?;

    match command {
        Command::Simulate => {
            let task = require(&cfg.integration, "integration", command.name())?;
            let z0 = positions_to_config(&task.initial_positions);
            let traj = integrate(&sys, &z0, task.t_end, &task.integrator)?;
            w.write_raw("trajectory.csv", traj.to_csv().as_bytes())?;
            w.write_raw("trajectory.jsonl", traj.to_json_lines().as_bytes())?;
            #[derive(Serialize)]
            struct Summary<'a> {
                termination: &'a crate::dynamics::Termination,
                drift: &'a crate::dynamics::InvariantDrift,
                samples: usize,
            }
            w.write_json(
                "invariants.json",
                &Summary {
                    termination: &traj.termination,
                    drift: &traj.drift,
                    samples: traj.samples.len(),
                },
            )?;
        }
        Command::Equilibrium => {
            let task = require(&cfg.equilibrium, "equilibrium", command.name())?;
            let eq = solve_section_equilibrium(&cfg, &sys, command.name())?;
            let report = spectral_report(&sys, &eq, task.symmetry.as_ref(), task.truncation)?;
            #[derive(Serialize)]
            struct Out<'a> {
                equilibrium: &'a RelativeEquilibrium,
                spectrum: &'a crate::equilibria::SpectralReport,
            }
            w.write_json(
                "equilibrium.json",
                &Out {
                    equilibrium: &eq,
                    spectrum: &report,
                },
            )?;
        }
        Command::Spectrum => {
            let task = require(&cfg.spectrum, "spectrum", command.name())?;
            let z = positions_to_config(&task.positions);
            let residual =
                crate::equilibria::equilibrium_residual(&sys, &z, task.omega)?.norm();
            let eq = RelativeEquilibrium {
                z,
                omega: task.omega,
                residual_norm: residual,
            };
            let report = spectral_report(&sys, &eq, task.symmetry.as_ref(), task.truncation)?;
            w.write_json("spectrum.json", &report)?;
            let mut csv = String::from("re,im\n");
            for (re, im) in &report.eigenvalues {
                csv.push_str(&format!("{re},{im}\n"));
            }
            w.write_raw("eigenvalues.csv", csv.as_bytes())?;
        }
        Command::Robin => {
            let task = require(&cfg.robin, "robin", command.name())?;
            let search_box = match task.search_box {
                Some([[x0, y0], [x1, y1]]) => {
                    (Vector2::new(x0, y0), Vector2::new(x1, y1))
                }
                None => default_search_box(&cfg.domain)?,
            };
            let points = find_critical_points(&cfg.domain, search_box, task.grid);
            w.write_json("critical_points.json", &points)?;
            let mut csv =
                String::from("x,y,gradient_norm,brouwer_index,stable,nondegenerate\n");
            for p in &points {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    p.location.0,
                    p.location.1,
                    p.gradient_norm,
                    p.brouwer_index,
                    p.stable,
                    p.nondegenerate
                ));
            }
            w.write_raw("critical_points.csv", csv.as_bytes())?;
        }
        Command::SolvePeriodic => {
            let task = require(&cfg.periodic, "periodic", command.name())?;
            let eq = solve_section_equilibrium(&cfg, &sys, command.name())?;
            let z = crate::equilibria::normalized_loop(&eq, task.truncation)?;
            let subspace = build_subspace(&sys, &task.symmetry)?;
            let mut opts = task.newton.clone();
            opts.pin_translations |= matches!(sys.domain, DomainModel::Plane);
            let phase = PhaseCondition::new(z.clone());
            let a0 = Vector2::new(task.center.0, task.center.1);
            let out =
                newton_periodic(&sys, a0, task.r, &z, &phase, subspace.as_ref(), &opts)?;
            #[derive(Serialize)]
            struct Out<'a> {
                r: f64,
                center: (f64, f64),
                iterations: usize,
                residual_norm: f64,
                tail_energy_fraction: f64,
                solution: &'a crate::loopspace::FourierLoop,
            }
            w.write_json(
                "periodic_solution.json",
                &Out {
                    r: task.r,
                    center: task.center,
                    iterations: out.iterations,
                    residual_norm: out.residual_norm,
                    tail_energy_fraction: out.tail_energy_fraction,
                    solution: &out.u,
                },
            )?;
        }
        Command::Continue => {
            let task = require(&cfg.continuation, "continuation", command.name())?;
            let eq = solve_section_equilibrium(&cfg, &sys, command.name())?;
            let subspace = build_subspace(&sys, &task.symmetry)?;
            let a0 = Vector2::new(task.center.0, task.center.1);
            let seed = seed_branch(
                &sys,
                a0,
                &eq,
                task.truncation,
                task.r_start,
                subspace.as_ref(),
                &task.step,
            )?;
            let branch = continue_branch(
                &sys,
                a0,
                &seed,
                task.r_target,
                subspace.as_ref(),
                &task.step,
            );
            let mut jsonl = Vec::new();
            branch.write_jsonl(&mut jsonl)?;
            w.write_raw("branch.jsonl", &jsonl)?;
            let mut csv = Vec::new();
            branch.write_csv_summary(&mut csv)?;
            w.write_raw("branch_summary.csv", &csv)?;
            #[derive(Serialize)]
            struct Out<'a> {
                termination: &'a crate::continuation::Termination,
                fold_indices: &'a [usize],
                points: usize,
            }
            w.write_json(
                "branch.json",
                &Out {
                    termination: &branch.termination,
                    fold_indices: &branch.fold_indices,
                    points: branch.points.len(),
                },
            )?;
        }
        Command::Degree => {
            let task = require(&cfg.degree, "degree", command.name())?;
            let eq = solve_section_equilibrium(&cfg, &sys, command.name())?;
            let subspace = build_subspace(&sys, &task.symmetry)?;
            let a0 = Vector2::new(task.center.0, task.center.1);
            let certificate = degree_certificate(
                &sys,
                a0,
                &eq,
                task.r,
                task.truncation,
                subspace.as_ref(),
            )?;
            let index = brouwer_index(&sys.domain, a0, task.r)?;
            #[derive(Serialize)]
            struct Out {
                certificate: i64,
                brouwer_index: i32,
                orbit_degree_magnitude: u32,
                nonzero: bool,
            }
            w.write_json(
                "degree.json",
                &Out {
                    certificate,
                    brouwer_index: index,
                    orbit_degree_magnitude: 1,
                    nonzero: certificate != 0,
                },
            )?;
        }
    }

    let manifest = RunManifest {
        command: command.name().to_string(),
        config_sha256,
        package_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_ms: start.elapsed().as_millis(),
        artifacts: w
            .written
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect(),
    };
    let manifest_path = out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&manifest_path, text)?;

    Ok(RunReport {
        artifacts: w.written,
        manifest_path,
    })
}

fn default_search_box(dom: &DomainModel) -> Result<(Vector2<f64>, Vector2<f64>)> {
    match dom {
        DomainModel::Plane => Err(VortexError::NotApplicable {
            reason: "the plane has no Robin function to search".into(),
        }),
        DomainModel::UnitDisc => Ok((Vector2::new(-0.95, -0.95), Vector2::new(0.95, 0.95))),
        DomainModel::HalfPlane => Ok((Vector2::new(-3.0, 0.05), Vector2::new(3.0, 3.0))),
        #[cfg(feature = "annulus")]
        DomainModel::Annulus { rho } => {
            let pad = 0.05 * (1.0 - rho);
            Ok((
                Vector2::new(-1.0 + pad, -1.0 + pad),
                Vector2::new(1.0 - pad, 1.0 - pad),
            ))
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("config.json");
        std::fs::write(&path, body).unwrap();
        path
    }

    fn disc_pair_config(out: &Path) -> String {
        format!(
            r#"{{
  "system": {{ "n": 2, "strengths": [1.0, 1.0] }},
  "domain": {{ "kind": "unit_disc" }},
  "equilibrium": {{
    "initial_positions": [[0.4, 0.0], [-0.4, 0.0]],
    "normalization": {{ "fix_omega": 1.0 }}
  }},
  "robin": {{ "grid": 12 }},
  "periodic": {{ "r": 0.05, "center": [0.0, 0.0], "truncation": 6 }},
  "degree": {{ "r": 0.1, "center": [0.0, 0.0], "truncation": 6 }},
  "output": {{ "directory": "{}" }}
}}"#,
            out.display()
        )
    }

    #[test]
    fn equilibrium_command_writes_report_and_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("run");
        let cfg = write_config(tmp.path(), &disc_pair_config(&out));
        let report = run(Command::Equilibrium, &cfg, None).unwrap();
        assert!(report.manifest_path.exists());
        let eq_text = std::fs::read_to_string(out.join("equilibrium.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&eq_text).unwrap();
        assert!(v["spectrum"]["nondegenerate"].as_bool().unwrap());
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&report.manifest_path).unwrap())
                .unwrap();
        assert_eq!(manifest["command"], "equilibrium");
        assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    }

    #[test]
    fn robin_command_finds_the_disc_center() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("run");
        let cfg = write_config(tmp.path(), &disc_pair_config(&out));
        run(Command::Robin, &cfg, None).unwrap();
        let text = std::fs::read_to_string(out.join("critical_points.json")).unwrap();
        let pts: Vec<crate::domains::CriticalPointReport> =
            serde_json::from_str(&text).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].location.0.abs() < 1e-8 && pts[0].location.1.abs() < 1e-8);
        assert_eq!(pts[0].brouwer_index, 1);
    }

    #[test]
    fn degree_command_certifies_the_disc_pair() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("run");
        let cfg = write_config(tmp.path(), &disc_pair_config(&out));
        run(Command::Degree, &cfg, None).unwrap();
        let v: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(out.join("degree.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(v["certificate"], 1);
        assert_eq!(v["nonzero"], true);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let tmp = tempfile::tempdir().unwrap();
        let out1 = tmp.path().join("a");
        let out2 = tmp.path().join("b");
        let cfg = write_config(tmp.path(), &disc_pair_config(&out1));
        run(Command::SolvePeriodic, &cfg, None).unwrap();
        run(Command::SolvePeriodic, &cfg, Some(&out2)).unwrap();
        let a = std::fs::read(out1.join("periodic_solution.json")).unwrap();
        let b = std::fs::read(out2.join("periodic_solution.json")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_section_is_a_config_error() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("run");
        let body = format!(
            r#"{{
  "system": {{ "n": 2, "strengths": [1.0, 1.0] }},
  "domain": {{ "kind": "unit_disc" }},
  "output": {{ "directory": "{}" }}
}}"#,
            out.display()
        );
        let cfg = write_config(tmp.path(), &body);
        let err = run(Command::Simulate, &cfg, None).unwrap_err();
        assert!(matches!(err, VortexError::Config(_)));
        assert_eq!(err.exit_class().code(), 2);
    }

    #[test]
    fn simulate_writes_trajectory_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("run");
        let body = format!(
            r#"{{
  "system": {{ "n": 2, "strengths": [1.0, 1.0] }},
  "integration": {{
    "initial_positions": [[0.5, 0.0], [-0.5, 0.0]],
    "t_end": 1.0
  }},
  "output": {{ "directory": "{}" }}
}}"#,
            out.display()
        );
        let cfg = write_config(tmp.path(), &body);
        let report = run(Command::Simulate, &cfg, None).unwrap();
        assert_eq!(report.artifacts.len(), 3);
        let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
        assert!(csv.starts_with("t,x1,y1,x2,y2"));
        let inv: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(out.join("invariants.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(inv["termination"]["kind"], "completed");
    }
}
