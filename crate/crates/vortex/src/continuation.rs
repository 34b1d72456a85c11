//! Numerical continuation of the branch of 2π-periodic loop solutions in the
//! scaling parameter r, seeded at a relative equilibrium of the free problem.
//!
//! A branch point (r, u) reconstructs to a solution of the original system by
//! z(t) = â₀ + r·u(t/r²), with period 2πr². The tracer is a secant
//! predictor / Newton corrector in r with adaptive step halving; termination
//! is classified by which admissibility margin gave out, mirroring the
//! trichotomy satisfied by the exact branch (escape to infinity, approach to
//! the boundary of the collision-free configuration space, or return to the
//! singular limit r → 0).

use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::equilibria::RelativeEquilibrium;
use crate::error::{Result, VortexError};
use crate::loopspace::{
    newton_periodic, orbit_distance, phi_gradient, phi_jacobian, FourierLoop, NewtonOptions,
    PhaseCondition, SymmetrySubspace,
};
use crate::model::{Configuration, VortexSystem};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchDiagnostics {
    /// ‖Φ_r(u)‖_X at acceptance.
    pub residual: f64,
    /// min over the period of the pairwise distance of â₀ + r·u(t).
    pub min_pair_distance: f64,
    /// min over the period and vortices of the distance to ∂Ω.
    pub min_boundary_distance: f64,
    /// ‖r·P_D u‖, the L² norm of the scaled translation mean.
    pub translation_norm: f64,
    /// L² distance of the mean-free part u − P_D u to the seed orbit S¹*Z.
    pub orbit_distance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchPoint {
    pub r: f64,
    pub u: FourierLoop,
    pub diagnostics: BranchDiagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    ReachedTarget,
    Unbounded,
    BoundaryApproach,
    SingularLimitAnomaly,
    SolverFailure { detail: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
    /// Indices where the continuation direction in r reversed (pseudo-arclength only).
    pub fold_indices: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepConfig {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_points: usize,
    pub max_halvings: usize,
    /// BoundaryApproach fires when an admissibility margin drops below this
    /// fraction of the domain length scale.
    pub boundary_margin_factor: f64,
    /// Unbounded fires when ‖u‖_X exceeds this cap,
    pub norm_cap: f64,
    /// or when r exceeds this cap.
    pub r_cap: f64,
    /// Seed locality: reject seeds whose corrected orbit distance to S¹*Z
    /// exceeds this; default 0.1·‖Z‖_{L²}.
    pub locality_delta: Option<f64>,
    /// Pass folds by continuing in arclength instead of r.
    pub pseudo_arclength: bool,
    pub newton: NewtonOptions,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            initial_step: 2e-3,
            min_step: 1e-8,
            max_step: 2e-2,
            max_points: 400,
            max_halvings: 12,
            boundary_margin_factor: 1e-3,
            norm_cap: 1e3,
            r_cap: 1e2,
            locality_delta: None,
            pseudo_arclength: false,
            newton: NewtonOptions::default(),
        }
    }
}

/// A validated branch seed: the corrected point plus the reference orbit all
/// later diagnostics are measured against.
#[derive(Clone, Debug)]
pub struct Seed {
    pub point: BranchPoint,
    pub z_ref: FourierLoop,
}

fn scaled_config(a0: Vector2<f64>, r: f64, z: &Configuration) -> Configuration {
    let mut out = r * &z.z;
    for j in 0..z.n() {
        out[2 * j] += a0[0];
        out[2 * j + 1] += a0[1];
    }
    Configuration::new(out)
}

fn point_diagnostics(
    sys: &VortexSystem,
    a0: Vector2<f64>,
    r: f64,
    u: &FourierLoop,
    residual: f64,
    z_ref: &FourierLoop,
) -> BranchDiagnostics {
    let mut min_pair = f64::INFINITY;
    let mut min_bdry = f64::INFINITY;
    for z in u.evaluate_nodes() {
        let scaled = scaled_config(a0, r, &z);
        min_pair = min_pair.min(scaled.min_pair_distance());
        for j in 0..scaled.n() {
            min_bdry = min_bdry.min(sys.domain.boundary_distance(scaled.point(j)));
        }
    }
    let mean = u.mean_translation();
    let n = u.n_vortices() as f64;
    let translation_norm = r * (2.0 * std::f64::consts::PI * n).sqrt() * mean.norm();
    let mut free = u.clone();
    let mut a = free.coeff(0);
    for j in 0..u.n_vortices() {
        a[2 * j] -= mean[0];
        a[2 * j + 1] -= mean[1];
    }
    free.set_coeff(0, &a);
    let (dist, _) = orbit_distance(&free, z_ref);
    BranchDiagnostics {
        residual,
        min_pair_distance: min_pair,
        min_boundary_distance: min_bdry,
        translation_norm,
        orbit_distance: dist,
    }
}

fn newton_opts_for(sys: &VortexSystem, cfg: &StepConfig) -> NewtonOptions {
    let mut opts = cfg.newton.clone();
    // the whole-plane problem keeps its translation invariance at every r
    opts.pin_translations = matches!(sys.domain, crate::domains::DomainModel::Plane);
    opts
}

/// Correct the initial guess u = Z at r_start and validate locality. The seed
/// carries Z as the reference orbit for all later diagnostics.
pub fn seed_branch(
    sys: &VortexSystem,
    a0: Vector2<f64>,
    eq: &RelativeEquilibrium,
    n: usize,
    r_start: f64,
    subspace: Option<&SymmetrySubspace>,
    cfg: &StepConfig,
) -> Result<Seed> {
    if sys.total_vorticity().abs() < 1e-12 {
        return Err(VortexError::SeedRejected {
            reason: "total vorticity vanishes; the scaling limit needs ΣΓ ≠ 0".into(),
        });
    }
    if !(r_start > 0.0) {
        return Err(VortexError::SeedRejected {
            reason: format!("r_start = {r_start} must be positive"),
        });
    }
    if !sys.domain.contains(a0) {
        return Err(VortexError::SeedRejected {
            reason: format!("center ({}, {}) lies outside the domain", a0[0], a0[1]),
        });
    }
    let z_ref = crate::equilibria::normalized_loop(eq, n)?;
    let phase = PhaseCondition::new(z_ref.clone());
    let opts = newton_opts_for(sys, cfg);
    let out = newton_periodic(sys, a0, r_start, &z_ref, &phase, subspace, &opts).map_err(
        |e| VortexError::SeedRejected {
            reason: format!("corrector failed from the equilibrium guess: {e}"),
        },
    )?;
    let delta = cfg
        .locality_delta
        .unwrap_or_else(|| 0.1 * z_ref.l2_norm());
    let (dist, _) = orbit_distance(&out.u, &z_ref);
    if dist > delta {
        return Err(VortexError::SeedRejected {
            reason: format!(
                "corrected point drifted {dist:.3e} from S¹*Z (allowed {delta:.3e}); \
                 the scaling center is likely not balancing the boundary term"
            ),
        });
    }
    let diagnostics = point_diagnostics(sys, a0, r_start, &out.u, out.residual_norm, &z_ref);
    Ok(Seed {
        point: BranchPoint {
            r: r_start,
            u: out.u,
            diagnostics,
        },
        z_ref,
    })
}

enum StepOutcome {
    Accepted(BranchPoint),
    Failed(VortexError),
}

fn correct_at(
    sys: &VortexSystem,
    a0: Vector2<f64>,
    r: f64,
    guess: &FourierLoop,
    prev: &FourierLoop,
    z_ref: &FourierLoop,
    subspace: Option<&SymmetrySubspace>,
    opts: &NewtonOptions,
) -> StepOutcome {
    let phase = PhaseCondition::new(guess.clone());
    match newton_periodic(sys, a0, r, guess, &phase, subspace, opts) {
        Ok(out) => {
            // re-align the S¹ phase with the previous point so that the
            // branch representative stays continuous
            let (_, theta) = orbit_distance(prev, &out.u);
            let aligned = out.u.time_shift(theta);
            let diagnostics = point_diagnostics(sys, a0, r, &aligned, out.residual_norm, z_ref);
            StepOutcome::Accepted(BranchPoint {
                r,
                u: aligned,
                diagnostics,
            })
        }
        Err(e) => StepOutcome::Failed(e),
    }
}

/// Natural-parameter (or optionally pseudo-arclength) trace from the seed
/// toward r_target. Never panics on solver trouble: the failure mode is
/// recorded in the termination field.
pub fn continue_branch(
    sys: &VortexSystem,
    a0: Vector2<f64>,
    seed: &Seed,
    r_target: f64,
    subspace: Option<&SymmetrySubspace>,
    cfg: &StepConfig,
) -> Branch {
    if cfg.pseudo_arclength {
        return continue_arclength(sys, a0, seed, r_target, subspace, cfg);
    }
    let opts = newton_opts_for(sys, cfg);
    let margin_threshold = cfg.boundary_margin_factor * sys.domain.length_scale();
    let mut points = vec![seed.point.clone()];
    let dir = if r_target >= seed.point.r { 1.0 } else { -1.0 };
    let mut step = cfg.initial_step.min((r_target - seed.point.r).abs());
    let mut prev2: Option<BranchPoint> = None;

    let termination = loop {
        let prev = points.last().unwrap().clone();
        if (dir > 0.0 && prev.r >= r_target) || (dir < 0.0 && prev.r <= r_target) {
            break classify_target(&points, seed, dir);
        }
        if points.len() >= cfg.max_points {
            break Termination::SolverFailure {
                detail: format!("point budget ({}) exhausted before target", cfg.max_points),
            };
        }

        let mut halvings = 0;
        let accepted = loop {
            let mut r_next = prev.r + dir * step;
            if (dir > 0.0 && r_next > r_target) || (dir < 0.0 && r_next < r_target) {
                r_next = r_target;
            }
            let guess = match &prev2 {
                Some(p2) if (prev.r - p2.r).abs() > 1e-14 => {
                    let f = (r_next - prev.r) / (prev.r - p2.r);
                    let mut g = prev.u.clone();
                    let mut d = prev.u.as_packed().clone();
                    d -= p2.u.as_packed();
                    g = FourierLoop::from_packed(
                        g.truncation(),
                        g.n_vortices(),
                        g.as_packed() + f * d,
                    );
                    g
                }
                _ => prev.u.clone(),
            };
            match correct_at(sys, a0, r_next, &guess, &prev.u, &seed.z_ref, subspace, &opts) {
                StepOutcome::Accepted(pt) => break Ok(pt),
                StepOutcome::Failed(e) => {
                    halvings += 1;
                    step *= 0.5;
                    if halvings > cfg.max_halvings || step < cfg.min_step {
                        break Err(e);
                    }
                }
            }
        };

        match accepted {
            Ok(pt) => {
                let margin = pt
                    .diagnostics
                    .min_boundary_distance
                    .min(pt.diagnostics.min_pair_distance);
                let out_of_bounds =
                    pt.u.h1_norm() > cfg.norm_cap || pt.r > cfg.r_cap;
                prev2 = Some(prev);
                points.push(pt);
                if points.last().unwrap().r == r_target
                    || (dir > 0.0 && points.last().unwrap().r >= r_target)
                    || (dir < 0.0 && points.last().unwrap().r <= r_target)
                {
                    break classify_target(&points, seed, dir);
                }
                if margin < margin_threshold {
                    break Termination::BoundaryApproach;
                }
                if out_of_bounds {
                    break Termination::Unbounded;
                }
                step = (step * 1.4).min(cfg.max_step);
            }
            Err(e) => {
                break Termination::SolverFailure {
                    detail: format!("corrector failed at r ≈ {:.6e}: {e}", prev.r),
                }
            }
        }
    };

    Branch {
        points,
        termination,
        fold_indices: Vec::new(),
    }
}

/// A finished downward run is only a clean ReachedTarget when the singular
/// limit quantities actually decayed; otherwise the branch contradicts the
/// limit behavior and that is worth surfacing.
fn classify_target(points: &[BranchPoint], seed: &Seed, dir: f64) -> Termination {
    if dir < 0.0 && points.last().unwrap().r <= 0.25 * seed.point.r {
        let first = &points.first().unwrap().diagnostics;
        let last = &points.last().unwrap().diagnostics;
        let floor = 1e-12;
        let orbit_ok = last.orbit_distance <= first.orbit_distance.max(floor);
        let trans_ok = last.translation_norm <= first.translation_norm.max(floor);
        if !(orbit_ok && trans_ok) {
            return Termination::SingularLimitAnomaly;
        }
    }
    Termination::ReachedTarget
}

/// ∂Φ_r/∂r by central differences; only used to steer the arclength
/// corrector, which still converges on the exact Φ.
fn dphi_dr(
    sys: &VortexSystem,
    a0: Vector2<f64>,
    r: f64,
    u: &FourierLoop,
) -> Result<DVector<f64>> {
    let h = 1e-6 * r.max(1e-3);
    let hi = phi_gradient(sys, a0, r + h, u)?;
    let lo = phi_gradient(sys, a0, (r - h).max(r * 0.5), u)?;
    let denom = (r + h) - (r - h).max(r * 0.5);
    Ok((hi.as_packed() - lo.as_packed()) / denom)
}

fn continue_arclength(
    sys: &VortexSystem,
    a0: Vector2<f64>,
    seed: &Seed,
    r_target: f64,
    subspace: Option<&SymmetrySubspace>,
    cfg: &StepConfig,
) -> Branch {
    let opts = newton_opts_for(sys, cfg);
    let margin_threshold = cfg.boundary_margin_factor * sys.domain.length_scale();
    let mut points = vec![seed.point.clone()];
    let mut fold_indices = Vec::new();
    let dir0 = if r_target >= seed.point.r { 1.0 } else { -1.0 };
    let dim = seed.point.u.dim();
    let n = seed.point.u.truncation();
    let nv = seed.point.u.n_vortices();
    // initial tangent: pure r direction
    let mut tangent_u = DVector::zeros(dim);
    let mut tangent_r = dir0;
    let mut ds = cfg.initial_step;

    let termination = loop {
        let prev = points.last().unwrap().clone();
        if (dir0 > 0.0 && prev.r >= r_target) || (dir0 < 0.0 && prev.r <= r_target) {
            break classify_target(&points, seed, dir0);
        }
        if points.len() >= cfg.max_points {
            break Termination::SolverFailure {
                detail: format!("point budget ({}) exhausted before target", cfg.max_points),
            };
        }

        let mut halvings = 0;
        let accepted = loop {
            let u_pred = FourierLoop::from_packed(n, nv, prev.u.as_packed() + ds * &tangent_u);
            let r_pred = (prev.r + ds * tangent_r).max(cfg.min_step);
            let crosses_target = (dir0 > 0.0 && r_pred >= r_target)
                || (dir0 < 0.0 && r_pred <= r_target);
            let result = if crosses_target {
                // land exactly on the target with a fixed-r corrector
                match correct_at(
                    sys, a0, r_target, &u_pred, &prev.u, &seed.z_ref, subspace, &opts,
                ) {
                    StepOutcome::Accepted(pt) => Ok(pt),
                    StepOutcome::Failed(e) => Err(e),
                }
            } else {
                arclength_correct(
                    sys, a0, &u_pred, r_pred, &tangent_u, tangent_r, subspace, &opts,
                )
                .map(|(u_new, r_new, residual)| {
                    let (_, theta) = orbit_distance(&prev.u, &u_new);
                    let aligned = u_new.time_shift(theta);
                    let diagnostics =
                        point_diagnostics(sys, a0, r_new, &aligned, residual, &seed.z_ref);
                    BranchPoint {
                        r: r_new,
                        u: aligned,
                        diagnostics,
                    }
                })
            };
            match result {
                Ok(pt) => break Ok(pt),
                Err(e) => {
                    halvings += 1;
                    ds *= 0.5;
                    if halvings > cfg.max_halvings || ds < cfg.min_step {
                        break Err(e);
                    }
                }
            }
        };

        match accepted {
            Ok(pt) => {
                let dr = pt.r - prev.r;
                if dr * tangent_r < 0.0 && tangent_r != 0.0 {
                    fold_indices.push(points.len());
                }
                // secant tangent for the next prediction
                let mut du = pt.u.as_packed().clone();
                du -= prev.u.as_packed();
                let norm = (du.norm_squared() + dr * dr).sqrt();
                if norm > 0.0 {
                    tangent_u = du / norm;
                    tangent_r = dr / norm;
                }
                let margin = pt
                    .diagnostics
                    .min_boundary_distance
                    .min(pt.diagnostics.min_pair_distance);
                let out_of_bounds = pt.u.h1_norm() > cfg.norm_cap || pt.r > cfg.r_cap;
                points.push(pt);
                if (dir0 > 0.0 && points.last().unwrap().r >= r_target)
                    || (dir0 < 0.0 && points.last().unwrap().r <= r_target)
                {
                    break classify_target(&points, seed, dir0);
                }
                if margin < margin_threshold {
                    break Termination::BoundaryApproach;
                }
                if out_of_bounds {
                    break Termination::Unbounded;
                }
                ds = (ds * 1.4).min(cfg.max_step);
            }
            Err(e) => {
                break Termination::SolverFailure {
                    detail: format!("arclength corrector failed near r ≈ {:.6e}: {e}", prev.r),
                }
            }
        }
    };

    Branch {
        points,
        termination,
        fold_indices,
    }
}

/// One Gauss–Newton solve of the augmented system Φ_r(u) = 0, phase(u) = 0,
/// ⟨x − x_pred, tangent⟩ = 0 in the unknowns (u, r).
#[allow(clippy::too_many_arguments)]
fn arclength_correct(
    sys: &VortexSystem,
    a0: Vector2<f64>,
    u_pred: &FourierLoop,
    r_pred: f64,
    tangent_u: &DVector<f64>,
    tangent_r: f64,
    subspace: Option<&SymmetrySubspace>,
    opts: &NewtonOptions,
) -> Result<(FourierLoop, f64, f64)> {
    let n = u_pred.truncation();
    let nv = u_pred.n_vortices();
    let dim = u_pred.dim();
    let phase = PhaseCondition::new(u_pred.clone());
    let mut u = match subspace {
        Some(s) => s.project(u_pred),
        None => u_pred.clone(),
    };
    let mut r = r_pred;
    for _ in 0..opts.max_iterations {
        let residual = phi_gradient(sys, a0, r, &u)?;
        let res_norm = residual.h1_norm();
        let phase_val = phase.value(&u);
        let arc_val = {
            let mut dx = u.as_packed().clone();
            dx -= u_pred.as_packed();
            dx.dot(tangent_u) + (r - r_pred) * tangent_r
        };
        if res_norm <= opts.tolerance && phase_val.abs() <= opts.tolerance {
            return Ok((u, r, res_norm));
        }
        let jac = phi_jacobian(sys, a0, r, &u)?;
        let dr_col = dphi_dr(sys, a0, r, &u)?;
        let rows = dim + 2;
        let mut system = DMatrix::zeros(rows, dim + 1);
        system.view_mut((0, 0), (dim, dim)).copy_from(&jac);
        for i in 0..dim {
            system[(i, dim)] = dr_col[i];
        }
        let phase_row = phase.gradient_row(n, nv);
        for c in 0..dim {
            system[(dim, c)] = phase_row[c];
            system[(dim + 1, c)] = tangent_u[c];
        }
        system[(dim + 1, dim)] = tangent_r;
        let mut rhs = DVector::zeros(rows);
        for i in 0..dim {
            rhs[i] = -residual.as_packed()[i];
        }
        rhs[dim] = -phase_val;
        rhs[dim + 1] = -arc_val;
        let svd = system.svd(true, true);
        let smax = svd.singular_values.max();
        let step = svd
            .solve(&rhs, 1e-14 * smax)
            .map_err(|_| VortexError::SingularJacobian { kernel_dim: 0 })?;
        let mut packed = u.as_packed().clone();
        for i in 0..dim {
            packed[i] += step[i];
        }
        u = FourierLoop::from_packed(n, nv, packed);
        r += step[dim];
        if !(r > 0.0) {
            return Err(VortexError::NoConvergence {
                iterations: 0,
                residual: res_norm,
            });
        }
    }
    Err(VortexError::NoConvergence {
        iterations: opts.max_iterations,
        residual: f64::NAN,
    })
}

impl Branch {
    /// One BranchPoint per line, as JSON.
    pub fn write_jsonl<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for p in &self.points {
            serde_json::to_writer(&mut w, p)?;
            writeln!(w)?;
        }
        Ok(())
    }

    /// Summary table of r and the diagnostics.
    pub fn write_csv_summary<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "r,residual,min_pair_distance,min_boundary_distance,translation_norm,orbit_distance"
        )?;
        for p in &self.points {
            let d = &p.diagnostics;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                p.r,
                d.residual,
                d.min_pair_distance,
                d.min_boundary_distance,
                d.translation_norm,
                d.orbit_distance
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothnessReport {
    /// ‖s(δ) − s(δ/2)‖ / ‖s(δ/2) − s(δ/4)‖ for secant slopes s; ≈ 2 on a C¹ branch.
    pub richardson_ratio: f64,
    /// Largest secant slope norm encountered (a ≈ 0 value means the branch is constant).
    pub slope_scale: f64,
    pub smooth: bool,
    pub detail: String,
}

/// Richardson ratio of secant slopes through loops sampled at r₀, r₀+δ/4,
/// r₀+δ/2, r₀+δ (phase-aligned to the base point first).
pub fn secant_convergence_ratio(
    base: &FourierLoop,
    quarter: &FourierLoop,
    half: &FourierLoop,
    full: &FourierLoop,
    delta: f64,
) -> (f64, f64) {
    let align = |v: &FourierLoop| {
        let (_, theta) = orbit_distance(base, v);
        v.time_shift(theta)
    };
    let slope = |v: &FourierLoop, d: f64| {
        let mut s = align(v).as_packed().clone();
        s -= base.as_packed();
        s / d
    };
    let s1 = slope(full, delta);
    let s2 = slope(half, delta / 2.0);
    let s3 = slope(quarter, delta / 4.0);
    let d12 = (&s1 - &s2).norm();
    let d23 = (&s2 - &s3).norm();
    let scale = s1.norm().max(s2.norm()).max(s3.norm());
    // slope differences at round-off are already converged
    if d12 <= 1e-9 * scale && d23 <= 1e-9 * scale {
        return (2.0, scale);
    }
    if d23 == 0.0 {
        return (f64::INFINITY, scale);
    }
    (d12 / d23, scale)
}

/// C¹ verification of the branch around its midpoint: re-solve at halved
/// offsets and require the secant slopes to converge at first order
/// (Richardson ratio ≈ 2). Constant branches pass trivially; a degenerate
/// scaling center makes the check inapplicable rather than meaningless.
pub fn branch_smoothness_check(
    sys: &VortexSystem,
    a0: Vector2<f64>,
    branch: &Branch,
    subspace: Option<&SymmetrySubspace>,
    cfg: &StepConfig,
) -> Result<SmoothnessReport> {
    if branch.points.len() < 2 {
        return Err(VortexError::NotApplicable {
            reason: "branch has fewer than two points".into(),
        });
    }
    if !matches!(sys.domain, crate::domains::DomainModel::Plane) {
        let hess = sys.domain.robin_hessian(a0);
        let det = hess[(0, 0)] * hess[(1, 1)] - hess[(0, 1)] * hess[(1, 0)];
        if det.abs() <= 1e-10 {
            return Err(VortexError::NotApplicable {
                reason: format!(
                    "scaling center is a degenerate critical point (det h'' = {det:.3e})"
                ),
            });
        }
    }
    let mid = branch.points.len() / 2;
    let base = &branch.points[mid];
    let r_lo = branch.points.first().unwrap().r.min(branch.points.last().unwrap().r);
    let r_hi = branch.points.first().unwrap().r.max(branch.points.last().unwrap().r);
    // the loop family varies on the scale of r itself, so the Richardson
    // offset has to stay well inside that scale for the ratio to settle
    let delta = ((r_hi - base.r).min(base.r - r_lo) * 0.9)
        .min(0.25 * (r_hi - r_lo))
        .min(0.1 * base.r);
    if delta <= 0.0 {
        return Err(VortexError::NotApplicable {
            reason: "branch span too small to sample halved offsets".into(),
        });
    }
    let mut opts = newton_opts_for(sys, cfg);
    // slope differences on a flat branch sit orders of magnitude below the
    // loop norm; the corrector noise has to stay below them
    opts.tolerance = opts.tolerance.min(1e-12);
    let solve_at = |r: f64| -> Result<FourierLoop> {
        let phase = PhaseCondition::new(base.u.clone());
        Ok(newton_periodic(sys, a0, r, &base.u, &phase, subspace, &opts)?.u)
    };
    let u_q = solve_at(base.r + delta / 4.0)?;
    let u_h = solve_at(base.r + delta / 2.0)?;
    let u_f = solve_at(base.r + delta)?;
    let (ratio, scale) = secant_convergence_ratio(&base.u, &u_q, &u_h, &u_f, delta);
    let trivially_constant = scale <= 1e-10;
    let smooth = trivially_constant || (1.8..=2.2).contains(&ratio);
    Ok(SmoothnessReport {
        richardson_ratio: ratio,
        slope_scale: scale,
        smooth,
        detail: if trivially_constant {
            "slopes vanish; branch is constant in r".into()
        } else {
            format!("secant slope differences contract by {ratio:.3} per halving")
        },
    })
}
