//! Time integration of the vortex ODE Γ_k ż_k = J ∇_{z_k} H(z) with
//! conservation monitoring and hard collision stops.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VortexError};
use crate::model::{Configuration, VortexSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorMethod {
    /// Adaptive Dormand-Prince 5(4) embedded pair.
    DormandPrince54,
    /// Fixed-step implicit midpoint (symplectic for the constant Poisson
    /// structure; exactly conserves Q and I, keeps H bounded).
    ImplicitMidpoint,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub method: IntegratorMethod,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Step-size ceiling; also the fixed step of the implicit midpoint rule.
    pub max_step: f64,
    pub collision_floor: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: IntegratorMethod::DormandPrince54,
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_step: 0.1,
            collision_floor: 1e-12,
        }
    }
}

/// Why the integration stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    /// Min pair distance fell below the floor; the trajectory is partial.
    CollisionEvent { t: f64, distance: f64 },
    /// Step size underflowed (or the field became unevaluable).
    BlowupEvent { t: f64 },
}

/// Max drift of the first integrals relative to max(|initial|, 1).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvariantDrift {
    pub energy: f64,
    /// Center of vorticity Q = Σ Γ_k z_k; whole plane only.
    pub center: Option<f64>,
    /// Angular impulse I = Σ Γ_k |z_k|²; whole plane only.
    pub impulse: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<(f64, Configuration)>,
    pub termination: Termination,
    pub drift: InvariantDrift,
}

impl Trajectory {
    pub fn final_state(&self) -> &Configuration {
        &self.samples.last().expect("trajectory is never empty").1
    }

    /// CSV with columns t, x_1, y_1, …, x_N, y_N.
    pub fn to_csv(&self) -> String {
        let n = self.samples[0].1.n();
        let mut out = String::from("t");
        for k in 1..=n {
            out.push_str(&format!(",x{k},y{k}"));
        }
        out.push('\n');
        for (t, z) in &self.samples {
            out.push_str(&format!("{t:.12e}"));
            for v in z.z.iter() {
                out.push_str(&format!(",{v:.12e}"));
            }
            out.push('\n');
        }
        out
    }

    /// One JSON object per line: {"t": …, "z": [[x,y],…]}.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for (t, z) in &self.samples {
            out.push_str(&serde_json::json!({ "t": t, "z": z }).to_string());
            out.push('\n');
        }
        out
    }
}

/// Integrate from `z0` over `[0, t_end]` (or backwards if `t_end < 0`).
pub fn integrate(
    sys: &VortexSystem,
    z0: &Configuration,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if z0.n() != sys.n() {
        return Err(VortexError::DimensionMismatch {
            expected: sys.n(),
            got: z0.n(),
        });
    }
    let mut floor_sys = sys.clone();
    floor_sys.collision_floor = cfg.collision_floor.min(sys.collision_floor);
    // fail fast on an inadmissible start
    floor_sys.domain_energy(z0)?;

    let mut samples = vec![(0.0, z0.clone())];
    let termination = match cfg.method {
        IntegratorMethod::DormandPrince54 => dp54(&floor_sys, t_end, cfg, &mut samples),
        IntegratorMethod::ImplicitMidpoint => midpoint(&floor_sys, t_end, cfg, &mut samples),
    };
    let drift = drift_of_samples(sys, &samples)?;
    Ok(Trajectory {
        samples,
        termination,
        drift,
    })
}

/// Recompute the drift report of an existing trajectory.
pub fn invariant_drift(sys: &VortexSystem, traj: &Trajectory) -> Result<InvariantDrift> {
    drift_of_samples(sys, &traj.samples)
}

fn drift_of_samples(
    sys: &VortexSystem,
    samples: &[(f64, Configuration)],
) -> Result<InvariantDrift> {
    let plane = matches!(sys.domain, crate::domains::DomainModel::Plane);
    let z0 = &samples[0].1;
    let e0 = sys.domain_energy(z0)?.value;
    let q0 = sys.center_of_vorticity(z0);
    let i0 = sys.angular_impulse(z0);
    let rel = |d: f64, base: f64| d / base.abs().max(1.0);
    let mut energy: f64 = 0.0;
    let mut center: f64 = 0.0;
    let mut impulse: f64 = 0.0;
    for (_, z) in samples.iter().skip(1) {
        energy = energy.max(rel((sys.domain_energy(z)?.value - e0).abs(), e0));
        if plane {
            center = center.max(rel((sys.center_of_vorticity(z) - q0).norm(), q0.norm()));
            impulse = impulse.max(rel((sys.angular_impulse(z) - i0).abs(), i0));
        }
    }
    Ok(InvariantDrift {
        energy,
        center: plane.then_some(center),
        impulse: plane.then_some(impulse),
    })
}

fn min_pair_distance(z: &Configuration) -> f64 {
    z.min_pair_distance()
}

// Dormand-Prince 5(4) tableau (the field is autonomous, so no c column).
const DP_A: [&[f64]; 6] = [
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
    &[
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dp54(
    sys: &VortexSystem,
    t_end: f64,
    cfg: &IntegratorConfig,
    samples: &mut Vec<(f64, Configuration)>,
) -> Termination {
    let dir = t_end.signum();
    let span = t_end.abs();
    let mut t = 0.0_f64;
    let mut y = samples[0].1.clone();
    let mut h = (span / 100.0).min(cfg.max_step).max(1e-10);
    let h_floor = span * 1e-15;

    let field = |z: &Configuration| sys.vector_field(z, 0.0);

    while t < span {
        h = h.min(span - t).min(cfg.max_step);
        let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
        let k1 = match field(&y) {
            Ok(v) => v,
            Err(_) => return Termination::BlowupEvent { t: dir * t },
        };
        k.push(k1);
        let mut failed_eval = false;
        for i in 0..6 {
            let mut yi = y.z.clone();
            for (j, aij) in DP_A[i].iter().enumerate() {
                yi += dir * h * *aij * &k[j];
            }
            match field(&Configuration::new(yi)) {
                Ok(v) => k.push(v),
                Err(_) => {
                    failed_eval = true;
                    break;
                }
            }
        }
        if failed_eval {
            h *= 0.5;
            if h < h_floor {
                return Termination::BlowupEvent { t: dir * t };
            }
            continue;
        }
        // 5th-order solution is the a7 row (k[6] evaluated there already)
        let mut y5 = y.z.clone();
        for (j, bj) in DP_A[5].iter().enumerate() {
            y5 += dir * h * *bj * &k[j];
        }
        let mut y4 = y.z.clone();
        for (j, bj) in DP_B4.iter().enumerate() {
            y4 += dir * h * *bj * &k[j];
        }
        let mut err: f64 = 0.0;
        for i in 0..y.z.len() {
            let scale = cfg.abs_tol + cfg.rel_tol * y.z[i].abs().max(y5[i].abs());
            err += ((y5[i] - y4[i]) / scale).powi(2);
        }
        err = (err / y.z.len() as f64).sqrt();
        if !err.is_finite() {
            h *= 0.5;
            if h < h_floor {
                return Termination::BlowupEvent { t: dir * t };
            }
            continue;
        }

        if err <= 1.0 {
            t += h;
            y = Configuration::new(y5);
            samples.push((dir * t, y.clone()));
            let d = min_pair_distance(&y);
            if d < cfg.collision_floor {
                return Termination::CollisionEvent {
                    t: dir * t,
                    distance: d,
                };
            }
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
        if h < h_floor {
            return Termination::BlowupEvent { t: dir * t };
        }
    }
    Termination::Completed
}

fn midpoint(
    sys: &VortexSystem,
    t_end: f64,
    cfg: &IntegratorConfig,
    samples: &mut Vec<(f64, Configuration)>,
) -> Termination {
    let dir = t_end.signum();
    let span = t_end.abs();
    let h = cfg.max_step.min(span);
    let steps = (span / h).ceil() as usize;
    let h = span / steps as f64;
    let mut y = samples[0].1.clone();

    for step in 0..steps {
        let t = step as f64 * h;
        // Newton on G(w) = w − y − h f((y + w)/2) with the analytic Jacobian
        let mut w = y.z.clone();
        if let Ok(f0) = sys.vector_field(&y, 0.0) {
            w += dir * h * f0;
        } else {
            return Termination::BlowupEvent { t: dir * t };
        }
        let mut converged = false;
        for _ in 0..30 {
            let mid = Configuration::new((&y.z + &w) * 0.5);
            let (f, hess) = match sys.domain_energy(&mid) {
                Ok(rep) => {
                    let f = crate::model::j_n(&sys.m_gamma_inv_apply(&rep.gradient));
                    (f, rep.hessian.unwrap())
                }
                Err(_) => return Termination::BlowupEvent { t: dir * t },
            };
            let g = &w - &y.z - dir * h * &f;
            if g.norm() <= 1e-13 * (1.0 + w.norm()) {
                converged = true;
                break;
            }
            // dG/dw = I − (h/2) J_N M_Γ^{-1} H''(mid)
            let n2 = w.len();
            let mut jac = DMatrixOwned::identity(n2, n2);
            let df = jn_mgamma_inv(sys, &hess);
            jac -= dir * h * 0.5 * df;
            match jac.lu().solve(&g) {
                Some(dw) => w -= dw,
                None => return Termination::BlowupEvent { t: dir * t },
            }
        }
        if !converged {
            return Termination::BlowupEvent { t: dir * t };
        }
        y = Configuration::new(w);
        samples.push((dir * (t + h), y.clone()));
        let d = min_pair_distance(&y);
        if d < cfg.collision_floor {
            return Termination::CollisionEvent {
                t: dir * (t + h),
                distance: d,
            };
        }
    }
    Termination::Completed
}

type DMatrixOwned = nalgebra::DMatrix<f64>;

/// J_N M_Γ^{-1} H'' as a dense matrix.
fn jn_mgamma_inv(sys: &VortexSystem, hess: &DMatrixOwned) -> DMatrixOwned {
    let n = sys.n();
    let mut out = DMatrixOwned::zeros(2 * n, 2 * n);
    for col in 0..2 * n {
        for j in 0..n {
            let a = hess[(2 * j, col)] / sys.gamma()[j];
            let b = hess[(2 * j + 1, col)] / sys.gamma()[j];
            out[(2 * j, col)] = b;
            out[(2 * j + 1, col)] = -a;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn pair(s: f64) -> (VortexSystem, Configuration) {
        (
            VortexSystem::new(vec![1.0, 1.0]).unwrap(),
            Configuration::from_points(&[(s / 2.0, 0.0), (-s / 2.0, 0.0)]),
        )
    }

    #[test]
    fn pair_returns_after_one_period() {
        // frequency ω = Γ/(πs²), period 2π/ω
        let s = 1.0;
        let (sys, z0) = pair(s);
        let omega = 2.0 / (PI * s * s);
        let t_end = 2.0 * PI / omega;
        let traj = integrate(&sys, &z0, t_end, &IntegratorConfig::default()).unwrap();
        assert_eq!(traj.termination, Termination::Completed);
        let err = (&traj.final_state().z - &z0.z).norm();
        assert!(err <= 1e-6, "orbit closure error {err}");
    }

    #[test]
    fn single_vortex_is_stationary() {
        let sys = VortexSystem::new(vec![1.5]).unwrap();
        let z0 = Configuration::from_points(&[(0.3, -0.4)]);
        let traj = integrate(&sys, &z0, 5.0, &IntegratorConfig::default()).unwrap();
        for (_, z) in &traj.samples {
            assert_eq!(z.z, z0.z);
        }
    }

    #[test]
    fn thomson_pentagon_rotates_rigidly() {
        let n = 5;
        let sys = VortexSystem::new(vec![1.0; n]).unwrap();
        let points: Vec<(f64, f64)> = (0..n)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / n as f64;
                (t.cos(), t.sin())
            })
            .collect();
        let z0 = Configuration::from_points(&points);
        let omega = (n as f64 - 1.0) / (2.0 * PI);
        let t_end = 2.0 * PI / omega;
        let traj = integrate(&sys, &z0, t_end, &IntegratorConfig::default()).unwrap();
        let err = (&traj.final_state().z - &z0.z).norm();
        assert!(err <= 1e-6, "orbit closure error {err}");
        // halfway through, the pentagon should be rotated by π (ccw)
        let half = traj
            .samples
            .iter()
            .min_by(|a, b| {
                (a.0 - t_end / 2.0).abs().total_cmp(&(b.0 - t_end / 2.0).abs())
            })
            .unwrap();
        let rotated = crate::model::apply_blockwise(
            &crate::model::rot_ccw(omega * half.0),
            &z0.z,
        );
        assert!((&half.1.z - &rotated).norm() <= 1e-5);
    }

    #[test]
    fn drift_small_on_pair_over_ten_periods() {
        let s = 2.0;
        let (sys, z0) = pair(s);
        let omega = 2.0 / (PI * s * s);
        let t_end = 10.0 * 2.0 * PI / omega;
        let traj = integrate(&sys, &z0, t_end, &IntegratorConfig::default()).unwrap();
        assert!(traj.drift.energy <= 1e-8, "energy drift {}", traj.drift.energy);
        assert!(traj.drift.center.unwrap() <= 1e-8);
        assert!(traj.drift.impulse.unwrap() <= 1e-8);
    }

    #[test]
    fn collision_stops_integration() {
        // opposite strengths translate; equal strengths at tiny distance spiral
        // fast — force a collision with a merging pair instead: two vortices
        // with Γ=(1,1) never collide, so use the floor to trip on a close pass
        let sys = VortexSystem::new(vec![1.0, 1.0]).unwrap();
        let z0 = Configuration::from_points(&[(0.5, 0.0), (-0.5, 0.0)]);
        let cfg = IntegratorConfig {
            collision_floor: 1.5, // artificially high: any state "collides"
            ..Default::default()
        };
        let traj = integrate(&sys, &z0, 10.0, &cfg).unwrap();
        assert!(matches!(traj.termination, Termination::CollisionEvent { .. }));
        assert!(traj.samples.len() >= 2);
    }

    #[test]
    fn constant_trajectory_has_zero_drift() {
        let sys = VortexSystem::new(vec![2.0]).unwrap();
        let z0 = Configuration::from_points(&[(0.1, 0.2)]);
        let traj = integrate(&sys, &z0, 1.0, &IntegratorConfig::default()).unwrap();
        let drift = invariant_drift(&sys, &traj).unwrap();
        assert_eq!(drift.energy, 0.0);
        assert_eq!(drift.center.unwrap(), 0.0);
        assert_eq!(drift.impulse.unwrap(), 0.0);
    }

    #[test]
    fn tightening_tolerance_does_not_worsen_drift() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let gamma: Vec<f64> = vec![1.0, -0.5, 2.0, 0.7];
        let sys = VortexSystem::new(gamma).unwrap();
        let pts: Vec<(f64, f64)> = (0..4)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let z0 = Configuration::from_points(&pts);
        let drift_at = |rel_tol: f64| {
            let cfg = IntegratorConfig {
                rel_tol,
                abs_tol: rel_tol * 1e-2,
                ..Default::default()
            };
            integrate(&sys, &z0, 3.0, &cfg).unwrap().drift.energy
        };
        let coarse = drift_at(1e-6);
        let fine = drift_at(5e-7);
        assert!(fine <= coarse * 1.5 + 1e-13, "fine {fine} vs coarse {coarse}");
    }

    #[test]
    fn forward_backward_returns_to_start() {
        let sys = VortexSystem::new(vec![1.0, -2.0, 0.8]).unwrap();
        let z0 = Configuration::from_points(&[(0.6, 0.1), (-0.4, 0.3), (0.0, -0.7)]);
        let cfg = IntegratorConfig::default();
        let fwd = integrate(&sys, &z0, 2.0, &cfg).unwrap();
        let back = integrate(&sys, fwd.final_state(), -2.0, &cfg).unwrap();
        let err = (&back.final_state().z - &z0.z).norm();
        assert!(err <= 1e-8, "round trip error {err}");
    }

    #[test]
    fn midpoint_conserves_quadratic_invariants_exactly() {
        let sys = VortexSystem::new(vec![1.0, 1.0, -0.5]).unwrap();
        let z0 = Configuration::from_points(&[(1.0, 0.0), (-1.0, 0.1), (0.2, 0.8)]);
        let cfg = IntegratorConfig {
            method: IntegratorMethod::ImplicitMidpoint,
            max_step: 0.02,
            ..Default::default()
        };
        let traj = integrate(&sys, &z0, 5.0, &cfg).unwrap();
        assert_eq!(traj.termination, Termination::Completed);
        assert!(traj.drift.center.unwrap() <= 1e-12);
        assert!(traj.drift.impulse.unwrap() <= 1e-11);
        // energy is not exactly conserved but stays bounded at O(h²)
        assert!(traj.drift.energy <= 1e-4);
    }

    #[test]
    fn disc_pair_conserves_domain_energy() {
        let sys = VortexSystem::in_domain(vec![1.0, 1.0], crate::domains::DomainModel::UnitDisc)
            .unwrap();
        let z0 = Configuration::from_points(&[(0.3, 0.0), (-0.3, 0.0)]);
        let traj = integrate(&sys, &z0, 5.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(traj.termination, Termination::Completed);
        assert!(traj.drift.energy <= 1e-8);
        assert!(traj.drift.center.is_none());
        for (_, z) in &traj.samples {
            for j in 0..2 {
                assert!(z.point(j).norm() < 1.0);
            }
        }
    }

    #[test]
    fn csv_and_json_exports_are_wellformed() {
        let (sys, z0) = pair(1.0);
        let traj = integrate(&sys, &z0, 0.5, &IntegratorConfig::default()).unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x1,y1,x2,y2");
        assert_eq!(csv.lines().count(), traj.samples.len() + 1);
        for line in traj.to_json_lines().lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v["t"].is_number());
            assert_eq!(v["z"].as_array().unwrap().len(), 2);
        }
    }

    #[test]
    fn times_strictly_increasing() {
        let (sys, z0) = pair(1.0);
        let traj = integrate(&sys, &z0, 1.0, &IntegratorConfig::default()).unwrap();
        for w in traj.samples.windows(2) {
            assert!(w[1].0 > w[0].0);
        }
        let end = traj.samples.last().unwrap().0;
        assert_abs_diff_eq!(end, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn neutral_pair_translates() {
        // Γ = (1,−1) is a vortex dipole: travels in a straight line
        let sys = VortexSystem::new(vec![1.0, -1.0]).unwrap();
        let z0 = Configuration::from_points(&[(0.0, 0.5), (0.0, -0.5)]);
        let traj = integrate(&sys, &z0, 2.0, &IntegratorConfig::default()).unwrap();
        let zf = traj.final_state();
        let d0 = z0.point(0) - z0.point(1);
        let df = zf.point(0) - zf.point(1);
        assert_abs_diff_eq!((df - d0).norm(), 0.0, epsilon = 1e-8);
        let displacement = zf.point(0) - z0.point(0);
        // dipole speed is Γ/(π s) in this Hamiltonian's normalization
        let speed = 1.0 / (PI * 1.0);
        assert_abs_diff_eq!(displacement.norm(), 2.0 * speed, epsilon = 1e-8);
        assert_abs_diff_eq!(displacement[1], 0.0, epsilon = 1e-10);
    }
}
