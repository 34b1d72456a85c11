//! Relative equilibria of the free N-vortex problem and their linearization.
//!
//! A relative equilibrium is a configuration z with ∇H₀(z) + ω M_Γ z = 0; it
//! rotates rigidly, z(t) = e^{−ω J_N t} z. The linearization in the rotating
//! frame is A = J_N (M_Γ^{-1} H₀''(z) + ω·id), whose spectrum controls how
//! many 2π-periodic solutions the linearized flow has after normalizing the
//! angular frequency. Counts restricted to a symmetry subspace are computed
//! with the loop-space Galerkin discretization.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VortexError};
use crate::loopspace::{h1_weights, phi_jacobian, FourierLoop, SymmetrySubspace};
use crate::model::{Configuration, VortexSystem};

/// An element γ = (σ, θ) of Σ_N × S¹ acting on loops by
/// (γ*u)(t) = σ*(u(t+θ)) with (σ*z)_j = z_{σ^{-1}(j)}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryElement {
    /// One-line permutation: vortex j is sent to sigma[j] (0-based).
    pub sigma: Vec<usize>,
    /// Time shift θ; must satisfy ord(σ)·θ ∈ 2πℚ with a small denominator.
    pub theta: f64,
}

impl SymmetryElement {
    pub fn identity(n: usize) -> Self {
        SymmetryElement {
            sigma: (0..n).collect(),
            theta: 0.0,
        }
    }

    /// The cyclic shift j ↦ j+1 with θ = 2π/n; fixes the rigidly rotating
    /// regular n-gon loop labeled counterclockwise.
    pub fn cyclic(n: usize) -> Self {
        SymmetryElement {
            sigma: (0..n).map(|j| (j + 1) % n).collect(),
            theta: 2.0 * std::f64::consts::PI / n as f64,
        }
    }

    pub fn new(sigma: Vec<usize>, theta: f64) -> Result<Self> {
        let g = SymmetryElement { sigma, theta };
        g.validate(g.sigma.len())?;
        Ok(g)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.sigma.len() != n {
            return Err(VortexError::DimensionMismatch {
                expected: n,
                got: self.sigma.len(),
            });
        }
        let mut seen = vec![false; n];
        for &s in &self.sigma {
            if s >= n || seen[s] {
                return Err(VortexError::Config(format!(
                    "sigma {:?} is not a permutation of 0..{n}",
                    self.sigma
                )));
            }
            seen[s] = true;
        }
        self.try_order().map(|_| ())
    }

    fn permutation_order(&self) -> usize {
        let n = self.sigma.len();
        let mut cur: Vec<usize> = (0..n).collect();
        for p in 1..=4096 {
            cur = cur.iter().map(|&j| self.sigma[j]).collect();
            if cur.iter().enumerate().all(|(j, &s)| j == s) {
                return p;
            }
        }
        unreachable!("permutation order exceeds cap");
    }

    fn try_order(&self) -> Result<usize> {
        let ps = self.permutation_order();
        let t = ps as f64 * self.theta / (2.0 * std::f64::consts::PI);
        for m in 1..=4096 {
            let x = m as f64 * t;
            if (x - x.round()).abs() <= 1e-9 * (1.0 + x.abs()) {
                return Ok(m * ps);
            }
        }
        Err(VortexError::Config(format!(
            "theta = {} is not commensurate with 2π/ord(sigma)",
            self.theta
        )))
    }

    /// Order of γ as a group element (σ^p = id and pθ ∈ 2πℤ).
    pub fn order(&self) -> usize {
        self.try_order().expect("validated symmetry element")
    }

    /// (σ*z)_j = z_{σ^{-1}(j)}.
    pub fn permute(&self, z: &DVector<f64>) -> DVector<f64> {
        let n = self.sigma.len();
        debug_assert_eq!(z.len(), 2 * n);
        let mut out = DVector::zeros(2 * n);
        for j in 0..n {
            // block σ(j) of the output receives block j
            let s = self.sigma[j];
            out[2 * s] = z[2 * j];
            out[2 * s + 1] = z[2 * j + 1];
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelativeEquilibrium {
    pub z: Configuration,
    pub omega: f64,
    pub residual_norm: f64,
}

/// Which one-parameter family member the solver should pick.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Prescribe the angular frequency.
    FixOmega(f64),
    /// Prescribe the root-mean-square radius.
    FixScale(f64),
}

/// ∇H₀(z) + ω M_Γ z.
pub fn equilibrium_residual(
    sys: &VortexSystem,
    z: &Configuration,
    omega: f64,
) -> Result<DVector<f64>> {
    let grad = sys.h0_gradient(z)?;
    Ok(grad + omega * sys.m_gamma_apply(&z.z))
}

/// Gauss–Newton on the stacked system: equilibrium residual, vanishing center
/// of vorticity, the phase pin y₁ = 0, and the normalization row. Unknowns
/// are (z, ω). The stack is consistent at a genuine equilibrium, so the
/// least-squares iteration converges quadratically.
pub fn solve_equilibrium(
    sys: &VortexSystem,
    z_guess: &Configuration,
    normalization: Normalization,
) -> Result<RelativeEquilibrium> {
    let n = sys.n();
    if z_guess.n() != n {
        return Err(VortexError::DimensionMismatch {
            expected: 2 * n,
            got: 2 * z_guess.n(),
        });
    }
    let mut z = z_guess.z.clone();
    let mut omega = match normalization {
        Normalization::FixOmega(w) => w,
        Normalization::FixScale(_) => {
            // least-squares fit of ω from the guess
            let grad = sys.h0_gradient(z_guess)?;
            let mz = sys.m_gamma_apply(&z);
            let denom = mz.norm_squared();
            if denom == 0.0 {
                0.0
            } else {
                -grad.dot(&mz) / denom
            }
        }
    };

    let rows = 2 * n + 4;
    let cols = 2 * n + 1;
    let stack = |z: &DVector<f64>, omega: f64| -> Result<DVector<f64>> {
        let zc = Configuration::new(z.clone());
        let res = equilibrium_residual(sys, &zc, omega)?;
        let mut f = DVector::zeros(rows);
        f.rows_mut(0, 2 * n).copy_from(&res);
        let cov = sys.center_of_vorticity(&zc);
        f[2 * n] = cov[0];
        f[2 * n + 1] = cov[1];
        f[2 * n + 2] = z[1];
        f[2 * n + 3] = match normalization {
            Normalization::FixOmega(w) => omega - w,
            Normalization::FixScale(rho) => z.norm_squared() / n as f64 - rho * rho,
        };
        Ok(f)
    };

    let mut f = stack(&z, omega)?;
    let scale = 1.0 + z.norm() + omega.abs();
    for it in 0..60 {
        let res_norm = f.rows(0, 2 * n).norm();
        if f.norm() <= 1e-13 * scale {
            return Ok(RelativeEquilibrium {
                z: Configuration::new(z),
                omega,
                residual_norm: res_norm,
            });
        }
        let zc = Configuration::new(z.clone());
        let hess = sys.h0_hessian(&zc)?;
        let mut jac = DMatrix::zeros(rows, cols);
        // ∂residual
        let mgam = sys.m_gamma_matrix();
        jac.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&(hess + omega * &mgam));
        let mz = sys.m_gamma_apply(&z);
        for i in 0..2 * n {
            jac[(i, 2 * n)] = mz[i];
        }
        // ∂(center of vorticity)
        for j in 0..n {
            jac[(2 * n, 2 * j)] = sys.gamma()[j];
            jac[(2 * n + 1, 2 * j + 1)] = sys.gamma()[j];
        }
        // ∂(y₁ pin)
        jac[(2 * n + 2, 1)] = 1.0;
        // ∂(normalization)
        match normalization {
            Normalization::FixOmega(_) => jac[(2 * n + 3, 2 * n)] = 1.0,
            Normalization::FixScale(_) => {
                for i in 0..2 * n {
                    jac[(2 * n + 3, i)] = 2.0 * z[i] / n as f64;
                }
            }
        }

        let svd = jac.svd(true, true);
        let smax = svd.singular_values.max();
        let deficient = svd
            .singular_values
            .iter()
            .filter(|s| **s <= 1e-12 * smax.max(1.0))
            .count();
        if deficient > 0 {
            return Err(VortexError::SingularJacobian {
                kernel_dim: deficient,
            });
        }
        let step = svd
            .solve(&(-&f), 1e-14 * smax)
            .map_err(|_| VortexError::SingularJacobian { kernel_dim: 0 })?;

        // damped update
        let mut lambda = 1.0;
        let mut moved = false;
        for _ in 0..8 {
            let z_trial = &z + lambda * step.rows(0, 2 * n);
            let omega_trial = omega + lambda * step[2 * n];
            if let Ok(f_trial) = stack(&z_trial, omega_trial) {
                if f_trial.norm() < f.norm() {
                    z = z_trial;
                    omega = omega_trial;
                    f = f_trial;
                    moved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !moved {
            return Err(VortexError::NoConvergence {
                iterations: it,
                residual: res_norm,
            });
        }
    }
    let res_norm = f.rows(0, 2 * n).norm();
    if res_norm <= 1e-10 && f.norm() <= 1e-10 * scale {
        return Ok(RelativeEquilibrium {
            z: Configuration::new(z),
            omega,
            residual_norm: res_norm,
        });
    }
    Err(VortexError::NoConvergence {
        iterations: 60,
        residual: res_norm,
    })
}

/// Rotating-frame linearization A = J_N (M_Γ^{-1} H₀''(z) + ω·id).
pub fn stability_matrix(sys: &VortexSystem, eq: &RelativeEquilibrium) -> Result<DMatrix<f64>> {
    let hess = sys.h0_hessian(&eq.z)?;
    let n2 = 2 * sys.n();
    let mut k = DMatrix::zeros(n2, n2);
    for i in 0..n2 {
        let gi = sys.gamma()[i / 2];
        for j in 0..n2 {
            k[(i, j)] = hess[(i, j)] / gi;
        }
        k[(i, i)] += eq.omega;
    }
    Ok(crate::model::j_n_matrix(sys.n()) * k)
}

/// Eigenvalues of a real matrix through the real Schur form with a bounded
/// iteration budget, so pathological cases surface as errors instead of
/// spinning. The matrix is shifted by c·id first: the QR deflation criterion
/// is relative to the diagonal magnitude and never fires on matrices with a
/// zero diagonal (the shift moves every eigenvalue by exactly c).
pub(crate) fn eigenvalues_of(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let c = 1.0 + a.norm();
    let mut shifted = a.clone();
    for i in 0..a.nrows() {
        shifted[(i, i)] += c;
    }
    let schur = nalgebra::linalg::Schur::try_new(shifted, f64::EPSILON, 100_000).ok_or(
        VortexError::NoConvergence {
            iterations: 100_000,
            residual: f64::NAN,
        },
    )?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|l| l - Complex::new(c, 0.0))
        .collect())
}

/// Complex kernel dimension of A − iμ·id for real A, via the real SVD of the
/// doubled system on (Re v, Im v).
fn kernel_dim_at(a: &DMatrix<f64>, mu: f64, tol: f64) -> usize {
    let d = a.nrows();
    if mu == 0.0 {
        let svd = a.clone().svd(false, false);
        return svd.singular_values.iter().filter(|s| **s <= tol).count();
    }
    let mut b = DMatrix::zeros(2 * d, 2 * d);
    b.view_mut((0, 0), (d, d)).copy_from(a);
    b.view_mut((d, d), (d, d)).copy_from(a);
    for i in 0..d {
        b[(i, d + i)] = mu;
        b[(d + i, i)] = -mu;
    }
    let svd = b.svd(false, false);
    svd.singular_values.iter().filter(|s| **s <= tol).count() / 2
}

/// Real dimension of the space of 2π-periodic solutions of ẇ = (A/|ω|) w,
/// counted as geometric multiplicities of eigenvalues on the lattice i|ω|ℤ.
/// Eigenvalues landing in the band (tol, 10·tol] from the lattice make the
/// count unreliable and are reported instead of guessed at.
pub fn periodic_solution_count(a: &DMatrix<f64>, omega: f64, tol: f64) -> Result<usize> {
    let spacing = omega.abs();
    let eigs = eigenvalues_of(a)?;
    let nearest = |lambda: Complex<f64>| -> (i64, f64) {
        if spacing <= tol {
            return (0, lambda.norm());
        }
        let m = (lambda.im / spacing).round() as i64;
        let mut best = (0, Complex::new(lambda.re, lambda.im).norm());
        for cand in [m - 1, m, m + 1] {
            let d = Complex::new(lambda.re, lambda.im - cand as f64 * spacing).norm();
            if d < best.1 {
                best = (cand, d);
            }
        }
        best
    };
    let norm_a = a.norm().max(1.0);
    let mut lattice_hits: Vec<i64> = Vec::new();
    for lambda in eigs.iter() {
        let (m, d) = nearest(*lambda);
        if d <= tol {
            if !lattice_hits.contains(&m) {
                lattice_hits.push(m);
            }
        } else if d <= 10.0 * tol {
            // Computed eigenvalues of defective blocks sit O(√ε·‖A‖) off the
            // lattice even when the exact ones lie on it, so the guard band
            // is adjudicated by the rank test at the lattice point itself;
            // only an inconclusive rank test is a genuine ambiguity.
            if kernel_dim_at(a, m as f64 * spacing, 1e-8 * norm_a) > 0 {
                if !lattice_hits.contains(&m) {
                    lattice_hits.push(m);
                }
            } else {
                return Err(VortexError::ToleranceAmbiguity {
                    re: lambda.re,
                    im: lambda.im,
                    distance: d,
                    tol,
                    band: 10.0 * tol,
                });
            }
        }
    }
    let mut count = 0;
    for m in lattice_hits {
        count += kernel_dim_at(a, m as f64 * spacing, 1e-8 * norm_a);
    }
    Ok(count)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Eigenvalues of the rotating-frame linearization as (re, im) pairs.
    pub eigenvalues: Vec<(f64, f64)>,
    /// Real dimension of the periodic solution space of the linearization.
    pub periodic_dimension: usize,
    /// Same count restricted to a symmetry subspace, when one was requested.
    pub gamma_periodic_dimension: Option<usize>,
    /// True exactly when periodic_dimension equals the structural minimum 3.
    pub nondegenerate: bool,
}

/// Spectral analysis of a relative equilibrium: eigenvalues, lattice count,
/// and the non-degeneracy verdict.
pub fn nondegeneracy(sys: &VortexSystem, eq: &RelativeEquilibrium) -> Result<SpectralReport> {
    let a = stability_matrix(sys, eq)?;
    let eigs = eigenvalues_of(&a)?;
    let count = periodic_solution_count(&a, eq.omega, 1e-8)?;
    Ok(SpectralReport {
        eigenvalues: eigs.iter().map(|l| (l.re, l.im)).collect(),
        periodic_dimension: count,
        gamma_periodic_dimension: None,
        nondegenerate: count == 3,
    })
}

/// The equilibrium rescaled so its rotation is 2π-periodic, as a single-mode
/// loop Z̃(t) = e^{−ω̃ J_N t} z̃ with ω̃ = ±1.
pub fn normalized_loop(eq: &RelativeEquilibrium, n: usize) -> Result<FourierLoop> {
    if eq.omega == 0.0 || !eq.omega.is_finite() {
        return Err(VortexError::Config(
            "cannot normalize an equilibrium with omega = 0".into(),
        ));
    }
    let scale = eq.omega.abs().sqrt();
    let k0 = if eq.omega > 0.0 { 1 } else { -1 };
    Ok(FourierLoop::single_mode(
        n,
        eq.z.n(),
        k0,
        &(scale * &eq.z.z),
    ))
}

fn galerkin_kernel_count(
    plane: &VortexSystem,
    z_loop: &FourierLoop,
    subspace: &SymmetrySubspace,
    n: usize,
) -> Result<usize> {
    let z_n = z_loop.resize(n);
    let jac = phi_jacobian(plane, nalgebra::Vector2::zeros(), 0.0, &z_n)?;
    let basis = subspace.basis(n);
    let reduced = basis.transpose() * &jac * &basis;
    // rescale rows/columns so coordinates are H¹-orthonormal
    let w = h1_weights(n, z_loop.n_vortices());
    let col_w: Vec<f64> = (0..basis.ncols())
        .map(|c| {
            let col = basis.column(c);
            (0..col.len())
                .map(|i| (w[i] * col[i]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let mut scaled = reduced;
    for i in 0..scaled.nrows() {
        for j in 0..scaled.ncols() {
            scaled[(i, j)] *= col_w[i] / col_w[j];
        }
    }
    let svd = scaled.svd(false, false);
    Ok(svd.singular_values.iter().filter(|s| **s <= 1e-8).count())
}

/// Kernel dimension of the linearized loop-space gradient at the normalized
/// equilibrium, restricted to the fixed-point space of γ. Computed at
/// truncation n and 2n; a disagreement means the truncation cannot be
/// trusted and is reported as such.
pub fn gamma_periodic_count(
    sys: &VortexSystem,
    eq: &RelativeEquilibrium,
    gamma: &SymmetryElement,
    n: usize,
) -> Result<usize> {
    let plane = VortexSystem::new(sys.gamma().to_vec())?;
    let subspace = SymmetrySubspace::new(&plane, gamma.clone())?;
    let z_loop = normalized_loop(eq, 2 * n)?;
    let defect = subspace.defect(&z_loop);
    if defect > 1e-10 {
        return Err(VortexError::NotSymmetric {
            defect,
            tol: 1e-10,
        });
    }
    let count_n = galerkin_kernel_count(&plane, &z_loop, &subspace, n)?;
    let count_2n = galerkin_kernel_count(&plane, &z_loop, &subspace, 2 * n)?;
    if count_n != count_2n {
        return Err(VortexError::TruncationUnstable {
            n,
            n2: 2 * n,
            count_n,
            count_2n,
        });
    }
    Ok(count_n)
}

/// Convenience: full spectral report with the γ-restricted count attached.
pub fn spectral_report(
    sys: &VortexSystem,
    eq: &RelativeEquilibrium,
    gamma: Option<&SymmetryElement>,
    n: usize,
) -> Result<SpectralReport> {
    let mut report = nondegeneracy(sys, eq)?;
    if let Some(g) = gamma {
        report.gamma_periodic_dimension = Some(gamma_periodic_count(sys, eq, g, n)?);
    }
    Ok(report)
}

/// Regular N-gon of unit-strength vortices on the circle of radius rho,
/// labeled counterclockwise; a relative equilibrium with ω = (N−1)/(2πρ²).
pub fn thomson_configuration(n: usize, rho: f64) -> Configuration {
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            (rho * phi.cos(), rho * phi.sin())
        })
        .collect();
    Configuration::from_points(&pts)
}

pub fn thomson_omega(n: usize, rho: f64) -> f64 {
    (n as f64 - 1.0) / (2.0 * std::f64::consts::PI * rho * rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn pair(s: f64) -> (VortexSystem, Configuration) {
        let sys = VortexSystem::new(vec![1.0, 1.0]).unwrap();
        let z = Configuration::from_points(&[(s / 2.0, 0.0), (-s / 2.0, 0.0)]);
        (sys, z)
    }

    #[test]
    fn pair_frequency_closed_form() {
        for s in [1.0, 2.0] {
            let (sys, z) = pair(s);
            let omega = 2.0 / (PI * s * s);
            let res = equilibrium_residual(&sys, &z, omega).unwrap();
            assert_abs_diff_eq!(res.norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn solver_keeps_exact_pair() {
        let (sys, z) = pair(1.0);
        let eq = solve_equilibrium(&sys, &z, Normalization::FixScale(0.5)).unwrap();
        assert_relative_eq!(eq.z.z, z.z, epsilon = 1e-13);
        assert_relative_eq!(eq.omega, 2.0 / PI, epsilon = 1e-13);
    }

    #[test]
    fn solver_recovers_thomson_square_from_noise() {
        let sys = VortexSystem::new(vec![1.0; 4]).unwrap();
        let z0 = thomson_configuration(4, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let noise = DVector::from_fn(8, |_, _| rng.gen_range(-0.01..0.01));
        let guess = Configuration::new(&z0.z + noise);
        let eq = solve_equilibrium(&sys, &guess, Normalization::FixScale(1.0)).unwrap();
        let expected = thomson_omega(4, 1.0);
        assert_relative_eq!(eq.omega, expected, epsilon = 1e-10);
        assert_relative_eq!(eq.omega, 3.0 / (2.0 * PI), epsilon = 1e-10);
        assert!(eq.residual_norm <= 1e-10);
        // center of vorticity pinned at the origin
        assert!(sys.center_of_vorticity(&eq.z).norm() <= 1e-10);
    }

    #[test]
    fn solver_with_fixed_omega() {
        let sys = VortexSystem::new(vec![1.0; 3]).unwrap();
        let guess = thomson_configuration(3, 0.9);
        let eq = solve_equilibrium(&sys, &guess, Normalization::FixOmega(1.0)).unwrap();
        assert_relative_eq!(eq.omega, 1.0, epsilon = 1e-14);
        // radius adjusts to ρ = √(1/π) for ω = 1
        assert_relative_eq!(eq.z.rms_radius(), (1.0 / PI).sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn collinear_three_vortex_equilibrium() {
        // (−d, 0, d) on the x-axis with equal strengths: ω = 3/(2πd²)
        let sys = VortexSystem::new(vec![1.0; 3]).unwrap();
        let d = 1.3;
        let z = Configuration::from_points(&[(-d, 0.0), (0.0, 0.0), (d, 0.0)]);
        let omega = 3.0 / (2.0 * PI * d * d);
        let res = equilibrium_residual(&sys, &z, omega).unwrap();
        assert_abs_diff_eq!(res.norm(), 0.0, epsilon = 1e-12);
        // cross-check: the flow is the corotating field −ω J_N z
        let zdot = sys.vector_field(&z, 0.0).unwrap();
        let expected = -omega * crate::model::j_n(&z.z);
        assert_relative_eq!(zdot, expected, epsilon = 1e-12);
    }

    #[test]
    fn stability_matrix_structural_spectrum() {
        let (sys, z) = pair(1.0);
        let eq = RelativeEquilibrium {
            z,
            omega: 2.0 / PI,
            residual_norm: 0.0,
        };
        let a = stability_matrix(&sys, &eq).unwrap();
        // structural eigenvectors from rotation and translation covariance
        let az = &a * &eq.z.z;
        assert_relative_eq!(az, 2.0 * eq.omega * crate::model::j_n(&eq.z.z), epsilon = 1e-12);
        let jz = crate::model::j_n(&eq.z.z);
        assert_abs_diff_eq!((&a * jz).norm(), 0.0, epsilon = 1e-12);
        let e1 = DVector::from_vec(vec![1.0, 0.0, 1.0, 0.0]);
        let je1 = crate::model::j_n(&e1);
        assert_relative_eq!(&a * &e1, eq.omega * &je1, epsilon = 1e-12);
        assert_relative_eq!(&a * &je1, -eq.omega * &e1, epsilon = 1e-12);
        assert_abs_diff_eq!(a.trace(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pair_count_is_three() {
        for s in [0.7, 1.0, 1.9] {
            let (sys, z) = pair(s);
            let eq = RelativeEquilibrium {
                z,
                omega: 2.0 / (PI * s * s),
                residual_norm: 0.0,
            };
            let a = stability_matrix(&sys, &eq).unwrap();
            assert_eq!(periodic_solution_count(&a, eq.omega, 1e-8).unwrap(), 3);
            let report = nondegeneracy(&sys, &eq).unwrap();
            assert!(report.nondegenerate);
            assert_eq!(report.periodic_dimension, 3);
        }
    }

    #[test]
    fn zero_matrix_counts_full_dimension() {
        let a = DMatrix::zeros(6, 6);
        assert_eq!(periodic_solution_count(&a, 1.0, 1e-8).unwrap(), 6);
    }

    #[test]
    fn ambiguous_eigenvalue_reported() {
        // diagonal matrix with an eigenvalue 5·tol off the lattice
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 0)] = 5e-8;
        a[(1, 1)] = -5e-8;
        let err = periodic_solution_count(&a, 1.0, 1e-8).unwrap_err();
        assert!(matches!(err, VortexError::ToleranceAmbiguity { .. }));
    }

    #[test]
    fn equal_triangle_degenerate_mixed_triangle_not() {
        // equal strengths, scaled so ω = 1: the free spectrum collides with
        // the lattice and the count exceeds the structural 3
        let sys = VortexSystem::new(vec![1.0; 3]).unwrap();
        let rho = (1.0 / PI).sqrt();
        let eq = solve_equilibrium(
            &sys,
            &thomson_configuration(3, rho),
            Normalization::FixOmega(1.0),
        )
        .unwrap();
        let a = stability_matrix(&sys, &eq).unwrap();
        // ±i√(L/3) with L = ΣΓ_jΓ_k = 3: eigenvalues at ±i
        let eigs = eigenvalues_of(&a).unwrap();
        let has = |target: Complex<f64>| eigs.iter().any(|l| (l - target).norm() <= 1e-8);
        assert!(has(Complex::new(0.0, 1.0)));
        assert!(has(Complex::new(0.0, -1.0)));
        let report = nondegeneracy(&sys, &eq).unwrap();
        assert!(!report.nondegenerate, "count = {}", report.periodic_dimension);

        // strengths (1, 2, 3): Γ = 6, L = 11, L ≠ ΣΓ² = 14 ⇒ nondegenerate
        let sys2 = VortexSystem::new(vec![1.0, 2.0, 3.0]).unwrap();
        let side = 1.0;
        let h = side * 3.0_f64.sqrt() / 2.0;
        let guess = Configuration::from_points(&[
            (-side / 2.0, -h / 3.0),
            (side / 2.0, -h / 3.0),
            (0.0, 2.0 * h / 3.0),
        ]);
        let eq2 = solve_equilibrium(&sys2, &guess, Normalization::FixScale(0.6)).unwrap();
        let report2 = nondegeneracy(&sys2, &eq2).unwrap();
        assert!(report2.nondegenerate);
        assert_eq!(report2.periodic_dimension, 3);
    }

    #[test]
    fn spectrum_block_structure_for_positive_strengths() {
        // with all Γ_j > 0 the eigenvalues of A come in pairs ±√(μ²−ω²)
        // where μ runs over eigenvalues of M_Γ^{-1}H₀'' with μ ≥ 0
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..10 {
            let n = rng.gen_range(2..5usize);
            let gamma: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
            let sys = VortexSystem::new(gamma).unwrap();
            let guess = thomson_configuration(n, 1.0);
            let eq = match solve_equilibrium(&sys, &guess, Normalization::FixScale(1.0)) {
                Ok(eq) => eq,
                Err(_) => continue,
            };
            let a = stability_matrix(&sys, &eq).unwrap();
            let hess = sys.h0_hessian(&eq.z).unwrap();
            let mut k = DMatrix::zeros(2 * n, 2 * n);
            for i in 0..2 * n {
                for j in 0..2 * n {
                    k[(i, j)] = hess[(i, j)] / sys.gamma()[i / 2];
                }
            }
            // K anticommutes with J_N, so its spectrum is ±-symmetric; pick
            // one representative per ± pair by sorting the magnitudes
            let mut mags: Vec<f64> = eigenvalues_of(&k)
                .unwrap()
                .iter()
                .map(|l| l.re.abs())
                .collect();
            mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mu: Vec<f64> = mags.iter().step_by(2).cloned().collect();
            assert_eq!(mu.len(), n);
            let mut predicted: Vec<Complex<f64>> = Vec::new();
            for m in &mu {
                let s = Complex::new(m * m - eq.omega * eq.omega, 0.0).sqrt();
                predicted.push(s);
                predicted.push(-s);
            }
            let mut actual: Vec<Complex<f64>> = eigenvalues_of(&a).unwrap();
            // greedy matching within tolerance
            for p in predicted {
                let (idx, dist) = actual
                    .iter()
                    .enumerate()
                    .map(|(i, a)| (i, (a - p).norm()))
                    .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
                    .unwrap();
                assert!(dist <= 1e-7 * (1.0 + p.norm()), "unmatched eigenvalue {p}");
                actual.remove(idx);
            }
        }
    }

    #[test]
    fn spectrum_scale_covariance() {
        let sys = VortexSystem::new(vec![1.0, 1.0]).unwrap();
        let z = Configuration::from_points(&[(0.5, 0.0), (-0.5, 0.0)]);
        let eq = RelativeEquilibrium {
            z: z.clone(),
            omega: 2.0 / PI,
            residual_norm: 0.0,
        };
        let c: f64 = 2.5;
        let eq_scaled = RelativeEquilibrium {
            z: Configuration::new(c.sqrt() * &z.z),
            omega: eq.omega / c,
            residual_norm: 0.0,
        };
        let a = stability_matrix(&sys, &eq).unwrap();
        let a_scaled = stability_matrix(&sys, &eq_scaled).unwrap();
        assert_relative_eq!(a_scaled, a / c, epsilon = 1e-12);
    }

    #[test]
    fn thomson_triangle_gamma_count_is_three() {
        let sys = VortexSystem::new(vec![1.0; 3]).unwrap();
        let eq = solve_equilibrium(
            &sys,
            &thomson_configuration(3, 1.0),
            Normalization::FixScale(1.0),
        )
        .unwrap();
        let gamma = SymmetryElement::cyclic(3);
        let count = gamma_periodic_count(&sys, &eq, &gamma, 8).unwrap();
        assert_eq!(count, 3);
    }

    #[test]
    fn identity_gamma_count_matches_lattice_count() {
        let (sys, z) = pair(1.0);
        let eq = RelativeEquilibrium {
            z,
            omega: 2.0 / PI,
            residual_norm: 0.0,
        };
        let full = nondegeneracy(&sys, &eq).unwrap().periodic_dimension;
        let gamma = SymmetryElement::identity(2);
        let restricted = gamma_periodic_count(&sys, &eq, &gamma, 8).unwrap();
        assert_eq!(full, restricted);
    }

    #[test]
    fn gamma_count_never_exceeds_full_count() {
        let sys = VortexSystem::new(vec![1.0; 4]).unwrap();
        let eq = solve_equilibrium(
            &sys,
            &thomson_configuration(4, 1.0),
            Normalization::FixScale(1.0),
        )
        .unwrap();
        let full = gamma_periodic_count(&sys, &eq, &SymmetryElement::identity(4), 8).unwrap();
        let sym = gamma_periodic_count(&sys, &eq, &SymmetryElement::cyclic(4), 8).unwrap();
        assert!(sym <= full);
        assert_eq!(sym, 3);
    }

    #[test]
    fn asymmetric_loop_rejected() {
        let sys = VortexSystem::new(vec![1.0; 3]).unwrap();
        // a non-polygonal equilibrium shape: collinear triple
        let d = 1.0;
        let z = Configuration::from_points(&[(-d, 0.0), (0.0, 0.0), (d, 0.0)]);
        let eq = RelativeEquilibrium {
            z,
            omega: 3.0 / (2.0 * PI * d * d),
            residual_norm: 0.0,
        };
        let gamma = SymmetryElement::cyclic(3);
        let err = gamma_periodic_count(&sys, &eq, &gamma, 6).unwrap_err();
        assert!(matches!(err, VortexError::NotSymmetric { .. }));
    }

    #[test]
    fn symmetry_element_validation() {
        assert!(SymmetryElement::new(vec![0, 1, 2], 0.0).is_ok());
        assert!(SymmetryElement::new(vec![0, 0, 2], 0.0).is_err());
        assert!(SymmetryElement::new(vec![2, 0, 1], 2.0 * PI / 3.0).is_ok());
        // incommensurate shift
        assert!(SymmetryElement::new(vec![0, 1], 1.0).is_err());
        assert_eq!(SymmetryElement::cyclic(5).order(), 5);
        assert_eq!(SymmetryElement::identity(3).order(), 1);
    }

    #[test]
    fn permutation_action_convention() {
        let g = SymmetryElement::cyclic(3);
        let z = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let out = g.permute(&z);
        // (σ*z)_j = z_{σ^{-1}(j)}: block 0 receives block 2
        assert_eq!(out.as_slice(), &[5.0, 6.0, 1.0, 2.0, 3.0, 4.0]);
    }
}
