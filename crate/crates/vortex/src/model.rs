//! Vortex systems and their Hamiltonians.
//!
//! H_0 is the free (Kirchhoff-Onsager) interaction energy, H_Ω = H_0 − F adds
//! the domain's regular part F built from the hydrodynamic Green's function,
//! and H_r(u) = H_0(u) − F(â_0 + ru) + F(â_0) is the blow-up of H_Ω around a
//! point a_0 ∈ Ω at scale r. All derivatives are analytic; nothing here is
//! obtained by differencing.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::domains::DomainModel;
use crate::error::{Result, VortexError};

pub const DEFAULT_COLLISION_FLOOR: f64 = 1e-12;

/// The 2×2 symplectic block J = [[0, 1], [−1, 0]].
pub fn j_block() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

/// Counterclockwise rotation by `a`, i.e. the block of e^{−aJ}.
pub fn rot_ccw(a: f64) -> Matrix2<f64> {
    let (s, c) = a.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Apply a 2×2 matrix to every (x, y) block of a flat ℝ^{2N} vector.
pub fn apply_blockwise(m: &Matrix2<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for j in 0..v.len() / 2 {
        let w = m * Vector2::new(v[2 * j], v[2 * j + 1]);
        out[2 * j] = w[0];
        out[2 * j + 1] = w[1];
    }
    out
}

/// J_N v: blockwise application of J.
pub fn j_n(v: &DVector<f64>) -> DVector<f64> {
    apply_blockwise(&j_block(), v)
}

/// Dense J_N ∈ ℝ^{2N×2N} for spectral work.
pub fn j_n_matrix(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        m[(2 * j, 2 * j + 1)] = 1.0;
        m[(2 * j + 1, 2 * j)] = -1.0;
    }
    m
}

/// N points of ℝ² stored flat as (x_1, y_1, …, x_N, y_N).
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    pub z: DVector<f64>,
}

impl Configuration {
    pub fn new(z: DVector<f64>) -> Self {
        assert!(z.len() % 2 == 0, "flat configuration must have even length");
        Configuration { z }
    }

    pub fn from_points(points: &[(f64, f64)]) -> Self {
        let mut z = DVector::zeros(2 * points.len());
        for (j, &(x, y)) in points.iter().enumerate() {
            z[2 * j] = x;
            z[2 * j + 1] = y;
        }
        Configuration { z }
    }

    pub fn n(&self) -> usize {
        self.z.len() / 2
    }

    pub fn point(&self, j: usize) -> Vector2<f64> {
        Vector2::new(self.z[2 * j], self.z[2 * j + 1])
    }

    pub fn set_point(&mut self, j: usize, p: Vector2<f64>) {
        self.z[2 * j] = p[0];
        self.z[2 * j + 1] = p[1];
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        (0..self.n()).map(|j| (self.z[2 * j], self.z[2 * j + 1])).collect()
    }

    /// Root-mean-square distance of the points from the origin.
    pub fn rms_radius(&self) -> f64 {
        (self.z.norm_squared() / self.n() as f64).sqrt()
    }

    pub fn min_pair_distance(&self) -> f64 {
        let n = self.n();
        let mut d = f64::INFINITY;
        for j in 0..n {
            for k in j + 1..n {
                d = d.min((self.point(j) - self.point(k)).norm());
            }
        }
        d
    }
}

impl Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.points().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let points = Vec::<(f64, f64)>::deserialize(d)?;
        Ok(Configuration::from_points(&points))
    }
}

/// Value, gradient and (optionally) Hessian of a Hamiltonian at a configuration.
#[derive(Clone, Debug)]
pub struct EnergyReport {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: Option<DMatrix<f64>>,
}

/// N vortices with strengths Γ in a planar domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VortexSystem {
    gamma: Vec<f64>,
    #[serde(default)]
    pub domain: DomainModel,
    #[serde(default = "default_floor")]
    pub collision_floor: f64,
}

fn default_floor() -> f64 {
    DEFAULT_COLLISION_FLOOR
}

impl VortexSystem {
    /// Free-plane system. Strengths must be nonzero; a single vortex is
    /// allowed (its pair sums are empty) so that pure self-interaction
    /// dynamics in a domain still work.
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        for (index, &g) in gamma.iter().enumerate() {
            if g == 0.0 || !g.is_finite() {
                return Err(VortexError::InvalidCirculation { index });
            }
        }
        Ok(VortexSystem {
            gamma,
            domain: DomainModel::Plane,
            collision_floor: DEFAULT_COLLISION_FLOOR,
        })
    }

    pub fn in_domain(gamma: Vec<f64>, domain: DomainModel) -> Result<Self> {
        let mut sys = Self::new(gamma)?;
        sys.domain = domain;
        Ok(sys)
    }

    pub fn n(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Σ Γ_k, recomputed on every call.
    pub fn total_vorticity(&self) -> f64 {
        self.gamma.iter().sum()
    }

    /// M_Γ v = (Γ_1 v_1, …, Γ_N v_N) blockwise.
    pub fn m_gamma_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = v.clone();
        for j in 0..self.n() {
            out[2 * j] *= self.gamma[j];
            out[2 * j + 1] *= self.gamma[j];
        }
        out
    }

    pub fn m_gamma_inv_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = v.clone();
        for j in 0..self.n() {
            out[2 * j] /= self.gamma[j];
            out[2 * j + 1] /= self.gamma[j];
        }
        out
    }

    pub fn m_gamma_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(2 * self.n(), 2 * self.n());
        for j in 0..self.n() {
            m[(2 * j, 2 * j)] = self.gamma[j];
            m[(2 * j + 1, 2 * j + 1)] = self.gamma[j];
        }
        m
    }

    /// Center of vorticity Q = Σ Γ_k z_k (conserved on the whole plane).
    pub fn center_of_vorticity(&self, z: &Configuration) -> Vector2<f64> {
        let mut q = Vector2::zeros();
        for j in 0..self.n() {
            q += self.gamma[j] * z.point(j);
        }
        q
    }

    /// Angular impulse I = Σ Γ_k |z_k|² (conserved on the whole plane).
    pub fn angular_impulse(&self, z: &Configuration) -> f64 {
        (0..self.n()).map(|j| self.gamma[j] * z.point(j).norm_squared()).sum()
    }

    fn check_dim(&self, z: &Configuration) -> Result<()> {
        if z.n() != self.n() {
            return Err(VortexError::DimensionMismatch {
                expected: self.n(),
                got: z.n(),
            });
        }
        Ok(())
    }

    fn check_pairwise(&self, z: &Configuration) -> Result<()> {
        self.check_dim(z)?;
        for j in 0..self.n() {
            for k in j + 1..self.n() {
                let d = (z.point(j) - z.point(k)).norm();
                if d < self.collision_floor {
                    return Err(VortexError::Collision {
                        i: j,
                        j: k,
                        distance: d,
                        floor: self.collision_floor,
                    });
                }
            }
        }
        Ok(())
    }

    fn check_inside(&self, z: &Configuration) -> Result<()> {
        for j in 0..self.n() {
            let p = z.point(j);
            if !self.domain.contains(p) {
                return Err(VortexError::OutsideDomain {
                    index: j,
                    x: p[0],
                    y: p[1],
                });
            }
        }
        Ok(())
    }

    /// H_0(z) = −(1/2π) Σ_{j≠k} Γ_j Γ_k log|z_j − z_k| (ordered pairs).
    pub fn h0_energy(&self, z: &Configuration) -> Result<f64> {
        self.check_pairwise(z)?;
        let mut sum = 0.0;
        for j in 0..self.n() {
            for k in j + 1..self.n() {
                let d = (z.point(j) - z.point(k)).norm();
                sum += self.gamma[j] * self.gamma[k] * d.ln();
            }
        }
        Ok(-sum / std::f64::consts::PI)
    }

    /// ∇_{z_j} H_0 = −(1/π) Σ_{k≠j} Γ_j Γ_k (z_j − z_k)/|z_j − z_k|².
    pub fn h0_gradient(&self, z: &Configuration) -> Result<DVector<f64>> {
        self.check_pairwise(z)?;
        let n = self.n();
        let mut grad = DVector::zeros(2 * n);
        for j in 0..n {
            let mut gj = Vector2::zeros();
            for k in 0..n {
                if k == j {
                    continue;
                }
                let w = z.point(j) - z.point(k);
                gj += self.gamma[j] * self.gamma[k] / w.norm_squared() * w;
            }
            gj /= -std::f64::consts::PI;
            grad[2 * j] = gj[0];
            grad[2 * j + 1] = gj[1];
        }
        Ok(grad)
    }

    /// Analytic H_0''(z); symmetric, annihilates translation directions.
    pub fn h0_hessian(&self, z: &Configuration) -> Result<DMatrix<f64>> {
        self.check_pairwise(z)?;
        let n = self.n();
        let mut hess = DMatrix::zeros(2 * n, 2 * n);
        // d(w/|w|²)/dw = (|w|² I − 2 w wᵀ)/|w|⁴, symmetric and trace-free
        for j in 0..n {
            for k in 0..n {
                if k == j {
                    continue;
                }
                let w = z.point(j) - z.point(k);
                let q = w.norm_squared();
                let dphi = (Matrix2::identity() * q - 2.0 * w * w.transpose()) / (q * q);
                let s = self.gamma[j] * self.gamma[k] / std::f64::consts::PI * dphi;
                // off-diagonal block (j,k) gains +s, diagonal block (j,j) gains −s
                for a in 0..2 {
                    for b in 0..2 {
                        hess[(2 * j + a, 2 * k + b)] += s[(a, b)];
                        hess[(2 * j + a, 2 * j + b)] -= s[(a, b)];
                    }
                }
            }
        }
        Ok(hess)
    }

    /// Regular interaction with the domain, F(z) = Σ_{j,k} Γ_j Γ_k g(z_j, z_k),
    /// the diagonal terms being Γ_j² h(z_j). Identically zero on the plane.
    pub fn interaction_energy(&self, z: &Configuration) -> Result<f64> {
        self.check_dim(z)?;
        self.check_inside(z)?;
        if matches!(self.domain, DomainModel::Plane) {
            return Ok(0.0);
        }
        let n = self.n();
        let mut sum = 0.0;
        for j in 0..n {
            sum += self.gamma[j] * self.gamma[j] * self.domain.robin(z.point(j));
            for k in j + 1..n {
                sum += 2.0 * self.gamma[j] * self.gamma[k] * self.domain.green(z.point(j), z.point(k));
            }
        }
        Ok(sum)
    }

    /// ∇_{z_a} F = 2 Γ_a Σ_k Γ_k ∂_x g(z_a, z_k), the k = a term being Γ_a² ∇h(z_a).
    pub fn interaction_gradient(&self, z: &Configuration) -> Result<DVector<f64>> {
        self.check_dim(z)?;
        self.check_inside(z)?;
        let n = self.n();
        let mut grad = DVector::zeros(2 * n);
        if matches!(self.domain, DomainModel::Plane) {
            return Ok(grad);
        }
        for a in 0..n {
            let mut ga = self.gamma[a] * self.gamma[a] * self.domain.robin_gradient(z.point(a));
            for k in 0..n {
                if k == a {
                    continue;
                }
                ga += 2.0 * self.gamma[a] * self.gamma[k] * self.domain.green_grad_x(z.point(a), z.point(k));
            }
            grad[2 * a] = ga[0];
            grad[2 * a + 1] = ga[1];
        }
        Ok(grad)
    }

    /// F''(z) assembled from the Green's function's second derivatives.
    pub fn interaction_hessian(&self, z: &Configuration) -> Result<DMatrix<f64>> {
        self.check_dim(z)?;
        self.check_inside(z)?;
        let n = self.n();
        let mut hess = DMatrix::zeros(2 * n, 2 * n);
        if matches!(self.domain, DomainModel::Plane) {
            return Ok(hess);
        }
        for a in 0..n {
            let mut daa = self.gamma[a] * self.gamma[a] * self.domain.robin_hessian(z.point(a));
            for k in 0..n {
                if k == a {
                    continue;
                }
                daa += 2.0 * self.gamma[a] * self.gamma[k] * self.domain.green_hess_xx(z.point(a), z.point(k));
                let dab = 2.0 * self.gamma[a] * self.gamma[k] * self.domain.green_hess_xy(z.point(a), z.point(k));
                for i in 0..2 {
                    for m in 0..2 {
                        hess[(2 * a + i, 2 * k + m)] = dab[(i, m)];
                    }
                }
            }
            for i in 0..2 {
                for m in 0..2 {
                    hess[(2 * a + i, 2 * a + m)] = daa[(i, m)];
                }
            }
        }
        Ok(hess)
    }

    /// Full report for H_Ω = H_0 − F.
    pub fn domain_energy(&self, z: &Configuration) -> Result<EnergyReport> {
        let value = self.h0_energy(z)? - self.interaction_energy(z)?;
        let gradient = self.h0_gradient(z)? - self.interaction_gradient(z)?;
        let hessian = self.h0_hessian(z)? - self.interaction_hessian(z)?;
        Ok(EnergyReport {
            value,
            gradient,
            hessian: Some(hessian),
        })
    }

    /// H_r(u) = H_0(u) − F(â_0 + ru) + F(â_0), the Hamiltonian of the problem
    /// rescaled around a_0 ∈ Ω. Gradient ∇H_0(u) − r(∇F)(â_0 + ru), Hessian
    /// H_0''(u) − r² F''(â_0 + ru). At r = 0 this is exactly H_0.
    pub fn hr_energy_at(&self, a0: Vector2<f64>, r: f64, u: &Configuration) -> Result<EnergyReport> {
        assert!(r >= 0.0, "scale r must be nonnegative");
        let scaled = self.scaled_configuration(a0, r, u);
        let f_at_scaled = self.interaction_energy(&scaled)?;
        let f_at_center = self.interaction_energy(&Configuration::from_points(&vec![
            (a0[0], a0[1]);
            self.n()
        ]))?;
        let value = self.h0_energy(u)? - f_at_scaled + f_at_center;
        let gradient = self.h0_gradient(u)? - r * self.interaction_gradient(&scaled)?;
        let hessian = self.h0_hessian(u)? - r * r * self.interaction_hessian(&scaled)?;
        Ok(EnergyReport {
            value,
            gradient,
            hessian: Some(hessian),
        })
    }

    /// `hr_energy_at` centered at the origin.
    pub fn hr_energy(&self, r: f64, u: &Configuration) -> Result<EnergyReport> {
        self.hr_energy_at(Vector2::zeros(), r, u)
    }

    /// The physical configuration â_0 + r·u behind a scaled one.
    pub fn scaled_configuration(&self, a0: Vector2<f64>, r: f64, u: &Configuration) -> Configuration {
        let mut z = DVector::zeros(u.z.len());
        for j in 0..u.n() {
            let p = a0 + r * u.point(j);
            z[2 * j] = p[0];
            z[2 * j + 1] = p[1];
        }
        Configuration::new(z)
    }

    /// ż with ż_k = Γ_k^{-1} J ∇_{z_k} H. The Hamiltonian is H_Ω of the
    /// system's domain when `r = 0` (H_0 on the plane) and the scaled H_r
    /// centered at the origin when `r > 0`.
    pub fn vector_field(&self, z: &Configuration, r: f64) -> Result<DVector<f64>> {
        let grad = if r == 0.0 {
            self.domain_energy(z)?.gradient
        } else {
            self.hr_energy(r, z)?.gradient
        };
        Ok(j_n(&self.m_gamma_inv_apply(&grad)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn pair_system() -> VortexSystem {
        VortexSystem::new(vec![1.0, 1.0]).unwrap()
    }

    fn symmetric_pair() -> Configuration {
        Configuration::from_points(&[(1.0, 0.0), (-1.0, 0.0)])
    }

    fn random_admissible(rng: &mut impl Rng, n: usize) -> (VortexSystem, Configuration) {
        loop {
            let gamma: Vec<f64> = (0..n)
                .map(|_| {
                    let g: f64 = rng.gen_range(-2.0..2.0);
                    if g.abs() < 0.2 {
                        1.0
                    } else {
                        g
                    }
                })
                .collect();
            let points: Vec<(f64, f64)> =
                (0..n).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let z = Configuration::from_points(&points);
            if z.min_pair_distance() > 0.1 {
                return (VortexSystem::new(gamma).unwrap(), z);
            }
        }
    }

    fn fd_gradient(f: &dyn Fn(&Configuration) -> f64, z: &Configuration, step: f64) -> DVector<f64> {
        let mut g = DVector::zeros(z.z.len());
        for i in 0..z.z.len() {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp.z[i] += step;
            zm.z[i] -= step;
            g[i] = (f(&zp) - f(&zm)) / (2.0 * step);
        }
        g
    }

    #[test]
    fn pair_energy_closed_form() {
        let sys = pair_system();
        let z = symmetric_pair();
        assert_relative_eq!(
            sys.h0_energy(&z).unwrap(),
            -(2.0_f64).ln() / PI,
            max_relative = 1e-14
        );
    }

    #[test]
    fn energy_translation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (sys, z) = random_admissible(&mut rng, 4);
        let mut shifted = z.clone();
        for j in 0..4 {
            shifted.set_point(j, z.point(j) + Vector2::new(0.37, -1.21));
        }
        assert_relative_eq!(
            sys.h0_energy(&z).unwrap(),
            sys.h0_energy(&shifted).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn energy_rotation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (sys, z) = random_admissible(&mut rng, 5);
        let rot = rot_ccw(0.77);
        let zr = Configuration::new(apply_blockwise(&rot, &z.z));
        assert_relative_eq!(
            sys.h0_energy(&z).unwrap(),
            sys.h0_energy(&zr).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn triangle_energy_direct_summation() {
        // unit equilateral triangle (side 1), Γ = (1,2,3): pair products sum
        // to 2+3+6 = 11 and every distance is 1, so the ordered double sum is
        // −(1/2π)·2·11·log 1 = 0; shrink by s to get −(11/π)·log s.
        let sys = VortexSystem::new(vec![1.0, 2.0, 3.0]).unwrap();
        let s = 0.35;
        let h = 3.0_f64.sqrt() / 2.0;
        let z = Configuration::from_points(&[
            (0.0, 0.0),
            (s, 0.0),
            (s / 2.0, s * h),
        ]);
        assert_relative_eq!(sys.h0_energy(&z).unwrap(), -11.0 * s.ln() / PI, max_relative = 1e-13);
    }

    #[test]
    fn pair_gradient_closed_form() {
        let sys = pair_system();
        let z = symmetric_pair();
        let g = sys.h0_gradient(&z).unwrap();
        assert_relative_eq!(g[0], -1.0 / (2.0 * PI), max_relative = 1e-14);
        assert_abs_diff_eq!(g[1], 0.0);
        assert_relative_eq!(g[2], 1.0 / (2.0 * PI), max_relative = 1e-14);
        assert_abs_diff_eq!(g[3], 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let n = rng.gen_range(2..=5);
            let (sys, z) = random_admissible(&mut rng, n);
            let g = sys.h0_gradient(&z).unwrap();
            let fd = fd_gradient(&|c| sys.h0_energy(c).unwrap(), &z, 1e-6);
            assert_relative_eq!(g, fd, max_relative = 1e-6, epsilon = 1e-9);
        }
    }

    #[test]
    fn gradient_sums_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (sys, z) = random_admissible(&mut rng, 6);
        let g = sys.h0_gradient(&z).unwrap();
        let mut total = Vector2::zeros();
        for j in 0..6 {
            total += Vector2::new(g[2 * j], g[2 * j + 1]);
        }
        assert_abs_diff_eq!(total.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn thomson_gradient_is_radial() {
        // regular N-gon at unit radius with Γ ≡ 1: ∇_{z_j}H_0 = −((N−1)/2π) z_j
        for n in 3..=8 {
            let sys = VortexSystem::new(vec![1.0; n]).unwrap();
            let points: Vec<(f64, f64)> = (0..n)
                .map(|j| {
                    let t = 2.0 * PI * j as f64 / n as f64;
                    (t.cos(), t.sin())
                })
                .collect();
            let z = Configuration::from_points(&points);
            let g = sys.h0_gradient(&z).unwrap();
            let c = -(n as f64 - 1.0) / (2.0 * PI);
            for i in 0..2 * n {
                assert_relative_eq!(g[i], c * z.z[i], max_relative = 1e-12, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn hessian_symmetric_and_kills_translations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (sys, z) = random_admissible(&mut rng, 5);
        let h = sys.h0_hessian(&z).unwrap();
        assert_relative_eq!(h.clone(), h.transpose(), max_relative = 1e-12, epsilon = 1e-14);
        for dir in [[1.0, 0.0], [0.0, 1.0]] {
            let mut a = DVector::zeros(10);
            for j in 0..5 {
                a[2 * j] = dir[0];
                a[2 * j + 1] = dir[1];
            }
            assert_abs_diff_eq!((&h * a).norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let n = rng.gen_range(2..=4);
            let (sys, z) = random_admissible(&mut rng, n);
            let h = sys.h0_hessian(&z).unwrap();
            let step = 1e-6;
            for i in 0..2 * n {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp.z[i] += step;
                zm.z[i] -= step;
                let col = (sys.h0_gradient(&zp).unwrap() - sys.h0_gradient(&zm).unwrap()) / (2.0 * step);
                let hcol = h.column(i).into_owned();
                assert_relative_eq!(hcol, col, max_relative = 1e-5, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn pair_hessian_closed_form() {
        // z = ((1,0),(−1,0)), Γ = (1,1): H_0'' = (1/4π)·[[1,0,−1,0],[0,−1,0,1],[−1,0,1,0],[0,1,0,−1]]
        let sys = pair_system();
        let h = sys.h0_hessian(&symmetric_pair()).unwrap();
        let c = 1.0 / (4.0 * PI);
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                c, 0.0, -c, 0.0, //
                0.0, -c, 0.0, c, //
                -c, 0.0, c, 0.0, //
                0.0, c, 0.0, -c,
            ],
        );
        assert_relative_eq!(h, expected, max_relative = 1e-13, epsilon = 1e-15);
    }

    #[test]
    fn collision_detected() {
        let sys = pair_system();
        let z = Configuration::from_points(&[(0.0, 0.0), (0.0, 1e-13)]);
        assert!(matches!(
            sys.h0_energy(&z),
            Err(VortexError::Collision { .. })
        ));
    }

    #[test]
    fn zero_strength_rejected() {
        assert!(matches!(
            VortexSystem::new(vec![1.0, 0.0]),
            Err(VortexError::InvalidCirculation { index: 1 })
        ));
    }

    #[test]
    fn plane_domain_energy_is_free_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let (sys, z) = random_admissible(&mut rng, 3);
        let rep = sys.domain_energy(&z).unwrap();
        assert_eq!(rep.value, sys.h0_energy(&z).unwrap());
        assert_eq!(rep.gradient, sys.h0_gradient(&z).unwrap());
    }

    #[test]
    fn vector_field_conserves_energy_instantaneously() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (sys, z) = random_admissible(&mut rng, 4);
        let grad = sys.h0_gradient(&z).unwrap();
        let zdot = sys.vector_field(&z, 0.0).unwrap();
        assert_abs_diff_eq!(grad.dot(&zdot), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pair_velocities_tangent() {
        let sys = pair_system();
        let zdot = sys.vector_field(&symmetric_pair(), 0.0).unwrap();
        // equal speed, opposite sense, orthogonal to the radius
        assert_abs_diff_eq!(zdot[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(zdot[2], 0.0, epsilon = 1e-15);
        assert_relative_eq!(zdot[1], -zdot[3], max_relative = 1e-14);
        assert_relative_eq!(zdot[1], 1.0 / (2.0 * PI), max_relative = 1e-14);
    }

    #[test]
    fn m_gamma_commutes_with_j_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (sys, z) = random_admissible(&mut rng, 5);
        let a = sys.m_gamma_apply(&j_n(&z.z));
        let b = j_n(&sys.m_gamma_apply(&z.z));
        assert_relative_eq!(a, b, max_relative = 1e-15);
    }
}
