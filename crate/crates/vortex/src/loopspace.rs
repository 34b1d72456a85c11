//! Truncated Fourier loop space for the 2π-periodic problem.
//!
//! Loops are expanded in the rotating-mode basis u(t) = Σ_k B_k(t) α_k with
//! B_k(t) = e^{−k J_N t} and α_k ∈ ℝ^{2N}, k = −n…n. On this basis the
//! operator L = (id−Δ)^{-1}(−J_N M_Γ d/dt) is the Fourier multiplier
//! L(B_k α) = −k/(1+k²)·M_Γ B_k α, and the gradient of the action
//! 𝔍(r,u) = ½∫⟨M_Γ u̇, J_N u⟩ − ∫H_r(u) with respect to the H¹ inner product
//! ⟨u,v⟩_X = 2π Σ_k (1+k²)⟨α_k, β_k⟩ is Φ_r(u) = L u − (id−Δ)^{-1}[∇H_r(u(·))].
//!
//! The nonlinear terms are evaluated at m = 4n+4 equispaced nodes, where the
//! discrete mode transform is exact for band-limited loops.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::equilibria::SymmetryElement;
use crate::error::{Result, VortexError};
use crate::model::{rot_ccw, Configuration, VortexSystem};

/// A real trigonometric loop in ℝ^{2N}, stored as rotating-mode coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierLoop {
    n: usize,
    n_vortices: usize,
    /// Packed coefficients: mode k at block (k+n), each of length 2N.
    packed: DVector<f64>,
}

impl FourierLoop {
    pub fn zeros(n: usize, n_vortices: usize) -> Self {
        FourierLoop {
            n,
            n_vortices,
            packed: DVector::zeros((2 * n + 1) * 2 * n_vortices),
        }
    }

    /// The loop t ↦ e^{−k J_N t} α on a single mode.
    pub fn single_mode(n: usize, n_vortices: usize, k: i32, alpha: &DVector<f64>) -> Self {
        let mut u = Self::zeros(n, n_vortices);
        u.set_coeff(k, alpha);
        u
    }

    pub fn truncation(&self) -> usize {
        self.n
    }

    pub fn n_vortices(&self) -> usize {
        self.n_vortices
    }

    pub fn dim(&self) -> usize {
        self.packed.len()
    }

    fn block(&self, k: i32) -> usize {
        debug_assert!(k.unsigned_abs() as usize <= self.n);
        (k + self.n as i32) as usize * 2 * self.n_vortices
    }

    pub fn coeff(&self, k: i32) -> DVector<f64> {
        let b = self.block(k);
        self.packed.rows(b, 2 * self.n_vortices).into_owned()
    }

    pub fn set_coeff(&mut self, k: i32, alpha: &DVector<f64>) {
        let b = self.block(k);
        self.packed.rows_mut(b, 2 * self.n_vortices).copy_from(alpha);
    }

    pub fn as_packed(&self) -> &DVector<f64> {
        &self.packed
    }

    pub fn from_packed(n: usize, n_vortices: usize, packed: DVector<f64>) -> Self {
        assert_eq!(packed.len(), (2 * n + 1) * 2 * n_vortices);
        FourierLoop {
            n,
            n_vortices,
            packed,
        }
    }

    /// u(t) = Σ_k B_k(t) α_k.
    pub fn evaluate(&self, t: f64) -> Configuration {
        let mut z = DVector::zeros(2 * self.n_vortices);
        for k in -(self.n as i32)..=self.n as i32 {
            let rot = rot_ccw(k as f64 * t);
            let b = self.block(k);
            for j in 0..self.n_vortices {
                let a = Vector2::new(self.packed[b + 2 * j], self.packed[b + 2 * j + 1]);
                let w = rot * a;
                z[2 * j] += w[0];
                z[2 * j + 1] += w[1];
            }
        }
        Configuration::new(z)
    }

    /// Equispaced collocation nodes t_i = 2πi/m with m = 4n+4.
    pub fn node_count(&self) -> usize {
        4 * self.n + 4
    }

    pub fn nodes(&self) -> Vec<f64> {
        let m = self.node_count();
        (0..m).map(|i| 2.0 * std::f64::consts::PI * i as f64 / m as f64).collect()
    }

    pub fn evaluate_nodes(&self) -> Vec<Configuration> {
        self.nodes().iter().map(|&t| self.evaluate(t)).collect()
    }

    /// Exact modal projection of nodal values: α_k = (1/m) Σ_i e^{k J_N t_i} v(t_i),
    /// exact whenever v is band-limited to |k| ≤ (m−1)/2.
    pub fn from_nodes(n: usize, n_vortices: usize, values: &[DVector<f64>]) -> Self {
        let m = values.len();
        let mut out = Self::zeros(n, n_vortices);
        for k in -(n as i32)..=n as i32 {
            let mut alpha = DVector::zeros(2 * n_vortices);
            for (i, v) in values.iter().enumerate() {
                let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                // e^{k J t} rotates clockwise by k t
                let rot = rot_ccw(-(k as f64) * t);
                for j in 0..n_vortices {
                    let w = rot * Vector2::new(v[2 * j], v[2 * j + 1]);
                    alpha[2 * j] += w[0];
                    alpha[2 * j + 1] += w[1];
                }
            }
            alpha /= m as f64;
            out.set_coeff(k, &alpha);
        }
        out
    }

    /// Mode-wise derivative: (u̇)_k = −k J_N α_k.
    pub fn derivative(&self) -> FourierLoop {
        let mut out = Self::zeros(self.n, self.n_vortices);
        for k in -(self.n as i32)..=self.n as i32 {
            let a = self.coeff(k);
            out.set_coeff(k, &(-(k as f64) * crate::model::j_n(&a)));
        }
        out
    }

    /// Time shift (θ*u)(t) = u(t+θ): α_k ↦ e^{−k J_N θ} α_k.
    pub fn time_shift(&self, theta: f64) -> FourierLoop {
        let mut out = Self::zeros(self.n, self.n_vortices);
        for k in -(self.n as i32)..=self.n as i32 {
            let rot = rot_ccw(k as f64 * theta);
            let a = self.coeff(k);
            out.set_coeff(k, &crate::model::apply_blockwise(&rot, &a));
        }
        out
    }

    /// ⟨u,v⟩_X = 2π Σ_k (1+k²) ⟨α_k, β_k⟩.
    pub fn h1_inner(&self, other: &FourierLoop) -> f64 {
        let mut s = 0.0;
        for k in -(self.n as i32)..=self.n as i32 {
            let w = 1.0 + (k * k) as f64;
            if k.unsigned_abs() as usize <= other.n {
                s += w * self.coeff(k).dot(&other.coeff(k));
            }
        }
        2.0 * std::f64::consts::PI * s
    }

    pub fn h1_norm(&self) -> f64 {
        self.h1_inner(self).sqrt()
    }

    /// ⟨u,v⟩_{L²} = 2π Σ_k ⟨α_k, β_k⟩.
    pub fn l2_inner(&self, other: &FourierLoop) -> f64 {
        let mut s = 0.0;
        for k in -(self.n as i32)..=self.n as i32 {
            if k.unsigned_abs() as usize <= other.n {
                s += self.coeff(k).dot(&other.coeff(k));
            }
        }
        2.0 * std::f64::consts::PI * s
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_inner(self).sqrt()
    }

    /// Mean of the constant mode over the vortices, replicated: P_D u.
    pub fn mean_translation(&self) -> Vector2<f64> {
        let a0 = self.coeff(0);
        let mut mean = Vector2::zeros();
        for j in 0..self.n_vortices {
            mean += Vector2::new(a0[2 * j], a0[2 * j + 1]);
        }
        mean / self.n_vortices as f64
    }

    /// Energy fraction carried by modes |k| > n/2; a resolution diagnostic.
    pub fn tail_energy_fraction(&self) -> f64 {
        let total = self.h1_inner(self);
        if total == 0.0 {
            return 0.0;
        }
        let mut tail = 0.0;
        for k in -(self.n as i32)..=self.n as i32 {
            if k.unsigned_abs() as usize > self.n / 2 {
                tail += (1.0 + (k * k) as f64) * self.coeff(k).norm_squared();
            }
        }
        2.0 * std::f64::consts::PI * tail / total
    }

    /// Re-embed into a (possibly larger) truncation.
    pub fn resize(&self, n_new: usize) -> FourierLoop {
        let mut out = Self::zeros(n_new, self.n_vortices);
        let lim = self.n.min(n_new) as i32;
        for k in -lim..=lim {
            out.set_coeff(k, &self.coeff(k));
        }
        out
    }
}

impl Serialize for FourierLoop {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            n: usize,
            n_vortices: usize,
            coefficients: Vec<&'a [f64]>,
        }
        let step = 2 * self.n_vortices;
        let coefficients = (0..2 * self.n + 1)
            .map(|b| &self.packed.as_slice()[b * step..(b + 1) * step])
            .collect();
        Repr {
            n: self.n,
            n_vortices: self.n_vortices,
            coefficients,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FourierLoop {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            n: usize,
            n_vortices: usize,
            coefficients: Vec<Vec<f64>>,
        }
        let r = Repr::deserialize(d)?;
        if r.coefficients.len() != 2 * r.n + 1
            || r.coefficients.iter().any(|c| c.len() != 2 * r.n_vortices)
        {
            return Err(serde::de::Error::custom("inconsistent mode table"));
        }
        let packed = DVector::from_iterator(
            (2 * r.n + 1) * 2 * r.n_vortices,
            r.coefficients.into_iter().flatten(),
        );
        Ok(FourierLoop::from_packed(r.n, r.n_vortices, packed))
    }
}

/// L u = (id−Δ)^{-1}(−J_N M_Γ u̇): per mode −k/(1+k²)·M_Γ α_k.
pub fn l_operator(sys: &VortexSystem, u: &FourierLoop) -> FourierLoop {
    let mut out = FourierLoop::zeros(u.n, u.n_vortices);
    for k in -(u.n as i32)..=u.n as i32 {
        let f = -(k as f64) / (1.0 + (k * k) as f64);
        out.set_coeff(k, &(f * sys.m_gamma_apply(&u.coeff(k))));
    }
    out
}

fn smoothing(u: &FourierLoop) -> FourierLoop {
    let mut out = FourierLoop::zeros(u.n, u.n_vortices);
    for k in -(u.n as i32)..=u.n as i32 {
        out.set_coeff(k, &(u.coeff(k) / (1.0 + (k * k) as f64)));
    }
    out
}

fn loop_error(e: VortexError, sample: usize) -> VortexError {
    match e {
        VortexError::Collision { distance, .. } => {
            VortexError::CollisionOnLoop { sample, distance }
        }
        VortexError::OutsideDomain { .. } => VortexError::OutsideDomainOnLoop { sample },
        other => other,
    }
}

/// ∇H_r evaluated at every collocation node of u, as nodal vectors.
fn hr_gradient_nodes(
    sys: &VortexSystem,
    a0: Vector2<f64>,
    r: f64,
    u: &FourierLoop,
) -> Result<Vec<DVector<f64>>> {
    u.evaluate_nodes()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            sys.hr_energy_at(a0, r, z)
                .map(|rep| rep.gradient)
                .map_err(|e| loop_error(e, i))
        })
        .collect()
}

/// 𝔍(r,u) = ½∫⟨M_Γ u̇, J_N u⟩ dt − ∫H_r(u) dt, quadratic part exact.
pub fn action(sys: &VortexSystem, a0: Vector2<f64>, r: f64, u: &FourierLoop) -> Result<f64> {
    let mut quad = 0.0;
    for k in -(u.n as i32)..=u.n as i32 {
        let a = u.coeff(k);
        quad -= std::f64::consts::PI * k as f64 * sys.m_gamma_apply(&a).dot(&a);
    }
    let nodes = u.evaluate_nodes();
    let mut pot = 0.0;
    for (i, z) in nodes.iter().enumerate() {
        pot += sys
            .hr_energy_at(a0, r, z)
            .map_err(|e| loop_error(e, i))?
            .value;
    }
    pot *= 2.0 * std::f64::consts::PI / nodes.len() as f64;
    Ok(quad - pot)
}

/// Φ_r(u) = L u − (id−Δ)^{-1}[∇H_r(u(·))], the H¹ gradient of the action.
pub fn phi_gradient(
    sys: &VortexSystem,
    a0: Vector2<f64>,
    r: f64,
    u: &FourierLoop,
) -> Result<FourierLoop> {
    let grads = hr_gradient_nodes(sys, a0, r, u)?;
    let modal = FourierLoop::from_nodes(u.n, u.n_vortices, &grads);
    let mut out = l_operator(sys, u);
    out.packed -= smoothing(&modal).packed;
    Ok(out)
}

/// Jacobian of Φ_r at u as a dense matrix on packed modal coordinates.
pub fn phi_jacobian(
    sys: &VortexSystem,
    a0: Vector2<f64>,
    r: f64,
    u: &FourierLoop,
) -> Result<DMatrix<f64>> {
    let n = u.n;
    let nv = u.n_vortices;
    let dim = u.dim();
    let m = u.node_count();
    let nodes = u.nodes();
    // H_r'' at every node
    let mut hess: Vec<DMatrix<f64>> = Vec::with_capacity(m);
    for (i, z) in u.evaluate_nodes().iter().enumerate() {
        let rep = sys.hr_energy_at(a0, r, z).map_err(|e| loop_error(e, i))?;
        hess.push(rep.hessian.expect("hr_energy always builds the hessian"));
    }
    let mut jac = DMatrix::zeros(dim, dim);
    // diagonal part: L
    for k in -(n as i32)..=n as i32 {
        let f = -(k as f64) / (1.0 + (k * k) as f64);
        let b = (k + n as i32) as usize * 2 * nv;
        for j in 0..nv {
            jac[(b + 2 * j, b + 2 * j)] = f * sys.gamma()[j];
            jac[(b + 2 * j + 1, b + 2 * j + 1)] = f * sys.gamma()[j];
        }
    }
    // nonlinear part: column for basis vector (mode l, coordinate c) is
    // −(id−Δ)^{-1} modal[ H''(u(t_i)) B_l(t_i) e_c ]
    let mut rots: Vec<Vec<Matrix2<f64>>> = Vec::with_capacity(2 * n + 1);
    for l in -(n as i32)..=n as i32 {
        rots.push(nodes.iter().map(|&t| rot_ccw(l as f64 * t)).collect());
    }
    let mut nodal = vec![DVector::zeros(2 * nv); m];
    for l in -(n as i32)..=n as i32 {
        let lb = (l + n as i32) as usize;
        for c in 0..2 * nv {
            let j = c / 2;
            for (i, h) in hess.iter().enumerate() {
                let rot = &rots[lb][i];
                // B_l(t_i) e_c has support on block j only
                let col = Vector2::new(rot[(0, c % 2)], rot[(1, c % 2)]);
                let mut w = DVector::zeros(2 * nv);
                for row in 0..2 * nv {
                    w[row] = h[(row, 2 * j)] * col[0] + h[(row, 2 * j + 1)] * col[1];
                }
                nodal[i] = w;
            }
            let modal = FourierLoop::from_nodes(n, nv, &nodal);
            let sm = smoothing(&modal);
            let col_index = lb * 2 * nv + c;
            for row in 0..dim {
                jac[(row, col_index)] -= sm.packed[row];
            }
        }
    }
    Ok(jac)
}

/// Diagonal H¹ weights √(2π(1+k²)) on packed coordinates; conjugating the
/// packed Jacobian by these makes singular values meaningful in X.
pub fn h1_weights(n: usize, n_vortices: usize) -> DVector<f64> {
    let mut w = DVector::zeros((2 * n + 1) * 2 * n_vortices);
    for k in -(n as i32)..=n as i32 {
        let b = (k + n as i32) as usize * 2 * n_vortices;
        let v = (2.0 * std::f64::consts::PI * (1.0 + (k * k) as f64)).sqrt();
        for c in 0..2 * n_vortices {
            w[b + c] = v;
        }
    }
    w
}

/// The loop space X^γ of loops fixed by γ = (σ, θ): σ*(u(t+θ)) = u(t).
#[derive(Clone, Debug)]
pub struct SymmetrySubspace {
    pub gamma: SymmetryElement,
    n_vortices: usize,
}

impl SymmetrySubspace {
    pub fn new(sys: &VortexSystem, gamma: SymmetryElement) -> Result<Self> {
        gamma.validate(sys.n())?;
        for j in 0..sys.n() {
            if sys.gamma()[gamma.sigma[j]] != sys.gamma()[j] {
                return Err(VortexError::StrengthMismatch);
            }
        }
        Ok(SymmetrySubspace {
            gamma,
            n_vortices: sys.n(),
        })
    }

    /// γ applied to a loop: modes α_k ↦ σ*(B_k(θ) α_k).
    pub fn apply(&self, u: &FourierLoop) -> FourierLoop {
        let mut out = FourierLoop::zeros(u.n, u.n_vortices);
        for k in -(u.n as i32)..=u.n as i32 {
            let shifted = crate::model::apply_blockwise(
                &rot_ccw(k as f64 * self.gamma.theta),
                &u.coeff(k),
            );
            out.set_coeff(k, &self.gamma.permute(&shifted));
        }
        out
    }

    /// H¹-orthogonal projection onto X^γ (group average).
    pub fn project(&self, u: &FourierLoop) -> FourierLoop {
        let p = self.gamma.order();
        let mut acc = u.clone();
        let mut current = u.clone();
        for _ in 1..p {
            current = self.apply(&current);
            acc.packed += &current.packed;
        }
        acc.packed /= p as f64;
        acc
    }

    /// Distance of u from X^γ relative to its norm.
    pub fn defect(&self, u: &FourierLoop) -> f64 {
        let proj = self.project(u);
        let mut diff = u.clone();
        diff.packed -= &proj.packed;
        let nu = u.h1_norm();
        if nu == 0.0 {
            0.0
        } else {
            diff.h1_norm() / nu
        }
    }

    /// Orthonormal basis of X^γ_n as packed coordinate columns (ℓ²-orthonormal
    /// per mode, hence H¹-orthogonal since modes never mix).
    pub fn basis(&self, n: usize) -> DMatrix<f64> {
        let nv = self.n_vortices;
        let p = self.gamma.order();
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for k in -(n as i32)..=n as i32 {
            // per-mode projector: average of v ↦ σ*(B_k(jθ) v)
            let mut pk = DMatrix::zeros(2 * nv, 2 * nv);
            for c in 0..2 * nv {
                let mut v = DVector::zeros(2 * nv);
                v[c] = 1.0;
                let mut acc = v.clone();
                let mut cur = v;
                for _ in 1..p {
                    cur = self.gamma.permute(&crate::model::apply_blockwise(
                        &rot_ccw(k as f64 * self.gamma.theta),
                        &cur,
                    ));
                    acc += &cur;
                }
                acc /= p as f64;
                pk.set_column(c, &acc);
            }
            // orthonormal columns spanning the image
            let svd = pk.svd(true, false);
            let u_mat = svd.u.as_ref().unwrap();
            for (i, s) in svd.singular_values.iter().enumerate() {
                if *s > 0.5 {
                    // projector eigenvalues are 0 or 1
                    let mut col = DVector::zeros((2 * n + 1) * 2 * nv);
                    let b = (k + n as i32) as usize * 2 * nv;
                    for row in 0..2 * nv {
                        col[b + row] = u_mat[(row, i)];
                    }
                    cols.push(col);
                }
            }
        }
        let mut basis = DMatrix::zeros((2 * n + 1) * 2 * nv, cols.len());
        for (i, c) in cols.iter().enumerate() {
            basis.set_column(i, c);
        }
        basis
    }
}

/// Pins the S¹ phase: u ↦ ⟨u − u_ref, du_ref/dt⟩_{L²}.
#[derive(Clone, Debug)]
pub struct PhaseCondition {
    pub u_ref: FourierLoop,
    du_ref: FourierLoop,
}

impl PhaseCondition {
    pub fn new(u_ref: FourierLoop) -> Self {
        let du_ref = u_ref.derivative();
        PhaseCondition { u_ref, du_ref }
    }

    pub fn value(&self, u: &FourierLoop) -> f64 {
        let mut diff = u.clone();
        diff.packed -= &self.u_ref.resize(u.n).packed;
        diff.l2_inner(&self.du_ref)
    }

    /// Gradient row on packed coordinates: 2π (du_ref)_k per mode.
    pub fn gradient_row(&self, n: usize, n_vortices: usize) -> DVector<f64> {
        let mut row = DVector::zeros((2 * n + 1) * 2 * n_vortices);
        let lim = (self.du_ref.n.min(n)) as i32;
        for k in -lim..=lim {
            let b = (k + n as i32) as usize * 2 * n_vortices;
            let a = self.du_ref.coeff(k);
            for c in 0..2 * n_vortices {
                row[b + c] = 2.0 * std::f64::consts::PI * a[c];
            }
        }
        row
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Pin the translation mean P_D u to zero (whole-plane r = 0 problems,
    /// where Φ₀ is translation invariant).
    pub pin_translations: bool,
    pub max_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iterations: 50,
            tolerance: 1e-10,
            pin_translations: false,
            max_step: 10.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub u: FourierLoop,
    pub iterations: usize,
    pub residual_norm: f64,
    pub tail_energy_fraction: f64,
}

/// Newton solve of Φ_r(u) = 0 with the phase pin (and optional symmetry
/// restriction and translation pins), using the analytic Jacobian.
pub fn newton_periodic(
    sys: &VortexSystem,
    a0: Vector2<f64>,
    r: f64,
    u_guess: &FourierLoop,
    phase: &PhaseCondition,
    subspace: Option<&SymmetrySubspace>,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let n = u_guess.truncation();
    let nv = u_guess.n_vortices();
    let dim = u_guess.dim();
    // feasibility of the initial guess, reported before iterating
    hr_gradient_nodes(sys, a0, r, u_guess).map_err(|e| match e {
        VortexError::OutsideDomainOnLoop { sample } => {
            VortexError::OutsideDomainOnLoop { sample }
        }
        other => other,
    })?;

    let basis = subspace.map(|s| s.basis(n));
    let reduce = |v: &DVector<f64>| -> DVector<f64> {
        match &basis {
            Some(b) => b.transpose() * v,
            None => v.clone(),
        }
    };
    let expand = |v: &DVector<f64>| -> DVector<f64> {
        match &basis {
            Some(b) => b * v,
            None => v.clone(),
        }
    };

    let mut u = match subspace {
        Some(s) => s.project(u_guess),
        None => u_guess.clone(),
    };

    let mut constraint_rows: Vec<DVector<f64>> = vec![phase.gradient_row(n, nv)];
    if opts.pin_translations {
        for c in 0..2 {
            let mut row = DVector::zeros(dim);
            let b = n * 2 * nv; // k = 0 block
            for j in 0..nv {
                row[b + 2 * j + c] = 1.0 / nv as f64;
            }
            constraint_rows.push(row);
        }
    }

    let mut residual = phi_gradient(sys, a0, r, &u)?;
    let mut res_norm = residual.h1_norm();
    for it in 0..opts.max_iterations {
        let cons_vals: Vec<f64> = {
            let mut v = vec![phase.value(&u)];
            if opts.pin_translations {
                let t = u.mean_translation();
                v.push(t[0]);
                v.push(t[1]);
            }
            v
        };
        let cons_norm = cons_vals.iter().map(|c| c * c).sum::<f64>().sqrt();
        if res_norm <= opts.tolerance && cons_norm <= opts.tolerance {
            return Ok(NewtonOutcome {
                tail_energy_fraction: u.tail_energy_fraction(),
                u,
                iterations: it,
                residual_norm: res_norm,
            });
        }

        let jac = phi_jacobian(sys, a0, r, &u)?;
        let red_dim = basis.as_ref().map_or(dim, |b| b.ncols());
        let rows = red_dim + constraint_rows.len();
        let mut system = DMatrix::zeros(rows, red_dim);
        let reduced_jac = match &basis {
            Some(b) => b.transpose() * &jac * b,
            None => jac,
        };
        system.view_mut((0, 0), (red_dim, red_dim)).copy_from(&reduced_jac);
        for (i, row) in constraint_rows.iter().enumerate() {
            let rr = reduce(row);
            for c in 0..red_dim {
                system[(red_dim + i, c)] = rr[c];
            }
        }
        let mut rhs = DVector::zeros(rows);
        let red_res = reduce(&residual.packed);
        for i in 0..red_dim {
            rhs[i] = -red_res[i];
        }
        for (i, c) in cons_vals.iter().enumerate() {
            rhs[red_dim + i] = -c;
        }

        // rank check before the least-squares solve
        let svd = system.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let kernel = svd
            .singular_values
            .iter()
            .filter(|s| **s <= 1e-12 * smax.max(1.0))
            .count();
        if kernel > 0 {
            return Err(VortexError::SingularJacobian { kernel_dim: kernel });
        }
        let step_red = svd
            .solve(&rhs, 1e-14 * smax)
            .map_err(|_| VortexError::SingularJacobian { kernel_dim: 0 })?;
        let mut step = expand(&step_red);
        let step_norm = step.norm();
        if step_norm > opts.max_step {
            step *= opts.max_step / step_norm;
        }

        // backtracking on the residual norm
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..10 {
            let mut trial = u.clone();
            trial.packed += lambda * &step;
            match phi_gradient(sys, a0, r, &trial) {
                Ok(res_trial) => {
                    let trial_norm = res_trial.h1_norm();
                    if trial_norm < res_norm || res_norm <= opts.tolerance {
                        u = trial;
                        residual = res_trial;
                        res_norm = trial_norm;
                        accepted = true;
                        break;
                    }
                }
                Err(_) => {}
            }
            lambda *= 0.5;
        }
        if !accepted {
            // full step anyway if constraints still need fixing, else stall
            let mut trial = u.clone();
            trial.packed += &step;
            if let Ok(res_trial) = phi_gradient(sys, a0, r, &trial) {
                let trial_norm = res_trial.h1_norm();
                if trial_norm < 10.0 * opts.tolerance {
                    u = trial;
                    residual = res_trial;
                    res_norm = trial_norm;
                    continue;
                }
            }
            return Err(VortexError::NoConvergence {
                iterations: it,
                residual: res_norm,
            });
        }
    }
    Err(VortexError::NoConvergence {
        iterations: opts.max_iterations,
        residual: res_norm,
    })
}

/// L² distance between the S¹ orbits: min_θ ‖u − θ*v‖_{L²}, with the argmin.
pub fn orbit_distance(u: &FourierLoop, v: &FourierLoop) -> (f64, f64) {
    // the difference loop is formed explicitly so the distance stays accurate
    // near zero, where norm/inner-product cancellation would swamp it
    let n = u.n.max(v.n);
    let u_big = u.resize(n);
    let dist_sq = |theta: f64| {
        let mut diff = v.time_shift(theta).resize(n);
        diff.packed -= &u_big.packed;
        diff.l2_inner(&diff)
    };
    let mut best_theta = 0.0;
    let mut best = f64::INFINITY;
    let coarse = 256;
    for i in 0..coarse {
        let th = 2.0 * std::f64::consts::PI * i as f64 / coarse as f64;
        let d = dist_sq(th);
        if d < best {
            best = d;
            best_theta = th;
        }
    }
    // golden-section refinement around the best sample
    let gr = (5.0_f64.sqrt() - 1.0) / 2.0;
    let span = 2.0 * std::f64::consts::PI / coarse as f64;
    let (mut a, mut b) = (best_theta - span, best_theta + span);
    let (mut c, mut d) = (b - gr * (b - a), a + gr * (b - a));
    for _ in 0..60 {
        if dist_sq(c) < dist_sq(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - gr * (b - a);
        d = a + gr * (b - a);
    }
    let theta = 0.5 * (a + b);
    (dist_sq(theta).sqrt(), theta)
}
