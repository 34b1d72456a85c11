//! Finite-dimensional S¹-equivariant degree for symmetric gradient maps,
//! decomposed over the isotypical components of the circle action, plus the
//! product certificate that a seeded branch carries nonzero degree.
//!
//! On the fixed-point component V₀ the degree is the Brouwer sign; on each
//! rotating component V_k it is half the Morse index of the block, signed by
//! the fixed-point orientation. The infinite-dimensional degree of the loop
//! problem enters only through its stabilized truncation: the slice Jacobian
//! of Φ₀ transverse to the critical orbit, computed at truncation n and
//! re-checked at 2n.

use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::equilibria::RelativeEquilibrium;
use crate::error::{Result, VortexError};
use crate::loopspace::{h1_weights, phi_jacobian, FourierLoop, SymmetrySubspace};
use crate::model::VortexSystem;

/// One isotypical block: the circle acts trivially on V₀ and by rotation with
/// speed k on each 2-plane of V_k, k ≥ 1.
#[derive(Clone, Debug)]
pub struct IsotypicalBlock {
    pub k: usize,
    pub matrix: DMatrix<f64>,
}

/// A symmetric equivariant linear map, stored blockwise per isotypical
/// component. Construction validates symmetry, equivariance, and the pairing
/// of eigenvalues on the rotating components.
#[derive(Clone, Debug)]
pub struct IsotypicalMap {
    blocks: Vec<IsotypicalBlock>,
}

/// blockdiag(J, …, J) generating the rotation action on a 2m-dimensional
/// component.
fn rotation_generator(dim: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(dim, dim);
    for b in 0..dim / 2 {
        g[(2 * b, 2 * b + 1)] = 1.0;
        g[(2 * b + 1, 2 * b)] = -1.0;
    }
    g
}

impl IsotypicalMap {
    pub fn new(blocks: Vec<(usize, DMatrix<f64>)>) -> Result<Self> {
        let mut out: Vec<IsotypicalBlock> = Vec::with_capacity(blocks.len());
        for (k, matrix) in blocks {
            if !matrix.is_square() || matrix.nrows() == 0 {
                return Err(VortexError::Config(format!(
                    "isotypical block {k} must be square and nonempty"
                )));
            }
            if out.iter().any(|b| b.k == k) {
                return Err(VortexError::Config(format!(
                    "isotypical component {k} listed twice"
                )));
            }
            let dim = matrix.nrows();
            let scale = 1.0 + matrix.amax();
            let sym_defect = (&matrix - matrix.transpose()).amax();
            if sym_defect > 1e-12 * scale {
                return Err(VortexError::Config(format!(
                    "block {k} is not symmetric (defect {sym_defect:.3e})"
                )));
            }
            if k >= 1 {
                if dim % 2 != 0 {
                    return Err(VortexError::Config(format!(
                        "rotating component {k} must have even dimension, got {dim}"
                    )));
                }
                let g = rotation_generator(dim);
                let comm = (&matrix * &g - &g * &matrix).amax();
                if comm > 1e-12 * scale {
                    return Err(VortexError::Config(format!(
                        "block {k} does not commute with the rotation action (defect {comm:.3e})"
                    )));
                }
                // eigenvalues of a symmetric rotation-commuting block pair up
                let mut eigs: Vec<f64> =
                    matrix.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
                eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for pair in eigs.chunks(2) {
                    if (pair[0] - pair[1]).abs() > 1e-8 * scale {
                        return Err(VortexError::Config(format!(
                            "block {k} eigenvalues {:.6e}, {:.6e} fail to pair; \
                             the block is not equivariant",
                            pair[0], pair[1]
                        )));
                    }
                }
            }
            out.push(IsotypicalBlock { k, matrix });
        }
        out.sort_by_key(|b| b.k);
        Ok(IsotypicalMap { blocks: out })
    }

    pub fn blocks(&self) -> &[IsotypicalBlock] {
        &self.blocks
    }

    /// Direct sum, component by component.
    pub fn direct_sum(&self, other: &IsotypicalMap) -> Result<IsotypicalMap> {
        let mut merged: BTreeMap<usize, DMatrix<f64>> = BTreeMap::new();
        for b in self.blocks.iter().chain(other.blocks.iter()) {
            merged
                .entry(b.k)
                .and_modify(|m| {
                    let (p, q) = (m.nrows(), b.matrix.nrows());
                    let mut sum = DMatrix::zeros(p + q, p + q);
                    sum.view_mut((0, 0), (p, p)).copy_from(m);
                    sum.view_mut((p, p), (q, q)).copy_from(&b.matrix);
                    *m = sum;
                })
                .or_insert_with(|| b.matrix.clone());
        }
        IsotypicalMap::new(merged.into_iter().collect())
    }
}

/// Finitely supported degree sequence (d₀, d₁, …), kept sparse: only nonzero
/// entries are stored, serialized as a {k: d_k} map.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DegreeVector(BTreeMap<usize, i64>);

impl DegreeVector {
    pub fn unit() -> Self {
        DegreeVector([(0, 1)].into())
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (usize, i64)>) -> Self {
        DegreeVector(entries.into_iter().filter(|&(_, d)| d != 0).collect())
    }

    pub fn get(&self, k: usize) -> i64 {
        self.0.get(&k).copied().unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.0.iter().map(|(&k, &d)| (k, d))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
}

/// Degree of an invertible symmetric equivariant map: d₀ is the orientation
/// sign of the fixed-point block, and d_k is half the Morse index of the k-th
/// block carrying that sign.
pub fn linear_degree(map: &IsotypicalMap) -> Result<DegreeVector> {
    let mut negative_counts: Vec<(usize, usize)> = Vec::new();
    let mut sign = 1i64;
    for block in map.blocks() {
        let eigs = block.matrix.clone().symmetric_eigen().eigenvalues;
        let min_abs = eigs.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
        if min_abs <= 1e-10 {
            return Err(VortexError::SingularBlock {
                k: block.k as i32,
                sigma_min: min_abs,
            });
        }
        let mu = eigs.iter().filter(|&&e| e < 0.0).count();
        if block.k == 0 {
            sign = if mu % 2 == 0 { 1 } else { -1 };
        } else {
            negative_counts.push((block.k, mu));
        }
    }
    let mut entries = vec![(0usize, sign)];
    for (k, mu) in negative_counts {
        entries.push((k, sign * (mu / 2) as i64));
    }
    Ok(DegreeVector::from_entries(entries))
}

/// Degree of a product map: c₀ = a₀b₀ and c_k = a₀b_k + a_k b₀.
pub fn multiply_degrees(a: &DegreeVector, b: &DegreeVector) -> DegreeVector {
    let a0 = a.get(0);
    let b0 = b.get(0);
    let mut entries: BTreeMap<usize, i64> = BTreeMap::new();
    entries.insert(0, a0 * b0);
    for (k, ak) in a.entries().filter(|&(k, _)| k != 0) {
        *entries.entry(k).or_insert(0) += ak * b0;
    }
    for (k, bk) in b.entries().filter(|&(k, _)| k != 0) {
        *entries.entry(k).or_insert(0) += a0 * bk;
    }
    DegreeVector::from_entries(entries)
}

/// |d_k| of an isolated orbit of zeros with isotropy Z_k: equal to 1 exactly
/// when the Jacobian transverse to the orbit is invertible.
pub fn orbit_degree_magnitude(
    jacobian_on_normal_slice: &DMatrix<f64>,
    isotropy_k: usize,
) -> Result<u32> {
    if isotropy_k == 0 {
        return Err(VortexError::Config(
            "isotropy index must be at least 1".into(),
        ));
    }
    if !jacobian_on_normal_slice.is_square() {
        return Err(VortexError::Config(
            "slice Jacobian must be square".into(),
        ));
    }
    let svd = jacobian_on_normal_slice.clone().svd(false, false);
    let sigma_min = svd.singular_values.iter().fold(f64::INFINITY, |m, s| m.min(*s));
    if sigma_min <= 1e-10 {
        return Err(VortexError::DegenerateOrbit { sigma_min });
    }
    Ok(1)
}

/// Jacobian of the free-system loop gradient Φ₀ at the relative-equilibrium
/// loop, restricted to the orthogonal complement of the degenerate directions
/// (the two constant translations and the time-shift direction) inside the
/// symmetric subspace. Entries are taken in the loop-space inner product, so
/// the result is symmetric and its invertibility is exactly orbit
/// non-degeneracy.
pub fn orbit_slice_jacobian(
    sys: &VortexSystem,
    z: &FourierLoop,
    subspace: Option<&SymmetrySubspace>,
    n: usize,
) -> Result<DMatrix<f64>> {
    let plane = VortexSystem::new(sys.gamma().to_vec())?;
    if z.n_vortices() != plane.n() {
        return Err(VortexError::DimensionMismatch {
            expected: plane.n(),
            got: z.n_vortices(),
        });
    }
    let z_n = z.resize(n);
    if let Some(s) = subspace {
        let defect = s.defect(&z_n);
        if defect > 1e-8 {
            return Err(VortexError::NotSymmetric {
                defect,
                tol: 1e-8,
            });
        }
    }
    let nv = plane.n();
    let dim = z_n.dim();
    let weights = h1_weights(n, nv);
    let jac = phi_jacobian(&plane, Vector2::zeros(), 0.0, &z_n)?;
    // similarity to coordinates in which the loop inner product is Euclidean
    let mut jac_e = jac;
    for i in 0..dim {
        for j in 0..dim {
            jac_e[(i, j)] *= weights[i] / weights[j];
        }
    }
    // orthonormal basis of the ambient subspace, in the same coordinates
    let ambient = match subspace {
        Some(s) => {
            let b = s.basis(n);
            let mut be = b.clone();
            for i in 0..dim {
                for c in 0..b.ncols() {
                    be[(i, c)] *= weights[i];
                }
            }
            let qr = be.qr();
            let q = qr.q();
            let r = qr.r();
            let mut cols = Vec::new();
            for c in 0..r.ncols() {
                if r[(c, c)].abs() > 1e-10 {
                    cols.push(q.column(c).into_owned());
                }
            }
            DMatrix::from_columns(&cols)
        }
        None => DMatrix::identity(dim, dim),
    };
    let m = ambient.ncols();
    // degenerate directions, expressed in ambient coordinates
    let mut removed = DMatrix::zeros(m, 3);
    let constant = |e: usize| {
        let mut v = DVector::zeros(dim);
        let base = n * 2 * nv;
        for j in 0..nv {
            v[base + 2 * j + e] = 1.0;
        }
        v
    };
    let dirs = [constant(0), constant(1), z_n.derivative().as_packed().clone()];
    for (c, d) in dirs.iter().enumerate() {
        let mut de = d.clone();
        for i in 0..dim {
            de[i] *= weights[i];
        }
        let coeff = ambient.transpose() * de;
        removed.set_column(c, &coeff);
    }
    // orthonormalize the removed directions and take the complement
    let qr = removed.qr();
    let q3 = qr.q();
    let projector = DMatrix::identity(m, m) - &q3 * q3.transpose();
    let svd = projector.svd(true, false);
    let u = svd.u.as_ref().expect("svd with u requested");
    let mut comp_cols = Vec::new();
    for c in 0..m {
        if svd.singular_values[c] > 0.5 {
            comp_cols.push(u.column(c).into_owned());
        }
    }
    let comp = DMatrix::from_columns(&comp_cols);
    let slice_basis = &ambient * comp;
    Ok(slice_basis.transpose() * jac_e * &slice_basis)
}

/// Certificate that the branch seeded at (a₀, Z) carries nonzero degree: the
/// product of the orbit degree magnitude of the free problem at Z with the
/// Brouwer index of ∇h at a₀, evaluated on the circle of radius r. The slice
/// Jacobian is built at truncation n and re-checked at 2n.
pub fn degree_certificate(
    sys: &VortexSystem,
    a0: Vector2<f64>,
    eq: &RelativeEquilibrium,
    r: f64,
    n: usize,
    subspace: Option<&SymmetrySubspace>,
) -> Result<i64> {
    if matches!(sys.domain, crate::domains::DomainModel::Plane) {
        return Err(VortexError::NotApplicable {
            reason: "the whole-plane regularization vanishes identically; \
                     there is no critical point to index"
                .into(),
        });
    }
    if !(r > 0.0) {
        return Err(VortexError::Config(format!(
            "index radius r = {r} must be positive"
        )));
    }
    if !sys.domain.contains(a0) || sys.domain.boundary_distance(a0) <= r {
        return Err(VortexError::Config(format!(
            "the disc of radius {r} around ({}, {}) must lie inside the domain",
            a0[0], a0[1]
        )));
    }
    let z = crate::equilibria::normalized_loop(eq, n)?;
    for trunc in [n, 2 * n] {
        let slice = orbit_slice_jacobian(sys, &z, subspace, trunc)?;
        orbit_degree_magnitude(&slice, 1)?;
    }
    let index = crate::domains::brouwer_index(&sys.domain, a0, r)?;
    Ok(index as i64)
}
