//! Planar model domains with explicit Green's-function regular parts.
//!
//! For each domain Ω the Dirichlet Green's function is written as
//! G(x, y) = −(1/2π) log|x − y| − g(x, y); the code works with the regular
//! part g directly, with the sign fixed so that the Robin function
//! h(x) = g(x, x) tends to +∞ at ∂Ω. The plane has g ≡ 0, the unit disc and
//! half plane come from the method of images, and the annulus (behind the
//! `annulus` feature) from a Laurent series solved against the boundary data.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VortexError};
use crate::model::VortexSystem;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// A planar domain with Green's-function evaluators.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainModel {
    #[default]
    Plane,
    UnitDisc,
    /// The upper half plane {y > 0}.
    HalfPlane,
    #[cfg(feature = "annulus")]
    Annulus { rho: f64 },
}

impl DomainModel {
    pub fn contains(&self, p: Vector2<f64>) -> bool {
        match self {
            DomainModel::Plane => true,
            DomainModel::UnitDisc => p.norm() < 1.0,
            DomainModel::HalfPlane => p[1] > 0.0,
            #[cfg(feature = "annulus")]
            DomainModel::Annulus { rho } => {
                let r = p.norm();
                *rho < r && r < 1.0
            }
        }
    }

    /// Distance from `p` to ∂Ω (+∞ on the plane).
    pub fn boundary_distance(&self, p: Vector2<f64>) -> f64 {
        match self {
            DomainModel::Plane => f64::INFINITY,
            DomainModel::UnitDisc => 1.0 - p.norm(),
            DomainModel::HalfPlane => p[1],
            #[cfg(feature = "annulus")]
            DomainModel::Annulus { rho } => (1.0 - p.norm()).min(p.norm() - rho),
        }
    }

    /// A length scale of the domain (inradius-like), used for thresholds.
    pub fn length_scale(&self) -> f64 {
        match self {
            DomainModel::Plane => 1.0,
            DomainModel::UnitDisc => 1.0,
            DomainModel::HalfPlane => 1.0,
            #[cfg(feature = "annulus")]
            DomainModel::Annulus { rho } => (1.0 - rho) / 2.0,
        }
    }

    /// Regular part g(x, y) of the Green's function; zero on the plane.
    pub fn green(&self, x: Vector2<f64>, y: Vector2<f64>) -> f64 {
        match self {
            DomainModel::Plane => 0.0,
            DomainModel::UnitDisc => -disc_q(x, y).ln() / (2.0 * TWO_PI),
            DomainModel::HalfPlane => {
                let w = half_plane_w(x, y);
                -w.norm_squared().ln() / (2.0 * TWO_PI)
            }
            #[cfg(feature = "annulus")]
            DomainModel::Annulus { rho } => annulus::green(*rho, x, y),
        }
    }

    /// ∇_x g(x, y).
    pub fn green_grad_x(&self, x: Vector2<f64>, y: Vector2<f64>) -> Vector2<f64> {
        match self {
            DomainModel::Plane => Vector2::zeros(),
            DomainModel::UnitDisc => {
                let q = disc_q(x, y);
                -(y.norm_squared() * x - y) / (TWO_PI * q)
            }
            DomainModel::HalfPlane => {
                let w = half_plane_w(x, y);
                -w / (TWO_PI * w.norm_squared())
            }
            #[cfg(feature = "annulus")]
            DomainModel::Annulus { rho } => annulus::grad_x(*rho, x, y),
        }
    }

    /// Second derivative block ∂²g/∂x² (2×2, symmetric).
    pub fn green_hess_xx(&self, x: Vector2<f64>, y: Vector2<f64>) -> Matrix2<f64> {
        match self {
            DomainModel::Plane => Matrix2::zeros(),
            DomainModel::UnitDisc => {
                let q = disc_q(x, y);
                let v = y.norm_squared() * x - y;
                -(y.norm_squared() * Matrix2::identity() / q
                    - 2.0 * v * v.transpose() / (q * q))
                    / TWO_PI
            }
            DomainModel::HalfPlane => {
                let w = half_plane_w(x, y);
                let q = w.norm_squared();
                -(Matrix2::identity() / q - 2.0 * w * w.transpose() / (q * q)) / TWO_PI
            }
            #[cfg(feature = "annulus")]
            DomainModel::Annulus { rho } => annulus::hess_xx(*rho, x, y),
        }
    }

    /// Mixed block ∂²g/∂x∂y (rows x, columns y).
    pub fn green_hess_xy(&self, x: Vector2<f64>, y: Vector2<f64>) -> Matrix2<f64> {
        match self {
            DomainModel::Plane => Matrix2::zeros(),
            DomainModel::UnitDisc => {
                let q = disc_q(x, y);
                let vx = y.norm_squared() * x - y;
                let vy = x.norm_squared() * y - x;
                let m = 2.0 * x * y.transpose() - Matrix2::identity();
                -(m / q - 2.0 * vx * vy.transpose() / (q * q)) / TWO_PI
            }
            DomainModel::HalfPlane => {
                let w = half_plane_w(x, y);
                let q = w.norm_squared();
                let refl = Matrix2::new(-1.0, 0.0, 0.0, 1.0);
                let rw = refl * w;
                -(refl / q - 2.0 * w * rw.transpose() / (q * q)) / TWO_PI
            }
            #[cfg(feature = "annulus")]
            DomainModel::Annulus { rho } => annulus::hess_xy(*rho, x, y),
        }
    }

    /// Robin function h(a) = g(a, a).
    pub fn robin(&self, a: Vector2<f64>) -> f64 {
        match self {
            DomainModel::Plane => 0.0,
            DomainModel::UnitDisc => -(1.0 - a.norm_squared()).ln() / TWO_PI,
            DomainModel::HalfPlane => -(2.0 * a[1]).ln() / TWO_PI,
            #[cfg(feature = "annulus")]
            DomainModel::Annulus { .. } => self.green(a, a),
        }
    }

    /// ∇h(a) = 2 ∂_x g(a, a).
    pub fn robin_gradient(&self, a: Vector2<f64>) -> Vector2<f64> {
        match self {
            DomainModel::Plane => Vector2::zeros(),
            DomainModel::UnitDisc => a / (std::f64::consts::PI * (1.0 - a.norm_squared())),
            DomainModel::HalfPlane => Vector2::new(0.0, -1.0 / (TWO_PI * a[1])),
            #[cfg(feature = "annulus")]
            DomainModel::Annulus { .. } => 2.0 * self.green_grad_x(a, a),
        }
    }

    /// h''(a) = 2 (∂²_{xx} g + ∂²_{xy} g)(a, a).
    pub fn robin_hessian(&self, a: Vector2<f64>) -> Matrix2<f64> {
        match self {
            DomainModel::Plane => Matrix2::zeros(),
            DomainModel::UnitDisc => {
                let s = 1.0 - a.norm_squared();
                (s * Matrix2::identity() + 2.0 * a * a.transpose())
                    / (std::f64::consts::PI * s * s)
            }
            DomainModel::HalfPlane => {
                Matrix2::new(0.0, 0.0, 0.0, 1.0 / (TWO_PI * a[1] * a[1]))
            }
            #[cfg(feature = "annulus")]
            DomainModel::Annulus { .. } => {
                2.0 * (self.green_hess_xx(a, a) + self.green_hess_xy(a, a))
            }
        }
    }
}

fn disc_q(x: Vector2<f64>, y: Vector2<f64>) -> f64 {
    x.norm_squared() * y.norm_squared() - 2.0 * x.dot(&y) + 1.0
}

fn half_plane_w(x: Vector2<f64>, y: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(x[0] - y[0], x[1] + y[1])
}

/// A critical point of the Robin function with its classification.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalPointReport {
    pub location: (f64, f64),
    pub gradient_norm: f64,
    pub hessian: [[f64; 2]; 2],
    pub brouwer_index: i32,
    pub stable: bool,
    pub nondegenerate: bool,
}

/// Winding number of a planar vector field around the circle |p − center| = eps.
pub fn winding_number(
    field: &dyn Fn(Vector2<f64>) -> Vector2<f64>,
    center: Vector2<f64>,
    eps: f64,
    samples: usize,
) -> Result<i32> {
    let samples = samples.max(256);
    let mut total = 0.0;
    let mut prev: Option<Vector2<f64>> = None;
    let mut first: Option<Vector2<f64>> = None;
    for i in 0..samples {
        let t = TWO_PI * i as f64 / samples as f64;
        let p = center + eps * Vector2::new(t.cos(), t.sin());
        let v = field(p);
        if v.norm() < 1e-14 {
            return Err(VortexError::ZeroOnContour { sample: i });
        }
        if let Some(w) = prev {
            total += angle_increment(w, v);
        } else {
            first = Some(v);
        }
        prev = Some(v);
    }
    total += angle_increment(prev.unwrap(), first.unwrap());
    let winding = total / TWO_PI;
    let rounded = winding.round();
    if (winding - rounded).abs() > 0.1 {
        return Err(VortexError::AmbiguousWinding { raw: total });
    }
    Ok(rounded as i32)
}

fn angle_increment(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let cross = a[0] * b[1] - a[1] * b[0];
    let dot = a.dot(&b);
    cross.atan2(dot)
}

/// Brouwer index of ∇h at a₀, computed as a winding number on |a − a₀| = eps.
pub fn brouwer_index(dom: &DomainModel, a0: Vector2<f64>, eps: f64) -> Result<i32> {
    let dom = dom.clone();
    winding_number(&move |p| dom.robin_gradient(p), a0, eps, 256)
}

/// Newton search for critical points of h from a grid of seeds over a box.
///
/// Returns deduplicated converged roots with |∇h| ≤ 1e-10, each classified by
/// its Brouwer index and Hessian.
pub fn find_critical_points(
    dom: &DomainModel,
    search_box: (Vector2<f64>, Vector2<f64>),
    grid_n: usize,
) -> Vec<CriticalPointReport> {
    if matches!(dom, DomainModel::Plane) {
        return Vec::new();
    }
    let (lo, hi) = search_box;
    let mut roots: Vec<Vector2<f64>> = Vec::new();
    let grid_n = grid_n.max(2);
    for i in 0..grid_n {
        for j in 0..grid_n {
            let fx = (i as f64 + 0.5) / grid_n as f64;
            let fy = (j as f64 + 0.5) / grid_n as f64;
            let mut a = Vector2::new(lo[0] + fx * (hi[0] - lo[0]), lo[1] + fy * (hi[1] - lo[1]));
            if !dom.contains(a) {
                continue;
            }
            let mut converged = false;
            for _ in 0..60 {
                let g = dom.robin_gradient(a);
                if g.norm() <= 1e-12 {
                    converged = true;
                    break;
                }
                let hess = dom.robin_hessian(a);
                let Some(step) = hess.lu().solve(&g) else { break };
                let mut next = a - step;
                // damp steps that would leave the domain
                let mut lambda = 1.0;
                while !dom.contains(next) && lambda > 1e-6 {
                    lambda *= 0.5;
                    next = a - lambda * step;
                }
                if !dom.contains(next) {
                    break;
                }
                a = next;
            }
            if converged && dom.robin_gradient(a).norm() <= 1e-10 {
                if !roots.iter().any(|r| (r - a).norm() < 1e-6) {
                    roots.push(a);
                }
            }
        }
    }
    roots
        .into_iter()
        .map(|a| {
            let hess = dom.robin_hessian(a);
            let eps = (0.05_f64).min(0.5 * dom.boundary_distance(a)).max(1e-4);
            let index = brouwer_index(dom, a, eps).unwrap_or(0);
            let det = hess.determinant();
            let nondegenerate = det.abs() > 1e-10;
            CriticalPointReport {
                location: (a[0], a[1]),
                gradient_norm: dom.robin_gradient(a).norm(),
                hessian: [[hess[(0, 0)], hess[(0, 1)]], [hess[(1, 0)], hess[(1, 1)]]],
                brouwer_index: index,
                stable: index != 0,
                nondegenerate,
            }
        })
        .collect()
}

/// Residual of the diagonal-configuration identities
/// ∇_{z_j}F(ĉ) = Γ_j (ΣΓ_k) ∇h(c) and P_D ∇F(ĉ) = (1/N)(ΣΓ_k)² ∇h(c)^.
pub fn f_gradient_identity_check(sys: &VortexSystem, c: Vector2<f64>) -> Result<f64> {
    if !sys.domain.contains(c) {
        return Err(VortexError::OutsideDomain {
            index: 0,
            x: c[0],
            y: c[1],
        });
    }
    let n = sys.n();
    let diag = crate::model::Configuration::from_points(&vec![(c[0], c[1]); n]);
    let grad_f = sys.interaction_gradient(&diag)?;
    let grad_h = sys.domain.robin_gradient(c);
    let total: f64 = sys.total_vorticity();
    let mut worst: f64 = 0.0;
    let mut mean = Vector2::zeros();
    for j in 0..n {
        let lhs = Vector2::new(grad_f[2 * j], grad_f[2 * j + 1]);
        mean += lhs / n as f64;
        worst = worst.max((lhs - sys.gamma()[j] * total * grad_h).norm());
    }
    let rhs = total * total / n as f64 * grad_h;
    worst = worst.max((mean - rhs).norm());
    Ok(worst)
}

#[cfg(feature = "annulus")]
mod annulus {
    //! Laurent-series Green's function for the annulus ρ < |x| < 1.
    //!
    //! Separation of variables against the boundary data −(1/2π)log|x − y|
    //! gives, with z, ζ the points as complex numbers and D_n = 2πn(ρ^{2n}−1):
    //!
    //!   g(x,y) = −log|z| log|ζ| / (2π log ρ)
    //!          + Σ_{n≥1} Re[ A_n z^n + B_n z^{−n} ],
    //!   A_n = (ρ^{2n} ζ^{−n} − ζ̄^n)/D_n,   B_n = ρ^{2n}(ζ^n − ζ̄^{−n})/D_n.
    //!
    //! Derivatives use that every term is Re[c ζ^m z^k] or Re[c ζ^m z̄^k]
    //! (c real), whose Wirtinger derivatives are elementary.

    use nalgebra::{Matrix2, Vector2};
    use num_complex::Complex64;

    const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
    const MAX_TERMS: usize = 512;
    const TERM_TOL: f64 = 1e-16;

    fn c(p: Vector2<f64>) -> Complex64 {
        Complex64::new(p[0], p[1])
    }

    /// Gradient of Re[e z^k] with respect to x = (Re z, Im z).
    fn grad_re(e: Complex64, dz: Complex64) -> Vector2<f64> {
        let w = e * dz;
        Vector2::new(w.re, -w.im)
    }

    /// Hessian of Re[w(z)] given w'' at the point.
    fn hess_re(w2: Complex64) -> Matrix2<f64> {
        Matrix2::new(w2.re, -w2.im, -w2.im, -w2.re)
    }

    /// The four monomial terms of the n-th series term, as (coef, m, k, conj_z).
    fn terms(rho: f64, n: i32) -> [(f64, i32, i32, bool); 4] {
        let r = rho.powi(2 * n);
        let d = TWO_PI * n as f64 * (r - 1.0);
        [
            (r / d, -n, n, false),
            (-1.0 / d, n, n, true),
            (r / d, n, -n, false),
            (-r / d, -n, -n, true),
        ]
    }

    fn log_coef(rho: f64) -> f64 {
        -1.0 / (TWO_PI * rho.ln())
    }

    pub fn green(rho: f64, x: Vector2<f64>, y: Vector2<f64>) -> f64 {
        let (z, zeta) = (c(x), c(y));
        let mut sum = log_coef(rho) * z.norm().ln() * zeta.norm().ln();
        for n in 1..=MAX_TERMS as i32 {
            let mut tn = 0.0;
            for (coef, m, k, conj_z) in terms(rho, n) {
                let zp = if conj_z { z.conj().powi(k) } else { z.powi(k) };
                tn += coef * (zeta.powi(m) * zp).re;
            }
            sum += tn;
            if tn.abs() < TERM_TOL && n > 4 {
                break;
            }
        }
        sum
    }

    pub fn grad_x(rho: f64, x: Vector2<f64>, y: Vector2<f64>) -> Vector2<f64> {
        let (z, zeta) = (c(x), c(y));
        // ∇ log|z| = (Re 1/z, −Im 1/z)
        let mut sum = log_coef(rho) * zeta.norm().ln() * grad_re(Complex64::new(1.0, 0.0), z.inv());
        for n in 1..=MAX_TERMS as i32 {
            let mut gn = Vector2::zeros();
            for (coef, m, k, conj_z) in terms(rho, n) {
                // Re[c ζ^m z̄^k] = Re[c ζ̄^m z^k]
                let e = if conj_z {
                    Complex64::new(coef, 0.0) * zeta.conj().powi(m)
                } else {
                    Complex64::new(coef, 0.0) * zeta.powi(m)
                };
                gn += grad_re(e * k as f64, z.powi(k - 1));
            }
            sum += gn;
            if gn.norm() < TERM_TOL && n > 4 {
                break;
            }
        }
        sum
    }

    pub fn hess_xx(rho: f64, x: Vector2<f64>, y: Vector2<f64>) -> Matrix2<f64> {
        let (z, zeta) = (c(x), c(y));
        let mut sum = log_coef(rho) * zeta.norm().ln() * hess_re(-(z * z).inv());
        for n in 1..=MAX_TERMS as i32 {
            let mut hn = Matrix2::zeros();
            for (coef, m, k, conj_z) in terms(rho, n) {
                let e = if conj_z {
                    Complex64::new(coef, 0.0) * zeta.conj().powi(m)
                } else {
                    Complex64::new(coef, 0.0) * zeta.powi(m)
                };
                let w2 = e * (k * (k - 1)) as f64 * z.powi(k - 2);
                hn += hess_re(w2);
            }
            sum += hn;
            if hn.norm() < TERM_TOL && n > 4 {
                break;
            }
        }
        sum
    }

    pub fn hess_xy(rho: f64, x: Vector2<f64>, y: Vector2<f64>) -> Matrix2<f64> {
        let (z, zeta) = (c(x), c(y));
        // log-term: outer product of the two gradients
        let gx = grad_re(Complex64::new(1.0, 0.0), z.inv());
        let gy = grad_re(Complex64::new(1.0, 0.0), zeta.inv());
        let mut sum = log_coef(rho) * gx * gy.transpose();
        for n in 1..=MAX_TERMS as i32 {
            let mut hn = Matrix2::zeros();
            for (coef, m, k, conj_z) in terms(rho, n) {
                let scal = coef * (m * k) as f64;
                if conj_z {
                    // Re[c ζ^m z̄^k]: w̃ = c·m k·z̄^{k−1} ζ^{m−1}
                    let w = scal * z.conj().powi(k - 1) * zeta.powi(m - 1);
                    hn += Matrix2::new(w.re, -w.im, w.im, w.re);
                } else {
                    let w = scal * z.powi(k - 1) * zeta.powi(m - 1);
                    hn += Matrix2::new(w.re, -w.im, -w.im, -w.re);
                }
            }
            sum += hn;
            if hn.norm() < TERM_TOL && n > 4 {
                break;
            }
        }
        sum
    }
}
