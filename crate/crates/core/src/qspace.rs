//! Q-tensor algebra and the Landau–de Gennes bulk potential.
//!
//! A [`QTensor`] stores the five independent entries of a symmetric traceless
//! 3×3 matrix; `q33 = -q11 - q22` is reconstructed on demand, so every value
//! of the type lies in Q-space by construction.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{QslError, Result};

pub type Mat3 = [[f64; 3]; 3];
pub type Vec3 = [f64; 3];

/// Symmetric traceless 3×3 tensor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QTensor {
    pub q11: f64,
    pub q12: f64,
    pub q13: f64,
    pub q22: f64,
    pub q23: f64,
}

impl QTensor {
    pub const ZERO: QTensor = QTensor {
        q11: 0.0,
        q12: 0.0,
        q13: 0.0,
        q22: 0.0,
        q23: 0.0,
    };

    pub fn new(q11: f64, q12: f64, q13: f64, q22: f64, q23: f64) -> Self {
        Self {
            q11,
            q12,
            q13,
            q22,
            q23,
        }
    }

    /// Diagonal tensor; the third entry is implied by tracelessness.
    pub fn diag(d1: f64, d2: f64) -> Self {
        Self::new(d1, 0.0, 0.0, d2, 0.0)
    }

    #[inline]
    pub fn q33(&self) -> f64 {
        -self.q11 - self.q22
    }

    /// Symmetric traceless part of an arbitrary 3×3 matrix.
    pub fn from_matrix(m: &Mat3) -> Self {
        let tr3 = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
        Self {
            q11: m[0][0] - tr3,
            q22: m[1][1] - tr3,
            q12: 0.5 * (m[0][1] + m[1][0]),
            q13: 0.5 * (m[0][2] + m[2][0]),
            q23: 0.5 * (m[1][2] + m[2][1]),
        }
    }

    pub fn to_matrix(&self) -> Mat3 {
        [
            [self.q11, self.q12, self.q13],
            [self.q12, self.q22, self.q23],
            [self.q13, self.q23, self.q33()],
        ]
    }

    pub fn components(&self) -> [f64; 5] {
        [self.q11, self.q12, self.q13, self.q22, self.q23]
    }

    pub fn from_components(c: [f64; 5]) -> Self {
        Self::new(c[0], c[1], c[2], c[3], c[4])
    }

    /// Frobenius inner product `A : B` over all nine entries.
    #[inline]
    pub fn dot(&self, o: &QTensor) -> f64 {
        self.q11 * o.q11
            + self.q22 * o.q22
            + self.q33() * o.q33()
            + 2.0 * (self.q12 * o.q12 + self.q13 * o.q13 + self.q23 * o.q23)
    }

    /// `|Q|² = tr(Q²)`.
    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `tr(Q³) = 3 det Q` for traceless Q.
    pub fn trace_cube(&self) -> f64 {
        let m = self.to_matrix();
        3.0 * det3(&m)
    }

    /// Symmetric square `Q²` (a full matrix, not traceless).
    pub fn square(&self) -> Mat3 {
        let m = self.to_matrix();
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                let v = m[i][0] * m[0][j] + m[i][1] * m[1][j] + m[i][2] * m[2][j];
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|c| c.is_finite())
    }
}

impl Add for QTensor {
    type Output = QTensor;
    #[inline]
    fn add(self, o: QTensor) -> QTensor {
        QTensor {
            q11: self.q11 + o.q11,
            q12: self.q12 + o.q12,
            q13: self.q13 + o.q13,
            q22: self.q22 + o.q22,
            q23: self.q23 + o.q23,
        }
    }
}

impl Sub for QTensor {
    type Output = QTensor;
    #[inline]
    fn sub(self, o: QTensor) -> QTensor {
        QTensor {
            q11: self.q11 - o.q11,
            q12: self.q12 - o.q12,
            q13: self.q13 - o.q13,
            q22: self.q22 - o.q22,
            q23: self.q23 - o.q23,
        }
    }
}

impl Mul<f64> for QTensor {
    type Output = QTensor;
    #[inline]
    fn mul(self, s: f64) -> QTensor {
        QTensor {
            q11: self.q11 * s,
            q12: self.q12 * s,
            q13: self.q13 * s,
            q22: self.q22 * s,
            q23: self.q23 * s,
        }
    }
}

impl Mul<QTensor> for f64 {
    type Output = QTensor;
    #[inline]
    fn mul(self, q: QTensor) -> QTensor {
        q * self
    }
}

impl Neg for QTensor {
    type Output = QTensor;
    #[inline]
    fn neg(self) -> QTensor {
        self * -1.0
    }
}

impl AddAssign for QTensor {
    #[inline]
    fn add_assign(&mut self, o: QTensor) {
        *self = *self + o;
    }
}

impl SubAssign for QTensor {
    #[inline]
    fn sub_assign(&mut self, o: QTensor) {
        *self = *self - o;
    }
}

/// Coefficients of the bulk potential `F(Q) = a/2 tr Q² − b/3 tr Q³ + c/4 (tr Q²)²`.
///
/// Only the bistable family `b² = 27ac` is admitted; there the isotropic state
/// and the nematic manifold `N` are both global minimizers with `F = 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BulkParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for BulkParams {
    fn default() -> Self {
        Self {
            a: 3.0,
            b: 9.0,
            c: 1.0,
        }
    }
}

impl BulkParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let p = Self { a, b, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { a, b, c } = *self;
        if !(a > 0.0 && b > 0.0 && c > 0.0) || !(a.is_finite() && b.is_finite() && c.is_finite())
        {
            return Err(QslError::InvalidInput(format!(
                "bulk coefficients must be positive and finite, got a={a}, b={b}, c={c}"
            )));
        }
        if (b * b - 27.0 * a * c).abs() > 1e-12 * b * b {
            return Err(QslError::InvalidInput(format!(
                "bulk coefficients must satisfy b^2 = 27ac (got b^2 = {}, 27ac = {})",
                b * b,
                27.0 * a * c
            )));
        }
        Ok(())
    }

    /// Nematic order `s₊ = (b + √(b² − 24ac)) / 4c`.
    pub fn s_plus(&self) -> f64 {
        (self.b + (self.b * self.b - 24.0 * self.a * self.c).sqrt()) / (4.0 * self.c)
    }

    /// `√(3a/c)`, equal to [`s_plus`](Self::s_plus) on the bistable family.
    pub fn s_plus_bistable(&self) -> f64 {
        (3.0 * self.a / self.c).sqrt()
    }

    /// Smallest admissible maximum-principle bound for initial data with
    /// `sup |Q₀| = q0_sup`.
    pub fn c0(&self, q0_sup: f64) -> f64 {
        let mu_sq = self.b * self.b / (self.c * self.c) - 2.0 * self.a / self.c;
        mu_sq.max(q0_sup * q0_sup).sqrt()
    }
}

/// Bulk energy density `F(Q)`.
pub fn bulk_energy(q: &QTensor, p: &BulkParams) -> f64 {
    let tr2 = q.norm_sq();
    0.5 * p.a * tr2 - p.b / 3.0 * q.trace_cube() + 0.25 * p.c * tr2 * tr2
}

/// `F_ε(Q) = F(Q) + ε³`.
pub fn bulk_energy_eps(q: &QTensor, p: &BulkParams, eps: f64) -> f64 {
    bulk_energy(q, p) + eps * eps * eps
}

/// Variation `DF(Q) = aQ − bQ² + c|Q|²Q + (b/3)|Q|² I`, which is symmetric
/// and traceless.
pub fn bulk_gradient(q: &QTensor, p: &BulkParams) -> QTensor {
    let tr2 = q.norm_sq();
    let sq = q.square();
    // −b (Q² − tr(Q²)/3 I) is the traceless part of −bQ².
    let sq_tl = QTensor::from_matrix(&sq);
    *q * (p.a + p.c * tr2) - sq_tl * p.b
}

/// `s (u⊗u − I/3)` for a unit vector `u`.
pub fn uniaxial(s: f64, u: Vec3) -> Result<QTensor> {
    let n = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    if (n - 1.0).abs() > 1e-12 {
        return Err(QslError::InvalidInput(format!(
            "director must be a unit vector, |u| = {n}"
        )));
    }
    Ok(uniaxial_unchecked(s, u))
}

#[inline]
pub(crate) fn uniaxial_unchecked(s: f64, u: Vec3) -> QTensor {
    QTensor {
        q11: s * (u[0] * u[0] - 1.0 / 3.0),
        q12: s * u[0] * u[1],
        q13: s * u[0] * u[2],
        q22: s * (u[1] * u[1] - 1.0 / 3.0),
        q23: s * u[1] * u[2],
    }
}

/// Nearest-uniaxial description of a tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Retraction {
    /// `(3/2) λ_max` clamped to `[0, s₊]`.
    pub s: f64,
    /// Unit eigenvector of `λ_max`.
    pub u: Vec3,
    /// The two smaller eigenvalues agree within 1e-9.
    pub exact: bool,
    /// `(3/2) λ_max` exceeded `s₊` and was clamped.
    pub clamped: bool,
}

const ISOTROPIC_TOL: f64 = 1e-14;
const UNIAXIAL_TOL: f64 = 1e-9;

/// Spectral retraction onto the uniaxial branch with `s ∈ [0, s₊]`.
///
/// At the isotropic point (`|Q| < 1e-14`) the director is arbitrary and `e₃`
/// is returned.
pub fn uniaxial_retract(q: &QTensor, p: &BulkParams) -> Retraction {
    if q.norm() < ISOTROPIC_TOL {
        return Retraction {
            s: 0.0,
            u: [0.0, 0.0, 1.0],
            exact: true,
            clamped: false,
        };
    }
    let eig = sym_eigen_max(&q.to_matrix());
    let raw = 1.5 * eig.value;
    let s_plus = p.s_plus();
    // λ₂ = λ₃ exactly when Q − (3/2)λ_max (u⊗u − I/3) vanishes; the residual
    // norm is |λ₂ − λ₃|/√2. Measured through the eigenvector, which stays well
    // conditioned when the spectral gap is λ_max − λ₂ = (3/2)λ_max.
    let resid = (*q - uniaxial_unchecked(raw, eig.vector)).norm();
    let exact = resid * std::f64::consts::SQRT_2 <= UNIAXIAL_TOL;
    Retraction {
        s: raw.clamp(0.0, s_plus),
        u: eig.vector,
        exact,
        clamped: raw > s_plus,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec3,
}

fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Eigenvalues of a symmetric 3×3 matrix in descending order, by the
/// trigonometric solution of the characteristic polynomial.
pub fn sym_eigenvalues(m: &Mat3) -> [f64; 3] {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let d0 = m[0][0] - q;
    let d1 = m[1][1] - q;
    let d2 = m[2][2] - q;
    let p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1;
    if p2 == 0.0 {
        return [q; 3];
    }
    let p = (p2 / 6.0).sqrt();
    let mut b = *m;
    for (i, row) in b.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - if i == j { q } else { 0.0 }) / p;
        }
    }
    let r = (det3(&b) / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let l2 = 3.0 * q - l1 - l3;
    [l1, l2, l3]
}

fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm3(a: &Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Flip sign so the largest-magnitude component (first one on ties) is positive.
fn sign_normalize(mut v: Vec3) -> Vec3 {
    let mut k = 0;
    for i in 1..3 {
        if v[i].abs() > v[k].abs() + 1e-14 {
            k = i;
        }
    }
    if v[k] < 0.0 {
        for c in v.iter_mut() {
            *c = -*c;
        }
    }
    v
}

/// Null vector of the (numerically) rank-≤2 symmetric matrix `a`, from the
/// largest cross product of its rows. `None` when the rank is ≤ 1.
fn null_vector(a: &Mat3, scale: f64) -> Option<Vec3> {
    let c = [
        cross(&a[0], &a[1]),
        cross(&a[1], &a[2]),
        cross(&a[2], &a[0]),
    ];
    let (best, n) = c
        .iter()
        .map(|v| (v, norm3(v)))
        .fold((&c[0], -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if n <= 1e-10 * scale * scale {
        return None;
    }
    Some([best[0] / n, best[1] / n, best[2] / n])
}

/// Largest eigenvalue and a unit eigenvector.
///
/// When `λ_max` is (near-)double the eigenspace is the orthogonal complement
/// of the `λ_min` eigenvector; the representative is the projection of the
/// coordinate axis that survives best, sign-normalized.
pub fn sym_eigen_max(m: &Mat3) -> EigenPair {
    let lam = sym_eigenvalues(m);
    let scale = lam[0].abs().max(lam[2].abs()).max(f64::MIN_POSITIVE);
    let shifted = |l: f64| {
        let mut a = *m;
        for (i, row) in a.iter_mut().enumerate() {
            row[i] -= l;
        }
        a
    };
    if let Some(v) = null_vector(&shifted(lam[0]), scale) {
        return EigenPair {
            value: lam[0],
            vector: sign_normalize(v),
        };
    }
    // Double top eigenvalue: pick from the complement of the bottom eigenvector.
    let w = null_vector(&shifted(lam[2]), scale).unwrap_or([0.0, 0.0, 1.0]);
    let mut best = [0.0; 3];
    let mut best_n = -1.0;
    for k in 0..3 {
        let mut e = [0.0; 3];
        e[k] = 1.0;
        let proj = w[k];
        let v = [e[0] - proj * w[0], e[1] - proj * w[1], e[2] - proj * w[2]];
        let n = norm3(&v);
        if n > best_n + 1e-12 {
            best_n = n;
            best = [v[0] / n, v[1] / n, v[2] / n];
        }
    }
    EigenPair {
        value: lam[0],
        vector: sign_normalize(best),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const E1: Vec3 = [1.0, 0.0, 0.0];
    const E3: Vec3 = [0.0, 0.0, 1.0];

    fn p() -> BulkParams {
        BulkParams::default()
    }

    #[test]
    fn reconstruction_is_symmetric_traceless() {
        let q = QTensor::new(0.3, -0.7, 1.1, 0.25, 0.4);
        let m = q.to_matrix();
        assert_eq!(m[0][0] + m[1][1] + m[2][2], 0.0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m[i][j], m[j][i]);
            }
        }
        let full: f64 = m.iter().flatten().map(|v| v * v).sum();
        assert!((full - q.norm_sq()).abs() < 1e-14);
    }

    #[test]
    fn default_params_are_bistable() {
        let bp = p();
        assert_eq!(bp.b * bp.b, 27.0 * bp.a * bp.c);
        assert!((bp.s_plus() - bp.s_plus_bistable()).abs() < 1e-12);
        assert!((bp.s_plus() - 3.0).abs() < 1e-12);
        assert!((bp.c0(0.0) - 75f64.sqrt()).abs() < 1e-12);
        assert!(BulkParams::new(3.0, 8.0, 1.0).is_err());
        assert!(BulkParams::new(-3.0, 9.0, 1.0).is_err());
    }

    #[test]
    fn bulk_energy_examples() {
        let bp = p();
        assert_eq!(bulk_energy(&QTensor::ZERO, &bp), 0.0);
        let on_n = uniaxial(3.0, E3).unwrap();
        assert!(bulk_energy(&on_n, &bp).abs() < 1e-13);
        let q1 = uniaxial(1.0, E3).unwrap();
        assert!((bulk_energy(&q1, &bp) - 4.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn bulk_gradient_examples() {
        let bp = p();
        assert_eq!(bulk_gradient(&QTensor::ZERO, &bp), QTensor::ZERO);
        let q1 = uniaxial(1.0, E3).unwrap();
        let g = bulk_gradient(&q1, &bp);
        let want = q1 * (2.0 / 3.0);
        assert!((g - want).norm() < 1e-14);
    }

    #[test]
    fn uniaxial_examples() {
        assert_eq!(uniaxial(0.0, E1).unwrap(), QTensor::ZERO);
        let q = uniaxial(3.0, E3).unwrap();
        let m = q.to_matrix();
        let want = [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m[i][j] - want[i][j]).abs() < 1e-15);
            }
        }
        let n = uniaxial(2.0, E1).unwrap().norm();
        assert!((n - 2.0 * (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(uniaxial(1.0, [1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn retract_examples() {
        let bp = p();
        let r = uniaxial_retract(&uniaxial(2.0, E1).unwrap(), &bp);
        assert!((r.s - 2.0).abs() < 1e-12);
        assert!((r.u[0].abs() - 1.0).abs() < 1e-12);
        assert!(r.exact);

        let r0 = uniaxial_retract(&QTensor::ZERO, &bp);
        assert_eq!((r0.s, r0.u, r0.exact), (0.0, E3, true));

        let r = uniaxial_retract(&QTensor::diag(0.5, 0.1), &bp);
        assert!((r.s - 0.75).abs() < 1e-12);
        assert!((r.u[0].abs() - 1.0).abs() < 1e-12);
        assert!(!r.exact);
    }

    #[test]
    fn retract_clamps_above_s_plus() {
        let r = uniaxial_retract(&uniaxial(4.0, E3).unwrap(), &p());
        assert_eq!(r.s, 3.0);
        assert!(r.clamped);
        assert!(r.exact);
    }

    #[test]
    fn oblate_double_top_eigenvalue_is_deterministic() {
        // diag(1, 1, -2): λ_max is double, eigenspace = span{e1, e2}.
        let q = QTensor::diag(1.0, 1.0);
        let a = sym_eigen_max(&q.to_matrix());
        let b = sym_eigen_max(&q.to_matrix());
        assert_eq!(a.vector, b.vector);
        assert!((a.value - 1.0).abs() < 1e-12);
        assert!(a.vector[2].abs() < 1e-12);
        assert!((norm3(&a.vector) - 1.0).abs() < 1e-12);
        let r = uniaxial_retract(&q, &p());
        assert!(!r.exact);
    }

    #[test]
    fn eigen_of_rotated_tensor() {
        let u = [0.48, -0.6, 0.64];
        let q = uniaxial(1.7, u).unwrap() + QTensor::diag(0.05, -0.02);
        let m = q.to_matrix();
        let e = sym_eigen_max(&m);
        for i in 0..3 {
            let av: f64 = (0..3).map(|j| m[i][j] * e.vector[j]).sum();
            assert!((av - e.value * e.vector[i]).abs() < 1e-12);
        }
    }
}
