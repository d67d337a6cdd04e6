//! One-dimensional structure functions of the bistable potential.
//!
//! On the uniaxial branch `Q = s(u⊗u − I/3)` the bulk energy reduces to
//! `f(s)`, the optimal transition is the tanh wave `S(z)`, and the
//! quasi-distance to the nematic manifold is `g(s) = (2/√3)∫ₛ^{s₊} √f`.
//! Off the branch, ψ and its gradient are evaluated through
//! [`uniaxial_retract`].

use std::f64::consts::SQRT_2;

use crate::qspace::{uniaxial_retract, BulkParams, QTensor, Retraction};

const TWO_OVER_SQRT3: f64 = 1.154_700_538_379_251_5;

/// Uniaxial bulk energy `f(s) = (s²/27)(9a − 2bs + 3cs²)`.
pub fn f_uni(s: f64, p: &BulkParams) -> f64 {
    s * s / 27.0 * (9.0 * p.a - 2.0 * p.b * s + 3.0 * p.c * s * s)
}

/// `√f(s) = (√c/3)|s||s − s₊|`, the bistable factorization of [`f_uni`].
pub fn sqrt_f_uni(s: f64, p: &BulkParams) -> f64 {
    p.c.sqrt() / 3.0 * (s * (s - p.s_plus())).abs()
}

/// `f′(s)`.
pub fn f_uni_prime(s: f64, p: &BulkParams) -> f64 {
    2.0 / 3.0 * (p.a * s - p.b / 3.0 * s * s + 2.0 / 3.0 * p.c * s * s * s)
}

/// Traveling wave `S(z) = (s₊/2)(1 + tanh(√a z / 2))`.
pub fn wave_profile(z: f64, p: &BulkParams) -> f64 {
    0.5 * p.s_plus() * (1.0 + (0.5 * p.a.sqrt() * z).tanh())
}

/// `(S, S′, S″)` by analytic differentiation.
pub fn wave_profile_derivs(z: f64, p: &BulkParams) -> (f64, f64, f64) {
    let k = 0.5 * p.a.sqrt();
    let th = (k * z).tanh();
    let sech2 = 1.0 - th * th;
    let half = 0.5 * p.s_plus();
    (
        half * (1.0 + th),
        half * k * sech2,
        -2.0 * half * k * k * th * sech2,
    )
}

/// Residual `−S″ + aS − (b/3)S² + (2c/3)S³` of the traveling-wave ODE.
pub fn wave_residual(z: f64, p: &BulkParams) -> f64 {
    let (s, _, s2) = wave_profile_derivs(z, p);
    -s2 + p.a * s - p.b / 3.0 * s * s + 2.0 / 3.0 * p.c * s * s * s
}

/// Antiderivative of `√f` on `[0, s₊]`.
fn sqrt_f_antideriv(t: f64, p: &BulkParams) -> f64 {
    p.c.sqrt() / 3.0 * (p.s_plus() * t * t / 2.0 - t * t * t / 3.0)
}

/// Quasi-distance on the uniaxial branch, `g(s₀)`, with `s₀` clamped to
/// `[0, s₊]`. Returns the value and whether clamping happened.
pub fn quasi_dist_uni_checked(s0: f64, p: &BulkParams) -> (f64, bool) {
    let s_plus = p.s_plus();
    let s = s0.clamp(0.0, s_plus);
    let g = TWO_OVER_SQRT3 * (sqrt_f_antideriv(s_plus, p) - sqrt_f_antideriv(s, p));
    (g, s != s0)
}

pub fn quasi_dist_uni(s0: f64, p: &BulkParams) -> f64 {
    quasi_dist_uni_checked(s0, p).0
}

/// `g′(s) = −(2/√3)√f(s)` on `[0, s₊]`.
pub fn quasi_dist_uni_prime(s: f64, p: &BulkParams) -> f64 {
    -TWO_OVER_SQRT3 * sqrt_f_uni(s, p)
}

/// Surface tension `σ = g(0)`.
pub fn surface_tension(p: &BulkParams) -> f64 {
    quasi_dist_uni(0.0, p)
}

/// `σ` by adaptive Simpson quadrature of `(2/√3)√f` using the unfactored
/// polynomial [`f_uni`]. Kept as an independent check of the closed form.
pub fn surface_tension_by_quadrature(p: &BulkParams) -> f64 {
    let integrand = |t: f64| TWO_OVER_SQRT3 * f_uni(t, p).max(0.0).sqrt();
    adaptive_simpson(&integrand, 0.0, p.s_plus(), 1e-14, 40)
}

/// Adaptive Simpson rule with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, depth)
}

/// Pointwise phase function `ψ = g(s)` where `s` is the retracted order.
pub fn psi_point(q: &QTensor, p: &BulkParams) -> f64 {
    psi_from_retraction(&uniaxial_retract(q, p), p)
}

pub fn psi_from_retraction(r: &Retraction, p: &BulkParams) -> f64 {
    quasi_dist_uni(r.s, p)
}

/// Gradient of the quasi-distance, `−√2 √f(s) Q/|Q|`; zero at the isotropic
/// point.
pub fn dquasi_point(q: &QTensor, p: &BulkParams) -> QTensor {
    dquasi_from_retraction(q, &uniaxial_retract(q, p), p)
}

pub fn dquasi_from_retraction(q: &QTensor, r: &Retraction, p: &BulkParams) -> QTensor {
    let n = q.norm();
    if n < 1e-14 {
        return QTensor::ZERO;
    }
    *q * (-SQRT_2 * sqrt_f_uni(r.s, p) / n)
}

/// Bulk parameters together with the derived surface tension.
#[derive(Debug, Clone, Copy)]
pub struct ProfileTables {
    pub params: BulkParams,
    pub sigma: f64,
}

impl ProfileTables {
    pub fn new(params: BulkParams) -> Self {
        Self {
            params,
            sigma: surface_tension(&params),
        }
    }

    pub fn g(&self, s: f64) -> f64 {
        quasi_dist_uni(s, &self.params)
    }

    pub fn wave(&self, z: f64) -> f64 {
        wave_profile(z, &self.params)
    }
}
