//! Functionals comparing a diffuse state with an analytic sharp interface.
//!
//! The phase function `ψ = d^F(Q)` is close to `σ` in the isotropic phase
//! and to 0 in the nematic one, so `∇ψ` points into Ω⁻. All pairings of
//! `ψ` with the geometric extension use the calibration `ξ_c = −ξ`, which
//! points the same way; with it the residuals below vanish on the exact
//! traveling wave.

use serde::{Deserialize, Serialize};

use crate::geometry::AnalyticInterface;
use crate::grid::{divergence, laplacian, partials, Field, QField, ScalarField, Vec2, VectorField};
use crate::profiles::{dquasi_from_retraction, psi_from_retraction, surface_tension};
use crate::qspace::{bulk_energy_eps, bulk_gradient, uniaxial_retract, BulkParams, QTensor};
use crate::solver::{gl_energy, SimState};

/// One CSV row. Field order is the column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "E_vol")]
    pub e_vol: f64,
    pub kinetic: f64,
    pub gl_energy: f64,
    pub diss_parallel_cum: f64,
    pub diss_transport_cum: f64,
    #[serde(rename = "maxQ")]
    pub max_q: f64,
    #[serde(rename = "R_measured")]
    pub r_measured: f64,
    pub clamp_count: u64,
}

pub const CSV_HEADER: &str =
    "t,E,E_vol,kinetic,gl_energy,diss_parallel_cum,diss_transport_cum,maxQ,R_measured,clamp_count";

impl DiagnosticsRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            self.t,
            self.e,
            self.e_vol,
            self.kinetic,
            self.gl_energy,
            self.diss_parallel_cum,
            self.diss_transport_cum,
            self.max_q,
            self.r_measured,
            self.clamp_count
        )
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.e,
            self.e_vol,
            self.kinetic,
            self.gl_energy,
            self.diss_parallel_cum,
            self.diss_transport_cum,
            self.max_q,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Pointwise ψ data.
#[derive(Debug, Clone)]
pub struct PsiFields {
    pub psi: ScalarField,
    /// `Dd^F(Q)` per cell.
    pub dquasi: QField,
    /// `Dd^F(Q) : ∇Q`.
    pub grad_chain: VectorField,
    /// Centered differences of `ψ`.
    pub grad_discrete: VectorField,
    /// `∇ψ/|∇ψ|` from the chain-rule gradient, 0 below `1e−12`.
    pub normal: VectorField,
    /// `h² Σ |chain − discrete|` over cells at least two cells from the wall.
    pub discrepancy_l1: f64,
    pub clamp_count: u64,
}

const GUARD: f64 = 1e-12;

#[inline]
fn unit_or_zero(v: Vec2) -> Vec2 {
    let n = v.norm();
    if n > GUARD {
        v * (1.0 / n)
    } else {
        Vec2::ZERO
    }
}

pub fn psi_and_normal(q: &QField, params: &BulkParams) -> PsiFields {
    let g = q.grid;
    let mut psi = Field::zeros(g);
    let mut dq = Field::zeros(g);
    let mut clamp_count = 0;
    for (k, qk) in q.data.iter().enumerate() {
        let r = uniaxial_retract(qk, params);
        clamp_count += r.clamped as u64;
        psi.data[k] = psi_from_retraction(&r, params);
        dq.data[k] = dquasi_from_retraction(qk, &r, params);
    }
    let (dx, dy) = partials(q);
    let grad_chain: VectorField = Field {
        grid: g,
        data: (0..g.len())
            .map(|k| Vec2::new(dq.data[k].dot(&dx.data[k]), dq.data[k].dot(&dy.data[k])))
            .collect(),
    };
    let (px, py) = partials(&psi);
    let grad_discrete: VectorField = Field {
        grid: g,
        data: px.data.iter().zip(&py.data).map(|(&a, &b)| Vec2::new(a, b)).collect(),
    };
    let mut disc = 0.0;
    for j in 2..g.ny.saturating_sub(2) {
        for i in 2..g.nx.saturating_sub(2) {
            let k = g.idx(i, j);
            disc += (grad_chain.data[k] - grad_discrete.data[k]).norm();
        }
    }
    let normal = grad_chain.map(|v| unit_or_zero(*v));
    PsiFields {
        psi,
        dquasi: dq,
        grad_chain,
        grad_discrete,
        normal,
        discrepancy_l1: disc * g.cell_area(),
        clamp_count,
    }
}

/// Component of `dq` along `ddf` in the Frobenius inner product; 0 when
/// `ddf = 0`.
pub fn projection_pi(ddf: &QTensor, dq: &QTensor) -> QTensor {
    let n2 = ddf.norm_sq();
    if n2 == 0.0 {
        return QTensor::ZERO;
    }
    *ddf * (ddf.dot(dq) / n2)
}

/// `H_ε = −(εΔQ − DF(Q)/ε) : ∇Q / |∇Q|`, 0 where `|∇Q| < 1e−12`.
pub fn approx_curvature(q: &QField, params: &BulkParams, eps: f64) -> VectorField {
    let lap = laplacian(q);
    let (dx, dy) = partials(q);
    Field {
        grid: q.grid,
        data: (0..q.grid.len())
            .map(|k| {
                let gn = (dx.data[k].norm_sq() + dy.data[k].norm_sq()).sqrt();
                if gn < GUARD {
                    return Vec2::ZERO;
                }
                let mu = lap.data[k] * eps - bulk_gradient(&q.data[k], params) * (1.0 / eps);
                Vec2::new(mu.dot(&dx.data[k]), mu.dot(&dy.data[k])) * (-1.0 / gn)
            })
            .collect(),
    }
}

/// Calibration field `ξ_c = −ξ` sampled at cell centers.
pub fn calibration_field(q: &QField, iface: &AnalyticInterface, t: f64) -> VectorField {
    Field::from_fn(q.grid, |x| -iface.xi_field(x, t))
}

pub const COERCIVITY_LABELS: [&str; 6] = [
    "normal_tilt",
    "equipartition_gap",
    "projected_equipartition",
    "tangential_gradient",
    "calibration_gap",
    "distance_weighted_energy",
];

/// Everything evaluated on one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub e: f64,
    pub e_vol: f64,
    pub kinetic: f64,
    pub gl_energy: f64,
    pub max_q: f64,
    pub r_measured: Option<f64>,
    pub clamp_count: u64,
    /// Coercivity quantities bounded by E, in [`COERCIVITY_LABELS`] order.
    pub coercivity: [f64; 6],
    /// `max(|Dd^F| − √(2F_ε))` over the grid; must be ≤ 0 up to roundoff.
    pub lipschitz_excess: f64,
    pub psi_discrepancy_l1: f64,
}

impl Snapshot {
    pub fn record(&self, diss_parallel_cum: f64, diss_transport_cum: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t: self.t,
            e: self.e,
            e_vol: self.e_vol,
            kinetic: self.kinetic,
            gl_energy: self.gl_energy,
            diss_parallel_cum,
            diss_transport_cum,
            max_q: self.max_q,
            r_measured: self.r_measured.unwrap_or(f64::NAN),
            clamp_count: self.clamp_count,
        }
    }
}

/// Evaluate E, E_vol, the coercivity quantities and the checks on a state.
/// The reference velocity is 0.
pub fn evaluate(state: &SimState, iface: &AnalyticInterface) -> Snapshot {
    let q = &state.q;
    let g = q.grid;
    let p = &state.params;
    let eps = state.eps;
    let t = state.t;
    let sigma = surface_tension(p);
    let pf = psi_and_normal(q, p);
    let (dx, dy) = partials(q);
    let h2 = g.cell_area();

    let mut e_int = 0.0;
    let mut e_vol = 0.0;
    let mut co = [0.0; 6];
    let mut lip = f64::NEG_INFINITY;
    let mut max_q = 0.0f64;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            let x = g.center(i, j);
            let geo = iface.sample(x, t);
            let xi_c = -geo.xi;
            let qk = &q.data[k];
            max_q = max_q.max(qk.norm());
            let f_eps = bulk_energy_eps(qk, p, eps);
            let grad_sq = dx.data[k].norm_sq() + dy.data[k].norm_sq();
            let a = 0.5 * eps * grad_sq + f_eps / eps;
            let gpsi = pf.grad_chain.data[k];
            let gpsi_n = gpsi.norm();
            let n_eps = pf.normal.data[k];
            e_int += a - xi_c.dot(&gpsi);

            let chi = if geo.d < 0.0 { 1.0 } else { 0.0 };
            e_vol += (sigma * chi - pf.psi.data[k]) * geo.theta;

            let ddf = &pf.dquasi.data[k];
            let sq2f = (2.0 * f_eps).sqrt();
            lip = lip.max(ddf.norm() - sq2f);

            let pix = projection_pi(ddf, &dx.data[k]);
            let piy = projection_pi(ddf, &dy.data[k]);
            let pi_n = (pix.norm_sq() + piy.norm_sq()).sqrt();
            let tang = (dx.data[k] - pix).norm_sq() + (dy.data[k] - piy).norm_sq();
            let tilt = n_eps - xi_c;
            co[0] += tilt.dot(&tilt) * gpsi_n;
            co[1] += a - gpsi_n;
            co[2] += 0.5 * (eps.sqrt() * pi_n - sq2f / eps.sqrt()).powi(2);
            co[3] += 0.5 * eps * tang;
            co[4] += (1.0 - xi_c.dot(&n_eps)) * gpsi_n;
            co[5] += (a + gpsi_n) * (geo.d * geo.d).min(1.0);
        }
    }
    let kinetic = state.v.kinetic_energy();
    co.iter_mut().for_each(|c| *c *= h2);
    let r_measured = match iface.shape {
        crate::geometry::Shape::Circle { center, .. } => measured_radius(q, p, center),
        crate::geometry::Shape::Flat { .. } => None,
    };
    Snapshot {
        t,
        e: kinetic + e_int * h2,
        e_vol: e_vol * h2,
        kinetic,
        gl_energy: gl_energy(q, p, eps),
        max_q,
        r_measured,
        clamp_count: pf.clamp_count,
        coercivity: co,
        lipschitz_excess: lip,
        psi_discrepancy_l1: pf.discrepancy_l1,
    }
}

/// Relative entropy E with zero reference velocity.
pub fn relative_entropy(state: &SimState, iface: &AnalyticInterface) -> f64 {
    evaluate(state, iface).e
}

/// Bulk error `∫(σχ − ψ)ϑ(d)`.
pub fn bulk_error(q: &QField, params: &BulkParams, iface: &AnalyticInterface, t: f64) -> f64 {
    let sigma = surface_tension(params);
    let g = q.grid;
    let mut s = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let x = g.center(i, j);
            let d = iface.signed_distance(x, t);
            let chi = if d < 0.0 { 1.0 } else { 0.0 };
            let psi = psi_from_retraction(&uniaxial_retract(&q.at(i, j), params), params);
            s += (sigma * chi - psi) * crate::geometry::theta_trunc(d, iface.delta);
        }
    }
    s * g.cell_area()
}

/// Time-quadrature increments `(diss_parallel, diss_transport)` over one
/// step from `(q_prev, v_prev)` at time `t_prev` to `q_next`.
pub fn dissipation_terms(
    q_prev: &QField,
    q_next: &QField,
    v_prev: Option<&VectorField>,
    params: &BulkParams,
    eps: f64,
    iface: &AnalyticInterface,
    t_prev: f64,
    dt: f64,
) -> (f64, f64) {
    let g = q_prev.grid;
    let (dx, dy) = partials(q_prev);
    let div_xi_c = divergence(&calibration_field(q_prev, iface, t_prev));
    let inv_dt = 1.0 / dt;
    let mut par = 0.0;
    let mut tr = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            let qk = &q_prev.data[k];
            let mut mat = (q_next.data[k] - *qk) * inv_dt;
            if let Some(v) = v_prev {
                let w = v.data[k];
                mat += dx.data[k] * w.x + dy.data[k] * w.y;
            }
            let div = div_xi_c.data[k];
            let r1 = if div == 0.0 {
                mat * eps
            } else {
                let ddf = dquasi_from_retraction(qk, &uniaxial_retract(qk, params), params);
                mat * eps - ddf * div
            };
            par += r1.norm_sq();
            let hv = iface.curvature_ext(g.center(i, j), t_prev);
            let r2 = mat + dx.data[k] * hv.x + dy.data[k] * hv.y;
            tr += r2.norm_sq();
        }
    }
    let h2 = g.cell_area();
    (dt * par * h2 / (4.0 * eps), dt * eps * tr * h2 / 4.0)
}

/// Bilinear interpolation of a cell-centered scalar, clamped at the edge.
fn bilinear(f: &ScalarField, x: [f64; 2]) -> f64 {
    let g = f.grid;
    let fx = ((x[0] - g.origin[0]) / g.h - 0.5).clamp(0.0, (g.nx - 1) as f64);
    let fy = ((x[1] - g.origin[1]) / g.h - 0.5).clamp(0.0, (g.ny - 1) as f64);
    let i0 = (fx.floor() as usize).min(g.nx - 2);
    let j0 = (fy.floor() as usize).min(g.ny - 2);
    let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
    let v = |i: usize, j: usize| f.data[g.idx(i, j)];
    (1.0 - ty) * ((1.0 - tx) * v(i0, j0) + tx * v(i0 + 1, j0))
        + ty * ((1.0 - tx) * v(i0, j0 + 1) + tx * v(i0 + 1, j0 + 1))
}

pub const RADIUS_RAYS: usize = 64;

/// Mean over angular rays of the outermost radius where the retracted
/// order `s` crosses `s₊/2`. `None` if any ray has no crossing.
pub fn measured_radius(q: &QField, params: &BulkParams, center: [f64; 2]) -> Option<f64> {
    let g = q.grid;
    let s = q.map(|qk| uniaxial_retract(qk, params).s);
    let level = 0.5 * params.s_plus();
    let r_max = (center[0] - g.origin[0])
        .min(g.origin[0] + g.width() - center[0])
        .min(center[1] - g.origin[1])
        .min(g.origin[1] + g.height() - center[1]);
    let dr = 0.25 * g.h;
    let steps = (r_max / dr).floor() as usize;
    let mut total = 0.0;
    for k in 0..RADIUS_RAYS {
        let a = 2.0 * std::f64::consts::PI * k as f64 / RADIUS_RAYS as f64;
        let (c, sn) = (a.cos(), a.sin());
        let at = |r: f64| bilinear(&s, [center[0] + r * c, center[1] + r * sn]) - level;
        let mut found = None;
        let mut prev = at(0.0);
        for m in 1..=steps {
            let r = m as f64 * dr;
            let cur = at(r);
            if prev >= 0.0 && cur < 0.0 {
                found = Some(r - dr + dr * prev / (prev - cur));
            }
            prev = cur;
        }
        total += found?;
    }
    Some(total / RADIUS_RAYS as f64)
}
