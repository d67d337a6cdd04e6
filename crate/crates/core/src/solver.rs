//! Time stepping for the coupled Navier–Stokes / Q-tensor system.
//!
//! One step, from `(v^n, Q^n)`:
//! 1. `Q^{n+1}` from the semi-implicit reaction–diffusion–transport update
//!    (`aQ/ε²` and `−ΔQ` implicit, the rest of `DF/ε²` and `(v^n·∇)Q^n`
//!    explicit), solved by CG;
//! 2. capillary force `−ε div(∇Q^n ⊙ ∇Q^n)` on the velocity faces;
//! 3. implicit viscous predictor, then projection onto discretely
//!    divergence-free face velocities.
//!
//! After each step the maximum principle, discrete incompressibility,
//! finiteness and the energy inequality are checked; violations abort the
//! run with [`QslError::Invariant`].

use crate::error::{QslError, Result};
use crate::geometry::{zeta_tilde, AnalyticInterface};
use crate::grid::{
    advect, laplacian, laplacian_into, partials, u_stride, Boundary, Field, Grid2D, MacVelocity,
    QField, ScalarField,
};
use crate::linsolve::{cg, PoissonSolver};
use crate::profiles::wave_profile;
use crate::qspace::{bulk_energy_eps, bulk_gradient, uniaxial, BulkParams, QTensor, Vec3};

/// `min(ε²/20, h²/4)`.
pub fn default_dt(eps: f64, h: f64) -> f64 {
    (eps * eps / 20.0).min(h * h / 4.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Overrides [`default_dt`].
    pub dt: Option<f64>,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// Keep `v ≡ 0` and skip the momentum equation.
    pub frozen_velocity: bool,
    pub energy_slack: f64,
    pub div_tol: f64,
    pub check_energy: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dt: None,
            cg_tol: 1e-10,
            cg_max_iter: 5000,
            frozen_velocity: false,
            energy_slack: 1e-8,
            div_tol: 1e-10,
            check_energy: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub step: usize,
    pub v: MacVelocity,
    pub p: ScalarField,
    pub q: QField,
    pub eps: f64,
    pub params: BulkParams,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub kinetic: f64,
    pub gl: f64,
}

impl Energy {
    pub fn total(&self) -> f64 {
        self.kinetic + self.gl
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub q_iterations: usize,
    pub v_iterations: usize,
    pub energy: Energy,
    pub max_q: f64,
    pub max_div: f64,
}

/// Kinetic energy (face sum) and Ginzburg–Landau energy.
///
/// The Dirichlet-energy part is `−(ε/2) h² Σ Q:ΔQ`, the summation-by-parts
/// form of `(ε/2)∫|∇Q|²` that matches the implicit Laplacian exactly.
pub fn total_energy(state: &SimState) -> Energy {
    Energy {
        kinetic: state.v.kinetic_energy(),
        gl: gl_energy(&state.q, &state.params, state.eps),
    }
}

pub fn gl_energy(q: &QField, params: &BulkParams, eps: f64) -> f64 {
    let lap = laplacian(q);
    let h2 = q.grid.cell_area();
    let mut s = 0.0;
    for (qi, li) in q.data.iter().zip(&lap.data) {
        s += -0.5 * eps * qi.dot(li) + bulk_energy_eps(qi, params, eps) / eps;
    }
    s * h2
}

/// Cell-centered `M_ij = ∂_i Q : ∂_j Q` as `(Mxx, Mxy, Myy)`.
pub fn gradient_tensor(q: &QField) -> (ScalarField, ScalarField, ScalarField) {
    let (dx, dy) = partials(q);
    let mxx = Field {
        grid: q.grid,
        data: dx.data.iter().map(|a| a.dot(a)).collect(),
    };
    let mxy = Field {
        grid: q.grid,
        data: dx.data.iter().zip(&dy.data).map(|(a, b)| a.dot(b)).collect(),
    };
    let myy = Field {
        grid: q.grid,
        data: dy.data.iter().map(|b| b.dot(b)).collect(),
    };
    (mxx, mxy, myy)
}

/// `−ε div M` on the velocity faces. Normal stresses are differenced
/// compactly across each face, shear stresses are averaged from the two
/// adjacent cells. A field depending on `x` only therefore yields an exact
/// discrete face gradient.
pub fn capillary_force(q: &QField, eps: f64) -> MacVelocity {
    let g = q.grid;
    let (mxx, mxy, myy) = gradient_tensor(q);
    let (dx_mxy, dy_mxy) = partials(&mxy);
    let mut f = MacVelocity::zeros(g);
    let su = u_stride(&g);
    let inv_h = 1.0 / g.h;
    let periodic = g.bc == Boundary::Periodic;
    for j in 0..g.ny {
        let range = if periodic { 0..g.nx } else { 1..g.nx };
        for i in range {
            let im = if i == 0 { g.nx - 1 } else { i - 1 };
            let (a, b) = (g.idx(im, j), g.idx(i, j));
            f.u[j * su + i] =
                -eps * ((mxx.data[b] - mxx.data[a]) * inv_h + 0.5 * (dy_mxy.data[a] + dy_mxy.data[b]));
        }
    }
    let range = if periodic { 0..g.ny } else { 1..g.ny };
    for j in range {
        let jm = if j == 0 { g.ny - 1 } else { j - 1 };
        for i in 0..g.nx {
            let (a, b) = (g.idx(i, jm), g.idx(i, j));
            f.v[j * g.nx + i] =
                -eps * ((myy.data[b] - myy.data[a]) * inv_h + 0.5 * (dx_mxy.data[a] + dx_mxy.data[b]));
        }
    }
    f
}

/// Index layout of one staggered component.
#[derive(Debug, Clone, Copy)]
struct FaceLattice {
    n0: usize,
    n1: usize,
    /// 0 for x-faces (`u`), 1 for y-faces (`v`).
    normal_axis: usize,
    periodic: bool,
}

impl FaceLattice {
    fn u(g: &Grid2D) -> Self {
        let periodic = g.bc == Boundary::Periodic;
        Self {
            n0: if periodic { g.nx } else { g.nx + 1 },
            n1: g.ny,
            normal_axis: 0,
            periodic,
        }
    }

    fn v(g: &Grid2D) -> Self {
        let periodic = g.bc == Boundary::Periodic;
        Self {
            n0: g.nx,
            n1: if periodic { g.ny } else { g.ny + 1 },
            normal_axis: 1,
            periodic,
        }
    }

    #[inline]
    fn is_wall(&self, i: usize, j: usize) -> bool {
        !self.periodic
            && match self.normal_axis {
                0 => i == 0 || i + 1 == self.n0,
                _ => j == 0 || j + 1 == self.n1,
            }
    }

    /// Neighbor value for the viscous stencil: walls normal to the face
    /// contribute 0, the tangential no-slip wall reflects (`−x`).
    #[inline]
    fn neighbor(&self, x: &[f64], i: usize, j: usize, di: isize, dj: isize) -> f64 {
        let (n0, n1) = (self.n0 as isize, self.n1 as isize);
        let (mut ii, mut jj) = (i as isize + di, j as isize + dj);
        if self.periodic {
            ii = ii.rem_euclid(n0);
            jj = jj.rem_euclid(n1);
            return x[(jj * n0 + ii) as usize];
        }
        let tangential_ghost = match self.normal_axis {
            0 => jj < 0 || jj >= n1,
            _ => ii < 0 || ii >= n0,
        };
        if tangential_ghost {
            return -x[j * self.n0 + i];
        }
        if self.is_wall(ii as usize, jj as usize) {
            return 0.0;
        }
        x[(jj * n0 + ii) as usize]
    }

    /// `y = (1/dt) x − Δx` on free faces, `y = x/dt` on wall faces.
    fn helmholtz(&self, inv_dt: f64, inv_h2: f64, x: &[f64], y: &mut [f64]) {
        for j in 0..self.n1 {
            for i in 0..self.n0 {
                let k = j * self.n0 + i;
                if self.is_wall(i, j) {
                    y[k] = x[k] * inv_dt;
                    continue;
                }
                let s = self.neighbor(x, i, j, -1, 0)
                    + self.neighbor(x, i, j, 1, 0)
                    + self.neighbor(x, i, j, 0, -1)
                    + self.neighbor(x, i, j, 0, 1);
                y[k] = x[k] * inv_dt - (s - 4.0 * x[k]) * inv_h2;
            }
        }
    }
}

pub struct Solver {
    pub grid: Grid2D,
    pub params: BulkParams,
    pub eps: f64,
    pub dt: f64,
    pub opts: SolverOptions,
    /// Maximum-principle bound for this run.
    pub c0: f64,
    poisson: PoissonSolver,
    last_energy: Option<f64>,
}

impl Solver {
    pub fn new(grid: Grid2D, params: BulkParams, eps: f64, opts: SolverOptions, q0_sup: f64) -> Result<Self> {
        params.validate()?;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(QslError::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        let dt = opts.dt.unwrap_or_else(|| default_dt(eps, grid.h));
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(QslError::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        Ok(Self {
            grid,
            params,
            eps,
            dt,
            opts,
            c0: params.c0(q0_sup),
            poisson: PoissonSolver::new(grid),
            last_energy: None,
        })
    }

    pub fn initial_state(&self, q0: QField) -> Result<SimState> {
        if q0.grid != self.grid {
            return Err(QslError::InvalidInput("initial Q is on a different grid".into()));
        }
        Ok(SimState {
            t: 0.0,
            step: 0,
            v: MacVelocity::zeros(self.grid),
            p: Field::zeros(self.grid),
            q: q0,
            eps: self.eps,
            params: self.params,
            dt: self.dt,
        })
    }

    /// `Q^{n+1}` for the given cell-centered transport velocity.
    pub fn q_step(&self, q: &QField, vc: Option<&Field<crate::grid::Vec2>>) -> Result<(QField, usize)> {
        let g = self.grid;
        let (a, eps2) = (self.params.a, self.eps * self.eps);
        let inv_dt = 1.0 / self.dt;
        let adv = vc.map(|v| advect(v, q));
        let mut rhs = Vec::with_capacity(g.len());
        for (k, qk) in q.data.iter().enumerate() {
            let mut r = *qk * inv_dt - (bulk_gradient(qk, &self.params) - *qk * a) * (1.0 / eps2);
            if let Some(adv) = &adv {
                r -= adv.data[k];
            }
            rhs.push(r);
        }
        let shift = inv_dt + a / eps2;
        let mut x = q.data.clone();
        let stats = cg(
            |x: &[QTensor], y: &mut [QTensor]| {
                laplacian_into(&g, x, y);
                for (yi, xi) in y.iter_mut().zip(x) {
                    *yi = *xi * shift - *yi;
                }
            },
            &rhs,
            &mut x,
            self.opts.cg_tol,
            self.opts.cg_max_iter,
            "q-step CG",
        )?;
        Ok((Field { grid: g, data: x }, stats.iterations))
    }

    /// Projection step: returns `(v^{n+1}, p^{n+1}, viscous CG iterations)`.
    pub fn ns_step(&self, v: &MacVelocity, force: &MacVelocity) -> Result<(MacVelocity, ScalarField, usize)> {
        let g = self.grid;
        let inv_dt = 1.0 / self.dt;
        let inv_h2 = 1.0 / (g.h * g.h);
        let su = u_stride(&g);
        let vc = v.to_centers();
        let adv = advect(&vc, &vc);
        let lu = FaceLattice::u(&g);
        let lv = FaceLattice::v(&g);

        let mut rhs_u = vec![0.0; v.u.len()];
        for j in 0..lu.n1 {
            for i in 0..lu.n0 {
                if lu.is_wall(i, j) {
                    continue;
                }
                let im = if i == 0 { g.nx - 1 } else { i - 1 };
                let ip = i % g.nx;
                let a = 0.5 * (adv.data[g.idx(im, j)].x + adv.data[g.idx(ip, j)].x);
                let k = j * su + i;
                rhs_u[k] = v.u[k] * inv_dt - a + force.u[k];
            }
        }
        let mut rhs_v = vec![0.0; v.v.len()];
        for j in 0..lv.n1 {
            for i in 0..lv.n0 {
                if lv.is_wall(i, j) {
                    continue;
                }
                let jm = if j == 0 { g.ny - 1 } else { j - 1 };
                let jp = j % g.ny;
                let a = 0.5 * (adv.data[g.idx(i, jm)].y + adv.data[g.idx(i, jp)].y);
                let k = j * g.nx + i;
                rhs_v[k] = v.v[k] * inv_dt - a + force.v[k];
            }
        }

        let mut star = v.clone();
        let tol = self.opts.cg_tol;
        let iu = cg(
            |x: &[f64], y: &mut [f64]| lu.helmholtz(inv_dt, inv_h2, x, y),
            &rhs_u,
            &mut star.u,
            tol,
            self.opts.cg_max_iter,
            "viscous CG (u)",
        )?;
        let iv = cg(
            |x: &[f64], y: &mut [f64]| lv.helmholtz(inv_dt, inv_h2, x, y),
            &rhs_v,
            &mut star.v,
            tol,
            self.opts.cg_max_iter,
            "viscous CG (v)",
        )?;
        star.enforce_no_penetration();

        let (vn, p) = self.project(&star);
        Ok((vn, p, iu.iterations + iv.iterations))
    }

    /// Leray projection `v − dt ∇p` with `L p = div v / dt`.
    pub fn project(&self, star: &MacVelocity) -> (MacVelocity, ScalarField) {
        let g = self.grid;
        let su = u_stride(&g);
        let mut p = star.divergence();
        let inv_dt = 1.0 / self.dt;
        p.data.iter_mut().for_each(|d| *d *= inv_dt);
        self.poisson.solve(&mut p.data);
        let mut out = star.clone();
        let s = self.dt / g.h;
        let periodic = g.bc == Boundary::Periodic;
        for j in 0..g.ny {
            let range = if periodic { 0..g.nx } else { 1..g.nx };
            for i in range {
                let im = if i == 0 { g.nx - 1 } else { i - 1 };
                out.u[j * su + i] -= s * (p.data[g.idx(i, j)] - p.data[g.idx(im, j)]);
            }
        }
        let range = if periodic { 0..g.ny } else { 1..g.ny };
        for j in range {
            let jm = if j == 0 { g.ny - 1 } else { j - 1 };
            for i in 0..g.nx {
                out.v[j * g.nx + i] -= s * (p.data[g.idx(i, j)] - p.data[g.idx(i, jm)]);
            }
        }
        (out, p)
    }

    /// Advance one step and check every per-step invariant.
    pub fn step(&mut self, state: &mut SimState) -> Result<StepReport> {
        let before = match self.last_energy {
            Some(e) => e,
            None => total_energy(state).total(),
        };
        let vc = if self.opts.frozen_velocity {
            None
        } else {
            Some(state.v.to_centers())
        };
        let (q_new, q_iterations) = self.q_step(&state.q, vc.as_ref())?;
        let mut v_iterations = 0;
        if !self.opts.frozen_velocity {
            let force = capillary_force(&state.q, self.eps);
            let (v, p, it) = self.ns_step(&state.v, &force)?;
            state.v = v;
            state.p = p;
            v_iterations = it;
        }
        state.q = q_new;
        state.t += self.dt;
        state.step += 1;

        let t = state.t;
        if !state.q.all_finite() || !state.v.all_finite() {
            return Err(QslError::Invariant {
                t,
                what: "non-finite value in Q or v".into(),
            });
        }
        let max_q = state.q.data.iter().fold(0.0f64, |m, q| m.max(q.norm()));
        if max_q > self.c0 * (1.0 + 1e-12) {
            return Err(QslError::Invariant {
                t,
                what: format!("maximum principle: max|Q| = {max_q} > c0 = {}", self.c0),
            });
        }
        let max_div = state.v.divergence().data.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if max_div > self.opts.div_tol {
            return Err(QslError::Invariant {
                t,
                what: format!("divergence {max_div:e} exceeds {:e}", self.opts.div_tol),
            });
        }
        let energy = total_energy(state);
        if self.opts.check_energy && energy.total() - before > self.opts.energy_slack * before.abs() {
            return Err(QslError::Invariant {
                t,
                what: format!(
                    "energy increased from {before:.12e} to {:.12e}",
                    energy.total()
                ),
            });
        }
        self.last_energy = Some(energy.total());
        Ok(StepReport {
            q_iterations,
            v_iterations,
            energy,
            max_q,
            max_div,
        })
    }
}

/// Well-prepared initial data `S̃_ε(x)(u0⊗u0 − I/3)` with
/// `S̃ = ζ̃(d/δ) S(d/ε) + (1 − ζ̃(d/δ)) s₊ χ_{d>0}`.
pub fn build_initial(
    grid: Grid2D,
    interface: &AnalyticInterface,
    eps: f64,
    u0: Vec3,
    params: &BulkParams,
) -> Result<QField> {
    let base = uniaxial(1.0, u0)?;
    let sp = params.s_plus();
    let delta = interface.delta;
    Ok(Field::from_fn(grid, |x| {
        let d = interface.signed_distance(x, 0.0);
        let z = zeta_tilde(d / delta);
        let outer = if d > 0.0 { sp } else { 0.0 };
        let s = z * wave_profile(d / eps, params) + (1.0 - z) * outer;
        base * s
    }))
}
