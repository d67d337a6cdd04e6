//! Fast self-checks exposed by `qsl check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::AnalyticInterface;
use crate::grid::{Boundary, Field, Grid2D};
use crate::profiles::{
    dquasi_point, quasi_dist_uni, surface_tension, surface_tension_by_quadrature, wave_profile, wave_residual,
};
use crate::qspace::{bulk_energy_eps, uniaxial, uniaxial_retract, BulkParams, QTensor};
use crate::solver::{SolverOptions, Solver};

/// Seed of the random tensor sample.
pub const LIPSCHITZ_SEED: u64 = 0x5eed_0001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn le(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
        }
    }
}

pub fn surface_tension_check(p: &BulkParams) -> CheckResult {
    let closed = surface_tension(p);
    let quad = surface_tension_by_quadrature(p);
    let err = (closed - 3f64.sqrt()).abs().max((quad - closed).abs());
    CheckResult::le("surface tension", err, 1e-12)
}

pub fn wave_check(p: &BulkParams) -> CheckResult {
    let worst = (0..=100)
        .map(|k| wave_residual(-5.0 + 0.1 * k as f64, p).abs())
        .fold(0.0, f64::max);
    CheckResult::le("travelling wave residual", worst, 1e-10)
}

/// Endpoint values of `g`, the Lipschitz bound on a random sample inside the
/// ball of radius `c0`, and equality `|Dd^F|² = 2F` on the uniaxial branch.
pub fn quasi_distance_checks(p: &BulkParams, eps: f64, samples: usize) -> Vec<CheckResult> {
    let sigma = surface_tension(p);
    let sp = p.s_plus();
    let ends = [
        (quasi_dist_uni(0.0, p) - sigma).abs(),
        quasi_dist_uni(sp, p).abs(),
        (quasi_dist_uni(0.5 * sp, p) - 0.5 * sigma).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let c0 = p.c0(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(LIPSCHITZ_SEED);
    let mut excess = f64::NEG_INFINITY;
    for _ in 0..samples {
        let mut c = [0.0; 5];
        for x in &mut c {
            *x = rng.gen_range(-1.0..1.0);
        }
        let q = QTensor::from_components(c);
        let r = c0 * rng.gen::<f64>().sqrt();
        let q = q * (r / q.norm().max(1e-300));
        let lhs = dquasi_point(&q, p).norm();
        excess = excess.max(lhs - (2.0 * bulk_energy_eps(&q, p, eps)).sqrt());
    }
    let mut branch = 0.0f64;
    for k in 1..=200 {
        let s = sp * k as f64 / 200.0;
        let q = uniaxial(s, [0.6, 0.0, 0.8]).expect("unit director");
        // Squared: F has a double root at s_plus, where the square root
        // would amplify roundoff in F to ~1e-7.
        let lhs = dquasi_point(&q, p).norm_sq();
        branch = branch.max((lhs - 2.0 * bulk_energy_eps(&q, p, 0.0)).abs());
    }
    vec![
        CheckResult::le("quasi-distance endpoints", ends, 1e-12),
        CheckResult::le("Lipschitz bound, random tensors", excess, 0.0),
        CheckResult::le("Lipschitz equality, uniaxial branch", branch, 1e-10),
    ]
}

/// Periodic strip with frozen velocity initialised with the exact profile
/// `S(d/ε)`; returns the sup-norm drift of the order parameter after
/// `steps` steps.
pub fn standing_wave_drift(p: &BulkParams, eps: f64, cells_per_eps: f64, steps: usize) -> Result<f64> {
    let h = eps / cells_per_eps;
    let n = (2.0 / h).round() as usize;
    let g = Grid2D::new(4, n, 2.0 / n as f64, [0.0, -1.0], Boundary::Periodic)?;
    let iface = AnalyticInterface::flat_periodic(-0.5, 2.0, 0.3)?;
    let exact = |x: [f64; 2]| wave_profile(iface.signed_distance(x, 0.0) / eps, p);
    let q0 = Field::from_fn(g, |x| uniaxial(exact(x), [0.0, 0.0, 1.0]).expect("unit director"));
    let sup = q0.data.iter().fold(0.0f64, |m, q| m.max(q.norm()));
    let opts = SolverOptions {
        frozen_velocity: true,
        ..SolverOptions::default()
    };
    let mut solver = Solver::new(g, *p, eps, opts, sup)?;
    let mut state = solver.initial_state(q0)?;
    for _ in 0..steps {
        solver.step(&mut state)?;
    }
    let mut drift = 0.0f64;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let s = uniaxial_retract(&state.q.at(i, j), p).s;
            drift = drift.max((s - exact(g.center(i, j))).abs());
        }
    }
    Ok(drift)
}

/// Everything `qsl check` runs.
pub fn run_all(p: &BulkParams) -> Result<Vec<CheckResult>> {
    let mut out = vec![surface_tension_check(p), wave_check(p)];
    out.extend(quasi_distance_checks(p, 0.0, 10_000));
    out.push(CheckResult::le(
        "standing wave drift",
        standing_wave_drift(p, 0.1, 8.0, 1000)?,
        1e-3,
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_checks_pass_for_default_params() {
        let p = BulkParams::default();
        assert!(surface_tension_check(&p).passed);
        assert!(wave_check(&p).passed);
        for c in quasi_distance_checks(&p, 0.0, 2000) {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn short_standing_wave_drifts_little() {
        let d = standing_wave_drift(&BulkParams::default(), 0.1, 8.0, 50).unwrap();
        assert!(d < 1e-3, "{d}");
    }
}
