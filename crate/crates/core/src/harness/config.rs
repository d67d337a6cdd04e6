use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{QslError, Result};
use crate::geometry::{AnalyticInterface, Shape};
use crate::grid::{Boundary, Grid2D};
use crate::qspace::BulkParams;
use crate::solver::{default_dt, SolverOptions};

/// Time-step rule `dt = min(eps_factor·ε², h_factor·h²)`, or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DtRule {
    pub eps_factor: f64,
    pub h_factor: f64,
    pub fixed: Option<f64>,
}

impl Default for DtRule {
    fn default() -> Self {
        Self {
            eps_factor: 1.0 / 20.0,
            h_factor: 0.25,
            fixed: None,
        }
    }
}

impl DtRule {
    pub fn dt(&self, eps: f64, h: f64) -> f64 {
        match self.fixed {
            Some(dt) => dt,
            None if *self == Self::default() => default_dt(eps, h),
            None => (self.eps_factor * eps * eps).min(self.h_factor * h * h),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Domain is `[−L, L]²`.
    pub half_width: f64,
    pub interface: AnalyticInterface,
    pub eps_list: Vec<f64>,
    /// Cells per ε: `h ≈ ε/ρ`.
    pub rho: f64,
    pub dt: DtRule,
    pub t_final: f64,
    pub bulk: BulkParams,
    /// Constant unit director of the initial data.
    pub director: [f64; 3],
    /// Diagnostics cadence in steps (the first and last step are always
    /// recorded).
    pub snapshot_every: usize,
    /// Binary Q snapshots every this many steps; 0 disables.
    pub field_snapshot_every: usize,
    pub output_dir: PathBuf,
    /// Concurrent runs in a sweep.
    pub jobs: usize,
    pub boundary: Boundary,
    pub frozen_velocity: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            half_width: 1.0,
            interface: AnalyticInterface {
                shape: Shape::Circle {
                    center: [0.0, 0.0],
                    r0: 0.6,
                },
                delta: 0.1,
            },
            eps_list: vec![0.08, 0.06, 0.04, 0.03],
            rho: 4.0,
            dt: DtRule::default(),
            t_final: 0.1,
            bulk: BulkParams::default(),
            director: [0.0, 0.0, 1.0],
            snapshot_every: 10,
            field_snapshot_every: 0,
            output_dir: PathBuf::from("qsl-out"),
            jobs: 1,
            boundary: Boundary::DirichletZero,
            frozen_velocity: false,
        }
    }
}

fn as_config(e: QslError) -> QslError {
    match e {
        QslError::Config(_) => e,
        QslError::InvalidInput(m) => QslError::Config(m),
        other => QslError::Config(other.to_string()),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| QslError::Config(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| QslError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Check everything that can be checked before stepping. Returns
    /// non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let cfg_err = |m: String| Err(QslError::Config(m));
        self.bulk.validate().map_err(as_config)?;
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return cfg_err(format!("half_width must be positive, got {}", self.half_width));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return cfg_err(format!("t_final must be positive, got {}", self.t_final));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return cfg_err(format!("rho must be positive, got {}", self.rho));
        }
        if self.eps_list.is_empty() {
            return cfg_err("eps_list is empty".into());
        }
        if self.snapshot_every == 0 {
            return cfg_err("snapshot_every must be at least 1".into());
        }
        let n = self.director.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return cfg_err(format!("director must be a unit vector, |u| = {n}"));
        }
        if let Some(dt) = self.dt.fixed {
            if !(dt > 0.0 && dt.is_finite()) {
                return cfg_err(format!("fixed dt must be positive, got {dt}"));
            }
        } else if !(self.dt.eps_factor > 0.0 && self.dt.h_factor > 0.0) {
            return cfg_err("dt factors must be positive".into());
        }
        match (self.boundary, self.interface.shape) {
            (Boundary::DirichletZero, Shape::Flat { period: Some(_), .. }) => {
                return cfg_err("a periodic flat interface needs periodic boundaries".into())
            }
            (Boundary::Periodic, Shape::Flat { period, .. }) => {
                let want = 2.0 * self.half_width;
                if period.map_or(true, |p| (p - want).abs() > 1e-12 * want) {
                    return cfg_err(format!("periodic flat interface needs period = 2L = {want}"));
                }
                self.interface
                    .validate()
                    .map_err(as_config)?;
            }
            (Boundary::Periodic, Shape::Circle { .. }) => {
                return cfg_err("circle runs use dirichlet_zero boundaries".into())
            }
            (Boundary::DirichletZero, _) => self
                .interface
                .validate_in_domain(self.half_width, self.t_final)
                .map_err(as_config)?,
        }
        let mut warnings = Vec::new();
        for &eps in &self.eps_list {
            if !(eps > 0.0 && eps.is_finite()) {
                return cfg_err(format!("eps must be positive, got {eps}"));
            }
            let delta = self.interface.delta;
            if delta <= eps {
                return cfg_err(format!("delta = {delta} must exceed eps = {eps}"));
            }
            if delta <= 2.0 * eps {
                warnings.push(format!(
                    "delta = {delta} <= 2 eps = {}: the transition layer is not fully inside supp xi",
                    2.0 * eps
                ));
            }
        }
        Ok(warnings)
    }

    pub fn grid(&self, eps: f64) -> Result<Grid2D> {
        let n = (2.0 * self.half_width * self.rho / eps - 1e-9).ceil() as usize;
        Grid2D::square(n.max(3), self.half_width, self.boundary)
    }

    pub fn solver_options(&self, eps: f64, grid: &Grid2D) -> SolverOptions {
        SolverOptions {
            dt: Some(self.dt.dt(eps, grid.h)),
            frozen_velocity: self.frozen_velocity,
            ..SolverOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_with_delta_warnings() {
        let c = RunConfig::default();
        let w = c.validate().unwrap();
        // 0.1 <= 2·0.08 and 2·0.06.
        assert_eq!(w.len(), 2);
        assert_eq!(c.grid(0.03).unwrap().nx, 267);
        assert_eq!(c.grid(0.08).unwrap().nx, 100);
    }

    #[test]
    fn json_round_trip_and_partial_documents() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
        let p = RunConfig::from_json(r#"{"eps_list": [0.05], "t_final": 0.02}"#).unwrap();
        assert_eq!(p.eps_list, vec![0.05]);
        assert_eq!(p.rho, 4.0);
        assert!(RunConfig::from_json(r#"{"epsilon": 1}"#).is_err());
    }

    #[test]
    fn rejections() {
        let mut c = RunConfig::default();
        c.interface.shape = Shape::Circle {
            center: [0.0, 0.0],
            r0: 0.8,
        };
        assert!(matches!(c.validate(), Err(QslError::Config(_))));
        let mut c = RunConfig::default();
        c.t_final = 0.15;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.eps_list = vec![0.12];
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.director = [1.0, 1.0, 0.0];
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.boundary = Boundary::Periodic;
        assert!(c.validate().is_err());
    }

    #[test]
    fn dt_rule() {
        let r = DtRule::default();
        assert_eq!(r.dt(0.08, 0.02), (0.08f64 * 0.08 / 20.0).min(0.02 * 0.02 / 4.0));
        let f = DtRule {
            fixed: Some(1e-4),
            ..r
        };
        assert_eq!(f.dt(0.08, 0.02), 1e-4);
    }
}
