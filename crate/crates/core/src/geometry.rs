//! Analytic reference interfaces and the geometric fields built on them.
//!
//! Orientation: `d > 0` inside Ω⁺ (the nematic region), `n = ∇d` points
//! into Ω⁺, and `Δd = −H` on the interface. A nematic disc therefore has
//! `H = +1/R` and shrinks by `R(t)² = R0² − 2t`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{QslError, Result};
use crate::grid::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Circle {
        #[serde(default)]
        center: [f64; 2],
        r0: f64,
    },
    /// `d = y − y0`. With a period `P` the distance is the triangle wave
    /// that is positive on `y0 < y < y0 + P/2` (mod `P`): two parallel
    /// fronts per period, for use on a periodic strip.
    Flat {
        y0: f64,
        #[serde(default)]
        period: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticInterface {
    #[serde(flatten)]
    pub shape: Shape,
    pub delta: f64,
}

/// Everything the diagnostics need at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeomSample {
    pub d: f64,
    pub n: Vec2,
    pub h_scalar: f64,
    pub xi: Vec2,
    pub hvec: Vec2,
    pub theta: f64,
}

/// Even cutoff `cos²(πx/2)` on `|x| ≤ 1`.
#[inline]
pub fn phi(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        let c = (0.5 * PI * x).cos();
        c * c
    }
}

#[inline]
pub fn phi_prime(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        -0.5 * PI * (PI * x).sin()
    }
}

/// `t³(10 − 15t + 6t²)` clamped to `[0, 1]`.
#[inline]
pub fn smoothstep5(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// 1 on `|d| ≤ δ`, 0 on `|d| ≥ 2δ`.
#[inline]
pub fn zeta(d: f64, delta: f64) -> f64 {
    1.0 - smoothstep5((d.abs() - delta) / delta)
}

/// 1 on `|s| ≤ 1/2`, 0 on `|s| ≥ 1`.
#[inline]
pub fn zeta_tilde(s: f64) -> f64 {
    1.0 - smoothstep5(2.0 * s.abs() - 1.0)
}

/// Piecewise-linear truncation: `−r` on `|r| ≤ δ`, `∓δ` beyond.
#[inline]
pub fn theta_trunc(r: f64, delta: f64) -> f64 {
    (-r).clamp(-delta, delta)
}

/// Wrap into `[−P/2, P/2)`.
#[inline]
fn wrap(y: f64, p: f64) -> f64 {
    y - p * (y / p + 0.5).floor()
}

impl AnalyticInterface {
    pub fn circle(center: [f64; 2], r0: f64, delta: f64) -> Result<Self> {
        let s = Self {
            shape: Shape::Circle { center, r0 },
            delta,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn flat(y0: f64, delta: f64) -> Result<Self> {
        let s = Self {
            shape: Shape::Flat { y0, period: None },
            delta,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn flat_periodic(y0: f64, period: f64, delta: f64) -> Result<Self> {
        let s = Self {
            shape: Shape::Flat {
                y0,
                period: Some(period),
            },
            delta,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(QslError::Config(m));
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        match self.shape {
            Shape::Circle { center, r0 } => {
                if !(r0 > 0.0 && r0.is_finite()) || !center.iter().all(|c| c.is_finite()) {
                    return bad(format!("bad circle: center {center:?}, r0 {r0}"));
                }
            }
            Shape::Flat { y0, period } => {
                if !y0.is_finite() {
                    return bad(format!("bad flat height {y0}"));
                }
                if let Some(p) = period {
                    if !(p > 4.0 * self.delta) {
                        return bad(format!("period {p} must exceed 4 delta for separated fronts"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Check the 3δ wall margin on `[−L, L]²` and the extinction margin
    /// for all `t ≤ t_final`.
    pub fn validate_in_domain(&self, half_width: f64, t_final: f64) -> Result<()> {
        self.validate()?;
        let m = 3.0 * self.delta;
        match self.shape {
            Shape::Circle { center, r0 } => {
                // The disc only shrinks, so t = 0 is the binding case.
                for c in center {
                    if c.abs() + r0 > half_width - m {
                        return Err(QslError::Config(format!(
                            "circle (center {center:?}, R0 {r0}) is closer than 3 delta = {m} to the boundary"
                        )));
                    }
                }
                self.evolve(t_final).map(|_| ())
            }
            Shape::Flat { y0, period: None } => {
                if y0.abs() > half_width - m {
                    return Err(QslError::Config(format!(
                        "flat interface y0 = {y0} is closer than 3 delta to the boundary"
                    )));
                }
                Ok(())
            }
            Shape::Flat { period: Some(_), .. } => Ok(()),
        }
    }

    /// `R(t)²`; `None` for flat interfaces.
    pub fn radius_sq(&self, t: f64) -> Option<f64> {
        match self.shape {
            Shape::Circle { r0, .. } => Some(r0 * r0 - 2.0 * t),
            Shape::Flat { .. } => None,
        }
    }

    /// `R(t)`, clamped at 0 past extinction.
    pub fn radius(&self, t: f64) -> Option<f64> {
        self.radius_sq(t).map(|r2| r2.max(0.0).sqrt())
    }

    /// The interface at time `t`, re-based so its own time origin is 0.
    pub fn evolve(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(QslError::InvalidInput(format!("evolve needs t >= 0, got {t}")));
        }
        match self.shape {
            Shape::Circle { center, .. } => {
                let r2 = self.radius_sq(t).unwrap();
                if r2 <= 9.0 * self.delta * self.delta {
                    return Err(QslError::Config(format!(
                        "circle reaches the extinction margin by t = {t} (R^2 = {r2:.4}, need > 9 delta^2)"
                    )));
                }
                Ok(Self {
                    shape: Shape::Circle {
                        center,
                        r0: r2.sqrt(),
                    },
                    delta: self.delta,
                })
            }
            Shape::Flat { .. } => Ok(*self),
        }
    }

    pub fn signed_distance(&self, x: [f64; 2], t: f64) -> f64 {
        match self.shape {
            Shape::Circle { center, .. } => {
                self.radius(t).unwrap() - (x[0] - center[0]).hypot(x[1] - center[1])
            }
            Shape::Flat { y0, period: None } => x[1] - y0,
            Shape::Flat {
                y0,
                period: Some(p),
            } => 0.25 * p - wrap(x[1] - y0 - 0.25 * p, p).abs(),
        }
    }

    /// `∇d`; zero at the circle center where it is undefined.
    pub fn normal(&self, x: [f64; 2]) -> Vec2 {
        match self.shape {
            Shape::Circle { center, .. } => {
                let r = Vec2::new(x[0] - center[0], x[1] - center[1]);
                let nr = r.norm();
                if nr == 0.0 {
                    Vec2::ZERO
                } else {
                    r * (-1.0 / nr)
                }
            }
            Shape::Flat { period: None, .. } => Vec2::new(0.0, 1.0),
            Shape::Flat {
                y0,
                period: Some(p),
            } => {
                let w = wrap(x[1] - y0 - 0.25 * p, p);
                Vec2::new(0.0, if w < 0.0 { 1.0 } else { -1.0 })
            }
        }
    }

    /// Scalar curvature of Γ_t (constant along each interface here).
    pub fn curvature(&self, t: f64) -> f64 {
        match self.shape {
            Shape::Circle { .. } => 1.0 / self.radius(t).unwrap(),
            Shape::Flat { .. } => 0.0,
        }
    }

    /// Orthogonal projection onto Γ_t.
    pub fn project(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let d = self.signed_distance(x, t);
        let n = self.normal(x);
        if let Shape::Circle { center, .. } = self.shape {
            if n == Vec2::ZERO {
                return [center[0] + self.radius(t).unwrap(), center[1]];
            }
        }
        [x[0] - d * n.x, x[1] - d * n.y]
    }

    /// `ξ = φ(d/δ)∇d`.
    pub fn xi_field(&self, x: [f64; 2], t: f64) -> Vec2 {
        let w = phi(self.signed_distance(x, t) / self.delta);
        if w == 0.0 {
            Vec2::ZERO
        } else {
            self.normal(x) * w
        }
    }

    /// Analytic `div ξ = φ′(d/δ)/δ + φ(d/δ)Δd`.
    pub fn div_xi(&self, x: [f64; 2], t: f64) -> f64 {
        let s = self.signed_distance(x, t) / self.delta;
        let lap_d = match self.shape {
            Shape::Circle { center, .. } => {
                -1.0 / (x[0] - center[0]).hypot(x[1] - center[1]).max(f64::MIN_POSITIVE)
            }
            Shape::Flat { .. } => 0.0,
        };
        phi_prime(s) / self.delta + phi(s) * lap_d
    }

    /// `H(P_Γ x)·n·ζ`.
    pub fn curvature_ext(&self, x: [f64; 2], t: f64) -> Vec2 {
        let z = zeta(self.signed_distance(x, t), self.delta);
        if z == 0.0 {
            return Vec2::ZERO;
        }
        self.normal(x) * (self.curvature(t) * z)
    }

    pub fn theta(&self, x: [f64; 2], t: f64) -> f64 {
        theta_trunc(self.signed_distance(x, t), self.delta)
    }

    /// Constant-normal extension of a reference velocity inside Γ_t(3δ).
    pub fn velocity_ext(&self, v_ref: impl Fn([f64; 2], f64) -> Vec2, x: [f64; 2], t: f64) -> Vec2 {
        if self.signed_distance(x, t).abs() < 3.0 * self.delta {
            v_ref(self.project(x, t), t)
        } else {
            Vec2::ZERO
        }
    }

    pub fn sample(&self, x: [f64; 2], t: f64) -> GeomSample {
        let d = self.signed_distance(x, t);
        let n = self.normal(x);
        let h = self.curvature(t);
        let w = phi(d / self.delta);
        let z = zeta(d, self.delta);
        GeomSample {
            d,
            n,
            h_scalar: h,
            xi: n * w,
            hvec: n * (h * z),
            theta: theta_trunc(d, self.delta),
        }
    }
}
