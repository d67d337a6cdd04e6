//! Conjugate gradients over field values and fast cell-centered Poisson
//! solvers (DCT for homogeneous Neumann, FFT for periodic).

use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};
use rustfft::{num_complex::Complex, Fft, FftPlanner};

use crate::error::{QslError, Result};
use crate::grid::{Boundary, FieldValue, Grid2D};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub residual: f64,
}

fn dot<T: FieldValue>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.inner(y)).sum()
}

/// Solve `A x = b` for symmetric positive definite `A`, starting from the
/// contents of `x`. Stops when `‖r‖ ≤ tol · max(‖b‖, 1)`.
pub fn cg<T: FieldValue>(
    mut apply: impl FnMut(&[T], &mut [T]),
    b: &[T],
    x: &mut [T],
    tol: f64,
    max_iter: usize,
    solver: &'static str,
) -> Result<CgStats> {
    let n = b.len();
    let mut r = vec![T::zero(); n];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = *bi - *ri;
    }
    let target = tol * dot(b, b).sqrt().max(1.0);
    let mut rr = dot(&r, &r);
    if rr.sqrt() <= target {
        return Ok(CgStats {
            iterations: 0,
            residual: rr.sqrt(),
        });
    }
    let mut p = r.clone();
    let mut ap = vec![T::zero(); n];
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(QslError::NonConvergence {
                solver,
                iterations: it,
                residual: rr.sqrt(),
            });
        }
        let alpha = rr / pap;
        for k in 0..n {
            x[k] += p[k] * alpha;
            r[k] -= ap[k] * alpha;
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            return Ok(CgStats {
                iterations: it,
                residual: rr_new.sqrt(),
            });
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + p[k] * beta;
        }
    }
    Err(QslError::NonConvergence {
        solver,
        iterations: max_iter,
        residual: rr.sqrt(),
    })
}

enum Plans {
    Neumann {
        dct_x: Arc<dyn TransformType2And3<f64>>,
        dct_y: Arc<dyn TransformType2And3<f64>>,
    },
    Periodic {
        fwd_x: Arc<dyn Fft<f64>>,
        inv_x: Arc<dyn Fft<f64>>,
        fwd_y: Arc<dyn Fft<f64>>,
        inv_y: Arc<dyn Fft<f64>>,
    },
}

/// Exact solver for the five-point Laplacian `L p = f` on cell centers.
///
/// `DirichletZero` grids get homogeneous Neumann data (the pressure
/// boundary condition of a no-slip projection), periodic grids wrap. In
/// both cases the constant mode is removed: the result has zero mean and
/// the mean of `f` is ignored.
pub struct PoissonSolver {
    grid: Grid2D,
    plans: Plans,
    eig_x: Vec<f64>,
    eig_y: Vec<f64>,
}

impl PoissonSolver {
    pub fn new(grid: Grid2D) -> Self {
        let (nx, ny, h2) = (grid.nx, grid.ny, grid.h * grid.h);
        let (plans, period) = match grid.bc {
            Boundary::DirichletZero => {
                let mut p = DctPlanner::new();
                (
                    Plans::Neumann {
                        dct_x: p.plan_dct2(nx),
                        dct_y: p.plan_dct2(ny),
                    },
                    1.0,
                )
            }
            Boundary::Periodic => {
                let mut p = FftPlanner::new();
                (
                    Plans::Periodic {
                        fwd_x: p.plan_fft_forward(nx),
                        inv_x: p.plan_fft_inverse(nx),
                        fwd_y: p.plan_fft_forward(ny),
                        inv_y: p.plan_fft_inverse(ny),
                    },
                    2.0,
                )
            }
        };
        let eig = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|k| (2.0 * (period * std::f64::consts::PI * k as f64 / n as f64).cos() - 2.0) / h2)
                .collect()
        };
        Self {
            grid,
            plans,
            eig_x: eig(nx),
            eig_y: eig(ny),
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Overwrite `rhs` with the zero-mean solution.
    pub fn solve(&self, rhs: &mut [f64]) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        assert_eq!(rhs.len(), nx * ny);
        match &self.plans {
            Plans::Neumann { dct_x, dct_y } => {
                let mut col = vec![0.0; ny];
                for row in rhs.chunks_exact_mut(nx) {
                    dct_x.process_dct2(row);
                }
                for i in 0..nx {
                    for j in 0..ny {
                        col[j] = rhs[j * nx + i];
                    }
                    dct_y.process_dct2(&mut col);
                    for j in 0..ny {
                        rhs[j * nx + i] = col[j];
                    }
                }
                self.divide(rhs);
                for i in 0..nx {
                    for j in 0..ny {
                        col[j] = rhs[j * nx + i];
                    }
                    dct_y.process_dct3(&mut col);
                    for j in 0..ny {
                        rhs[j * nx + i] = col[j];
                    }
                }
                for row in rhs.chunks_exact_mut(nx) {
                    dct_x.process_dct3(row);
                }
                // DCT-III ∘ DCT-II = n/2 per axis.
                let s = 4.0 / (nx * ny) as f64;
                rhs.iter_mut().for_each(|v| *v *= s);
            }
            Plans::Periodic {
                fwd_x,
                inv_x,
                fwd_y,
                inv_y,
            } => {
                let mut buf: Vec<Complex<f64>> = rhs.iter().map(|&v| Complex::new(v, 0.0)).collect();
                let mut col = vec![Complex::new(0.0, 0.0); ny];
                for row in buf.chunks_exact_mut(nx) {
                    fwd_x.process(row);
                }
                for i in 0..nx {
                    for j in 0..ny {
                        col[j] = buf[j * nx + i];
                    }
                    fwd_y.process(&mut col);
                    for j in 0..ny {
                        let lam = self.eig_x[i] + self.eig_y[j];
                        buf[j * nx + i] = if i == 0 && j == 0 {
                            Complex::new(0.0, 0.0)
                        } else {
                            col[j] / lam
                        };
                    }
                }
                for i in 0..nx {
                    for j in 0..ny {
                        col[j] = buf[j * nx + i];
                    }
                    inv_y.process(&mut col);
                    for j in 0..ny {
                        buf[j * nx + i] = col[j];
                    }
                }
                for row in buf.chunks_exact_mut(nx) {
                    inv_x.process(row);
                }
                let s = 1.0 / (nx * ny) as f64;
                for (r, c) in rhs.iter_mut().zip(&buf) {
                    *r = c.re * s;
                }
            }
        }
    }

    fn divide(&self, coef: &mut [f64]) {
        let nx = self.grid.nx;
        for (k, c) in coef.iter_mut().enumerate() {
            let (i, j) = (k % nx, k / nx);
            *c = if i == 0 && j == 0 {
                0.0
            } else {
                *c / (self.eig_x[i] + self.eig_y[j])
            };
        }
    }
}

/// Five-point Laplacian with homogeneous Neumann (even reflection) or
/// periodic ghosts; the operator [`PoissonSolver`] inverts.
pub fn pressure_laplacian(g: &Grid2D, p: &[f64], out: &mut [f64]) {
    let (nx, ny) = (g.nx, g.ny);
    let inv_h2 = 1.0 / (g.h * g.h);
    let periodic = g.bc == Boundary::Periodic;
    let at = |i: isize, j: isize| -> f64 {
        let wrapi = |k: isize, n: usize| -> usize {
            if periodic {
                k.rem_euclid(n as isize) as usize
            } else {
                k.clamp(0, n as isize - 1) as usize
            }
        };
        p[wrapi(j, ny) * nx + wrapi(i, nx)]
    };
    for j in 0..ny as isize {
        for i in 0..nx as isize {
            out[j as usize * nx + i as usize] =
                (at(i - 1, j) + at(i + 1, j) + at(i, j - 1) + at(i, j + 1) - 4.0 * at(i, j)) * inv_h2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Vec2;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed | 1;
        (0..n)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    fn zero_mean(v: &mut [f64]) {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter_mut().for_each(|x| *x -= m);
    }

    #[test]
    fn poisson_inverts_laplacian() {
        for bc in [Boundary::DirichletZero, Boundary::Periodic] {
            let g = Grid2D::new(12, 9, 0.1, [0.0, 0.0], bc).unwrap();
            let mut p = noise(g.len(), 5);
            zero_mean(&mut p);
            let mut f = vec![0.0; g.len()];
            pressure_laplacian(&g, &p, &mut f);
            PoissonSolver::new(g).solve(&mut f);
            let err = f.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-11, "{bc:?}: {err}");
        }
    }

    #[test]
    fn cg_solves_shifted_laplacian_on_vectors() {
        let g = Grid2D::new(10, 10, 0.1, [0.0, 0.0], Boundary::DirichletZero).unwrap();
        let shift = 50.0;
        let apply = |x: &[Vec2], y: &mut [Vec2]| {
            crate::grid::laplacian_into(&g, x, y);
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = *xi * shift - *yi;
            }
        };
        let truth: Vec<Vec2> = noise(g.len(), 3)
            .iter()
            .zip(noise(g.len(), 4))
            .map(|(&a, b)| Vec2::new(a, b))
            .collect();
        let mut b = vec![Vec2::ZERO; g.len()];
        apply(&truth, &mut b);
        let mut x = vec![Vec2::ZERO; g.len()];
        let st = cg(apply, &b, &mut x, 1e-12, 500, "test").unwrap();
        assert!(st.iterations > 0);
        let err = x.iter().zip(&truth).map(|(a, b)| (*a - *b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn cg_reports_non_convergence() {
        let apply = |x: &[f64], y: &mut [f64]| {
            for (k, (yi, xi)) in y.iter_mut().zip(x).enumerate() {
                *yi = (1.0 + k as f64) * xi;
            }
        };
        let b = vec![1.0; 50];
        let mut x = vec![0.0; 50];
        let e = cg(apply, &b, &mut x, 1e-14, 3, "diag").unwrap_err();
        assert!(matches!(e, QslError::NonConvergence { solver: "diag", iterations: 3, .. }));
    }
}
