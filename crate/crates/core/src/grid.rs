//! Uniform rectangular grids, cell-centered fields, the staggered (MAC)
//! velocity layout, and the second-order difference operators.
//!
//! Cell `(i, j)` has center `origin + ((i + ½)h, (j + ½)h)`; storage is
//! row-major with `i` fastest. Ghost values come from the boundary tag:
//! periodic wraps, `DirichletZero` reflects about the wall value 0
//! (`ghost = −interior`).

use std::io::{Read, Write};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{QslError, Result};
use crate::qspace::QTensor;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(&self, o: &Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

/// Values a [`Field`] can hold: a real vector space with an inner product.
pub trait FieldValue:
    Copy
    + Default
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + Send
    + Sync
{
    const COMPONENTS: usize;
    fn zero() -> Self {
        Self::default()
    }
    fn inner(&self, o: &Self) -> f64;
    fn all_finite(&self) -> bool;
    fn write_components(&self, out: &mut Vec<f64>);
    fn from_components(c: &[f64]) -> Self;
}

impl FieldValue for f64 {
    const COMPONENTS: usize = 1;
    #[inline]
    fn inner(&self, o: &Self) -> f64 {
        self * o
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
    fn write_components(&self, out: &mut Vec<f64>) {
        out.push(*self);
    }
    fn from_components(c: &[f64]) -> Self {
        c[0]
    }
}

impl FieldValue for Vec2 {
    const COMPONENTS: usize = 2;
    #[inline]
    fn inner(&self, o: &Self) -> f64 {
        self.dot(o)
    }
    fn all_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
    fn write_components(&self, out: &mut Vec<f64>) {
        out.extend([self.x, self.y]);
    }
    fn from_components(c: &[f64]) -> Self {
        Vec2::new(c[0], c[1])
    }
}

impl FieldValue for QTensor {
    const COMPONENTS: usize = 5;
    #[inline]
    fn inner(&self, o: &Self) -> f64 {
        self.dot(o)
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
    fn write_components(&self, out: &mut Vec<f64>) {
        out.extend(self.components());
    }
    fn from_components(c: &[f64]) -> Self {
        QTensor::new(c[0], c[1], c[2], c[3], c[4])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    DirichletZero,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    /// Lower-left corner of the domain.
    pub origin: [f64; 2],
    pub bc: Boundary,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, h: f64, origin: [f64; 2], bc: Boundary) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(QslError::InvalidInput(format!(
                "grid needs at least 3 cells per direction, got {nx}x{ny}"
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(QslError::InvalidInput(format!("grid spacing must be positive, got {h}")));
        }
        Ok(Self {
            nx,
            ny,
            h,
            origin,
            bc,
        })
    }

    /// `[−L, L]²` with `n` cells per side.
    pub fn square(n: usize, half_width: f64, bc: Boundary) -> Result<Self> {
        Self::new(
            n,
            n,
            2.0 * half_width / n as f64,
            [-half_width, -half_width],
            bc,
        )
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
        ]
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn area(&self) -> f64 {
        self.nx as f64 * self.ny as f64 * self.h * self.h
    }

    pub fn width(&self) -> f64 {
        self.nx as f64 * self.h
    }

    pub fn height(&self) -> f64 {
        self.ny as f64 * self.h
    }

    /// Neighbor index along x with the sign applied to the value
    /// (`-1` for a Dirichlet reflection ghost, `0` meaning "no value").
    #[inline]
    fn nb(&self, k: isize, n: usize) -> (usize, f64) {
        if k < 0 {
            match self.bc {
                Boundary::Periodic => (n - 1, 1.0),
                Boundary::DirichletZero => (0, -1.0),
            }
        } else if k as usize >= n {
            match self.bc {
                Boundary::Periodic => (0, 1.0),
                Boundary::DirichletZero => (n - 1, -1.0),
            }
        } else {
            (k as usize, 1.0)
        }
    }

    /// Value at `(i + di, j + dj)` including ghost handling (|di|,|dj| ≤ 1).
    #[inline]
    pub fn ghosted<T: FieldValue>(&self, data: &[T], i: usize, j: usize, di: isize, dj: isize) -> T {
        let (ii, sx) = self.nb(i as isize + di, self.nx);
        let (jj, sy) = self.nb(j as isize + dj, self.ny);
        let v = data[self.idx(ii, jj)];
        if sx * sy < 0.0 {
            -v
        } else {
            v
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    pub grid: Grid2D,
    pub data: Vec<T>,
}

pub type ScalarField = Field<f64>;
pub type VectorField = Field<Vec2>;
pub type QField = Field<QTensor>;

impl<T: FieldValue> Field<T> {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            data: vec![T::zero(); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut([f64; 2]) -> T) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                data.push(f(grid.center(i, j)));
            }
        }
        Self { grid, data }
    }

    pub fn from_vec(grid: Grid2D, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(QslError::InvalidInput(format!(
                "field has {} values, grid needs {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[self.grid.idx(i, j)]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.all_finite())
    }

    /// Grid inner product `h² Σ ⟨a, b⟩`.
    pub fn inner(&self, o: &Field<T>) -> f64 {
        self.grid.cell_area() * self.data.iter().zip(&o.data).map(|(a, b)| a.inner(b)).sum::<f64>()
    }

    /// Midpoint-rule integral of a pointwise scalar.
    pub fn integrate(&self, f: impl Fn(&T) -> f64) -> f64 {
        self.grid.cell_area() * self.data.iter().map(f).sum::<f64>()
    }

    pub fn map<U: FieldValue>(&self, f: impl Fn(&T) -> U) -> Field<U> {
        Field {
            grid: self.grid,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn axpy(&mut self, alpha: f64, x: &Field<T>) {
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a += *b * alpha;
        }
    }
}

/// Five-point Laplacian.
pub fn laplacian<T: FieldValue>(f: &Field<T>) -> Field<T> {
    let mut out = Field::zeros(f.grid);
    laplacian_into(&f.grid, &f.data, &mut out.data);
    out
}

pub(crate) fn laplacian_into<T: FieldValue>(g: &Grid2D, src: &[T], dst: &mut [T]) {
    let inv_h2 = 1.0 / (g.h * g.h);
    let (nx, ny) = (g.nx, g.ny);
    for j in 0..ny {
        let interior_row = j > 0 && j + 1 < ny;
        for i in 0..nx {
            let k = j * nx + i;
            let c = src[k];
            let sum = if interior_row && i > 0 && i + 1 < nx {
                src[k - 1] + src[k + 1] + src[k - nx] + src[k + nx]
            } else {
                g.ghosted(src, i, j, -1, 0)
                    + g.ghosted(src, i, j, 1, 0)
                    + g.ghosted(src, i, j, 0, -1)
                    + g.ghosted(src, i, j, 0, 1)
            };
            dst[k] = (sum - c * 4.0) * inv_h2;
        }
    }
}

/// Centered partial derivatives `(∂x f, ∂y f)` at cell centers.
pub fn partials<T: FieldValue>(f: &Field<T>) -> (Field<T>, Field<T>) {
    let g = f.grid;
    let mut dx = Field::zeros(g);
    let mut dy = Field::zeros(g);
    partials_into(&g, &f.data, &mut dx.data, &mut dy.data);
    (dx, dy)
}

pub(crate) fn partials_into<T: FieldValue>(g: &Grid2D, src: &[T], dx: &mut [T], dy: &mut [T]) {
    let s = 0.5 / g.h;
    let (nx, ny) = (g.nx, g.ny);
    for j in 0..ny {
        let interior_row = j > 0 && j + 1 < ny;
        for i in 0..nx {
            let k = j * nx + i;
            if interior_row && i > 0 && i + 1 < nx {
                dx[k] = (src[k + 1] - src[k - 1]) * s;
                dy[k] = (src[k + nx] - src[k - nx]) * s;
            } else {
                dx[k] = (g.ghosted(src, i, j, 1, 0) - g.ghosted(src, i, j, -1, 0)) * s;
                dy[k] = (g.ghosted(src, i, j, 0, 1) - g.ghosted(src, i, j, 0, -1)) * s;
            }
        }
    }
}

/// Centered gradient of a scalar field.
pub fn gradient(f: &ScalarField) -> VectorField {
    let (dx, dy) = partials(f);
    Field {
        grid: f.grid,
        data: dx.data.iter().zip(&dy.data).map(|(&x, &y)| Vec2::new(x, y)).collect(),
    }
}

/// Centered divergence of a cell-centered vector field.
pub fn divergence(v: &VectorField) -> ScalarField {
    let (dx, dy) = partials(v);
    Field {
        grid: v.grid,
        data: dx.data.iter().zip(&dy.data).map(|(a, b)| a.x + b.y).collect(),
    }
}

/// Centered advection `(v·∇) f`.
pub fn advect<T: FieldValue>(v: &VectorField, f: &Field<T>) -> Field<T> {
    let (dx, dy) = partials(f);
    Field {
        grid: f.grid,
        data: v
            .data
            .iter()
            .zip(dx.data.iter().zip(&dy.data))
            .map(|(w, (a, b))| *a * w.x + *b * w.y)
            .collect(),
    }
}

/// Staggered velocity: `u` on x-faces, `v` on y-faces.
///
/// For `DirichletZero` there are `(nx+1)·ny` x-faces (face `i` is the left
/// face of cell `i`, faces `0` and `nx` lie on the wall) and `nx·(ny+1)`
/// y-faces. For `Periodic` the wrap-around face is shared, giving `nx·ny`
/// faces of each kind.
#[derive(Debug, Clone, PartialEq)]
pub struct MacVelocity {
    pub grid: Grid2D,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl MacVelocity {
    pub fn zeros(grid: Grid2D) -> Self {
        let (nu, nv) = Self::face_counts(&grid);
        Self {
            grid,
            u: vec![0.0; nu],
            v: vec![0.0; nv],
        }
    }

    pub fn face_counts(g: &Grid2D) -> (usize, usize) {
        match g.bc {
            Boundary::Periodic => (g.nx * g.ny, g.nx * g.ny),
            Boundary::DirichletZero => ((g.nx + 1) * g.ny, g.nx * (g.ny + 1)),
        }
    }

    /// Row stride of the x-face array.
    #[inline]
    pub fn u_stride(&self) -> usize {
        u_stride(&self.grid)
    }

    /// Sample the analytic velocity at face midpoints.
    pub fn from_fn(grid: Grid2D, f: impl Fn([f64; 2]) -> Vec2) -> Self {
        let mut m = Self::zeros(grid);
        let h = grid.h;
        let su = m.u_stride();
        let nfx = if grid.bc == Boundary::Periodic { grid.nx } else { grid.nx + 1 };
        for j in 0..grid.ny {
            for i in 0..nfx {
                let x = [grid.origin[0] + i as f64 * h, grid.origin[1] + (j as f64 + 0.5) * h];
                m.u[j * su + i] = f(x).x;
            }
        }
        let nfy = if grid.bc == Boundary::Periodic { grid.ny } else { grid.ny + 1 };
        for j in 0..nfy {
            for i in 0..grid.nx {
                let x = [grid.origin[0] + (i as f64 + 0.5) * h, grid.origin[1] + j as f64 * h];
                m.v[j * grid.nx + i] = f(x).y;
            }
        }
        if grid.bc == Boundary::DirichletZero {
            m.enforce_no_penetration();
        }
        m
    }

    /// Zero the wall-normal components on the boundary faces.
    pub fn enforce_no_penetration(&mut self) {
        let g = self.grid;
        if g.bc != Boundary::DirichletZero {
            return;
        }
        let su = g.nx + 1;
        for j in 0..g.ny {
            self.u[j * su] = 0.0;
            self.u[j * su + g.nx] = 0.0;
        }
        for i in 0..g.nx {
            self.v[i] = 0.0;
            self.v[g.ny * g.nx + i] = 0.0;
        }
    }

    /// Compact divergence at cell centers.
    pub fn divergence(&self) -> ScalarField {
        let g = self.grid;
        let mut out = Field::zeros(g);
        let su = self.u_stride();
        let inv_h = 1.0 / g.h;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (ur, vt) = match g.bc {
                    Boundary::Periodic => (
                        self.u[j * su + (i + 1) % g.nx],
                        self.v[((j + 1) % g.ny) * g.nx + i],
                    ),
                    Boundary::DirichletZero => {
                        (self.u[j * su + i + 1], self.v[(j + 1) * g.nx + i])
                    }
                };
                out.data[g.idx(i, j)] =
                    (ur - self.u[j * su + i] + vt - self.v[j * g.nx + i]) * inv_h;
            }
        }
        out
    }

    /// Average of the two neighboring faces at each cell center.
    pub fn to_centers(&self) -> VectorField {
        let g = self.grid;
        let su = self.u_stride();
        let mut out = Field::zeros(g);
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (ur, vt) = match g.bc {
                    Boundary::Periodic => (
                        self.u[j * su + (i + 1) % g.nx],
                        self.v[((j + 1) % g.ny) * g.nx + i],
                    ),
                    Boundary::DirichletZero => {
                        (self.u[j * su + i + 1], self.v[(j + 1) * g.nx + i])
                    }
                };
                out.data[g.idx(i, j)] = Vec2::new(
                    0.5 * (self.u[j * su + i] + ur),
                    0.5 * (self.v[j * g.nx + i] + vt),
                );
            }
        }
        out
    }

    /// `½ Σ_faces (u² + v²) h²`.
    pub fn kinetic_energy(&self) -> f64 {
        let s: f64 = self.u.iter().chain(&self.v).map(|c| c * c).sum();
        0.5 * s * self.grid.cell_area()
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().chain(&self.v).fold(0.0f64, |m, c| m.max(c.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|c| c.is_finite())
    }
}

#[inline]
pub(crate) fn u_stride(g: &Grid2D) -> usize {
    match g.bc {
        Boundary::Periodic => g.nx,
        Boundary::DirichletZero => g.nx + 1,
    }
}

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"QSLF";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Write a field as a raw snapshot.
///
/// Layout (little-endian): `"QSLF"`, `u32` version, `u32` nx, `u32` ny,
/// `u32` component count, `f64` spacing, 4 zero bytes; then `nx·ny·ncomp`
/// `f64` values, row-major with components interleaved per cell.
pub fn write_snapshot<T: FieldValue, W: Write>(f: &Field<T>, mut w: W) -> Result<()> {
    let g = f.grid;
    let mut header = Vec::with_capacity(32);
    header.extend_from_slice(SNAPSHOT_MAGIC);
    header.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    header.extend_from_slice(&(g.nx as u32).to_le_bytes());
    header.extend_from_slice(&(g.ny as u32).to_le_bytes());
    header.extend_from_slice(&(T::COMPONENTS as u32).to_le_bytes());
    header.extend_from_slice(&g.h.to_le_bytes());
    header.extend_from_slice(&[0u8; 4]);
    debug_assert_eq!(header.len(), 32);
    w.write_all(&header)?;
    let mut comps = Vec::with_capacity(T::COMPONENTS);
    let mut buf = Vec::with_capacity(f.data.len() * T::COMPONENTS * 8);
    for v in &f.data {
        comps.clear();
        v.write_components(&mut comps);
        for c in &comps {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Read a snapshot written by [`write_snapshot`]. The returned grid has its
/// origin at `(−nx·h/2, −ny·h/2)` and the supplied boundary tag.
pub fn read_snapshot<T: FieldValue, R: Read>(mut r: R, bc: Boundary) -> Result<Field<T>> {
    let mut header = [0u8; 32];
    r.read_exact(&mut header)?;
    if &header[0..4] != SNAPSHOT_MAGIC {
        return Err(QslError::InvalidInput("bad snapshot magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != SNAPSHOT_VERSION {
        return Err(QslError::InvalidInput(format!("unsupported snapshot version {version}")));
    }
    let nx = u32_at(8) as usize;
    let ny = u32_at(12) as usize;
    let ncomp = u32_at(16) as usize;
    if ncomp != T::COMPONENTS {
        return Err(QslError::InvalidInput(format!(
            "snapshot has {ncomp} components, expected {}",
            T::COMPONENTS
        )));
    }
    let h = f64::from_le_bytes(header[20..28].try_into().unwrap());
    let grid = Grid2D::new(nx, ny, h, [-(nx as f64) * h / 2.0, -(ny as f64) * h / 2.0], bc)?;
    let mut raw = vec![0u8; nx * ny * ncomp * 8];
    r.read_exact(&mut raw)?;
    let vals: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let data = vals.chunks_exact(ncomp).map(T::from_components).collect();
    Field::from_vec(grid, data)
}
