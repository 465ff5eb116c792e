//! Uniform staggered-grid discretization of a rectangle.
//!
//! Scalars (phase field, chemical potential, pressure, density, viscosity)
//! live at cell centers. Velocities live on cell faces (MAC layout): the
//! x-component on vertical faces, the y-component on horizontal faces, so
//! that the discrete divergence and gradient are exact adjoints and the
//! projection step is stable. No-slip walls are realized by pinning normal
//! boundary faces to zero and reflecting the tangential component across
//! the wall.

mod norms;
mod pcg;
mod poisson;
mod spectral;
mod stokes;

pub use norms::{
    grad_norm_sq, grad_vec_sq, korn_ratio, norm_dual_sharp, norm_dual_star, norm_grad_vec,
    norm_h1, norm_h2_vec, norm_l2, norm_l2_vec, norm_l4, norm_l4_grad_scalar, norm_l4_grad_vec,
    norm_l4_vec, sym_grad_norm_sq,
};
pub use pcg::{pcg, CgStats, Preconditioner};
pub use poisson::{
    poisson_solver_handle, solve_neumann_poisson, solve_weighted_poisson, velocity_solver_handle,
    VelocityComponent,
};
pub use spectral::{Basis1d, BasisKind, Tensor2Solver};
pub use stokes::{leray_project, solve_stokes};

use crate::error::{Error, Result};

/// Uniform rectangular grid: `nx * ny` cells over `[0, lx] x [0, ly]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Domain {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 8 || ny < 8 || nx % 2 != 0 || ny % 2 != 0 {
            return Err(Error::InvalidValue {
                key: "domain.nx/ny".into(),
                reason: format!("cell counts must be even and >= 8, got {nx} x {ny}"),
            });
        }
        if !(lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidValue {
                key: "domain.lx/ly".into(),
                reason: "extents must be positive".into(),
            });
        }
        Ok(Domain { nx, ny, lx, ly })
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    /// Cell area, the quadrature weight of every midpoint sum.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Flat index of cell (i, j); x runs fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    /// Center coordinates of cell (i, j).
    #[inline]
    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    /// Coordinates of the x-face (i, j), i in 0..=nx.
    #[inline]
    pub fn xface_pos(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    /// Coordinates of the y-face (i, j), j in 0..=ny.
    #[inline]
    pub fn yface_pos(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), j as f64 * self.hy())
    }
}

/// Cell-centered grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub domain: Domain,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(domain: Domain) -> Self {
        ScalarField {
            domain,
            values: vec![0.0; domain.n_cells()],
        }
    }

    pub fn constant(domain: Domain, c: f64) -> Self {
        ScalarField {
            domain,
            values: vec![c; domain.n_cells()],
        }
    }

    /// Evaluate `f(x, y)` at every cell center.
    pub fn from_fn(domain: Domain, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(domain.n_cells());
        for j in 0..domain.ny {
            for i in 0..domain.nx {
                let (x, y) = domain.cell_center(i, j);
                values.push(f(x, y));
            }
        }
        ScalarField { domain, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.domain.idx(i, j)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.domain.idx(i, j);
        &mut self.values[k]
    }

    /// Spatial mean (compensated sum).
    pub fn mean(&self) -> f64 {
        kahan_sum(self.values.iter().copied()) / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Subtract the mean in place, returning the removed value.
    pub fn remove_mean(&mut self) -> f64 {
        let m = self.mean();
        for v in &mut self.values {
            *v -= m;
        }
        m
    }

    pub fn scaled(&self, a: f64) -> ScalarField {
        ScalarField {
            domain: self.domain,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    /// self - other, entrywise.
    pub fn diff(&self, other: &ScalarField) -> ScalarField {
        assert_eq!(self.domain, other.domain);
        ScalarField {
            domain: self.domain,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Staggered (face-centered) vector field with no-slip boundary semantics:
/// boundary faces always carry the value 0.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub domain: Domain,
    /// x-component on (nx+1) x ny vertical faces, index `j * (nx + 1) + i`.
    pub x: Vec<f64>,
    /// y-component on nx x (ny+1) horizontal faces, index `j * nx + i`.
    pub y: Vec<f64>,
}

impl VectorField {
    pub fn zeros(domain: Domain) -> Self {
        VectorField {
            domain,
            x: vec![0.0; (domain.nx + 1) * domain.ny],
            y: vec![0.0; domain.nx * (domain.ny + 1)],
        }
    }

    #[inline]
    pub fn ix(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.domain.nx && j < self.domain.ny);
        j * (self.domain.nx + 1) + i
    }

    #[inline]
    pub fn iy(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.domain.nx && j <= self.domain.ny);
        j * self.domain.nx + i
    }

    /// Fill interior faces from analytic component functions; boundary faces stay 0.
    pub fn from_fn(
        domain: Domain,
        fx: impl Fn(f64, f64) -> f64,
        fy: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut v = VectorField::zeros(domain);
        for j in 0..domain.ny {
            for i in 1..domain.nx {
                let (x, y) = domain.xface_pos(i, j);
                let k = v.ix(i, j);
                v.x[k] = fx(x, y);
            }
        }
        for j in 1..domain.ny {
            for i in 0..domain.nx {
                let (x, y) = domain.yface_pos(i, j);
                let k = v.iy(i, j);
                v.y[k] = fy(x, y);
            }
        }
        v
    }

    pub fn max_abs(&self) -> f64 {
        let mx = self.x.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let my = self.y.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        mx.max(my)
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().all(|v| v.is_finite()) && self.y.iter().all(|v| v.is_finite())
    }

    /// Check the no-slip invariant: all boundary faces are exactly zero.
    pub fn is_no_slip(&self) -> bool {
        let d = self.domain;
        for j in 0..d.ny {
            if self.x[self.ix(0, j)] != 0.0 || self.x[self.ix(d.nx, j)] != 0.0 {
                return false;
            }
        }
        for i in 0..d.nx {
            if self.y[self.iy(i, 0)] != 0.0 || self.y[self.iy(i, d.ny)] != 0.0 {
                return false;
            }
        }
        true
    }

    /// self - other, entrywise.
    pub fn diff(&self, other: &VectorField) -> VectorField {
        assert_eq!(self.domain, other.domain);
        VectorField {
            domain: self.domain,
            x: self.x.iter().zip(&other.x).map(|(a, b)| a - b).collect(),
            y: self.y.iter().zip(&other.y).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> VectorField {
        VectorField {
            domain: self.domain,
            x: self.x.iter().map(|v| a * v).collect(),
            y: self.y.iter().map(|v| a * v).collect(),
        }
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        for (t, s) in self.x.iter_mut().zip(&other.x) {
            *t += a * s;
        }
        for (t, s) in self.y.iter_mut().zip(&other.y) {
            *t += a * s;
        }
    }

    /// Relative divergence: ||div v||_inf over the natural gradient scale
    /// max(|v|)/h. Zero fields report zero.
    pub fn relative_divergence(&self) -> f64 {
        let d = div(self);
        let vmax = self.max_abs();
        if vmax == 0.0 {
            return d.max_abs();
        }
        let h = self.domain.hx().min(self.domain.hy());
        d.max_abs() * h / vmax
    }
}

/// Cell-centered pressure with an optional mean-zero marker. When the flag is
/// set, |mean| stays below 1e-12 * ||values||_inf.
#[derive(Debug, Clone)]
pub struct PressureField {
    pub field: ScalarField,
    pub mean_zero: bool,
}

impl PressureField {
    pub fn zeros(domain: Domain) -> Self {
        PressureField {
            field: ScalarField::zeros(domain),
            mean_zero: true,
        }
    }

    /// Wrap a scalar field, projecting out the mean.
    pub fn mean_free(mut field: ScalarField) -> Self {
        field.remove_mean();
        PressureField {
            field,
            mean_zero: true,
        }
    }

    pub fn check_invariant(&self) -> bool {
        if !self.mean_zero {
            return true;
        }
        let m = self.field.mean().abs();
        m <= 1e-12 * self.field.max_abs().max(f64::MIN_POSITIVE)
    }
}

/// Compensated (Neumaier) summation; deterministic and immune to the
/// cancellation that plain left-to-right sums hit on telescoping data.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Centered two-point differences of a cell field onto faces. Boundary faces
/// carry zero, the homogeneous Neumann ghost extension.
pub fn grad(f: &ScalarField) -> VectorField {
    let d = f.domain;
    let (hx, hy) = (d.hx(), d.hy());
    let mut g = VectorField::zeros(d);
    for j in 0..d.ny {
        for i in 1..d.nx {
            let k = g.ix(i, j);
            g.x[k] = (f.at(i, j) - f.at(i - 1, j)) / hx;
        }
    }
    for j in 1..d.ny {
        for i in 0..d.nx {
            let k = g.iy(i, j);
            g.y[k] = (f.at(i, j) - f.at(i, j - 1)) / hy;
        }
    }
    g
}

/// Conservative face-difference divergence onto cell centers. Because every
/// interior face value enters exactly twice with opposite signs and boundary
/// faces are zero, the global sum telescopes to zero.
pub fn div(v: &VectorField) -> ScalarField {
    let d = v.domain;
    let (hx, hy) = (d.hx(), d.hy());
    let mut out = ScalarField::zeros(d);
    for j in 0..d.ny {
        for i in 0..d.nx {
            let k = d.idx(i, j);
            out.values[k] = (v.x[v.ix(i + 1, j)] - v.x[v.ix(i, j)]) / hx
                + (v.y[v.iy(i, j + 1)] - v.y[v.iy(i, j)]) / hy;
        }
    }
    out
}

/// Five-point Neumann Laplacian, realized literally as div(grad(f)) so the
/// composition identity is bitwise.
pub fn laplace_neumann(f: &ScalarField) -> ScalarField {
    div(&grad(f))
}

/// Componentwise vector Laplacian with no-slip boundaries: normal boundary
/// faces are pinned to zero; the tangential component uses wall reflection
/// (ghost = -interior) so the interpolated wall value vanishes.
pub fn laplace_vector(v: &VectorField) -> VectorField {
    let d = v.domain;
    let (hx2, hy2) = (d.hx() * d.hx(), d.hy() * d.hy());
    let mut out = VectorField::zeros(d);
    let nx = d.nx;
    let ny = d.ny;
    for j in 0..ny {
        for i in 1..nx {
            let c = v.x[v.ix(i, j)];
            let xm = v.x[v.ix(i - 1, j)];
            let xp = v.x[v.ix(i + 1, j)];
            let ym = if j > 0 { v.x[v.ix(i, j - 1)] } else { -c };
            let yp = if j + 1 < ny { v.x[v.ix(i, j + 1)] } else { -c };
            let k = out.ix(i, j);
            out.x[k] = (xp - 2.0 * c + xm) / hx2 + (yp - 2.0 * c + ym) / hy2;
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let c = v.y[v.iy(i, j)];
            let ym = v.y[v.iy(i, j - 1)];
            let yp = v.y[v.iy(i, j + 1)];
            let xm = if i > 0 { v.y[v.iy(i - 1, j)] } else { -c };
            let xp = if i + 1 < nx { v.y[v.iy(i + 1, j)] } else { -c };
            let k = out.iy(i, j);
            out.y[k] = (xp - 2.0 * c + xm) / hx2 + (yp - 2.0 * c + ym) / hy2;
        }
    }
    out
}
