//! Midpoint-quadrature norms, the discrete symmetric gradient, and the two
//! negative-order norms built from the inverse Neumann Laplacian and the
//! inverse Stokes operator.

use crate::error::Result;
use crate::grid::stokes::{leray_project, solve_stokes};
use crate::grid::{
    grad, kahan_sum, laplace_vector, solve_neumann_poisson, ScalarField, VectorField,
};

pub fn norm_l2(f: &ScalarField) -> f64 {
    let w = f.domain.cell_area();
    (kahan_sum(f.values.iter().map(|v| v * v)) * w).sqrt()
}

pub fn norm_l4(f: &ScalarField) -> f64 {
    let w = f.domain.cell_area();
    (kahan_sum(f.values.iter().map(|v| v.powi(4))) * w).powf(0.25)
}

/// Squared L2 norm of the face gradient of a scalar field.
pub fn grad_norm_sq(f: &ScalarField) -> f64 {
    let g = grad(f);
    let w = f.domain.cell_area();
    kahan_sum(
        g.x.iter()
            .map(|v| v * v)
            .chain(g.y.iter().map(|v| v * v)),
    ) * w
}

pub fn norm_h1(f: &ScalarField) -> f64 {
    let l2 = norm_l2(f);
    (l2 * l2 + grad_norm_sq(f)).sqrt()
}

pub fn norm_l2_vec(v: &VectorField) -> f64 {
    let w = v.domain.cell_area();
    (kahan_sum(
        v.x.iter()
            .map(|a| a * a)
            .chain(v.y.iter().map(|a| a * a)),
    ) * w)
        .sqrt()
}

/// L4 norm of a face vector field; the squared magnitude is assembled at
/// cell centers from face averages before the quadrature.
pub fn norm_l4_vec(v: &VectorField) -> f64 {
    let d = v.domain;
    let w = d.cell_area();
    let mut acc = 0.0;
    let mut comp = 0.0;
    for j in 0..d.ny {
        for i in 0..d.nx {
            let ux = 0.5 * (v.x[v.ix(i, j)] + v.x[v.ix(i + 1, j)]);
            let uy = 0.5 * (v.y[v.iy(i, j)] + v.y[v.iy(i, j + 1)]);
            let m2 = ux * ux + uy * uy;
            let t = acc + m2 * m2;
            comp += if acc.abs() >= (m2 * m2).abs() {
                (acc - t) + m2 * m2
            } else {
                (m2 * m2 - t) + acc
            };
            acc = t;
        }
    }
    ((acc + comp) * w).powf(0.25)
}

/// Full-gradient L2 norm squared of a staggered velocity: normal derivatives
/// at cell centers, cross derivatives at nodes, wall reflection for the
/// tangential component.
pub fn grad_vec_sq(v: &VectorField) -> f64 {
    let d = v.domain;
    let (hx, hy) = (d.hx(), d.hy());
    let w = d.cell_area();
    let mut acc = Vec::with_capacity(d.n_cells() + (d.nx + 1) * (d.ny + 1));
    for j in 0..d.ny {
        for i in 0..d.nx {
            let dxux = (v.x[v.ix(i + 1, j)] - v.x[v.ix(i, j)]) / hx;
            let dyuy = (v.y[v.iy(i, j + 1)] - v.y[v.iy(i, j)]) / hy;
            acc.push(dxux * dxux + dyuy * dyuy);
        }
    }
    for j in 0..=d.ny {
        for i in 0..=d.nx {
            let (dyux, dxuy) = node_cross_derivatives(v, i, j);
            acc.push(dyux * dyux + dxuy * dxuy);
        }
    }
    kahan_sum(acc) * w
}

pub fn norm_grad_vec(v: &VectorField) -> f64 {
    grad_vec_sq(v).sqrt()
}

/// Cross derivatives (dy ux, dx uy) at node (i, j) with no-slip conventions:
/// pinned normal faces are zero, tangential walls reflect.
#[inline]
fn node_cross_derivatives(v: &VectorField, i: usize, j: usize) -> (f64, f64) {
    let d = v.domain;
    let (hx, hy) = (d.hx(), d.hy());
    let dyux = if i == 0 || i == d.nx {
        0.0
    } else if j == 0 {
        2.0 * v.x[v.ix(i, 0)] / hy
    } else if j == d.ny {
        -2.0 * v.x[v.ix(i, d.ny - 1)] / hy
    } else {
        (v.x[v.ix(i, j)] - v.x[v.ix(i, j - 1)]) / hy
    };
    let dxuy = if j == 0 || j == d.ny {
        0.0
    } else if i == 0 {
        2.0 * v.y[v.iy(0, j)] / hx
    } else if i == d.nx {
        -2.0 * v.y[v.iy(d.nx - 1, j)] / hx
    } else {
        (v.y[v.iy(i, j)] - v.y[v.iy(i - 1, j)]) / hx
    };
    (dyux, dxuy)
}

/// Integral of weight * |D v|^2 with Dv the discrete symmetric gradient:
/// diagonal entries at centers, the shear entry at nodes. `weight` is a
/// cell-centered coefficient (viscosity); `None` means 1.
pub fn sym_grad_norm_sq(v: &VectorField, weight: Option<&ScalarField>) -> f64 {
    let d = v.domain;
    let (hx, hy) = (d.hx(), d.hy());
    let w = d.cell_area();
    let mut acc = Vec::with_capacity(d.n_cells() + (d.nx + 1) * (d.ny + 1));
    for j in 0..d.ny {
        for i in 0..d.nx {
            let dxux = (v.x[v.ix(i + 1, j)] - v.x[v.ix(i, j)]) / hx;
            let dyuy = (v.y[v.iy(i, j + 1)] - v.y[v.iy(i, j)]) / hy;
            let c = weight.map_or(1.0, |f| f.at(i, j));
            acc.push(c * (dxux * dxux + dyuy * dyuy));
        }
    }
    for j in 0..=d.ny {
        for i in 0..=d.nx {
            let (dyux, dxuy) = node_cross_derivatives(v, i, j);
            let dxy = 0.5 * (dyux + dxuy);
            let c = weight.map_or(1.0, |f| node_average(f, i, j));
            acc.push(2.0 * c * dxy * dxy);
        }
    }
    kahan_sum(acc) * w
}

/// Average of the cell-centered field over the cells adjacent to node (i, j).
fn node_average(f: &ScalarField, i: usize, j: usize) -> f64 {
    let d = f.domain;
    let mut sum = 0.0;
    let mut count = 0.0;
    let imin = i.saturating_sub(1);
    for ci in imin..=i {
        if ci >= d.nx {
            continue;
        }
        let jmin = j.saturating_sub(1);
        for cj in jmin..=j {
            if cj >= d.ny {
                continue;
            }
            sum += f.at(ci, cj);
            count += 1.0;
        }
    }
    sum / count
}

/// Ratio ||grad v|| / (sqrt(2) ||D v||); at most 1 for no-slip fields by the
/// discrete Korn identity.
pub fn korn_ratio(v: &VectorField) -> f64 {
    let g = grad_vec_sq(v).sqrt();
    let s = sym_grad_norm_sq(v, None).sqrt();
    if s == 0.0 {
        return 0.0;
    }
    g / (std::f64::consts::SQRT_2 * s)
}

/// Discrete H^2-type norm of a velocity: L2 + gradient + componentwise
/// Laplacian. A diagnostic proxy used in the Gronwall factor.
pub fn norm_h2_vec(v: &VectorField) -> f64 {
    let l2 = norm_l2_vec(v);
    let g = grad_vec_sq(v);
    let lap = norm_l2_vec(&laplace_vector(v));
    (l2 * l2 + g + lap * lap).sqrt()
}

/// L4 norm of the velocity gradient, assembled at cell centers.
pub fn norm_l4_grad_vec(v: &VectorField) -> f64 {
    let d = v.domain;
    let (hx, hy) = (d.hx(), d.hy());
    let w = d.cell_area();
    let mut acc = 0.0;
    for j in 0..d.ny {
        for i in 0..d.nx {
            let dxux = (v.x[v.ix(i + 1, j)] - v.x[v.ix(i, j)]) / hx;
            let dyuy = (v.y[v.iy(i, j + 1)] - v.y[v.iy(i, j)]) / hy;
            // average node cross-derivatives to the center
            let mut dyux = 0.0;
            let mut dxuy = 0.0;
            for (ni, nj) in [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)] {
                let (a, b) = node_cross_derivatives(v, ni, nj);
                dyux += 0.25 * a;
                dxuy += 0.25 * b;
            }
            let m2 = dxux * dxux + dyuy * dyuy + dyux * dyux + dxuy * dxuy;
            acc += m2 * m2;
        }
    }
    (acc * w).powf(0.25)
}

/// L4 norm of the gradient of a scalar field (magnitude at centers).
pub fn norm_l4_grad_scalar(f: &ScalarField) -> f64 {
    norm_l4_vec(&grad(f))
}

/// Negative-order norm ||f||_* = ||grad N f||_L2 for mean-zero f, where N is
/// the inverse Neumann Laplacian.
pub fn norm_dual_star(f: &ScalarField) -> Result<f64> {
    let u = solve_neumann_poisson(f)?;
    Ok(grad_norm_sq(&u).sqrt())
}

/// Negative-order norm on velocities: project onto the divergence-free
/// subspace, invert the Stokes operator, and take the induced energy
/// (w, A^-1 w), whose square root equals ||grad A^-1 w|| in the operator's
/// own Dirichlet form.
pub fn norm_dual_sharp(v: &VectorField) -> Result<f64> {
    let w = leray_project(v)?;
    if w.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let (u, _) = solve_stokes(&w)?;
    let cell = v.domain.cell_area();
    let dual = kahan_sum(
        w.x.iter()
            .zip(&u.x)
            .map(|(a, b)| a * b)
            .chain(w.y.iter().zip(&u.y).map(|(a, b)| a * b)),
    ) * cell;
    Ok(dual.max(0.0).sqrt())
}
