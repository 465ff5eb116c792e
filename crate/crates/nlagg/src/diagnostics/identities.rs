//! Structural identities checked along stored trajectories: the three-term
//! rearrangement of the transport/potential coupling and the continuity
//! equation of the blended density.

use crate::grid::{div, grad, kahan_sum, ScalarField, VectorField};
use crate::kernel::KernelSpec;
use crate::ns::FluidParams;

/// Center-averaged dot product integral of (u . grad f) g over the domain.
fn transport_against(u: &VectorField, f: &ScalarField, g: &ScalarField) -> f64 {
    let d = f.domain;
    let gf = grad(f);
    let area = d.cell_area();
    let mut terms = Vec::with_capacity(d.n_cells());
    for j in 0..d.ny {
        for i in 0..d.nx {
            let ux = 0.5 * (u.x[u.ix(i, j)] + u.x[u.ix(i + 1, j)]);
            let uy = 0.5 * (u.y[u.iy(i, j)] + u.y[u.iy(i, j + 1)]);
            let fx = 0.5 * (gf.x[gf.ix(i, j)] + gf.x[gf.ix(i + 1, j)]);
            let fy = 0.5 * (gf.y[gf.iy(i, j)] + gf.y[gf.iy(i, j + 1)]);
            terms.push((ux * fx + uy * fy) * g.at(i, j));
        }
    }
    kahan_sum(terms) * area
}

/// Center-averaged integral of (u . v_face) g with v a face vector field.
fn face_dot_against(u: &VectorField, v: &VectorField, g: &ScalarField) -> f64 {
    let d = g.domain;
    let area = d.cell_area();
    let mut terms = Vec::with_capacity(d.n_cells());
    for j in 0..d.ny {
        for i in 0..d.nx {
            let ux = 0.5 * (u.x[u.ix(i, j)] + u.x[u.ix(i + 1, j)]);
            let uy = 0.5 * (u.y[u.iy(i, j)] + u.y[u.iy(i, j + 1)]);
            let vx = 0.5 * (v.x[v.ix(i, j)] + v.x[v.ix(i + 1, j)]);
            let vy = 0.5 * (v.y[v.iy(i, j)] + v.y[v.iy(i, j + 1)]);
            terms.push((ux * vx + uy * vy) * g.at(i, j));
        }
    }
    kahan_sum(terms) * area
}

/// Both sides of the transport-work rearrangement between consecutive
/// states: the left side integrates (u . grad phi) d mu/dt, the right side
/// its three-term decomposition
///   int (u . grad mu) d phi/dt + int (u . (grad J * phi)) d phi/dt
///   + int (u . grad(J * d phi/dt)) phi,
/// which follows from the chain rule grad F'(phi) = grad mu + grad J * phi
/// and one transport integration by parts. Time derivatives are difference
/// quotients; midpoint fields are used for the undifferenced factors.
/// Returns (lhs, rhs).
pub fn drift_identity_sides(
    u: &VectorField,
    phi_old: &ScalarField,
    phi_new: &ScalarField,
    mu_old: &ScalarField,
    mu_new: &ScalarField,
    kernel: &KernelSpec,
    dt: f64,
) -> (f64, f64) {
    let d = phi_old.domain;
    let mut phi_mid = ScalarField::zeros(d);
    let mut mu_mid = ScalarField::zeros(d);
    let mut dphi = ScalarField::zeros(d);
    let mut dmu = ScalarField::zeros(d);
    for i in 0..d.n_cells() {
        phi_mid.values[i] = 0.5 * (phi_old.values[i] + phi_new.values[i]);
        mu_mid.values[i] = 0.5 * (mu_old.values[i] + mu_new.values[i]);
        dphi.values[i] = (phi_new.values[i] - phi_old.values[i]) / dt;
        dmu.values[i] = (mu_new.values[i] - mu_old.values[i]) / dt;
    }
    let lhs = transport_against(u, &phi_mid, &dmu);
    let grad_j_phi = kernel.convolve_grad(&phi_mid);
    let conv_dphi = kernel.convolve(&dphi);
    let rhs = transport_against(u, &mu_mid, &dphi)
        + face_dot_against(u, &grad_j_phi, &dphi)
        + transport_against(u, &conv_dphi, &phi_mid);
    (lhs, rhs)
}

/// L2 residual of the density continuity equation between consecutive
/// states: d rho/dt + div(rho u + Jtilde), Jtilde = -(rho1-rho2)/2 grad mu.
pub fn continuity_residual(
    phi_old: &ScalarField,
    phi_new: &ScalarField,
    mu_new: &ScalarField,
    u_old: &VectorField,
    fp: &FluidParams,
    dt: f64,
) -> f64 {
    let d = phi_old.domain;
    let rho_old = crate::ns::density(phi_old, fp);
    let rho_new = crate::ns::density(phi_new, fp);
    // face flux rho u with centered density averages, plus the diffusive flux
    let gmu = grad(mu_new);
    let mut flux = VectorField::zeros(d);
    for j in 0..d.ny {
        for i in 1..d.nx {
            let k = flux.ix(i, j);
            let rho_f = 0.5 * (rho_old.at(i - 1, j) + rho_old.at(i, j));
            flux.x[k] = rho_f * u_old.x[k] - fp.drho() * gmu.x[k];
        }
    }
    for j in 1..d.ny {
        for i in 0..d.nx {
            let k = flux.iy(i, j);
            let rho_f = 0.5 * (rho_old.at(i, j - 1) + rho_old.at(i, j));
            flux.y[k] = rho_f * u_old.y[k] - fp.drho() * gmu.y[k];
        }
    }
    let dflux = div(&flux);
    let mut resid = ScalarField::zeros(d);
    for i in 0..d.n_cells() {
        resid.values[i] = (rho_new.values[i] - rho_old.values[i]) / dt + dflux.values[i];
    }
    crate::grid::norm_l2(&resid)
}
