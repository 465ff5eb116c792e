//! Stationary Stokes solve on the staggered grid and the Leray projection.
//!
//! -Lap u + grad P = f, div u = 0, u = 0 on the boundary. The velocity
//! Laplacian inverts exactly in its tensor eigenbasis, so only the pressure
//! Schur complement is iterated (Uzawa as CG on div o Lap^-1 o grad, which
//! is symmetric positive definite on mean-zero pressures).

use crate::error::{Error, Result};
use crate::grid::pcg::{pcg, Preconditioner};
use crate::grid::poisson::{cached_solver, solve_neumann_poisson};
use crate::grid::spectral::BasisKind;
use crate::grid::{div, grad, kahan_sum, PressureField, ScalarField, VectorField};

/// Exact componentwise solve of -Lap u = g with no-slip boundary semantics.
pub(crate) fn solve_vector_laplace(g: &VectorField) -> VectorField {
    let d = g.domain;
    let mut out = VectorField::zeros(d);

    // x-component: pinned ends in x (interior faces 1..nx-1), wall reflection in y
    {
        let solver = cached_solver(d, BasisKind::DirichletNode, BasisKind::DirichletCell);
        let mx = d.nx - 1;
        let mut rhs = vec![0.0; mx * d.ny];
        for j in 0..d.ny {
            for i in 1..d.nx {
                rhs[j * mx + (i - 1)] = g.x[g.ix(i, j)];
            }
        }
        let sol = solver.solve(&rhs, 0.0);
        for j in 0..d.ny {
            for i in 1..d.nx {
                let k = out.ix(i, j);
                out.x[k] = sol[j * mx + (i - 1)];
            }
        }
    }
    // y-component: wall reflection in x, pinned ends in y
    {
        let solver = cached_solver(d, BasisKind::DirichletCell, BasisKind::DirichletNode);
        let my = d.ny - 1;
        let mut rhs = vec![0.0; d.nx * my];
        for j in 1..d.ny {
            for i in 0..d.nx {
                rhs[(j - 1) * d.nx + i] = g.y[g.iy(i, j)];
            }
        }
        let sol = solver.solve(&rhs, 0.0);
        for j in 1..d.ny {
            for i in 0..d.nx {
                let k = out.iy(i, j);
                out.y[k] = sol[(j - 1) * d.nx + i];
            }
        }
    }
    out
}

/// Solve the stationary Stokes problem for a given face forcing. Returns the
/// velocity and the mean-zero pressure.
pub fn solve_stokes(f: &VectorField) -> Result<(VectorField, PressureField)> {
    let d = f.domain;
    if !f.is_finite() {
        return Err(Error::OutOfDomain {
            value: f64::NAN,
            domain: "finite forcing",
        });
    }
    if f.max_abs() == 0.0 {
        return Ok((VectorField::zeros(d), PressureField::zeros(d)));
    }

    let u0 = solve_vector_laplace(f);
    let rhs_div = div(&u0);

    let project = |v: &mut [f64]| {
        let m = kahan_sum(v.iter().copied()) / v.len() as f64;
        for x in v.iter_mut() {
            *x -= m;
        }
    };
    // SPD Schur complement: -div o Lap^-1 o grad (minus the gradient is the
    // adjoint of the divergence), acting on mean-zero pressures.
    let schur = |p: &[f64]| -> Vec<f64> {
        let pf = ScalarField {
            domain: d,
            values: p.to_vec(),
        };
        let gu = solve_vector_laplace(&grad(&pf));
        div(&gu).values.iter().map(|v| -v).collect()
    };

    let mut b: Vec<f64> = rhs_div.values.iter().map(|v| -v).collect();
    project(&mut b);
    let mut p = vec![0.0; d.n_cells()];
    pcg(
        &schur,
        &b,
        &mut p,
        &Preconditioner::Identity,
        1e-11,
        50 * d.nx.max(d.ny),
        Some(&project),
        "stokes-schur",
    )?;

    let pf = ScalarField { domain: d, values: p };
    let mut force = f.clone();
    force.axpy(-1.0, &grad(&pf));
    let u = solve_vector_laplace(&force);
    Ok((u, PressureField::mean_free(pf)))
}

/// Orthogonal projection onto the discretely divergence-free subspace:
/// v - grad q with Lap q = div v (Neumann).
pub fn leray_project(v: &VectorField) -> Result<VectorField> {
    let mut dv = div(v);
    if dv.max_abs() == 0.0 {
        return Ok(v.clone());
    }
    // the exact flux total vanishes for no-slip fields; what remains is
    // summation roundoff, which the Neumann solve cannot absorb
    dv.remove_mean();
    let q = solve_neumann_poisson(&dv.scaled(-1.0))?;
    let mut out = v.clone();
    out.axpy(-1.0, &grad(&q));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::tests::{random_no_slip, test_domain};
    use crate::grid::{laplace_vector, norm_grad_vec, norm_l2_vec};

    #[test]
    fn zero_forcing_gives_zero() {
        let d = test_domain(16);
        let (u, p) = solve_stokes(&VectorField::zeros(d)).unwrap();
        assert_eq!(u.max_abs(), 0.0);
        assert_eq!(p.field.max_abs(), 0.0);
    }

    #[test]
    fn momentum_and_divergence_residuals() {
        let d = test_domain(32);
        let f = random_no_slip(d, 21);
        let (u, p) = solve_stokes(&f).unwrap();
        // -Lap u + grad P = f on interior faces
        let mut lhs = laplace_vector(&u).scaled(-1.0);
        lhs.axpy(1.0, &grad(&p.field));
        let resid = lhs.diff(&f);
        let rel = norm_l2_vec(&resid) / norm_l2_vec(&f);
        assert!(rel <= 1e-8, "momentum residual {rel}");
        assert!(
            u.relative_divergence() <= 1e-9,
            "divergence {}",
            u.relative_divergence()
        );
        assert!(p.check_invariant());
    }

    #[test]
    fn manufactured_solution_second_order() {
        // streamfunction psi = sin^2(pi x) sin^2(pi y): u = (psi_y, -psi_x)
        // vanishes on the boundary and is divergence free;
        // P = cos(pi x) cos(pi y) is mean zero.
        let pi = std::f64::consts::PI;
        let ux = |x: f64, y: f64| pi * (pi * x).sin().powi(2) * (2.0 * pi * y).sin();
        let uy = |x: f64, y: f64| -pi * (2.0 * pi * x).sin() * (pi * y).sin().powi(2);
        let fx = |x: f64, y: f64| {
            -2.0 * pi.powi(3) * (2.0 * (2.0 * pi * x).cos() - 1.0) * (2.0 * pi * y).sin()
                - pi * (pi * x).sin() * (pi * y).cos()
        };
        let fy = |x: f64, y: f64| {
            2.0 * pi.powi(3) * (2.0 * (2.0 * pi * y).cos() - 1.0) * (2.0 * pi * x).sin()
                - pi * (pi * x).cos() * (pi * y).sin()
        };
        let mut errs = Vec::new();
        for n in [32usize, 64, 128] {
            let d = test_domain(n);
            let f = VectorField::from_fn(d, fx, fy);
            let (u, _) = solve_stokes(&f).unwrap();
            let exact = VectorField::from_fn(d, ux, uy);
            let err = norm_l2_vec(&u.diff(&exact));
            errs.push(err);
        }
        let o1 = (errs[0] / errs[1]).log2();
        let o2 = (errs[1] / errs[2]).log2();
        assert!(o1 > 1.7 && o1 < 2.3, "order {o1}");
        assert!(o2 > 1.7 && o2 < 2.3, "order {o2}");
    }

    #[test]
    fn leray_projection_properties() {
        let d = test_domain(32);
        let v = random_no_slip(d, 33);
        let pv = leray_project(&v).unwrap();
        assert!(pv.relative_divergence() <= 1e-9);
        // idempotence
        let ppv = leray_project(&pv).unwrap();
        let diff = norm_l2_vec(&ppv.diff(&pv)) / norm_l2_vec(&pv).max(1e-300);
        assert!(diff <= 1e-9, "idempotence defect {diff}");
        // gradients project to zero
        let q = crate::grid::tests::random_scalar(d, 34);
        let gq = grad(&q);
        let pg = leray_project(&gq).unwrap();
        assert!(
            norm_l2_vec(&pg) <= 1e-9 * norm_l2_vec(&gq),
            "kernel defect {}",
            norm_l2_vec(&pg)
        );
        // already divergence-free fields pass through
        let w = leray_project(&pv).unwrap();
        let rel = norm_l2_vec(&w.diff(&pv)) / norm_l2_vec(&pv);
        assert!(rel <= 1e-9);
        let _ = norm_grad_vec(&pv);
    }
}
