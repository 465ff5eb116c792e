//! Poisson solves on cell centers: the inverse Neumann Laplacian (the N
//! operator behind the H^-1 norm) and the density-weighted pressure solve
//! used by the projection step.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::grid::pcg::{pcg, Preconditioner};
use crate::grid::spectral::{Basis1d, BasisKind, Tensor2Solver};
use crate::grid::{div, grad, kahan_sum, Domain, ScalarField, VectorField};

type CacheKey = (usize, usize, u64, u64, BasisKindPair);
type BasisKindPair = (u8, u8);

fn kind_tag(k: BasisKind) -> u8 {
    match k {
        BasisKind::Neumann => 0,
        BasisKind::DirichletNode => 1,
        BasisKind::DirichletCell => 2,
    }
}

static SOLVER_CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<Tensor2Solver>>>> = OnceLock::new();

/// Shared, lazily built tensor solver for a (domain, boundary-kind) pair.
pub(crate) fn cached_solver(d: Domain, kx: BasisKind, ky: BasisKind) -> Arc<Tensor2Solver> {
    let key = (
        d.nx,
        d.ny,
        d.lx.to_bits(),
        d.ly.to_bits(),
        (kind_tag(kx), kind_tag(ky)),
    );
    let cache = SOLVER_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(key)
        .or_insert_with(|| {
            Arc::new(Tensor2Solver::new(
                Basis1d::new(kx, d.nx, d.hx()),
                Basis1d::new(ky, d.ny, d.hy()),
            ))
        })
        .clone()
}

/// Handle to the cached cell-centered Neumann eigensolver for a domain;
/// solves (sigma - Lap) exactly, the preconditioner of every
/// variable-coefficient cell solve.
pub fn poisson_solver_handle(d: Domain) -> Arc<Tensor2Solver> {
    cached_solver(d, BasisKind::Neumann, BasisKind::Neumann)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityComponent {
    X,
    Y,
}

/// Cached eigensolver for one staggered velocity component with no-slip
/// boundary conditions (interior dofs only).
pub fn velocity_solver_handle(d: Domain, comp: VelocityComponent) -> Arc<Tensor2Solver> {
    match comp {
        VelocityComponent::X => cached_solver(d, BasisKind::DirichletNode, BasisKind::DirichletCell),
        VelocityComponent::Y => cached_solver(d, BasisKind::DirichletCell, BasisKind::DirichletNode),
    }
}

/// Inverse of the Neumann Laplacian: returns the mean-zero f with
/// laplace_neumann(f) = -g. Rejects inputs whose mean exceeds
/// 1e-10 * ||g||_inf.
pub fn solve_neumann_poisson(g: &ScalarField) -> Result<ScalarField> {
    let d = g.domain;
    let gmax = g.max_abs();
    if gmax == 0.0 {
        return Ok(ScalarField::zeros(d));
    }
    let mean = g.mean();
    if mean.abs() > 1e-10 * gmax {
        return Err(Error::NonZeroMean {
            mean: mean.abs(),
            limit: 1e-10 * gmax,
        });
    }
    let solver = cached_solver(d, BasisKind::Neumann, BasisKind::Neumann);
    let mut rhs = g.values.clone();
    let m = kahan_sum(rhs.iter().copied()) / rhs.len() as f64;
    for v in &mut rhs {
        *v -= m;
    }
    // -Lap f = g  <=>  (0 - Lap) f = g, constant mode dropped
    let f = ScalarField {
        domain: d,
        values: solver.solve(&rhs, 0.0),
    };
    // The eigen-solve is exact to roundoff; verify the advertised residual.
    let lf = super::laplace_neumann(&f);
    let mut worst = 0.0f64;
    for (a, b) in lf.values.iter().zip(&g.values) {
        worst = worst.max((a + b).abs());
    }
    if worst > 1e-10 * gmax.max(1e-300) * (4.0 / d.hx().powi(2)) {
        return Err(Error::SolverDivergence {
            solver: "neumann-poisson",
            residual: worst / gmax,
            iters: 1,
        });
    }
    Ok(f)
}

/// Apply p -> -div(w grad p) with face weights w; the SPD operator of the
/// variable-coefficient pressure equation.
pub fn apply_weighted_div_grad(d: Domain, w: &VectorField, p: &[f64]) -> Vec<f64> {
    let field = ScalarField {
        domain: d,
        values: p.to_vec(),
    };
    let mut g = grad(&field);
    for (gv, wv) in g.x.iter_mut().zip(&w.x) {
        *gv *= wv;
    }
    for (gv, wv) in g.y.iter_mut().zip(&w.y) {
        *gv *= wv;
    }
    let r = div(&g);
    r.values.iter().map(|v| -v).collect()
}

/// Solve div(w grad p) = rhs with zero-flux boundaries and mean-zero p,
/// where w > 0 holds face weights (1/rho in the projection). CG with the
/// constant-coefficient eigensolver as preconditioner.
pub fn solve_weighted_poisson(
    rhs: &ScalarField,
    w: &VectorField,
    tol_rel: f64,
) -> Result<ScalarField> {
    let d = rhs.domain;
    let n = d.n_cells();
    let solver = cached_solver(d, BasisKind::Neumann, BasisKind::Neumann);
    // mean face weight sets the preconditioner scale
    let wsum = kahan_sum(w.x.iter().chain(w.y.iter()).copied());
    let wbar = (wsum / (w.x.len() + w.y.len()) as f64).max(f64::MIN_POSITIVE);

    let apply = |p: &[f64]| apply_weighted_div_grad(d, w, p);
    let precond_fn = |r: &[f64]| -> Vec<f64> {
        let mut v = solver.solve(r, 0.0);
        for x in &mut v {
            *x /= wbar;
        }
        v
    };
    let project = |v: &mut [f64]| {
        let m = kahan_sum(v.iter().copied()) / v.len() as f64;
        for x in v.iter_mut() {
            *x -= m;
        }
    };

    let mut b: Vec<f64> = rhs.values.iter().map(|v| -v).collect();
    project(&mut b);
    let mut x = vec![0.0; n];
    let max_iters = 50 * d.nx.max(d.ny);
    pcg(
        &apply,
        &b,
        &mut x,
        &Preconditioner::Apply(&precond_fn),
        tol_rel,
        max_iters,
        Some(&project),
        "weighted-poisson",
    )?;
    let mut p = ScalarField { domain: d, values: x };
    p.remove_mean();
    Ok(p)
}
