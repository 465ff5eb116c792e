//! Preconditioned conjugate gradients over flat slices. All reductions use
//! compensated sums in a fixed order, so repeated runs are bitwise identical.

use crate::error::{Error, Result};
use crate::grid::kahan_sum;

/// Action of a symmetric positive definite preconditioner approximating the
/// inverse of the system operator.
pub enum Preconditioner<'a> {
    Identity,
    /// Entrywise scaling by the inverse diagonal.
    Diagonal(&'a [f64]),
    /// Arbitrary SPD map, e.g. an exact constant-coefficient inverse.
    Apply(&'a dyn Fn(&[f64]) -> Vec<f64>),
}

impl Preconditioner<'_> {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Preconditioner::Identity => r.to_vec(),
            Preconditioner::Diagonal(d) => r.iter().zip(*d).map(|(v, di)| v / di).collect(),
            Preconditioner::Apply(f) => f(r),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgStats {
    pub iters: usize,
    pub final_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    kahan_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Solve A x = b for SPD A, relative tolerance on ||r||_2 / ||b||_2.
///
/// `project` is invoked on residual-like vectors each iteration; singular but
/// consistent systems (pure Neumann) pass a mean-removal hook here. `x` holds
/// the initial guess on entry and the solution on exit.
pub fn pcg(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x: &mut [f64],
    precond: &Preconditioner,
    tol_rel: f64,
    max_iters: usize,
    project: Option<&dyn Fn(&mut [f64])>,
    label: &'static str,
) -> Result<CgStats> {
    let n = b.len();
    assert_eq!(x.len(), n);
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(CgStats {
            iters: 0,
            final_residual: 0.0,
        });
    }

    let ax = apply(x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    if let Some(p) = project {
        p(&mut r);
    }
    let mut rnorm = dot(&r, &r).sqrt();
    if rnorm <= tol_rel * bnorm {
        return Ok(CgStats {
            iters: 0,
            final_residual: rnorm / bnorm,
        });
    }

    let mut z = precond.apply(&r);
    if let Some(p) = project {
        p(&mut z);
    }
    let mut p_dir = z.clone();
    let mut rz = dot(&r, &z);

    for it in 1..=max_iters {
        let ap = apply(&p_dir);
        let pap = dot(&p_dir, &ap);
        if pap <= 0.0 {
            return Err(Error::SolverDivergence {
                solver: label,
                residual: rnorm / bnorm,
                iters: it,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p_dir[i];
            r[i] -= alpha * ap[i];
        }
        if let Some(pr) = project {
            pr(&mut r);
        }
        rnorm = dot(&r, &r).sqrt();
        if rnorm <= tol_rel * bnorm {
            return Ok(CgStats {
                iters: it,
                final_residual: rnorm / bnorm,
            });
        }
        z = precond.apply(&r);
        if let Some(pr) = project {
            pr(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p_dir[i] = z[i] + beta * p_dir[i];
        }
    }
    Err(Error::SolverDivergence {
        solver: label,
        residual: rnorm / bnorm,
        iters: max_iters,
    })
}
