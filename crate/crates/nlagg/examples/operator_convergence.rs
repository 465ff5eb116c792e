//! Manufactured-solution convergence orders of the discrete inverses:
//! the Stokes solve, the Neumann solve, and the transform convolution
//! against its direct-sum oracle.
//!
//!     cargo run --release --example operator_convergence

use nlagg::grid::{norm_l2, norm_l2_vec, Domain, ScalarField, VectorField};
use nlagg::kernel::{KernelKind, KernelSpec};

fn main() -> nlagg::Result<()> {
    let pi = std::f64::consts::PI;

    println!("Stokes manufactured solution (streamfunction sin^2 sin^2):");
    let ux = move |x: f64, y: f64| pi * (pi * x).sin().powi(2) * (2.0 * pi * y).sin();
    let uy = move |x: f64, y: f64| -pi * (2.0 * pi * x).sin() * (pi * y).sin().powi(2);
    let fx = move |x: f64, y: f64| {
        -2.0 * pi.powi(3) * (2.0 * (2.0 * pi * x).cos() - 1.0) * (2.0 * pi * y).sin()
            - pi * (pi * x).sin() * (pi * y).cos()
    };
    let fy = move |x: f64, y: f64| {
        2.0 * pi.powi(3) * (2.0 * (2.0 * pi * y).cos() - 1.0) * (2.0 * pi * x).sin()
            - pi * (pi * x).cos() * (pi * y).sin()
    };
    let mut prev: Option<f64> = None;
    for n in [32usize, 64, 128] {
        let d = Domain::new(n, n, 1.0, 1.0)?;
        let f = VectorField::from_fn(d, fx, fy);
        let (u, _) = nlagg::grid::solve_stokes(&f)?;
        let err = norm_l2_vec(&u.diff(&VectorField::from_fn(d, ux, uy)));
        match prev {
            Some(p) => println!("  {n:>4}^2: err {err:.3e}  order {:.2}", (p / err).log2()),
            None => println!("  {n:>4}^2: err {err:.3e}"),
        }
        prev = Some(err);
    }

    println!("Neumann inverse on the first cosine mode:");
    let mut prev: Option<f64> = None;
    for n in [32usize, 64, 128] {
        let d = Domain::new(n, n, 1.0, 1.0)?;
        let g = ScalarField::from_fn(d, |x, _| (pi * x).cos());
        let f = nlagg::grid::solve_neumann_poisson(&g)?;
        let exact = g.scaled(1.0 / (pi * pi));
        let err = norm_l2(&f.diff(&exact)) / norm_l2(&exact);
        match prev {
            Some(p) => println!("  {n:>4}^2: err {err:.3e}  order {:.2}", (p / err).log2()),
            None => println!("  {n:>4}^2: err {err:.3e}"),
        }
        prev = Some(err);
    }

    println!("Transform convolution vs direct double sum:");
    for n in [32usize, 48] {
        let d = Domain::new(n, n, 1.0, 1.0)?;
        let k = KernelSpec::new(KernelKind::Gaussian { epsilon: 0.04 }, 1.5, d)?;
        let f = ScalarField::from_fn(d, |x, y| ((9.0 * x).sin() * (7.0 * y).cos()).tanh());
        let a = k.convolve(&f);
        let b = k.convolve_direct(&f);
        let diff = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        println!("  {n:>4}^2: max abs difference {diff:.3e}");
    }
    Ok(())
}
