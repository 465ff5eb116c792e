//! Property suite of the regularized singular potential: vanishing at the
//! origin, global Lipschitz bound, convexity floor, monotone convergence,
//! and endpoint blow-up.
//!
//!     cargo run --release --example yosida_properties

use nlagg::diagnostics::run_yosida_suite;
use nlagg::potential::{yosida_f, yosida_f_prime, PotentialSpec, YosidaParams};

fn main() -> nlagg::Result<()> {
    let pot = PotentialSpec::logarithmic(1.0)?;
    let lambdas = [1e-2, 1e-3, 1e-4];

    println!("F_lambda(s) against F(s):");
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "s", "l=1e-2", "l=1e-3", "l=1e-4", "F(s)");
    for s in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        let mut row = format!("{s:6.2}");
        for lam in lambdas {
            let yp = YosidaParams {
                lambda: lam,
                lambda_star: 0.25,
                newton_tol: 1e-14,
                max_iters: 100,
            };
            row.push_str(&format!(" {:12.8}", yosida_f(&pot, &yp, s)?));
        }
        row.push_str(&format!(" {:12.8}", pot.f_value(s)?));
        println!("{row}");
    }

    println!("\n|F'_lambda| outside the physical interval (s = 1.5):");
    for lam in lambdas {
        let yp = YosidaParams {
            lambda: lam,
            lambda_star: 0.25,
            newton_tol: 1e-14,
            max_iters: 100,
        };
        println!("  lambda = {lam:.0e}: {:.3}", yosida_f_prime(&pot, &yp, 1.5)?.abs());
    }

    let report = run_yosida_suite(&pot, &lambdas)?;
    println!(
        "\nsuite verdict: {} (min curvature {:.6}, max Lipschitz ratio {:.6})",
        if report.pass { "PASS" } else { "FAIL" },
        report.fitted("min_curvature").unwrap(),
        report.fitted("max_lipschitz_ratio").unwrap()
    );
    Ok(())
}
