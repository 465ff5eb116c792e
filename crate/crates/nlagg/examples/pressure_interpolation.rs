//! The L4 pressure of the Stokes problem against the interpolation bound:
//! ratios stay bounded over random forcings and grid refinement.
//!
//!     cargo run --release --example pressure_interpolation

use nlagg::diagnostics::run_pressure_interpolation_study;

fn main() -> nlagg::Result<()> {
    let report = run_pressure_interpolation_study(&[32, 64, 128], 12, 1)?;
    let s = report.series("max_ratio_per_grid").unwrap();
    println!("{:>6} {:>12}", "grid", "max ratio");
    for (x, y) in s.x.iter().zip(&s.y) {
        println!("{:>6} {y:12.6}", *x as usize);
    }
    println!(
        "worst per-sample scaling defect: {:.3e}",
        report.fitted("worst_scale_defect").unwrap()
    );
    println!("verdict: {}", if report.pass { "PASS" } else { "FAIL" });
    Ok(())
}
