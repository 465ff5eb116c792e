//! How far does the unmatched-density solution drift from the
//! matched-density one? The negative-order distance scales linearly in the
//! density difference.
//!
//!     cargo run --release --example stability_vs_matched_density

use nlagg::diagnostics::run_stability_experiment;

fn main() -> nlagg::Result<()> {
    let cfg = nlagg::io::parse_config_str(include_str!("../configs/study_base.toml"))?;
    // shorter horizon than the acceptance study keeps the example snappy
    let mut cfg = cfg;
    cfg.t_end = 0.2;
    let eps = [0.4, 0.2, 0.1, 0.05];
    let report = run_stability_experiment(&cfg, 1.0, &eps)?;
    let s = report.series("error_vs_eps").unwrap();
    println!("{:>6} {:>14}", "eps", "sup distance");
    for (x, y) in s.x.iter().zip(&s.y) {
        println!("{x:6.2} {y:14.6e}");
    }
    println!(
        "fitted slope {:.3}, eps = 0 bitwise identical: {}",
        report.fitted("slope").unwrap(),
        report.series("zero_eps_identity").unwrap().y[0] == 1.0
    );
    println!("verdict: {}", if report.pass { "PASS" } else { "FAIL" });
    Ok(())
}
