//! Perturb the initial phase field and watch the trajectory distance stay
//! inside the Gronwall envelope built from the base run.
//!
//!     cargo run --release --example continuous_dependence

use nlagg::diagnostics::run_continuous_dependence;

fn main() -> nlagg::Result<()> {
    let mut cfg = nlagg::io::parse_config_str(include_str!("../configs/study_base.toml"))?;
    cfg.t_end = 0.2;
    let report = run_continuous_dependence(&cfg, &[1e-2, 1e-3, 1e-4])?;
    let amp = report.series("final_amplification").unwrap();
    println!("{:>9} {:>16}", "delta", "D(T)/D(0)");
    for (x, y) in amp.x.iter().zip(&amp.y) {
        println!("{x:9.1e} {y:16.6}");
    }
    println!(
        "D(T) ~ delta^p with p = {:.3}; amplification spread {:.3}",
        report.fitted("d_final_vs_delta_slope").unwrap(),
        report.fitted("amplification_spread").unwrap()
    );
    println!("verdict: {}", if report.pass { "PASS" } else { "FAIL" });
    Ok(())
}
