//! Relaxation towards a stationary state: layered initial data, decaying
//! velocity, and a chemical potential flattening to a constant.
//!
//!     cargo run --release --example equilibrium_relaxation

use nlagg::nch::stationary_residual;
use nlagg::sim::Simulation;

fn main() -> nlagg::Result<()> {
    let mut cfg = nlagg::io::parse_config_str(include_str!("../configs/equilibrium.toml"))?;
    cfg.t_end = 2.0; // the full acceptance horizon is 20
    let sim = Simulation::new(cfg)?;
    let mut state = sim.initial_state()?;
    println!("   t      |u|_L2      stationary residual");
    for step in 1..=sim.cfg.n_steps() {
        state = sim.step(&state)?;
        if step % 50 == 0 {
            let resid = stationary_residual(&state.ch.phi, &sim.kernel, &sim.cfg.potential)?;
            println!(
                "{:6.2}  {:10.3e}  {:12.3e}",
                state.ch.t,
                nlagg::grid::norm_l2_vec(&state.ns.u),
                resid
            );
        }
    }
    Ok(())
}
