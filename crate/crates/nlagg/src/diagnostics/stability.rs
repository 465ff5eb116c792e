//! Stability of the constant-density limit: the distance between the
//! unmatched-density run and the matched-density run from the same initial
//! state must scale linearly in the density difference, measured in the
//! negative-order norms of the velocity and phase differences.

use crate::error::Result;
use crate::grid::{norm_dual_sharp, norm_dual_star};
use crate::sim::{SimConfig, Simulation, Snapshot};

use super::{log_log_slope, ExperimentReport, Series};

fn trajectory(cfg: &SimConfig) -> Result<Vec<Snapshot>> {
    let sim = Simulation::new(cfg.clone())?;
    Ok(sim.run_collect()?.snapshots)
}

/// Negative-order distance at matched output times:
/// sup_t [ |u - u_H|_sharp + |(phi - phi_H) - mean|_star ].
fn sup_distance(a: &[Snapshot], b: &[Snapshot]) -> Result<f64> {
    assert_eq!(a.len(), b.len());
    let mut sup = 0.0f64;
    for (sa, sb) in a.iter().zip(b) {
        let du = sa.u.diff(&sb.u);
        let mut dphi = sa.phi.diff(&sb.phi);
        dphi.remove_mean();
        let v = norm_dual_sharp(&du)? + norm_dual_star(&dphi)?;
        sup = sup.max(v);
    }
    Ok(sup)
}

/// For each eps run the unmatched-density model (rho1 = rho_bar,
/// rho2 = rho_bar + eps) against the matched-density reference and fit the
/// log-log slope of the sup-distance against eps.
pub fn run_stability_experiment(
    cfg: &SimConfig,
    rho_bar: f64,
    eps_list: &[f64],
) -> Result<ExperimentReport> {
    assert!(eps_list.len() >= 3, "slope fit needs at least 3 points");
    let mut cfg = cfg.clone();
    if cfg.output.snapshot_every == 0 {
        cfg.output.snapshot_every = (cfg.n_steps() / 25).max(1);
    }

    // matched-density reference (the flux term vanishes identically)
    let mut cfg_h = cfg.clone();
    cfg_h.fluid.rho1 = rho_bar;
    cfg_h.fluid.rho2 = rho_bar;
    let reference = trajectory(&cfg_h)?;

    // eps = 0 must reproduce the reference bitwise: same code path, the
    // flux coefficient is exactly zero
    let mut cfg_0 = cfg.clone();
    cfg_0.fluid.rho1 = rho_bar;
    cfg_0.fluid.rho2 = rho_bar + 0.0;
    let zero_run = trajectory(&cfg_0)?;
    let zero_identical = zero_run
        .iter()
        .zip(&reference)
        .all(|(a, b)| a.phi.values == b.phi.values && a.u.x == b.u.x && a.u.y == b.u.y);

    let mut errors = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let mut cfg_e = cfg.clone();
        cfg_e.fluid.rho1 = rho_bar;
        cfg_e.fluid.rho2 = rho_bar + eps;
        let traj = trajectory(&cfg_e)?;
        errors.push(sup_distance(&traj, &reference)?);
    }

    let slope = log_log_slope(eps_list, &errors);
    let monotone = errors.windows(2).zip(eps_list.windows(2)).all(|(e, x)| {
        // eps_list may come in any order; compare consistently
        if x[0] < x[1] {
            e[0] <= e[1] * (1.0 + 1e-12)
        } else {
            e[1] <= e[0] * (1.0 + 1e-12)
        }
    });
    let slope_ok = (0.8..=1.2).contains(&slope);
    let pass = zero_identical && slope_ok && monotone;

    Ok(ExperimentReport {
        name: "density-stability".into(),
        inputs: vec![
            ("rho_bar".into(), rho_bar.to_string()),
            ("eps".into(), format!("{eps_list:?}")),
            ("t_end".into(), cfg.t_end.to_string()),
        ],
        series: vec![
            Series {
                name: "error_vs_eps".into(),
                x: eps_list.to_vec(),
                y: errors,
            },
            Series {
                name: "zero_eps_identity".into(),
                x: vec![0.0],
                y: vec![zero_identical as u8 as f64],
            },
        ],
        fitted: vec![("slope".into(), slope)],
        criterion: "eps = 0 bitwise identical; sup-distance slope in [0.8, 1.2]; \
                    error monotone in eps"
            .into(),
        pass,
    })
}
