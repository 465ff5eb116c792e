//! Executable experiments for the quantitative structural claims: continuous
//! dependence with a Gronwall envelope, constant-density stability of the
//! matched-density limit, the pressure interpolation bound, the regularized
//! potential property suite, and restart/uniqueness checks. Every report
//! stores the raw measured series next to the verdict, so the pass flag can
//! be recomputed from the report alone.

mod dependence;
mod identities;
mod pressure;
mod stability;
mod yosida;

pub use dependence::{gronwall_factor, run_continuous_dependence, DEPENDENCE_MARGIN};
pub use identities::{continuity_residual, drift_identity_sides};
pub use pressure::run_pressure_interpolation_study;
pub use stability::run_stability_experiment;
pub use yosida::run_yosida_suite;

use std::path::Path;

use crate::error::Result;
use crate::io::write_checkpoint;
use crate::sim::{SimConfig, SimState, Simulation};

/// One named measured series (x is time or a parameter, y the measurement).
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Self-contained outcome of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub name: String,
    pub inputs: Vec<(String, String)>,
    pub series: Vec<Series>,
    pub fitted: Vec<(String, f64)>,
    pub criterion: String,
    pub pass: bool,
}

impl ExperimentReport {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn fitted(&self, name: &str) -> Option<f64> {
        self.fitted
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    /// Recompute the verdict from the stored series alone; reports are
    /// self-auditing, so this must reproduce `pass`. Returns None for report
    /// kinds without a registered recheck rule.
    pub fn recheck(&self) -> Option<bool> {
        match self.name.as_str() {
            "density-stability" => {
                let e = self.series("error_vs_eps")?;
                let slope = log_log_slope(&e.x, &e.y);
                let monotone = e.y.windows(2).zip(e.x.windows(2)).all(|(y, x)| {
                    if x[0] < x[1] {
                        y[0] <= y[1] * (1.0 + 1e-12)
                    } else {
                        y[1] <= y[0] * (1.0 + 1e-12)
                    }
                });
                let zero_ok = self.series("zero_eps_identity")?.y[0] == 1.0;
                Some((0.8..=1.2).contains(&slope) && monotone && zero_ok)
            }
            "pressure-interpolation" => {
                let maxima = self.series("max_ratio_per_grid")?;
                let finite = maxima.y.iter().all(|v| v.is_finite() && *v > 0.0);
                let growth = maxima.y.windows(2).all(|w| w[1] <= 2.0 * w[0]);
                let defects = self.series("scale_defects")?;
                let scaling = defects.y.iter().all(|v| *v <= 1e-8);
                Some(finite && growth && scaling)
            }
            "continuous-dependence" => {
                let kint = self.series("gronwall_integral")?;
                let zero_ok = self.series("zero_delta_identity")?.y[0] == 1.0;
                let mut envelope_ok = true;
                let mut ratios = Vec::new();
                for s in &self.series {
                    if let Some(rest) = s.name.strip_prefix("distance_delta_") {
                        let _ = rest;
                        let d0 = s.y[0];
                        for (idx, &dv) in s.y.iter().enumerate() {
                            if dv > d0 * kint.y[idx].exp() * DEPENDENCE_MARGIN {
                                envelope_ok = false;
                            }
                        }
                        ratios.push(*s.y.last()? / d0);
                    }
                }
                let rmax = ratios.iter().copied().fold(f64::MIN, f64::max);
                let rmin = ratios.iter().copied().fold(f64::MAX, f64::min);
                // the quadratic-scaling check needs D(T) itself; rebuild it
                // from the per-delta distance series
                let mut dx = Vec::new();
                let mut dy = Vec::new();
                for s in &self.series {
                    if let Some(rest) = s.name.strip_prefix("distance_delta_") {
                        if let Ok(delta) = rest.parse::<f64>() {
                            dx.push(delta);
                            dy.push(*s.y.last()?);
                        }
                    }
                }
                let quad_slope = log_log_slope(&dx, &dy);
                Some(
                    envelope_ok
                        && zero_ok
                        && rmax <= 2.0 * rmin
                        && (quad_slope - 2.0).abs() <= 1.0,
                )
            }
            _ => None,
        }
    }

    /// Serialize as one directory: a summary text block plus one CSV per
    /// series.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut summary = String::new();
        summary.push_str(&format!("experiment: {}\n", self.name));
        for (k, v) in &self.inputs {
            summary.push_str(&format!("input {k} = {v}\n"));
        }
        for (k, v) in &self.fitted {
            summary.push_str(&format!("fitted {k} = {v}\n"));
        }
        summary.push_str(&format!("criterion: {}\n", self.criterion));
        summary.push_str(&format!("pass: {}\n", self.pass));
        std::fs::write(dir.join("summary.txt"), summary)?;
        for s in &self.series {
            let mut text = String::from("x,y\n");
            for (x, y) in s.x.iter().zip(&s.y) {
                text.push_str(&format!("{x},{y}\n"));
            }
            std::fs::write(dir.join(format!("{}.csv", s.name)), text)?;
        }
        Ok(())
    }
}

/// Least-squares slope of ln(y) against ln(x).
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    assert!(x.len() == y.len() && x.len() >= 2);
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        num += (a - mx) * (b - my);
        den += (a - mx) * (a - mx);
    }
    num / den
}

/// Run one trajectory, restart it from a mid-time checkpoint, and verify the
/// tails coincide bitwise; the empirical face of unique continuation under
/// exact state agreement.
pub fn run_separated_uniqueness_check(cfg: &SimConfig) -> Result<ExperimentReport> {
    let sim = Simulation::new(cfg.clone())?;
    let total = cfg.n_steps();
    let half = total / 2;

    let start = sim.initial_state()?;
    let mut mid: Option<SimState> = None;
    let (final_full, _) = sim.run_with(
        start.clone(),
        |state, _| {
            if state.step == half {
                mid = Some(state.clone());
            }
            Ok(())
        },
        |_| Ok(()),
    )?;
    let mid = mid.expect("mid-trajectory state captured");

    // serialize the mid state through the checkpoint format before resuming,
    // so the restart path exercised here is the production one
    let tmp = std::env::temp_dir().join(format!("nlagg-uniqueness-{}", std::process::id()));
    write_checkpoint(&tmp, &mid, "uniqueness-check")?;
    let (reloaded, _) = crate::io::read_checkpoint(&tmp)?;
    let _ = std::fs::remove_dir_all(&tmp);

    let (final_resumed, _) = sim.run_with(reloaded, |_, _| Ok(()), |_| Ok(()))?;
    let tail_identical = final_full.ch.phi.values == final_resumed.ch.phi.values
        && final_full.ns.u.x == final_resumed.ns.u.x
        && final_full.ns.u.y == final_resumed.ns.u.y
        && final_full.ns.p.field.values == final_resumed.ns.p.field.values;

    // restart at t = 0 reproduces the whole trajectory
    let (final_again, _) = sim.run_with(start, |_, _| Ok(()), |_| Ok(()))?;
    let full_identical = final_full.ch.phi.values == final_again.ch.phi.values;

    Ok(ExperimentReport {
        name: "separated-uniqueness".into(),
        inputs: vec![
            ("t_end".into(), cfg.t_end.to_string()),
            ("restart_step".into(), half.to_string()),
        ],
        series: vec![Series {
            name: "identity_flags".into(),
            x: vec![0.0, 1.0],
            y: vec![tail_identical as u8 as f64, full_identical as u8 as f64],
        }],
        fitted: vec![],
        criterion: "restarted tail and full rerun coincide bitwise".into(),
        pass: tail_identical && full_identical,
    })
}

/// Thread cap for sample-parallel experiments, from NLAGG_THREADS (defaults
/// to the machine parallelism).
pub fn max_threads() -> usize {
    std::env::var("NLAGG_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}
