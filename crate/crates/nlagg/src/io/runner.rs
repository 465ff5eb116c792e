//! Drive a configured simulation into an output directory: streamed ledger,
//! snapshot and checkpoint files at their cadences, and a final manifest.
//! On solver failure everything already produced stays on disk and the
//! manifest records the failure.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::ledger::LedgerWriter;
use crate::io::manifest::{config_sha256, DirLock, RunManifest};
use crate::io::snapshot::{read_checkpoint, write_checkpoint, write_field, FieldKind};
use crate::sim::{EnergyLedger, SimConfig, SimState, Simulation};

#[derive(Debug)]
pub struct RunSummary {
    pub final_state: SimState,
    pub ledger: EnergyLedger,
    pub out_dir: PathBuf,
}

/// Run `cfg` into `out`, optionally resuming from a checkpoint directory.
/// `config_bytes` are the raw bytes of the config file; they are copied into
/// the output directory and hashed into the manifest and checkpoints.
pub fn simulate_to_dir(
    cfg: SimConfig,
    config_bytes: &[u8],
    out: &Path,
    resume: Option<&Path>,
) -> Result<RunSummary> {
    let _lock = DirLock::acquire(out)?;
    let sha = config_sha256(config_bytes);
    fs::write(out.join("config.toml"), config_bytes)?;

    let sim = Simulation::new(cfg)?;
    let start = match resume {
        None => sim.initial_state()?,
        Some(cp) => {
            let (state, cp_sha) = read_checkpoint(cp)?;
            if cp_sha != sha {
                return Err(Error::InvalidValue {
                    key: "resume".into(),
                    reason: format!(
                        "checkpoint was written under config {cp_sha}, current config is {sha}"
                    ),
                });
            }
            if state.ch.phi.domain != sim.cfg.domain {
                return Err(Error::InvalidValue {
                    key: "resume".into(),
                    reason: "checkpoint domain does not match the config".into(),
                });
            }
            state
        }
    };

    let mut manifest = RunManifest::begin(sha.clone());
    manifest.outputs.push("config.toml".into());
    manifest.outputs.push("ledger.csv".into());
    let mut ledger_writer = LedgerWriter::create(&out.join("ledger.csv"))?;

    let checkpoint_every = sim.cfg.output.checkpoint_every;
    let extra_outputs: std::cell::RefCell<Vec<String>> = std::cell::RefCell::new(Vec::new());
    let result = sim.run_with(
        start,
        |state, rec| {
            ledger_writer.write_record(rec)?;
            if checkpoint_every != 0 && state.step > 0 && state.step % checkpoint_every == 0 {
                let name = format!("checkpoint_{:06}", state.step);
                write_checkpoint(&out.join(&name), state, &sha)?;
                extra_outputs.borrow_mut().push(name);
            }
            Ok(())
        },
        |snap| {
            let d = snap.phi.domain;
            let base = format!("snap_{:06}", snap.step);
            write_field(
                &out.join(format!("{base}_phi.fld")),
                d,
                FieldKind::Phi,
                &snap.phi.values,
            )?;
            write_field(
                &out.join(format!("{base}_mu.fld")),
                d,
                FieldKind::Mu,
                &snap.mu.values,
            )?;
            write_field(
                &out.join(format!("{base}_p.fld")),
                d,
                FieldKind::Pressure,
                &snap.p.values,
            )?;
            write_field(
                &out.join(format!("{base}_ux.fld")),
                d,
                FieldKind::VelocityX,
                &snap.u.x,
            )?;
            write_field(
                &out.join(format!("{base}_uy.fld")),
                d,
                FieldKind::VelocityY,
                &snap.u.y,
            )?;
            extra_outputs.borrow_mut().push(base);
            Ok(())
        },
    );
    ledger_writer.flush()?;
    manifest.outputs.append(&mut extra_outputs.into_inner());

    match result {
        Ok((final_state, ledger)) => {
            // terminal checkpoint so the run can always be continued
            let name = format!("checkpoint_{:06}", final_state.step);
            write_checkpoint(&out.join(&name), &final_state, &sha)?;
            manifest.outputs.push(name);
            manifest.finish(0);
            manifest.write(out)?;
            Ok(RunSummary {
                final_state,
                ledger,
                out_dir: out.to_path_buf(),
            })
        }
        Err(e) => {
            manifest.finish(1);
            manifest.write(out)?;
            Err(e)
        }
    }
}

/// Convert one binary field file to CSV (x, y, value rows with a header).
pub fn export_field_csv(input: &Path, output: &Path) -> Result<()> {
    let (d, kind, values) = crate::io::snapshot::read_field(input)?;
    let mut text = String::from("x,y,value\n");
    match kind {
        FieldKind::VelocityX => {
            for j in 0..d.ny {
                for i in 0..=d.nx {
                    let (x, y) = d.xface_pos(i, j);
                    text.push_str(&format!("{x},{y},{}\n", values[j * (d.nx + 1) + i]));
                }
            }
        }
        FieldKind::VelocityY => {
            for j in 0..=d.ny {
                for i in 0..d.nx {
                    let (x, y) = d.yface_pos(i, j);
                    text.push_str(&format!("{x},{y},{}\n", values[j * d.nx + i]));
                }
            }
        }
        _ => {
            for j in 0..d.ny {
                for i in 0..d.nx {
                    let (x, y) = d.cell_center(i, j);
                    text.push_str(&format!("{x},{y},{}\n", values[d.idx(i, j)]));
                }
            }
        }
    }
    fs::write(output, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::parse_config_str;
    use tempfile::tempdir;

    const SMALL: &str = r#"
[domain]
nx = 16
ny = 16
lx = 1.0
ly = 1.0

[fluid]
rho1 = 1.0
rho2 = 2.0
nu1 = 1.0
nu2 = 0.5

[potential]
alpha = 1.0

[kernel]
kind = "gaussian"
epsilon = 0.05
strength = 2.0

[time]
dt = 1e-3
t_end = 4e-3

[initial]
preset = "random-mix"
amplitude = 0.5
seed = 3

[output]
snapshot_every = 2
checkpoint_every = 2
"#;

    #[test]
    fn run_writes_ledger_snapshots_checkpoints_manifest() {
        let dir = tempdir().unwrap();
        let cfg = parse_config_str(SMALL).unwrap();
        let out = dir.path().join("run");
        let summary = simulate_to_dir(cfg, SMALL.as_bytes(), &out, None).unwrap();
        assert_eq!(summary.final_state.step, 4);
        assert!(out.join("ledger.csv").exists());
        assert!(out.join("snap_000002_phi.fld").exists());
        assert!(out.join("snap_000004_uy.fld").exists());
        assert!(out.join("checkpoint_000002").join("phi.fld").exists());
        assert!(out.join("checkpoint_000004").exists());
        assert!(out.join("manifest.toml").exists());
        let ledger = crate::io::read_ledger_csv(&out.join("ledger.csv")).unwrap();
        assert_eq!(ledger.records.len(), 5);
        // lock released at the end of the run
        assert!(!out.join(".nlagg.lock").exists());
    }

    #[test]
    fn restart_reproduces_the_uninterrupted_tail_bitwise() {
        let dir = tempdir().unwrap();
        let cfg = parse_config_str(SMALL).unwrap();
        let full = dir.path().join("full");
        let s_full = simulate_to_dir(cfg.clone(), SMALL.as_bytes(), &full, None).unwrap();

        let resumed = dir.path().join("resumed");
        let s_res = simulate_to_dir(
            cfg,
            SMALL.as_bytes(),
            &resumed,
            Some(&full.join("checkpoint_000002")),
        )
        .unwrap();
        assert_eq!(
            s_full.final_state.ch.phi.values,
            s_res.final_state.ch.phi.values
        );
        assert_eq!(s_full.final_state.ns.u.x, s_res.final_state.ns.u.x);
        assert_eq!(s_full.final_state.ns.u.y, s_res.final_state.ns.u.y);
        assert_eq!(
            s_full.final_state.ns.p.field.values,
            s_res.final_state.ns.p.field.values
        );
        assert_eq!(
            s_full.final_state.ch.t.to_bits(),
            s_res.final_state.ch.t.to_bits()
        );
    }

    #[test]
    fn resume_with_different_config_rejected() {
        let dir = tempdir().unwrap();
        let cfg = parse_config_str(SMALL).unwrap();
        let full = dir.path().join("full");
        simulate_to_dir(cfg, SMALL.as_bytes(), &full, None).unwrap();
        let changed = SMALL.replace("nu1 = 1.0", "nu1 = 1.1");
        let cfg2 = parse_config_str(&changed).unwrap();
        let res = simulate_to_dir(
            cfg2,
            changed.as_bytes(),
            &dir.path().join("res"),
            Some(&full.join("checkpoint_000002")),
        );
        assert!(matches!(res, Err(Error::InvalidValue { .. })));
    }

    #[test]
    fn export_csv_round_trip() {
        let dir = tempdir().unwrap();
        let d = crate::grid::Domain::new(8, 8, 1.0, 1.0).unwrap();
        let f = crate::grid::ScalarField::from_fn(d, |x, y| x + 10.0 * y);
        let fld = dir.path().join("f.fld");
        write_field(&fld, d, FieldKind::Scalar, &f.values).unwrap();
        let csv = dir.path().join("f.csv");
        export_field_csv(&fld, &csv).unwrap();
        let text = std::fs::read_to_string(&csv).unwrap();
        assert!(text.starts_with("x,y,value\n"));
        assert_eq!(text.lines().count(), 1 + 64);
    }
}
