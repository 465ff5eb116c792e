//! The per-step energy ledger as plain CSV. Floats are printed with Rust's
//! shortest round-trip formatting, so the file is byte-reproducible and
//! parses back to identical values.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::{EnergyLedger, LedgerRecord};

pub const LEDGER_HEADER: &str =
    "t,E_total,E_kin,E_nloc,dissipation,grad_mu_sq,residual,mass,sep_margin,u_l2";

/// Streaming CSV writer used inside the run loop, so a run that aborts still
/// leaves every completed record on disk.
pub struct LedgerWriter {
    out: BufWriter<File>,
}

impl LedgerWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{LEDGER_HEADER}")?;
        Ok(LedgerWriter { out })
    }

    pub fn write_record(&mut self, r: &LedgerRecord) -> Result<()> {
        writeln!(
            self.out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.e_total,
            r.e_kin,
            r.e_nloc,
            r.dissipation,
            r.grad_mu_sq,
            r.residual,
            r.mass,
            r.sep_margin,
            r.u_l2
        )?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn write_ledger_csv(path: &Path, ledger: &EnergyLedger) -> Result<()> {
    let mut w = LedgerWriter::create(path)?;
    for r in &ledger.records {
        w.write_record(r)?;
    }
    w.flush()
}

pub fn read_ledger_csv(path: &Path) -> Result<EnergyLedger> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(h)) if h == LEDGER_HEADER => {}
        other => {
            return Err(Error::CorruptHeader(format!(
                "ledger header mismatch: {other:?}"
            )))
        }
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::InvalidValue {
                key: format!("ledger line {}", lineno + 2),
                reason: format!("expected 10 columns, got {}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|e| Error::InvalidValue {
                key: format!("ledger line {}", lineno + 2),
                reason: format!("bad float {s:?}: {e}"),
            })
        };
        records.push(LedgerRecord {
            t: parse(fields[0])?,
            e_total: parse(fields[1])?,
            e_kin: parse(fields[2])?,
            e_nloc: parse(fields[3])?,
            dissipation: parse(fields[4])?,
            grad_mu_sq: parse(fields[5])?,
            residual: parse(fields[6])?,
            mass: parse(fields[7])?,
            sep_margin: parse(fields[8])?,
            u_l2: parse(fields[9])?,
        });
    }
    Ok(EnergyLedger { records })
}
