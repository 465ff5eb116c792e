//! Binary field snapshots and checkpoints.
//!
//! A field file is a header (magic "NLAGGFLD", u32 nx, u32 ny, f64 lx,
//! f64 ly, u32 kind-tag, all little-endian) followed by the raw f64 payload,
//! row-major with x fastest. nx, ny are the cell counts of the domain; the
//! kind tag fixes the payload length (face arrays are one row/column wider).
//! Checkpoints are a directory of five field files plus a small manifest
//! carrying the clock, the step index, and the config hash; the float clock
//! is stored as raw bits so restarts are bit-exact.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Domain, PressureField, ScalarField, VectorField};
use crate::nch::ChState;
use crate::ns::NsState;
use crate::sim::SimState;

pub const MAGIC: &[u8; 8] = b"NLAGGFLD";
pub const CHECKPOINT_MANIFEST: &str = "checkpoint.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum FieldKind {
    Scalar = 0,
    Phi = 1,
    Mu = 2,
    Pressure = 3,
    VelocityX = 4,
    VelocityY = 5,
}

impl FieldKind {
    fn from_tag(tag: u32) -> Result<FieldKind> {
        Ok(match tag {
            0 => FieldKind::Scalar,
            1 => FieldKind::Phi,
            2 => FieldKind::Mu,
            3 => FieldKind::Pressure,
            4 => FieldKind::VelocityX,
            5 => FieldKind::VelocityY,
            other => {
                return Err(Error::CorruptHeader(format!(
                    "unknown field kind tag {other}"
                )))
            }
        })
    }

    fn payload_len(&self, d: Domain) -> usize {
        match self {
            FieldKind::VelocityX => (d.nx + 1) * d.ny,
            FieldKind::VelocityY => d.nx * (d.ny + 1),
            _ => d.nx * d.ny,
        }
    }
}

/// Write one field to `path` (atomically, via a temp file and rename).
pub fn write_field(path: &Path, domain: Domain, kind: FieldKind, values: &[f64]) -> Result<()> {
    let expected = kind.payload_len(domain);
    if values.len() != expected {
        return Err(Error::SizeMismatch {
            expected: expected * 8,
            found: values.len() * 8,
        });
    }
    let mut buf = Vec::with_capacity(36 + values.len() * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(domain.nx as u32).to_le_bytes());
    buf.extend_from_slice(&(domain.ny as u32).to_le_bytes());
    buf.extend_from_slice(&domain.lx.to_le_bytes());
    buf.extend_from_slice(&domain.ly.to_le_bytes());
    buf.extend_from_slice(&(kind as u32).to_le_bytes());
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&buf)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Read one field file back: domain, kind, raw values.
pub fn read_field(path: &Path) -> Result<(Domain, FieldKind, Vec<f64>)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 36 {
        return Err(Error::CorruptHeader(format!(
            "file too short for a header: {} bytes",
            bytes.len()
        )));
    }
    if &bytes[0..8] != MAGIC {
        return Err(Error::CorruptHeader("bad magic".into()));
    }
    let nx = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let ny = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let lx = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let ly = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let tag = u32::from_le_bytes(bytes[32..36].try_into().unwrap());
    let kind = FieldKind::from_tag(tag)?;
    let domain = Domain::new(nx, ny, lx, ly).map_err(|e| Error::CorruptHeader(e.to_string()))?;
    let expected = kind.payload_len(domain) * 8;
    let found = bytes.len() - 36;
    if found != expected {
        return Err(Error::SizeMismatch { expected, found });
    }
    let values: Vec<f64> = bytes[36..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((domain, kind, values))
}

/// Persist a full coupled state under `dir`.
pub fn write_checkpoint(dir: &Path, state: &SimState, config_sha256: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let d = state.ch.phi.domain;
    write_field(&dir.join("phi.fld"), d, FieldKind::Phi, &state.ch.phi.values)?;
    write_field(&dir.join("mu.fld"), d, FieldKind::Mu, &state.ch.mu.values)?;
    write_field(
        &dir.join("p.fld"),
        d,
        FieldKind::Pressure,
        &state.ns.p.field.values,
    )?;
    write_field(&dir.join("ux.fld"), d, FieldKind::VelocityX, &state.ns.u.x)?;
    write_field(&dir.join("uy.fld"), d, FieldKind::VelocityY, &state.ns.u.y)?;
    let manifest = format!(
        "version = 1\nstep = {}\nt = {}\nt_bits = \"{:016x}\"\nconfig_sha256 = \"{}\"\n",
        state.step,
        state.ch.t,
        state.ch.t.to_bits(),
        config_sha256
    );
    let tmp = dir.join("checkpoint.toml.tmp");
    fs::write(&tmp, manifest)?;
    fs::rename(tmp, dir.join(CHECKPOINT_MANIFEST))?;
    Ok(())
}

/// Load a checkpoint directory; returns the state and the config hash it was
/// written under.
pub fn read_checkpoint(dir: &Path) -> Result<(SimState, String)> {
    let manifest_text = fs::read_to_string(dir.join(CHECKPOINT_MANIFEST))?;
    let manifest: toml::Value = manifest_text
        .parse()
        .map_err(|e: toml::de::Error| Error::CorruptHeader(e.to_string()))?;
    let version = manifest
        .get("version")
        .and_then(|v| v.as_integer())
        .ok_or_else(|| Error::CorruptHeader("missing checkpoint version".into()))?;
    if version != 1 {
        return Err(Error::CorruptHeader(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let step = manifest
        .get("step")
        .and_then(|v| v.as_integer())
        .ok_or_else(|| Error::CorruptHeader("missing step".into()))? as usize;
    let t_bits = manifest
        .get("t_bits")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::CorruptHeader("missing t_bits".into()))?;
    let t = f64::from_bits(
        u64::from_str_radix(t_bits, 16)
            .map_err(|e| Error::CorruptHeader(format!("bad t_bits: {e}")))?,
    );
    let config_sha = manifest
        .get("config_sha256")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::CorruptHeader("missing config_sha256".into()))?
        .to_string();

    let (d, kind, phi_v) = read_field(&dir.join("phi.fld"))?;
    expect_kind(kind, FieldKind::Phi)?;
    let (_, kind, mu_v) = read_field(&dir.join("mu.fld"))?;
    expect_kind(kind, FieldKind::Mu)?;
    let (_, kind, p_v) = read_field(&dir.join("p.fld"))?;
    expect_kind(kind, FieldKind::Pressure)?;
    let (_, kind, ux) = read_field(&dir.join("ux.fld"))?;
    expect_kind(kind, FieldKind::VelocityX)?;
    let (_, kind, uy) = read_field(&dir.join("uy.fld"))?;
    expect_kind(kind, FieldKind::VelocityY)?;

    let phi = ScalarField {
        domain: d,
        values: phi_v,
    };
    let mu = ScalarField {
        domain: d,
        values: mu_v,
    };
    let p = ScalarField {
        domain: d,
        values: p_v,
    };
    let mut u = VectorField::zeros(d);
    u.x = ux;
    u.y = uy;
    Ok((
        SimState {
            ns: NsState {
                u,
                p: PressureField {
                    field: p,
                    mean_zero: true,
                },
                t,
            },
            ch: ChState { phi, mu, t },
            step,
        },
        config_sha,
    ))
}

fn expect_kind(found: FieldKind, expected: FieldKind) -> Result<()> {
    if found != expected {
        return Err(Error::CorruptHeader(format!(
            "field kind mismatch: expected {expected:?}, found {found:?}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn sample_state() -> SimState {
        let d = Domain::new(16, 16, 1.0, 2.0).unwrap();
        let phi = ScalarField::from_fn(d, |x, y| 0.5 * (x - y).sin());
        let mu = ScalarField::from_fn(d, |x, y| (x * y).cos());
        let mut u = VectorField::zeros(d);
        for (i, v) in u.x.iter_mut().enumerate() {
            *v = (i as f64 * 0.1).sin();
        }
        for (i, v) in u.y.iter_mut().enumerate() {
            *v = (i as f64 * 0.2).cos();
        }
        SimState {
            ns: NsState {
                u,
                p: PressureField::mean_free(ScalarField::from_fn(d, |x, _| x)),
                t: 0.123456789,
            },
            ch: ChState {
                phi,
                mu,
                t: 0.123456789,
            },
            step: 42,
        }
    }

    #[test]
    fn field_round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let d = Domain::new(16, 16, 1.0, 2.0).unwrap();
        let f = ScalarField::from_fn(d, |x, y| (x * 7.3 + y).tan());
        let path = dir.path().join("f.fld");
        write_field(&path, d, FieldKind::Scalar, &f.values).unwrap();
        let (d2, kind, values) = read_field(&path).unwrap();
        assert_eq!(d2, d);
        assert_eq!(kind, FieldKind::Scalar);
        assert_eq!(values, f.values);
        // header is the documented 36 bytes
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 36 + 8 * d.n_cells());
        assert_eq!(&bytes[0..8], b"NLAGGFLD");
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let state = sample_state();
        let cp = dir.path().join("checkpoint_000042");
        write_checkpoint(&cp, &state, "deadbeef").unwrap();
        let (loaded, sha) = read_checkpoint(&cp).unwrap();
        assert_eq!(sha, "deadbeef");
        assert_eq!(loaded.step, 42);
        assert_eq!(loaded.ch.t.to_bits(), state.ch.t.to_bits());
        assert_eq!(loaded.ch.phi.values, state.ch.phi.values);
        assert_eq!(loaded.ch.mu.values, state.ch.mu.values);
        assert_eq!(loaded.ns.u.x, state.ns.u.x);
        assert_eq!(loaded.ns.u.y, state.ns.u.y);
        assert_eq!(loaded.ns.p.field.values, state.ns.p.field.values);
    }

    #[test]
    fn truncated_file_reports_size_mismatch() {
        let dir = tempdir().unwrap();
        let d = Domain::new(16, 16, 1.0, 1.0).unwrap();
        let f = ScalarField::constant(d, 1.0);
        let path = dir.path().join("f.fld");
        write_field(&path, d, FieldKind::Scalar, &f.values).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 16]).unwrap();
        assert!(matches!(
            read_field(&path),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn bad_magic_and_bad_tag_report_corrupt_header() {
        let dir = tempdir().unwrap();
        let d = Domain::new(16, 16, 1.0, 1.0).unwrap();
        let f = ScalarField::constant(d, 1.0);
        let path = dir.path().join("f.fld");
        write_field(&path, d, FieldKind::Scalar, &f.values).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_field(&path), Err(Error::CorruptHeader(_))));

        write_field(&path, d, FieldKind::Scalar, &f.values).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[32] = 99; // kind tag
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_field(&path), Err(Error::CorruptHeader(_))));
    }

    #[test]
    fn checkpoint_version_mismatch_rejected() {
        let dir = tempdir().unwrap();
        let state = sample_state();
        let cp = dir.path().join("cp");
        write_checkpoint(&cp, &state, "cafe").unwrap();
        let manifest = std::fs::read_to_string(cp.join(CHECKPOINT_MANIFEST)).unwrap();
        std::fs::write(
            cp.join(CHECKPOINT_MANIFEST),
            manifest.replace("version = 1", "version = 9"),
        )
        .unwrap();
        assert!(matches!(
            read_checkpoint(&cp),
            Err(Error::CorruptHeader(_))
        ));
    }
}
