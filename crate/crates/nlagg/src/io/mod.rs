//! Configuration files, binary field snapshots, checkpoints, the ledger CSV,
//! and run manifests. Plain CSV plus raw little-endian binary keeps every
//! output inspectable without special tooling, and byte-for-byte reproducible
//! for a given config and binary.

mod config;
mod ledger;
mod manifest;
mod runner;
mod snapshot;

pub use config::{parse_config, parse_config_str};
pub use ledger::{read_ledger_csv, write_ledger_csv, LedgerWriter, LEDGER_HEADER};
pub use manifest::{config_sha256, DirLock, RunManifest};
pub use runner::{export_field_csv, simulate_to_dir, RunSummary};
pub use snapshot::{
    read_checkpoint, read_field, write_checkpoint, write_field, FieldKind, CHECKPOINT_MANIFEST,
};
