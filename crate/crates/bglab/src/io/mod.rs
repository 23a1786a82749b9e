//! Configuration parsing, snapshot persistence, manifests and report files.

mod config_doc;
mod manifest;
mod report;
mod schema;
mod snapshot;

pub use config_doc::{
    load_config, parse_config, ConfigDocument, DiagnosticsSection, EstimatorSection,
    GeometrySection, LoadedConfig, OutputSection, SamplerSection, SimulationSection, SweepSection,
};
pub use manifest::{
    load_manifest, sha256_hex, write_atomic, FileDigest, RunManifest, MANIFEST_NAME,
};
pub use report::{emit_balance_report, emit_histogram, emit_pair_histogram, emit_sweep_report};
pub use schema::{
    check_schema, validate_against_schema, BALANCE_REPORT_SCHEMA, MANIFEST_SCHEMA,
    SWEEP_REPORT_SCHEMA,
};
pub use snapshot::{read_snapshot, read_snapshot_stream, write_snapshot};
