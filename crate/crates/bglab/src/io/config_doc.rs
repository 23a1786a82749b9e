//! JSON run configuration: parsing, defaulting, validation.
//!
//! Unknown keys are rejected. Every defaulted value is detectable by
//! comparing the resolved document against the input, and the list of
//! defaulted paths lands in the run manifest.

use crate::dynamics::{BoundaryKind, DomainGeometry, Mode};
use crate::error::{Error, Result};
use crate::sampling::PositionLaw;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

fn default_internal_separation() -> f64 {
    0.5
}
fn default_temperature() -> f64 {
    1.0
}
fn default_mass() -> f64 {
    1.0
}
fn default_position_law() -> PositionLaw {
    PositionLaw::HardSphere
}
fn default_mode() -> Mode {
    Mode::StandardGas
}
fn default_kind() -> BoundaryKind {
    BoundaryKind::PeriodicBox
}
fn default_spatial_bins() -> usize {
    8
}
fn default_velocity_bins() -> usize {
    16
}
fn default_radial_bins() -> usize {
    64
}
fn default_velocity_pair_bins() -> usize {
    4
}
fn default_ensemble_size() -> u32 {
    100
}
fn default_measure_after_mft() -> f64 {
    0.1
}
fn default_stencil_fraction() -> f64 {
    0.05
}
fn default_collision_samples() -> u64 {
    1_000_000
}
fn default_threshold() -> f64 {
    25.0
}
fn default_k() -> f64 {
    1.0
}
fn default_n_list() -> Vec<u64> {
    vec![125, 250, 500, 1000, 2000]
}
fn default_sweep_ensemble() -> u32 {
    32
}
fn default_velocity_variance() -> f64 {
    1.0
}
fn default_out_dir() -> String {
    "out".into()
}
fn default_max_events() -> Option<u64> {
    None
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    #[serde(default = "default_kind")]
    pub kind: BoundaryKind,
    pub lengths: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub n_external: usize,
    #[serde(default)]
    pub n_internal_pairs: usize,
    #[serde(default = "default_internal_separation")]
    pub internal_separation: f64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_position_law")]
    pub position_law: PositionLaw,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub d: f64,
    #[serde(default = "default_mass")]
    pub m: f64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_max_events")]
    pub max_events: Option<u64>,
    #[serde(default)]
    pub max_time: Option<f64>,
    #[serde(default)]
    pub snapshot_interval: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    #[serde(default = "default_spatial_bins")]
    pub spatial_bins: usize,
    #[serde(default = "default_velocity_bins")]
    pub velocity_bins: usize,
    /// Defaults to five thermal speeds of the sampler temperature.
    #[serde(default)]
    pub v_max: Option<f64>,
    #[serde(default = "default_radial_bins")]
    pub radial_bins: usize,
    #[serde(default)]
    pub r_max: Option<f64>,
    #[serde(default = "default_velocity_pair_bins")]
    pub velocity_pair_bins: usize,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        EstimatorSection {
            spatial_bins: default_spatial_bins(),
            velocity_bins: default_velocity_bins(),
            v_max: None,
            radial_bins: default_radial_bins(),
            r_max: None,
            velocity_pair_bins: default_velocity_pair_bins(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(default = "default_ensemble_size")]
    pub ensemble_size: u32,
    #[serde(default = "default_measure_after_mft")]
    pub measure_after_mft: f64,
    #[serde(default = "default_stencil_fraction")]
    pub stencil_fraction: f64,
    #[serde(default = "default_collision_samples")]
    pub collision_samples: u64,
    #[serde(default = "default_threshold")]
    pub well_sampled_threshold: f64,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            ensemble_size: default_ensemble_size(),
            measure_after_mft: default_measure_after_mft(),
            stencil_fraction: default_stencil_fraction(),
            collision_samples: default_collision_samples(),
            well_sampled_threshold: default_threshold(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_k")]
    pub k1: f64,
    #[serde(default = "default_k")]
    pub k2: f64,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<u64>,
    #[serde(default = "default_sweep_ensemble")]
    pub ensemble_size: u32,
    #[serde(default = "default_velocity_variance")]
    pub velocity_variance: f64,
    /// Internal population policy: fraction of N held internal...
    #[serde(default)]
    pub internal_fraction: Option<f64>,
    /// ... or an absolute dimer count. At most one of the two.
    #[serde(default)]
    pub internal_count: Option<u32>,
    #[serde(default)]
    pub measure_after_mft: f64,
    #[serde(default = "default_stencil_fraction")]
    pub stencil_fraction: f64,
    /// Zero disables the per-point balance diagnostics.
    #[serde(default)]
    pub collision_samples: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_out_dir(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default)]
    pub seed: u64,
    pub geometry: GeometrySection,
    pub sampler: SamplerSection,
    pub simulation: SimulationSection,
    #[serde(default)]
    pub estimators: EstimatorSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl ConfigDocument {
    pub fn geometry(&self) -> Result<DomainGeometry> {
        DomainGeometry::new(self.geometry.kind, self.geometry.lengths)
    }

    /// Resolved velocity-grid extent.
    pub fn v_max(&self) -> f64 {
        self.estimators
            .v_max
            .unwrap_or_else(|| 5.0 * (self.sampler.temperature / self.simulation.m).sqrt())
    }

    /// Constraint validation with field paths in the messages.
    pub fn validate(&self) -> Result<()> {
        let fail =
            |path: &str, msg: &str| -> Result<()> { Err(Error::Config(format!("{path}: {msg}"))) };
        if !(self.simulation.d > 0.0) || !self.simulation.d.is_finite() {
            return fail("simulation.d", "d must be > 0");
        }
        if !(self.simulation.m > 0.0) || !self.simulation.m.is_finite() {
            return fail("simulation.m", "m must be > 0");
        }
        if self
            .geometry
            .lengths
            .iter()
            .any(|l| !(l.is_finite() && *l > 0.0))
        {
            return fail("geometry.lengths", "edges must be finite and > 0");
        }
        if !(self.sampler.temperature >= 0.0) {
            return fail("sampler.temperature", "temperature must be >= 0");
        }
        if self.sampler.n_internal_pairs > 0
            && !(self.sampler.internal_separation > 0.0 && self.sampler.internal_separation < 1.0)
        {
            return fail(
                "sampler.internal_separation",
                "must lie strictly inside (0, 1)",
            );
        }
        if let Some(t) = self.simulation.max_time {
            if !(t >= 0.0) {
                return fail("simulation.max_time", "must be >= 0");
            }
        }
        if let Some(dt) = self.simulation.snapshot_interval {
            if !(dt > 0.0) {
                return fail("simulation.snapshot_interval", "must be > 0");
            }
        }
        if self.estimators.spatial_bins == 0 || self.estimators.velocity_bins == 0 {
            return fail("estimators", "bin counts must be >= 1");
        }
        if let Some(v) = self.estimators.v_max {
            if !(v > 0.0) {
                return fail("estimators.v_max", "must be > 0");
            }
        }
        if let Some(sweep) = &self.sweep {
            if !(sweep.k1 > 0.0 && sweep.k2 > 0.0) {
                return fail("sweep.k1/k2", "scaling constants must be > 0");
            }
            if sweep.n_list.len() < 3 {
                return fail("sweep.n_list", "needs at least 3 points");
            }
            if sweep.internal_fraction.is_some() && sweep.internal_count.is_some() {
                return fail(
                    "sweep.internal_fraction",
                    "set either internal_fraction or internal_count, not both",
                );
            }
            if let Some(f) = sweep.internal_fraction {
                if !(f > 0.0 && f < 1.0) {
                    return fail("sweep.internal_fraction", "must lie in (0, 1)");
                }
            }
        }
        Ok(())
    }
}

/// Dotted paths present in `resolved` but absent from `input`.
fn defaulted_paths(input: &Value, resolved: &Value, prefix: &str, out: &mut Vec<String>) {
    if let (Value::Object(inp), Value::Object(res)) = (input, resolved) {
        for (key, r_val) in res {
            let path = if prefix.is_empty() {
                key.clone()
            } else {
                format!("{prefix}.{key}")
            };
            match inp.get(key) {
                None => out.push(path),
                Some(i_val) => defaulted_paths(i_val, r_val, &path, out),
            }
        }
    }
}

/// Parsed, defaulted, validated configuration plus bookkeeping.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub doc: ConfigDocument,
    /// Fully resolved document as JSON (defaults applied).
    pub resolved: Value,
    /// Dotted paths of every defaulted value.
    pub defaulted: Vec<String>,
}

pub fn parse_config(text: &str, origin: &str) -> Result<LoadedConfig> {
    let raw: Value =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
    let doc: ConfigDocument =
        serde_json::from_value(raw.clone()).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
    doc.validate()?;
    let resolved = serde_json::to_value(&doc).expect("config serializes");
    let mut defaulted = Vec::new();
    defaulted_paths(&raw, &resolved, "", &mut defaulted);
    defaulted.sort();
    Ok(LoadedConfig {
        doc,
        resolved,
        defaulted,
    })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "geometry": {"lengths": [1.0, 1.0, 1.0]},
        "sampler": {"n_external": 100},
        "simulation": {"d": 0.05}
    }"#;

    #[test]
    fn minimal_config_defaults_and_round_trips() {
        let loaded = parse_config(MINIMAL, "test").unwrap();
        assert_eq!(loaded.doc.sampler.temperature, 1.0);
        assert_eq!(loaded.doc.estimators.spatial_bins, 8);
        assert!(loaded.defaulted.contains(&"seed".to_string()));
        assert!(loaded
            .defaulted
            .contains(&"sampler.temperature".to_string()));
        // resolved document re-parses to the identical resolved form
        let again = parse_config(&loaded.resolved.to_string(), "round-trip").unwrap();
        assert_eq!(again.resolved, loaded.resolved);
        assert!(again.defaulted.is_empty());
    }

    #[test]
    fn unknown_key_is_named() {
        let bad = r#"{
            "geometry": {"lengths": [1.0, 1.0, 1.0]},
            "sampler": {"n_external": 10},
            "simulation": {"diametre": 0.05}
        }"#;
        let err = parse_config(bad, "test").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("diametre"), "message: {msg}");
    }

    #[test]
    fn negative_diameter_names_the_field() {
        let bad = r#"{
            "geometry": {"lengths": [1.0, 1.0, 1.0]},
            "sampler": {"n_external": 10},
            "simulation": {"d": -0.1}
        }"#;
        let err = parse_config(bad, "test").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("simulation.d"), "message: {msg}");
        assert!(msg.contains("> 0"), "message: {msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn parse_error_carries_position() {
        let err = parse_config("{ not json", "test").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "message: {msg}");
    }
}
