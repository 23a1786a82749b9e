//! End-to-end checks of the command-line surface and the emitted files.

use bglab::dynamics::{
    advance_system, conserved_quantities, BoundaryKind, Budget, DomainGeometry, EventKind, Mode,
    Sinks,
};
use bglab::estimators::{estimate_fhat, GridSpec};
use bglab::io::{
    check_schema, load_manifest, BALANCE_REPORT_SCHEMA, MANIFEST_SCHEMA, SWEEP_REPORT_SCHEMA,
};
use bglab::sampling::{sample_configuration, PositionLaw, SamplerSpec};
use bglab::vec3::Vec3;
use std::path::Path;
use std::process::Output;

fn run_cli(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_bglab"))
        .args(args)
        .output()
        .expect("spawn bglab")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const SMALL_CONFIG: &str = r#"{
    "seed": 3,
    "geometry": {"kind": "periodic-box", "lengths": [1.0, 1.0, 1.0]},
    "sampler": {"n_external": 30},
    "simulation": {"d": 0.05, "max_events": 200}
}"#;

#[test]
fn validate_accepts_good_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    write(&cfg, SMALL_CONFIG);
    let out = run_cli(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("configuration ok"), "{text}");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_value = dir.path().join("bad.json");
    write(
        &bad_value,
        r#"{
            "geometry": {"lengths": [1.0, 1.0, 1.0]},
            "sampler": {"n_external": 10},
            "simulation": {"d": -0.1}
        }"#,
    );
    let out = run_cli(&["validate", "--config", bad_value.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("simulation.d"));

    let unknown_key = dir.path().join("unknown.json");
    write(
        &unknown_key,
        r#"{
            "geometry": {"lengths": [1.0, 1.0, 1.0]},
            "sampler": {"n_external": 10},
            "simulation": {"diametre": 0.05}
        }"#,
    );
    let out = run_cli(&["validate", "--config", unknown_key.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("diametre"));

    let missing = dir.path().join("nope.json");
    let out = run_cli(&["simulate", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    write(&cfg, SMALL_CONFIG);
    let blocker = dir.path().join("blocker");
    write(&blocker, "a file, not a directory");
    let out_dir = blocker.join("sub");
    let out = run_cli(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn seed_override_changes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    write(&cfg, SMALL_CONFIG);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for (out, seed) in [(&out_a, "3"), (&out_b, "4")] {
        let res = run_cli(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success());
    }
    let a = std::fs::read(out_a.join("events.jsonl")).unwrap();
    let b = std::fs::read(out_b.join("events.jsonl")).unwrap();
    assert_ne!(a, b);
    // manifest carries the effective seed
    let manifest = load_manifest(&out_b.join("manifest.json")).unwrap();
    assert_eq!(manifest.master_seed, 4);
}

#[test]
fn replay_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    write(&cfg, SMALL_CONFIG);
    let out_dir = dir.path().join("run");
    let res = run_cli(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    // corrupt the recorded digest
    let manifest_path = out_dir.join("manifest.json");
    let mut manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    manifest["files"][0]["sha256"] = serde_json::Value::String("0".repeat(64));
    std::fs::write(&manifest_path, manifest.to_string()).unwrap();
    let replay = run_cli(&[
        "replay",
        "--manifest",
        manifest_path.to_str().unwrap(),
        "--out",
        dir.path().join("replayed").to_str().unwrap(),
    ]);
    assert_eq!(replay.status.code(), Some(3));
}

#[test]
fn emitted_files_validate_and_tabulate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    write(
        &cfg,
        r#"{
            "seed": 9,
            "geometry": {"kind": "periodic-box", "lengths": [1.0, 1.0, 1.0]},
            "sampler": {"n_external": 1, "position_law": "ideal-gas"},
            "simulation": {"d": 0.05, "mode": "free-flow"},
            "estimators": {"spatial_bins": 2, "velocity_bins": 4, "radial_bins": 8, "velocity_pair_bins": 2},
            "sweep": {"n_list": [64, 128, 256, 512], "ensemble_size": 4}
        }"#,
    );
    let out_dir = dir.path().join("sweep");
    let res = run_cli(&[
        "bg-sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    // JSON report validates against the shipped schema
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("sweep_report.json")).unwrap())
            .unwrap();
    check_schema(&report, SWEEP_REPORT_SCHEMA).unwrap();

    // manifest validates and covers every emitted file
    let manifest_value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    check_schema(&manifest_value, MANIFEST_SCHEMA).unwrap();

    // CSV data rows equal the scaling-point count
    let csv = std::fs::read_to_string(out_dir.join("sweep_points.csv")).unwrap();
    let rows = csv.lines().count();
    assert_eq!(rows, 1 + 4, "header plus one row per point: {csv}");
    assert!(csv.ends_with('\n'));
    assert!(!csv.contains('\r'), "LF line endings required");

    // human summary names the fitted exponent with its half-width
    let txt = std::fs::read_to_string(out_dir.join("sweep_report.txt")).unwrap();
    assert!(txt.contains("decay exponent"), "{txt}");
    assert!(txt.contains("+-"), "{txt}");
}

#[test]
fn diagnose_emits_schema_valid_balance_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    write(
        &cfg,
        r#"{
            "seed": 5,
            "geometry": {"kind": "periodic-box", "lengths": [1.0, 1.0, 1.0]},
            "sampler": {"n_external": 120},
            "simulation": {"d": 0.05},
            "estimators": {"spatial_bins": 2, "velocity_bins": 6},
            "diagnostics": {"ensemble_size": 12, "collision_samples": 50000}
        }"#,
    );
    let out_dir = dir.path().join("diag");
    let res = run_cli(&[
        "diagnose",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("balance_report.json")).unwrap(),
    )
    .unwrap();
    check_schema(&report, BALANCE_REPORT_SCHEMA).unwrap();
    // provenance carries the run id from the manifest
    let manifest = load_manifest(&out_dir.join("manifest.json")).unwrap();
    assert_eq!(
        report["provenance"][0].as_str().unwrap(),
        manifest.run_id.as_str()
    );
    // per-cell table: header plus one row per velocity cell
    let csv = std::fs::read_to_string(out_dir.join("balance_cells.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6 * 6 * 6);
}

#[test]
fn specular_momentum_changes_only_at_walls() {
    // every wall event changes momentum by exactly -2 m (v.n) n; pair events
    // leave it untouched, so the final drift equals the wall impulse sum
    let spec = SamplerSpec {
        n_external: 40,
        n_internal_pairs: 0,
        internal_separation: 0.5,
        temperature: 1.0,
        seed: 31,
        geometry: DomainGeometry::cube(BoundaryKind::SpecularBox, 1.0).unwrap(),
        d: 0.05,
        m: 1.5,
        mode: Mode::StandardGas,
        position_law: PositionLaw::HardSphere,
        max_attempts: 1_000_000,
    };
    let config = sample_configuration(&spec).unwrap();
    let m = config.m;
    let (_, p0) = conserved_quantities(&config);
    let mut wall_impulse = Vec3::ZERO;
    let mut wall_events = 0u32;
    let mut sink = |ev: &bglab::dynamics::EventRecord| {
        if ev.kind == EventKind::Wall {
            wall_events += 1;
            let dv = ev.post_velocities[0] - ev.pre_velocities[0];
            wall_impulse += dv * m;
            // reflection law: dv = -2 (v.n) n for the outward wall normal
            let n = DomainGeometry::wall_normal(ev.wall_id.unwrap());
            let expected = n * (-2.0 * ev.pre_velocities[0].dot(n));
            assert!((dv - expected).norm() <= 1e-12);
        }
    };
    let mut sinks = Sinks {
        events: Some(&mut sink),
        ..Sinks::default()
    };
    let (end, stats) = advance_system(config, Budget::MaxEvents(3000), &mut sinks).unwrap();
    assert!(wall_events > 0);
    assert!(stats.external_contacts > 0);
    let (_, p1) = conserved_quantities(&end);
    let drift = ((p1 - p0) - wall_impulse).norm();
    assert!(drift <= 1e-9, "unexplained momentum drift {drift}");
}

#[test]
fn uniform_gas_spatial_marginal_is_flat() {
    // Monte Carlo uniformity oracle for the plain density estimator
    let geometry = DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0).unwrap();
    let grid = GridSpec::new(&geometry, [2, 2, 2], [4, 4, 4], 5.0).unwrap();
    let snapshots: Vec<_> = (0..50)
        .map(|k| {
            sample_configuration(&SamplerSpec {
                n_external: 200,
                n_internal_pairs: 0,
                internal_separation: 0.5,
                temperature: 1.0,
                seed: 700 + k,
                geometry,
                d: 0.02,
                m: 1.0,
                mode: Mode::StandardGas,
                position_law: PositionLaw::HardSphere,
                max_attempts: 1_000_000,
            })
            .unwrap()
        })
        .collect();
    let fhat = estimate_fhat(&snapshots, &grid).unwrap();
    let nv = grid.velocity_count();
    let mut spatial_counts = vec![0.0f64; grid.spatial_count()];
    for (cell, w) in fhat.weights.iter().enumerate() {
        spatial_counts[cell / nv] += w;
    }
    let total: f64 = spatial_counts.iter().sum();
    let expect = total / spatial_counts.len() as f64;
    for (bin, count) in spatial_counts.iter().enumerate() {
        let se = expect.sqrt();
        assert!(
            (count - expect).abs() <= 3.0 * se,
            "spatial bin {bin}: {count} vs {expect} +- {se}"
        );
    }
}

#[test]
fn afc_shrinks_with_ensemble_size() {
    // the factorization metric of an independent ensemble is sampling noise
    // and falls as members grow
    use bglab::estimators::{estimate_pair_correlation, RadialSpec, VelocityPairSpec};
    let geometry = DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0).unwrap();
    let member = |k: u64| {
        sample_configuration(&SamplerSpec {
            n_external: 120,
            n_internal_pairs: 0,
            internal_separation: 0.5,
            temperature: 1.0,
            seed: 900 + k,
            geometry,
            d: 0.01,
            m: 1.0,
            mode: Mode::FreeFlow,
            position_law: PositionLaw::IdealGas,
            max_attempts: 1_000_000,
        })
        .unwrap()
    };
    let few: Vec<_> = (0..6).map(member).collect();
    let many: Vec<_> = (0..96).map(member).collect();
    let radial = RadialSpec {
        bins: 8,
        r_max: 0.5,
    };
    let vp = VelocityPairSpec {
        bins: 2,
        v_max: 5.0,
    };
    let afc_few = estimate_pair_correlation(&few, radial, vp).unwrap().afc;
    let afc_many = estimate_pair_correlation(&many, radial, vp).unwrap().afc;
    assert!(
        afc_many.max_deviation < afc_few.max_deviation,
        "AFC did not shrink: {} -> {}",
        afc_few.max_deviation,
        afc_many.max_deviation
    );
}
