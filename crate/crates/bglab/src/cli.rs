//! Subcommand driver behind the thin `bglab` binary.
//!
//! Exit codes: 0 success, 2 config error, 3 runtime invariant violation
//! (causality, penetration, replay mismatch), 4 I/O error.

use crate::dynamics::{conserved_quantities, Budget, Mode, Simulation, Sinks, SystemConfig};
use crate::error::{Error, Result};
use crate::estimators::{GridSpec, PhaseHistogram, RadialSpec, VelocityPairSpec};
use crate::hierarchy::{
    collision_integral_mc, hierarchy_balance_report, BalanceInputs, CollisionParams,
};
use crate::io::{
    emit_balance_report, emit_histogram, emit_pair_histogram, emit_sweep_report, load_config,
    load_manifest, write_atomic, write_snapshot, ConfigDocument, RunManifest,
};
use crate::rng::derive_seed;
use crate::sampling::{sample_configuration, validate_configuration, SamplerSpec};
use crate::scaling::bg_scaling_sequence;
use crate::sweep::{measure_ensemble, run_bg_sweep, InternalScaling, MeasureSpec, SweepSpec};
use clap::{Parser, Subcommand};
use std::io::Write as _;
use std::path::{Path, PathBuf};

const DEFAULT_MAX_EVENTS: u64 = 10_000;

#[derive(Parser)]
#[command(name = "bglab", version, about = "event-driven hard-sphere laboratory")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker thread count.
    #[arg(long, global = true, env = "BGLAB_THREADS")]
    threads: Option<usize>,
    /// Dynamics mode override: standard-gas, s_n-model or free-flow.
    #[arg(long, global = true)]
    mode: Option<String>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the configuration and a sampled initial state against the rules.
    Validate,
    /// Run one trajectory, streaming events and snapshots.
    Simulate,
    /// Run an ensemble and write the distribution estimates.
    Ensemble,
    /// Evaluate the transport/collision balance on an ensemble.
    Diagnose,
    /// Run a scaling sweep and write the trend report.
    BgSweep,
    /// Re-run a finished run from its manifest and verify bit-identical outputs.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    if let Some(k) = cli.threads {
        // later calls keep the first pool; that is fine for overrides
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global();
    }
    match &cli.command {
        Cmd::Replay { manifest } => {
            let manifest = manifest.clone();
            cmd_replay(&manifest, cli.out.as_deref())
        }
        _ => {
            let path = cli.config.as_ref().ok_or_else(|| {
                Error::Config("--config PATH is required for this subcommand".into())
            })?;
            let loaded = load_config(path)?;
            let mut doc = loaded.doc;
            let mut defaulted = loaded.defaulted;
            if let Some(seed) = cli.seed {
                doc.seed = seed;
                defaulted.retain(|p| p != "seed");
            }
            if let Some(mode) = &cli.mode {
                doc.simulation.mode = mode.parse()?;
                defaulted.retain(|p| p != "simulation.mode");
            }
            let out_dir = cli
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from(&doc.output.dir));
            match cli.command {
                Cmd::Validate => cmd_validate(&doc),
                Cmd::Simulate => cmd_simulate(&doc, &out_dir, defaulted),
                Cmd::Ensemble => cmd_ensemble(&doc, &out_dir, defaulted),
                Cmd::Diagnose => cmd_diagnose(&doc, &out_dir, defaulted),
                Cmd::BgSweep => cmd_bg_sweep(&doc, &out_dir, defaulted),
                Cmd::Replay { .. } => unreachable!(),
            }
        }
    }
}

fn sampler_spec(doc: &ConfigDocument) -> Result<SamplerSpec> {
    Ok(SamplerSpec {
        n_external: doc.sampler.n_external,
        n_internal_pairs: doc.sampler.n_internal_pairs,
        internal_separation: doc.sampler.internal_separation,
        temperature: doc.sampler.temperature,
        seed: doc.seed,
        geometry: doc.geometry()?,
        d: doc.simulation.d,
        m: doc.simulation.m,
        mode: doc.simulation.mode,
        position_law: doc.sampler.position_law,
        max_attempts: 1_000_000,
    })
}

fn grid_spec(doc: &ConfigDocument) -> Result<GridSpec> {
    GridSpec::new(
        &doc.geometry()?,
        [doc.estimators.spatial_bins; 3],
        [doc.estimators.velocity_bins; 3],
        doc.v_max(),
    )
}

/// Analytic Maxwellian mean free time for the configured gas.
fn mean_free_time_of(doc: &ConfigDocument) -> Result<f64> {
    let geometry = doc.geometry()?;
    let n = (doc.sampler.n_external + 2 * doc.sampler.n_internal_pairs) as f64;
    let density = n / geometry.volume();
    let vbar = (8.0 * doc.sampler.temperature / (std::f64::consts::PI * doc.simulation.m)).sqrt();
    let rate = std::f64::consts::SQRT_2
        * std::f64::consts::PI
        * density
        * doc.simulation.d
        * doc.simulation.d
        * vbar;
    Ok(if rate > 0.0 {
        1.0 / rate
    } else {
        f64::INFINITY
    })
}

fn manifest_for(doc: &ConfigDocument, command: &str, defaulted: Vec<String>) -> RunManifest {
    RunManifest::new(
        command,
        doc.seed,
        serde_json::to_value(doc).expect("config serializes"),
        defaulted,
    )
}

fn cmd_validate(doc: &ConfigDocument) -> Result<i32> {
    let sampler = sampler_spec(doc)?;
    let config = sample_configuration(&sampler)?;
    let violations = validate_configuration(&config, config.mode);
    if violations.is_empty() {
        println!(
            "configuration ok: N = {}, mode = {}, eta_conv = {:.4e}",
            config.n(),
            config.mode.as_str(),
            sampler.eta_conv()
        );
        Ok(0)
    } else {
        for v in &violations {
            println!("violation: {v}");
        }
        Ok(2)
    }
}

fn cmd_simulate(doc: &ConfigDocument, out_dir: &Path, defaulted: Vec<String>) -> Result<i32> {
    let sampler = sampler_spec(doc)?;
    let config = sample_configuration(&sampler)?;
    let budget = match (doc.simulation.max_events, doc.simulation.max_time) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "simulation.max_events and simulation.max_time are mutually exclusive".into(),
            ))
        }
        (Some(n), None) => Budget::MaxEvents(n),
        (None, Some(t)) => Budget::MaxTime(t),
        (None, None) => Budget::MaxEvents(DEFAULT_MAX_EVENTS),
    };

    std::fs::create_dir_all(out_dir)?;
    let (e0, p0) = conserved_quantities(&config);
    let mut events_buf: Vec<u8> = Vec::new();
    let mut snaps_buf: Vec<u8> = Vec::new();
    write_snapshot(&mut snaps_buf, &config)?;

    let mut sim = Simulation::new(config)?;
    let mut stats;
    {
        let mut on_event = |ev: &crate::dynamics::EventRecord| {
            serde_json::to_writer(&mut events_buf, ev).expect("event encode");
            events_buf.push(b'\n');
        };
        let mut on_snap = |snap: &SystemConfig| {
            write_snapshot(&mut snaps_buf, snap).expect("snapshot encode");
        };
        let mut sinks = Sinks {
            events: Some(&mut on_event),
            snapshot_interval: doc.simulation.snapshot_interval,
            snapshots: if doc.simulation.snapshot_interval.is_some() {
                Some(&mut on_snap)
            } else {
                None
            },
        };
        stats = sim.advance(budget, &mut sinks)?;
    }
    let end = sim.current_config();
    write_snapshot(&mut snaps_buf, &end)?;
    let (e1, p1) = conserved_quantities(&end);

    write_atomic(&out_dir.join("events.jsonl"), &events_buf)?;
    write_atomic(&out_dir.join("snapshots.jsonl"), &snaps_buf)?;
    let mut manifest = manifest_for(doc, "simulate", defaulted);
    manifest.record_file(out_dir, "events.jsonl")?;
    manifest.record_file(out_dir, "snapshots.jsonl")?;
    manifest.write(out_dir)?;

    stats.final_time = end.time;
    println!(
        "simulate: {} events to t = {:.6} ({} contacts, {} tether, {} wall)",
        stats.events,
        stats.final_time,
        stats.external_contacts,
        stats.tether_contacts,
        stats.wall_bounces
    );
    println!(
        "energy drift {:.3e}, momentum drift {:.3e}",
        if e0 > 0.0 {
            ((e1 - e0) / e0).abs()
        } else {
            0.0
        },
        (p1 - p0).norm()
    );
    println!("run {} written to {}", manifest.run_id, out_dir.display());
    Ok(0)
}

fn subtract(fhat: &PhaseHistogram, i2: &PhaseHistogram) -> PhaseHistogram {
    let mut f1 = fhat.clone();
    for (w, wi) in f1.weights.iter_mut().zip(&i2.weights) {
        *w -= wi;
    }
    f1
}

fn radial_spec(doc: &ConfigDocument) -> Result<RadialSpec> {
    let geometry = doc.geometry()?;
    let min_edge = geometry
        .lengths
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    Ok(RadialSpec {
        bins: doc.estimators.radial_bins,
        r_max: doc.estimators.r_max.unwrap_or(min_edge / 2.0),
    })
}

fn cmd_ensemble(doc: &ConfigDocument, out_dir: &Path, defaulted: Vec<String>) -> Result<i32> {
    let sampler = sampler_spec(doc)?;
    let tau = mean_free_time_of(doc)?;
    let t = doc.diagnostics.measure_after_mft * if tau.is_finite() { tau } else { 0.0 };
    let measurement = measure_ensemble(&MeasureSpec {
        sampler,
        grid: grid_spec(doc)?,
        times: vec![t],
        center_slot: 0,
        ensemble_size: doc.diagnostics.ensemble_size,
        master_seed: doc.seed,
        stream_index: 0,
    })?;
    let fhat = &measurement.fhat[0];
    let i2 = &measurement.i2[0];
    let f1 = subtract(fhat, i2);
    let pair = crate::estimators::estimate_pair_correlation(
        &measurement.centers,
        radial_spec(doc)?,
        VelocityPairSpec {
            bins: doc.estimators.velocity_pair_bins,
            v_max: doc.v_max(),
        },
    )?;

    std::fs::create_dir_all(out_dir)?;
    let mut manifest = manifest_for(doc, "ensemble", defaulted);
    emit_histogram(fhat, "fhat", out_dir, &mut manifest)?;
    emit_histogram(i2, "i2", out_dir, &mut manifest)?;
    emit_histogram(&f1, "f1", out_dir, &mut manifest)?;
    emit_pair_histogram(&pair.radial, "gr", out_dir, &mut manifest)?;
    let summary = serde_json::json!({
        "time": t,
        "members": measurement.members,
        "events_total": measurement.events_total,
        "i2_l1": i2.l1_mass(),
        "i2_mass_ratio": if fhat.total_mass() > 0.0 { i2.total_mass() / fhat.total_mass() } else { 0.0 },
        "fhat_overflow_fraction": fhat.overflow_fraction(),
        "f1_negative_cells": f1.weights.iter().filter(|w| **w < 0.0).count(),
        "afc": pair.afc,
    });
    let body = serde_json::to_vec_pretty(&summary)
        .map_err(|e| Error::Format(format!("summary encode: {e}")))?;
    write_atomic(&out_dir.join("ensemble_summary.json"), &body)?;
    manifest.record_file(out_dir, "ensemble_summary.json")?;
    manifest.write(out_dir)?;

    if fhat.overflow_fraction() > crate::estimators::OVERFLOW_WARN_FRACTION {
        eprintln!(
            "warning: {:.3}% of deposits overflowed the velocity grid",
            100.0 * fhat.overflow_fraction()
        );
    }
    println!(
        "ensemble: {} members at t = {:.6}, I2 mass ratio = {:.4e}, AFC = {:.4}",
        measurement.members,
        t,
        summary["i2_mass_ratio"].as_f64().unwrap_or(0.0),
        pair.afc.max_deviation
    );
    println!("run {} written to {}", manifest.run_id, out_dir.display());
    Ok(0)
}

fn cmd_diagnose(doc: &ConfigDocument, out_dir: &Path, defaulted: Vec<String>) -> Result<i32> {
    let tau = mean_free_time_of(doc)?;
    if !tau.is_finite() {
        return Err(Error::Config(
            "diagnose needs a finite mean free time (T > 0 and d > 0)".into(),
        ));
    }
    let delta = doc.diagnostics.stencil_fraction * tau;
    if !(delta > 0.0) {
        return Err(Error::Config(
            "diagnostics.stencil_fraction must be > 0 for diagnose".into(),
        ));
    }
    let t_center = (doc.diagnostics.measure_after_mft * tau).max(delta);
    let measurement = measure_ensemble(&MeasureSpec {
        sampler: sampler_spec(doc)?,
        grid: grid_spec(doc)?,
        times: vec![t_center - delta, t_center, t_center + delta],
        center_slot: 1,
        ensemble_size: doc.diagnostics.ensemble_size,
        master_seed: doc.seed,
        stream_index: 0,
    })?;
    let n_total = (doc.sampler.n_external + 2 * doc.sampler.n_internal_pairs) as f64;
    let collision = collision_integral_mc(
        &measurement.fhat[1],
        CollisionParams {
            d: doc.simulation.d,
            n_particles: n_total,
            volume: doc.geometry()?.volume(),
            samples: doc.diagnostics.collision_samples,
            seed: derive_seed(doc.seed, &[0x6d63]),
        },
    )?;
    let mut report = hierarchy_balance_report(&BalanceInputs {
        fhat_series: measurement.fhat.iter().collect(),
        i2_series: measurement.i2.iter().collect(),
        times: measurement.times.clone(),
        collision: &collision,
        well_sampled_threshold: doc.diagnostics.well_sampled_threshold,
    })?;

    std::fs::create_dir_all(out_dir)?;
    let mut manifest = manifest_for(doc, "diagnose", defaulted);
    report.provenance = vec![manifest.run_id.clone()];
    emit_balance_report(&report, out_dir, &mut manifest)?;
    manifest.write(out_dir)?;
    println!(
        "diagnose: sup discrepancy {:.4e} ({:.1}% of sup |collision|) over {} cells",
        report.discrepancy_sup,
        100.0 * report.discrepancy_ratio,
        report.evaluated_cells
    );
    println!("run {} written to {}", manifest.run_id, out_dir.display());
    Ok(0)
}

fn cmd_bg_sweep(doc: &ConfigDocument, out_dir: &Path, defaulted: Vec<String>) -> Result<i32> {
    let sweep = doc
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("bg-sweep requires a 'sweep' section".into()))?;
    let geometry = doc.geometry()?;
    let scaling = bg_scaling_sequence(sweep.k1, sweep.k2, geometry.volume(), &sweep.n_list)?;
    let internal_scaling = match (
        doc.simulation.mode,
        sweep.internal_fraction,
        sweep.internal_count,
    ) {
        (Mode::SnModel, Some(f), None) => InternalScaling::FixedFraction(f),
        (Mode::SnModel, None, Some(c)) => InternalScaling::FixedCount(c),
        (Mode::SnModel, None, None) => InternalScaling::FixedFraction(0.1),
        (Mode::SnModel, Some(_), Some(_)) => unreachable!("rejected at validation"),
        (_, None, None) => InternalScaling::None,
        _ => {
            return Err(Error::Config(
                "sweep.internal_fraction/internal_count need s_n-model mode".into(),
            ))
        }
    };
    let v_max = doc
        .estimators
        .v_max
        .unwrap_or_else(|| 5.0 * sweep.velocity_variance.sqrt());
    let spec = SweepSpec {
        scaling,
        geometry,
        mode: doc.simulation.mode,
        position_law: doc.sampler.position_law,
        internal_scaling,
        internal_separation: doc.sampler.internal_separation,
        velocity_variance: sweep.velocity_variance,
        ensemble_size: sweep.ensemble_size,
        measure_after_mft: sweep.measure_after_mft,
        stencil_fraction: sweep.stencil_fraction,
        spatial_bins: doc.estimators.spatial_bins,
        velocity_bins: doc.estimators.velocity_bins,
        v_max,
        radial_bins: doc.estimators.radial_bins,
        velocity_pair_bins: doc.estimators.velocity_pair_bins,
        collision_samples: sweep.collision_samples,
        well_sampled_threshold: doc.diagnostics.well_sampled_threshold,
        master_seed: doc.seed,
    };
    let report = run_bg_sweep(&spec)?;

    std::fs::create_dir_all(out_dir)?;
    let mut manifest = manifest_for(doc, "bg-sweep", defaulted);
    emit_sweep_report(&report, out_dir, &mut manifest)?;
    manifest.write(out_dir)?;
    if let Some(fit) = &report.exponent_fits.i2_l1 {
        println!(
            "bg-sweep: fitted I2 L1 exponent {:.4} +- {:.4} over {} points",
            fit.slope, fit.half_width, fit.points_used
        );
    } else {
        println!("bg-sweep: no I2 decay fit (norms not positive)");
    }
    println!("run {} written to {}", manifest.run_id, out_dir.display());
    Ok(0)
}

fn cmd_replay(manifest_path: &Path, out_override: Option<&Path>) -> Result<i32> {
    let original = load_manifest(manifest_path)?;
    let doc: ConfigDocument = serde_json::from_value(original.config.clone())
        .map_err(|e| Error::Format(format!("manifest config decode: {e}")))?;
    doc.validate()?;
    let base = manifest_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();
    let replay_dir = out_override
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| base.join(format!("replay-{}", original.run_id)));

    let code = match original.command.as_str() {
        "simulate" => cmd_simulate(&doc, &replay_dir, original.defaulted_fields.clone())?,
        "ensemble" => cmd_ensemble(&doc, &replay_dir, original.defaulted_fields.clone())?,
        "diagnose" => cmd_diagnose(&doc, &replay_dir, original.defaulted_fields.clone())?,
        "bg-sweep" => cmd_bg_sweep(&doc, &replay_dir, original.defaulted_fields.clone())?,
        other => {
            return Err(Error::Config(format!(
                "manifest command '{other}' is not replayable"
            )))
        }
    };
    if code != 0 {
        return Ok(code);
    }
    let fresh = load_manifest(&replay_dir.join(crate::io::MANIFEST_NAME))?;
    let mut mismatches = Vec::new();
    let mut matched = 0usize;
    for file in &original.files {
        match fresh.files.iter().find(|f| f.path == file.path) {
            Some(now) if now.sha256 == file.sha256 => {
                matched += 1;
                println!("replay {}: match ({})", file.path, &file.sha256[..12]);
            }
            Some(now) => mismatches.push(format!(
                "{}: digest {} != {}",
                file.path, now.sha256, file.sha256
            )),
            None => mismatches.push(format!("{}: missing from replay", file.path)),
        }
    }
    if fresh.run_id != original.run_id {
        mismatches.push(format!("run id {} != {}", fresh.run_id, original.run_id));
    }
    if mismatches.is_empty() {
        println!("replay: PASS ({matched} files bit-identical)");
        let _ = std::io::stdout().flush();
        Ok(0)
    } else {
        for m in &mismatches {
            eprintln!("replay mismatch: {m}");
        }
        Err(Error::ReplayMismatch(format!(
            "{} of {} files differ",
            mismatches.len(),
            original.files.len()
        )))
    }
}
