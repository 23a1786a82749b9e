//! Report emission: JSON for machines, plain text for humans, CSV tables
//! for plotting. CSV uses comma separators, `.` decimals, a header row and
//! LF line endings throughout.

use crate::error::{Error, Result};
use crate::estimators::{PairHistogram, PhaseHistogram};
use crate::hierarchy::BalanceReport;
use crate::io::manifest::{write_atomic, RunManifest};
use crate::sweep::{PointStatus, SweepReport};
use std::fmt::Write as _;
use std::path::Path;

fn emit(dir: &Path, name: &str, body: &[u8], manifest: &mut RunManifest) -> Result<()> {
    write_atomic(&dir.join(name), body)?;
    manifest.record_file(dir, name)
}

fn json_body<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut body = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::Format(format!("report encode: {e}")))?;
    body.push(b'\n');
    Ok(body)
}

/// Sweep report: JSON + text summary + one CSV row per scaling point.
pub fn emit_sweep_report(
    report: &SweepReport,
    dir: &Path,
    manifest: &mut RunManifest,
) -> Result<()> {
    emit(dir, "sweep_report.json", &json_body(report)?, manifest)?;

    let mut csv = String::new();
    csv.push_str(
        "index,n,epsilon,d,m,eta_conv,eta_paper,status,n_internal_pairs,i2_l1,i2_sup,\
         i2_mass_ratio,afc_max_deviation,balance_discrepancy_ratio,events_mean\n",
    );
    for p in &report.points {
        let status = match &p.status {
            PointStatus::Completed => "completed",
            PointStatus::Failed(_) => "failed",
        };
        let afc = p
            .afc
            .map(|a| a.max_deviation.to_string())
            .unwrap_or_default();
        let ratio = p
            .balance
            .map(|b| b.discrepancy_ratio.to_string())
            .unwrap_or_default();
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.point.index,
            p.point.n,
            p.point.epsilon,
            p.point.d,
            p.point.m,
            p.point.eta_conv,
            p.point.eta_paper,
            status,
            p.n_internal_pairs,
            p.i2_l1,
            p.i2_sup,
            p.i2_mass_ratio,
            afc,
            ratio,
            p.events_mean,
        )
        .expect("string write");
    }
    emit(dir, "sweep_points.csv", csv.as_bytes(), manifest)?;

    let mut txt = String::new();
    writeln!(txt, "bg sweep report (code {})", report.code_version).unwrap();
    writeln!(
        txt,
        "mode {} | {} points | ensemble {} per point | master seed {}",
        report.spec.mode.as_str(),
        report.points.len(),
        report.spec.ensemble_size,
        report.spec.master_seed
    )
    .unwrap();
    writeln!(txt).unwrap();
    for p in &report.points {
        match &p.status {
            PointStatus::Completed => {
                writeln!(
                    txt,
                    "N = {:>6}: d = {:.6}, eta_conv = {:.3e}, I2 L1 = {:.4e}, I2 sup = {:.4e}, \
                     mass ratio = {:.4e}{}",
                    p.point.n,
                    p.point.d,
                    p.point.eta_conv,
                    p.i2_l1,
                    p.i2_sup,
                    p.i2_mass_ratio,
                    p.afc
                        .map(|a| format!(", AFC = {:.3}", a.max_deviation))
                        .unwrap_or_default()
                )
                .unwrap();
            }
            PointStatus::Failed(why) => {
                writeln!(txt, "N = {:>6}: FAILED ({why})", p.point.n).unwrap();
            }
        }
    }
    writeln!(txt).unwrap();
    match &report.exponent_fits.i2_l1 {
        Some(fit) => writeln!(
            txt,
            "fitted I2 L1 decay exponent: {:.4} +- {:.4} ({} points)",
            fit.slope, fit.half_width, fit.points_used
        )
        .unwrap(),
        None => writeln!(txt, "fitted I2 L1 decay exponent: not available").unwrap(),
    }
    if let Some(fit) = &report.exponent_fits.i2_sup {
        writeln!(
            txt,
            "fitted I2 sup decay exponent: {:.4} +- {:.4}",
            fit.slope, fit.half_width
        )
        .unwrap();
    }
    for diff in &report.successive_diffs {
        writeln!(
            txt,
            "|f1(N={}) - f1(N={})|: sup = {:.4e}, L1 = {:.4e} ({} cells)",
            diff.n_to, diff.n_from, diff.norms.sup, diff.norms.l1, diff.norms.evaluated
        )
        .unwrap();
    }
    if let Some(flag) = report.successive_l1_nonincreasing {
        writeln!(
            txt,
            "successive-difference L1 trend non-increasing: {flag} (trend flag)"
        )
        .unwrap();
    }
    for note in &report.notes {
        writeln!(txt, "note: {note}").unwrap();
    }
    emit(dir, "sweep_report.txt", txt.as_bytes(), manifest)
}

/// Balance report: JSON + text + per-cell CSV.
pub fn emit_balance_report(
    report: &BalanceReport,
    dir: &Path,
    manifest: &mut RunManifest,
) -> Result<()> {
    emit(dir, "balance_report.json", &json_body(report)?, manifest)?;

    let mut csv = String::new();
    csv.push_str("cell,lhs,lhs_std_err,rhs,rhs_std_err,well_sampled\n");
    for c in &report.cells {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            c.cell, c.lhs, c.lhs_std_err, c.rhs, c.rhs_std_err, c.well_sampled
        )
        .expect("string write");
    }
    emit(dir, "balance_cells.csv", csv.as_bytes(), manifest)?;

    let mut txt = String::new();
    writeln!(
        txt,
        "hierarchy balance at t = {:.6} (dt = {:.6})",
        report.time, report.dt
    )
    .unwrap();
    writeln!(
        txt,
        "evaluated {} velocity cells ({} excluded below {} deposits)",
        report.evaluated_cells, report.excluded_cells, report.threshold
    )
    .unwrap();
    writeln!(
        txt,
        "sup |transport| = {:.4e}, sup |collision| = {:.4e}",
        report.lhs_sup, report.rhs_sup
    )
    .unwrap();
    writeln!(
        txt,
        "sup discrepancy = {:.4e} ({:.1}% of sup |collision|), L1 = {:.4e}",
        report.discrepancy_sup,
        100.0 * report.discrepancy_ratio,
        report.discrepancy_l1
    )
    .unwrap();
    writeln!(
        txt,
        "I2: L1 = {:.4e}, sup = {:.4e}; masked residual: sup = {:.4e}, L1 = {:.4e}",
        report.i2_l1, report.i2_sup, report.masked_residual_sup, report.masked_residual_l1
    )
    .unwrap();
    emit(dir, "balance_report.txt", txt.as_bytes(), manifest)
}

/// Histogram table: one row per cell (bin indices, centres, raw weight,
/// density) plus a JSON sidecar with the grid spec and counts.
pub fn emit_histogram(
    h: &PhaseHistogram,
    name: &str,
    dir: &Path,
    manifest: &mut RunManifest,
) -> Result<()> {
    let meta = serde_json::json!({
        "grid": h.grid,
        "deposits": h.deposits,
        "ensemble_count": h.ensemble_count,
        "overflow": h.overflow,
        "normalization": h.normalization,
        "estimator_reading": "ensemble empirical measure; every particle of every member deposits",
    });
    emit(
        dir,
        &format!("{name}.meta.json"),
        &json_body(&meta)?,
        manifest,
    )?;

    let mut csv = String::new();
    csv.push_str("sx,sy,sz,vx,vy,vz,rx,ry,rz,cvx,cvy,cvz,raw_weight,density\n");
    let norm = if h.deposits == 0 {
        0.0
    } else {
        1.0 / (h.deposits as f64 * h.grid.cell_volume())
    };
    for cell in 0..h.grid.cell_count() {
        let (s, w) = h.grid.split_index(cell);
        let sc = h.grid.spatial_coords(s);
        let vc = h.grid.velocity_coords(w);
        let rc = h.grid.spatial_cell_center(s);
        let vv = h.grid.velocity_cell_center(w);
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            sc[0],
            sc[1],
            sc[2],
            vc[0],
            vc[1],
            vc[2],
            rc[0],
            rc[1],
            rc[2],
            vv[0],
            vv[1],
            vv[2],
            h.weights[cell],
            h.weights[cell] * norm,
        )
        .expect("string write");
    }
    emit(dir, &format!("{name}.csv"), csv.as_bytes(), manifest)
}

/// Radial distribution table.
pub fn emit_pair_histogram(
    h: &PairHistogram,
    name: &str,
    dir: &Path,
    manifest: &mut RunManifest,
) -> Result<()> {
    let mut csv = String::new();
    csv.push_str("bin,r_center,count,g,g_std_err\n");
    for (bin, center) in h.bin_centers().iter().enumerate() {
        writeln!(
            csv,
            "{},{},{},{},{}",
            bin,
            center,
            h.counts[bin],
            h.g(bin),
            h.g_std_err(bin)
        )
        .expect("string write");
    }
    emit(dir, &format!("{name}.csv"), csv.as_bytes(), manifest)
}
