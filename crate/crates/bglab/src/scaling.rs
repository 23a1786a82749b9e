//! Boltzmann-Grad scaling sequences: N grows while d = sqrt(k1 V / N) and
//! m = k2 V / N shrink, so N d^2 / V and m N / V stay pinned at k1 and k2.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One member of a scaling sequence with its derived parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub index: usize,
    pub n: u64,
    pub epsilon: f64,
    pub d: f64,
    pub m: f64,
    pub k1: f64,
    pub k2: f64,
    pub volume: f64,
    /// Conventional volume fraction N (pi/6) d^3 / V.
    pub eta_conv: f64,
    /// Literal reading of the 4 pi n d^3 / (3 V) convention, which divides
    /// by V although n is already a density. Reported alongside eta_conv.
    pub eta_paper: f64,
}

impl ScalingPoint {
    /// Residuals of the sequence algebra, for report embedding.
    pub fn algebra_residuals(&self) -> (f64, f64) {
        let r1 = self.n as f64 * self.d * self.d / self.volume - self.k1;
        let r2 = self.m * self.n as f64 / self.volume - self.k2;
        (r1, r2)
    }
}

/// Build the scaling sequence for strictly increasing particle counts.
pub fn bg_scaling_sequence(
    k1: f64,
    k2: f64,
    volume: f64,
    n_list: &[u64],
) -> Result<Vec<ScalingPoint>> {
    if !(k1.is_finite() && k1 > 0.0 && k2.is_finite() && k2 > 0.0) {
        return Err(Error::InvalidParam("k1 and k2 must be > 0".into()));
    }
    if !(volume.is_finite() && volume > 0.0) {
        return Err(Error::InvalidParam("volume must be > 0".into()));
    }
    if n_list.is_empty() {
        return Err(Error::InvalidParam("empty N list".into()));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParam(
            "N list must be strictly increasing".into(),
        ));
    }
    if n_list[0] < 2 {
        return Err(Error::InvalidParam("N must be at least 2".into()));
    }
    Ok(n_list
        .iter()
        .enumerate()
        .map(|(index, &n)| {
            let nf = n as f64;
            let d = (k1 * volume / nf).sqrt();
            let m = k2 * volume / nf;
            let density = nf / volume;
            ScalingPoint {
                index,
                n,
                epsilon: 1.0 / nf,
                d,
                m,
                k1,
                k2,
                volume,
                eta_conv: nf * (std::f64::consts::PI / 6.0) * d.powi(3) / volume,
                eta_paper: 4.0 * std::f64::consts::PI * density * d.powi(3) / (3.0 * volume),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_diameter_and_mass() {
        let seq = bg_scaling_sequence(1.0, 1.0, 1.0, &[100]).unwrap();
        assert!((seq[0].d - 0.1).abs() < 1e-15);
        assert!((seq[0].m - 0.01).abs() < 1e-15);
        assert_eq!(seq[0].epsilon, 0.01);
    }

    #[test]
    fn algebra_holds_to_machine_precision() {
        let seq = bg_scaling_sequence(0.7, 2.3, 1.9, &[125, 250, 500, 1000, 2000]).unwrap();
        for p in &seq {
            let (r1, r2) = p.algebra_residuals();
            assert!(r1.abs() <= 1e-12 * p.k1, "r1 = {r1}");
            assert!(r2.abs() <= 1e-12 * p.k2, "r2 = {r2}");
        }
    }

    #[test]
    fn quadrupling_n_halves_eta() {
        let seq = bg_scaling_sequence(1.0, 1.0, 1.0, &[100, 400]).unwrap();
        let ratio = seq[1].eta_conv / seq[0].eta_conv;
        assert!((ratio - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sequence_is_monotone() {
        let seq = bg_scaling_sequence(1.0, 1.0, 1.0, &[125, 250, 500, 1000]).unwrap();
        for w in seq.windows(2) {
            assert!(w[1].d < w[0].d);
            assert!(w[1].m < w[0].m);
            assert!(w[1].epsilon < w[0].epsilon);
            assert!(w[1].eta_conv < w[0].eta_conv);
        }
    }

    #[test]
    fn rejects_bad_lists() {
        assert!(bg_scaling_sequence(1.0, 1.0, 1.0, &[]).is_err());
        assert!(bg_scaling_sequence(1.0, 1.0, 1.0, &[100, 100]).is_err());
        assert!(bg_scaling_sequence(1.0, 1.0, 1.0, &[200, 100]).is_err());
        assert!(bg_scaling_sequence(-1.0, 1.0, 1.0, &[100, 200]).is_err());
    }
}
