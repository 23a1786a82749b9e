//! Difference norms between histograms over well-sampled cells.

use crate::error::{Error, Result};
use crate::estimators::PhaseHistogram;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormPair {
    pub sup: f64,
    pub l1: f64,
    pub evaluated: u64,
    pub excluded: u64,
}

/// Sup and L1 distance between the density views of two histograms.
///
/// A cell enters the norms when either histogram carries at least
/// `threshold` raw weight there; the rest are excluded and counted.
pub fn convergence_norms(
    a: &PhaseHistogram,
    b: &PhaseHistogram,
    threshold: f64,
) -> Result<NormPair> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(
            "convergence norms need identical grids".into(),
        ));
    }
    let vol = a.grid.cell_volume();
    let na = if a.deposits == 0 {
        0.0
    } else {
        1.0 / (a.deposits as f64 * vol)
    };
    let nb = if b.deposits == 0 {
        0.0
    } else {
        1.0 / (b.deposits as f64 * vol)
    };
    let mut out = NormPair::default();
    for (wa, wb) in a.weights.iter().zip(&b.weights) {
        if wa.abs().max(wb.abs()) < threshold {
            out.excluded += 1;
            continue;
        }
        out.evaluated += 1;
        let diff = (wa * na - wb * nb).abs();
        out.sup = out.sup.max(diff);
        out.l1 += diff * vol;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{BoundaryKind, DomainGeometry};
    use crate::estimators::GridSpec;

    fn grid() -> GridSpec {
        let g = DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0).unwrap();
        GridSpec::new(&g, [2, 2, 2], [2, 2, 2], 1.0).unwrap()
    }

    #[test]
    fn identical_histograms_have_zero_norms() {
        let mut a = PhaseHistogram::new(grid());
        a.weights[3] = 100.0;
        a.deposits = 100;
        let n = convergence_norms(&a, &a, 25.0).unwrap();
        assert_eq!((n.sup, n.l1), (0.0, 0.0));
        assert_eq!(n.evaluated, 1);
    }

    #[test]
    fn disjoint_unit_masses_give_l1_of_two() {
        let g = grid();
        let w = g.cell_volume();
        let mut a = PhaseHistogram::new(g.clone());
        a.weights[0] = 64.0;
        a.deposits = 64;
        let mut b = PhaseHistogram::new(g);
        b.weights[7] = 64.0;
        b.deposits = 64;
        let n = convergence_norms(&a, &b, 25.0).unwrap();
        assert!((n.l1 - 2.0).abs() < 1e-12, "l1 = {}", n.l1);
        assert!((n.sup - 1.0 / w).abs() < 1e-9);
        assert_eq!(n.evaluated, 2);
    }

    #[test]
    fn norms_are_symmetric() {
        let g = grid();
        let mut a = PhaseHistogram::new(g.clone());
        a.weights[0] = 40.0;
        a.weights[1] = 30.0;
        a.deposits = 70;
        let mut b = PhaseHistogram::new(g);
        b.weights[0] = 25.0;
        b.weights[2] = 45.0;
        b.deposits = 70;
        let ab = convergence_norms(&a, &b, 25.0).unwrap();
        let ba = convergence_norms(&b, &a, 25.0).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn sparse_cells_are_excluded() {
        let g = grid();
        let mut a = PhaseHistogram::new(g.clone());
        a.weights[0] = 10.0;
        a.deposits = 10;
        let b = PhaseHistogram::new(g);
        let n = convergence_norms(&a, &b, 25.0).unwrap();
        assert_eq!(n.evaluated, 0);
        assert_eq!(n.excluded, a.grid.cell_count() as u64);
        assert_eq!((n.sup, n.l1), (0.0, 0.0));
    }
}
