//! Partition of particle pairs into external and mutually-internal sets.

use crate::dynamics::particle::SystemConfig;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Occupation bookkeeping for a configuration.
///
/// A pair is mutually internal iff its centre distance is strictly below d;
/// distance exactly d classifies as external, which makes the two classes a
/// partition and keeps contact events well-defined.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairClassification {
    pub mutually_internal: BTreeSet<(u32, u32)>,
    pub n_int: usize,
    pub n_ext: usize,
}

impl PairClassification {
    pub fn is_internal_pair(&self, a: u32, b: u32) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.mutually_internal.contains(&key)
    }
}

/// Classify all pairs of `config` from the stored positions.
pub fn classify_pairs(config: &SystemConfig) -> PairClassification {
    let n = config.n();
    let d2 = config.d * config.d;
    let mut mutually_internal = BTreeSet::new();
    let mut internal_flag = vec![false; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let w = config
                .geometry
                .displacement(config.particles[i].r, config.particles[j].r);
            if w.norm_sq() < d2 {
                let (a, b) = (config.particles[i].id, config.particles[j].id);
                mutually_internal.insert(if a < b { (a, b) } else { (b, a) });
                internal_flag[i] = true;
                internal_flag[j] = true;
            }
        }
    }
    let n_int = internal_flag.iter().filter(|f| **f).count();
    PairClassification {
        mutually_internal,
        n_int,
        n_ext: n - n_int,
    }
}
