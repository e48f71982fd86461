//! Per-class labeled/unlabeled/test split protocol.
//!
//! Per class, a quota of labeled patches goes to the labeled training pool
//! and the remaining labeled patches become the test set. The unlabeled
//! pool is a configurable fraction of all patches drawn irrespective of
//! label, with labels stripped.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::Patch;

/// Per-class labeled quota.
#[derive(Clone, Copy, Debug)]
pub enum Quota {
    /// Absolute patch count per class.
    Count(usize),
    /// Fraction of each class population; floor, minimum 1.
    Ratio(f64),
}

#[derive(Clone, Copy, Debug)]
pub struct SplitSpec {
    pub quota: Quota,
    pub unlabeled_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    fn validate(&self) -> Result<()> {
        match self.quota {
            Quota::Count(n) if n == 0 => Err(Error::InvalidConfig {
                reason: "labeled quota count must be at least 1".into(),
            }),
            Quota::Ratio(r) if !(r > 0.0 && r <= 1.0) => Err(Error::InvalidConfig {
                reason: format!("labeled quota ratio {r} outside (0, 1]"),
            }),
            _ if !(0.0..=1.0).contains(&self.unlabeled_fraction) => Err(Error::InvalidConfig {
                reason: format!(
                    "unlabeled fraction {} outside [0, 1]",
                    self.unlabeled_fraction
                ),
            }),
            _ => Ok(()),
        }
    }
}

/// Index-based split over a patch slice. `labeled`/`test` pair patch index
/// with its 1..=K label; `unlabeled` indexes patches with labels stripped.
#[derive(Clone, Debug, Default)]
pub struct SplitSets {
    pub labeled: Vec<(usize, usize)>,
    pub unlabeled: Vec<usize>,
    pub test: Vec<(usize, usize)>,
    /// One entry per class whose test set came out empty.
    pub warnings: Vec<String>,
}

/// Draws the split. Deterministic given (patches, spec.seed).
pub fn split(patches: &[Patch], k: usize, spec: &SplitSpec) -> Result<SplitSets> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut sets = SplitSets::default();

    for class in 1..=k {
        let members: Vec<usize> = patches
            .iter()
            .enumerate()
            .filter(|(_, p)| p.label == class)
            .map(|(i, _)| i)
            .collect();
        let population = members.len();
        let quota = match spec.quota {
            Quota::Count(n) => n,
            Quota::Ratio(r) => (((population as f64) * r).floor() as usize).max(1),
        };
        if quota > population {
            return Err(Error::QuotaExceedsClass {
                class,
                quota,
                population,
            });
        }
        let chosen = rand::seq::index::sample(&mut rng, population, quota);
        let mut taken = vec![false; population];
        for i in chosen.iter() {
            taken[i] = true;
        }
        for (slot, &idx) in members.iter().enumerate() {
            if taken[slot] {
                sets.labeled.push((idx, class));
            } else {
                sets.test.push((idx, class));
            }
        }
        if quota == population {
            sets.warnings
                .push(format!("class {class}: all {population} labeled patches taken for training; test set empty"));
        }
    }

    let unlabeled_count = ((patches.len() as f64) * spec.unlabeled_fraction).floor() as usize;
    if unlabeled_count > 0 {
        let chosen = rand::seq::index::sample(&mut rng, patches.len(), unlabeled_count);
        let mut idx: Vec<usize> = chosen.iter().collect();
        idx.sort_unstable();
        sets.unlabeled = idx;
    }
    Ok(sets)
}
