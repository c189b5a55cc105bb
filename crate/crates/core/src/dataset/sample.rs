use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, QuestionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub size: usize,
    pub seed: u64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        Self { size: 1000, seed: 0 }
    }
}

/// Uniform draw without replacement, returned in draw order.
///
/// The generator is ChaCha8 seeded with `ChaCha8Rng::seed_from_u64(seed)`.
/// Draw `k` picks position `k + uniform(n - k)` of a working permutation and
/// swaps it into place (a partial Fisher-Yates shuffle). `uniform(m)` takes
/// `next_u64()` values and rejects those at or above the largest multiple of
/// `m`, then reduces modulo `m`; this keeps the selection independent of any
/// library range-sampling algorithm and therefore stable across versions and
/// platforms.
pub fn sample(records: &[QuestionRecord], plan: SamplePlan) -> Result<Vec<QuestionRecord>, DatasetError> {
    Ok(sample_indices(records.len(), plan)?
        .into_iter()
        .map(|i| records[i].clone())
        .collect())
}

pub(crate) fn sample_indices(n: usize, plan: SamplePlan) -> Result<Vec<usize>, DatasetError> {
    if plan.size > n {
        return Err(DatasetError::SizeExceedsCorpus {
            size: plan.size,
            corpus: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..plan.size {
        let pick = k + uniform(&mut rng, (n - k) as u64) as usize;
        order.swap(k, pick);
    }
    order.truncate(plan.size);
    Ok(order)
}

fn uniform(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return v % bound;
        }
    }
}
