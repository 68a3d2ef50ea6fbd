//! Fixtures shared by the benchmarks.

use cstomo::{sample_counts, surrogate_state, Dataset, RandomSource, SettingsPlan};

/// The surrogate state sampled on every setting with 650 shots.
pub fn surrogate_dataset(n: usize, seed: u64) -> Dataset {
    let truth = surrogate_state(n).expect("surrogate state");
    let plan = SettingsPlan::complete(n, 650).expect("complete plan");
    sample_counts(&truth, &plan, RandomSource::new(seed)).expect("sampling")
}
