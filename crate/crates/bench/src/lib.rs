//! Fixtures shared by the benchmarks.

use scn_core::slicing::{slice_all, AtomScenario, InteractionType, SliceConfig};
use scn_core::synthgen::{generate, labeling_corpus};
use scn_core::{RoadMap, TrackSet};

/// The labeling corpus for `seed` with its sliced dynamic-conflict segments.
pub fn conflict_segments(seed: u64) -> (TrackSet, RoadMap, Vec<AtomScenario>) {
    let (ts, map, _) = generate(&labeling_corpus(seed)).expect("corpus generates");
    let atoms = slice_all(&ts, &map, &SliceConfig::default())
        .expect("corpus slices")
        .into_iter()
        .filter(|a| a.itype == InteractionType::DynamicConflictLine)
        .collect();
    (ts, map, atoms)
}
