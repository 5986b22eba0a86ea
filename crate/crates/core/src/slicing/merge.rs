use std::collections::{BTreeMap, BTreeSet};

use super::{AtomScenario, FilteredCounts, InteractionRecord, InteractionType, SliceConfig, SCHEMA_VERSION};
use crate::ingest::VehicleId;

/// One interaction that passed all per-frame layers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrameRecord {
    pub other_id: VehicleId,
    pub itype: InteractionType,
    pub zone_id: Option<String>,
}

/// Layer output for one ego frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameRecords {
    pub frame: i64,
    pub records: Vec<FrameRecord>,
    /// Everything the search layer returned, interactive or not.
    pub searched: Vec<VehicleId>,
}

fn distinct_others(set: &BTreeSet<FrameRecord>) -> usize {
    let mut n = 0;
    let mut last: Option<&VehicleId> = None;
    for r in set {
        if last != Some(&r.other_id) {
            n += 1;
            last = Some(&r.other_id);
        }
    }
    n
}

/// Merge layer. `frames` must be consecutive and ascending.
///
/// A record missing for at most `merge_gap_frames` frames between two
/// appearances is treated as present. Segments then break wherever the
/// record set changes; empty sets form `FreeDriving` segments. Ids are
/// assigned from 0 and `behavior_label` is left for the caller.
pub fn merge_frames(ego: &VehicleId, frames: &[FrameRecords], cfg: &SliceConfig) -> Vec<AtomScenario> {
    let mut sets: Vec<BTreeSet<FrameRecord>> = frames
        .iter()
        .map(|f| f.records.iter().cloned().collect())
        .collect();

    let mut seen: BTreeMap<FrameRecord, Vec<usize>> = BTreeMap::new();
    for (i, set) in sets.iter().enumerate() {
        for r in set {
            seen.entry(r.clone()).or_default().push(i);
        }
    }
    for (key, idx) in &seen {
        for w in idx.windows(2) {
            let gap = w[1] - w[0] - 1;
            if gap == 0 || gap > cfg.merge_gap_frames {
                continue;
            }
            let fits = (w[0] + 1..w[1]).all(|k| {
                let has_other = sets[k].iter().any(|r| r.other_id == key.other_id);
                has_other || distinct_others(&sets[k]) < cfg.max_interactive
            });
            if fits {
                for set in &mut sets[w[0] + 1..w[1]] {
                    set.insert(key.clone());
                }
            }
        }
    }

    let mut atoms = Vec::new();
    let mut start = 0;
    for end in 1..=sets.len() {
        if end < sets.len() && sets[end] == sets[start] {
            continue;
        }
        let set = &sets[start];
        let records: Vec<InteractionRecord> = set
            .iter()
            .map(|key| {
                let mut on = start;
                while on > 0 && sets[on - 1].contains(key) {
                    on -= 1;
                }
                let mut off = end - 1;
                while off + 1 < sets.len() && sets[off + 1].contains(key) {
                    off += 1;
                }
                InteractionRecord {
                    other_id: key.other_id.clone(),
                    itype: key.itype,
                    onset_frame: frames[on].frame,
                    offset_frame: frames[off].frame,
                    zone_id: key.zone_id.clone(),
                }
            })
            .collect();
        let interactive: Vec<VehicleId> = set
            .iter()
            .map(|r| r.other_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let searched: BTreeSet<&VehicleId> = frames[start..end]
            .iter()
            .flat_map(|f| f.searched.iter())
            .chain(interactive.iter())
            .collect();
        let itype = set
            .iter()
            .map(|r| r.itype)
            .max_by_key(|t| t.priority())
            .unwrap_or(InteractionType::FreeDriving);
        let tasks: BTreeSet<&str> = if set.is_empty() {
            [InteractionType::FreeDriving.task()].into()
        } else {
            set.iter().map(|r| r.itype.task()).collect()
        };
        atoms.push(AtomScenario {
            schema_version: SCHEMA_VERSION,
            id: atoms.len() as u64,
            ego_id: ego.clone(),
            start_frame: frames[start].frame,
            end_frame: frames[end - 1].frame,
            itype,
            filtered_counts: FilteredCounts {
                searched: searched.len(),
                interactive: interactive.len(),
            },
            interactive,
            records,
            behavior_label: String::new(),
            task_set: tasks.into_iter().map(str::to_owned).collect(),
            source: None,
        });
        start = end;
    }
    atoms
}
