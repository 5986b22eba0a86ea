use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AtomScenario;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationBin {
    /// Lower bin edge, seconds.
    pub start_s: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub segments: usize,
    /// Interactive-vehicle count -> number of segments.
    pub interactive_histogram: BTreeMap<usize, usize>,
    pub bin_width_s: f64,
    pub duration_histogram: Vec<DurationBin>,
    pub searched: usize,
    pub interactive: usize,
    pub filtered: usize,
    /// `filtered / searched`, 0 when nothing was searched.
    pub filtered_proportion: f64,
}

/// Summarizes a segment list. Durations are `frame_count * dt`, binned into
/// `bin_width_s` intervals; the histogram lists every bin up to the longest
/// segment, empty ones included.
pub fn segment_stats(atoms: &[AtomScenario], dt: f64, bin_width_s: f64) -> StatsReport {
    let mut report = StatsReport {
        bin_width_s,
        ..StatsReport::default()
    };
    let mut bins: BTreeMap<usize, usize> = BTreeMap::new();
    for a in atoms {
        report.segments += 1;
        *report.interactive_histogram.entry(a.interactive.len()).or_default() += 1;
        let dur = a.frame_count() as f64 * dt;
        *bins.entry((dur / bin_width_s + 1e-9).floor() as usize).or_default() += 1;
        report.searched += a.filtered_counts.searched;
        report.interactive += a.filtered_counts.interactive;
    }
    if let Some((&last, _)) = bins.last_key_value() {
        report.duration_histogram = (0..=last)
            .map(|b| DurationBin {
                start_s: b as f64 * bin_width_s,
                count: bins.get(&b).copied().unwrap_or(0),
            })
            .collect();
    }
    report.filtered = report.searched - report.interactive;
    if report.searched > 0 {
        report.filtered_proportion = report.filtered as f64 / report.searched as f64;
    }
    report
}
