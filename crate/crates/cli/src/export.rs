//! Plot-ready CSV tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use scn_core::ingest::fmt_float;
use scn_core::labeling::LabelReport;
use scn_core::slicing::{segment_stats, AtomScenario, InteractionType};

use crate::io::{create, io_err, write_text};
use crate::CliError;

pub const FILES: [&str; 5] = [
    "interactive_histogram.csv",
    "duration_histogram.csv",
    "segments.csv",
    "filtered.csv",
    "scatter.csv",
];

fn table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let csv_err = |e: csv::Error| CliError::Input(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes the histogram tables for `atoms` and the scatter table for
/// `report` into `dir`. Returns the written paths.
pub fn export_plotdata(
    report: Option<&LabelReport>,
    atoms: &[AtomScenario],
    dt: f64,
    bin_width_s: f64,
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let paths: Vec<PathBuf> = FILES.iter().map(|f| dir.join(f)).collect();
    let stats = (!atoms.is_empty()).then(|| segment_stats(atoms, dt, bin_width_s));

    table(
        &paths[0],
        &["interactive", "segments"],
        stats
            .iter()
            .flat_map(|s| s.interactive_histogram.iter())
            .map(|(k, v)| vec![k.to_string(), v.to_string()]),
    )?;
    table(
        &paths[1],
        &["start_s", "count"],
        stats
            .iter()
            .flat_map(|s| s.duration_histogram.iter())
            .map(|b| vec![fmt_float(b.start_s), b.count.to_string()]),
    )?;
    table(
        &paths[2],
        &["id", "ego_id", "type", "start_frame", "end_frame", "duration_s", "searched", "interactive", "filtered"],
        atoms.iter().map(|a| {
            let c = a.filtered_counts;
            vec![
                a.id.to_string(),
                a.ego_id.to_string(),
                a.itype.as_str().to_owned(),
                a.start_frame.to_string(),
                a.end_frame.to_string(),
                fmt_float(a.frame_count() as f64 * dt),
                c.searched.to_string(),
                c.interactive.to_string(),
                (c.searched - c.interactive).to_string(),
            ]
        }),
    )?;
    let mut by_type: BTreeMap<InteractionType, Vec<AtomScenario>> = BTreeMap::new();
    for a in atoms {
        by_type.entry(a.itype).or_default().push(a.clone());
    }
    table(
        &paths[3],
        &["type", "segments", "searched", "interactive", "filtered", "filtered_proportion"],
        by_type.iter().map(|(t, group)| {
            let s = segment_stats(group, dt, bin_width_s);
            vec![
                t.as_str().to_owned(),
                s.segments.to_string(),
                s.searched.to_string(),
                s.interactive.to_string(),
                s.filtered.to_string(),
                fmt_float(s.filtered_proportion),
            ]
        }),
    )?;
    match report {
        Some(r) => write_text(&paths[4], &r.coordinates_csv())?,
        None => table(&paths[4], &scatter_header(), std::iter::empty())?,
    }
    Ok(paths)
}

fn scatter_header() -> Vec<&'static str> {
    vec!["id", "x", "y", "density", "cluster", "graph_dtw_extreme", "ttc_extreme", "vector_dtw_extreme"]
}
