//! File formats owned by the command line: JSON-lines scenario stores and
//! distance-matrix CSV.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use scn_core::ingest::fmt_float;
use scn_core::labeling::DistanceMatrix;
use scn_core::slicing::AtomScenario;

use crate::CliError;

pub fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn write_atoms(path: &Path, atoms: &[AtomScenario]) -> Result<(), CliError> {
    let mut w = create(path)?;
    for a in atoms {
        let line = serde_json::to_string(a).map_err(|e| CliError::Input(e.to_string()))?;
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_atoms(path: &Path) -> Result<Vec<AtomScenario>, CliError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut atoms = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let atom = serde_json::from_str(&line)
            .map_err(|e| CliError::Input(format!("{} line {}: {e}", path.display(), n + 1)))?;
        atoms.push(atom);
    }
    Ok(atoms)
}

/// Header `id,<id>...`, then one row per scenario led by its id.
pub fn write_matrix(path: &Path, m: &DistanceMatrix) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let csv_err = |e: csv::Error| CliError::Input(format!("{}: {e}", path.display()));
    let mut header = vec!["id".to_owned()];
    header.extend(m.ids.iter().map(u64::to_string));
    w.write_record(&header).map_err(csv_err)?;
    for (id, row) in m.ids.iter().zip(m.rows()) {
        let mut rec = vec![id.to_string()];
        rec.extend(row.iter().map(|&v| fmt_float(v)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_matrix(path: &Path) -> Result<DistanceMatrix, CliError> {
    let bad = |m: String| CliError::Input(format!("{}: {m}", path.display()));
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let ids: Vec<u64> = header
        .iter()
        .skip(1)
        .map(|s| s.parse().map_err(|_| bad(format!("bad id {s:?} in header"))))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.get(0).and_then(|s| s.parse::<u64>().ok()) != ids.get(i).copied() {
            return Err(bad(format!("row {} id does not match the header", i + 1)));
        }
        let row = rec
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>().map_err(|_| bad(format!("bad value {s:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    DistanceMatrix::from_rows(ids, rows).map_err(|e| bad(e.to_string()))
}
