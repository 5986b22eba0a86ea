use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use super::{fmt_float, IngestConfig, IngestError, Track, TrackPoint, TrackSet, VehicleId};

/// Reads a tracks CSV file. See [`read_tracks`].
pub fn parse_tracks(path: &Path, cfg: &IngestConfig) -> Result<TrackSet, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_tracks(file, cfg)
}

struct Columns {
    frame: usize,
    id: usize,
    x: usize,
    y: usize,
    vx: usize,
    vy: usize,
    length: Option<usize>,
    width: Option<usize>,
    lane: Option<usize>,
    heading: Option<usize>,
}

fn resolve_columns(
    headers: &csv::StringRecord,
    cfg: &IngestConfig,
) -> Result<Columns, IngestError> {
    let index: HashMap<&str, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim(), i))
        .collect();
    let c = &cfg.columns;
    let required = |name: &String| {
        index
            .get(name.as_str())
            .copied()
            .ok_or_else(|| IngestError::MissingColumn(name.clone()))
    };
    let optional = |name: &String| index.get(name.as_str()).copied();
    Ok(Columns {
        frame: required(&c.frame)?,
        id: required(&c.id)?,
        x: required(&c.x)?,
        y: required(&c.y)?,
        vx: required(&c.vx)?,
        vy: required(&c.vy)?,
        length: optional(&c.length),
        width: optional(&c.width),
        lane: optional(&c.lane),
        heading: optional(&c.heading),
    })
}

/// Parses tracks CSV from any reader.
///
/// `t` is derived as `frame * source_dt`; heading falls back to the velocity
/// direction when the file carries no heading column.
pub fn read_tracks<R: Read>(reader: R, cfg: &IngestConfig) -> Result<TrackSet, IngestError> {
    cfg.check()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::MalformedRow {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    let cols = resolve_columns(&headers, cfg)?;
    let dt = cfg.source_dt();

    let mut tracks: BTreeMap<VehicleId, Track> = BTreeMap::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr
            .read_record(&mut record)
            .map_err(|e| IngestError::MalformedRow {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                reason: e.to_string(),
            })?;
        if !more {
            break;
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |idx: usize, name: &str| -> Result<&str, IngestError> {
            record.get(idx).ok_or_else(|| IngestError::MalformedRow {
                line,
                reason: format!("missing field {name}"),
            })
        };
        let num = |idx: usize, name: &str| -> Result<f64, IngestError> {
            let raw = field(idx, name)?;
            let v: f64 = raw.parse().map_err(|_| IngestError::MalformedRow {
                line,
                reason: format!("{name}: {raw:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(IngestError::MalformedRow {
                    line,
                    reason: format!("{name} is not finite"),
                });
            }
            Ok(v)
        };
        let frame_raw = field(cols.frame, "frame")?;
        let frame: i64 = frame_raw
            .parse()
            .or_else(|_| {
                frame_raw
                    .parse::<f64>()
                    .ok()
                    .filter(|f| f.fract() == 0.0 && f.is_finite())
                    .map(|f| f as i64)
                    .ok_or(())
            })
            .map_err(|_| IngestError::MalformedRow {
                line,
                reason: format!("frame: {frame_raw:?} is not an integer"),
            })?;
        let id_raw = field(cols.id, "id")?;
        if id_raw.is_empty() {
            return Err(IngestError::MalformedRow {
                line,
                reason: "empty vehicle id".into(),
            });
        }
        let vehicle_id = VehicleId::new(id_raw);
        let x = num(cols.x, "x")?;
        let y = num(cols.y, "y")?;
        let vx = num(cols.vx, "vx")?;
        let vy = num(cols.vy, "vy")?;
        let heading = match cols.heading {
            Some(i) => num(i, "heading")?,
            None => vy.atan2(vx),
        };
        let lane_id = match cols.lane {
            Some(i) => {
                let raw = field(i, "lane")?;
                (!raw.is_empty()).then(|| raw.to_owned())
            }
            None => None,
        };
        let dim = |col: Option<usize>, name: &str, default: f64| -> Result<f64, IngestError> {
            match col {
                Some(i) => {
                    let v = num(i, name)?;
                    Ok(if v > 0.0 { v } else { default })
                }
                None => Ok(default),
            }
        };
        let length = dim(cols.length, "length", cfg.default_length)?;
        let width = dim(cols.width, "width", cfg.default_width)?;

        let track = tracks
            .entry(vehicle_id.clone())
            .or_insert_with(|| Track {
                vehicle_id: vehicle_id.clone(),
                length,
                width,
                points: Vec::new(),
            });
        track.points.push(TrackPoint {
            frame,
            t: frame as f64 * dt,
            x,
            y,
            vx,
            vy,
            heading,
            lane_id,
        });
    }

    for track in tracks.values_mut() {
        track.points.sort_by_key(|p| p.frame);
        if let Some(w) = track.points.windows(2).find(|w| w[0].frame == w[1].frame) {
            return Err(IngestError::DuplicateSample {
                vehicle: track.vehicle_id.clone(),
                frame: w[0].frame,
            });
        }
    }
    Ok(TrackSet { dt, tracks })
}

pub const NORMALIZED_HEADER: [&str; 10] = [
    "frame",
    "id",
    "x",
    "y",
    "xVelocity",
    "yVelocity",
    "width",
    "height",
    "laneId",
    "heading",
];

/// Writes the normalized CSV layout, readable back with the default
/// [`ColumnMap`](super::ColumnMap). Rows are ordered by vehicle id, then frame.
pub fn write_tracks<W: Write>(ts: &TrackSet, writer: W) -> Result<(), IngestError> {
    let io_err = |e: csv::Error| IngestError::Io {
        path: "<tracks csv>".into(),
        source: std::io::Error::other(e.to_string()),
    };
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(NORMALIZED_HEADER).map_err(io_err)?;
    for track in ts.tracks.values() {
        let length = fmt_float(track.length);
        let width = fmt_float(track.width);
        for p in &track.points {
            w.write_record([
                p.frame.to_string().as_str(),
                track.vehicle_id.as_str(),
                &fmt_float(p.x),
                &fmt_float(p.y),
                &fmt_float(p.vx),
                &fmt_float(p.vy),
                &length,
                &width,
                p.lane_id.as_deref().unwrap_or(""),
                &fmt_float(p.heading),
            ])
            .map_err(io_err)?;
        }
    }
    w.flush().map_err(|source| IngestError::Io {
        path: "<tracks csv>".into(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ColumnMap;
    use proptest::prelude::*;

    fn short_cfg() -> IngestConfig {
        IngestConfig {
            columns: ColumnMap {
                frame: "frame".into(),
                id: "id".into(),
                x: "x".into(),
                y: "y".into(),
                vx: "vx".into(),
                vy: "vy".into(),
                lane: "lane".into(),
                ..ColumnMap::default()
            },
            ..IngestConfig::default()
        }
    }

    #[test]
    fn maps_fields_directly() {
        let csv = "frame,id,x,y,vx,vy,lane\n10,5,100.0,8.2,25.0,0.0,2\n";
        let ts = read_tracks(csv.as_bytes(), &short_cfg()).unwrap();
        let tr = ts.get(&VehicleId::from("5")).unwrap();
        let p = &tr.points[0];
        assert_eq!(p.frame, 10);
        assert_eq!((p.x, p.y, p.vx, p.vy), (100.0, 8.2, 25.0, 0.0));
        assert_eq!(p.lane_id.as_deref(), Some("2"));
        assert_eq!(p.heading, 0.0);
        assert_eq!(p.t, 10.0 * 0.04);
    }

    #[test]
    fn empty_file_with_header_is_empty_set() {
        let ts = read_tracks("frame,id,x,y,vx,vy,lane\n".as_bytes(), &short_cfg()).unwrap();
        assert!(ts.tracks.is_empty());
        assert_eq!(ts.frame_range(), None);
    }

    #[test]
    fn non_numeric_field_names_the_line() {
        let csv = "frame,id,x,y,vx,vy,lane\n1,5,1.0,0,0,0,1\n2,5,abc,0,0,0,1\n";
        match read_tracks(csv.as_bytes(), &short_cfg()) {
            Err(IngestError::MalformedRow { line, reason }) => {
                assert_eq!(line, 3);
                assert!(reason.contains("x"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_reported() {
        let err = read_tracks("frame,id,x,y,vx\n".as_bytes(), &short_cfg()).unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn(c) if c == "vy"));
    }

    #[test]
    fn duplicate_samples_rejected() {
        let csv = "frame,id,x,y,vx,vy,lane\n1,5,0,0,0,0,1\n1,5,1,0,0,0,1\n";
        let err = read_tracks(csv.as_bytes(), &short_cfg()).unwrap_err();
        assert!(matches!(err, IngestError::DuplicateSample { frame: 1, .. }));
    }

    #[test]
    fn rows_are_sorted_per_vehicle() {
        let csv = "frame,id,x,y,vx,vy,lane\n3,5,3,0,1,0,1\n1,5,1,0,1,0,1\n2,7,0,0,1,0,\n";
        let ts = read_tracks(csv.as_bytes(), &short_cfg()).unwrap();
        let frames: Vec<i64> = ts.tracks[&VehicleId::from("5")]
            .points
            .iter()
            .map(|p| p.frame)
            .collect();
        assert_eq!(frames, [1, 3]);
        assert_eq!(ts.tracks[&VehicleId::from("7")].points[0].lane_id, None);
        assert_eq!(ts.frame_range(), Some((1, 3)));
    }

    fn arb_trackset() -> impl Strategy<Value = TrackSet> {
        let point = (-1e4f64..1e4, -1e3f64..1e3, -60f64..60.0, -10f64..10.0, -3.2f64..3.2, proptest::option::of(0u8..5));
        proptest::collection::vec(
            (1u64..50, 1.0f64..20.0, 0.5f64..3.0, proptest::collection::vec(point, 1..20)),
            0..5,
        )
        .prop_map(|vehicles| {
            let mut ts = TrackSet::new(0.04);
            for (id, length, width, pts) in vehicles {
                let vid = VehicleId::from(id);
                let points = pts
                    .into_iter()
                    .enumerate()
                    .map(|(i, (x, y, vx, vy, heading, lane))| TrackPoint {
                        frame: i as i64 * 2,
                        t: (i as i64 * 2) as f64 * 0.04,
                        x,
                        y,
                        vx,
                        vy,
                        heading,
                        lane_id: lane.map(|l| l.to_string()),
                    })
                    .collect();
                ts.insert(Track { vehicle_id: vid, length, width, points });
            }
            ts
        })
    }

    proptest! {
        #[test]
        fn normalized_csv_round_trips_bit_exactly(ts in arb_trackset()) {
            let mut buf = Vec::new();
            write_tracks(&ts, &mut buf).unwrap();
            let back = read_tracks(buf.as_slice(), &IngestConfig::default()).unwrap();
            prop_assert_eq!(&back, &ts);
            let mut again = Vec::new();
            write_tracks(&back, &mut again).unwrap();
            prop_assert_eq!(buf, again);
        }
    }
}
