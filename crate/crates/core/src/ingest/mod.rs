//! Track and road-map ingestion.
//!
//! Tracks arrive as one-sample-per-row CSV (HighD-style headers by default,
//! remappable through [`ColumnMap`]); road maps arrive as JSON. Both are
//! validated on load. [`resample_and_smooth`] brings every track onto a common
//! uniform frame grid and removes measurement jitter.

mod map;
mod resample;
mod tracks;
mod validate;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use map::{
    parse_road_map, ConflictZone, Lane, LaneFix, LaneType, RoadMap, RoadMapDoc, RoadNode,
    ZoneKind,
};
pub use resample::resample_and_smooth;
pub use tracks::{parse_tracks, read_tracks, write_tracks};
pub use validate::{validate, Finding, ValidationConfig, ValidationReport};

use crate::geometry::Vec2;

/// Vehicle identifier. Ordered naturally: numeric ids compare as numbers
/// (`"9" < "10"`), split-track suffixes sort after their base id.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VehicleId(String);

impl VehicleId {
    pub fn new(s: impl Into<String>) -> Self {
        VehicleId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn numeric_prefix(&self) -> (Option<u128>, &str) {
        let end = self
            .0
            .char_indices()
            .find(|(_, c)| !c.is_ascii_digit())
            .map(|(i, _)| i)
            .unwrap_or(self.0.len());
        let num = if end == 0 { None } else { self.0[..end].parse().ok() };
        (num, &self.0[end..])
    }
}

impl Ord for VehicleId {
    fn cmp(&self, other: &Self) -> Ordering {
        let (na, ra) = self.numeric_prefix();
        let (nb, rb) = other.numeric_prefix();
        let key = match (na, nb) {
            (Some(a), Some(b)) => a.cmp(&b).then_with(|| ra.cmp(rb)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        };
        key.then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for VehicleId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for VehicleId {
    fn from(s: &str) -> Self {
        VehicleId(s.to_owned())
    }
}

impl From<u64> for VehicleId {
    fn from(n: u64) -> Self {
        VehicleId(n.to_string())
    }
}

pub type LaneId = String;

/// One kinematic sample of one vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub frame: i64,
    /// Seconds; always `frame as f64 * dt` of the owning [`TrackSet`].
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    /// Radians.
    pub heading: f64,
    pub lane_id: Option<LaneId>,
}

impl TrackPoint {
    pub fn pos(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn vel(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub vehicle_id: VehicleId,
    pub length: f64,
    pub width: f64,
    pub points: Vec<TrackPoint>,
}

impl Track {
    pub fn first_frame(&self) -> Option<i64> {
        self.points.first().map(|p| p.frame)
    }

    pub fn last_frame(&self) -> Option<i64> {
        self.points.last().map(|p| p.frame)
    }

    /// Sample at `frame`, assuming the unit-step invariant of resampled tracks
    /// with a fallback search for raw tracks.
    pub fn at(&self, frame: i64) -> Option<&TrackPoint> {
        let first = self.first_frame()?;
        let idx = frame - first;
        if idx >= 0 {
            if let Some(p) = self.points.get(idx as usize) {
                if p.frame == frame {
                    return Some(p);
                }
            }
        }
        self.points
            .binary_search_by_key(&frame, |p| p.frame)
            .ok()
            .map(|i| &self.points[i])
    }

    pub fn contains_frame(&self, frame: i64) -> bool {
        self.at(frame).is_some()
    }
}

/// All tracks of one recording, sharing one frame period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSet {
    pub dt: f64,
    pub tracks: BTreeMap<VehicleId, Track>,
}

impl TrackSet {
    pub fn new(dt: f64) -> Self {
        TrackSet {
            dt,
            tracks: BTreeMap::new(),
        }
    }

    pub fn frame_range(&self) -> Option<(i64, i64)> {
        let lo = self.tracks.values().filter_map(Track::first_frame).min()?;
        let hi = self.tracks.values().filter_map(Track::last_frame).max()?;
        Some((lo, hi))
    }

    pub fn get(&self, id: &VehicleId) -> Option<&Track> {
        self.tracks.get(id)
    }

    pub fn point(&self, id: &VehicleId, frame: i64) -> Option<&TrackPoint> {
        self.tracks.get(id)?.at(frame)
    }

    pub fn insert(&mut self, track: Track) {
        self.tracks.insert(track.vehicle_id.clone(), track);
    }
}

/// CSV header names for each semantic field.
///
/// Required: frame, id, x, y, vx, vy. The remaining columns are read when
/// present in the header and defaulted otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub frame: String,
    pub id: String,
    pub x: String,
    pub y: String,
    pub vx: String,
    pub vy: String,
    /// Longitudinal extent. HighD calls this column `width`.
    pub length: String,
    /// Lateral extent. HighD calls this column `height`.
    pub width: String,
    pub lane: String,
    pub heading: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            frame: "frame".into(),
            id: "id".into(),
            x: "x".into(),
            y: "y".into(),
            vx: "xVelocity".into(),
            vy: "yVelocity".into(),
            length: "width".into(),
            width: "height".into(),
            lane: "laneId".into(),
            heading: "heading".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub columns: ColumnMap,
    /// Frame period of the source file; `None` means the source is already at `dt`.
    pub source_dt: Option<f64>,
    /// Target frame period after resampling, seconds.
    pub dt: f64,
    /// Centered moving-average window in frames (odd).
    pub smoothing_window: usize,
    /// Road-node spacing along lane centerlines, meters.
    pub node_interval: f64,
    /// Longest dropout bridged by interpolation, seconds; longer gaps split the track.
    pub max_gap_fill: f64,
    pub default_length: f64,
    pub default_width: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            columns: ColumnMap::default(),
            source_dt: None,
            dt: 0.04,
            smoothing_window: 5,
            node_interval: 10.0,
            max_gap_fill: 0.5,
            default_length: 4.5,
            default_width: 1.8,
        }
    }
}

impl IngestConfig {
    pub fn source_dt(&self) -> f64 {
        self.source_dt.unwrap_or(self.dt)
    }

    pub fn check(&self) -> Result<(), IngestError> {
        let bad = |m: &str| Err(IngestError::InvalidConfig(m.to_owned()));
        if !(self.dt > 0.0) || !(self.source_dt() > 0.0) {
            return bad("dt must be positive");
        }
        if self.smoothing_window == 0 || self.smoothing_window % 2 == 0 {
            return bad("smoothing_window must be odd and >= 1");
        }
        if !(self.node_interval > 0.0) {
            return bad("node_interval must be positive");
        }
        if !(self.default_length > 0.0 && self.default_width > 0.0) {
            return bad("default vehicle dimensions must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("duplicate sample for vehicle {vehicle} at frame {frame}")]
    DuplicateSample { vehicle: VehicleId, frame: i64 },
    #[error("schema error at {0}")]
    SchemaError(String),
    #[error("dangling lane reference {0:?}")]
    DanglingReference(LaneId),
    #[error("track {0} has fewer than two samples")]
    TrackTooShort(VehicleId),
    #[error("invalid ingest config: {0}")]
    InvalidConfig(String),
}

/// Formats a float with at least nine significant digits such that parsing
/// the text recovers the exact same value.
pub fn fmt_float(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let shortest = format!("{v:e}");
    let mantissa = shortest.split('e').next().unwrap_or("");
    let digits = mantissa.chars().filter(char::is_ascii_digit).count();
    let precision = digits.max(9) - 1;
    format!("{v:.precision$e}")
}
