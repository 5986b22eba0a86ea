//! Interaction-typed scenario slicing.
//!
//! Every frame of an ego track passes through four layers: a spatial search
//! for nearby vehicles, a yes/no filter keeping vehicles whose future path
//! overlaps the ego's, a time filter confirming the interaction is sustained,
//! and a merge layer joining consecutive frames with identical interaction
//! sets into [`AtomScenario`]s.

mod layers;
mod merge;
mod stats;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ingest::VehicleId;

pub use layers::{slice, slice_all, Candidate, Slicer, TimeFilterResult};
pub use merge::{merge_frames, FrameRecord, FrameRecords};
pub use stats::{segment_stats, StatsReport};

pub const SCHEMA_VERSION: u32 = 1;

/// Basic interaction flow between the ego and one other vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionType {
    FollowingLine,
    HeadingLine,
    DynamicConflictLine,
    StaticConflictLine,
    StaticConflictPoint,
    /// No interactive vehicle at all.
    FreeDriving,
}

impl InteractionType {
    pub const ALL: [InteractionType; 6] = [
        InteractionType::FollowingLine,
        InteractionType::HeadingLine,
        InteractionType::DynamicConflictLine,
        InteractionType::StaticConflictLine,
        InteractionType::StaticConflictPoint,
        InteractionType::FreeDriving,
    ];

    /// Rank used to pick a segment's representative type; follows the
    /// classification decision order.
    pub fn priority(self) -> u8 {
        match self {
            InteractionType::StaticConflictPoint => 5,
            InteractionType::StaticConflictLine => 4,
            InteractionType::HeadingLine => 3,
            InteractionType::DynamicConflictLine => 2,
            InteractionType::FollowingLine => 1,
            InteractionType::FreeDriving => 0,
        }
    }

    pub fn is_static(self) -> bool {
        matches!(
            self,
            InteractionType::StaticConflictLine | InteractionType::StaticConflictPoint
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InteractionType::FollowingLine => "following_line",
            InteractionType::HeadingLine => "heading_line",
            InteractionType::DynamicConflictLine => "dynamic_conflict_line",
            InteractionType::StaticConflictLine => "static_conflict_line",
            InteractionType::StaticConflictPoint => "static_conflict_point",
            InteractionType::FreeDriving => "free_driving",
        }
    }

    fn task(self) -> &'static str {
        match self {
            InteractionType::FollowingLine => "keep_safe_gap",
            InteractionType::HeadingLine => "avoid_head_on",
            InteractionType::DynamicConflictLine => "negotiate_lane_change",
            InteractionType::StaticConflictLine => "merge_in_turn",
            InteractionType::StaticConflictPoint => "cross_conflict_point",
            InteractionType::FreeDriving => "cruise",
        }
    }
}

impl fmt::Display for InteractionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for InteractionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InteractionType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown interaction type {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub other_id: VehicleId,
    pub itype: InteractionType,
    pub onset_frame: i64,
    pub offset_frame: i64,
    /// Present exactly for the static conflict types.
    pub zone_id: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilteredCounts {
    pub searched: usize,
    pub interactive: usize,
}

/// Where the frames of a scenario come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSource {
    pub tracks: String,
    pub map: String,
}

/// One sliced segment: an ego, a frame span, and the interaction set that is
/// constant over that span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomScenario {
    pub schema_version: u32,
    pub id: u64,
    pub ego_id: VehicleId,
    pub start_frame: i64,
    /// Inclusive.
    pub end_frame: i64,
    /// Highest-priority type among the records, or `FreeDriving`.
    pub itype: InteractionType,
    /// Interactive vehicles, identical on every frame of the span.
    pub interactive: Vec<VehicleId>,
    pub records: Vec<InteractionRecord>,
    pub behavior_label: String,
    pub task_set: Vec<String>,
    pub filtered_counts: FilteredCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<ScenarioSource>,
}

impl AtomScenario {
    pub fn frame_count(&self) -> usize {
        (self.end_frame - self.start_frame + 1) as usize
    }

    pub fn frames(&self) -> std::ops::RangeInclusive<i64> {
        self.start_frame..=self.end_frame
    }

    pub fn contains_frame(&self, frame: i64) -> bool {
        self.frames().contains(&frame)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SliceConfig {
    /// Ego-aligned search box, meters.
    pub search_ahead: f64,
    pub search_behind: f64,
    pub search_lateral: f64,
    /// Search radius near ramps, intersections and conflict zones, meters.
    pub search_radius: f64,
    /// Distance to a conflict zone within which the radius search also applies.
    pub zone_context_distance: f64,
    /// Future horizon for the overlap test, seconds.
    pub horizon: f64,
    /// Longitudinal slack around the ego's future lane intervals, meters.
    pub corridor_margin: f64,
    /// Time-filter window, seconds.
    pub window: f64,
    /// Lateral-velocity threshold for lane-change interactions, m/s.
    pub lateral_speed_threshold: f64,
    /// Largest gap or zone-distance growth rate still counted as interacting, m/s.
    pub closing_rate_threshold: f64,
    /// Lateral offset below which a vehicle counts as centred in a lane, meters.
    pub lane_center_tolerance: f64,
    /// Heading difference above which two vehicles are head-on, degrees.
    pub heading_opposite_deg: f64,
    /// Flicker gaps up to this many frames do not split a segment.
    pub merge_gap_frames: usize,
    pub max_interactive: usize,
}

impl Default for SliceConfig {
    fn default() -> Self {
        SliceConfig {
            search_ahead: 100.0,
            search_behind: 50.0,
            search_lateral: 8.75,
            search_radius: 30.0,
            zone_context_distance: 50.0,
            horizon: 5.0,
            corridor_margin: 5.0,
            window: 0.5,
            lateral_speed_threshold: 0.2,
            closing_rate_threshold: 0.1,
            lane_center_tolerance: 0.2,
            heading_opposite_deg: 150.0,
            merge_gap_frames: 5,
            max_interactive: 10,
        }
    }
}

impl SliceConfig {
    pub fn check(&self) -> Result<(), SliceError> {
        let positive = [
            self.search_ahead,
            self.search_behind,
            self.search_lateral,
            self.search_radius,
            self.horizon,
            self.window,
            self.lateral_speed_threshold,
            self.closing_rate_threshold,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(SliceError::InvalidConfig("distances, horizon and thresholds must be positive".into()));
        }
        if self.max_interactive == 0 {
            return Err(SliceError::InvalidConfig("max_interactive must be >= 1".into()));
        }
        Ok(())
    }

    /// Time-filter window in samples at frame period `dt`.
    pub fn window_samples(&self, dt: f64) -> usize {
        ((self.window / dt - 1e-9).ceil() as usize).max(1)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SliceError {
    #[error("vehicle {0} is not in the track set")]
    UnknownVehicle(VehicleId),
    #[error("ego absent at frame {0}")]
    EgoAbsent(i64),
    #[error("no rule classifies the pair ({0}, {1})")]
    Unclassifiable(VehicleId, VehicleId),
    #[error("fewer than {needed} samples available for the time window")]
    InsufficientHistory { needed: usize },
    #[error("invalid slice config: {0}")]
    InvalidConfig(String),
    #[error("track {0} is empty or has missing frames; resample it first")]
    NonUniformTrack(VehicleId),
    #[error("road map has {0} conflict zones; at most 128 are supported")]
    TooManyZones(usize),
}
