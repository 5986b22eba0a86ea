use serde::{Deserialize, Serialize};

use super::{LaneId, RoadMap, TrackSet, VehicleId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    /// Slack beyond the lane half-width before a point counts as off-road, meters.
    pub corridor_tolerance: f64,
    /// Speeds above this are reported, m/s.
    pub max_speed: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            corridor_tolerance: 1.0,
            max_speed: 70.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    OutOfCorridor {
        vehicle: VehicleId,
        frame: i64,
        distance: f64,
    },
    LaneMismatch {
        vehicle: VehicleId,
        frame: i64,
        tagged: LaneId,
        nearest: LaneId,
    },
    SpeedOutlier {
        vehicle: VehicleId,
        frame: i64,
        speed: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Checks tracks against the map without modifying either.
pub fn validate(ts: &TrackSet, map: &RoadMap, cfg: &ValidationConfig) -> ValidationReport {
    let mut findings = Vec::new();
    for track in ts.tracks.values() {
        for p in &track.points {
            let vehicle = || track.vehicle_id.clone();
            let speed = p.speed();
            if speed > cfg.max_speed {
                findings.push(Finding::SpeedOutlier {
                    vehicle: vehicle(),
                    frame: p.frame,
                    speed,
                });
            }
            let heading = (speed > 0.5).then_some(p.heading);
            let Some(fix) = map.locate(p.pos(), heading) else {
                continue;
            };
            let lane = &map.lanes[fix.lane];
            if fix.dist > lane.width / 2.0 + cfg.corridor_tolerance {
                findings.push(Finding::OutOfCorridor {
                    vehicle: vehicle(),
                    frame: p.frame,
                    distance: fix.dist - lane.width / 2.0,
                });
                continue;
            }
            if let Some(tagged) = &p.lane_id {
                if fix.inside && tagged != &lane.lane_id {
                    findings.push(Finding::LaneMismatch {
                        vehicle: vehicle(),
                        frame: p.frame,
                        tagged: tagged.clone(),
                        nearest: lane.lane_id.clone(),
                    });
                }
            }
        }
    }
    ValidationReport { findings }
}
