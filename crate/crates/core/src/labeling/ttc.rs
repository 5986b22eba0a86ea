use serde::{Deserialize, Serialize};

use crate::geometry::{Polyline, Vec2};
use crate::ingest::{LaneType, RoadMap, TrackSet, VehicleId, ZoneKind};
use crate::slicing::{AtomScenario, InteractionType};
use crate::tree_metric::{virtual_map, PathState, VirtualLeader};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TtcConfig {
    /// Seconds; highways and ramps.
    pub highway: f64,
    /// Seconds; intersections.
    pub intersection: f64,
    /// Length of the recorded future path used for mapping, seconds.
    pub horizon: f64,
    /// Path sampling step, frames.
    pub path_step: usize,
}

impl Default for TtcConfig {
    fn default() -> Self {
        TtcConfig {
            highway: 1.0,
            intersection: 0.5,
            horizon: 6.0,
            path_step: 5,
        }
    }
}

impl TtcConfig {
    pub fn check(&self) -> Result<(), String> {
        if !(self.highway > 0.0 && self.intersection > 0.0 && self.horizon > 0.0) || self.path_step == 0 {
            return Err("ttc thresholds, horizon and path_step must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtcResult {
    pub id: u64,
    /// `None` when the pair never closes in.
    pub min_ttc: Option<f64>,
    pub threshold: f64,
    pub extreme: bool,
}

/// Gap over closing speed; infinite when not closing.
pub fn ttc(dr: f64, closing: f64) -> f64 {
    if closing > 0.0 {
        dr / closing
    } else {
        f64::INFINITY
    }
}

fn future_path(ts: &TrackSet, id: &VehicleId, frame: i64, cfg: &TtcConfig) -> Option<Polyline> {
    let track = ts.get(id)?;
    let last = track.last_frame()?;
    let end = last.min(frame + (cfg.horizon / ts.dt).round() as i64);
    let mut pts: Vec<Vec2> = (frame..=end)
        .step_by(cfg.path_step)
        .filter_map(|f| track.at(f).map(|p| p.pos()))
        .collect();
    if let Some(p) = track.at(end) {
        if pts.last() != Some(&p.pos()) {
            pts.push(p.pos());
        }
    }
    (pts.len() >= 2).then(|| Polyline::new(pts))
}

fn is_intersection(atom: &AtomScenario, ts: &TrackSet, map: &RoadMap) -> bool {
    if atom.itype == InteractionType::StaticConflictPoint {
        return true;
    }
    let point_zone = atom.records.iter().any(|r| {
        r.zone_id
            .as_deref()
            .and_then(|z| map.zone(z))
            .is_some_and(|z| z.kind == ZoneKind::StaticPoint)
    });
    point_zone
        || ts
            .point(&atom.ego_id, atom.start_frame)
            .and_then(|p| map.locate(p.pos(), Some(p.heading)))
            .is_some_and(|fix| map.lanes[fix.lane].lane_type == LaneType::IntersectionApproach)
}

/// Minimum time-to-collision between the ego and any interactive vehicle
/// over the frames of `atom`. Each other vehicle is mapped onto the ego's
/// recorded future path as a virtual leader.
pub fn min_ttc(atom: &AtomScenario, ts: &TrackSet, map: &RoadMap, cfg: &TtcConfig) -> f64 {
    let mut best = f64::INFINITY;
    for frame in atom.frames() {
        let (Some(ego), Some(ego_path)) = (ts.point(&atom.ego_id, frame), future_path(ts, &atom.ego_id, frame, cfg)) else {
            continue;
        };
        for other in &atom.interactive {
            let (Some(op), Some(other_path)) = (ts.point(other, frame), future_path(ts, other, frame, cfg)) else {
                continue;
            };
            let zone = atom
                .records
                .iter()
                .find(|r| &r.other_id == other)
                .and_then(|r| r.zone_id.as_deref())
                .and_then(|z| map.zone(z))
                .map(|z| &z.polygon);
            let mapped = virtual_map(
                PathState {
                    path: &ego_path,
                    speed: ego.speed(),
                },
                PathState {
                    path: &other_path,
                    speed: op.speed(),
                },
                zone,
            );
            if let Ok(VirtualLeader::Mapped { dr, v_virtual }) = mapped {
                best = best.min(ttc(dr, ego.speed() - v_virtual));
            }
        }
    }
    best
}

/// Flags scenarios whose minimum TTC falls below the context threshold.
pub fn ttc_label(atoms: &[AtomScenario], ts: &TrackSet, map: &RoadMap, cfg: &TtcConfig) -> Vec<TtcResult> {
    atoms
        .iter()
        .map(|a| {
            let threshold = if is_intersection(a, ts, map) {
                cfg.intersection
            } else {
                cfg.highway
            };
            let t = min_ttc(a, ts, map, cfg);
            TtcResult {
                id: a.id,
                min_ttc: t.is_finite().then_some(t),
                threshold,
                extreme: t < threshold,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_examples() {
        assert_eq!(ttc(20.0, 10.0), 2.0);
        assert!(ttc(20.0, 10.0) >= 1.0);
        assert_eq!(ttc(8.0, 10.0), 0.8);
        assert!(ttc(8.0, 10.0) < 1.0);
        assert_eq!(ttc(8.0, -3.0), f64::INFINITY);
        assert_eq!(ttc(8.0, 0.0), f64::INFINITY);
    }
}
