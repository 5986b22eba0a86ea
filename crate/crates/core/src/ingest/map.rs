use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{IngestError, LaneId};
use crate::geometry::{Polygon, Polyline, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneType {
    #[default]
    Normal,
    Ramp,
    IntersectionApproach,
}

impl LaneType {
    pub fn code(self) -> u32 {
        match self {
            LaneType::Normal => 0,
            LaneType::Ramp => 1,
            LaneType::IntersectionApproach => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneKind {
    StaticLine,
    StaticPoint,
}

fn default_direction() -> i8 {
    1
}

fn default_lane_width() -> f64 {
    3.5
}

/// A lane; `centerline` runs in the direction of travel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lane {
    pub lane_id: LaneId,
    pub centerline: Vec<Vec2>,
    /// +1 when travel follows the map's primary axis, -1 otherwise.
    #[serde(default = "default_direction")]
    pub direction_sign: i8,
    #[serde(default)]
    pub left: Option<LaneId>,
    #[serde(default)]
    pub right: Option<LaneId>,
    #[serde(default)]
    pub successors: Vec<LaneId>,
    #[serde(rename = "type", default)]
    pub lane_type: LaneType,
    #[serde(default = "default_lane_width")]
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConflictZone {
    pub zone_id: String,
    pub polygon: Polygon,
    pub kind: ZoneKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadNode {
    pub node_id: String,
    pub position: Vec2,
    pub lane_id: LaneId,
    pub arc_position: f64,
    pub node_type: u32,
}

/// On-disk road map document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadMapDoc {
    #[serde(default)]
    pub dt_hint: Option<f64>,
    pub lanes: Vec<Lane>,
    #[serde(default)]
    pub conflict_zones: Vec<ConflictZone>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub road_nodes: Vec<RoadNode>,
}

/// Lane membership of a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneFix {
    pub lane: usize,
    pub s: f64,
    pub d: f64,
    pub tangent: Vec2,
    pub dist: f64,
    /// Whether the point lies within the lane's half-width.
    pub inside: bool,
}

/// Validated road map with derived lookup structures.
#[derive(Debug, Clone)]
pub struct RoadMap {
    pub dt_hint: Option<f64>,
    pub lanes: Vec<Lane>,
    pub conflict_zones: Vec<ConflictZone>,
    pub road_nodes: Vec<RoadNode>,
    polylines: Vec<Polyline>,
    lane_index: HashMap<LaneId, usize>,
    nodes_by_lane: Vec<Vec<usize>>,
}

/// Reads and validates a road-map JSON file, sampling road nodes every
/// `node_interval` meters when the file lists none.
pub fn parse_road_map(path: &Path, node_interval: f64) -> Result<RoadMap, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    RoadMap::from_json(&text, node_interval)
}

impl RoadMap {
    pub fn from_json(text: &str, node_interval: f64) -> Result<RoadMap, IngestError> {
        let doc: RoadMapDoc = serde_json::from_str(text).map_err(|e| {
            IngestError::SchemaError(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        RoadMap::from_doc(doc, node_interval)
    }

    pub fn from_doc(doc: RoadMapDoc, node_interval: f64) -> Result<RoadMap, IngestError> {
        if !(node_interval > 0.0) {
            return Err(IngestError::InvalidConfig("node_interval must be positive".into()));
        }
        let mut lane_index = HashMap::new();
        for (i, lane) in doc.lanes.iter().enumerate() {
            if lane_index.insert(lane.lane_id.clone(), i).is_some() {
                return Err(IngestError::SchemaError(format!("lanes[{i}].lane_id (duplicate)")));
            }
            if lane.centerline.len() < 2 {
                return Err(IngestError::SchemaError(format!("lanes[{i}].centerline")));
            }
            if lane.centerline.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
                return Err(IngestError::SchemaError(format!("lanes[{i}].centerline")));
            }
            if !(lane.width > 0.0) {
                return Err(IngestError::SchemaError(format!("lanes[{i}].width")));
            }
        }
        for lane in &doc.lanes {
            let refs = lane.left.iter().chain(lane.right.iter()).chain(lane.successors.iter());
            for r in refs {
                if !lane_index.contains_key(r) {
                    return Err(IngestError::DanglingReference(r.clone()));
                }
            }
        }
        let mut zone_ids = HashSet::new();
        for (i, z) in doc.conflict_zones.iter().enumerate() {
            if !zone_ids.insert(z.zone_id.as_str()) {
                return Err(IngestError::SchemaError(format!(
                    "conflict_zones[{i}].zone_id (duplicate)"
                )));
            }
            if !z.polygon.is_simple() {
                return Err(IngestError::SchemaError(format!("conflict_zones[{i}].polygon")));
            }
        }
        for n in &doc.road_nodes {
            if !lane_index.contains_key(&n.lane_id) {
                return Err(IngestError::DanglingReference(n.lane_id.clone()));
            }
        }

        let polylines: Vec<Polyline> = doc
            .lanes
            .iter()
            .map(|l| Polyline::new(l.centerline.clone()))
            .collect();
        let road_nodes = if doc.road_nodes.is_empty() {
            sample_road_nodes(&doc.lanes, &polylines, &doc.conflict_zones, node_interval)
        } else {
            doc.road_nodes
        };
        let mut nodes_by_lane = vec![Vec::new(); doc.lanes.len()];
        for (i, n) in road_nodes.iter().enumerate() {
            nodes_by_lane[lane_index[&n.lane_id]].push(i);
        }
        for list in &mut nodes_by_lane {
            list.sort_by(|&a, &b| road_nodes[a].arc_position.total_cmp(&road_nodes[b].arc_position));
        }
        Ok(RoadMap {
            dt_hint: doc.dt_hint,
            lanes: doc.lanes,
            conflict_zones: doc.conflict_zones,
            road_nodes,
            polylines,
            lane_index,
            nodes_by_lane,
        })
    }

    pub fn to_doc(&self) -> RoadMapDoc {
        RoadMapDoc {
            dt_hint: self.dt_hint,
            lanes: self.lanes.clone(),
            conflict_zones: self.conflict_zones.clone(),
            road_nodes: self.road_nodes.clone(),
        }
    }

    pub fn lane_idx(&self, id: &str) -> Option<usize> {
        self.lane_index.get(id).copied()
    }

    pub fn polyline(&self, lane: usize) -> &Polyline {
        &self.polylines[lane]
    }

    /// Road nodes of `lane`, ordered by arc position.
    pub fn lane_nodes(&self, lane: usize) -> &[usize] {
        &self.nodes_by_lane[lane]
    }

    pub fn are_neighbors(&self, a: usize, b: usize) -> bool {
        let la = &self.lanes[a];
        let idb = &self.lanes[b].lane_id;
        la.left.as_ref() == Some(idb)
            || la.right.as_ref() == Some(idb)
            || self.lanes[b].left.as_ref() == Some(&la.lane_id)
            || self.lanes[b].right.as_ref() == Some(&la.lane_id)
    }

    /// Same lane, or connected through a successor link in either direction.
    pub fn same_flow(&self, a: usize, b: usize) -> bool {
        a == b
            || self.lanes[a].successors.contains(&self.lanes[b].lane_id)
            || self.lanes[b].successors.contains(&self.lanes[a].lane_id)
    }

    /// Finds the lane holding `p`. Among lanes whose corridor contains the
    /// point, ones aligned with `heading` win, then the closest centerline.
    /// Falls back to the nearest centerline with `inside == false`.
    pub fn locate(&self, p: Vec2, heading: Option<f64>) -> Option<LaneFix> {
        let dir = heading.map(|h| Vec2::new(h.cos(), h.sin()));
        let mut best: Option<(bool, bool, f64, LaneFix)> = None;
        for (i, pl) in self.polylines.iter().enumerate() {
            let pr = pl.project(p);
            let inside = pr.dist <= self.lanes[i].width / 2.0 + 1e-9;
            let aligned = dir.is_none_or(|d| d.dot(pr.tangent) > 0.0);
            let fix = LaneFix {
                lane: i,
                s: pr.s,
                d: pr.d,
                tangent: pr.tangent,
                dist: pr.dist,
                inside,
            };
            let better = match &best {
                None => true,
                Some((bi, ba, bd, _)) => {
                    (inside, inside && aligned, -pr.dist) > (*bi, *bi && *ba, -*bd)
                }
            };
            if better {
                best = Some((inside, aligned, pr.dist, fix));
            }
        }
        best.map(|b| b.3)
    }

    pub fn zone(&self, id: &str) -> Option<&ConflictZone> {
        self.conflict_zones.iter().find(|z| z.zone_id == id)
    }
}

fn sample_road_nodes(
    lanes: &[Lane],
    polylines: &[Polyline],
    zones: &[ConflictZone],
    interval: f64,
) -> Vec<RoadNode> {
    let mut out = Vec::new();
    for (lane, pl) in lanes.iter().zip(polylines) {
        let count = (pl.length() / interval + 1e-9).floor() as usize;
        for k in 0..=count {
            let s = k as f64 * interval;
            let (position, _) = pl.at(s);
            let zone_code = zones.iter().find(|z| z.polygon.contains(position)).map(|z| match z.kind {
                ZoneKind::StaticLine => 3,
                ZoneKind::StaticPoint => 4,
            });
            out.push(RoadNode {
                node_id: format!("{}:{k}", lane.lane_id),
                position,
                lane_id: lane.lane_id.clone(),
                arc_position: s,
                node_type: zone_code.unwrap_or_else(|| lane.lane_type.code()),
            });
        }
    }
    out
}
