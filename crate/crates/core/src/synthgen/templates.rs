use serde::{Deserialize, Serialize};

use crate::geometry::{segments_intersect, Polygon, Polyline, Vec2};
use crate::ingest::{ConflictZone, Lane, LaneType, RoadMapDoc, ZoneKind};

pub const LANE_WIDTH: f64 = 3.5;

/// Road layout a script runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "template", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapTemplate {
    /// Parallel eastbound lanes "1".."n", lane k centred at y = (k-1) * 3.5.
    StraightMultilane { lanes: usize, length: f64 },
    /// Two mainline lanes "1", "2" plus on-ramp "R" feeding lane "1"
    /// through a parallel acceleration section at x in [250, 400].
    RampMerge { length: f64 },
    /// Four arms W, S, E, N with one lane per direction ("W_in", "W_out",
    /// ...) and connectors "W_E", "W_N", ... across a junction square.
    FourWayIntersection { arm_length: f64 },
}

impl MapTemplate {
    pub fn build(&self) -> RoadMapDoc {
        match *self {
            MapTemplate::StraightMultilane { lanes, length } => straight(lanes, length),
            MapTemplate::RampMerge { length } => ramp_merge(length),
            MapTemplate::FourWayIntersection { arm_length } => four_way(arm_length),
        }
    }
}

fn lane(id: &str, pts: Vec<Vec2>) -> Lane {
    Lane {
        lane_id: id.to_owned(),
        centerline: pts,
        direction_sign: 1,
        left: None,
        right: None,
        successors: vec![],
        lane_type: LaneType::Normal,
        width: LANE_WIDTH,
    }
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
    Polygon(vec![
        Vec2::new(x0, y0),
        Vec2::new(x1, y0),
        Vec2::new(x1, y1),
        Vec2::new(x0, y1),
    ])
}

fn straight(n: usize, length: f64) -> RoadMapDoc {
    let lanes = (1..=n)
        .map(|k| {
            let y = (k - 1) as f64 * LANE_WIDTH;
            let mut l = lane(&k.to_string(), vec![Vec2::new(0.0, y), Vec2::new(length, y)]);
            l.left = (k < n).then(|| (k + 1).to_string());
            l.right = (k > 1).then(|| (k - 1).to_string());
            l
        })
        .collect();
    RoadMapDoc {
        dt_hint: Some(0.04),
        lanes,
        conflict_zones: vec![],
        road_nodes: vec![],
    }
}

fn ramp_merge(length: f64) -> RoadMapDoc {
    let mut doc = straight(2, length);
    let mut ramp = lane(
        "R",
        vec![Vec2::new(100.0, -40.0), Vec2::new(250.0, -3.5), Vec2::new(400.0, -3.5)],
    );
    ramp.lane_type = LaneType::Ramp;
    ramp.successors = vec!["1".into()];
    doc.lanes.push(ramp);
    doc.conflict_zones.push(ConflictZone {
        zone_id: "merge".into(),
        polygon: rect(250.0, -5.25, 420.0, 1.75),
        kind: ZoneKind::StaticLine,
    });
    doc
}

const JUNCTION_HALF: f64 = 7.0;
const ARMS: [&str; 4] = ["W", "S", "E", "N"];

fn rot(p: Vec2, k: usize) -> Vec2 {
    (0..k % 4).fold(p, |q, _| Vec2::new(-q.y, q.x))
}

fn arc(center: Vec2, radius: f64, from: f64, to: f64, steps: usize) -> Vec<Vec2> {
    (0..=steps)
        .map(|i| {
            let a = from + (to - from) * i as f64 / steps as f64;
            center + Vec2::new(a.cos(), a.sin()).scale(radius)
        })
        .collect()
}

fn four_way(arm: f64) -> RoadMapDoc {
    use std::f64::consts::FRAC_PI_2;
    let h = JUNCTION_HALF;
    let o = LANE_WIDTH / 2.0;
    let far = h + arm;
    let mut lanes = Vec::new();
    // Geometry for the west arm (travelling east); the other arms are rotations.
    let base_in = vec![Vec2::new(-far, -o), Vec2::new(-h, -o)];
    let base_out = vec![Vec2::new(-h, o), Vec2::new(-far, o)];
    let straight = vec![Vec2::new(-h, -o), Vec2::new(h, -o)];
    let left = arc(Vec2::new(-h, h), h + o, -FRAC_PI_2, 0.0, 16);
    let right = arc(Vec2::new(-h, -h), h - o, FRAC_PI_2, 0.0, 16);
    let mut connectors: Vec<Vec<Vec2>> = Vec::new();
    for (k, arm_id) in ARMS.iter().enumerate() {
        let r = |pts: &[Vec2]| pts.iter().map(|&p| rot(p, k)).collect::<Vec<_>>();
        let mut inbound = lane(&format!("{arm_id}_in"), r(&base_in));
        inbound.lane_type = LaneType::IntersectionApproach;
        let mut succ = Vec::new();
        for (turn, pts) in [(2, &straight), (3, &left), (1, &right)] {
            let target = ARMS[(k + turn) % 4];
            let id = format!("{arm_id}_{target}");
            let mut c = lane(&id, r(pts));
            c.lane_type = LaneType::IntersectionApproach;
            c.successors = vec![format!("{target}_out")];
            connectors.push(c.centerline.clone());
            succ.push(id);
            lanes.push(c);
        }
        inbound.successors = succ;
        lanes.push(inbound);
        lanes.push(lane(&format!("{arm_id}_out"), r(&base_out)));
    }
    lanes.sort_by(|a, b| a.lane_id.cmp(&b.lane_id));

    // Conflict area: bounding box of all connector crossings, padded by half a lane.
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (i, a) in connectors.iter().enumerate() {
        for b in &connectors[i + 1..] {
            for p in crossings(a, b) {
                lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
            }
        }
    }
    let zone = rect(lo.x - o, lo.y - o, hi.x + o, hi.y + o);
    RoadMapDoc {
        dt_hint: Some(0.04),
        lanes,
        conflict_zones: vec![ConflictZone {
            zone_id: "junction".into(),
            polygon: zone,
            kind: ZoneKind::StaticPoint,
        }],
        road_nodes: vec![],
    }
}

/// Proper crossing points of two polylines; shared endpoints are skipped.
fn crossings(a: &[Vec2], b: &[Vec2]) -> Vec<Vec2> {
    let mut out = Vec::new();
    for sa in a.windows(2) {
        for sb in b.windows(2) {
            let shared = [sa[0], sa[1]].iter().any(|p| p.dist(sb[0]) < 1e-9 || p.dist(sb[1]) < 1e-9);
            if shared || !segments_intersect(sa[0], sa[1], sb[0], sb[1]) {
                continue;
            }
            let d = sa[1] - sa[0];
            let e = sb[1] - sb[0];
            let den = d.cross(e);
            if den.abs() < 1e-12 {
                continue;
            }
            let t = (sb[0] - sa[0]).cross(e) / den;
            out.push(sa[0] + d.scale(t));
        }
    }
    out
}

/// Arc length of the point where `a` first crosses `b`, if any.
pub fn first_crossing(a: &Polyline, b: &Polyline) -> Option<f64> {
    crossings(a.points(), b.points())
        .into_iter()
        .map(|p| a.project(p).s)
        .min_by(f64::total_cmp)
}
