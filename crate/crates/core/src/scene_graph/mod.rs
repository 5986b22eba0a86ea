//! Per-frame scene graphs and their computation trees.
//!
//! A [`SceneGraph`] holds the ego, the segment's interactive vehicles and
//! the road nodes they occupy or approach. [`expand_tree`] unrolls it from
//! the ego into a V2V tree (vehicles only) or a V2N tree (vehicles and road
//! nodes on alternating levels).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::ingest::{RoadMap, TrackSet, VehicleId};
use crate::slicing::{AtomScenario, InteractionType};
use crate::tree_metric::{node_feature, road_feature, FeatureVec, MetricConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleNode {
    pub id: VehicleId,
    pub pos: Vec2,
    pub speed: f64,
    pub heading: f64,
    pub lane: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNodeRef {
    /// Index into the map's road nodes.
    pub index: usize,
    pub node_id: String,
    pub pos: Vec2,
    pub node_type: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum V2VRelation {
    Following,
    Conflict,
    Adjacent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum V2NRelation {
    On,
    Approaching,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct V2VEdge {
    pub a: usize,
    pub b: usize,
    pub relation: V2VRelation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct V2NEdge {
    pub vehicle: usize,
    pub road: usize,
    pub relation: V2NRelation,
}

/// Attributed scene at one frame. Vehicles are sorted by id and road nodes
/// by map index; `ego` indexes into `vehicles`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub frame: i64,
    pub ego: usize,
    pub vehicles: Vec<VehicleNode>,
    pub roads: Vec<RoadNodeRef>,
    pub v2v: Vec<V2VEdge>,
    pub v2n: Vec<V2NEdge>,
}

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("frame {frame} outside segment [{start}, {end}]")]
    FrameOutOfSpan { frame: i64, start: i64, end: i64 },
    #[error("vehicle {0} has no sample at frame {1}")]
    MissingVehicle(VehicleId, i64),
}

fn v2v_relation(itype: InteractionType) -> V2VRelation {
    match itype {
        InteractionType::FollowingLine => V2VRelation::Following,
        _ => V2VRelation::Conflict,
    }
}

/// "on" node: the lane node nearest the vehicle. "approaching": the next
/// node ahead within `reach` meters, following successor lanes if needed.
fn road_links(map: &RoadMap, lane: usize, s: f64, reach: f64) -> (Option<usize>, Option<usize>) {
    let nodes = map.lane_nodes(lane);
    let arc = |k: usize| map.road_nodes[k].arc_position;
    let on = nodes
        .iter()
        .copied()
        .min_by(|&a, &b| (arc(a) - s).abs().total_cmp(&(arc(b) - s).abs()).then(a.cmp(&b)));
    let forward = map.lanes[lane].direction_sign >= 0;
    let ahead = |k: usize| if forward { arc(k) - s } else { s - arc(k) };
    let mut next = nodes
        .iter()
        .copied()
        .filter(|&k| Some(k) != on && ahead(k) > 0.0 && ahead(k) <= reach)
        .min_by(|&a, &b| ahead(a).total_cmp(&ahead(b)).then(a.cmp(&b)));
    if next.is_none() && forward {
        let rest = map.polyline(lane).length() - s;
        next = map.lanes[lane]
            .successors
            .iter()
            .filter_map(|id| map.lane_idx(id))
            .flat_map(|l| map.lane_nodes(l).iter().copied())
            .filter(|&k| Some(k) != on && rest + arc(k) <= reach)
            .min_by(|&a, &b| arc(a).total_cmp(&arc(b)).then(a.cmp(&b)));
    }
    (on, next)
}

/// Scene graph of `atom` at `frame`: the ego plus the segment's interactive
/// vehicles, V2V edges from the segment's records and pairwise proximity,
/// V2N edges to nearby road nodes.
pub fn build_scene(
    atom: &AtomScenario,
    ts: &TrackSet,
    map: &RoadMap,
    frame: i64,
    cfg: &MetricConfig,
) -> Result<SceneGraph, SceneError> {
    if !atom.contains_frame(frame) {
        return Err(SceneError::FrameOutOfSpan {
            frame,
            start: atom.start_frame,
            end: atom.end_frame,
        });
    }
    let mut ids: Vec<&VehicleId> = std::iter::once(&atom.ego_id).chain(atom.interactive.iter()).collect();
    ids.sort();
    ids.dedup();
    let mut vehicles = Vec::with_capacity(ids.len());
    let mut fixes = Vec::with_capacity(ids.len());
    for id in ids {
        let p = ts
            .point(id, frame)
            .ok_or_else(|| SceneError::MissingVehicle(id.clone(), frame))?;
        let heading = (p.speed() > 0.5).then_some(p.heading);
        let fix = map.locate(p.pos(), heading).filter(|f| f.inside);
        vehicles.push(VehicleNode {
            id: id.clone(),
            pos: p.pos(),
            speed: p.speed(),
            heading: p.heading,
            lane: fix.map(|f| f.lane),
        });
        fixes.push(fix);
    }
    let ego = vehicles.iter().position(|v| v.id == atom.ego_id).expect("ego listed");

    let mut v2v = Vec::new();
    for (i, v) in vehicles.iter().enumerate() {
        if i == ego {
            continue;
        }
        let rel = atom
            .records
            .iter()
            .filter(|r| r.other_id == v.id)
            .map(|r| r.itype)
            .max_by_key(|t| t.priority())
            .map(v2v_relation)
            .unwrap_or(V2VRelation::Adjacent);
        v2v.push(V2VEdge {
            a: ego.min(i),
            b: ego.max(i),
            relation: rel,
        });
    }
    for i in 0..vehicles.len() {
        for j in i + 1..vehicles.len() {
            if i == ego || j == ego || vehicles[i].pos.dist(vehicles[j].pos) > cfg.neighbor_radius {
                continue;
            }
            let same = match (vehicles[i].lane, vehicles[j].lane) {
                (Some(a), Some(b)) => map.same_flow(a, b),
                _ => false,
            };
            v2v.push(V2VEdge {
                a: i,
                b: j,
                relation: if same { V2VRelation::Following } else { V2VRelation::Adjacent },
            });
        }
    }
    v2v.sort_by_key(|e| (e.a, e.b));

    let mut links: Vec<(usize, usize, V2NRelation)> = Vec::new();
    for (i, fix) in fixes.iter().enumerate() {
        let Some(f) = fix else { continue };
        let (on, next) = road_links(map, f.lane, f.s, cfg.approach_distance);
        if let Some(k) = on {
            links.push((i, k, V2NRelation::On));
        }
        if let Some(k) = next {
            links.push((i, k, V2NRelation::Approaching));
        }
    }
    let mut road_idx: Vec<usize> = links.iter().map(|l| l.1).collect();
    road_idx.sort_unstable();
    road_idx.dedup();
    let roads = road_idx
        .iter()
        .map(|&k| {
            let n = &map.road_nodes[k];
            RoadNodeRef {
                index: k,
                node_id: n.node_id.clone(),
                pos: n.position,
                node_type: n.node_type,
            }
        })
        .collect();
    let mut v2n: Vec<V2NEdge> = links
        .into_iter()
        .map(|(vehicle, k, relation)| V2NEdge {
            vehicle,
            road: road_idx.binary_search(&k).unwrap(),
            relation,
        })
        .collect();
    v2n.sort_by_key(|e| (e.vehicle, e.road));

    Ok(SceneGraph {
        frame,
        ego,
        vehicles,
        roads,
        v2v,
        v2n,
    })
}

impl SceneGraph {
    fn vehicle_neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .v2v
            .iter()
            .filter_map(|e| {
                if e.a == v {
                    Some(e.b)
                } else if e.b == v {
                    Some(e.a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn roads_of(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.v2n.iter().filter(|e| e.vehicle == v).map(|e| e.road).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn vehicles_on(&self, r: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.v2n.iter().filter(|e| e.road == r).map(|e| e.vehicle).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// DOT rendering for inspection.
    pub fn to_dot(&self) -> String {
        let mut s = format!("graph scene_{} {{\n", self.frame);
        for (i, v) in self.vehicles.iter().enumerate() {
            let shape = if i == self.ego { "doublecircle" } else { "circle" };
            let _ = writeln!(s, "  v{i} [label=\"{}\" shape={shape}];", v.id);
        }
        for (i, r) in self.roads.iter().enumerate() {
            let _ = writeln!(s, "  r{i} [label=\"{}\" shape=box];", r.node_id);
        }
        for e in &self.v2v {
            let _ = writeln!(s, "  v{} -- v{} [label={:?}];", e.a, e.b, format!("{:?}", e.relation).to_lowercase());
        }
        for e in &self.v2n {
            let _ = writeln!(
                s,
                "  v{} -- r{} [style=dashed label={:?}];",
                e.vehicle,
                e.road,
                format!("{:?}", e.relation).to_lowercase()
            );
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeKind {
    V2V,
    V2N,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeRef {
    Vehicle(usize),
    Road(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: FeatureVec,
    pub children: Vec<usize>,
    pub blank: bool,
    /// 1 for the root.
    pub level: usize,
    pub source: Option<NodeRef>,
}

/// Tree unrolled from the ego. Nodes live in an arena with the root at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputationTree {
    pub kind: TreeKind,
    pub depth: usize,
    pub nodes: Vec<TreeNode>,
}

impl ComputationTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn level_counts(&self) -> Vec<usize> {
        let mut out = vec![0; self.depth];
        for n in &self.nodes {
            out[n.level - 1] += 1;
        }
        out
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph tree {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let label = match n.source {
                Some(NodeRef::Vehicle(v)) => format!("v{v}"),
                Some(NodeRef::Road(r)) => format!("r{r}"),
                None => "blank".into(),
            };
            let _ = writeln!(
                s,
                "  n{i} [label=\"{label} ({:.3}, {:.3}, {:.3})\"];",
                n.feature[0], n.feature[1], n.feature[2]
            );
            for c in &n.children {
                let _ = writeln!(s, "  n{i} -> n{c};");
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Breadth expansion from the ego to `depth` levels. V2V trees follow
/// vehicle relations; V2N trees alternate vehicle and road levels. Children
/// are ordered by node id and never include the node's parent. Vehicle
/// features are taken relative to the nearest vehicle ancestor; road node
/// features relative to the parent vehicle.
pub fn expand_tree(g: &SceneGraph, kind: TreeKind, depth: usize, cfg: &MetricConfig) -> ComputationTree {
    assert!(depth >= 1, "tree depth must be at least 1");
    let mut nodes = vec![TreeNode {
        feature: [0.0; 3],
        children: vec![],
        blank: false,
        level: 1,
        source: Some(NodeRef::Vehicle(g.ego)),
    }];
    // (arena index, parent arena index, nearest vehicle ancestor graph index)
    let mut frontier: Vec<(usize, Option<usize>, usize)> = vec![(0, None, g.ego)];
    for level in 2..=depth {
        let mut next = Vec::new();
        for &(at, parent, anchor) in &frontier {
            let here = nodes[at].source.unwrap();
            let parent_ref = parent.and_then(|p| nodes[p].source);
            let kids: Vec<NodeRef> = match (kind, here) {
                (TreeKind::V2V, NodeRef::Vehicle(v)) => g.vehicle_neighbors(v).into_iter().map(NodeRef::Vehicle).collect(),
                (TreeKind::V2N, NodeRef::Vehicle(v)) => g.roads_of(v).into_iter().map(NodeRef::Road).collect(),
                (TreeKind::V2N, NodeRef::Road(r)) => g.vehicles_on(r).into_iter().map(NodeRef::Vehicle).collect(),
                (TreeKind::V2V, NodeRef::Road(_)) => vec![],
            };
            for k in kids.into_iter().filter(|k| Some(*k) != parent_ref) {
                let base = &g.vehicles[anchor];
                let (feature, new_anchor) = match k {
                    NodeRef::Vehicle(v) => {
                        let veh = &g.vehicles[v];
                        (node_feature(veh.speed, base.speed, veh.pos.dist(base.pos), cfg), v)
                    }
                    NodeRef::Road(r) => {
                        let road = &g.roads[r];
                        (road_feature(road.pos.dist(base.pos), road.node_type, cfg), anchor)
                    }
                };
                let idx = nodes.len();
                nodes.push(TreeNode {
                    feature,
                    children: vec![],
                    blank: false,
                    level,
                    source: Some(k),
                });
                nodes[at].children.push(idx);
                next.push((idx, Some(at), new_anchor));
            }
        }
        frontier = next;
    }
    ComputationTree { kind, depth, nodes }
}

/// Pads the shorter list with blanks (`None`) to the longer list's length.
pub fn pad_blank<T: Clone>(a: &[T], b: &[T]) -> (Vec<Option<T>>, Vec<Option<T>>) {
    let n = a.len().max(b.len());
    let pad = |xs: &[T]| {
        let mut v: Vec<Option<T>> = xs.iter().cloned().map(Some).collect();
        v.resize(n, None);
        v
    };
    (pad(a), pad(b))
}
