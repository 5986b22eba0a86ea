//! Seeded synthetic traffic with known ground truth.
//!
//! A [`ScriptSpec`] places actors on a templated map and drives each one
//! through a list of timed phases. Longitudinal motion follows the scripted
//! speed profile along the actor's lane route; lane changes add a smooth
//! lateral offset. Positions are the trapezoidal integral of the analytic
//! velocities, so consecutive samples satisfy
//! `x[k+1] = x[k] + (v[k] + v[k+1]) / 2 * dt` to rounding error when the
//! noise level is zero.

mod scripts;
mod templates;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{Polyline, Vec2};
use crate::ingest::{LaneId, RoadMap, Track, TrackPoint, TrackSet, VehicleId};
use crate::slicing::InteractionType;

pub use scripts::{
    crossing, filtering_corpus, following, labeling_corpus, merge, performance_stream, three_phase,
    PlantKind,
};
pub use templates::{first_crossing, MapTemplate, LANE_WIDTH};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "maneuver", rename_all = "snake_case", deny_unknown_fields)]
pub enum Maneuver {
    /// Hold the current speed.
    Cruise { duration: f64 },
    /// Constant acceleration, m/s^2; speed never drops below zero.
    Accelerate { duration: f64, accel: f64 },
    /// Move into `to`, then continue along `to` and `then`.
    LaneChange {
        duration: f64,
        to: LaneId,
        #[serde(default)]
        then: Vec<LaneId>,
    },
}

impl Maneuver {
    pub fn duration(&self) -> f64 {
        match self {
            Maneuver::Cruise { duration }
            | Maneuver::Accelerate { duration, .. }
            | Maneuver::LaneChange { duration, .. } => *duration,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Vehicle whose scenarios the ground truth describes.
    Ego,
    /// Takes part in a scripted interaction.
    #[default]
    Interactive,
    /// Near an ego but never interacting with it.
    Background,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorScript {
    pub vehicle_id: VehicleId,
    /// Starting lane followed by the successor lanes to drive through.
    pub route: Vec<LaneId>,
    pub start_frame: i64,
    /// Arc position on the route at `start_frame`, meters.
    pub start_s: f64,
    pub speed: f64,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default)]
    pub role: Role,
    pub phases: Vec<Maneuver>,
}

fn default_length() -> f64 {
    4.5
}

fn default_width() -> f64 {
    1.8
}

/// Interaction the script author intends over `[from, to)`, seconds from
/// frame 0. An interval reaching the ego's last frame includes it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedInteraction {
    pub ego: VehicleId,
    pub other: VehicleId,
    pub itype: InteractionType,
    pub from: f64,
    pub to: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedOutlier {
    pub ego: VehicleId,
    pub kind: PlantKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptSpec {
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub map: MapTemplate,
    /// Standard deviation of position noise, meters.
    #[serde(default)]
    pub noise_std: f64,
    pub actors: Vec<ActorScript>,
    #[serde(default)]
    pub interactions: Vec<ScriptedInteraction>,
    #[serde(default)]
    pub planted: Vec<PlantedOutlier>,
}

fn default_dt() -> f64 {
    0.04
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSegment {
    pub ego: VehicleId,
    pub start_frame: i64,
    pub end_frame: i64,
    pub itype: InteractionType,
    pub others: Vec<(VehicleId, InteractionType)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthCounts {
    pub ego: VehicleId,
    pub interactive: usize,
    pub non_interactive: usize,
}

impl TruthCounts {
    pub fn searched(&self) -> usize {
        self.interactive + self.non_interactive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub segments: Vec<TruthSegment>,
    pub interactions: Vec<ScriptedInteraction>,
    pub planted: Vec<PlantedOutlier>,
    pub counts: Vec<TruthCounts>,
}

impl GroundTruth {
    pub fn segments_of<'a>(&'a self, ego: &'a VehicleId) -> impl Iterator<Item = &'a TruthSegment> + 'a {
        self.segments.iter().filter(move |s| &s.ego == ego)
    }

    /// Planted fraction of non-interactive vehicles among all searched ones.
    pub fn non_interactive_proportion(&self) -> f64 {
        let searched: usize = self.counts.iter().map(TruthCounts::searched).sum();
        let non: usize = self.counts.iter().map(|c| c.non_interactive).sum();
        if searched == 0 {
            0.0
        } else {
            non as f64 / searched as f64
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid script: {0}")]
    InvalidScript(String),
}

fn invalid(msg: impl Into<String>) -> SynthError {
    SynthError::InvalidScript(msg.into())
}

/// Concatenated centerlines of a lane route.
struct RoutePath {
    line: Polyline,
    spans: Vec<(f64, LaneId)>,
}

impl RoutePath {
    fn build(map: &RoadMap, route: &[LaneId]) -> Result<RoutePath, SynthError> {
        let mut pts: Vec<Vec2> = Vec::new();
        let mut spans = Vec::new();
        let mut prev: Option<usize> = None;
        for id in route {
            let idx = map.lane_idx(id).ok_or_else(|| invalid(format!("unknown lane {id}")))?;
            let pl = map.polyline(idx);
            match prev {
                None => {
                    spans.push((0.0, id.clone()));
                    pts.extend_from_slice(pl.points());
                }
                Some(p) => {
                    if !map.lanes[p].successors.contains(id) {
                        return Err(invalid(format!("{id} does not succeed {}", map.lanes[p].lane_id)));
                    }
                    let last = *pts.last().unwrap();
                    let join = pl.project(last).s;
                    let (start, _) = pl.at(join);
                    if start.dist(last) > 1e-9 {
                        pts.push(start);
                    }
                    spans.push((Polyline::new(pts.clone()).length(), id.clone()));
                    let mut acc = 0.0;
                    for (i, q) in pl.points().iter().enumerate() {
                        if i > 0 {
                            acc += q.dist(pl.points()[i - 1]);
                        }
                        if acc > join + 1e-9 {
                            pts.push(*q);
                        }
                    }
                }
            }
            prev = Some(idx);
        }
        Ok(RoutePath {
            line: Polyline::new(pts),
            spans,
        })
    }

    fn lane_at(&self, s: f64) -> &LaneId {
        let i = self.spans.partition_point(|(start, _)| *start <= s).saturating_sub(1);
        &self.spans[i].1
    }
}

struct ActiveChange {
    start: f64,
    duration: f64,
    width: f64,
    target: RoutePath,
}

fn simulate(actor: &ActorScript, map: &RoadMap, dt: f64) -> Result<Track, SynthError> {
    if actor.route.is_empty() {
        return Err(invalid(format!("actor {} has an empty route", actor.vehicle_id)));
    }
    if actor.phases.is_empty() {
        return Err(invalid(format!("actor {} has no phases", actor.vehicle_id)));
    }
    if !(actor.length > 0.0 && actor.width > 0.0 && actor.speed >= 0.0) {
        return Err(invalid(format!("actor {} has bad dimensions or speed", actor.vehicle_id)));
    }
    let mut bounds = Vec::with_capacity(actor.phases.len() + 1);
    bounds.push(0.0);
    for p in &actor.phases {
        if !(p.duration() > 0.0) {
            return Err(invalid(format!("actor {}: phase durations must be positive", actor.vehicle_id)));
        }
        bounds.push(bounds.last().unwrap() + p.duration());
    }
    let lifetime = *bounds.last().unwrap();
    let n = (lifetime / dt).round() as usize;
    let phase_at = |tau: f64| bounds[1..].partition_point(|&b| b <= tau + 1e-9).min(actor.phases.len() - 1);

    let speed_at = |tau: f64| {
        actor.phases.iter().zip(&bounds).fold(actor.speed, |v, (p, &b)| match p {
            Maneuver::Accelerate { duration, accel } => (v + accel * (tau - b).clamp(0.0, *duration)).max(0.0),
            _ => v,
        })
    };

    let mut path = RoutePath::build(map, &actor.route)?;
    let mut s = actor.start_s;
    let mut v = actor.speed;
    let (mut pos, _) = path.line.at(s);
    let mut change: Option<ActiveChange> = None;
    let mut points = Vec::with_capacity(n + 1);
    let mut prev_vel: Option<Vec2> = None;
    let mut prev_v = v;

    for k in 0..=n {
        let tau = k as f64 * dt;
        let ph = phase_at(tau);
        if k > 0 {
            v = speed_at(tau);
            s += (prev_v + v) / 2.0 * dt;
        }

        if let Some(c) = &change {
            if tau >= c.start + c.duration - 1e-9 {
                let c = change.take().unwrap();
                s = c.target.line.project(pos).s;
                path = c.target;
            }
        }
        if change.is_none() {
            if let Maneuver::LaneChange { duration, to, then } = &actor.phases[ph] {
                let started = tau >= bounds[ph] - 1e-9 && tau < bounds[ph] + duration - 1e-9;
                if started {
                    let mut route = vec![to.clone()];
                    route.extend(then.iter().cloned());
                    let target = RoutePath::build(map, &route)?;
                    let foot = target.line.project(pos).foot;
                    let width = path.line.project(foot).d;
                    change = Some(ActiveChange {
                        start: bounds[ph],
                        duration: *duration,
                        width,
                        target,
                    });
                }
            }
        }

        let (_, tangent) = path.line.at(s);
        let (d, d_dot) = match &change {
            Some(c) => {
                let u = ((tau - c.start) / c.duration).clamp(0.0, 1.0);
                let two_pi = std::f64::consts::TAU;
                (
                    c.width * (u - (two_pi * u).sin() / two_pi),
                    c.width / c.duration * (1.0 - (two_pi * u).cos()),
                )
            }
            None => (0.0, 0.0),
        };
        let vel = tangent.scale(v) + tangent.perp().scale(d_dot);
        if let Some(pv) = prev_vel {
            pos = pos + (pv + vel).scale(dt / 2.0);
        }
        let lane_id = match &change {
            Some(c) if d.abs() > c.width.abs() / 2.0 => c.target.lane_at(c.target.line.project(pos).s).clone(),
            _ => path.lane_at(s).clone(),
        };
        let heading = if vel.norm() > 0.0 { vel.y.atan2(vel.x) } else { tangent.y.atan2(tangent.x) };
        let frame = actor.start_frame + k as i64;
        points.push(TrackPoint {
            frame,
            t: frame as f64 * dt,
            x: pos.x,
            y: pos.y,
            vx: vel.x,
            vy: vel.y,
            heading,
            lane_id: Some(lane_id),
        });
        prev_vel = Some(vel);
        prev_v = v;
    }
    Ok(Track {
        vehicle_id: actor.vehicle_id.clone(),
        length: actor.length,
        width: actor.width,
        points,
    })
}

fn to_frame(t: f64, dt: f64) -> i64 {
    (t / dt).round() as i64
}

fn truth(spec: &ScriptSpec, ts: &TrackSet) -> Result<GroundTruth, SynthError> {
    let roles: HashMap<&VehicleId, Role> = spec.actors.iter().map(|a| (&a.vehicle_id, a.role)).collect();
    for i in &spec.interactions {
        for id in [&i.ego, &i.other] {
            if !roles.contains_key(id) {
                return Err(invalid(format!("interaction names unknown vehicle {id}")));
            }
        }
        if !(i.from <= i.to) {
            return Err(invalid(format!("interaction {}-{} ends before it starts", i.ego, i.other)));
        }
    }
    for p in &spec.planted {
        if roles.get(&p.ego) != Some(&Role::Ego) {
            return Err(invalid(format!("planted vehicle {} is not an ego", p.ego)));
        }
    }

    let mut segments = Vec::new();
    let mut counts = Vec::new();
    for actor in spec.actors.iter().filter(|a| a.role == Role::Ego) {
        let track = &ts.tracks[&actor.vehicle_id];
        let (f0, f1) = (track.first_frame().unwrap(), track.last_frame().unwrap());
        let mine: Vec<&ScriptedInteraction> = spec.interactions.iter().filter(|i| i.ego == actor.vehicle_id).collect();
        let active = |f: i64| -> BTreeSet<(VehicleId, InteractionType)> {
            mine.iter()
                .filter(|i| {
                    let end = to_frame(i.to, spec.dt);
                    to_frame(i.from, spec.dt) <= f && (f < end || end >= f1)
                })
                .map(|i| (i.other.clone(), i.itype))
                .collect()
        };
        let mut start = f0;
        let mut current = active(f0);
        for f in f0 + 1..=f1 + 1 {
            let next = if f <= f1 { active(f) } else { BTreeSet::new() };
            if f > f1 || next != current {
                let itype = current
                    .iter()
                    .map(|(_, t)| *t)
                    .max_by_key(|t| t.priority())
                    .unwrap_or(InteractionType::FreeDriving);
                segments.push(TruthSegment {
                    ego: actor.vehicle_id.clone(),
                    start_frame: start,
                    end_frame: f - 1,
                    itype,
                    others: current.iter().cloned().collect(),
                });
                start = f;
                current = next;
            }
        }
        let interactive: BTreeSet<&VehicleId> = mine.iter().map(|i| &i.other).collect();
        let non_interactive = spec
            .actors
            .iter()
            .filter(|a| a.role == Role::Background)
            .filter(|a| {
                let t = &ts.tracks[&a.vehicle_id];
                t.first_frame().unwrap() <= f1 && t.last_frame().unwrap() >= f0
            })
            .count();
        counts.push(TruthCounts {
            ego: actor.vehicle_id.clone(),
            interactive: interactive.len(),
            non_interactive,
        });
    }
    Ok(GroundTruth {
        segments,
        interactions: spec.interactions.clone(),
        planted: spec.planted.clone(),
        counts,
    })
}

/// Runs a script. The same spec always yields identical output.
pub fn generate(spec: &ScriptSpec) -> Result<(TrackSet, RoadMap, GroundTruth), SynthError> {
    if !(spec.dt > 0.0) || !(spec.noise_std >= 0.0) {
        return Err(invalid("dt must be positive and noise_std non-negative"));
    }
    let map = RoadMap::from_doc(spec.map.build(), 10.0).map_err(|e| invalid(e.to_string()))?;
    let mut ids = BTreeSet::new();
    let mut ts = TrackSet::new(spec.dt);
    for actor in &spec.actors {
        if !ids.insert(&actor.vehicle_id) {
            return Err(invalid(format!("duplicate vehicle id {}", actor.vehicle_id)));
        }
        ts.insert(simulate(actor, &map, spec.dt)?);
    }
    if spec.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let noise = Normal::new(0.0, spec.noise_std).expect("finite std");
        let order: BTreeMap<usize, &VehicleId> = spec.actors.iter().map(|a| &a.vehicle_id).enumerate().collect();
        for id in order.values() {
            let track = ts.tracks.get_mut(*id).unwrap();
            for p in &mut track.points {
                p.x += noise.sample(&mut rng);
                p.y += noise.sample(&mut rng);
            }
        }
    }
    let gt = truth(spec, &ts)?;
    Ok((ts, map, gt))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(phases: Vec<Maneuver>) -> ScriptSpec {
        ScriptSpec {
            seed: 1,
            dt: 0.04,
            map: MapTemplate::StraightMultilane { lanes: 3, length: 2000.0 },
            noise_std: 0.0,
            actors: vec![ActorScript {
                vehicle_id: "1".into(),
                route: vec!["1".into()],
                start_frame: 0,
                start_s: 50.0,
                speed: 20.0,
                length: 4.5,
                width: 1.8,
                role: Role::Ego,
                phases,
            }],
            interactions: vec![],
            planted: vec![],
        }
    }

    fn max_step_residual(track: &Track, dt: f64) -> f64 {
        track
            .points
            .windows(2)
            .map(|w| {
                let ex = w[0].x + (w[0].vx + w[1].vx) / 2.0 * dt - w[1].x;
                let ey = w[0].y + (w[0].vy + w[1].vy) / 2.0 * dt - w[1].y;
                ex.hypot(ey)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn constant_velocity_actor_is_free_driving() {
        let (ts, _, gt) = generate(&single(vec![Maneuver::Cruise { duration: 10.0 }])).unwrap();
        let track = &ts.tracks[&VehicleId::from("1")];
        assert_eq!(track.points.len(), 251);
        let last = track.points.last().unwrap();
        assert!((last.x - 250.0).abs() < 1e-9);
        assert_eq!(last.y, 0.0);
        assert_eq!(gt.segments.len(), 1);
        assert_eq!(gt.segments[0].itype, InteractionType::FreeDriving);
        assert_eq!((gt.segments[0].start_frame, gt.segments[0].end_frame), (0, 250));
    }

    #[test]
    fn lane_change_moves_one_lane_and_stays_consistent() {
        let spec = single(vec![
            Maneuver::Cruise { duration: 2.0 },
            Maneuver::LaneChange { duration: 4.0, to: "2".into(), then: vec![] },
            Maneuver::Accelerate { duration: 2.0, accel: -2.0 },
        ]);
        let (ts, _, _) = generate(&spec).unwrap();
        let track = &ts.tracks[&VehicleId::from("1")];
        let last = track.points.last().unwrap();
        assert!((last.y - 3.5).abs() < 1e-3, "{}", last.y);
        assert_eq!(last.lane_id.as_deref(), Some("2"));
        assert!((last.vx - 16.0).abs() < 1e-9);
        assert!(max_step_residual(track, 0.04) < 1e-9);
        let peak = track.points.iter().map(|p| p.vy).fold(0.0, f64::max);
        assert!((peak - 2.0 * 3.5 / 4.0).abs() < 1e-2);
    }

    #[test]
    fn same_seed_same_output() {
        let mut spec = single(vec![Maneuver::Cruise { duration: 3.0 }]);
        spec.noise_std = 0.1;
        let a = generate(&spec).unwrap().0;
        let b = generate(&spec).unwrap().0;
        assert_eq!(a, b);
        spec.seed = 2;
        assert_ne!(generate(&spec).unwrap().0, a);
    }

    #[test]
    fn bad_scripts_rejected() {
        let mut spec = single(vec![Maneuver::Cruise { duration: 1.0 }]);
        spec.actors[0].route = vec!["9".into()];
        assert!(generate(&spec).is_err());
        let spec = single(vec![Maneuver::Cruise { duration: -1.0 }]);
        assert!(generate(&spec).is_err());
        let mut spec = single(vec![Maneuver::Cruise { duration: 1.0 }]);
        spec.interactions.push(ScriptedInteraction {
            ego: "1".into(),
            other: "7".into(),
            itype: InteractionType::FollowingLine,
            from: 0.0,
            to: 1.0,
        });
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = three_phase(4);
        let text = serde_json::to_string(&spec).unwrap();
        let back: ScriptSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}
