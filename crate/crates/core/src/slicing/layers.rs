use std::collections::{BTreeMap, HashMap, VecDeque};

use rayon::prelude::*;

use super::merge::{merge_frames, FrameRecord, FrameRecords};
use super::{AtomScenario, InteractionType, SliceConfig, SliceError};
use crate::geometry::{heading_diff, Vec2};
use crate::ingest::{LaneFix, LaneType, RoadMap, Track, TrackPoint, TrackSet, VehicleId, ZoneKind};

/// Per-track lookups shared by all egos.
struct TrackPrep {
    first: i64,
    fixes: Vec<Option<LaneFix>>,
    /// Flattened `(lane, s_min, s_max)` of inside fixes over `[i, i + H]`.
    lane_ranges: Vec<(u32, f64, f64)>,
    lane_offsets: Vec<u32>,
    /// Zones entered over `[i, i + H]`.
    future_zones: Vec<u128>,
    /// `zone_entry[z][i]`: first index `>= i` inside zone `z`.
    zone_entry: Vec<Vec<u32>>,
    zone_context: Vec<bool>,
}

impl TrackPrep {
    fn future_lanes(&self, i: usize) -> &[(u32, f64, f64)] {
        &self.lane_ranges[self.lane_offsets[i] as usize..self.lane_offsets[i + 1] as usize]
    }
}

/// Outcome of the time-filter layer at one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeFilterResult {
    pub active: bool,
    pub onset: Option<i64>,
    pub offset: Option<i64>,
}

/// A vehicle kept by the yes/no filter with its provisional type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub other_id: VehicleId,
    pub itype: InteractionType,
    pub zone_id: Option<String>,
}

/// Slicing context: track set, map and config plus precomputed lane fixes,
/// future lane ranges and zone occupancy for every track.
pub struct Slicer<'a> {
    map: &'a RoadMap,
    cfg: SliceConfig,
    dt: f64,
    ids: Vec<VehicleId>,
    index: HashMap<VehicleId, usize>,
    tracks: Vec<&'a Track>,
    prep: Vec<TrackPrep>,
    frame0: i64,
    by_frame: Vec<Vec<u32>>,
    window: usize,
}

fn forward_extrema(vals: &[f64], h: usize) -> Vec<(f64, f64)> {
    let n = vals.len();
    let mut out = Vec::with_capacity(n);
    let mut mins: VecDeque<usize> = VecDeque::new();
    let mut maxs: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..n {
        let end = (i + h).min(n - 1);
        while next <= end {
            let v = vals[next];
            if !v.is_nan() {
                while mins.back().is_some_and(|&j| vals[j] >= v) {
                    mins.pop_back();
                }
                mins.push_back(next);
                while maxs.back().is_some_and(|&j| vals[j] <= v) {
                    maxs.pop_back();
                }
                maxs.push_back(next);
            }
            next += 1;
        }
        while mins.front().is_some_and(|&j| j < i) {
            mins.pop_front();
        }
        while maxs.front().is_some_and(|&j| j < i) {
            maxs.pop_front();
        }
        match (mins.front(), maxs.front()) {
            (Some(&a), Some(&b)) => out.push((vals[a], vals[b])),
            _ => out.push((f64::NAN, f64::NAN)),
        }
    }
    out
}

fn point_heading(p: &TrackPoint) -> Option<f64> {
    (p.speed() > 0.5).then_some(p.heading)
}

fn prepare(track: &Track, map: &RoadMap, cfg: &SliceConfig, h: usize, dt: f64) -> TrackPrep {
    let n = track.points.len();
    let fixes: Vec<Option<LaneFix>> = track
        .points
        .iter()
        .map(|p| map.locate(p.pos(), point_heading(p)))
        .collect();

    let mut lanes: Vec<usize> = fixes.iter().flatten().filter(|f| f.inside).map(|f| f.lane).collect();
    lanes.sort_unstable();
    lanes.dedup();
    let per_lane: Vec<Vec<(f64, f64)>> = lanes
        .iter()
        .map(|&l| {
            let vals: Vec<f64> = fixes
                .iter()
                .map(|f| match f {
                    Some(f) if f.inside && f.lane == l => f.s,
                    _ => f64::NAN,
                })
                .collect();
            forward_extrema(&vals, h)
        })
        .collect();
    // Horizons cut off by the track end continue at the last lane speed.
    let tail = fixes.last().copied().flatten().filter(|f| f.inside).map(|f| {
        let p = &track.points[n - 1];
        (f.lane, f.s, p.vel().dot(f.tangent))
    });
    let mut lane_ranges = Vec::new();
    let mut lane_offsets = Vec::with_capacity(n + 1);
    lane_offsets.push(0);
    for i in 0..n {
        let missing = (i + h).saturating_sub(n - 1);
        for (k, &l) in lanes.iter().enumerate() {
            let (mut a, mut b) = per_lane[k][i];
            if let Some((_, s, v)) = tail.filter(|t| missing > 0 && t.0 == l) {
                let reach = s + v * missing as f64 * dt;
                a = if a.is_nan() { s.min(reach) } else { a.min(reach) };
                b = if b.is_nan() { s.max(reach) } else { b.max(reach) };
            }
            if !a.is_nan() {
                lane_ranges.push((l as u32, a, b));
            }
        }
        lane_offsets.push(lane_ranges.len() as u32);
    }

    let zones = &map.conflict_zones;
    let mut zone_entry = Vec::with_capacity(zones.len());
    let mut future_zones = vec![0u128; n];
    let mut zone_context = vec![false; n];
    for i in 0..n {
        let off_normal = fixes[i].is_some_and(|f| f.inside && map.lanes[f.lane].lane_type != LaneType::Normal);
        zone_context[i] = off_normal;
    }
    for (z, zone) in zones.iter().enumerate() {
        let mut entry = vec![u32::MAX; n];
        let mut next = u32::MAX;
        for i in (0..n).rev() {
            let p = track.points[i].pos();
            let dist = zone.polygon.distance(p);
            if dist == 0.0 {
                next = i as u32;
            }
            if dist <= cfg.zone_context_distance {
                zone_context[i] = true;
            }
            entry[i] = next;
            if next != u32::MAX && (next as usize) <= i + h {
                future_zones[i] |= 1u128 << z;
            }
        }
        zone_entry.push(entry);
    }
    TrackPrep {
        first: track.first_frame().unwrap_or(0),
        fixes,
        lane_ranges,
        lane_offsets,
        future_zones,
        zone_entry,
        zone_context,
    }
}

impl<'a> Slicer<'a> {
    pub fn new(ts: &'a TrackSet, map: &'a RoadMap, cfg: &SliceConfig) -> Result<Self, SliceError> {
        cfg.check()?;
        if map.conflict_zones.len() > 128 {
            return Err(SliceError::TooManyZones(map.conflict_zones.len()));
        }
        for t in ts.tracks.values() {
            let contiguous = t.points.windows(2).all(|w| w[1].frame == w[0].frame + 1);
            if t.points.is_empty() || !contiguous {
                return Err(SliceError::NonUniformTrack(t.vehicle_id.clone()));
            }
        }
        let h = (cfg.horizon / ts.dt).round().max(0.0) as usize;
        let tracks: Vec<&Track> = ts.tracks.values().collect();
        let ids: Vec<VehicleId> = tracks.iter().map(|t| t.vehicle_id.clone()).collect();
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let prep = tracks.par_iter().map(|t| prepare(t, map, cfg, h, ts.dt)).collect();
        let (frame0, frame1) = ts.frame_range().unwrap_or((0, -1));
        let mut by_frame = vec![Vec::new(); (frame1 - frame0 + 1).max(0) as usize];
        for (k, t) in tracks.iter().enumerate() {
            for p in &t.points {
                by_frame[(p.frame - frame0) as usize].push(k as u32);
            }
        }
        Ok(Slicer {
            map,
            cfg: cfg.clone(),
            dt: ts.dt,
            ids,
            index,
            tracks,
            prep,
            frame0,
            by_frame,
            window: cfg.window_samples(ts.dt),
        })
    }

    pub fn config(&self) -> &SliceConfig {
        &self.cfg
    }

    pub fn vehicle_ids(&self) -> &[VehicleId] {
        &self.ids
    }

    fn idx(&self, id: &VehicleId) -> Result<usize, SliceError> {
        self.index.get(id).copied().ok_or_else(|| SliceError::UnknownVehicle(id.clone()))
    }

    fn local(&self, k: usize, frame: i64) -> Option<usize> {
        let i = frame - self.prep[k].first;
        (i >= 0 && (i as usize) < self.tracks[k].points.len()).then_some(i as usize)
    }

    fn point(&self, k: usize, frame: i64) -> Option<&TrackPoint> {
        self.local(k, frame).map(|i| &self.tracks[k].points[i])
    }

    fn fix(&self, k: usize, frame: i64) -> Option<LaneFix> {
        self.local(k, frame).and_then(|i| self.prep[k].fixes[i])
    }

    fn present_at(&self, frame: i64) -> &[u32] {
        let i = frame - self.frame0;
        if i < 0 || i as usize >= self.by_frame.len() {
            return &[];
        }
        &self.by_frame[i as usize]
    }

    /// Search layer: vehicles inside the ego-aligned box, plus the radius
    /// scope near conflict zones and on ramp or intersection lanes.
    pub fn search_neighbors(&self, ego: &VehicleId, frame: i64) -> Result<Vec<VehicleId>, SliceError> {
        let e = self.idx(ego)?;
        let found = self.search_idx(e, frame)?;
        Ok(found.into_iter().map(|k| self.ids[k].clone()).collect())
    }

    fn search_idx(&self, e: usize, frame: i64) -> Result<Vec<usize>, SliceError> {
        let i = self.local(e, frame).ok_or(SliceError::EgoAbsent(frame))?;
        let pe = &self.tracks[e].points[i];
        let dir = Vec2::new(pe.heading.cos(), pe.heading.sin());
        let radius = self.prep[e].zone_context[i];
        let c = &self.cfg;
        let mut out = Vec::new();
        for &k in self.present_at(frame) {
            let k = k as usize;
            if k == e {
                continue;
            }
            let po = self.point(k, frame).expect("presence index");
            let rel = po.pos() - pe.pos();
            let lon = rel.dot(dir);
            let lat = rel.dot(dir.perp());
            let in_box = lon >= -c.search_behind && lon <= c.search_ahead && lat.abs() <= c.search_lateral;
            if in_box || (radius && rel.norm() <= c.search_radius) {
                out.push(k);
            }
        }
        Ok(out)
    }

    fn corridors_overlap(&self, e: usize, ie: usize, o: usize, io: usize) -> bool {
        let m = self.cfg.corridor_margin;
        let ego = self.prep[e].future_lanes(ie);
        self.prep[o].future_lanes(io).iter().any(|&(l, a, b)| {
            ego.iter().any(|&(le, c, d)| le == l && a <= d + m && b >= c - m)
        })
    }

    fn shared_zones(&self, e: usize, ie: usize, o: usize, io: usize) -> u128 {
        self.prep[e].future_zones[ie] & self.prep[o].future_zones[io]
    }

    /// Yes/no filter layer: keeps candidates whose future path shares a lane
    /// stretch with the ego's, or that enter a conflict zone the ego also
    /// enters, and attaches the provisional type.
    pub fn conflict_filter(
        &self,
        ego: &VehicleId,
        candidates: &[VehicleId],
        frame: i64,
    ) -> Result<Vec<Candidate>, SliceError> {
        let e = self.idx(ego)?;
        let mut out = Vec::new();
        for id in candidates {
            let o = self.idx(id)?;
            if !self.overlaps(e, o, frame)? {
                continue;
            }
            match self.classify_idx(e, o, frame) {
                Ok((itype, zone)) => out.push(Candidate {
                    other_id: id.clone(),
                    itype,
                    zone_id: zone.map(|z| self.map.conflict_zones[z].zone_id.clone()),
                }),
                Err(err) => log::warn!("{err}"),
            }
        }
        Ok(out)
    }

    fn overlaps(&self, e: usize, o: usize, frame: i64) -> Result<bool, SliceError> {
        let ie = self.local(e, frame).ok_or(SliceError::EgoAbsent(frame))?;
        let Some(io) = self.local(o, frame) else {
            return Ok(false);
        };
        Ok(self.corridors_overlap(e, ie, o, io) || self.shared_zones(e, ie, o, io) != 0)
    }

    /// Assigns the interaction type of a pair at `frame` using the fixed
    /// decision order: static point, static line, heading, dynamic conflict,
    /// following.
    pub fn classify_interaction(
        &self,
        ego: &VehicleId,
        other: &VehicleId,
        frame: i64,
    ) -> Result<(InteractionType, Option<String>), SliceError> {
        let e = self.idx(ego)?;
        let o = self.idx(other)?;
        let (t, z) = self.classify_idx(e, o, frame)?;
        Ok((t, z.map(|z| self.map.conflict_zones[z].zone_id.clone())))
    }

    fn nearest_zone(&self, e: usize, ie: usize, mask: u128) -> Option<usize> {
        (0..self.map.conflict_zones.len())
            .filter(|z| mask & (1u128 << z) != 0)
            .min_by_key(|&z| (self.prep[e].zone_entry[z][ie], z))
    }

    fn classify_idx(&self, e: usize, o: usize, frame: i64) -> Result<(InteractionType, Option<usize>), SliceError> {
        let ie = self.local(e, frame).ok_or(SliceError::EgoAbsent(frame))?;
        let io = self
            .local(o, frame)
            .ok_or_else(|| SliceError::Unclassifiable(self.ids[e].clone(), self.ids[o].clone()))?;
        let pe = &self.tracks[e].points[ie];
        let po = &self.tracks[o].points[io];
        let fe = self.prep[e].fixes[ie];
        let fo = self.prep[o].fixes[io];
        let lanes = match (fe, fo) {
            (Some(a), Some(b)) => Some((a.lane, b.lane)),
            _ => None,
        };

        let shared = self.shared_zones(e, ie, o, io);
        if shared != 0 {
            let kind_mask = |kind: ZoneKind| {
                self.map
                    .conflict_zones
                    .iter()
                    .enumerate()
                    .filter(|(_, z)| z.kind == kind)
                    .fold(0u128, |m, (i, _)| m | (1u128 << i))
            };
            let crossing = lanes.is_none_or(|(a, b)| a != b && !self.map.same_flow(a, b));
            let point_mask = shared & kind_mask(ZoneKind::StaticPoint);
            if point_mask != 0 && crossing {
                return Ok((InteractionType::StaticConflictPoint, self.nearest_zone(e, ie, point_mask)));
            }
            let converging = lanes.is_none_or(|(a, b)| a != b);
            let line_mask = shared & kind_mask(ZoneKind::StaticLine);
            if line_mask != 0 && converging {
                return Ok((InteractionType::StaticConflictLine, self.nearest_zone(e, ie, line_mask)));
            }
        }

        let dh = heading_diff(pe.heading, po.heading);
        if dh > self.cfg.heading_opposite_deg.to_radians() {
            return Ok((InteractionType::HeadingLine, None));
        }

        if let Some((le, lo)) = lanes {
            if self.cuts_into(po, le) || self.cuts_into(pe, lo) {
                return Ok((InteractionType::DynamicConflictLine, None));
            }
            if le != lo && (self.enters_lane(o, io, le) || self.enters_lane(e, ie, lo)) {
                return Ok((InteractionType::DynamicConflictLine, None));
            }
            if self.map.same_flow(le, lo) && dh < std::f64::consts::FRAC_PI_2 {
                return Ok((InteractionType::FollowingLine, None));
            }
        }
        Err(SliceError::Unclassifiable(self.ids[e].clone(), self.ids[o].clone()))
    }

    /// Lateral motion of `p` relative to `lane` that carries it toward or
    /// keeps it on that lane's centerline.
    fn cuts_into(&self, p: &TrackPoint, lane: usize) -> bool {
        let pr = self.map.polyline(lane).project(p.pos());
        let v_lat = p.vel().dot(pr.tangent.perp());
        v_lat.abs() >= self.cfg.lateral_speed_threshold
            && (pr.d.abs() <= self.cfg.lane_center_tolerance || pr.d * v_lat < 0.0)
            && pr.dist <= self.map.lanes[lane].width * 1.5
    }

    fn enters_lane(&self, k: usize, i: usize, lane: usize) -> bool {
        self.prep[k].future_lanes(i).iter().any(|&(l, _, _)| l as usize == lane)
    }

    fn lateral_speed(&self, k: usize, frame: i64) -> f64 {
        match (self.point(k, frame), self.fix(k, frame)) {
            (Some(p), Some(f)) => p.vel().dot(f.tangent.perp()).abs(),
            _ => 0.0,
        }
    }

    fn zone_rate(&self, p: &TrackPoint, zone: usize) -> f64 {
        let poly = &self.map.conflict_zones[zone].polygon;
        let now = poly.distance(p.pos());
        let ahead = poly.distance(p.pos() + p.vel().scale(self.dt));
        (ahead - now) / self.dt
    }

    /// Whether the critical state of `itype` meets its threshold at `frame`.
    fn meets(&self, e: usize, o: usize, itype: InteractionType, zone: Option<usize>, frame: i64) -> bool {
        let (Some(pe), Some(po)) = (self.point(e, frame), self.point(o, frame)) else {
            return false;
        };
        let c = &self.cfg;
        match itype {
            InteractionType::DynamicConflictLine => {
                self.lateral_speed(e, frame).max(self.lateral_speed(o, frame)) >= c.lateral_speed_threshold
            }
            InteractionType::FollowingLine | InteractionType::HeadingLine => {
                let rel = po.pos() - pe.pos();
                let gap = rel.norm();
                if gap == 0.0 {
                    return true;
                }
                rel.dot(po.vel() - pe.vel()) / gap <= c.closing_rate_threshold
            }
            InteractionType::StaticConflictLine | InteractionType::StaticConflictPoint => match zone {
                Some(z) => {
                    self.zone_rate(pe, z) <= c.closing_rate_threshold
                        && self.zone_rate(po, z) <= c.closing_rate_threshold
                }
                None => false,
            },
            InteractionType::FreeDriving => true,
        }
    }

    /// Time-filter layer. Active iff every sample of the trailing window
    /// ending at `frame` meets the critical-state threshold of `itype`;
    /// onset and offset bound the maximal meeting run through `frame`.
    pub fn time_filter(
        &self,
        ego: &VehicleId,
        other: &VehicleId,
        itype: InteractionType,
        frame: i64,
    ) -> Result<TimeFilterResult, SliceError> {
        let e = self.idx(ego)?;
        let o = self.idx(other)?;
        self.local(e, frame).ok_or(SliceError::EgoAbsent(frame))?;
        let zone = if itype.is_static() {
            let ie = self.local(e, frame).unwrap();
            let shared = self.local(o, frame).map_or(0, |io| self.shared_zones(e, ie, o, io));
            let kind = if itype == InteractionType::StaticConflictPoint {
                ZoneKind::StaticPoint
            } else {
                ZoneKind::StaticLine
            };
            let mask = (0..self.map.conflict_zones.len())
                .filter(|&z| self.map.conflict_zones[z].kind == kind)
                .fold(0u128, |m, z| m | (1u128 << z));
            self.nearest_zone(e, ie, shared & mask)
        } else {
            None
        };
        let start = frame - self.window as i64 + 1;
        if self.point(e, start).is_none() || self.point(o, start).is_none() {
            return Err(SliceError::InsufficientHistory { needed: self.window });
        }
        let active = (start..=frame).all(|f| self.meets(e, o, itype, zone, f));
        if !active {
            return Ok(TimeFilterResult { active, onset: None, offset: None });
        }
        let mut onset = start;
        while self.meets(e, o, itype, zone, onset - 1) {
            onset -= 1;
        }
        let mut offset = frame;
        while self.meets(e, o, itype, zone, offset + 1) {
            offset += 1;
        }
        Ok(TimeFilterResult {
            active,
            onset: Some(onset),
            offset: Some(offset),
        })
    }

    /// Runs the four layers over every frame of `ego` and merges the result.
    /// Segment ids start at 0.
    pub fn slice(&self, ego: &VehicleId) -> Result<Vec<AtomScenario>, SliceError> {
        let e = self.idx(ego)?;
        let frames = self.per_frame_records(e);
        let mut atoms = merge_frames(ego, &frames, &self.cfg);
        for atom in &mut atoms {
            atom.behavior_label = self.behavior(e, atom.start_frame, atom.end_frame).to_owned();
        }
        Ok(atoms)
    }

    fn per_frame_records(&self, e: usize) -> Vec<FrameRecords> {
        let track = self.tracks[e];
        let n = track.points.len();
        let first = self.prep[e].first;
        let mut searched: Vec<Vec<usize>> = Vec::with_capacity(n);
        // (other, type, zone) -> local frames where classified so and meeting.
        let mut meeting: BTreeMap<(usize, InteractionType, Option<usize>), Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            let frame = first + i as i64;
            let found = self.search_idx(e, frame).expect("ego frame");
            for &o in &found {
                if !self.overlaps(e, o, frame).unwrap_or(false) {
                    continue;
                }
                match self.classify_idx(e, o, frame) {
                    Ok((itype, zone)) => {
                        if self.meets(e, o, itype, zone, frame) {
                            meeting.entry((o, itype, zone)).or_default().push(i);
                        }
                    }
                    Err(err) => log::warn!("frame {frame}: {err}"),
                }
            }
            searched.push(found);
        }

        let mut present: Vec<Vec<(usize, InteractionType, Option<usize>)>> = vec![Vec::new(); n];
        for (&key, locals) in &meeting {
            let mut run_start = 0;
            for j in 1..=locals.len() {
                if j == locals.len() || locals[j] != locals[j - 1] + 1 {
                    if j - run_start >= self.window {
                        for &i in &locals[run_start..j] {
                            present[i].push(key);
                        }
                    }
                    run_start = j;
                }
            }
        }

        let max = self.cfg.max_interactive;
        (0..n)
            .map(|i| {
                let frame = first + i as i64;
                let recs = &mut present[i];
                let mut others: Vec<usize> = recs.iter().map(|r| r.0).collect();
                others.sort_unstable();
                others.dedup();
                if others.len() > max {
                    let pe = track.points[i].pos();
                    others.sort_by(|&a, &b| {
                        let da = self.point(a, frame).unwrap().pos().dist(pe);
                        let db = self.point(b, frame).unwrap().pos().dist(pe);
                        da.total_cmp(&db).then(self.ids[a].cmp(&self.ids[b]))
                    });
                    others.truncate(max);
                    recs.retain(|r| others.contains(&r.0));
                }
                let mut records: Vec<FrameRecord> = recs
                    .iter()
                    .map(|&(o, itype, zone)| FrameRecord {
                        other_id: self.ids[o].clone(),
                        itype,
                        zone_id: zone.map(|z| self.map.conflict_zones[z].zone_id.clone()),
                    })
                    .collect();
                records.sort();
                let mut searched_ids: Vec<VehicleId> = searched[i].iter().map(|&k| self.ids[k].clone()).collect();
                searched_ids.sort();
                FrameRecords {
                    frame,
                    records,
                    searched: searched_ids,
                }
            })
            .collect()
    }

    fn behavior(&self, e: usize, start: i64, end: i64) -> &'static str {
        let lanes: Vec<usize> = (start..=end)
            .filter_map(|f| self.fix(e, f))
            .filter(|f| f.inside)
            .map(|f| f.lane)
            .collect();
        let changed = lanes.windows(2).any(|w| w[0] != w[1] && self.map.are_neighbors(w[0], w[1]));
        let (Some(a), Some(b)) = (self.point(e, start), self.point(e, end)) else {
            return "lane_keep";
        };
        if heading_diff(a.heading, b.heading) > std::f64::consts::FRAC_PI_4 {
            "turn"
        } else if changed {
            "lane_change"
        } else {
            "lane_keep"
        }
    }
}

/// Slices one ego. Segment ids start at 0.
pub fn slice(ts: &TrackSet, map: &RoadMap, ego: &VehicleId, cfg: &SliceConfig) -> Result<Vec<AtomScenario>, SliceError> {
    if ts.get(ego).is_none() {
        return Err(SliceError::UnknownVehicle(ego.clone()));
    }
    Slicer::new(ts, map, cfg)?.slice(ego)
}

/// Slices every vehicle as ego, in parallel. Output is ordered by ego id then
/// start frame, with ids numbered consecutively from 0.
pub fn slice_all(ts: &TrackSet, map: &RoadMap, cfg: &SliceConfig) -> Result<Vec<AtomScenario>, SliceError> {
    let slicer = Slicer::new(ts, map, cfg)?;
    let per_ego: Vec<Vec<AtomScenario>> = slicer
        .vehicle_ids()
        .par_iter()
        .map(|id| slicer.slice(id))
        .collect::<Result<_, _>>()?;
    let mut atoms: Vec<AtomScenario> = per_ego.into_iter().flatten().collect();
    for (i, a) in atoms.iter_mut().enumerate() {
        a.id = i as u64;
    }
    Ok(atoms)
}
