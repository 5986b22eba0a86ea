use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ActorScript, Maneuver, MapTemplate, PlantedOutlier, Role, ScriptSpec, ScriptedInteraction};
use crate::ingest::VehicleId;
use crate::slicing::InteractionType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantKind {
    /// Cut-in close ahead of a faster ego.
    LowTtc,
    /// Low-speed squeeze into a tight gap behind the ego's leader; the ego
    /// itself is never closed on.
    RightOfWay,
}

fn actor(id: u64, lane: &str, start_frame: i64, s: f64, speed: f64, role: Role, phases: Vec<Maneuver>) -> ActorScript {
    ActorScript {
        vehicle_id: VehicleId::from(id),
        route: vec![lane.to_owned()],
        start_frame,
        start_s: s,
        speed,
        length: 4.5,
        width: 1.8,
        role,
        phases,
    }
}

fn interaction(ego: u64, other: u64, itype: InteractionType, from: f64, to: f64) -> ScriptedInteraction {
    ScriptedInteraction {
        ego: ego.into(),
        other: other.into(),
        itype,
        from,
        to,
    }
}

fn cruise(duration: f64) -> Maneuver {
    Maneuver::Cruise { duration }
}

fn change(duration: f64, to: &str) -> Maneuver {
    Maneuver::LaneChange {
        duration,
        to: to.to_owned(),
        then: vec![],
    }
}

/// Ego "1" follows leader "2"; "3" cuts in between them from the left lane
/// and becomes the new leader. Lane-change duration is drawn from [3, 4] s.
pub fn three_phase(seed: u64) -> ScriptSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = 20.0;
    let v = rng.random_range(22.0..28.0);
    let gap_a = rng.random_range(35.0..45.0);
    let gap_b = rng.random_range(12.0..18.0);
    let t_lc = rng.random_range(6.0..8.0);
    let dur = rng.random_range(3.0..4.0);
    ScriptSpec {
        seed,
        dt: 0.04,
        map: MapTemplate::StraightMultilane { lanes: 2, length: 1500.0 },
        noise_std: 0.05,
        actors: vec![
            actor(1, "1", 0, 100.0, v, Role::Ego, vec![cruise(total)]),
            actor(2, "1", 0, 100.0 + gap_a, v, Role::Interactive, vec![cruise(total)]),
            actor(
                3,
                "2",
                0,
                100.0 + gap_b,
                v,
                Role::Interactive,
                vec![cruise(t_lc), change(dur, "1"), cruise(total - t_lc - dur)],
            ),
        ],
        interactions: vec![
            interaction(1, 2, InteractionType::FollowingLine, 0.0, total),
            interaction(1, 3, InteractionType::DynamicConflictLine, t_lc, t_lc + dur),
            interaction(1, 3, InteractionType::FollowingLine, t_lc + dur, total),
        ],
        planted: vec![],
    }
}

/// Ego "1" follows "2" in one lane for `duration` seconds.
pub fn following(seed: u64, duration: f64) -> ScriptSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = rng.random_range(15.0..30.0);
    let gap = rng.random_range(20.0..50.0);
    ScriptSpec {
        seed,
        dt: 0.04,
        map: MapTemplate::StraightMultilane { lanes: 2, length: 2000.0 },
        noise_std: 0.0,
        actors: vec![
            actor(1, "1", 0, 50.0, v, Role::Ego, vec![cruise(duration)]),
            actor(2, "1", 0, 50.0 + gap, v, Role::Interactive, vec![cruise(duration)]),
        ],
        interactions: vec![interaction(1, 2, InteractionType::FollowingLine, 0.0, duration)],
        planted: vec![],
    }
}

/// `groups` time-disjoint groups on a three-lane road: an ego in the middle
/// lane, its leader, and three vehicles cruising in the outer lanes inside
/// the ego's search box. Three of every four searched vehicles are
/// non-interactive.
pub fn filtering_corpus(seed: u64, groups: usize) -> ScriptSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let life = 15.0;
    let stride = 400;
    let mut actors = Vec::new();
    let mut interactions = Vec::new();
    for g in 0..groups {
        let base = (g as u64 + 1) * 10;
        let f0 = g as i64 * stride;
        let t0 = f0 as f64 * 0.04;
        let v = rng.random_range(20.0..30.0);
        let s0 = 200.0;
        actors.push(actor(base + 1, "2", f0, s0, v, Role::Ego, vec![cruise(life)]));
        actors.push(actor(
            base + 2,
            "2",
            f0,
            s0 + rng.random_range(25.0..60.0),
            v,
            Role::Interactive,
            vec![cruise(life)],
        ));
        interactions.push(interaction(base + 1, base + 2, InteractionType::FollowingLine, t0, t0 + life));
        // Two in one outer lane, one in the other, kept at least 15 m apart.
        let crowded = if rng.random_bool(0.5) { "1" } else { "3" };
        let other = if crowded == "1" { "3" } else { "1" };
        let a = rng.random_range(-40.0..20.0);
        let b = a + rng.random_range(15.0..60.0);
        for (k, (lane, off)) in [(crowded, a), (crowded, b), (other, rng.random_range(-40.0..80.0))]
            .into_iter()
            .enumerate()
        {
            actors.push(actor(base + 3 + k as u64, lane, f0, s0 + off, v, Role::Background, vec![cruise(life)]));
        }
    }
    ScriptSpec {
        seed,
        dt: 0.04,
        map: MapTemplate::StraightMultilane { lanes: 3, length: 1500.0 },
        noise_std: 0.05,
        actors,
        interactions,
        planted: vec![],
    }
}

/// Ramp vehicle "1" merges into lane "1" between mainline vehicles "2", "3"
/// and "4", all of which pass the merge area together with it.
pub fn merge(seed: u64) -> ScriptSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = 14.0;
    let v_ramp = rng.random_range(20.0..24.0);
    let v_main = rng.random_range(23.0..27.0);
    let t_merge = 6.0;
    let lc = rng.random_range(3.0..4.0);
    // Ramp arc length at x = 300 on the parallel section.
    let ramp_at_300 = (150.0f64).hypot(36.5) + 50.0;
    let start_ramp = ramp_at_300 - v_ramp * t_merge;
    let x_at_merge = [330.0, 275.0, 245.0].map(|x| x + rng.random_range(-3.0..3.0));
    let mut actors = vec![ActorScript {
        route: vec!["R".into(), "1".into()],
        ..actor(
            1,
            "R",
            0,
            start_ramp,
            v_ramp,
            Role::Ego,
            vec![cruise(t_merge), change(lc, "1"), cruise(total - t_merge - lc)],
        )
    }];
    let mut interactions = Vec::new();
    for (k, x) in x_at_merge.into_iter().enumerate() {
        let id = 2 + k as u64;
        actors.push(actor(id, "1", 0, x - v_main * t_merge, v_main, Role::Interactive, vec![cruise(total)]));
        interactions.push(interaction(1, id, InteractionType::StaticConflictLine, 0.0, t_merge + lc / 2.0));
    }
    ScriptSpec {
        seed,
        dt: 0.04,
        map: MapTemplate::RampMerge { length: 1200.0 },
        noise_std: 0.02,
        actors,
        interactions,
        planted: vec![],
    }
}

/// Ego "1" goes straight west to east while "2" goes straight south to
/// north; both reach the junction at about the same time.
pub fn crossing(seed: u64) -> ScriptSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = 12.0;
    let v1 = rng.random_range(8.0..12.0);
    let v2 = rng.random_range(8.0..12.0);
    let arrive = 5.0;
    let arm = 150.0;
    let through = |first: &str, conn: &str, out: &str| vec![first.to_owned(), conn.to_owned(), out.to_owned()];
    let mut ego = actor(1, "W_in", 0, arm - v1 * arrive, v1, Role::Ego, vec![cruise(total)]);
    ego.route = through("W_in", "W_E", "E_out");
    let mut other = actor(2, "S_in", 0, arm - v2 * (arrive + rng.random_range(-0.5..0.5)), v2, Role::Interactive, vec![cruise(total)]);
    other.route = through("S_in", "S_N", "N_out");
    ScriptSpec {
        seed,
        dt: 0.04,
        map: MapTemplate::FourWayIntersection { arm_length: arm },
        noise_std: 0.0,
        actors: vec![ego, other],
        interactions: vec![interaction(1, 2, InteractionType::StaticConflictPoint, 0.0, arrive + 1.0)],
        planted: vec![],
    }
}

/// Sixty time-disjoint cut-in groups on a two-lane road. In each group ego
/// `10g+1` follows `10g+2` while `10g+3` changes from the left lane into the
/// gap. Ten groups are planted outliers: five low-TTC cut-ins and five
/// low-speed squeezes tight behind the leader.
pub fn labeling_corpus(seed: u64) -> ScriptSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 60;
    let mut kinds: Vec<Option<PlantKind>> = vec![None; n];
    for k in kinds.iter_mut().take(5) {
        *k = Some(PlantKind::LowTtc);
    }
    for k in kinds.iter_mut().skip(5).take(5) {
        *k = Some(PlantKind::RightOfWay);
    }
    kinds.shuffle(&mut rng);

    let life = 8.0;
    let t_lc = 2.0;
    let stride = 250;
    let mut actors = Vec::new();
    let mut interactions = Vec::new();
    let mut planted = Vec::new();
    let mut row = 0;
    for (g, kind) in kinds.into_iter().enumerate() {
        let base = (g as u64 + 1) * 10;
        let (ego, lead, cut) = (base + 1, base + 2, base + 3);
        let f0 = g as i64 * stride;
        let t0 = f0 as f64 * 0.04;
        let dur = rng.random_range(3.0..4.0);
        let s0 = 100.0;
        let (v_e, gap_b, gap_ab, v_b, ego_phases) = match kind {
            None => {
                let v = rng.random_range(8.0..25.0);
                let (h_b, h_ab) = (rng.random_range(1.0..2.5), rng.random_range(1.2..2.0));
                (v, v * h_b, v * h_ab, v + rng.random_range(0.0..0.2), vec![cruise(life)])
            }
            Some(PlantKind::RightOfWay) => {
                // Ego-relative gaps stay in the normal range; only the
                // cutter-to-leader gap is a few meters.
                // Speeds are stratified so the plants stay apart from each other too.
                let v = 6.0 + 2.0 * row as f64 + rng.random_range(0.0..1.5);
                row += 1;
                (v, v * rng.random_range(2.0..2.4), rng.random_range(5.5..7.0), v + rng.random_range(0.0..0.2), vec![cruise(life)])
            }
            Some(PlantKind::LowTtc) => {
                let v = rng.random_range(18.0..30.0);
                let dv = rng.random_range(6.0..9.0);
                let ttc = rng.random_range(0.6..0.85);
                // The gap is set at lane-change start; the ego brakes from there.
                let brake = 8.0;
                let gap_start = ttc * dv;
                let stop = dv / brake;
                (
                    v,
                    gap_start + dv * t_lc,
                    v * rng.random_range(1.2..2.0),
                    v - dv,
                    vec![cruise(t_lc), Maneuver::Accelerate { duration: stop, accel: -brake }, cruise(life - t_lc - stop)],
                )
            }
        };
        let v_a = match kind {
            Some(PlantKind::LowTtc) => v_b,
            _ => v_e,
        };
        actors.push(actor(ego, "1", f0, s0, v_e, Role::Ego, ego_phases));
        actors.push(actor(lead, "1", f0, s0 + gap_b + gap_ab, v_a, Role::Interactive, vec![cruise(life)]));
        actors.push(actor(
            cut,
            "2",
            f0,
            s0 + gap_b,
            v_b,
            Role::Interactive,
            vec![cruise(t_lc), change(dur, "1"), cruise(life - t_lc - dur)],
        ));
        interactions.push(interaction(ego, lead, InteractionType::FollowingLine, t0, t0 + life));
        interactions.push(interaction(ego, cut, InteractionType::DynamicConflictLine, t0 + t_lc, t0 + t_lc + dur));
        interactions.push(interaction(ego, cut, InteractionType::FollowingLine, t0 + t_lc + dur, t0 + life));
        if let Some(kind) = kind {
            planted.push(PlantedOutlier { ego: ego.into(), kind });
        }
    }
    ScriptSpec {
        seed,
        dt: 0.04,
        map: MapTemplate::StraightMultilane { lanes: 2, length: 1500.0 },
        noise_std: 0.02,
        actors,
        interactions,
        planted,
    }
}

/// `vehicles` cars on a long three-lane road for `frames` frames, with
/// occasional lane changes. No ground-truth interactions are declared.
pub fn performance_stream(seed: u64, vehicles: usize, frames: usize) -> ScriptSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = 0.04;
    let life = (frames - 1) as f64 * dt;
    let mut actors = Vec::new();
    let spacing = 3000.0 / vehicles as f64;
    for k in 0..vehicles {
        let v = rng.random_range(22.0..30.0);
        let mut lane: usize = rng.random_range(1..=3);
        let start_lane = lane;
        let mut phases = Vec::new();
        let mut t = 0.0;
        loop {
            let hold = rng.random_range(30.0..90.0);
            if t + hold + 4.0 >= life {
                phases.push(cruise(life - t));
                break;
            }
            phases.push(cruise(hold));
            lane = match lane {
                1 => 2,
                3 => 2,
                _ => {
                    if rng.random_bool(0.5) {
                        1
                    } else {
                        3
                    }
                }
            };
            phases.push(change(4.0, &lane.to_string()));
            t += hold + 4.0;
        }
        actors.push(actor(
            k as u64 + 1,
            &start_lane.to_string(),
            0,
            k as f64 * spacing + rng.random_range(0.0..spacing * 0.5),
            v,
            Role::Interactive,
            phases,
        ));
    }
    ScriptSpec {
        seed,
        dt,
        map: MapTemplate::StraightMultilane { lanes: 3, length: 3000.0 + 30.0 * life + 500.0 },
        noise_std: 0.05,
        actors,
        interactions: vec![],
        planted: vec![],
    }
}
