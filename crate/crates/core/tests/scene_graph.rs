use proptest::prelude::*;
use scn_core::scene_graph::*;
use scn_core::slicing::{slice_all, AtomScenario, InteractionType, SliceConfig};
use scn_core::synthgen::{crossing, filtering_corpus, following, generate, labeling_corpus, merge, three_phase, ScriptSpec};
use scn_core::tree_metric::{MetricConfig, SceneTrees};
use scn_core::{RoadMap, TrackSet};

fn sliced(spec: &ScriptSpec) -> (TrackSet, RoadMap, Vec<AtomScenario>) {
    let (ts, map, _) = generate(spec).unwrap();
    let atoms = slice_all(&ts, &map, &SliceConfig::default()).unwrap();
    (ts, map, atoms)
}

#[test]
fn merge_scene_with_two_mainline_vehicles() {
    let cfg = MetricConfig::default();
    let mut checked = 0;
    for seed in 0..6 {
        let (ts, map, atoms) = sliced(&merge(seed));
        for a in atoms
            .iter()
            .filter(|a| a.ego_id.as_str() == "1" && a.itype == InteractionType::StaticConflictLine && a.interactive.len() == 2)
        {
            let g = build_scene(a, &ts, &map, a.start_frame, &cfg).unwrap();
            assert_eq!(g.vehicles.len(), 3);
            let conflicts = g.v2v.iter().filter(|e| e.relation == V2VRelation::Conflict).count();
            assert_eq!(conflicts, 2);
            assert!(g.v2n.len() >= 3, "{} V2N edges", g.v2n.len());
            checked += 1;
        }
    }
    assert!(checked > 0, "no merge segment with two interactive vehicles");
}

#[test]
fn free_driving_has_only_the_ego() {
    let mut alone = following(3, 10.0);
    alone.actors.truncate(1);
    alone.interactions.clear();
    let (ts, map, atoms) = sliced(&alone);
    let cfg = MetricConfig::default();
    assert_eq!(atoms.len(), 1);
    let free = &atoms[0];
    assert_eq!(free.itype, InteractionType::FreeDriving);
    let g = build_scene(free, &ts, &map, free.start_frame, &cfg).unwrap();
    assert_eq!(g.vehicles.len(), 1);
    assert!(g.v2v.is_empty());
    assert!(!g.v2n.is_empty());
    assert!(g.v2n.iter().all(|e| e.vehicle == g.ego));
}

#[test]
fn following_record_gives_a_following_edge() {
    let (ts, map, atoms) = sliced(&following(3, 10.0));
    let cfg = MetricConfig::default();
    let fl = atoms.iter().find(|a| a.itype == InteractionType::FollowingLine).unwrap();
    let g = build_scene(fl, &ts, &map, fl.end_frame, &cfg).unwrap();
    assert_eq!(g.vehicles.len(), 2);
    assert_eq!(g.v2v.len(), 1);
    assert_eq!(g.v2v[0].relation, V2VRelation::Following);
    assert!(matches!(
        build_scene(fl, &ts, &map, fl.end_frame + 1, &cfg),
        Err(SceneError::FrameOutOfSpan { .. })
    ));
}

fn check_invariants(g: &SceneGraph, a: &AtomScenario, cfg: &MetricConfig) {
    assert_eq!(g.vehicles.iter().filter(|v| v.id == a.ego_id).count(), 1);
    assert_eq!(g.vehicles[g.ego].id, a.ego_id);
    assert!(g.vehicles.iter().all(|v| v.id == a.ego_id || a.interactive.contains(&v.id)));
    assert!(g.v2v.iter().all(|e| e.a < g.vehicles.len() && e.b < g.vehicles.len()));
    assert!(g.v2n.iter().all(|e| e.vehicle < g.vehicles.len() && e.road < g.roads.len()));
    let trees = SceneTrees::expand(g, cfg);
    for t in [&trees.v2v, &trees.v2n] {
        assert!(t.len() < 200, "{} nodes", t.len());
        assert!(!t.root().blank);
        for n in &t.nodes {
            let vehicle_level = t.kind == TreeKind::V2V || n.level % 2 == 1;
            match n.source {
                Some(NodeRef::Vehicle(_)) => assert!(vehicle_level),
                Some(NodeRef::Road(_)) => assert!(!vehicle_level),
                None => assert!(n.blank),
            }
            if n.blank {
                assert!(n.feature == [0.0; 3] && n.children.is_empty());
            }
        }
    }
    assert_eq!(trees, SceneTrees::expand(g, cfg));
}

#[test]
fn corpora_trees_stay_small_and_well_formed() {
    let cfg = MetricConfig::default();
    for spec in [three_phase(1), merge(1), crossing(1), filtering_corpus(1, 4), labeling_corpus(1)] {
        let (ts, map, atoms) = sliced(&spec);
        for a in &atoms {
            for f in a.frames().step_by(7) {
                check_invariants(&build_scene(a, &ts, &map, f, &cfg).unwrap(), a, &cfg);
            }
        }
    }
}

#[test]
fn dot_dump_lists_every_vehicle() {
    let (ts, map, atoms) = sliced(&three_phase(2));
    let cfg = MetricConfig::default();
    let a = atoms.iter().find(|a| a.ego_id.as_str() == "1").unwrap();
    let g = build_scene(a, &ts, &map, a.start_frame, &cfg).unwrap();
    let dot = g.to_dot();
    assert!(dot.starts_with("graph") || dot.starts_with("digraph"));
    for v in &g.vehicles {
        assert!(dot.contains(v.id.as_str()));
    }
    let tree = expand_tree(&g, TreeKind::V2N, 3, &cfg);
    assert_eq!(tree.to_dot().matches("->").count(), tree.len() - 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn depth_controls_levels(seed in 0u64..50, depth in 1usize..5) {
        let (ts, map, atoms) = sliced(&three_phase(seed));
        let cfg = MetricConfig { depth, ..MetricConfig::default() };
        for a in atoms.iter().filter(|a| a.ego_id.as_str() == "1") {
            let g = build_scene(a, &ts, &map, a.start_frame, &cfg).unwrap();
            for kind in [TreeKind::V2V, TreeKind::V2N] {
                let t = expand_tree(&g, kind, depth, &cfg);
                prop_assert_eq!(t.level_counts().len(), depth);
                prop_assert_eq!(t.level_counts()[0], 1);
                prop_assert!(t.nodes.iter().all(|n| n.level <= depth));
            }
        }
    }
}
