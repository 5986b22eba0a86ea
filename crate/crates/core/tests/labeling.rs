mod oracle;

use std::collections::BTreeSet;

use oracle::{planar_distances, random_scenario};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scn_core::graph_dtw::{DtwConfig, EncodedFrame, EncodedScenario};
use scn_core::ingest::{RoadMap, Track, TrackPoint, TrackSet};
use scn_core::labeling::*;
use scn_core::slicing::{slice_all, AtomScenario, InteractionType, SliceConfig};
use scn_core::synthgen::{crossing, generate, labeling_corpus, MapTemplate, PlantKind};
use scn_core::tree_metric::MetricConfig;

fn dm(rows: Vec<Vec<f64>>) -> DistanceMatrix {
    DistanceMatrix::from_rows((0..rows.len() as u64).collect(), rows).unwrap()
}

#[test]
fn mds_reconstructs_planar_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..50 {
        let n = rng.random_range(3..25);
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)]).collect();
        let d = planar_distances(&pts);
        let e = mds_embed(&dm(d.clone())).unwrap();
        let back = planar_distances(&e.coords);
        for i in 0..n {
            for j in 0..n {
                assert!((back[i][j] - d[i][j]).abs() <= 1e-6 * d[i][j].max(1e-9), "{} vs {}", back[i][j], d[i][j]);
            }
        }
        // Sign convention: the first non-negligible entry of each axis is positive.
        for axis in 0..2 {
            let first = e.coords.iter().map(|c| c[axis]).find(|v| v.abs() > 1e-9);
            assert!(first.is_none_or(|v| v > 0.0));
        }
    }
}

#[test]
fn collinear_points_embed_on_one_axis() {
    let pts: Vec<[f64; 2]> = (0..6).map(|i| [i as f64 * 3.0, 0.0]).collect();
    let e = mds_embed(&dm(planar_distances(&pts))).unwrap();
    assert!(!e.degenerate);
    assert!(e.eigenvalues[1].abs() < 1e-9);
    assert!(e.coords.iter().all(|c| c[1].abs() < 1e-6));
}

fn cruiser(id: &str, x0: f64, v: f64) -> Track {
    let dt = 0.04;
    Track {
        vehicle_id: id.into(),
        length: 4.5,
        width: 1.8,
        points: (0..200)
            .map(|f| TrackPoint {
                frame: f,
                t: f as f64 * dt,
                x: x0 + v * f as f64 * dt,
                y: 0.0,
                vx: v,
                vy: 0.0,
                heading: 0.0,
                lane_id: None,
            })
            .collect(),
    }
}

/// Ego "1" at x = 100 behind "2"; returns the single-frame segment at frame 0.
fn pair(gap: f64, v_ego: f64, v_lead: f64) -> (TrackSet, RoadMap, AtomScenario) {
    let mut ts = TrackSet::new(0.04);
    ts.insert(cruiser("1", 100.0, v_ego));
    ts.insert(cruiser("2", 100.0 + gap, v_lead));
    let map = RoadMap::from_doc(MapTemplate::StraightMultilane { lanes: 2, length: 1000.0 }.build(), 10.0).unwrap();
    let mut atom = slice_all(&ts, &map, &SliceConfig::default())
        .unwrap()
        .into_iter()
        .find(|a| a.ego_id.as_str() == "1")
        .unwrap();
    atom.start_frame = 0;
    atom.end_frame = 0;
    atom.interactive = vec!["2".into()];
    (ts, map, atom)
}

#[test]
fn ttc_examples() {
    let cfg = TtcConfig::default();
    let (ts, map, a) = pair(20.0, 20.0, 10.0);
    let r = &ttc_label(&[a], &ts, &map, &cfg)[0];
    assert!((r.min_ttc.unwrap() - 2.0).abs() < 1e-9);
    assert!(!r.extreme && r.threshold == 1.0);

    let (ts, map, a) = pair(8.0, 20.0, 10.0);
    let r = &ttc_label(&[a], &ts, &map, &cfg)[0];
    assert!((r.min_ttc.unwrap() - 0.8).abs() < 1e-9);
    assert!(r.extreme);

    let (ts, map, a) = pair(8.0, 10.0, 20.0);
    let r = &ttc_label(&[a], &ts, &map, &cfg)[0];
    assert_eq!(r.min_ttc, None);
    assert!(!r.extreme);
}

#[test]
fn intersections_use_the_tighter_threshold() {
    let (ts, map, _) = generate(&crossing(2)).unwrap();
    let atoms: Vec<AtomScenario> = slice_all(&ts, &map, &SliceConfig::default())
        .unwrap()
        .into_iter()
        .filter(|a| a.itype == InteractionType::StaticConflictPoint)
        .collect();
    assert!(!atoms.is_empty());
    for r in ttc_label(&atoms, &ts, &map, &TtcConfig::default()) {
        assert_eq!(r.threshold, 0.5);
    }
}

fn plain_dtw(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let rows: Vec<Vec<f64>> = a
        .iter()
        .map(|x| b.iter().map(|y| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()).collect())
        .collect();
    oracle::dtw_oracle(&rows) / a.len().max(b.len()) as f64
}

#[test]
fn vector_baseline_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let cfg = MetricConfig::default();
    let open = DtwConfig { window: None, stride: 1 };
    let mut found = 0;
    while found < 10 {
        let a = random_scenario(&mut rng, 1, &cfg);
        let b = random_scenario(&mut rng, 2, &cfg);
        assert_eq!(vector_dtw_baseline(&a, &a, &DtwConfig::default()).unwrap(), 0.0);
        let (sa, sb) = (vector_sequence(&a), vector_sequence(&b));
        let widths: BTreeSet<usize> = sa.iter().chain(&sb).map(Vec::len).collect();
        if widths.len() == 1 && sa.len() <= 6 && sb.len() <= 8 {
            let got = vector_dtw_baseline(&a, &b, &open).unwrap();
            assert!((got - plain_dtw(&sa, &sb)).abs() <= 1e-9);
            found += 1;
        }
    }
}

#[test]
fn padding_width_follows_vehicle_count() {
    let cfg = MetricConfig::default();
    let tree = |kids: usize| {
        let t = oracle::OTree {
            f: [0.0; 3],
            kids: (0..kids)
                .map(|k| oracle::OTree {
                    f: [1.0 + k as f64, 0.0, 0.0],
                    kids: vec![],
                })
                .collect(),
        };
        scn_core::tree_metric::SceneTrees {
            v2v: oracle::to_arena(&t, scn_core::scene_graph::TreeKind::V2V, 3),
            v2n: oracle::to_arena(&t, scn_core::scene_graph::TreeKind::V2N, 3),
        }
    };
    let one = EncodedScenario {
        id: 1,
        itype: InteractionType::FollowingLine,
        frames: vec![EncodedFrame::new(0, tree(1), &cfg)],
    };
    let two = EncodedScenario {
        id: 2,
        frames: vec![EncodedFrame::new(0, tree(2), &cfg)],
        ..one.clone()
    };
    assert_eq!(pad_width(&vector_sequence(&one), &vector_sequence(&two)), 6);
    // [1,0,0,0,0,0] vs [1,0,0,2,0,0].
    assert_eq!(vector_dtw_baseline(&one, &two, &DtwConfig::default()).unwrap(), 2.0);
}

#[test]
fn planted_corpus_is_recovered() {
    let spec = labeling_corpus(2);
    let (ts, map, gt) = generate(&spec).unwrap();
    let atoms: Vec<AtomScenario> = slice_all(&ts, &map, &SliceConfig::default())
        .unwrap()
        .into_iter()
        .filter(|a| a.itype == InteractionType::DynamicConflictLine && gt.counts.iter().any(|c| c.ego == a.ego_id))
        .collect();
    assert_eq!(atoms.len(), 60);
    let report = label_scenarios(&atoms, &ts, &map, &MetricConfig::default(), &DtwConfig::default(), &LabelConfig::default()).unwrap();
    let mut noise = 0;
    for p in &gt.planted {
        let i = atoms.iter().position(|a| a.ego_id == p.ego).unwrap();
        let e = &report.entries[i];
        noise += e.cluster.is_noise() as usize;
        if p.kind == PlantKind::RightOfWay {
            assert!(e.flags.graph_dtw_extreme && !e.flags.ttc_extreme && !e.flags.vector_dtw_extreme);
        }
    }
    assert!(noise >= 8, "{noise} of 10 plants are noise");
    let v = report.venn;
    assert_eq!(v.g_only + v.t_only + v.v_only + v.g_t + v.g_v + v.t_v + v.g_t_v, v.union);
    assert_eq!(report.coordinates_csv().lines().count(), 61);
}

fn partition(labels: &[ClusterLabel], ids: &[usize]) -> BTreeSet<BTreeSet<usize>> {
    let mut groups: std::collections::BTreeMap<String, BTreeSet<usize>> = Default::default();
    for (l, &id) in labels.iter().zip(ids) {
        let key = if l.is_noise() { format!("noise{id}") } else { l.to_string() };
        groups.entry(key).or_default().insert(id);
    }
    groups.into_values().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dbscan_partition_ignores_input_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(5..30);
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let c = (i % 3) as f64 * 10.0;
                [c + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
            })
            .collect();
        let eps = rng.random_range(0.5..3.0);
        let mut order: Vec<usize> = (0..n).collect();
        order.reverse();
        order.rotate_left(n / 3);
        let d = planar_distances(&pts);
        let permuted: Vec<Vec<f64>> = order.iter().map(|&i| order.iter().map(|&j| d[i][j]).collect()).collect();
        let a = dbscan(&dm(d), eps, 4);
        let b = dbscan(&dm(permuted), eps, 4);
        // Border points reachable from two clusters may switch sides, so
        // compare core-point partitions and noise sets only.
        let ids: Vec<usize> = (0..n).collect();
        let core = |i: usize| (0..n).filter(|&j| (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]) <= eps).count() >= 4;
        let keep: Vec<usize> = ids.iter().copied().filter(|&i| core(i) || a[i].is_noise()).collect();
        let la: Vec<ClusterLabel> = keep.iter().map(|&i| a[i]).collect();
        let pos: Vec<usize> = keep.iter().map(|&i| order.iter().position(|&o| o == i).unwrap()).collect();
        let lb: Vec<ClusterLabel> = pos.iter().map(|&p| b[p]).collect();
        prop_assert_eq!(partition(&la, &keep), partition(&lb, &keep));
    }

    #[test]
    fn venn_regions_sum_to_union(flags in proptest::collection::vec(any::<(bool, bool, bool)>(), 1..40)) {
        let ids: Vec<u64> = (0..flags.len() as u64).collect();
        let set = |k: usize| FlagSet {
            ids: ids.clone(),
            flags: flags.iter().map(|f| [f.0, f.1, f.2][k]).collect(),
        };
        let v = compare_sets(&set(0), &set(1), &set(2)).unwrap();
        let union = flags.iter().filter(|f| f.0 || f.1 || f.2).count();
        prop_assert_eq!(v.g_only + v.t_only + v.v_only + v.g_t + v.g_v + v.t_v + v.g_t_v, union);
        prop_assert_eq!(v.union, union);
    }

    #[test]
    fn kde_is_positive_and_bounded(pts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..20), h in 0.1f64..5.0) {
        let coords: Vec<[f64; 2]> = pts.iter().map(|p| [p.0, p.1]).collect();
        let peak = 1.0 / (2.0 * std::f64::consts::PI * h * h);
        for d in kde_density(&coords, h) {
            prop_assert!(d > 0.0 && d <= peak * (1.0 + 1e-12));
        }
    }
}
