use std::sync::Arc;

use proptest::prelude::*;

use ws_sim_core::coverage::CoverageGrid;
use ws_sim_core::dynamics::{
    detect_collisions, step, update_energy, Action, Body, EnergyParams, Entity, WorldState,
};
use ws_sim_core::harness::bench::{summarize, BenchPlanner, EpisodeRow};
use ws_sim_core::harness::metrics::RewardTotals;
use ws_sim_core::harness::{run_episode, EpisodeMetrics, EpisodeTrace};
use ws_sim_core::observation::observe_all;
use ws_sim_core::planners::bcd::{allocate_lanes, bcd_decompose};
use ws_sim_core::planners::kmeans::kmeans_partition;
use ws_sim_core::planners::plan::split_balanced;
use ws_sim_core::planners::{PlannerKind, Scripted};
use ws_sim_core::rewards::energy_penalty;
use ws_sim_core::world::{rasterize, CellGrid, Point, Scenario};

fn grid_from(w: usize, h: usize, holes: &[(usize, usize)]) -> CellGrid {
    CellGrid::from_fn(w, h, Point::ORIGIN, 1.0, |x, y| !holes.contains(&(x, y)))
}

fn actions(n: usize) -> impl Strategy<Value = Vec<Vec<Action>>> {
    prop::collection::vec(
        prop::collection::vec(
            (-1.5f64..1.5, -1.5f64..1.5).prop_map(|(v, w)| Action::new(v, w)),
            n,
        ),
        1..40,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_stays_within_capacity(
        e in 0.0f64..=100.0,
        d in 0.0f64..5.0,
        docked: bool,
        rate in 0.01f64..30.0,
    ) {
        let p = EnergyParams { e_discharge: rate, e_charge: 3.0 * rate, ..EnergyParams::with_capacity(100.0) };
        let next = update_energy(e, d, docked, &p);
        prop_assert!((0.0..=100.0).contains(&next));
    }

    #[test]
    fn penalty_is_bounded_and_zero_above_threshold(p in -2.0f64..2.0, pe in 0.01f64..0.99) {
        let r = energy_penalty(p, pe);
        prop_assert!((-1.0..=0.0).contains(&r));
        prop_assert_eq!(r == 0.0, p >= pe);
    }

    #[test]
    fn collisions_ignore_body_order(
        pts in prop::collection::vec((0.0f64..3.0, 0.0f64..3.0, 0.1f64..0.5), 1..10),
        rot in 0usize..10,
    ) {
        let bodies: Vec<Body> = pts.iter().enumerate().map(|(i, &(x, y, r))| Body {
            entity: match i % 3 { 0 => Entity::Worker(i), 1 => Entity::Station(i), _ => Entity::Interferer(i) },
            center: Point::new(x, y),
            radius: r,
            docked_to: None,
        }).collect();
        let mut shuffled = bodies.clone();
        shuffled.rotate_left(rot % bodies.len());
        prop_assert_eq!(detect_collisions(&bodies, |_| false), detect_collisions(&shuffled, |_| false));
    }

    #[test]
    fn episodes_keep_energy_coverage_and_reward_invariants(script in actions(2), seed: u64) {
        let mut s = Scenario::minimal(14.0, 11.0);
        s.interferer.count = 3;
        s.max_steps = 60;
        s.energy.e_discharge = 4.0;
        let (m, t) = run_episode(&s, &mut Scripted::new(script), seed, "prop").unwrap();
        let mut prev = 0;
        for r in &t.steps {
            prop_assert!(r.covered >= prev);
            prev = r.covered;
            prop_assert!(r.state.workers.iter().all(|w| (0.0..=s.energy.capacity).contains(&w.energy)));
        }
        prop_assert!(m.coverage_curve.windows(2).all(|w| w[0] <= w[1]));
        let cells: usize = t.steps.iter().flat_map(|r| r.newly_covered.iter()).sum();
        prop_assert_eq!(cells, prev);
        if let Some(tf) = m.t_finish {
            prop_assert!(tf <= s.max_steps);
        }
        let back = EpisodeTrace::read_jsonl(t.to_jsonl().as_bytes()).unwrap();
        prop_assert_eq!(EpisodeMetrics::from_trace(&back), m);
    }

    #[test]
    fn observations_have_fixed_shapes(script in actions(2), seed: u64) {
        let mut s = Scenario::minimal(16.0, 12.0);
        s.interferer.count = 2;
        let mut state = WorldState::new(&s, seed).unwrap();
        let mut cov = CoverageGrid::new(Arc::new(rasterize(&s).unwrap()), 1);
        for acts in &script {
            if cov.is_finished() {
                break;
            }
            step(&s, &mut state, &mut cov, acts).unwrap();
            for o in observe_all(&s, &state, &cov) {
                prop_assert_eq!(o.zero.len(), o.role.zero_len());
                let ps = s.observation.perception_size;
                prop_assert_eq!(o.perception.pixels.len(), ps * ps * o.role.perception_channels().len());
                prop_assert!(o.comm.pixels.iter().all(|&b| b <= 1));
            }
        }
    }

    #[test]
    fn bcd_cells_partition_free_space(
        w in 1usize..20, h in 1usize..15,
        holes in prop::collection::vec((0usize..20, 0usize..15), 0..60),
    ) {
        let grid = grid_from(w, h, &holes);
        let mut seen = vec![0u8; grid.len()];
        for c in bcd_decompose(&grid) {
            prop_assert!(c.neighbors.iter().all(|&n| n != c.id));
            for (dx, &(lo, hi)) in c.intervals.iter().enumerate() {
                for y in lo..=hi {
                    seen[grid.index(c.col_start + dx, y)] += 1;
                }
            }
        }
        for (i, &n) in seen.iter().enumerate() {
            prop_assert_eq!(n, u8::from(grid.is_free(i)));
        }
    }

    #[test]
    fn kmeans_labels_every_cell_once(
        w in 1usize..12, h in 1usize..12,
        holes in prop::collection::vec((0usize..12, 0usize..12), 0..40),
        k in 1usize..6, seed: u64,
    ) {
        let grid = grid_from(w, h, &holes);
        let cells: Vec<usize> = grid.free_indices().collect();
        prop_assume!(!cells.is_empty());
        let part = kmeans_partition(&grid, &cells, k, seed);
        prop_assert_eq!(part.len(), k.min(cells.len()));
        prop_assert_eq!(part.members.iter().map(Vec::len).sum::<usize>(), cells.len());
        for &c in &cells {
            let l = part.labels[c].unwrap();
            prop_assert!(part.members[l].binary_search(&c).is_ok());
        }
        prop_assert_eq!(part, kmeans_partition(&grid, &cells, k, seed));
    }

    #[test]
    fn lane_allocation_assigns_each_lane_once(lengths in prop::collection::vec(0.0f64..50.0, 0..30), m in 1usize..6) {
        let alloc = allocate_lanes(&lengths, m);
        prop_assert_eq!(alloc.len(), m);
        let mut all: Vec<usize> = alloc.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..lengths.len()).collect::<Vec<_>>());
    }

    #[test]
    fn balanced_split_preserves_order(n in 0usize..60, m in 1usize..7) {
        let pts: Vec<Point> = (0..n).map(|k| Point::new((k * k % 7) as f64, k as f64)).collect();
        let parts = split_balanced(&pts, m);
        prop_assert_eq!(parts.len(), m);
        prop_assert_eq!(parts.concat(), pts);
    }

    #[test]
    fn bench_means_match_episode_records(ts in prop::collection::vec(prop::option::of(1u64..5000), 1..12)) {
        let rows: Vec<EpisodeRow> = ts.iter().enumerate().map(|(k, &t)| {
            let m = EpisodeMetrics {
                t_finish: t,
                steps: t.unwrap_or(9000),
                coverage_ratio: if t.is_some() { 1.0 } else { 0.5 },
                coverage_curve: vec![],
                collisions: 0,
                collisions_while_waiting: 0,
                worker_distance: vec![],
                station_distance: vec![],
                recharge_events: 0,
                discounted_return: 0.0,
                reward_totals: RewardTotals::default(),
            };
            EpisodeRow { scenario: "s".into(), planner: BenchPlanner::Baseline(PlannerKind::MobileBcd), seed: k as u64, metrics: Some(m), error: None }
        }).collect();
        let sum = &summarize(&rows)[0];
        prop_assert_eq!(sum.seeds, ts.len());
        let done: Vec<u64> = ts.iter().flatten().copied().collect();
        prop_assert_eq!(sum.failures, ts.len() - done.len());
        if sum.failures == 0 {
            let mean = done.iter().sum::<u64>() as f64 / done.len() as f64;
            prop_assert!((sum.mean_t_finish.unwrap() - mean).abs() < 1e-9);
        } else {
            prop_assert_eq!(sum.mean_t_finish, None);
        }
        prop_assert_eq!(sum.min_t_finish, done.iter().min().copied());
    }
}
