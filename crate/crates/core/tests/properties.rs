use std::collections::BTreeSet;

use proptest::prelude::*;
use publicself_core::belief::AttributedObservation;
use publicself_core::scenario::build_random;
use publicself_core::world::fov_cells;
use publicself_core::*;

fn mini() -> ModelConfig {
    ModelConfig::from_toml(
        "[grid]\nrows = 4\ncols = 6\n[fruits]\napples = 1\npears = 2\n\
         [observer]\nrow_lo = 0\nrow_hi = 3\ncol_lo = 1\ncol_hi = 4\n\
         [scenario]\nmax_frames = 15\n",
    )
    .unwrap()
}

fn swap_record(rec: &EpisodeRecord) -> EpisodeRecord {
    let mut out = rec.clone();
    out.meta.fruits = FruitCounts {
        apples: rec.meta.fruits.pears,
        pears: rec.meta.fruits.apples,
    };
    for f in &mut out.frames {
        f.state = f.state.swapped_kinds();
    }
    out
}

fn observation(state: &WorldState, cells: &BTreeSet<Cell>) -> AttributedObservation {
    AttributedObservation {
        cells: cells.clone(),
        contents: cells.iter().map(|&c| (c, state.content(c))).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posterior_is_normalized(seed in 0u64..10_000, pear in any::<bool>()) {
        let cfg = mini();
        let intention = if pear { Intention::GetPear } else { Intention::GetApple };
        let rec = build_random(intention, seed, &cfg).unwrap();
        for kind in [FilterKind::PublicSelf, FilterKind::Btom] {
            let planner = Planner::new(cfg.grid, cfg.policy);
            let trace = run_trace_with(&rec, &cfg, &planner, kind).unwrap();
            for r in &trace.rows {
                prop_assert!((r.p_apple + r.p_pear - 1.0).abs() <= 1e-12);
                prop_assert!((0.0..=1.0).contains(&r.p_apple));
            }
        }
    }

    #[test]
    fn relabeling_swaps_posterior(seed in 0u64..10_000) {
        let cfg = mini();
        let rec = build_random(Intention::GetApple, seed, &cfg).unwrap();
        let swapped = swap_record(&rec);
        let mut scfg = cfg.clone();
        scfg.fruits = swapped.meta.fruits;
        let a = run_trace(&rec, &cfg).unwrap();
        let b = run_trace(&swapped, &scfg).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            prop_assert!((x.p_apple - y.p_pear).abs() < 1e-12);
        }
    }

    #[test]
    fn disjoint_updates_commute(seed in 0u64..10_000, split in 0usize..24) {
        let cfg = mini();
        let state = publicself_core::world::spawn_with_counts(seed, cfg.grid, cfg.fruits).unwrap();
        let all: Vec<Cell> = cfg.grid.cells().collect();
        let (left, right) = all.split_at(split);
        let l: BTreeSet<Cell> = left.iter().copied().collect();
        let r: BTreeSet<Cell> = right.iter().copied().collect();
        let b = KnowledgeBelief::with_totals(cfg.grid, cfg.fruits).unwrap();
        let lr = b.update(&observation(&state, &l)).unwrap().update(&observation(&state, &r)).unwrap();
        let rl = b.update(&observation(&state, &r)).unwrap().update(&observation(&state, &l)).unwrap();
        prop_assert_eq!(lr, rl);
    }

    #[test]
    fn updates_never_add_worlds(seed in 0u64..10_000, picks in proptest::collection::vec(0usize..24, 0..10)) {
        let cfg = mini();
        let state = publicself_core::world::spawn_with_counts(seed, cfg.grid, cfg.fruits).unwrap();
        let mut b = KnowledgeBelief::with_totals(cfg.grid, cfg.fruits).unwrap();
        let mut count = b.count_worlds();
        for i in picks {
            let cells = BTreeSet::from([cfg.grid.cell_at(i)]);
            b = b.update(&observation(&state, &cells)).unwrap();
            let next = b.count_worlds();
            prop_assert!(next <= count);
            prop_assert!(next >= 1);
            count = next;
        }
    }

    #[test]
    fn cone_grows_with_angle_and_range(
        r in 0usize..7, c in 0usize..25, h in 0u8..8,
        a1 in 0.0f64..180.0, a2 in 0.0f64..180.0, r1 in 0.0f64..12.0, r2 in 0.0f64..12.0,
    ) {
        let grid = GridSpec::default();
        let pose = Pose::new(r, c, Heading::new(h).unwrap());
        let small = FovCone::new(a1.min(a2), r1.min(r2)).unwrap();
        let big = FovCone::new(a1.max(a2), r1.max(r2)).unwrap();
        let s = fov_cells(pose, small, grid);
        let b = fov_cells(pose, big, grid);
        prop_assert!(s.is_subset(&b));
        prop_assert!(s.contains(&pose.cell));
    }

    #[test]
    fn pearson_is_affine_invariant(
        xs in proptest::collection::vec(0.0f64..1.0, 3..30),
        noise in proptest::collection::vec(-0.5f64..0.5, 30),
        scale in 0.1f64..10.0, shift in -5.0f64..5.0,
    ) {
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, n)| x + n).collect();
        if let Ok(r) = pearson(&xs, &ys) {
            let t: Vec<f64> = ys.iter().map(|y| scale * y + shift).collect();
            let r2 = pearson(&xs, &t).unwrap();
            prop_assert!((r - r2).abs() < 1e-9);
            prop_assert!((r - pearson(&ys, &xs).unwrap()).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }
}
