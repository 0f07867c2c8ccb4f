use darts_core::board::NUM_LABELS;
use darts_core::hits::HitTable;
use darts_core::ns::{ns_bellman_residual, solve_ns, solve_ns_dartcount, SolveConfig};
use darts_core::rules::NsState;
use darts_core::{ActionGrid, BoardGeometry, OutcomeLabel, Target};

/// Fewest darts to finish from every score when any label in `labels` can
/// be hit at will, found by breadth-first search over scores.
fn min_darts(labels: &[OutcomeLabel], start: usize) -> Vec<u32> {
    let mut best = vec![u32::MAX; start + 1];
    best[0] = 0;
    for s in 2..=start {
        for z in labels {
            let h = z.score() as usize;
            let next = if h == s && z.is_double() {
                Some(0)
            } else if s >= h + 2 && h > 0 {
                Some(s - h)
            } else {
                None
            };
            if let Some(n) = next {
                if best[n] != u32::MAX {
                    best[s] = best[s].min(best[n] + 1);
                }
            }
        }
    }
    best
}

fn toy_d1(q: f64) -> HitTable {
    let grid = ActionGrid::from_targets(1.0, vec![Target::new(0.0, 0.0)]);
    let mut row = [0.0; NUM_LABELS];
    row[OutcomeLabel::double(1).index()] = q;
    row[OutcomeLabel::MISS.index()] = 1.0 - q;
    HitTable::from_rows(grid, vec![row]).unwrap()
}

#[test]
fn perfect_thrower_needs_three_turns_and_nine_darts() {
    let geom = BoardGeometry::default();
    let grid = ActionGrid::new(&geom, 5.0).unwrap();
    let hits = HitTable::perfect(&geom, &grid);
    let labels: Vec<_> = grid.targets().iter().map(|t| geom.classify_target(*t)).collect();
    let oracle = min_darts(&labels, 501);
    assert_eq!(oracle[501], 9);

    let cfg = SolveConfig::with_start(501);
    let sol = solve_ns(&hits, &cfg).unwrap();
    let darts = solve_ns_dartcount(&hits, &cfg).unwrap();
    assert_eq!(sol.turns(501), 3.0);
    assert_eq!(darts[501], 9.0);
    for s in 2..=501usize {
        assert_eq!(darts[s], oracle[s] as f64, "s={s}");
        assert_eq!(sol.turns(s as u32), oracle[s].div_ceil(3) as f64, "s={s}");
    }
    assert_eq!(sol.value(NsState::start(0)), Some(0.0));
}

#[test]
fn single_double_toy_matches_closed_forms() {
    for q in [0.05, 0.3, 0.77, 1.0] {
        let hits = toy_d1(q);
        let cfg = SolveConfig::with_start(2);
        let sol = solve_ns(&hits, &cfg).unwrap();
        let turns = 1.0 / (1.0 - (1.0 - q).powi(3));
        assert!((sol.turns(2) - turns).abs() < 1e-10 * turns, "q={q}");
        let darts = solve_ns_dartcount(&hits, &cfg).unwrap();
        assert!((darts[2] - 1.0 / q).abs() < 1e-10 / q);
    }
}

#[test]
fn darts_bounded_by_three_per_turn_and_residual_small() {
    use darts_core::skill::{Quadrature, SkillModel};
    let geom = BoardGeometry::default();
    let grid = ActionGrid::new(&geom, 10.0).unwrap();
    let skill = SkillModel::synthetic_pro("p", 1.0);
    let hits = HitTable::build(&geom, &skill, &grid, Quadrature::default(), Default::default());
    let cfg = SolveConfig::with_start(120);
    let sol = solve_ns(&hits, &cfg).unwrap();
    let darts = solve_ns_dartcount(&hits, &cfg).unwrap();
    for s in 2..=120u32 {
        let t = sol.turns(s);
        assert!(t >= 1.0 && t.is_finite());
        assert!(darts[s as usize] <= 3.0 * t + 1e-9, "s={s}");
    }
    assert!(ns_bellman_residual(&hits, &sol) < 1e-9);
}
