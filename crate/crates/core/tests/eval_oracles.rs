mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use darts_core::eval::{gain, head_to_head, match_win_prob, turn_kernel, MatchSpec};
use darts_core::leg::TurnPolicy;
use darts_core::ns::solve_ns;
use darts_core::sim::{simulate_legs, simulate_ns_turns};
use darts_core::turn::{NO_ACTION, NUM_SLOTS};
use darts_core::{BoardGeometry, Exec, HitTable, OutcomeLabel, Player, SolveConfig};

/// Plays out every sequence of leg results with alternating starters.
fn enumerate_match(legs: u32, p_a: f64, p_b: f64) -> f64 {
    let mut total = 0.0;
    for mask in 0u32..(1 << legs) {
        let mut prob = 1.0;
        for leg in 0..legs {
            let a_wins = mask & (1 << leg) != 0;
            let p = if leg % 2 == 0 { p_a } else { p_b };
            prob *= if a_wins { p } else { 1.0 - p };
        }
        if mask.count_ones() > legs / 2 {
            total += prob;
        }
    }
    total
}

#[test]
fn match_probability_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let (p_a, p_b): (f64, f64) = (rng.random(), rng.random());
        for n in [1, 3, 5, 7] {
            let exact = match_win_prob(&MatchSpec::new(n, p_a, p_b)).unwrap();
            let brute = enumerate_match(n, p_a, p_b);
            assert!((exact - brute).abs() <= 1e-12, "N={n} pA={p_a} pB={p_b}: {exact} vs {brute}");
        }
        let g = gain((p_a, p_b), (p_b, p_a), 5).unwrap();
        assert!((g - (enumerate_match(5, p_a, p_b) - enumerate_match(5, p_b, p_a))).abs() <= 1e-12);
    }
    assert_eq!(match_win_prob(&MatchSpec::new(5, 0.5, 0.5)).unwrap(), 0.5);
    let flipped = MatchSpec { b_starts: true, ..MatchSpec::new(5, 0.7, 0.4) };
    assert!((match_win_prob(&flipped).unwrap() - (1.0 - enumerate_match(5, 0.6, 0.3))).abs() < 1e-12);
}

#[test]
fn toy_kernel_is_three_trials() {
    let sparse = common::toy_d1(0.3).sparse();
    let row = turn_kernel(&sparse, 2, &[0; NUM_SLOTS]).unwrap();
    let fail = 0.7f64.powi(3);
    assert!((row[0] - (1.0 - fail)).abs() < 1e-15);
    assert!((row[2] - fail).abs() < 1e-15);
    assert_eq!(row[1], 0.0);
}

#[test]
fn treble_twenty_from_180_busts() {
    let geom = BoardGeometry::default();
    let grid = geom.make_grid(5.0).unwrap();
    let hits = HitTable::perfect(&geom, &grid);
    let t20 = grid.nearest(geom.region_center(OutcomeLabel::treble(20)).unwrap()).unwrap();
    assert_eq!(geom.classify_target(hits.target(t20)), OutcomeLabel::treble(20));
    let row = turn_kernel(&hits.sparse(), 180, &[t20 as u32; NUM_SLOTS]).unwrap();
    assert_eq!(row[180], 1.0);
    assert_eq!(row.iter().sum::<f64>(), 1.0);
}

#[test]
fn kernel_rows_are_distributions() {
    let hits = common::pro_hits(10.0, 1.0);
    let ns = solve_ns(&hits, &SolveConfig::with_start(501)).unwrap();
    let sparse = hits.sparse();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let s = rng.random_range(2..=501u32);
        let row = turn_kernel(&sparse, s, ns.turn_actions(s, 501)).unwrap();
        assert_eq!(row.len(), s as usize + 1);
        assert_eq!(row[1], 0.0);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12, "s={s}");
    }
    assert!(turn_kernel(&sparse, 40, &[NO_ACTION; NUM_SLOTS]).is_err());
}

#[test]
fn alternating_race_closed_form() {
    let q = 0.2;
    let hits = common::toy_d1(q);
    let ns = solve_ns(&hits, &SolveConfig::with_start(2)).unwrap();
    let v = head_to_head(&ns, &ns, &hits, &hits, 2, Exec::default()).unwrap();
    let a = 1.0 - (1.0 - q).powi(3);
    let expected = a / (1.0 - (1.0 - a) * (1.0 - a));
    assert!((v.a_wins(Player::A, 2, 2) - expected).abs() < 1e-14);
    assert!((v.a_wins(Player::B, 2, 2) - (1.0 - expected)).abs() < 1e-14);
}

#[test]
fn head_to_head_agrees_with_simulation() {
    let hits_a = common::pro_hits(10.0, 1.0);
    let hits_b = common::pro_hits(10.0, 1.3);
    let cfg = SolveConfig::with_start(101);
    let ns_a = solve_ns(&hits_a, &cfg).unwrap();
    let ns_b = solve_ns(&hits_b, &cfg).unwrap();
    let v = head_to_head(&ns_a, &ns_b, &hits_a, &hits_b, 101, Exec::default()).unwrap();
    for (scores, starter) in [((101, 101), Player::A), ((60, 90), Player::B)] {
        let est = simulate_legs(&ns_a, &ns_b, &hits_a, &hits_b, scores, starter, 100_000, 9, Exec::default()).unwrap();
        let exact = v.a_wins(starter, scores.0, scores.1);
        assert!(est.agrees(exact, 3.0), "{scores:?}: {} +- {} vs {exact}", est.mean, est.std_err);
    }
}

#[test]
fn ns_turns_agree_with_simulation() {
    let hits = common::pro_hits(10.0, 1.0);
    let ns = solve_ns(&hits, &SolveConfig::with_start(301)).unwrap();
    let est = simulate_ns_turns(&hits, &ns, 301, 100_000, 4, Exec::default()).unwrap();
    assert!(est.agrees(ns.turns(301), 3.0), "{} +- {} vs {}", est.mean, est.std_err, ns.turns(301));
}

#[test]
fn simulation_is_deterministic_across_executors() {
    let hits = common::pro_hits(10.0, 1.0);
    let ns = solve_ns(&hits, &SolveConfig::with_start(60)).unwrap();
    let par = simulate_ns_turns(&hits, &ns, 60, 5_000, 1, Exec::Parallel).unwrap();
    let seq = simulate_ns_turns(&hits, &ns, 60, 5_000, 1, Exec::Sequential).unwrap();
    assert_eq!(par, seq);
}
