//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain
//! binary (`harness = false`) and exits nonzero if any criterion fails.
//!
//! The desk-scale equilibrium (start 171, 5 mm cells) is solved once and
//! shared by criteria 5 and 7 to 9. Criterion 6 solves the start-501 leg at
//! 10 mm cells. Expect about 25 minutes on one core.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use anyhow::{anyhow, ensure, Result};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

use darts_core::board::NUM_LABELS;
use darts_core::eval::{head_to_head, match_win_prob, Combo, MatchSpec, StrategyTables};
use darts_core::leg::TurnPolicy;
use darts_core::rules::NsState;
use darts_core::sim::{simulate_legs, simulate_ns_turns};
use darts_core::skill::{fit_em, hit_distribution, simulate_throw, AimDataset, AimRow, EmConfig, Quadrature};
use darts_core::store::Cache;
use darts_core::turn::{slot_state, Reach};
use darts_core::{
    solve_ns, solve_ns_dartcount, ActionGrid, BoardGeometry, Covariance, Exec, HitTable, OutcomeLabel, Player,
    SkillModel, SolveConfig, Target, ZsgSolution,
};
use darts_service::{router, AppState, Catalog, MatchSession, PlayState, Recommendation, SessionView};

const DESK_START: u32 = 171;
const DESK_CELL: f64 = 5.0;
const OPP_SCALE: f64 = 1.1;
const GAIN_CELL: f64 = 10.0;

fn pro_hits(cell: f64, scale: f64) -> HitTable {
    let geom = BoardGeometry::default();
    let grid = geom.make_grid(cell).unwrap();
    HitTable::build(&geom, &SkillModel::synthetic_pro("pro", scale), &grid, Quadrature::default(), Exec::default())
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn criterion_1() -> Result<String> {
    let t = Instant::now();
    let geom = BoardGeometry::default();
    for z in OutcomeLabel::scoring() {
        let c = geom.region_center(z)?;
        ensure!(geom.classify_target(c) == z, "region centre of {z} classifies as {}", geom.classify_target(c));
    }
    let n = geom.make_grid(1.0)?.len();
    let rel = (n as f64 - 90_785.0).abs() / 90_785.0;
    ensure!(rel <= 0.005, "1 mm grid has {n} cells ({:.3}% off)", rel * 100.0);
    let el = t.elapsed();
    ensure!(el < Duration::from_secs(1), "took {}", secs(el));
    Ok(format!("62 labels round-trip; 1 mm grid has {n} cells ({:.3}% off); {}", rel * 100.0, secs(el)))
}

fn criterion_2() -> Result<String> {
    let geom = BoardGeometry::default();
    let q = Quadrature::default();
    let p = hit_distribution(&geom, &Covariance::isotropic(5.0)?, Target::new(0.0, 0.0), q);
    let want = 1.0 - (-(geom.r_db * geom.r_db) / 50.0).exp();
    let got = p[OutcomeLabel::DB.index()];
    ensure!((got - want).abs() <= 1e-3, "P(DB) = {got}, expected {want}");

    let t = Instant::now();
    let grid = geom.make_grid(1.0)?;
    let skill = SkillModel::synthetic_pro("pro", 1.0);
    let step = grid.len() / 100;
    let mut worst = 0.0f64;
    for k in 0..100 {
        let a = grid.targets()[k * step];
        let row = hit_distribution(&geom, &skill.sigma_for(&geom, a), a, q);
        ensure!(row.len() == NUM_LABELS);
        worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
    }
    let el = t.elapsed();
    ensure!(worst <= 1e-9, "row sum off by {worst:e}");
    ensure!(el < Duration::from_secs(10), "100 rows took {}", secs(el));
    Ok(format!("P(DB) = {got:.6} vs {want:.6}; max row error {worst:.1e}; 100 rows in {}", secs(el)))
}

fn criterion_3() -> Result<String> {
    let t = Instant::now();
    let geom = BoardGeometry::default();
    let truth = Covariance::new([[9.0, 2.0], [2.0, 16.0]])?;
    let targets: Vec<OutcomeLabel> = ["T20", "T19", "DB", "D16", "S5"].iter().map(|s| s.parse().unwrap()).collect();
    let skill = SkillModel::uniform("truth", truth);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts = BTreeMap::new();
    for k in 0..10_000 {
        let tr = targets[k % targets.len()];
        let (_, z) = simulate_throw(&geom, &skill, geom.region_center(tr)?, &mut rng);
        *counts.entry((tr.index(), z.index())).or_insert(0u64) += 1;
    }
    let rows = counts
        .into_iter()
        .map(|((t, z), count)| AimRow {
            target_region: OutcomeLabel::from_index(t).unwrap(),
            outcome: OutcomeLabel::from_index(z).unwrap(),
            count,
        })
        .collect();
    let data = AimDataset::new(rows)?;
    let cfg = EmConfig { track_likelihood: true, seed: 3, m_samples: 5000, ..EmConfig::default() };
    let fit = fit_em(&geom, &data, &cfg)?;
    let err = fit.sigma.frobenius_distance(&truth) / truth.frobenius();
    ensure!(err <= 0.15, "relative Frobenius error {err:.3}");
    let worst_drop = fit.log_likelihood.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
    ensure!(worst_drop <= 1e-2, "log-likelihood fell by {worst_drop}");
    let el = t.elapsed();
    ensure!(el < Duration::from_secs(120), "took {}", secs(el));
    Ok(format!(
        "relative Frobenius error {:.2}%; largest likelihood drop {:.1e}; {} iterations; {}",
        err * 100.0,
        worst_drop.max(0.0),
        fit.iterations,
        secs(el)
    ))
}

/// Fewest darts from every score when any label in `labels` can be hit at
/// will.
fn min_darts(labels: &[OutcomeLabel], start: usize) -> Vec<u32> {
    let mut best = vec![u32::MAX; start + 1];
    best[0] = 0;
    for s in 2..=start {
        for z in labels {
            let h = z.score() as usize;
            let next = if h == s && z.is_double() {
                Some(0)
            } else if h > 0 && s >= h + 2 {
                Some(s - h)
            } else {
                None
            };
            if let Some(n) = next.filter(|&n| best[n] != u32::MAX) {
                best[s] = best[s].min(best[n] + 1);
            }
        }
    }
    best
}

fn criterion_4() -> Result<String> {
    let geom = BoardGeometry::default();
    let grid = geom.make_grid(DESK_CELL)?;
    let perfect = HitTable::perfect(&geom, &grid);
    let cfg = SolveConfig::with_start(501);
    let labels: Vec<_> = grid.targets().iter().map(|t| geom.classify_target(*t)).collect();
    let oracle = min_darts(&labels, 501);
    let turns = solve_ns(&perfect, &cfg)?;
    let darts = solve_ns_dartcount(&perfect, &cfg)?;
    ensure!(turns.turns(501) == 3.0 && darts[501] == 9.0, "V(501) = {} turns, {} darts", turns.turns(501), darts[501]);
    for s in 2..=501usize {
        ensure!(darts[s] == oracle[s] as f64, "darts at {s}: {} vs {}", darts[s], oracle[s]);
        ensure!(turns.turns(s as u32) == oracle[s].div_ceil(3) as f64, "turns at {s}");
    }

    let mut toy_err = 0.0f64;
    for q in [0.05, 0.3, 0.77, 1.0] {
        let grid = ActionGrid::from_targets(1.0, vec![Target::new(0.0, 0.0)]);
        let mut row = [0.0; NUM_LABELS];
        row[OutcomeLabel::double(1).index()] = q;
        row[OutcomeLabel::MISS.index()] = 1.0 - q;
        let toy = HitTable::from_rows(grid, vec![row])?;
        let c = SolveConfig::with_start(2);
        let t = solve_ns(&toy, &c)?.turns(2);
        let d = solve_ns_dartcount(&toy, &c)?[2];
        toy_err = toy_err.max((t - 1.0 / (1.0 - (1.0 - q).powi(3))).abs()).max((d - 1.0 / q).abs());
    }
    ensure!(toy_err <= 1e-10, "toy closed forms off by {toy_err:e}");

    let hits = pro_hits(DESK_CELL, 1.0);
    let t = Instant::now();
    let sol = solve_ns(&hits, &cfg)?;
    let solve_time = t.elapsed();
    ensure!(solve_time < Duration::from_secs(300), "pro solve at 5 mm took {}", secs(solve_time));
    let est = simulate_ns_turns(&hits, &sol, 501, 100_000, 7, Exec::default())?;
    ensure!(est.agrees(sol.turns(501), 3.0), "rollouts {:.5} +- {:.5} vs {:.5}", est.mean, est.std_err, sol.turns(501));
    Ok(format!(
        "perfect: 3 turns, 9 darts, all scores match search; toy error {toy_err:.1e}; pro V(501) = {:.4} vs rollouts {:.4} +- {:.4}; solve {}",
        sol.turns(501),
        est.mean,
        est.std_err,
        secs(solve_time)
    ))
}

struct Desk {
    hits_a: HitTable,
    hits_b: HitTable,
    sol: ZsgSolution,
    solve_time: Duration,
    tables: StrategyTables,
    table_time: Duration,
}

fn desk() -> &'static Result<Desk, String> {
    static D: OnceLock<Result<Desk, String>> = OnceLock::new();
    D.get_or_init(|| {
        let hits_a = pro_hits(DESK_CELL, 1.0);
        let hits_b = pro_hits(DESK_CELL, OPP_SCALE);
        let cfg = SolveConfig::with_start(DESK_START);
        let t = Instant::now();
        let sol = darts_core::zsg::solve_equilibrium_with(&hits_a, &hits_b, &cfg, true).map_err(|e| e.to_string())?;
        let solve_time = t.elapsed();
        let t = Instant::now();
        let tables = StrategyTables::compute(&sol, &hits_a, &hits_b, &Combo::ALL, &cfg).map_err(|e| e.to_string())?;
        Ok(Desk { hits_a, hits_b, sol, solve_time, tables, table_time: t.elapsed() })
    })
}

fn desk_ok() -> Result<&'static Desk> {
    desk().as_ref().map_err(|e| anyhow!("desk-scale solve failed: {e}"))
}

fn criterion_5() -> Result<String> {
    let d = desk_ok()?;
    let sol = &d.sol;
    let hist = sol.history.as_ref().ok_or_else(|| anyhow!("no bound history"))?;
    let ix = sol.values.index;
    let mut max_gap = 0.0f64;
    for s_a in 2..=DESK_START {
        for s_b in 2..=DESK_START {
            let k = ix.of(s_a, s_b);
            let j = sol.values.a_turn[k][0];
            let slack = sol.rel_tol * j;
            for &(lo, hi) in &hist[k] {
                ensure!(lo <= j + slack && j <= hi + slack, "bounds [{lo}, {hi}] miss J* = {j} at ({s_a},{s_b})");
            }
            max_gap = max_gap.max(sol.upper[k] - sol.lower[k]);
        }
    }
    ensure!(max_gap < 1e-9, "final gap {max_gap:e}");
    let share = sol.share_within(5);
    ensure!(share >= 0.95, "only {:.2}% of blocks within 5 alternations", share * 100.0);

    let chain = [Combo::NB, Combo::NE, Combo::EE, Combo::EN, Combo::BN];
    let mut worst = 0.0f64;
    for s_a in 2..=DESK_START {
        for s_b in 2..=DESK_START {
            for p in [Player::A, Player::B] {
                let v: Vec<f64> = chain.iter().map(|&c| d.tables.get(c).unwrap().a_wins(p, s_a, s_b)).collect();
                for w in v.windows(2) {
                    worst = worst.max(w[0] - w[1]);
                }
            }
        }
    }
    ensure!(worst <= 1e-9, "ordering chain violated by {worst:e}");
    ensure!(d.solve_time < Duration::from_secs(1800), "solve took {}", secs(d.solve_time));
    Ok(format!(
        "max final gap {max_gap:.1e}; alternations {:?}; {:.2}% within 5; chain holds (worst {:.1e}); solve {}, tables {}",
        sol.alternation_histogram(),
        share * 100.0,
        worst.max(0.0),
        secs(d.solve_time),
        secs(d.table_time)
    ))
}

/// Start-501 equilibrium at 10 mm cells: about 13 minutes and 1.1 GB on one
/// core. Reused from `DARTS_CACHE_DIR` when set.
fn criterion_6() -> Result<String> {
    let hits_a = pro_hits(GAIN_CELL, 1.0);
    let hits_b = pro_hits(GAIN_CELL, OPP_SCALE);
    let cfg = SolveConfig::with_start(501);
    let t = Instant::now();
    let sol = match Cache::from_env() {
        Some(c) => c.zsg(&hits_a, &hits_b, &cfg)?,
        None => darts_core::solve_equilibrium(&hits_a, &hits_b, &cfg)?,
    };
    let solve_time = t.elapsed();
    let tables = StrategyTables::compute(&sol, &hits_a, &hits_b, &[Combo::EE, Combo::NE], &cfg)?;
    drop(sol);
    let ee = tables.get(Combo::EE).unwrap().a_wins(Player::A, 501, 501);
    let ne = tables.get(Combo::NE).unwrap().a_wins(Player::A, 501, 501);
    let gain = ee - ne;
    ensure!((0.0..=0.02).contains(&gain), "gain {:.4}% outside [0, 2%]", gain * 100.0);
    Ok(format!(
        "single-leg gain at (501,501), {GAIN_CELL} mm cells = {:.4}% (P(E-E) {ee:.6}, P(N-E) {ne:.6}); solve {}",
        gain * 100.0,
        secs(solve_time)
    ))
}

fn enumerate_match(legs: u32, p_a: f64, p_b: f64) -> f64 {
    let mut total = 0.0;
    for mask in 0u32..(1 << legs) {
        let mut prob = 1.0;
        for leg in 0..legs {
            let p = if leg % 2 == 0 { p_a } else { p_b };
            prob *= if mask & (1 << leg) != 0 { p } else { 1.0 - p };
        }
        if mask.count_ones() > legs / 2 {
            total += prob;
        }
    }
    total
}

fn criterion_7() -> Result<String> {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (p_a, p_b): (f64, f64) = (rng.random(), rng.random());
        for n in [1, 3, 5, 7] {
            let exact = match_win_prob(&MatchSpec::new(n, p_a, p_b))?;
            worst = worst.max((exact - enumerate_match(n, p_a, p_b)).abs());
        }
    }
    ensure!(worst <= 1e-12, "enumeration mismatch {worst:e}");
    let half = match_win_prob(&MatchSpec::new(1001, 0.5, 0.5))?;
    ensure!(half == 0.5, "pA = pB = 0.5 gives {half}");
    let el = t.elapsed();
    let d = desk_ok()?;
    let rows = d.tables.gain_rows(&[1, 31])?;
    ensure!(rows[1].gain > rows[0].gain, "Gain(31) = {:e} not above Gain(1) = {:e}", rows[1].gain, rows[0].gain);
    ensure!(el < Duration::from_secs(60));
    Ok(format!(
        "enumeration error {worst:.1e}; 0.5 exact; Gain(1) = {:.4}%, Gain(31) = {:.4}% (x{:.2})",
        rows[0].gain * 100.0,
        rows[1].gain * 100.0,
        rows[1].gain / rows[0].gain
    ))
}

fn criterion_8() -> Result<String> {
    let d = desk_ok()?;
    let sol = &d.sol;
    let (e_a, e_b) = (sol.policy.side(Player::A), sol.policy.side(Player::B));
    let ee = head_to_head(&e_a, &e_b, &d.hits_a, &d.hits_b, DESK_START, Exec::default())?;
    let mut worst = 0.0f64;
    for (got, want) in [(&ee.a_turn, &sol.values.a_turn), (&ee.b_turn, &sol.values.b_turn)] {
        for (g, w) in got.iter().zip(want.iter()) {
            for (x, y) in g.iter().zip(w) {
                if y.is_nan() {
                    ensure!(x.is_nan(), "evaluator has a value where the solution has none");
                    continue;
                }
                worst = worst.max((x - y).abs() / y.abs().max(1e-12));
            }
        }
    }
    ensure!(worst <= sol.rel_tol, "evaluator differs from J* by {worst:e} relative");

    let s = DESK_START;
    let mut report = Vec::new();
    let pols: [(&str, Combo, &dyn TurnPolicy); 2] = [("E-E", Combo::EE, &e_a), ("N-E", Combo::NE, &sol.ns_a)];
    for (name, combo, pol_a) in pols {
        let exact = d.tables.get(combo).unwrap().a_wins(Player::A, s, s);
        let est = simulate_legs(pol_a, &e_b, &d.hits_a, &d.hits_b, (s, s), Player::A, 100_000, 21, Exec::default())?;
        ensure!(est.agrees(exact, 3.0), "{name}: rollouts {:.5} +- {:.5} vs {exact:.5}", est.mean, est.std_err);
        report.push(format!("{name} {exact:.5} vs {:.5} +- {:.5}", est.mean, est.std_err));
    }
    Ok(format!("max relative deviation from J* {worst:.1e}; {}", report.join("; ")))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> Result<(StatusCode, Value)> {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))?;
    let resp = app.clone().oneshot(req).await?;
    let status = resp.status();
    let bytes = resp.into_body().collect().await?.to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes)? };
    Ok((status, v))
}

async fn service_checks(d: &Desk) -> Result<String> {
    let mut cat = Catalog::new(BoardGeometry::default());
    cat.add_player("pro", d.hits_a.clone());
    cat.add_player("pro-b", d.hits_b.clone());
    cat.add_solution("desk", d.sol.clone()).ok_or_else(|| anyhow!("solution not accepted"))?;
    let app = router(AppState::new(cat));
    let (status, v) =
        call(&app, "POST", "/sessions", Some(json!({"solutionA": "pro", "solutionB": "pro-b", "legs": 3}))).await?;
    ensure!(status == StatusCode::CREATED, "create session: {v}");
    let sess: SessionView = serde_json::from_value(v)?;
    let sol = &d.sol;

    let golden = |rec: &Recommendation| -> Result<()> {
        let s = rec.state.to_solution(false);
        let own = if s.thrower == Player::A { s.st.s_a } else { s.st.s_b };
        let hits = if s.thrower == Player::A { &d.hits_a } else { &d.hits_b };
        let a = sol.action(s.thrower, s.st).ok_or_else(|| anyhow!("no table action at {:?}", rec.state))?;
        let j = sol.j(s.thrower, s.st).unwrap();
        let ns = sol.ns(s.thrower).action(NsState { s: own, i: s.st.i, u: s.st.u }).unwrap();
        ensure!(
            rec.equilibrium.action == a && rec.equilibrium.target == hits.target(a),
            "target differs at {:?}",
            rec.state
        );
        ensure!(rec.win_probability.to_bits() == j.to_bits(), "J* differs at {:?}", rec.state);
        ensure!(rec.non_strategic.action == ns, "NS target differs at {:?}", rec.state);
        Ok(())
    };

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let scores = [rng.random_range(2..=DESK_START), rng.random_range(2..=DESK_START)];
        let to_throw = rng.random_range(0..2usize);
        let slots: Vec<usize> = Reach::new(scores[to_throw]).slots().collect();
        let (i, u) = slot_state(slots[rng.random_range(0..slots.len())]);
        let state = PlayState { scores, to_throw, i, u };
        let (status, v) = call(&app, "POST", &format!("/sessions/{}/whatif", sess.id), Some(json!(state))).await?;
        ensure!(status == StatusCode::OK, "whatif {state:?}: {v}");
        golden(&serde_json::from_value(v)?)?;
    }

    let mut inputs = Vec::new();
    let mut last = sess.clone();
    while last.winner.is_none() {
        let (_, v) = call(&app, "GET", &format!("/sessions/{}/recommendation", last.id), None).await?;
        let rec: Recommendation = serde_json::from_value(v)?;
        golden(&rec)?;
        let aim = rec.equilibrium.target;
        let input =
            json!({"point": {"x": aim.x + rng.random_range(-12.0..12.0), "y": aim.y + rng.random_range(-12.0..12.0)}});
        let (status, v) = call(&app, "POST", &format!("/sessions/{}/dart", last.id), Some(input.clone())).await?;
        ensure!(status == StatusCode::OK, "dart: {v}");
        inputs.push(input);
        last = serde_json::from_value(v["session"].clone())?;
        ensure!(inputs.len() < 10_000, "match did not finish");
    }
    let (_, v) =
        call(&app, "POST", "/sessions", Some(json!({"solutionA": "pro", "solutionB": "pro-b", "legs": 3}))).await?;
    let again: SessionView = serde_json::from_value(v)?;
    let mut replayed = again.clone();
    for input in &inputs {
        let (_, v) = call(&app, "POST", &format!("/sessions/{}/dart", again.id), Some(input.clone())).await?;
        replayed = serde_json::from_value(v["session"].clone())?;
    }
    ensure!(SessionView { id: last.id.clone(), ..replayed } == last, "replayed session differs");
    let rebuilt = MatchSession::replay(last.legs, last.start, &last.history).map_err(|e| anyhow!("{e:?}"))?;
    ensure!(rebuilt.play_state() == last.state && rebuilt.legs_won == last.legs_won, "history replay differs");
    Ok(format!(
        "1000 what-if states and {} live recommendations match the tables; replay of {} darts identical",
        inputs.len(),
        inputs.len()
    ))
}

fn criterion_9() -> Result<String> {
    let d = desk_ok()?;
    let t = Instant::now();
    let rt = tokio::runtime::Runtime::new()?;
    let msg = rt.block_on(service_checks(d))?;
    let el = t.elapsed();
    ensure!(el < Duration::from_secs(60), "took {}", secs(el));
    Ok(format!("{msg}; {}", secs(el)))
}

fn main() -> ExitCode {
    type Check = fn() -> Result<String>;
    let criteria: [(u32, &str, Check); 9] = [
        (1, "geometry", criterion_1),
        (2, "hit distribution", criterion_2),
        (3, "EM fit", criterion_3),
        (4, "non-strategic solver", criterion_4),
        (5, "equilibrium at desk scale", criterion_5),
        (6, "single-leg gain", criterion_6),
        (7, "match combinatorics", criterion_7),
        (8, "head-to-head evaluator", criterion_8),
        (9, "advisor service", criterion_9),
    ];
    let mut failed = 0;
    for (n, name, f) in criteria {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(anyhow!("panicked: {}", msg.unwrap_or_default()))
        });
        let el = secs(t.elapsed());
        match outcome {
            Ok(detail) => println!("PASS criterion {n} ({name}): {detail} [{el}]"),
            Err(e) => {
                failed += 1;
                println!("FAIL criterion {n} ({name}): {e:#} [{el}]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
