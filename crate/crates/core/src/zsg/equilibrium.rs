use super::ZsgSolution;
use crate::error::{Error, Result};
use crate::hits::{HitTable, SparseHits};
use crate::leg::{BlockIndex, LegPolicy, LegValues};
use crate::ns::{solve_ns_sparse, NsSolution, SolveConfig};
use crate::turn::{evaluate_policy, SelfLink, TurnContext, TurnEngine, NUM_SLOTS};

struct Worker<'h> {
    eng_a: TurnEngine<'h>,
    eng_b: TurnEngine<'h>,
    cont_a: Vec<f64>,
    cont_b: Vec<f64>,
}

struct BlockOutcome {
    a_vals: [f64; NUM_SLOTS],
    b_vals: [f64; NUM_SLOTS],
    a_pol: [u32; NUM_SLOTS],
    b_pol: [u32; NUM_SLOTS],
    lower: f64,
    upper: f64,
    alternations: u32,
    history: Vec<(f64, f64)>,
}

/// Start value of A when A's turn has start coefficients `(aa, ba)` and
/// B's `(ab, bb)`; a leg that can never end is worth nothing.
pub(crate) fn pair_value(aa: f64, ba: f64, ab: f64, bb: f64) -> (f64, f64) {
    let denom = 1.0 - ba * bb;
    let w = if denom > 1e-15 { (aa + ba * (1.0 - ab - bb)) / denom } else { 0.0 };
    let v = ab + bb * (1.0 - w);
    (w, v)
}

/// Equilibrium of the leg for every pair of scores up to `cfg.start_score`.
///
/// Blocks are solved in ascending order of `s_a + s_b`; all blocks with the
/// same sum are independent. Within a block, A and B alternate best
/// responses over their own turn states, starting from B's non-strategic
/// policy, until A's best-response value (an upper bound) and A's value
/// against B's best response (a lower bound) agree to `cfg.rel_tol`.
pub fn solve_equilibrium(hits_a: &HitTable, hits_b: &HitTable, cfg: &SolveConfig) -> Result<ZsgSolution> {
    solve_equilibrium_with(hits_a, hits_b, cfg, false)
}

/// As [`solve_equilibrium`], optionally keeping every block's bounds after
/// each alternation.
pub fn solve_equilibrium_with(
    hits_a: &HitTable,
    hits_b: &HitTable,
    cfg: &SolveConfig,
    record_history: bool,
) -> Result<ZsgSolution> {
    cfg.validate()?;
    hits_a.validate()?;
    hits_b.validate()?;
    let sa = hits_a.sparse();
    let sb = hits_b.sparse();
    let ns_a = solve_ns_sparse(&sa, cfg, hits_a.content_hash())?;
    let ns_b = solve_ns_sparse(&sb, cfg, hits_b.content_hash())?;

    let start = cfg.start_score;
    let index = BlockIndex::new(start);
    let mut values = LegValues::new(start);
    let mut policy = LegPolicy::new(start);
    let mut lower = vec![f64::NAN; index.len()];
    let mut upper = vec![f64::NAN; index.len()];
    let mut alternations = vec![0; index.len()];
    let mut history = record_history.then(|| vec![Vec::new(); index.len()]);

    for diag in index.diagonals() {
        let results = cfg.exec.map_slice_init(
            &diag,
            || Worker {
                eng_a: TurnEngine::new(&sa),
                eng_b: TurnEngine::new(&sb),
                cont_a: Vec::new(),
                cont_b: Vec::new(),
            },
            |w, &(s_a, s_b)| solve_block(w, &values, &ns_b, &sb, s_a, s_b, cfg),
        );
        for (&(s_a, s_b), r) in diag.iter().zip(results) {
            let r = r?;
            let k = index.of(s_a, s_b);
            values.a_turn[k] = r.a_vals;
            values.b_turn[k] = r.b_vals;
            policy.a_turn[k] = r.a_pol;
            policy.b_turn[k] = r.b_pol;
            lower[k] = r.lower;
            upper[k] = r.upper;
            alternations[k] = r.alternations;
            if let Some(h) = history.as_mut() {
                h[k] = r.history;
            }
        }
    }
    log::info!("equilibrium solved for {} blocks", index.len());
    Ok(ZsgSolution {
        values,
        policy,
        lower,
        upper,
        alternations,
        history,
        hits_a_hash: ns_a.hits_hash.clone(),
        hits_b_hash: ns_b.hits_hash.clone(),
        ns_a,
        ns_b,
        rel_tol: cfg.rel_tol,
    })
}

fn solve_block(
    w: &mut Worker,
    values: &LegValues,
    ns_b: &NsSolution,
    sparse_b: &SparseHits,
    s_a: u32,
    s_b: u32,
    cfg: &SolveConfig,
) -> Result<BlockOutcome> {
    let ix = values.index;
    w.cont_a.clear();
    w.cont_a.resize(s_a as usize + 1, 0.0);
    for e in 2..s_a {
        w.cont_a[e as usize] = 1.0 - values.b_turn[ix.of(e, s_b)][0];
    }
    w.cont_b.clear();
    w.cont_b.resize(s_b as usize + 1, 0.0);
    for e in 2..s_b {
        w.cont_b[e as usize] = 1.0 - values.a_turn[ix.of(s_a, e)][0];
    }
    let ctx_a = TurnContext { s: s_a, cont: &w.cont_a, win: 1.0, turn_reward: 0.0 };
    let ctx_b = TurnContext { s: s_b, cont: &w.cont_b, win: 1.0, turn_reward: 0.0 };
    w.eng_a.prepare(&ctx_a);
    w.eng_b.prepare(&ctx_b);

    let init = evaluate_policy(sparse_b, &ctx_b, &ns_b.policy[s_b as usize])
        .map_err(|k| Error::PolicyUndefined(format!("B non-strategic policy at s={s_b}, slot {k}")))?;
    let (mut ab, mut bb) = (init.alpha[0], init.beta[0]);
    let mut guess_a = if s_a > 2 { values.a_turn[ix.of(s_a - 1, s_b)][0] } else { 0.5 };
    let mut guess_b = if s_b > 2 { values.b_turn[ix.of(s_a, s_b - 1)][0] } else { 0.5 };
    let mut history = Vec::new();
    let mut gap = f64::INFINITY;
    for it in 1..=cfg.max_alternations {
        let sol_a = w.eng_a.solve(SelfLink { b: 1.0 - ab - bb, kappa: bb }, guess_a, cfg.max_policy_iters);
        let upper = sol_a.w;
        let (aa, ba) = (sol_a.table.alpha[0], sol_a.table.beta[0]);
        let sol_b = w.eng_b.solve(SelfLink { b: 1.0 - aa - ba, kappa: ba }, guess_b, cfg.max_policy_iters);
        let lower = aa + ba * (1.0 - sol_b.w);
        history.push((lower, upper));
        guess_a = upper;
        guess_b = sol_b.w;
        ab = sol_b.table.alpha[0];
        bb = sol_b.table.beta[0];
        gap = upper - lower;
        if gap < cfg.rel_tol * upper.max(1e-12) {
            let (wv, vv) = pair_value(aa, ba, ab, bb);
            return Ok(BlockOutcome {
                a_vals: sol_a.table.values(1.0 - vv),
                b_vals: sol_b.table.values(1.0 - wv),
                a_pol: sol_a.table.policy,
                b_pol: sol_b.table.policy,
                lower,
                upper,
                alternations: it as u32,
                history,
            });
        }
    }
    Err(Error::NoConvergence { s_a, s_b, iterations: cfg.max_alternations, gap })
}
