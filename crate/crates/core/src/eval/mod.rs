//! Evaluation of fixed policies: end-of-turn score distributions,
//! head-to-head leg win probabilities and match-level win probabilities.

mod matchplay;
mod tables;

pub use matchplay::{gain, match_win_prob, MatchSpec};
pub use tables::{non_strategic_baseline, write_gain_csv, Combo, GainRow, StartValues, StrategyTables};

use crate::board::{DOUBLES, SCORES};
use crate::error::{Error, Result};
use crate::hits::{HitTable, SparseHits};
use crate::leg::{BlockIndex, LegValues, TurnPolicy};
use crate::par::Exec;
use crate::rules::{dart_effect, DartEffect};
use crate::turn::{self, evaluate_policy, Reach, TurnContext, NO_ACTION, NUM_SLOTS};
use crate::zsg::pair_value;

/// Distribution of the end-of-turn score from start-of-turn score `s` when
/// the turn is played with `actions`. Index 0 is a checkout; a bust leaves
/// the mass at `s`.
pub fn turn_kernel(hits: &SparseHits, s: u32, actions: &[u32; NUM_SLOTS]) -> Result<Vec<f64>> {
    if s < 2 {
        return Err(Error::InvalidInput(format!("no turn is played from score {s}")));
    }
    let reach = Reach::new(s);
    let mut mass = [0.0; NUM_SLOTS];
    mass[0] = 1.0;
    let mut out = vec![0.0; s as usize + 1];
    let order = std::iter::once(0)
        .chain(reach.u2.iter().map(|&u| 1 + u as usize))
        .chain(reach.u1.iter().map(|&u| 62 + u as usize));
    for k in order {
        let m = mass[k];
        if m == 0.0 {
            continue;
        }
        let a = actions[k];
        if a == NO_ACTION || a as usize >= hits.len() {
            let (i, u) = turn::slot_state(k);
            return Err(Error::PolicyUndefined(format!("no action at s={s}, i={i}, u={u}")));
        }
        let (i, u) = turn::slot_state(k);
        let (labels, probs) = hits.row(a as usize);
        for (&l, &p) in labels.iter().zip(probs) {
            let z = l as usize;
            match dart_effect(s, i, u, SCORES[z], DOUBLES[z]) {
                DartEffect::Checkout => out[0] += m * p,
                DartEffect::Bust => out[s as usize] += m * p,
                DartEffect::EndTurn { score } => out[score as usize] += m * p,
                DartEffect::Continue { u } => mass[turn::slot(i - 1, u).expect("continuation slot")] += m * p,
            }
        }
    }
    Ok(out)
}

/// Win probabilities of both players when A follows `policy_a` and B
/// follows `policy_b`, for every pair of scores up to `start`.
pub fn head_to_head(
    policy_a: &dyn TurnPolicy,
    policy_b: &dyn TurnPolicy,
    hits_a: &HitTable,
    hits_b: &HitTable,
    start: u32,
    exec: Exec,
) -> Result<LegValues> {
    hits_a.validate()?;
    hits_b.validate()?;
    let sa = hits_a.sparse();
    let sb = hits_b.sparse();
    let index = BlockIndex::new(start);
    let mut values = LegValues::new(start);
    for diag in index.diagonals() {
        let results = exec.map_slice_init(
            &diag,
            || (Vec::new(), Vec::new()),
            |(cont_a, cont_b), &(s_a, s_b)| eval_block(cont_a, cont_b, &values, policy_a, policy_b, &sa, &sb, s_a, s_b),
        );
        for (&(s_a, s_b), r) in diag.iter().zip(results) {
            let (a_vals, b_vals) = r?;
            let k = index.of(s_a, s_b);
            values.a_turn[k] = a_vals;
            values.b_turn[k] = b_vals;
        }
    }
    Ok(values)
}

#[allow(clippy::too_many_arguments)]
fn eval_block(
    cont_a: &mut Vec<f64>,
    cont_b: &mut Vec<f64>,
    values: &LegValues,
    policy_a: &dyn TurnPolicy,
    policy_b: &dyn TurnPolicy,
    sa: &SparseHits,
    sb: &SparseHits,
    s_a: u32,
    s_b: u32,
) -> Result<([f64; NUM_SLOTS], [f64; NUM_SLOTS])> {
    let ix = values.index;
    cont_a.clear();
    cont_a.resize(s_a as usize + 1, 0.0);
    for e in 2..s_a {
        cont_a[e as usize] = 1.0 - values.b_turn[ix.of(e, s_b)][0];
    }
    cont_b.clear();
    cont_b.resize(s_b as usize + 1, 0.0);
    for e in 2..s_b {
        cont_b[e as usize] = 1.0 - values.a_turn[ix.of(s_a, e)][0];
    }
    let ctx_a = TurnContext { s: s_a, cont: cont_a, win: 1.0, turn_reward: 0.0 };
    let ctx_b = TurnContext { s: s_b, cont: cont_b, win: 1.0, turn_reward: 0.0 };
    let undefined = |p: &str, s: u32, k: usize| {
        let (i, u) = turn::slot_state(k);
        Error::PolicyUndefined(format!("{p} has no action at ({s_a}, {s_b}), own score {s}, i={i}, u={u}"))
    };
    let ta = evaluate_policy(sa, &ctx_a, policy_a.turn_actions(s_a, s_b)).map_err(|k| undefined("A", s_a, k))?;
    let tb = evaluate_policy(sb, &ctx_b, policy_b.turn_actions(s_b, s_a)).map_err(|k| undefined("B", s_b, k))?;
    let (w, v) = pair_value(ta.alpha[0], ta.beta[0], tb.alpha[0], tb.beta[0]);
    Ok((ta.values(1.0 - v), tb.values(1.0 - w)))
}
