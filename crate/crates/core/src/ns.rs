//! Non-strategic play: minimise the expected number of turns (or darts) to
//! check out, ignoring the opponent.

use std::io::Write;

use crate::board::{BoardGeometry, OutcomeLabel, DOUBLES, SCORES};
use crate::error::{Error, Result};
use crate::hits::{HitTable, SparseHits};
use crate::par::Exec;
use crate::rules::NsState;
use crate::turn::{self, Reach, SelfLink, TurnContext, TurnEngine, NO_ACTION, NUM_SLOTS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub start_score: u32,
    /// Relative tolerance for block convergence.
    pub rel_tol: f64,
    pub max_policy_iters: usize,
    /// Alternation cap per block in the equilibrium solver.
    pub max_alternations: usize,
    pub exec: Exec,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            start_score: 501,
            rel_tol: 1e-9,
            max_policy_iters: 100,
            max_alternations: 50,
            exec: Exec::default(),
        }
    }
}

impl SolveConfig {
    pub fn with_start(start_score: u32) -> Self {
        SolveConfig { start_score, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=501).contains(&self.start_score) {
            return Err(Error::InvalidInput(format!("start score must be in 2..=501, got {}", self.start_score)));
        }
        if !(self.rel_tol > 0.0) || self.max_policy_iters == 0 || self.max_alternations == 0 {
            return Err(Error::InvalidInput("tolerance and iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// Expected turns to finish and the minimising aim for every `(s, i, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NsSolution {
    pub start_score: u32,
    /// `values[s][slot]` in expected turns; NaN where unreachable. Row 0 is
    /// all zeros, row 1 all NaN.
    pub values: Vec<[f64; NUM_SLOTS]>,
    pub policy: Vec<[u32; NUM_SLOTS]>,
    pub hits_hash: String,
}

impl NsSolution {
    pub fn value(&self, st: NsState) -> Option<f64> {
        let k = turn::slot(st.i, st.u)?;
        if st.s == 0 {
            return Some(0.0);
        }
        let v = *self.values.get(st.s as usize)?.get(k)?;
        (!v.is_nan()).then_some(v)
    }

    pub fn action(&self, st: NsState) -> Option<usize> {
        let k = turn::slot(st.i, st.u)?;
        let a = *self.policy.get(st.s as usize)?.get(k)?;
        (a != NO_ACTION).then_some(a as usize)
    }

    /// Expected turns from the start of a turn at `s`.
    pub fn turns(&self, s: u32) -> f64 {
        self.values[s as usize][0]
    }

    /// CSV `s,i,u,value,aim_x,aim_y,label` over reachable states.
    pub fn write_csv<W: Write>(&self, hits: &HitTable, geom: &BoardGeometry, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "i", "u", "value", "aim_x", "aim_y", "label"])?;
        for s in 2..=self.start_score {
            for k in Reach::new(s).slots() {
                let a = self.policy[s as usize][k];
                if a == NO_ACTION {
                    continue;
                }
                let (i, u) = turn::slot_state(k);
                let t = hits.target(a as usize);
                w.write_record([
                    s.to_string(),
                    i.to_string(),
                    u.to_string(),
                    format!("{:.17e}", self.values[s as usize][k]),
                    format!("{:.17e}", t.x),
                    format!("{:.17e}", t.y),
                    geom.classify_target(t).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Continuation values in the engine's maximising convention.
pub(crate) fn engine_values(sol: &NsSolution) -> Vec<f64> {
    sol.values.iter().map(|row| if row[0].is_finite() { -row[0] } else { turn::IMPROPER_COST }).collect()
}

/// Solve the single-player problem for every start score up to
/// `cfg.start_score`, in ascending order.
pub fn solve_ns(hits: &HitTable, cfg: &SolveConfig) -> Result<NsSolution> {
    cfg.validate()?;
    hits.validate()?;
    let sparse = hits.sparse();
    solve_ns_sparse(&sparse, cfg, hits.content_hash())
}

pub(crate) fn solve_ns_sparse(sparse: &SparseHits, cfg: &SolveConfig, hits_hash: String) -> Result<NsSolution> {
    if sparse.is_empty() {
        return Err(Error::InvalidInput("hit table has no actions".into()));
    }
    let n = cfg.start_score as usize;
    let mut values = vec![[f64::NAN; NUM_SLOTS]; n + 1];
    let mut policy = vec![[NO_ACTION; NUM_SLOTS]; n + 1];
    values[0] = [0.0; NUM_SLOTS];
    // Maximising form: minus expected turns.
    let mut cont = vec![0.0; n + 1];
    let mut engine = TurnEngine::with_exec(sparse, cfg.exec);
    let mut guess = -1.0;
    for s in 2..=cfg.start_score {
        let ctx = TurnContext { s, cont: &cont, win: 0.0, turn_reward: -1.0 };
        engine.prepare(&ctx);
        let sol = engine.solve(SelfLink::SAME_PLAYER, guess, cfg.max_policy_iters);
        let vals = sol.values();
        for k in engine.reach().slots() {
            values[s as usize][k] = if sol.proper { -vals[k] } else { f64::INFINITY };
        }
        policy[s as usize] = sol.table.policy;
        if !sol.proper {
            log::warn!("no proper policy from score {s}");
        }
        cont[s as usize] = if sol.proper { sol.w } else { turn::IMPROPER_COST };
        guess = cont[s as usize];
    }
    Ok(NsSolution { start_score: cfg.start_score, values, policy, hits_hash })
}

/// Largest relative Bellman residual `|V - T V| / max(|V|, 1)` over all
/// reachable states, maximising over every action.
pub fn ns_bellman_residual(hits: &HitTable, sol: &NsSolution) -> f64 {
    let sparse = hits.sparse();
    let cont = engine_values(sol);
    let mut worst: f64 = 0.0;
    for s in 2..=sol.start_score {
        if !sol.values[s as usize][0].is_finite() {
            continue;
        }
        let ctx = TurnContext { s, cont: &cont, win: 0.0, turn_reward: -1.0 };
        let x = cont[s as usize];
        let table = table_from_values(&sol.values[s as usize], &sol.policy[s as usize]);
        for k in Reach::new(s).slots() {
            let best = (0..sparse.len())
                .map(|a| {
                    let (qa, qb) = turn::slot_coefficients(&sparse, &ctx, &table, k, a);
                    qa + qb * x
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let v = -sol.values[s as usize][k];
            worst = worst.max((v - best).abs() / v.abs().max(1.0));
        }
    }
    worst
}

/// A table whose slot values are the given (turn-count) values.
fn table_from_values(values: &[f64; NUM_SLOTS], policy: &[u32; NUM_SLOTS]) -> turn::TurnTable {
    turn::TurnTable { alpha: values.map(|v| -v), beta: [0.0; NUM_SLOTS], policy: *policy }
}

/// Turn-free variant: expected darts to finish. A dart that would leave a
/// score below 2 without checking out leaves the score unchanged.
pub fn solve_ns_dartcount(hits: &HitTable, cfg: &SolveConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    hits.validate()?;
    let sparse = hits.sparse();
    let n = cfg.start_score as usize;
    let mut v = vec![f64::INFINITY; n + 1];
    v[0] = 0.0;
    for s in 2..=n {
        let mut best = f64::INFINITY;
        for a in 0..sparse.len() {
            let (labels, probs) = sparse.row(a);
            let (mut stay, mut acc) = (0.0, 0.0);
            for (&l, &p) in labels.iter().zip(probs) {
                let (h, dbl) = (SCORES[l as usize] as usize, DOUBLES[l as usize]);
                if h == s && dbl {
                    continue;
                } else if h > 0 && s >= h + 2 {
                    acc += p * v[s - h];
                } else {
                    stay += p;
                }
            }
            if stay < 1.0 - 1e-13 {
                let q = (1.0 + acc) / (1.0 - stay);
                if q < best {
                    best = q;
                }
            }
        }
        v[s] = best;
    }
    v[1] = f64::NAN;
    Ok(v)
}

/// Label of the aim for a state, for reporting.
pub fn aim_label(hits: &HitTable, geom: &BoardGeometry, action: usize) -> OutcomeLabel {
    geom.classify_target(hits.target(action))
}
