//! The two-player leg as a zero-sum game: equilibrium by alternating best
//! responses within each score block, best responses to a fixed opponent,
//! and one-step lookahead values for arbitrary aims.

mod best_response;
mod equilibrium;

pub use best_response::{best_response, BestResponse, OpponentTurnKernel};
pub(crate) use equilibrium::pair_value;
pub use equilibrium::{solve_equilibrium, solve_equilibrium_with};

use crate::board::{BoardGeometry, Target};
use crate::error::{Error, Result};
use crate::hits::{HitTable, SparseHits};
use crate::leg::{LegPolicy, LegValues, Player};
use crate::ns::NsSolution;
use crate::rules::ZsgState;
use crate::turn::{self, TurnContext, TurnTable, NUM_SLOTS};

/// Equilibrium values and policies for both players.
#[derive(Debug, Clone, PartialEq)]
pub struct ZsgSolution {
    pub values: LegValues,
    pub policy: LegPolicy,
    /// Best-response bounds on A's start-of-turn value per block, from the
    /// last alternation: `lower <= J* <= upper`.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Alternations used per block.
    pub alternations: Vec<u32>,
    /// Bounds after every alternation, when requested.
    pub history: Option<Vec<Vec<(f64, f64)>>>,
    pub ns_a: NsSolution,
    pub ns_b: NsSolution,
    pub hits_a_hash: String,
    pub hits_b_hash: String,
    pub rel_tol: f64,
}

impl ZsgSolution {
    pub fn start(&self) -> u32 {
        self.values.start()
    }

    /// Equilibrium win probability of the thrower.
    pub fn j(&self, p: Player, st: ZsgState) -> Option<f64> {
        self.values.thrower_value(p, st.s_a, st.s_b, st.i, st.u)
    }

    pub fn action(&self, p: Player, st: ZsgState) -> Option<usize> {
        self.policy.action(p, st.s_a, st.s_b, st.i, st.u)
    }

    pub fn ns(&self, p: Player) -> &NsSolution {
        match p {
            Player::A => &self.ns_a,
            Player::B => &self.ns_b,
        }
    }

    /// Fraction of blocks that converged within `k` alternations.
    pub fn share_within(&self, k: u32) -> f64 {
        let n = self.alternations.iter().filter(|&&a| a <= k).count();
        n as f64 / self.alternations.len().max(1) as f64
    }

    /// Histogram of alternation counts, `(count, blocks)`.
    pub fn alternation_histogram(&self) -> Vec<(u32, usize)> {
        let mut h = std::collections::BTreeMap::new();
        for &a in &self.alternations {
            *h.entry(a).or_insert(0) += 1;
        }
        h.into_iter().collect()
    }

    /// CSV `sA,sB,J,aimA_x,aimA_y,labelA` over start-of-turn states with A
    /// to throw.
    pub fn write_surface_csv<W: std::io::Write>(&self, hits_a: &HitTable, geom: &BoardGeometry, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sA", "sB", "J", "aimA_x", "aimA_y", "labelA"])?;
        let ix = self.values.index;
        for s_a in 2..=ix.start() {
            for s_b in 2..=ix.start() {
                let k = ix.of(s_a, s_b);
                let t = hits_a.target(self.policy.a_turn[k][0] as usize);
                w.write_record([
                    s_a.to_string(),
                    s_b.to_string(),
                    format!("{:.17e}", self.values.a_turn[k][0]),
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

/// One-step lookahead against a table of thrower values: aim now, then
/// follow whatever policies produced `values`.
pub struct QEvaluator<'a> {
    values: &'a LegValues,
    hits: &'a HitTable,
    sparse: SparseHits,
    player: Player,
}

impl<'a> QEvaluator<'a> {
    /// `hits` must be the thrower's table.
    pub fn new(values: &'a LegValues, hits: &'a HitTable, player: Player) -> Self {
        QEvaluator { values, hits, sparse: hits.sparse(), player }
    }

    fn own_opp(&self, st: ZsgState) -> (u32, u32) {
        match self.player {
            Player::A => (st.s_a, st.s_b),
            Player::B => (st.s_b, st.s_a),
        }
    }

    fn check(&self, st: ZsgState) -> Result<usize> {
        let (own, _) = self.own_opp(st);
        let k = turn::slot(st.i, st.u)
            .filter(|&k| turn::Reach::new(own).contains(k))
            .ok_or_else(|| Error::InvalidInput(format!("state {st:?} is not reachable")))?;
        if !self.values.index.contains(st.s_a, st.s_b) {
            return Err(Error::InvalidInput(format!("state {st:?} is outside the solved range")));
        }
        Ok(k)
    }

    /// Values for all grid actions at `st`.
    pub fn all(&self, st: ZsgState) -> Result<Vec<f64>> {
        let k = self.check(st)?;
        let (own, opp) = self.own_opp(st);
        let (cont, table, x) = self.context(own, opp);
        let ctx = TurnContext { s: own, cont: &cont, win: 1.0, turn_reward: 0.0 };
        Ok((0..self.sparse.len())
            .map(|a| {
                let (qa, qb) = turn::slot_coefficients(&self.sparse, &ctx, &table, k, a);
                qa + qb * x
            })
            .collect())
    }

    pub fn action(&self, st: ZsgState, action: usize) -> Result<f64> {
        let k = self.check(st)?;
        if action >= self.sparse.len() {
            return Err(Error::InvalidInput(format!("action {action} out of range")));
        }
        let (own, opp) = self.own_opp(st);
        let (cont, table, x) = self.context(own, opp);
        let ctx = TurnContext { s: own, cont: &cont, win: 1.0, turn_reward: 0.0 };
        let (qa, qb) = turn::slot_coefficients(&self.sparse, &ctx, &table, k, action);
        Ok(qa + qb * x)
    }

    /// Value of aiming at `target`, which is resolved to the grid cell
    /// containing it.
    pub fn target(&self, geom: &BoardGeometry, st: ZsgState, target: Target) -> Result<f64> {
        if !(target.radius() <= geom.r_double_out) {
            return Err(Error::InvalidInput(format!("target ({}, {}) is off the board", target.x, target.y)));
        }
        let a = self.hits.grid().nearest(target).expect("non-empty grid");
        self.action(st, a)
    }

    fn context(&self, own: u32, opp: u32) -> (Vec<f64>, TurnTable, f64) {
        let v = self.values;
        let p = self.player;
        let mut cont = vec![0.0; own as usize + 1];
        for (e, c) in cont.iter_mut().enumerate().take(own as usize).skip(2) {
            *c = 1.0 - v.own_start(p.other(), opp, e as u32);
        }
        let row = match p {
            Player::A => v.a_turn[v.index.of(own, opp)],
            Player::B => v.b_turn[v.index.of(opp, own)],
        };
        let x = 1.0 - v.own_start(p.other(), opp, own);
        let table = TurnTable { alpha: row, beta: [0.0; NUM_SLOTS], policy: [turn::NO_ACTION; NUM_SLOTS] };
        (cont, table, x)
    }
}

/// Q-values at one state over the whole grid, and their gain over the
/// baseline value of the same state.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub state: ZsgState,
    pub player: Player,
    pub targets: Vec<Target>,
    pub q: Vec<f64>,
    pub delta: Vec<f64>,
    pub baseline: f64,
}

impl Heatmap {
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (a, &q) in self.q.iter().enumerate() {
            if q > self.q[best] {
                best = a;
            }
        }
        best
    }

    pub fn max_delta(&self) -> f64 {
        self.delta.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `Q(st, a) - baseline(st)` for every target, where `Q` is taken against
/// the equilibrium and `baseline` holds the thrower's values when it plays
/// its non-strategic policy against the equilibrium opponent.
pub fn heatmap(
    sol: &ZsgSolution,
    hits: &HitTable,
    player: Player,
    st: ZsgState,
    baseline: &LegValues,
) -> Result<Heatmap> {
    if baseline.start() != sol.start() {
        return Err(Error::InvalidInput("baseline table covers a different score range".into()));
    }
    let q = QEvaluator::new(&sol.values, hits, player).all(st)?;
    let base = baseline
        .thrower_value(player, st.s_a, st.s_b, st.i, st.u)
        .ok_or_else(|| Error::InvalidInput(format!("baseline has no value at {st:?}")))?;
    Ok(Heatmap {
        state: st,
        player,
        targets: hits.grid().targets().to_vec(),
        delta: q.iter().map(|v| v - base).collect(),
        q,
        baseline: base,
    })
}
