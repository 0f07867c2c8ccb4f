//! Dynamic programming over the darts of a single turn.
//!
//! A turn starting at score `s` has states `(i, u)`: darts left and points
//! scored so far. Every dart either ends the game (checkout), voids the turn
//! (bust), continues the turn, or ends it at a lower score. Values beyond the
//! turn enter through a [`TurnContext`]: a fixed continuation value for every
//! lower score, and a self value `x` for the outcomes that leave the
//! thrower's score at `s` (busts and scoreless turns).
//!
//! For a fixed policy every slot value is affine in `x`, `alpha + beta * x`.
//! The self value is tied to the turn's own start value `W` through a
//! [`SelfLink`] `x = b + kappa * W`, which covers both the single-player
//! case (`x = W`) and a turn of the opponent in between.
//!
//! Layers are updated in order `i = 1, 2, 3`, and within a layer all `u` are
//! updated together: for each action the successor values of every `u` are
//! gathered from one label-major table and accumulated in a single pass.

use std::sync::OnceLock;

use crate::board::{DOUBLES, NUM_LABELS, SCORES};
use crate::hits::SparseHits;
use crate::par::Exec;
use crate::rules::{dart_effect, DartEffect};

/// Number of within-turn slots: `(3, 0)`, `(2, 0..=60)`, `(1, 0..=120)`.
pub const NUM_SLOTS: usize = 1 + 61 + 121;

/// Policy entry for slots that cannot be reached.
pub const NO_ACTION: u32 = u32::MAX;

pub fn slot(i: u8, u: u32) -> Option<usize> {
    match (i, u) {
        (3, 0) => Some(0),
        (2, 0..=60) => Some(1 + u as usize),
        (1, 0..=120) => Some(62 + u as usize),
        _ => None,
    }
}

pub fn slot_state(slot: usize) -> (u8, u32) {
    match slot {
        0 => (3, 0),
        1..=61 => (2, slot as u32 - 1),
        62..=182 => (1, slot as u32 - 62),
        _ => panic!("slot {slot} out of range"),
    }
}

struct ScoreSets {
    /// `one[h]`: some dart scores `h`.
    one: [bool; 61],
    /// `two[u]`: some pair of darts scores `u`.
    two: [bool; 121],
}

fn score_sets() -> &'static ScoreSets {
    static SETS: OnceLock<ScoreSets> = OnceLock::new();
    SETS.get_or_init(|| {
        let mut one = [false; 61];
        for &h in SCORES.iter() {
            one[h as usize] = true;
        }
        let mut two = [false; 121];
        for a in 0..=60 {
            for b in 0..=60 {
                if one[a] && one[b] {
                    two[a + b] = true;
                }
            }
        }
        ScoreSets { one, two }
    })
}

/// Reachable within-turn totals for a turn starting at `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reach {
    /// Totals before the second dart (`i = 2`).
    pub u2: Vec<u32>,
    /// Totals before the third dart (`i = 1`).
    pub u1: Vec<u32>,
}

impl Reach {
    pub fn new(s: u32) -> Reach {
        let sets = score_sets();
        let cap = s.saturating_sub(2);
        Reach {
            u2: (0..=60u32.min(cap)).filter(|&u| sets.one[u as usize]).collect(),
            u1: (0..=120u32.min(cap)).filter(|&u| sets.two[u as usize]).collect(),
        }
    }

    /// Slot indices reachable in a turn starting at `s`.
    pub fn slots(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(0)
            .chain(self.u2.iter().map(|&u| 1 + u as usize))
            .chain(self.u1.iter().map(|&u| 62 + u as usize))
    }

    pub fn contains(&self, slot: usize) -> bool {
        match slot_state(slot) {
            (3, _) => true,
            (2, u) => self.u2.binary_search(&u).is_ok(),
            (_, u) => self.u1.binary_search(&u).is_ok(),
        }
    }
}

/// Everything a turn's values depend on besides the self value.
#[derive(Debug, Clone, Copy)]
pub struct TurnContext<'a> {
    pub s: u32,
    /// Value of ending the turn at score `e`, for `2 <= e < s`; indexed by
    /// score, so the slice has length at least `s`.
    pub cont: &'a [f64],
    /// Value of a checkout.
    pub win: f64,
    /// Reward collected when a turn starts (at `i = 3`).
    pub turn_reward: f64,
}

impl TurnContext<'_> {
    /// `(constant, self coefficient)` of one dart outcome.
    #[inline]
    fn terminal(&self, e: DartEffect) -> (f64, f64) {
        match e {
            DartEffect::Checkout => (self.win, 0.0),
            DartEffect::Bust => (0.0, 1.0),
            DartEffect::EndTurn { score } if score == self.s => (0.0, 1.0),
            DartEffect::EndTurn { score } => (self.cont[score as usize], 0.0),
            DartEffect::Continue { .. } => unreachable!("continuation is not terminal"),
        }
    }
}

/// `x = b + kappa * W`, tying the self value to the turn's start value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfLink {
    pub b: f64,
    pub kappa: f64,
}

impl SelfLink {
    /// The thrower simply starts the next turn from the same score.
    pub const SAME_PLAYER: SelfLink = SelfLink { b: 0.0, kappa: 1.0 };

    /// Start value of a policy with start-slot coefficients `(alpha, beta)`.
    /// `None` if the policy never leaves the self loop.
    pub fn solve(&self, alpha: f64, beta: f64) -> Option<f64> {
        let denom = 1.0 - beta * self.kappa;
        (denom > 1e-13).then(|| (alpha + beta * self.b) / denom)
    }

    pub fn self_value(&self, w: f64) -> f64 {
        self.b + self.kappa * w
    }
}

/// Values `alpha + beta * x` and actions for every slot.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnTable {
    pub alpha: [f64; NUM_SLOTS],
    pub beta: [f64; NUM_SLOTS],
    pub policy: [u32; NUM_SLOTS],
}

impl TurnTable {
    fn empty() -> Self {
        TurnTable { alpha: [f64::NAN; NUM_SLOTS], beta: [f64::NAN; NUM_SLOTS], policy: [NO_ACTION; NUM_SLOTS] }
    }

    pub fn value(&self, slot: usize, x: f64) -> f64 {
        self.alpha[slot] + self.beta[slot] * x
    }

    /// Slot values at self value `x`; unreachable slots are NaN.
    pub fn values(&self, x: f64) -> [f64; NUM_SLOTS] {
        std::array::from_fn(|k| self.value(k, x))
    }
}

/// Outcome of an optimising turn solve.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnSolution {
    pub table: TurnTable,
    /// Start-of-turn value.
    pub w: f64,
    /// Self value implied by the link.
    pub x: f64,
    /// Greedy sweeps performed.
    pub improvements: usize,
    /// False when the best policy found never leaves the self loop.
    pub proper: bool,
}

impl TurnSolution {
    pub fn values(&self) -> [f64; NUM_SLOTS] {
        self.table.values(self.x)
    }
}

/// Relative slack under which an incumbent action counts as tied with the
/// best one.
const TIE_TOL: f64 = 1e-13;

/// Self-loop probability above which a policy's start value is considered
/// ill-conditioned.
const NEAR_IMPROPER: f64 = 1e-6;

/// Greedy choice per state with the gap to the runner-up.
#[derive(Default)]
struct Argmax {
    best: Vec<f64>,
    second: Vec<f64>,
    arg: Vec<u32>,
}

impl Argmax {
    fn reset(&mut self, n: usize) {
        self.best.clear();
        self.best.resize(n, f64::NEG_INFINITY);
        self.second.clear();
        self.second.resize(n, f64::NEG_INFINITY);
        self.arg.clear();
        self.arg.resize(n, NO_ACTION);
    }

    /// Scan `alpha + beta * x` for every action; `alpha` and `beta` hold
    /// `width` values per action. An incumbent action within rounding of
    /// the best is kept, so that policy iteration never trades a policy
    /// for an equally good one.
    fn scan(&mut self, alpha: &[f64], beta: &[f64], width: usize, x: f64, incumbent: Option<&[u32]>) {
        self.reset(width);
        for (a, (ra, rb)) in alpha.chunks_exact(width).zip(beta.chunks_exact(width)).enumerate() {
            for j in 0..width {
                let q = ra[j] + rb[j] * x;
                if q > self.best[j] {
                    self.second[j] = self.best[j];
                    self.best[j] = q;
                    self.arg[j] = a as u32;
                } else if q > self.second[j] {
                    self.second[j] = q;
                }
            }
        }
        if let Some(inc) = incumbent {
            for (j, &a) in inc.iter().enumerate() {
                if a == NO_ACTION || a == self.arg[j] {
                    continue;
                }
                let k = a as usize * width + j;
                let q = alpha[k] + beta[k] * x;
                if q >= self.best[j] - TIE_TOL * self.best[j].abs().max(1.0) {
                    self.arg[j] = a;
                }
            }
        }
    }

    fn min_margin(&self) -> f64 {
        self.best.iter().zip(&self.second).map(|(b, s)| b - s).fold(f64::INFINITY, f64::min)
    }
}

/// `out[a][j] = sum_k p_ak * t[label_ak][j]` for both tables at once.
fn accumulate(
    hits: &SparseHits,
    ta: &[f64],
    tb: &[f64],
    width: usize,
    out_a: &mut [f64],
    out_b: &mut [f64],
    exec: Exec,
) {
    if width == 0 {
        return;
    }
    let rows = 256;
    let fill = |c: usize, oa: &mut [f64], ob: &mut [f64]| {
        oa.fill(0.0);
        ob.fill(0.0);
        for (k, (ra, rb)) in oa.chunks_exact_mut(width).zip(ob.chunks_exact_mut(width)).enumerate() {
            let (labels, probs) = hits.row(c * rows + k);
            for (&l, &p) in labels.iter().zip(probs) {
                let l = l as usize * width;
                let (sa, sb) = (&ta[l..l + width], &tb[l..l + width]);
                for j in 0..width {
                    ra[j] += p * sa[j];
                    rb[j] += p * sb[j];
                }
            }
        }
    };
    if exec.is_parallel() {
        // Pair the two outputs chunk by chunk.
        let mut pairs: Vec<(&mut [f64], &mut [f64])> =
            out_a.chunks_mut(rows * width).zip(out_b.chunks_mut(rows * width)).collect();
        exec.for_each_chunk_mut(&mut pairs, 1, |c, p| {
            let (oa, ob) = &mut p[0];
            fill(c, oa, ob);
        });
    } else {
        for (c, (oa, ob)) in out_a.chunks_mut(rows * width).zip(out_b.chunks_mut(rows * width)).enumerate() {
            fill(c, oa, ob);
        }
    }
}

/// Reusable workspace for solving turns against one set of outcome rows.
pub struct TurnEngine<'h> {
    hits: &'h SparseHits,
    exec: Exec,
    s: u32,
    reach: Reach,
    idx1: [u16; 121],
    idx2: [u16; 61],
    // Label-major successor tables and per-action Q coefficients.
    t_a: Vec<f64>,
    t_b: Vec<f64>,
    q1_a: Vec<f64>,
    q1_b: Vec<f64>,
    q2_a: Vec<f64>,
    q2_b: Vec<f64>,
    q2_key: Option<Vec<u32>>,
    q3_a: Vec<f64>,
    q3_b: Vec<f64>,
    m1: Argmax,
    m2: Argmax,
    m3: Argmax,
    win: f64,
    turn_reward: f64,
}

impl<'h> TurnEngine<'h> {
    pub fn new(hits: &'h SparseHits) -> Self {
        Self::with_exec(hits, Exec::Sequential)
    }

    /// `exec` parallelises the per-action accumulation; block-parallel
    /// callers should keep the engine sequential.
    pub fn with_exec(hits: &'h SparseHits, exec: Exec) -> Self {
        TurnEngine {
            hits,
            exec,
            s: 0,
            reach: Reach { u2: Vec::new(), u1: Vec::new() },
            idx1: [u16::MAX; 121],
            idx2: [u16::MAX; 61],
            t_a: Vec::new(),
            t_b: Vec::new(),
            q1_a: Vec::new(),
            q1_b: Vec::new(),
            q2_a: Vec::new(),
            q2_b: Vec::new(),
            q2_key: None,
            q3_a: Vec::new(),
            q3_b: Vec::new(),
            m1: Argmax::default(),
            m2: Argmax::default(),
            m3: Argmax::default(),
            win: 0.0,
            turn_reward: 0.0,
        }
    }

    pub fn hits(&self) -> &SparseHits {
        self.hits
    }

    pub fn reach(&self) -> &Reach {
        &self.reach
    }

    /// Load a new turn: compute the last-dart coefficients, which do not
    /// depend on the self value.
    pub fn prepare(&mut self, ctx: &TurnContext) {
        let s = ctx.s;
        assert!(s >= 2 && ctx.cont.len() >= s as usize, "bad turn context for s={s}");
        self.s = s;
        self.win = ctx.win;
        self.turn_reward = ctx.turn_reward;
        self.reach = Reach::new(s);
        self.idx1 = [u16::MAX; 121];
        for (j, &u) in self.reach.u1.iter().enumerate() {
            self.idx1[u as usize] = j as u16;
        }
        self.idx2 = [u16::MAX; 61];
        for (j, &u) in self.reach.u2.iter().enumerate() {
            self.idx2[u as usize] = j as u16;
        }
        self.q2_key = None;

        let w = self.reach.u1.len();
        self.t_a.clear();
        self.t_a.resize(NUM_LABELS * w, 0.0);
        self.t_b.clear();
        self.t_b.resize(NUM_LABELS * w, 0.0);
        for z in 0..NUM_LABELS {
            for (j, &u) in self.reach.u1.iter().enumerate() {
                let (a, b) = ctx.terminal(dart_effect(s, 1, u, SCORES[z], DOUBLES[z]));
                self.t_a[z * w + j] = a;
                self.t_b[z * w + j] = b;
            }
        }
        let n = self.hits.len();
        self.q1_a.resize(n * w, 0.0);
        self.q1_b.resize(n * w, 0.0);
        accumulate(self.hits, &self.t_a, &self.t_b, w, &mut self.q1_a, &mut self.q1_b, self.exec);
    }

    /// One greedy sweep at self value `x`. Returns the greedy table and the
    /// smallest gap between best and second-best action over all states.
    fn improve(&mut self, x: f64, prev: Option<&[u32; NUM_SLOTS]>) -> (TurnTable, f64) {
        let s = self.s;
        let layer = |r: &[u32], base: usize| prev.map(|p| r.iter().map(|&u| p[base + u as usize]).collect::<Vec<_>>());
        let inc1 = layer(&self.reach.u1, 62);
        let inc2 = layer(&self.reach.u2, 1);
        let mut table = TurnTable::empty();
        let w1 = self.reach.u1.len();
        self.m1.scan(&self.q1_a, &self.q1_b, w1, x, inc1.as_deref());
        for (j, &u) in self.reach.u1.iter().enumerate() {
            let a = self.m1.arg[j] as usize;
            let k = 62 + u as usize;
            table.policy[k] = a as u32;
            table.alpha[k] = self.q1_a[a * w1 + j];
            table.beta[k] = self.q1_b[a * w1 + j];
        }

        let w2 = self.reach.u2.len();
        if self.q2_key.as_deref() != Some(&self.m1.arg[..]) {
            self.t_a.clear();
            self.t_a.resize(NUM_LABELS * w2, 0.0);
            self.t_b.clear();
            self.t_b.resize(NUM_LABELS * w2, 0.0);
            for z in 0..NUM_LABELS {
                for (j, &u) in self.reach.u2.iter().enumerate() {
                    let (a, b) = match dart_effect(s, 2, u, SCORES[z], DOUBLES[z]) {
                        DartEffect::Checkout => (self.win, 0.0),
                        DartEffect::Continue { u } => {
                            let k = 62 + u as usize;
                            (table.alpha[k], table.beta[k])
                        }
                        _ => (0.0, 1.0),
                    };
                    self.t_a[z * w2 + j] = a;
                    self.t_b[z * w2 + j] = b;
                }
            }
            let n = self.hits.len();
            self.q2_a.resize(n * w2, 0.0);
            self.q2_b.resize(n * w2, 0.0);
            accumulate(self.hits, &self.t_a, &self.t_b, w2, &mut self.q2_a, &mut self.q2_b, self.exec);
            self.q2_key = Some(self.m1.arg.clone());
        }
        self.m2.scan(&self.q2_a, &self.q2_b, w2, x, inc2.as_deref());
        for (j, &u) in self.reach.u2.iter().enumerate() {
            let a = self.m2.arg[j] as usize;
            let k = 1 + u as usize;
            table.policy[k] = a as u32;
            table.alpha[k] = self.q2_a[a * w2 + j];
            table.beta[k] = self.q2_b[a * w2 + j];
        }

        let mut t3 = [(0.0, 0.0); NUM_LABELS];
        for (z, t) in t3.iter_mut().enumerate() {
            *t = match dart_effect(s, 3, 0, SCORES[z], DOUBLES[z]) {
                DartEffect::Checkout => (self.win, 0.0),
                DartEffect::Continue { u } => {
                    let k = 1 + u as usize;
                    (table.alpha[k], table.beta[k])
                }
                _ => (0.0, 1.0),
            };
        }
        let n = self.hits.len();
        self.q3_a.resize(n, 0.0);
        self.q3_b.resize(n, 0.0);
        for a in 0..n {
            let (labels, probs) = self.hits.row(a);
            let (mut qa, mut qb) = (0.0, 0.0);
            for (&l, &p) in labels.iter().zip(probs) {
                qa += p * t3[l as usize].0;
                qb += p * t3[l as usize].1;
            }
            self.q3_a[a] = qa;
            self.q3_b[a] = qb;
        }
        self.m3.scan(&self.q3_a, &self.q3_b, 1, x, prev.map(|p| &p[..1]));
        let a = self.m3.arg[0] as usize;
        table.policy[0] = a as u32;
        table.alpha[0] = self.turn_reward + self.q3_a[a];
        table.beta[0] = self.q3_b[a];

        let margin = self.m1.min_margin().min(self.m2.min_margin()).min(self.m3.min_margin());
        (table, margin)
    }

    /// Best policy for the prepared turn under `link`, by policy iteration
    /// started from the greedy policy at start value `w_guess`. May be
    /// called repeatedly with different links; the cached coefficients stay
    /// valid until the next `prepare`.
    pub fn solve(&mut self, link: SelfLink, w_guess: f64, max_iter: usize) -> TurnSolution {
        let sol = self.iterate(link, link.self_value(w_guess), max_iter);
        // When staying in the loop costs nothing, policies that almost never
        // leave it tie with the optimum and their start values are computed
        // with large cancellation. Restart from the pessimistic end, where
        // the greedy policy makes progress, and keep the better-conditioned.
        let leak = |t: &TurnSolution| 1.0 - t.table.beta[0] * link.kappa;
        if self.turn_reward >= 0.0 && sol.proper && leak(&sol) < NEAR_IMPROPER {
            let alt = self.iterate(link, link.self_value(0.0), max_iter);
            if alt.proper && leak(&alt) > leak(&sol) {
                return alt;
            }
        }
        sol
    }

    fn iterate(&mut self, link: SelfLink, x0: f64, max_iter: usize) -> TurnSolution {
        let mut x = x0;
        let mut prev: Option<[u32; NUM_SLOTS]> = None;
        let mut improvements = 0;
        loop {
            let (table, margin) = self.improve(x, prev.as_ref());
            improvements += 1;
            let (w, proper) = match link.solve(table.alpha[0], table.beta[0]) {
                Some(w) => (w, true),
                None => (improper_value(self.turn_reward), false),
            };
            let x_new = link.self_value(w);
            let stable = prev.as_ref() == Some(&table.policy);
            // Q differences move by at most |dx| when x moves by dx.
            let certified = proper && margin > 2.0 * (x_new - x).abs();
            if stable || certified || improvements >= max_iter {
                return TurnSolution { table, w, x: x_new, improvements, proper };
            }
            prev = Some(table.policy);
            x = x_new;
        }
    }
}

/// Stand-in value for a policy that never leaves the self loop.
pub const IMPROPER_COST: f64 = -1e12;

fn improper_value(turn_reward: f64) -> f64 {
    if turn_reward < 0.0 {
        IMPROPER_COST
    } else {
        0.0
    }
}

/// Coefficients of one slot under a fixed action.
pub fn slot_coefficients(
    hits: &SparseHits,
    ctx: &TurnContext,
    table: &TurnTable,
    k: usize,
    action: usize,
) -> (f64, f64) {
    let (i, u) = slot_state(k);
    let (labels, probs) = hits.row(action);
    let (mut qa, mut qb) = (0.0, 0.0);
    for (&l, &p) in labels.iter().zip(probs) {
        let z = l as usize;
        let (a, b) = match dart_effect(ctx.s, i, u, SCORES[z], DOUBLES[z]) {
            DartEffect::Continue { u } => {
                let next = slot(i - 1, u).expect("continuation slot");
                (table.alpha[next], table.beta[next])
            }
            e => ctx.terminal(e),
        };
        qa += p * a;
        qb += p * b;
    }
    if i == 3 {
        qa += ctx.turn_reward;
    }
    (qa, qb)
}

/// Coefficients of every reachable slot under a fixed policy.
pub fn evaluate_policy(hits: &SparseHits, ctx: &TurnContext, policy: &[u32; NUM_SLOTS]) -> Result<TurnTable, usize> {
    let reach = Reach::new(ctx.s);
    let mut table = TurnTable::empty();
    let order = reach
        .u1
        .iter()
        .map(|&u| 62 + u as usize)
        .chain(reach.u2.iter().map(|&u| 1 + u as usize))
        .chain(std::iter::once(0));
    for k in order {
        let a = policy[k];
        if a == NO_ACTION || a as usize >= hits.len() {
            return Err(k);
        }
        let (qa, qb) = slot_coefficients(hits, ctx, &table, k, a as usize);
        table.alpha[k] = qa;
        table.beta[k] = qb;
        table.policy[k] = a;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_round_trip() {
        for k in 0..NUM_SLOTS {
            let (i, u) = slot_state(k);
            assert_eq!(slot(i, u), Some(k));
        }
        assert_eq!(slot(3, 1), None);
        assert_eq!(slot(2, 61), None);
    }

    #[test]
    fn reach_sets() {
        let r = Reach::new(2);
        assert_eq!(r.u2, vec![0]);
        assert_eq!(r.u1, vec![0]);
        let r = Reach::new(501);
        assert_eq!(r.u2.len(), 44);
        assert!(!r.u2.contains(&23) && r.u2.contains(&50));
        assert!(r.u1.contains(&120) && !r.u1.contains(&119));
        assert_eq!(r.slots().count(), 1 + r.u2.len() + r.u1.len());
    }
}
