//! Two-player tables indexed by both start-of-turn scores.
//!
//! Scores range over `2..=start`. Each `(s_a, s_b)` block holds one row of
//! slot values (or actions) for each player to throw, always from the
//! thrower's perspective: `a_turn` is the probability that A wins when A is
//! to throw, `b_turn` the probability that B wins when B is to throw.

use crate::ns::NsSolution;
use crate::turn::{self, NO_ACTION, NUM_SLOTS};

/// Which player throws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Player {
    A,
    B,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::A => Player::B,
            Player::B => Player::A,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Player::A => 0,
            Player::B => 1,
        }
    }

    pub fn from_index(i: usize) -> Player {
        if i == 0 {
            Player::A
        } else {
            Player::B
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockIndex {
    start: u32,
}

impl BlockIndex {
    pub fn new(start: u32) -> Self {
        assert!(start >= 2);
        BlockIndex { start }
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn side(&self) -> usize {
        self.start as usize - 1
    }

    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, s_a: u32, s_b: u32) -> bool {
        (2..=self.start).contains(&s_a) && (2..=self.start).contains(&s_b)
    }

    #[inline]
    pub fn of(&self, s_a: u32, s_b: u32) -> usize {
        debug_assert!(self.contains(s_a, s_b), "block ({s_a}, {s_b}) out of range");
        (s_a as usize - 2) * self.side() + (s_b as usize - 2)
    }

    /// Blocks `(s_a, s_b)` with `s_a + s_b = d`, ascending in `s_a`.
    pub fn diagonal(&self, d: u32) -> Vec<(u32, u32)> {
        let lo = 2.max(d.saturating_sub(self.start));
        let hi = self.start.min(d.saturating_sub(2));
        (lo..=hi).map(|s_a| (s_a, d - s_a)).collect()
    }

    /// Every block in dependency order.
    pub fn diagonals(&self) -> impl Iterator<Item = Vec<(u32, u32)>> + '_ {
        (4..=2 * self.start).map(|d| self.diagonal(d))
    }
}

/// Win probabilities for both players to throw.
#[derive(Debug, Clone, PartialEq)]
pub struct LegValues {
    pub index: BlockIndex,
    pub a_turn: Vec<[f64; NUM_SLOTS]>,
    pub b_turn: Vec<[f64; NUM_SLOTS]>,
}

impl LegValues {
    pub fn new(start: u32) -> Self {
        let index = BlockIndex::new(start);
        LegValues {
            index,
            a_turn: vec![[f64::NAN; NUM_SLOTS]; index.len()],
            b_turn: vec![[f64::NAN; NUM_SLOTS]; index.len()],
        }
    }

    pub fn start(&self) -> u32 {
        self.index.start()
    }

    pub fn rows(&self, p: Player) -> &[[f64; NUM_SLOTS]] {
        match p {
            Player::A => &self.a_turn,
            Player::B => &self.b_turn,
        }
    }

    /// Probability that the thrower `p` wins from `(s_a, s_b, i, u)`.
    pub fn thrower_value(&self, p: Player, s_a: u32, s_b: u32, i: u8, u: u32) -> Option<f64> {
        if !self.index.contains(s_a, s_b) {
            return None;
        }
        let k = turn::slot(i, u)?;
        let v = self.rows(p)[self.index.of(s_a, s_b)][k];
        (!v.is_nan()).then_some(v)
    }

    /// Probability that A wins with `p` to throw at the start of a turn.
    pub fn a_wins(&self, p: Player, s_a: u32, s_b: u32) -> f64 {
        let v = self.rows(p)[self.index.of(s_a, s_b)][0];
        match p {
            Player::A => v,
            Player::B => 1.0 - v,
        }
    }

    /// Start-of-turn value for the player whose own score is `own`.
    pub(crate) fn own_start(&self, p: Player, own: u32, opp: u32) -> f64 {
        match p {
            Player::A => self.a_turn[self.index.of(own, opp)][0],
            Player::B => self.b_turn[self.index.of(opp, own)][0],
        }
    }
}

/// Actions for both players to throw.
#[derive(Debug, Clone, PartialEq)]
pub struct LegPolicy {
    pub index: BlockIndex,
    pub a_turn: Vec<[u32; NUM_SLOTS]>,
    pub b_turn: Vec<[u32; NUM_SLOTS]>,
}

impl LegPolicy {
    pub fn new(start: u32) -> Self {
        let index = BlockIndex::new(start);
        LegPolicy {
            index,
            a_turn: vec![[NO_ACTION; NUM_SLOTS]; index.len()],
            b_turn: vec![[NO_ACTION; NUM_SLOTS]; index.len()],
        }
    }

    pub fn side(&self, p: Player) -> PolicySide<'_> {
        PolicySide { policy: self, player: p }
    }

    pub fn action(&self, p: Player, s_a: u32, s_b: u32, i: u8, u: u32) -> Option<usize> {
        if !self.index.contains(s_a, s_b) {
            return None;
        }
        let rows = match p {
            Player::A => &self.a_turn,
            Player::B => &self.b_turn,
        };
        let a = rows[self.index.of(s_a, s_b)][turn::slot(i, u)?];
        (a != NO_ACTION).then_some(a as usize)
    }
}

/// A policy for one player's turns, looked up by the thrower's own score
/// and the opponent's score.
pub trait TurnPolicy: Sync {
    fn turn_actions(&self, own: u32, opp: u32) -> &[u32; NUM_SLOTS];
}

impl TurnPolicy for NsSolution {
    fn turn_actions(&self, own: u32, _opp: u32) -> &[u32; NUM_SLOTS] {
        &self.policy[own as usize]
    }
}

/// One player's half of a [`LegPolicy`].
#[derive(Debug, Clone, Copy)]
pub struct PolicySide<'a> {
    pub policy: &'a LegPolicy,
    pub player: Player,
}

impl TurnPolicy for PolicySide<'_> {
    fn turn_actions(&self, own: u32, opp: u32) -> &[u32; NUM_SLOTS] {
        let ix = self.policy.index;
        match self.player {
            Player::A => &self.policy.a_turn[ix.of(own, opp)],
            Player::B => &self.policy.b_turn[ix.of(opp, own)],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonals_cover_every_block_once() {
        let ix = BlockIndex::new(9);
        let mut seen = vec![false; ix.len()];
        for diag in ix.diagonals() {
            for (a, b) in diag {
                let k = ix.of(a, b);
                assert!(!seen[k]);
                seen[k] = true;
            }
        }
        assert!(seen.into_iter().all(|v| v));
    }
}
