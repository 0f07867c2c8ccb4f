//! Scoring rules of a 501 leg: checkout on a double, busts, and turns of up
//! to three darts.

use serde::{Deserialize, Serialize};

use crate::board::OutcomeLabel;
use crate::error::{Error, Result};

/// Effect of one dart thrown at start-of-turn score `s` with `i` darts left
/// (including this one) and `u` points already scored in the turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DartEffect {
    Checkout,
    /// The turn is voided; the score reverts to `s`.
    Bust,
    /// Next dart of the same turn with the new within-turn total.
    Continue {
        u: u32,
    },
    /// Turn complete with this new score.
    EndTurn {
        score: u32,
    },
}

#[inline]
pub fn dart_effect(s: u32, i: u8, u: u32, h: u32, double: bool) -> DartEffect {
    let r = s as i64 - u as i64 - h as i64;
    if r == 0 && double {
        DartEffect::Checkout
    } else if r <= 1 {
        DartEffect::Bust
    } else if i > 1 {
        DartEffect::Continue { u: u + h }
    } else {
        DartEffect::EndTurn { score: r as u32 }
    }
}

/// Single-player state: start-of-turn score, darts left, points this turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NsState {
    pub s: u32,
    pub i: u8,
    pub u: u32,
}

impl NsState {
    pub const fn start(s: u32) -> Self {
        NsState { s, i: 3, u: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsNext {
    Win,
    State(NsState),
}

pub fn ns_transition(st: NsState, z: OutcomeLabel) -> NsNext {
    match dart_effect(st.s, st.i, st.u, z.score(), z.is_double()) {
        DartEffect::Checkout => NsNext::Win,
        DartEffect::Bust => NsNext::State(NsState::start(st.s)),
        DartEffect::Continue { u } => NsNext::State(NsState { s: st.s, i: st.i - 1, u }),
        DartEffect::EndTurn { score } => NsNext::State(NsState::start(score)),
    }
}

/// Two-player state from the thrower's side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ZsgState {
    pub s_a: u32,
    pub s_b: u32,
    pub i: u8,
    pub u: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrNext {
    AWin,
    BWin,
    State(ZsgState),
}

/// Transition for the thrower A, where `s_b_next` is the opponent's score
/// after the turn that follows A's (used only when A's turn ends).
pub fn br_transition(st: ZsgState, z: OutcomeLabel, s_b_next: u32) -> BrNext {
    let after = |s_a| {
        if s_b_next == 0 {
            BrNext::BWin
        } else {
            BrNext::State(ZsgState { s_a, s_b: s_b_next, i: 3, u: 0 })
        }
    };
    match dart_effect(st.s_a, st.i, st.u, z.score(), z.is_double()) {
        DartEffect::Checkout => BrNext::AWin,
        DartEffect::Bust => after(st.s_a),
        DartEffect::Continue { u } => BrNext::State(ZsgState { i: st.i - 1, u, ..st }),
        DartEffect::EndTurn { score } => after(score),
    }
}

/// What happened after recording a dart in a [`LegState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DartEvent {
    Continue,
    TurnEnd,
    Bust,
    LegWon { winner: usize },
}

/// A live leg between players 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegState {
    pub scores: [u32; 2],
    pub to_throw: usize,
    /// Darts left in the current turn.
    pub i: u8,
    /// Points scored so far this turn.
    pub u: u32,
    pub winner: Option<usize>,
}

impl LegState {
    pub fn new(start: u32, starter: usize) -> Result<Self> {
        if start < 2 || starter > 1 {
            return Err(Error::InvalidInput(format!(
                "leg needs start >= 2 and starter 0 or 1 (got {start}, {starter})"
            )));
        }
        Ok(LegState { scores: [start, start], to_throw: starter, i: 3, u: 0, winner: None })
    }

    /// Score the thrower would have if the turn ended now.
    pub fn remaining(&self) -> u32 {
        self.scores[self.to_throw] - self.u
    }

    pub fn is_over(&self) -> bool {
        self.winner.is_some()
    }

    pub fn apply(&mut self, z: OutcomeLabel) -> Result<DartEvent> {
        if self.is_over() {
            return Err(Error::InvalidInput("leg is already complete".into()));
        }
        let p = self.to_throw;
        let s = self.scores[p];
        Ok(match dart_effect(s, self.i, self.u, z.score(), z.is_double()) {
            DartEffect::Checkout => {
                self.scores[p] = 0;
                self.u = 0;
                self.winner = Some(p);
                DartEvent::LegWon { winner: p }
            }
            DartEffect::Bust => {
                self.pass_turn();
                DartEvent::Bust
            }
            DartEffect::Continue { u } => {
                self.i -= 1;
                self.u = u;
                DartEvent::Continue
            }
            DartEffect::EndTurn { score } => {
                self.scores[p] = score;
                self.pass_turn();
                DartEvent::TurnEnd
            }
        })
    }

    fn pass_turn(&mut self) {
        self.to_throw = 1 - self.to_throw;
        self.i = 3;
        self.u = 0;
    }
}
