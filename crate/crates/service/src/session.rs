//! A live match between two players, advanced one dart at a time.

use serde::{Deserialize, Serialize};

use darts_core::rules::{DartEvent, LegState, ZsgState};
use darts_core::{OutcomeLabel, Player, Target};

use crate::catalog::SolutionState;

/// The position within the current leg. Player 0 is the session's first
/// player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlayState {
    pub scores: [u32; 2],
    pub to_throw: usize,
    /// Darts left in the current turn.
    pub i: u8,
    /// Points scored so far this turn.
    pub u: u32,
}

impl PlayState {
    /// The same state in the solution's terms, where `swapped` means the
    /// session's player 0 is the solution's player B.
    pub fn to_solution(self, swapped: bool) -> SolutionState {
        let a = usize::from(swapped);
        let thrower = if self.to_throw == a { Player::A } else { Player::B };
        SolutionState { thrower, st: ZsgState { s_a: self.scores[a], s_b: self.scores[1 - a], i: self.i, u: self.u } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DartRecord {
    pub leg: u32,
    pub player: usize,
    pub label: OutcomeLabel,
    /// Landing point when the dart was entered as a point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Target>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MatchEvent {
    TurnEnd { player: usize },
    Bust { player: usize },
    LegWon { leg: u32, winner: usize },
    LegStarted { leg: u32, starter: usize },
    MatchWon { winner: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DartError {
    MatchOver,
}

/// Match rules: `legs` is odd, the first to a majority wins, and leg
/// starters alternate beginning with player 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchSession {
    pub legs: u32,
    pub start: u32,
    pub leg: u32,
    pub legs_won: [u32; 2],
    pub winner: Option<usize>,
    pub state: LegState,
    pub history: Vec<DartRecord>,
}

impl MatchSession {
    pub fn new(legs: u32, start: u32) -> Self {
        MatchSession {
            legs,
            start,
            leg: 0,
            legs_won: [0, 0],
            winner: None,
            state: LegState::new(start, 0).expect("start validated by caller"),
            history: Vec::new(),
        }
    }

    pub fn play_state(&self) -> PlayState {
        PlayState { scores: self.state.scores, to_throw: self.state.to_throw, i: self.state.i, u: self.state.u }
    }

    pub fn is_over(&self) -> bool {
        self.winner.is_some()
    }

    pub fn apply(&mut self, label: OutcomeLabel, point: Option<Target>) -> Result<Vec<MatchEvent>, DartError> {
        if self.is_over() {
            return Err(DartError::MatchOver);
        }
        let player = self.state.to_throw;
        self.history.push(DartRecord { leg: self.leg, player, label, point });
        let ev = self.state.apply(label).expect("leg in progress");
        let mut events = Vec::new();
        match ev {
            DartEvent::Continue => {}
            DartEvent::TurnEnd => events.push(MatchEvent::TurnEnd { player }),
            DartEvent::Bust => events.push(MatchEvent::Bust { player }),
            DartEvent::LegWon { winner } => {
                events.push(MatchEvent::LegWon { leg: self.leg, winner });
                self.legs_won[winner] += 1;
                if self.legs_won[winner] > self.legs / 2 {
                    self.winner = Some(winner);
                    events.push(MatchEvent::MatchWon { winner });
                } else {
                    self.leg += 1;
                    let starter = (self.leg % 2) as usize;
                    self.state = LegState::new(self.start, starter).expect("valid start");
                    events.push(MatchEvent::LegStarted { leg: self.leg, starter });
                }
            }
        }
        Ok(events)
    }

    /// Rebuilds a session from its dart history.
    pub fn replay(legs: u32, start: u32, history: &[DartRecord]) -> Result<Self, DartError> {
        let mut s = MatchSession::new(legs, start);
        for d in history {
            s.apply(d.label, d.point)?;
        }
        Ok(s)
    }
}
