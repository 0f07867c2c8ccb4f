use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{gain, head_to_head, match_win_prob, MatchSpec};
use crate::error::{Error, Result};
use crate::hits::HitTable;
use crate::leg::{BlockIndex, LegValues, Player, TurnPolicy};
use crate::ns::SolveConfig;
use crate::par::Exec;
use crate::zsg::{best_response, OpponentTurnKernel, ZsgSolution};

/// A pair of strategies, A's first: E = equilibrium, N = non-strategic,
/// B = best response to the opponent's non-strategic policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Combo {
    EE,
    NN,
    NE,
    EN,
    NB,
    BN,
}

impl Combo {
    pub const ALL: [Combo; 6] = [Combo::EE, Combo::NN, Combo::NE, Combo::EN, Combo::NB, Combo::BN];
}

impl fmt::Display for Combo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Combo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase().replace('-', "");
        Combo::ALL
            .into_iter()
            .find(|c| c.to_string() == t)
            .ok_or_else(|| Error::Parse(format!("unknown strategy combination '{s}'")))
    }
}

/// One row of a gain table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub legs: u32,
    pub match_equilibrium: f64,
    pub match_non_strategic: f64,
    pub gain: f64,
}

/// Start-of-turn part of a head-to-head table. Within-turn states are
/// dropped, which keeps a start-501 table at a few megabytes.
#[derive(Debug, Clone, PartialEq)]
pub struct StartValues {
    pub index: BlockIndex,
    /// P(A wins | A to throw), per block.
    pub a_turn: Vec<f64>,
    /// P(B wins | B to throw), per block.
    pub b_turn: Vec<f64>,
}

impl StartValues {
    pub fn from_table(t: &LegValues) -> Self {
        StartValues {
            index: t.index,
            a_turn: t.a_turn.iter().map(|r| r[0]).collect(),
            b_turn: t.b_turn.iter().map(|r| r[0]).collect(),
        }
    }

    /// Probability that A wins with `p` to throw at the start of a turn.
    pub fn a_wins(&self, p: Player, s_a: u32, s_b: u32) -> f64 {
        let k = self.index.of(s_a, s_b);
        match p {
            Player::A => self.a_turn[k],
            Player::B => 1.0 - self.b_turn[k],
        }
    }
}

/// Full table for `thrower` playing non-strategically against the
/// opponent's equilibrium policy: the baseline of a heatmap.
pub fn non_strategic_baseline(
    sol: &ZsgSolution,
    hits_a: &HitTable,
    hits_b: &HitTable,
    thrower: Player,
    exec: Exec,
) -> Result<LegValues> {
    let start = sol.start();
    match thrower {
        Player::A => head_to_head(&sol.ns_a, &sol.policy.side(Player::B), hits_a, hits_b, start, exec),
        Player::B => head_to_head(&sol.policy.side(Player::A), &sol.ns_b, hits_a, hits_b, start, exec),
    }
}

/// Start-of-turn head-to-head values for a set of strategy combinations.
#[derive(Debug, Clone)]
pub struct StrategyTables {
    pub start: u32,
    pub tables: Vec<(Combo, StartValues)>,
}

impl StrategyTables {
    pub fn compute(
        sol: &ZsgSolution,
        hits_a: &HitTable,
        hits_b: &HitTable,
        combos: &[Combo],
        cfg: &SolveConfig,
    ) -> Result<Self> {
        let start = sol.start();
        let cfg = SolveConfig { start_score: start, ..*cfg };
        let e_a = sol.policy.side(Player::A);
        let e_b = sol.policy.side(Player::B);
        let mut tables = Vec::new();
        for &c in combos {
            let values = match c {
                Combo::EE => head_to_head(&e_a, &e_b, hits_a, hits_b, start, cfg.exec)?,
                Combo::NN => head_to_head(&sol.ns_a, &sol.ns_b, hits_a, hits_b, start, cfg.exec)?,
                Combo::NE => head_to_head(&sol.ns_a, &e_b, hits_a, hits_b, start, cfg.exec)?,
                Combo::EN => head_to_head(&e_a, &sol.ns_b, hits_a, hits_b, start, cfg.exec)?,
                Combo::NB => {
                    let k = OpponentTurnKernel::from_policy(hits_a, &sol.ns_a as &dyn TurnPolicy, start)?;
                    let br = best_response(hits_b, &k, &cfg)?;
                    head_to_head(&sol.ns_a, &br, hits_a, hits_b, start, cfg.exec)?
                }
                Combo::BN => {
                    let k = OpponentTurnKernel::from_policy(hits_b, &sol.ns_b as &dyn TurnPolicy, start)?;
                    let br = best_response(hits_a, &k, &cfg)?;
                    head_to_head(&br, &sol.ns_b, hits_a, hits_b, start, cfg.exec)?
                }
            };
            tables.push((c, StartValues::from_table(&values)));
        }
        Ok(StrategyTables { start, tables })
    }

    pub fn get(&self, c: Combo) -> Option<&StartValues> {
        self.tables.iter().find(|(k, _)| *k == c).map(|(_, v)| v)
    }

    /// `(P(A wins | A starts), P(A wins | B starts))` from `(s, s)`.
    pub fn leg_probs(&self, c: Combo, s: u32) -> Result<(f64, f64)> {
        let t = self.get(c).ok_or_else(|| Error::InvalidInput(format!("combination {c} was not evaluated")))?;
        if !t.index.contains(s, s) {
            return Err(Error::InvalidInput(format!("score {s} is outside the evaluated range")));
        }
        Ok((t.a_wins(Player::A, s, s), t.a_wins(Player::B, s, s)))
    }

    /// CSV `combo,a_starts,b_starts` with A's leg win probabilities from
    /// the full start score.
    pub fn write_matrix_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["combo", "a_starts", "b_starts"])?;
        for (c, _) in &self.tables {
            let (pa, pb) = self.leg_probs(*c, self.start)?;
            w.write_record([c.to_string(), format!("{pa:.17e}"), format!("{pb:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Gain of equilibrium over non-strategic play against an equilibrium
    /// opponent, for each match length.
    pub fn gain_rows(&self, legs: &[u32]) -> Result<Vec<GainRow>> {
        let star = self.leg_probs(Combo::EE, self.start)?;
        let base = self.leg_probs(Combo::NE, self.start)?;
        legs.iter()
            .map(|&n| {
                Ok(GainRow {
                    legs: n,
                    match_equilibrium: match_win_prob(&MatchSpec::new(n, star.0, star.1))?,
                    match_non_strategic: match_win_prob(&MatchSpec::new(n, base.0, base.1))?,
                    gain: gain(star, base, n)?,
                })
            })
            .collect()
    }
}

/// CSV `legs,match_equilibrium,match_non_strategic,gain`.
pub fn write_gain_csv<W: Write>(rows: &[GainRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["legs", "match_equilibrium", "match_non_strategic", "gain"])?;
    for r in rows {
        w.write_record([
            r.legs.to_string(),
            format!("{:.17e}", r.match_equilibrium),
            format!("{:.17e}", r.match_non_strategic),
            format!("{:.17e}", r.gain),
        ])?;
    }
    w.flush()?;
    Ok(())
}
