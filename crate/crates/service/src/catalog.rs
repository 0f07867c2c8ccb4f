//! Solution artifacts loaded at startup and shared read-only by sessions.

use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use darts_core::eval::non_strategic_baseline;
use darts_core::rules::{NsState, ZsgState};
use darts_core::store;
use darts_core::zsg::{heatmap, Heatmap};
use darts_core::{BoardGeometry, Exec, HitTable, LegValues, OutcomeLabel, Player, Result, Target, ZsgSolution};

/// A player is a hit table; its id is the artifact's file stem.
#[derive(Debug)]
pub struct PlayerEntry {
    pub id: String,
    pub hits: HitTable,
    pub hash: String,
}

/// An equilibrium solution between two catalogued players.
#[derive(Debug)]
pub struct Pairing {
    pub id: String,
    pub sol: ZsgSolution,
    /// Catalogue indices of the solution's players A and B.
    pub players: [usize; 2],
    /// Each thrower's values when it plays its non-strategic policy against
    /// the equilibrium opponent; computed on first use.
    baseline: [OnceLock<LegValues>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aim {
    pub action: usize,
    pub target: Target,
    pub label: OutcomeLabel,
}

/// A state in the solution's own terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionState {
    pub thrower: Player,
    pub st: ZsgState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Advice {
    pub equilibrium: Aim,
    pub win_probability: f64,
    pub non_strategic: Aim,
}

#[derive(Debug, Default)]
pub struct Catalog {
    pub geometry: BoardGeometry,
    pub players: Vec<PlayerEntry>,
    pub pairings: Vec<Pairing>,
}

fn stem<'a>(name: &'a str, ext: &str) -> Option<&'a str> {
    name.strip_suffix(ext)?.strip_suffix('.')
}

impl Catalog {
    pub fn new(geometry: BoardGeometry) -> Self {
        Catalog { geometry, ..Default::default() }
    }

    /// Loads every `*.hits.bin` and `*.zsgsol.bin` in `dir`, plus an
    /// optional `board.json`. Solutions whose hit tables are absent are
    /// skipped with a warning.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let board = dir.join("board.json");
        let geometry = if board.exists() {
            BoardGeometry::from_json(&fs::read_to_string(board)?)?
        } else {
            BoardGeometry::default()
        };
        let mut names: Vec<String> =
            fs::read_dir(dir)?.filter_map(|e| e.ok()?.file_name().into_string().ok()).collect();
        names.sort();
        let mut cat = Catalog::new(geometry);
        for name in &names {
            if let Some(id) = stem(name, store::HITS_EXT) {
                cat.add_player(id, store::load_hits(&dir.join(name))?);
            }
        }
        for name in &names {
            if let Some(id) = stem(name, store::ZSG_EXT) {
                let sol = store::load_zsg(&dir.join(name))?;
                if cat.add_solution(id, sol).is_none() {
                    log::warn!("{name}: hit tables for this solution are not in the catalogue, skipping");
                }
            }
        }
        Ok(cat)
    }

    pub fn add_player(&mut self, id: &str, hits: HitTable) -> usize {
        let hash = hits.content_hash();
        self.players.push(PlayerEntry { id: id.to_string(), hits, hash });
        self.players.len() - 1
    }

    /// Registers a solution; `None` when either player is unknown.
    pub fn add_solution(&mut self, id: &str, sol: ZsgSolution) -> Option<usize> {
        let a = self.players.iter().position(|p| p.hash == sol.hits_a_hash)?;
        let b = self.players.iter().position(|p| p.hash == sol.hits_b_hash)?;
        self.pairings.push(Pairing {
            id: id.to_string(),
            sol,
            players: [a, b],
            baseline: [OnceLock::new(), OnceLock::new()],
        });
        Some(self.pairings.len() - 1)
    }

    pub fn player(&self, id: &str) -> Option<usize> {
        self.players.iter().position(|p| p.id == id)
    }

    /// A solution for the ordered pair, and whether its roles are swapped
    /// relative to the request.
    pub fn find_pairing(&self, first: usize, second: usize) -> Option<(usize, bool)> {
        let direct = self.pairings.iter().position(|p| p.players == [first, second]);
        direct
            .map(|k| (k, false))
            .or_else(|| self.pairings.iter().position(|p| p.players == [second, first]).map(|k| (k, true)))
    }

    pub fn hits(&self, pairing: usize, p: Player) -> &HitTable {
        &self.players[self.pairings[pairing].players[p.index()]].hits
    }

    fn aim(&self, hits: &HitTable, action: usize) -> Aim {
        let target = hits.target(action);
        Aim { action, target, label: self.geometry.classify_target(target) }
    }

    /// Equilibrium and non-strategic aims at a state; `None` if the state is
    /// outside the solution or unreachable.
    pub fn advise(&self, pairing: usize, s: SolutionState) -> Option<Advice> {
        let sol = &self.pairings[pairing].sol;
        let hits = self.hits(pairing, s.thrower);
        let action = sol.action(s.thrower, s.st)?;
        let win_probability = sol.j(s.thrower, s.st)?;
        let own = match s.thrower {
            Player::A => s.st.s_a,
            Player::B => s.st.s_b,
        };
        let ns = sol.ns(s.thrower).action(NsState { s: own, i: s.st.i, u: s.st.u })?;
        Some(Advice { equilibrium: self.aim(hits, action), win_probability, non_strategic: self.aim(hits, ns) })
    }

    pub fn baseline(&self, pairing: usize, p: Player) -> Result<&LegValues> {
        let pair = &self.pairings[pairing];
        if let Some(v) = pair.baseline[p.index()].get() {
            return Ok(v);
        }
        let (ha, hb) = (self.hits(pairing, Player::A), self.hits(pairing, Player::B));
        let v = non_strategic_baseline(&pair.sol, ha, hb, p, Exec::default())?;
        Ok(pair.baseline[p.index()].get_or_init(|| v))
    }

    pub fn heatmap(&self, pairing: usize, s: SolutionState) -> Result<Heatmap> {
        let base = self.baseline(pairing, s.thrower)?;
        heatmap(&self.pairings[pairing].sol, self.hits(pairing, s.thrower), s.thrower, s.st, base)
    }
}
