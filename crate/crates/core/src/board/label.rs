use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Number of distinct outcome labels: 62 scoring regions plus `Miss`.
pub const NUM_LABELS: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ring {
    Single,
    Double,
    Treble,
}

impl Ring {
    pub fn multiplier(self) -> u32 {
        match self {
            Ring::Single => 1,
            Ring::Double => 2,
            Ring::Treble => 3,
        }
    }
}

/// The result of a single dart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OutcomeLabel {
    Wedge { ring: Ring, base: u8 },
    SingleBull,
    DoubleBull,
    Miss,
}

impl OutcomeLabel {
    pub const SB: OutcomeLabel = OutcomeLabel::SingleBull;
    pub const DB: OutcomeLabel = OutcomeLabel::DoubleBull;
    pub const MISS: OutcomeLabel = OutcomeLabel::Miss;

    pub fn single(base: u8) -> Self {
        Self::wedge(Ring::Single, base)
    }

    pub fn double(base: u8) -> Self {
        Self::wedge(Ring::Double, base)
    }

    pub fn treble(base: u8) -> Self {
        Self::wedge(Ring::Treble, base)
    }

    fn wedge(ring: Ring, base: u8) -> Self {
        assert!((1..=20).contains(&base), "wedge base {base} out of range");
        OutcomeLabel::Wedge { ring, base }
    }

    /// Dense index in `0..NUM_LABELS`: S1..S20, D1..D20, T1..T20, SB, DB, MISS.
    pub fn index(self) -> usize {
        match self {
            OutcomeLabel::Wedge { ring, base } => {
                let offset = match ring {
                    Ring::Single => 0,
                    Ring::Double => 20,
                    Ring::Treble => 40,
                };
                offset + base as usize - 1
            }
            OutcomeLabel::SingleBull => 60,
            OutcomeLabel::DoubleBull => 61,
            OutcomeLabel::Miss => 62,
        }
    }

    pub fn from_index(idx: usize) -> Option<Self> {
        Some(match idx {
            0..=19 => Self::single(idx as u8 + 1),
            20..=39 => Self::double(idx as u8 - 19),
            40..=59 => Self::treble(idx as u8 - 39),
            60 => Self::SB,
            61 => Self::DB,
            62 => Self::MISS,
            _ => return None,
        })
    }

    /// All 63 labels in index order.
    pub fn all() -> impl Iterator<Item = OutcomeLabel> {
        (0..NUM_LABELS).map(|i| Self::from_index(i).unwrap())
    }

    /// The 62 labels that name a region of the board.
    pub fn scoring() -> impl Iterator<Item = OutcomeLabel> {
        Self::all().filter(|l| !l.is_miss())
    }

    /// Numeric score of the dart.
    pub fn score(self) -> u32 {
        match self {
            OutcomeLabel::Wedge { ring, base } => ring.multiplier() * base as u32,
            OutcomeLabel::SingleBull => 25,
            OutcomeLabel::DoubleBull => 50,
            OutcomeLabel::Miss => 0,
        }
    }

    /// Doubles and the double bull may finish a leg.
    pub fn is_double(self) -> bool {
        matches!(self, OutcomeLabel::Wedge { ring: Ring::Double, .. } | OutcomeLabel::DoubleBull)
    }

    pub fn is_miss(self) -> bool {
        matches!(self, OutcomeLabel::Miss)
    }
}

/// `score()` indexed by `index()`.
pub(crate) static SCORES: [u32; NUM_LABELS] = {
    let mut out = [0u32; NUM_LABELS];
    let mut i = 0;
    while i < 20 {
        out[i] = i as u32 + 1;
        out[20 + i] = 2 * (i as u32 + 1);
        out[40 + i] = 3 * (i as u32 + 1);
        i += 1;
    }
    out[60] = 25;
    out[61] = 50;
    out
};

/// `is_double()` indexed by `index()`.
pub(crate) static DOUBLES: [bool; NUM_LABELS] = {
    let mut out = [false; NUM_LABELS];
    let mut i = 20;
    while i < 40 {
        out[i] = true;
        i += 1;
    }
    out[61] = true;
    out
};

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeLabel::Wedge { ring, base } => {
                let c = match ring {
                    Ring::Single => 'S',
                    Ring::Double => 'D',
                    Ring::Treble => 'T',
                };
                write!(f, "{c}{base}")
            }
            OutcomeLabel::SingleBull => f.write_str("SB"),
            OutcomeLabel::DoubleBull => f.write_str("DB"),
            OutcomeLabel::Miss => f.write_str("MISS"),
        }
    }
}

impl FromStr for OutcomeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_uppercase();
        match t.as_str() {
            "SB" | "25" => return Ok(Self::SB),
            "DB" | "BULL" => return Ok(Self::DB),
            "MISS" | "M" | "0" => return Ok(Self::MISS),
            _ => {}
        }
        let bad = || Error::Parse(format!("unknown outcome label `{s}`"));
        let mut chars = t.chars();
        let ring = match chars.next() {
            Some('S') => Ring::Single,
            Some('D') => Ring::Double,
            Some('T') => Ring::Treble,
            _ => return Err(bad()),
        };
        let base: u8 = chars.as_str().parse().map_err(|_| bad())?;
        if !(1..=20).contains(&base) {
            return Err(bad());
        }
        Ok(OutcomeLabel::Wedge { ring, base })
    }
}

impl Serialize for OutcomeLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OutcomeLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
