//! Dartboard geometry: the scoring map from a landing point to an outcome
//! label, region centers, and the grid of candidate aim points.

mod grid;
mod label;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use grid::{ActionGrid, Target};
pub use label::{OutcomeLabel, Ring, NUM_LABELS};
pub(crate) use label::{DOUBLES, SCORES};

/// Angular width of one numbered wedge.
pub const WEDGE_WIDTH: f64 = PI / 10.0;

pub const GEOMETRY_FORMAT_VERSION: u32 = 1;

/// Standard board numbering, clockwise from the top wedge.
pub const STANDARD_ORDER: [u8; 20] = [20, 1, 18, 4, 13, 6, 10, 15, 2, 17, 3, 19, 7, 16, 8, 11, 14, 9, 12, 5];

/// Wire radii in millimetres measured from the centre of the double bull,
/// plus the wedge numbering. The top wedge is centred on the +y axis and
/// numbering proceeds clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardGeometry {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub r_db: f64,
    pub r_sb: f64,
    pub r_treble_in: f64,
    pub r_treble_out: f64,
    pub r_double_in: f64,
    pub r_double_out: f64,
    pub segment_order: [u8; 20],
}

fn default_version() -> u32 {
    GEOMETRY_FORMAT_VERSION
}

impl Default for BoardGeometry {
    fn default() -> Self {
        BoardGeometry {
            format_version: GEOMETRY_FORMAT_VERSION,
            r_db: 6.35,
            r_sb: 15.9,
            r_treble_in: 99.0,
            r_treble_out: 107.0,
            r_double_in: 162.0,
            r_double_out: 170.0,
            segment_order: STANDARD_ORDER,
        }
    }
}

/// An annular sector `r0 < r <= r1`, `t0 < theta <= t1` (radians, counter-
/// clockwise from +x). Full rings use `t0 = 0, t1 = TAU`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarBox {
    pub label: OutcomeLabel,
    pub r0: f64,
    pub r1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl PolarBox {
    pub fn area(&self) -> f64 {
        0.5 * (self.r1 * self.r1 - self.r0 * self.r0) * (self.t1 - self.t0)
    }

    pub fn is_full_ring(&self) -> bool {
        self.t1 - self.t0 >= TAU - 1e-12
    }
}

impl BoardGeometry {
    /// The geometry document shipped with the crate.
    pub const DEFAULT_JSON: &'static str = include_str!("../../data/board.json");

    pub fn validate(&self) -> Result<()> {
        if self.format_version != GEOMETRY_FORMAT_VERSION {
            return Err(Error::Version {
                kind: "board geometry",
                found: self.format_version,
                expected: GEOMETRY_FORMAT_VERSION,
            });
        }
        let radii =
            [0.0, self.r_db, self.r_sb, self.r_treble_in, self.r_treble_out, self.r_double_in, self.r_double_out];
        if radii.iter().any(|r| !r.is_finite()) || radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "board radii must be strictly increasing and positive: {:?}",
                &radii[1..]
            )));
        }
        let mut seen = [false; 21];
        for &b in &self.segment_order {
            if !(1..=20).contains(&b) || seen[b as usize] {
                return Err(Error::InvalidInput(format!(
                    "segment order is not a permutation of 1..20: {:?}",
                    self.segment_order
                )));
            }
            seen[b as usize] = true;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let geom: BoardGeometry = serde_json::from_str(text)?;
        geom.validate()?;
        Ok(geom)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("geometry serializes")
    }

    /// Wedge position (0 = top, clockwise) holding `base`.
    pub fn wedge_of(&self, base: u8) -> usize {
        self.segment_order.iter().position(|&b| b == base).expect("segment order is a permutation")
    }

    /// Centre angle of wedge position `k`.
    pub fn wedge_center_angle(&self, k: usize) -> f64 {
        FRAC_PI_2 - k as f64 * WEDGE_WIDTH
    }

    /// Wedge position containing direction `theta`. A direction on a wire
    /// belongs to the wedge on its clockwise (smaller angle) side.
    pub fn wedge_at(&self, theta: f64) -> usize {
        let d = (FRAC_PI_2 + 0.5 * WEDGE_WIDTH - theta).rem_euclid(TAU);
        ((d / WEDGE_WIDTH) as usize).min(19)
    }

    /// The scoring map `g(x, y)`. Points on a circular wire belong to the
    /// inner region.
    pub fn classify(&self, x: f64, y: f64) -> OutcomeLabel {
        let r = x.hypot(y);
        if r > self.r_double_out {
            return OutcomeLabel::MISS;
        }
        if r <= self.r_db {
            return OutcomeLabel::DB;
        }
        if r <= self.r_sb {
            return OutcomeLabel::SB;
        }
        let base = self.segment_order[self.wedge_at(y.atan2(x))];
        let ring = if r <= self.r_treble_in {
            Ring::Single
        } else if r <= self.r_treble_out {
            Ring::Treble
        } else if r <= self.r_double_in {
            Ring::Single
        } else {
            Ring::Double
        };
        OutcomeLabel::Wedge { ring, base }
    }

    pub fn classify_target(&self, t: Target) -> OutcomeLabel {
        self.classify(t.x, t.y)
    }

    /// Polar boxes making up a scoring region (two for singles).
    pub fn region_boxes(&self, label: OutcomeLabel) -> Vec<PolarBox> {
        let ring = |r0, r1| PolarBox { label, r0, r1, t0: 0.0, t1: TAU };
        match label {
            OutcomeLabel::DoubleBull => vec![ring(0.0, self.r_db)],
            OutcomeLabel::SingleBull => vec![ring(self.r_db, self.r_sb)],
            OutcomeLabel::Miss => vec![ring(self.r_double_out, f64::INFINITY)],
            OutcomeLabel::Wedge { ring: kind, base } => {
                let c = self.wedge_center_angle(self.wedge_of(base));
                let (t0, t1) = (c - 0.5 * WEDGE_WIDTH, c + 0.5 * WEDGE_WIDTH);
                let b = |r0, r1| PolarBox { label, r0, r1, t0, t1 };
                match kind {
                    Ring::Single => vec![b(self.r_sb, self.r_treble_in), b(self.r_treble_out, self.r_double_in)],
                    Ring::Treble => vec![b(self.r_treble_in, self.r_treble_out)],
                    Ring::Double => vec![b(self.r_double_in, self.r_double_out)],
                }
            }
        }
    }

    /// Every on-board box: 20 wedges x 4 rings plus both bulls.
    pub fn board_boxes(&self) -> Vec<PolarBox> {
        OutcomeLabel::scoring().flat_map(|l| self.region_boxes(l)).collect()
    }

    /// Canonical aim point of a scoring region: the midpoint of its polar
    /// extent. Singles use the outer single area (the larger of the two).
    /// The double bull is the origin; the single bull ring has no angular
    /// midpoint, so its radial midpoint on the +y axis is used.
    pub fn region_center(&self, label: OutcomeLabel) -> Result<Target> {
        match label {
            OutcomeLabel::Miss => Err(Error::InvalidInput("MISS has no region center".into())),
            OutcomeLabel::DoubleBull => Ok(Target::new(0.0, 0.0)),
            OutcomeLabel::SingleBull => Ok(Target::new(0.0, 0.5 * (self.r_db + self.r_sb))),
            OutcomeLabel::Wedge { ring, base } => {
                let theta = self.wedge_center_angle(self.wedge_of(base));
                let r = match ring {
                    Ring::Single => 0.5 * (self.r_treble_out + self.r_double_in),
                    Ring::Treble => 0.5 * (self.r_treble_in + self.r_treble_out),
                    Ring::Double => 0.5 * (self.r_double_in + self.r_double_out),
                };
                Ok(Target::new(r * theta.cos(), r * theta.sin()))
            }
        }
    }

    pub fn make_grid(&self, cell_size: f64) -> Result<ActionGrid> {
        ActionGrid::new(self, cell_size)
    }
}
