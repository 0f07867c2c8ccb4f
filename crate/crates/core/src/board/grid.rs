use serde::{Deserialize, Serialize};

use super::BoardGeometry;
use crate::error::{Error, Result};

/// An aim point in millimetres, origin at the centre of the double bull.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub x: f64,
    pub y: f64,
}

impl Target {
    pub const fn new(x: f64, y: f64) -> Self {
        Target { x, y }
    }

    pub fn radius(self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Candidate aim points: centres of the square cells of side `cell_size`
/// whose centre lies on the board. Cells are aligned so that the origin is
/// a cell centre; ordering is row-major by `(y, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionGrid {
    cell_size: f64,
    targets: Vec<Target>,
}

impl ActionGrid {
    pub fn new(geom: &BoardGeometry, cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::InvalidInput(format!("cell size must be positive, got {cell_size}")));
        }
        let r = geom.r_double_out;
        let n = (r / cell_size).floor() as i64;
        let mut targets = Vec::new();
        for j in -n..=n {
            let y = j as f64 * cell_size;
            for i in -n..=n {
                let x = i as f64 * cell_size;
                if x * x + y * y <= r * r {
                    targets.push(Target::new(x, y));
                }
            }
        }
        Ok(ActionGrid { cell_size, targets })
    }

    /// A grid over explicit targets, for hand-built outcome tables.
    pub fn from_targets(cell_size: f64, targets: Vec<Target>) -> Self {
        ActionGrid { cell_size, targets }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn targets(&self) -> &[Target] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn get(&self, idx: usize) -> Option<Target> {
        self.targets.get(idx).copied()
    }

    /// Index of the grid target closest to `t`.
    pub fn nearest(&self, t: Target) -> Option<usize> {
        self.targets
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                let da = (a.x - t.x).powi(2) + (a.y - t.y).powi(2);
                let db = (b.x - t.x).powi(2) + (b.y - t.y).powi(2);
                da.total_cmp(&db)
            })
            .map(|(i, _)| i)
    }
}
