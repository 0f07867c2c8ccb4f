//! Outcome distributions `p(z; a)` over an action grid.

use sha2::{Digest, Sha256};

use crate::board::{ActionGrid, BoardGeometry, OutcomeLabel, Target, NUM_LABELS};
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::skill::{hit_distribution, Quadrature, SkillModel};

/// Rows must sum to one within this tolerance.
pub const ROW_TOLERANCE: f64 = 1e-9;

const MISS: usize = NUM_LABELS - 1;

/// Dense table of outcome probabilities, one row of 63 per grid target.
#[derive(Debug, Clone, PartialEq)]
pub struct HitTable {
    grid: ActionGrid,
    probs: Vec<f64>,
    /// Hash of the skill model, geometry and quadrature the table came from;
    /// empty for hand-built tables.
    pub source_hash: String,
}

impl HitTable {
    /// Integrate `skill` at every target of `grid`.
    pub fn build(
        geom: &BoardGeometry,
        skill: &SkillModel,
        grid: &ActionGrid,
        quad: Quadrature,
        exec: Exec,
    ) -> HitTable {
        let mut probs = vec![0.0; grid.len() * NUM_LABELS];
        let targets = grid.targets();
        exec.for_each_chunk_mut(&mut probs, NUM_LABELS * 64, |c, chunk| {
            for (k, row) in chunk.chunks_mut(NUM_LABELS).enumerate() {
                let a = targets[c * 64 + k];
                row.copy_from_slice(&hit_distribution(geom, &skill.sigma_for(geom, a), a, quad));
            }
        });
        HitTable { grid: grid.clone(), probs, source_hash: build_hash(geom, skill, grid, quad) }
    }

    /// A table from explicit rows; rows are validated.
    pub fn from_rows(grid: ActionGrid, rows: Vec<[f64; NUM_LABELS]>) -> Result<HitTable> {
        if rows.len() != grid.len() {
            return Err(Error::InvalidInput(format!("{} rows for {} targets", rows.len(), grid.len())));
        }
        let table = HitTable { grid, probs: rows.into_iter().flatten().collect(), source_hash: String::new() };
        table.validate()?;
        Ok(table)
    }

    pub(crate) fn from_parts(grid: ActionGrid, probs: Vec<f64>, source_hash: String) -> Result<Self> {
        if probs.len() != grid.len() * NUM_LABELS {
            return Err(Error::Corrupt("hit table size does not match its grid".into()));
        }
        let table = HitTable { grid, probs, source_hash };
        table.validate()?;
        Ok(table)
    }

    /// Every aim lands exactly where aimed.
    pub fn perfect(geom: &BoardGeometry, grid: &ActionGrid) -> HitTable {
        let mut probs = vec![0.0; grid.len() * NUM_LABELS];
        for (i, t) in grid.targets().iter().enumerate() {
            probs[i * NUM_LABELS + geom.classify_target(*t).index()] = 1.0;
        }
        HitTable { grid: grid.clone(), probs, source_hash: String::new() }
    }

    pub fn validate(&self) -> Result<()> {
        for (row, p) in self.probs.chunks(NUM_LABELS).enumerate() {
            let sum: f64 = p.iter().sum();
            if p.iter().any(|v| !(*v >= 0.0)) || (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::Unnormalized { row, sum });
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &ActionGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn row(&self, action: usize) -> &[f64] {
        &self.probs[action * NUM_LABELS..(action + 1) * NUM_LABELS]
    }

    pub fn prob(&self, action: usize, z: OutcomeLabel) -> f64 {
        self.probs[action * NUM_LABELS + z.index()]
    }

    pub fn target(&self, action: usize) -> Target {
        self.grid.targets()[action]
    }

    pub fn raw(&self) -> &[f64] {
        &self.probs
    }

    /// SHA-256 over the grid and probabilities.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.grid.cell_size().to_le_bytes());
        for t in self.grid.targets() {
            h.update(t.x.to_le_bytes());
            h.update(t.y.to_le_bytes());
        }
        for p in &self.probs {
            h.update(p.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn sparse(&self) -> SparseHits {
        SparseHits::from_table(self, SparseHits::DEFAULT_DROP)
    }
}

/// Cache key for a table built from a model.
pub fn build_hash(geom: &BoardGeometry, skill: &SkillModel, grid: &ActionGrid, quad: Quadrature) -> String {
    let mut h = Sha256::new();
    h.update(geom.to_json());
    h.update(skill.content_hash());
    h.update(grid.cell_size().to_le_bytes());
    h.update((grid.len() as u64).to_le_bytes());
    h.update(quad.max_panel.to_le_bytes());
    hex::encode(h.finalize())
}

/// Compressed rows for the solvers: entries below a threshold are folded
/// into `MISS`, which keeps every row a distribution.
#[derive(Debug, Clone)]
pub struct SparseHits {
    offsets: Vec<u32>,
    labels: Vec<u8>,
    probs: Vec<f64>,
}

impl SparseHits {
    pub const DEFAULT_DROP: f64 = 1e-14;

    pub fn from_table(table: &HitTable, drop_below: f64) -> SparseHits {
        let mut offsets = Vec::with_capacity(table.len() + 1);
        let mut labels = Vec::new();
        let mut probs = Vec::new();
        offsets.push(0);
        for a in 0..table.len() {
            let row = table.row(a);
            let mut folded = 0.0;
            for (z, &p) in row.iter().enumerate().take(MISS) {
                if p >= drop_below && p > 0.0 {
                    labels.push(z as u8);
                    probs.push(p);
                } else {
                    folded += p;
                }
            }
            let miss = row[MISS] + folded;
            if miss > 0.0 {
                labels.push(MISS as u8);
                probs.push(miss);
            }
            offsets.push(labels.len() as u32);
        }
        SparseHits { offsets, labels, probs }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(labels, probs)` of one action.
    #[inline]
    pub fn row(&self, action: usize) -> (&[u8], &[f64]) {
        let (lo, hi) = (self.offsets[action] as usize, self.offsets[action + 1] as usize);
        (&self.labels[lo..hi], &self.probs[lo..hi])
    }

    pub fn nnz(&self) -> usize {
        self.labels.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skill::Covariance;

    #[test]
    fn built_rows_are_distributions() {
        let geom = BoardGeometry::default();
        let grid = ActionGrid::new(&geom, 20.0).unwrap();
        let skill = SkillModel::uniform("u", Covariance::isotropic(6.0).unwrap());
        let t = HitTable::build(&geom, &skill, &grid, Quadrature::default(), Exec::default());
        t.validate().unwrap();
        let s = HitTable::build(&geom, &skill, &grid, Quadrature::default(), Exec::Sequential);
        assert_eq!(t, s);
        let sp = t.sparse();
        for a in 0..t.len() {
            let (_, p) = sp.row(a);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn from_rows_rejects_bad_rows() {
        let grid = ActionGrid::from_targets(1.0, vec![Target::new(0.0, 0.0)]);
        let mut row = [0.0; NUM_LABELS];
        row[0] = 0.5;
        assert!(matches!(HitTable::from_rows(grid.clone(), vec![row]), Err(Error::Unnormalized { .. })));
        row[1] = 0.5;
        assert!(HitTable::from_rows(grid, vec![row]).is_ok());
    }
}
