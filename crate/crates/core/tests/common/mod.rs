#![allow(dead_code)]

use darts_core::board::NUM_LABELS;
use darts_core::skill::Quadrature;
use darts_core::{ActionGrid, BoardGeometry, Exec, HitTable, OutcomeLabel, SkillModel, Target};

pub fn pro_hits(cell: f64, scale: f64) -> HitTable {
    let geom = BoardGeometry::default();
    let grid = geom.make_grid(cell).unwrap();
    HitTable::build(&geom, &SkillModel::synthetic_pro("pro", scale), &grid, Quadrature::default(), Exec::default())
}

/// One action that hits D1 with probability `q` and misses otherwise.
pub fn toy_d1(q: f64) -> HitTable {
    let grid = ActionGrid::from_targets(1.0, vec![Target::new(0.0, 0.0)]);
    let mut row = [0.0; NUM_LABELS];
    row[OutcomeLabel::double(1).index()] = q;
    row[OutcomeLabel::MISS.index()] = 1.0 - q;
    HitTable::from_rows(grid, vec![row]).unwrap()
}

pub fn always_miss() -> HitTable {
    toy_d1(0.0)
}
