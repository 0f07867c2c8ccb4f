use rand::Rng;
use rand_distr::StandardNormal;

use super::SkillModel;
use crate::board::{BoardGeometry, OutcomeLabel, Target};

/// Draw one landing point for a throw aimed at `a`, returning the point and
/// its outcome label.
pub fn simulate_throw<R: Rng + ?Sized>(
    geom: &BoardGeometry,
    skill: &SkillModel,
    a: Target,
    rng: &mut R,
) -> (Target, OutcomeLabel) {
    let [l11, l21, l22] = skill.sigma_for(geom, a).cholesky();
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    let p = Target::new(a.x + l11 * z1, a.y + l21 * z1 + l22 * z2);
    (p, geom.classify_target(p))
}
