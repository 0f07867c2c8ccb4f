use crate::error::{Error, Result};
use crate::eval::turn_kernel;
use crate::hits::HitTable;
use crate::leg::{BlockIndex, TurnPolicy};
use crate::ns::SolveConfig;
use crate::turn::{self, SelfLink, TurnContext, TurnEngine, NUM_SLOTS};

/// The opponent's turn, compiled to end-of-turn score distributions: for
/// each opponent score and each score of the player who just threw, the
/// probability of each opponent score after its turn (0 = the opponent has
/// won).
#[derive(Debug, Clone, PartialEq)]
pub struct OpponentTurnKernel {
    pub index: BlockIndex,
    /// Indexed by `index.of(context, opponent)`.
    rows: Vec<Vec<(u16, f64)>>,
}

impl OpponentTurnKernel {
    /// Kernel of a fixed opponent policy. `policy.turn_actions(own, opp)`
    /// is looked up with the opponent's score first.
    pub fn from_policy(hits: &HitTable, policy: &dyn TurnPolicy, start: u32) -> Result<Self> {
        let index = BlockIndex::new(start);
        let sparse = hits.sparse();
        let mut rows = vec![Vec::new(); index.len()];
        for ctx in 2..=start {
            for opp in 2..=start {
                let dist = turn_kernel(&sparse, opp, policy.turn_actions(opp, ctx))?;
                rows[index.of(ctx, opp)] =
                    dist.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(s, &p)| (s as u16, p)).collect();
            }
        }
        Ok(OpponentTurnKernel { index, rows })
    }

    /// An opponent whose score never changes.
    pub fn stationary(start: u32) -> Self {
        let index = BlockIndex::new(start);
        let mut rows = vec![Vec::new(); index.len()];
        for ctx in 2..=start {
            for opp in 2..=start {
                rows[index.of(ctx, opp)] = vec![(opp as u16, 1.0)];
            }
        }
        OpponentTurnKernel { index, rows }
    }

    pub fn row(&self, context: u32, opp: u32) -> &[(u16, f64)] {
        &self.rows[self.index.of(context, opp)]
    }

    pub fn validate(&self) -> Result<()> {
        for ctx in 2..=self.index.start() {
            for opp in 2..=self.index.start() {
                let row = self.row(ctx, opp);
                let sum: f64 = row.iter().map(|(_, p)| p).sum();
                let bad = row.iter().any(|&(s, p)| s == 1 || s as u32 > opp || !(p >= 0.0));
                if bad || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::Unnormalized { row: self.index.of(ctx, opp), sum });
                }
            }
        }
        Ok(())
    }
}

/// Values and actions of the thrower's best response, indexed by
/// `index.of(own, opp)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub index: BlockIndex,
    pub values: Vec<[f64; NUM_SLOTS]>,
    pub policy: Vec<[u32; NUM_SLOTS]>,
}

impl BestResponse {
    pub fn value(&self, own: u32, opp: u32, i: u8, u: u32) -> Option<f64> {
        let v = self.values[self.index.of(own, opp)][turn::slot(i, u)?];
        (!v.is_nan()).then_some(v)
    }
}

impl TurnPolicy for BestResponse {
    fn turn_actions(&self, own: u32, opp: u32) -> &[u32; NUM_SLOTS] {
        &self.policy[self.index.of(own, opp)]
    }
}

/// Best response of the thrower using `hits` against an opponent whose
/// turns follow `kernel`. Blocks are visited in ascending `own + opp`.
pub fn best_response(hits: &HitTable, kernel: &OpponentTurnKernel, cfg: &SolveConfig) -> Result<BestResponse> {
    cfg.validate()?;
    hits.validate()?;
    kernel.validate()?;
    let start = cfg.start_score;
    if kernel.index.start() < start {
        return Err(Error::InvalidInput("kernel covers fewer scores than requested".into()));
    }
    let index = BlockIndex::new(start);
    let sparse = hits.sparse();
    let mut values = vec![[f64::NAN; NUM_SLOTS]; index.len()];
    let mut policy = vec![[turn::NO_ACTION; NUM_SLOTS]; index.len()];
    for diag in index.diagonals() {
        let results = cfg.exec.map_slice_init(
            &diag,
            || (TurnEngine::new(&sparse), Vec::new()),
            |(eng, cont), &(s, o)| solve_block(eng, cont, &values, index, kernel, s, o, cfg),
        );
        for (&(s, o), (vals, pol)) in diag.iter().zip(results) {
            values[index.of(s, o)] = vals;
            policy[index.of(s, o)] = pol;
        }
    }
    Ok(BestResponse { index, values, policy })
}

#[allow(clippy::too_many_arguments)]
fn solve_block(
    eng: &mut TurnEngine<'_>,
    cont: &mut Vec<f64>,
    values: &[[f64; NUM_SLOTS]],
    index: BlockIndex,
    kernel: &OpponentTurnKernel,
    s: u32,
    o: u32,
    cfg: &SolveConfig,
) -> ([f64; NUM_SLOTS], [u32; NUM_SLOTS]) {
    let start_value = |own: u32, opp: u32| values[index.of(own, opp)][0];
    cont.clear();
    cont.resize(s as usize + 1, 0.0);
    for e in 2..s {
        cont[e as usize] =
            kernel.row(e, o).iter().filter(|(o2, _)| *o2 != 0).map(|&(o2, p)| p * start_value(e, o2 as u32)).sum();
    }
    let (mut b, mut kappa) = (0.0, 0.0);
    for &(o2, p) in kernel.row(s, o) {
        if o2 as u32 == o {
            kappa += p;
        } else if o2 != 0 {
            b += p * start_value(s, o2 as u32);
        }
    }
    let ctx = TurnContext { s, cont, win: 1.0, turn_reward: 0.0 };
    eng.prepare(&ctx);
    let guess = if s > 2 { start_value(s - 1, o) } else { 0.5 };
    let sol = eng.solve(SelfLink { b, kappa }, guess, cfg.max_policy_iters);
    (sol.values(), sol.table.policy)
}
