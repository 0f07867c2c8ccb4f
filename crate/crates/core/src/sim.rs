//! Monte Carlo rollouts of legs under fixed policies, sampling dart
//! outcomes from hit tables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::board::{OutcomeLabel, NUM_LABELS};
use crate::error::{Error, Result};
use crate::hits::HitTable;
use crate::leg::{Player, TurnPolicy};
use crate::ns::NsSolution;
use crate::par::Exec;
use crate::rules::{DartEvent, LegState};
use crate::turn::{self, NO_ACTION};

/// Legs per independently seeded stream; results do not depend on the
/// number of workers.
const CHUNK: usize = 1024;

/// Darts after which a single leg is abandoned as non-terminating.
const MAX_DARTS: u32 = 1_000_000;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

impl Estimate {
    fn from_sums(sum: f64, sum_sq: f64, n: usize) -> Self {
        let mean = sum / n as f64;
        let var = if n > 1 { (sum_sq - n as f64 * mean * mean).max(0.0) / (n - 1) as f64 } else { 0.0 };
        Estimate { mean, std_err: (var / n as f64).sqrt(), n }
    }

    /// Whether `value` is within `k` standard errors of the mean.
    pub fn agrees(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_err.max(f64::EPSILON)
    }
}

/// Inverse-CDF sampling of outcome labels per action.
#[derive(Debug, Clone)]
pub struct DartSampler {
    cumulative: Vec<f64>,
}

impl DartSampler {
    pub fn new(hits: &HitTable) -> Self {
        let mut cumulative = Vec::with_capacity(hits.raw().len());
        for a in 0..hits.len() {
            let mut acc = 0.0;
            for &p in hits.row(a) {
                acc += p;
                cumulative.push(acc);
            }
        }
        DartSampler { cumulative }
    }

    pub fn sample<R: Rng + ?Sized>(&self, action: usize, rng: &mut R) -> OutcomeLabel {
        let row = &self.cumulative[action * NUM_LABELS..(action + 1) * NUM_LABELS];
        let r = rng.random::<f64>() * row[NUM_LABELS - 1];
        let z = row.partition_point(|&c| c <= r).min(NUM_LABELS - 1);
        OutcomeLabel::from_index(z).expect("label index")
    }
}

fn run_chunks<F>(n: usize, seed: u64, exec: Exec, f: F) -> Result<Estimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync + Send,
{
    if n == 0 {
        return Err(Error::InvalidInput("at least one rollout is required".into()));
    }
    let chunks = n.div_ceil(CHUNK);
    let sums = exec.map_range(chunks, |c| -> Result<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let m = CHUNK.min(n - c * CHUNK);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..m {
            let x = f(&mut rng)?;
            s += x;
            s2 += x * x;
        }
        Ok((s, s2))
    });
    let (mut s, mut s2) = (0.0, 0.0);
    for r in sums {
        let (a, b) = r?;
        s += a;
        s2 += b;
    }
    Ok(Estimate::from_sums(s, s2, n))
}

/// Turns to finish from `start` under the non-strategic policy.
pub fn simulate_ns_turns(
    hits: &HitTable,
    sol: &NsSolution,
    start: u32,
    legs: usize,
    seed: u64,
    exec: Exec,
) -> Result<Estimate> {
    if !(2..=sol.start_score).contains(&start) {
        return Err(Error::InvalidInput(format!("start {start} is outside the solved range")));
    }
    let sampler = DartSampler::new(hits);
    run_chunks(legs, seed, exec, |rng| {
        let mut leg = LegState::new(start, 0)?;
        let mut turns = 1u32;
        for _ in 0..MAX_DARTS {
            let k = turn::slot(leg.i, leg.u).expect("live slot");
            let a = sol.policy[leg.scores[0] as usize][k];
            if a == NO_ACTION {
                return Err(undefined(leg));
            }
            let ev = leg.apply(sampler.sample(a as usize, rng))?;
            match ev {
                DartEvent::LegWon { .. } => return Ok(turns as f64),
                DartEvent::Continue => {}
                DartEvent::TurnEnd | DartEvent::Bust => {
                    // Single player: hand the turn straight back.
                    leg.to_throw = 0;
                    turns += 1;
                }
            }
        }
        Err(Error::InvalidInput(format!("leg from {start} did not finish within {MAX_DARTS} darts")))
    })
}

/// A's win indicator for legs from `(s_a, s_b)` with `starter` to throw.
#[allow(clippy::too_many_arguments)]
pub fn simulate_legs(
    policy_a: &dyn TurnPolicy,
    policy_b: &dyn TurnPolicy,
    hits_a: &HitTable,
    hits_b: &HitTable,
    scores: (u32, u32),
    starter: Player,
    legs: usize,
    seed: u64,
    exec: Exec,
) -> Result<Estimate> {
    let samplers = [DartSampler::new(hits_a), DartSampler::new(hits_b)];
    let policies = [policy_a, policy_b];
    run_chunks(legs, seed, exec, |rng| {
        let mut leg = LegState::new(2, starter.index())?;
        leg.scores = [scores.0, scores.1];
        for _ in 0..MAX_DARTS {
            let p = leg.to_throw;
            let k = turn::slot(leg.i, leg.u).expect("live slot");
            let a = policies[p].turn_actions(leg.scores[p], leg.scores[1 - p])[k];
            if a == NO_ACTION {
                return Err(undefined(leg));
            }
            if let DartEvent::LegWon { winner } = leg.apply(samplers[p].sample(a as usize, rng))? {
                return Ok(if winner == 0 { 1.0 } else { 0.0 });
            }
        }
        Err(Error::InvalidInput(format!("leg from {scores:?} did not finish within {MAX_DARTS} darts")))
    })
}

fn undefined(leg: LegState) -> Error {
    Error::PolicyUndefined(format!(
        "no action for player {} at scores {:?}, i={}, u={}",
        leg.to_throw, leg.scores, leg.i, leg.u
    ))
}
