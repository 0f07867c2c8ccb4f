use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A match of `legs = 2K + 1` legs, all of them played, with starters
/// alternating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchSpec {
    pub legs: u32,
    /// P(A wins a leg that A starts).
    pub p_a: f64,
    /// P(A wins a leg that B starts).
    pub p_b: f64,
    /// B starts the first leg instead of A.
    #[serde(default)]
    pub b_starts: bool,
}

impl MatchSpec {
    pub fn new(legs: u32, p_a: f64, p_b: f64) -> Self {
        MatchSpec { legs, p_a, p_b, b_starts: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.legs.is_multiple_of(2) || self.legs > 1001 {
            return Err(Error::InvalidInput(format!("legs must be odd and at most 1001, got {}", self.legs)));
        }
        for p in [self.p_a, self.p_b] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidInput(format!("leg probability {p} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Binomial pmf for `n` trials. Coefficients are computed for the lower
/// half and mirrored, so the pmf at `p = 0.5` is exactly symmetric.
fn binomial(n: u32, p: f64) -> Vec<f64> {
    let mut coef = vec![1.0; n as usize + 1];
    for j in 1..=n as usize / 2 {
        coef[j] = coef[j - 1] * (n as usize - j + 1) as f64 / j as f64;
        coef[n as usize - j] = coef[j];
    }
    (0..=n).map(|j| coef[j as usize] * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32)).collect()
}

/// Neumaier-compensated sum.
fn sum_compensated(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Probability that A wins the match: A starts `K + 1` legs and wins
/// `j` of them, B starts `K` and A needs at least `K + 1 - j` of those.
/// The `j = 0` term is zero and kept for uniformity.
pub fn match_win_prob(spec: &MatchSpec) -> Result<f64> {
    spec.validate()?;
    let k = (spec.legs - 1) / 2;
    if spec.p_a == spec.p_b {
        // Starters do not matter: A needs a majority of all legs.
        let pmf = binomial(spec.legs, spec.p_a);
        let upper = sum_compensated(pmf[k as usize + 1..].iter().rev().copied());
        let lower = sum_compensated(pmf[..=k as usize].iter().copied());
        return Ok(upper / (upper + lower));
    }
    let (own_starts, other_starts) = if spec.b_starts { (k, k + 1) } else { (k + 1, k) };
    let va = binomial(own_starts, spec.p_a);
    let vb = binomial(other_starts, spec.p_b);
    // tail[m] = P(V_B >= m)
    let mut tail = vec![0.0; vb.len() + 1];
    for m in (0..vb.len()).rev() {
        tail[m] = tail[m + 1] + vb[m];
    }
    let need = k + 1;
    let p = sum_compensated(va.iter().enumerate().map(|(j, &pj)| {
        let m = need.saturating_sub(j as u32) as usize;
        pj * tail.get(m).copied().unwrap_or(0.0)
    }));
    Ok(p.clamp(0.0, 1.0))
}

/// Match-level gain of one strategy over another, given each strategy's
/// leg probabilities `(p_a, p_b)`.
pub fn gain(star: (f64, f64), baseline: (f64, f64), legs: u32) -> Result<f64> {
    let p_star = match_win_prob(&MatchSpec::new(legs, star.0, star.1))?;
    let p_base = match_win_prob(&MatchSpec::new(legs, baseline.0, baseline.1))?;
    Ok(p_star - p_base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_leg_and_symmetry() {
        assert_eq!(match_win_prob(&MatchSpec::new(1, 0.37, 0.9)).unwrap(), 0.37);
        for n in [1, 3, 11, 101, 1001] {
            assert_eq!(match_win_prob(&MatchSpec::new(n, 0.5, 0.5)).unwrap(), 0.5);
        }
        assert!(match_win_prob(&MatchSpec::new(4, 0.5, 0.5)).is_err());
    }

    #[test]
    fn equal_strategies_have_no_gain() {
        for n in [1, 21, 31, 35] {
            assert_eq!(gain((0.6, 0.4), (0.6, 0.4), n).unwrap(), 0.0);
        }
    }
}
