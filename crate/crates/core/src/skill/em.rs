//! Covariance estimation from censored outcome counts.
//!
//! Each observation is a count `n` of darts aimed at the centre of a target
//! region that landed somewhere in outcome region `z`. The E-step replaces
//! the unobserved landing points with importance samples drawn uniformly on
//! `z`'s region (clipped to a disc around the aim point); the M-step is the
//! weighted second moment about the aim point.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::integrate::{hit_distribution, Quadrature, Window, TRUNCATION_SIGMAS};
use super::{Covariance, SkillModel, SkillPart};
use crate::board::{BoardGeometry, OutcomeLabel, Target};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AimRow {
    pub target_region: OutcomeLabel,
    pub outcome: OutcomeLabel,
    pub count: u64,
}

/// Rows of `(target_region, outcome, count)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AimDataset {
    pub rows: Vec<AimRow>,
}

impl AimDataset {
    pub fn new(rows: Vec<AimRow>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.target_region.is_miss()) {
            return Err(Error::InvalidInput(format!(
                "target region must be a scoring region, got {}",
                r.target_region
            )));
        }
        Ok(AimDataset { rows })
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<AimRow>, _>>()?;
        Self::new(rows)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().map(|r| r.count).sum()
    }

    /// Rows aimed at one of `regions`.
    pub fn restricted_to(&self, regions: &[OutcomeLabel]) -> AimDataset {
        AimDataset { rows: self.rows.iter().filter(|r| regions.contains(&r.target_region)).copied().collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub m_samples: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub sigma0: Covariance,
    /// Record the observed-data log-likelihood after every iteration.
    pub track_likelihood: bool,
    pub quadrature: Quadrature,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            m_samples: 5000,
            max_iter: 100,
            rel_tol: 1e-6,
            seed: 0,
            sigma0: Covariance::isotropic(10.0).expect("SPD"),
            track_likelihood: false,
            quadrature: Quadrature::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmFit {
    pub sigma: Covariance,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood of the initial covariance followed by one entry per
    /// iteration; empty unless tracking was requested.
    pub log_likelihood: Vec<f64>,
}

/// Observed-data log-likelihood `sum n_i log P(z_i | a_i, sigma)`, with
/// `a_i` the centre of the target region. Returns negative infinity when
/// an observed outcome has probability zero.
pub fn log_likelihood(geom: &BoardGeometry, data: &AimDataset, sigma: &Covariance, quad: Quadrature) -> Result<f64> {
    let mut cache: HashMap<OutcomeLabel, [f64; 63]> = HashMap::new();
    let mut ll = 0.0;
    for r in data.rows.iter().filter(|r| r.count > 0) {
        let probs = match cache.get(&r.target_region) {
            Some(p) => *p,
            None => {
                let a = geom.region_center(r.target_region)?;
                let p = hit_distribution(geom, sigma, a, quad);
                cache.insert(r.target_region, p);
                p
            }
        };
        let p = probs[r.outcome.index()];
        if p <= 0.0 {
            log::warn!("outcome {} has zero probability from {}", r.outcome, r.target_region);
            return Ok(f64::NEG_INFINITY);
        }
        ll += r.count as f64 * p.ln();
    }
    Ok(ll)
}

/// Common random numbers for one observation: each sample is a pair of
/// uniforms mapped onto the current proposal region.
struct RowSamples {
    a: Target,
    outcome: OutcomeLabel,
    count: f64,
    uniforms: Vec<[f64; 2]>,
}

/// Fit one covariance to `data` by Monte Carlo EM.
///
/// The uniform points behind the importance samples (a randomly shifted
/// Halton set) are fixed per row, so the iteration is a deterministic map
/// and the relative-change stopping rule is meaningful. The proposal region for each row is the outcome region
/// intersected with a disc of `TRUNCATION_SIGMAS` standard deviations of the
/// current covariance around the aim point.
pub fn fit_em(geom: &BoardGeometry, data: &AimDataset, cfg: &EmConfig) -> Result<EmFit> {
    if cfg.m_samples == 0 {
        return Err(Error::InvalidInput("m_samples must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    for r in data.rows.iter().filter(|r| r.count > 0) {
        rows.push(RowSamples {
            a: geom.region_center(r.target_region)?,
            outcome: r.outcome,
            count: r.count as f64,
            uniforms: shifted_halton(cfg.m_samples, rng.random()),
        });
    }
    let n: f64 = rows.iter().map(|r| r.count).sum();
    if rows.is_empty() {
        return Err(Error::EmptyData);
    }

    let mut sigma = cfg.sigma0;
    let mut trace = Vec::new();
    if cfg.track_likelihood {
        trace.push(log_likelihood(geom, data, &sigma, cfg.quadrature)?);
    }
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let mut acc = [0.0; 3];
        for row in &rows {
            let m = e_step(geom, row, &sigma)?;
            for k in 0..3 {
                acc[k] += row.count * m[k];
            }
        }
        let next = Covariance::new([[acc[0] / n, acc[1] / n], [acc[1] / n, acc[2] / n]])?;
        let change = next.frobenius_distance(&sigma) / sigma.frobenius();
        sigma = next;
        if cfg.track_likelihood {
            trace.push(log_likelihood(geom, data, &sigma, cfg.quadrature)?);
        }
        if change < cfg.rel_tol {
            converged = true;
            break;
        }
    }
    Ok(EmFit { sigma, iterations, converged, log_likelihood: trace })
}

/// `m` points of the two-dimensional Halton sequence (bases 2 and 3) under a
/// random toroidal shift: uniform marginals with far lower discrepancy than
/// independent draws.
fn shifted_halton(m: usize, shift: [f64; 2]) -> Vec<[f64; 2]> {
    fn radical_inverse(mut i: u64, base: u64) -> f64 {
        let (mut f, mut x) = (1.0, 0.0);
        while i > 0 {
            f /= base as f64;
            x += f * (i % base) as f64;
            i /= base;
        }
        x
    }
    (1..=m as u64)
        .map(|i| [(radical_inverse(i, 2) + shift[0]).fract(), (radical_inverse(i, 3) + shift[1]).fract()])
        .collect()
}

/// Self-normalised estimate of `E[d d^T | landing in R(z)]`, `d = x - a`,
/// returned as `[xx, xy, yy]`.
fn e_step(geom: &BoardGeometry, row: &RowSamples, sigma: &Covariance) -> Result<[f64; 3]> {
    let boxes = geom.region_boxes(row.outcome);
    let (_, hi) = sigma.eigenvalues();
    let mut radius = TRUNCATION_SIGMAS * hi.sqrt();
    let mut pieces = Vec::new();
    // Grow the window until it reaches the outcome region.
    for _ in 0..12 {
        pieces.clear();
        let w = Window::around(row.a, radius);
        for b in &boxes {
            w.clip(b, &mut pieces);
        }
        if !pieces.is_empty() {
            break;
        }
        radius *= 2.0;
    }
    let areas: Vec<f64> = pieces.iter().map(|[r0, r1, t0, t1]| 0.5 * (r1 * r1 - r0 * r0) * (t1 - t0)).collect();
    let total: f64 = areas.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateRegion(row.outcome.to_string()));
    }

    let dens = sigma.density();
    let mut pts = Vec::with_capacity(row.uniforms.len());
    let mut qmin = f64::INFINITY;
    for &[u0, u2] in &row.uniforms {
        let mut pick = u0 * total;
        let mut k = 0;
        while k + 1 < pieces.len() && pick >= areas[k] {
            pick -= areas[k];
            k += 1;
        }
        // The position within the chosen piece's share of `u0` is itself
        // uniform and drives the radius.
        let u1 = (pick / areas[k]).clamp(0.0, 1.0);
        let [r0, r1, t0, t1] = pieces[k];
        let r = (u1 * (r1 * r1 - r0 * r0) + r0 * r0).sqrt();
        let t = t0 + u2 * (t1 - t0);
        let (s, c) = t.sin_cos();
        let (dx, dy) = (r * c - row.a.x, r * s - row.a.y);
        let q = dens.mahalanobis2(dx, dy);
        qmin = qmin.min(q);
        pts.push((dx, dy, q));
    }
    let mut wsum = 0.0;
    let mut m = [0.0; 3];
    for (dx, dy, q) in pts {
        let w = (-0.5 * (q - qmin)).exp();
        wsum += w;
        m[0] += w * dx * dx;
        m[1] += w * dx * dy;
        m[2] += w * dy * dy;
    }
    Ok([m[0] / wsum, m[1] / wsum, m[2] / wsum])
}

/// Fit every part of `template` independently. Rows aimed at regions
/// outside all parts are fitted with the default part, matching how the
/// model assigns covariances to such targets.
pub fn fit_skill_model(
    geom: &BoardGeometry,
    data: &AimDataset,
    template: &SkillModel,
    cfg: &EmConfig,
) -> Result<SkillModel> {
    let assigned: Vec<usize> = data
        .rows
        .iter()
        .map(|r| {
            template.parts.iter().position(|p| p.regions.contains(&r.target_region)).unwrap_or(template.default_part)
        })
        .collect();
    let fit_part = |k: usize| -> Result<SkillPart> {
        let rows = data.rows.iter().zip(&assigned).filter(|(_, &p)| p == k).map(|(r, _)| *r).collect();
        let part_cfg = EmConfig { seed: cfg.seed.wrapping_add(k as u64), ..*cfg };
        let fit = fit_em(geom, &AimDataset { rows }, &part_cfg)?;
        Ok(SkillPart { regions: template.parts[k].regions.clone(), sigma: fit.sigma })
    };
    let parts = crate::par::Exec::default()
        .map_range(template.parts.len(), fit_part)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    SkillModel::new(template.name.clone(), parts, template.default_part)
}
