//! Region-conditional Gaussian throwing models.
//!
//! A [`SkillModel`] partitions the target regions into parts, each with its
//! own 2x2 covariance; a throw aimed at `a` lands at `N2(a, Sigma_m)` where
//! `m` is the part containing the region `a` lies in. Targets outside every
//! part use the model's default part.

mod em;
mod integrate;
mod sample;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::board::{BoardGeometry, OutcomeLabel, Target};
use crate::error::{Error, Result};

pub use em::{fit_em, fit_skill_model, log_likelihood, AimDataset, AimRow, EmConfig, EmFit};
pub use integrate::{hit_distribution, Quadrature, TRUNCATION_SIGMAS};
pub use sample::simulate_throw;

pub const SKILL_FORMAT_VERSION: u32 = 1;

/// A symmetric positive definite 2x2 covariance in mm^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance {
    xx: f64,
    xy: f64,
    yy: f64,
}

impl Covariance {
    pub fn new(m: [[f64; 2]; 2]) -> Result<Self> {
        let sym = (m[0][1] - m[1][0]).abs() <= 1e-9 * (m[0][1].abs() + m[1][0].abs()).max(1.0);
        let c = Covariance { xx: m[0][0], xy: 0.5 * (m[0][1] + m[1][0]), yy: m[1][1] };
        if !sym || !c.is_spd() {
            return Err(Error::NotSpd(m));
        }
        Ok(c)
    }

    pub fn isotropic(sigma: f64) -> Result<Self> {
        Self::new([[sigma * sigma, 0.0], [0.0, sigma * sigma]])
    }

    fn is_spd(&self) -> bool {
        [self.xx, self.xy, self.yy].iter().all(|v| v.is_finite()) && self.xx > 0.0 && self.yy > 0.0 && self.det() > 0.0
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.xx, self.xy], [self.xy, self.yy]]
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// Eigenvalues, smallest first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = 0.5 * (self.xx + self.yy);
        let d = (0.25 * (self.xx - self.yy).powi(2) + self.xy * self.xy).sqrt();
        (tr - d, tr + d)
    }

    /// Lower Cholesky factor `[l11, l21, l22]`.
    pub fn cholesky(&self) -> [f64; 3] {
        let l11 = self.xx.sqrt();
        let l21 = self.xy / l11;
        let l22 = (self.yy - l21 * l21).sqrt();
        [l11, l21, l22]
    }

    pub fn frobenius(&self) -> f64 {
        (self.xx * self.xx + 2.0 * self.xy * self.xy + self.yy * self.yy).sqrt()
    }

    pub fn frobenius_distance(&self, other: &Covariance) -> f64 {
        ((self.xx - other.xx).powi(2) + 2.0 * (self.xy - other.xy).powi(2) + (self.yy - other.yy).powi(2)).sqrt()
    }

    pub(crate) fn density(&self) -> Density {
        Density::new(self)
    }
}

impl Serialize for Covariance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Covariance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = <[[f64; 2]; 2]>::deserialize(d)?;
        Covariance::new(m).map_err(serde::de::Error::custom)
    }
}

/// Precomputed bivariate normal density with zero mean.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Density {
    ixx: f64,
    ixy: f64,
    iyy: f64,
    norm: f64,
}

impl Density {
    fn new(c: &Covariance) -> Self {
        let det = c.det();
        Density {
            ixx: c.yy / det,
            ixy: -c.xy / det,
            iyy: c.xx / det,
            norm: 1.0 / (2.0 * std::f64::consts::PI * det.sqrt()),
        }
    }

    #[inline]
    pub(crate) fn mahalanobis2(&self, dx: f64, dy: f64) -> f64 {
        self.ixx * dx * dx + 2.0 * self.ixy * dx * dy + self.iyy * dy * dy
    }

    #[inline]
    pub(crate) fn at(&self, dx: f64, dy: f64) -> f64 {
        self.norm * (-0.5 * self.mahalanobis2(dx, dy)).exp()
    }
}

/// One component of a skill model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillPart {
    pub regions: Vec<OutcomeLabel>,
    pub sigma: Covariance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillModel {
    #[serde(default = "default_version")]
    pub format_version: u32,
    #[serde(default)]
    pub name: String,
    pub parts: Vec<SkillPart>,
    /// Part used for targets outside every part's regions.
    pub default_part: usize,
}

fn default_version() -> u32 {
    SKILL_FORMAT_VERSION
}

/// Target regions of the six-part model: T20, T19, T18, T17, DB, doubles.
pub fn standard_partition() -> Vec<Vec<OutcomeLabel>> {
    vec![
        vec![OutcomeLabel::treble(20)],
        vec![OutcomeLabel::treble(19)],
        vec![OutcomeLabel::treble(18)],
        vec![OutcomeLabel::treble(17)],
        vec![OutcomeLabel::DB],
        (1..=20).map(OutcomeLabel::double).collect(),
    ]
}

impl SkillModel {
    pub fn new(name: impl Into<String>, parts: Vec<SkillPart>, default_part: usize) -> Result<Self> {
        let model = SkillModel { format_version: SKILL_FORMAT_VERSION, name: name.into(), parts, default_part };
        model.validate()?;
        Ok(model)
    }

    /// One covariance everywhere.
    pub fn uniform(name: impl Into<String>, sigma: Covariance) -> Self {
        SkillModel {
            format_version: SKILL_FORMAT_VERSION,
            name: name.into(),
            parts: vec![SkillPart { regions: Vec::new(), sigma }],
            default_part: 0,
        }
    }

    /// The six-part model with the doubles part as default.
    pub fn standard(name: impl Into<String>, sigmas: [Covariance; 6]) -> Self {
        let parts =
            standard_partition().into_iter().zip(sigmas).map(|(regions, sigma)| SkillPart { regions, sigma }).collect();
        SkillModel { format_version: SKILL_FORMAT_VERSION, name: name.into(), parts, default_part: 5 }
    }

    /// A synthetic professional-level model with standard deviations of
    /// roughly 4 mm, mildly anisotropic. `scale` multiplies every covariance.
    pub fn synthetic_pro(name: impl Into<String>, scale: f64) -> Self {
        let m =
            |a: f64, b: f64, c: f64| Covariance::new([[a * scale, b * scale], [b * scale, c * scale]]).expect("SPD");
        Self::standard(
            name,
            [
                m(15.0, 1.5, 18.0),
                m(16.0, 1.0, 19.0),
                m(17.0, -1.0, 19.5),
                m(17.5, 0.5, 20.0),
                m(14.0, 0.5, 15.0),
                m(13.0, 0.0, 21.0),
            ],
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != SKILL_FORMAT_VERSION {
            return Err(Error::Version {
                kind: "skill model",
                found: self.format_version,
                expected: SKILL_FORMAT_VERSION,
            });
        }
        if self.parts.is_empty() || self.default_part >= self.parts.len() {
            return Err(Error::InvalidInput("skill model needs at least one part and a valid default part".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for part in &self.parts {
            for r in &part.regions {
                if r.is_miss() || !seen.insert(*r) {
                    return Err(Error::InvalidInput(format!("region {r} is repeated or not a scoring region")));
                }
            }
        }
        Ok(())
    }

    /// Index of the part governing throws aimed at `a`.
    pub fn part_for(&self, geom: &BoardGeometry, a: Target) -> usize {
        let label = geom.classify_target(a);
        self.parts.iter().position(|p| p.regions.contains(&label)).unwrap_or(self.default_part)
    }

    pub fn sigma_for(&self, geom: &BoardGeometry, a: Target) -> Covariance {
        self.parts[self.part_for(geom, a)].sigma
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: SkillModel = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("skill model serializes")
    }

    /// Stable content hash (hex SHA-256 of the canonical JSON).
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("serializes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_spd() {
        assert!(Covariance::new([[1.0, 2.0], [2.0, 1.0]]).is_err());
        assert!(Covariance::new([[1.0, 0.5], [0.4, 1.0]]).is_err());
        assert!(Covariance::new([[0.0, 0.0], [0.0, 1.0]]).is_err());
        assert!(Covariance::new([[9.0, 2.0], [2.0, 16.0]]).is_ok());
    }

    #[test]
    fn cholesky_reconstructs() {
        let c = Covariance::new([[9.0, 2.0], [2.0, 16.0]]).unwrap();
        let [a, b, d] = c.cholesky();
        assert!((a * a - 9.0).abs() < 1e-12);
        assert!((a * b - 2.0).abs() < 1e-12);
        assert!((b * b + d * d - 16.0).abs() < 1e-12);
        let (lo, hi) = c.eigenvalues();
        assert!((lo * hi - c.det()).abs() < 1e-9);
        assert!((lo + hi - 25.0).abs() < 1e-12);
    }

    #[test]
    fn selector_uses_regions_then_default() {
        let geom = BoardGeometry::default();
        let m = SkillModel::synthetic_pro("p", 1.0);
        let t20 = geom.region_center(OutcomeLabel::treble(20)).unwrap();
        assert_eq!(m.part_for(&geom, t20), 0);
        assert_eq!(m.part_for(&geom, Target::new(0.0, 0.0)), 4);
        let d3 = geom.region_center(OutcomeLabel::double(3)).unwrap();
        assert_eq!(m.part_for(&geom, d3), 5);
        let s10 = geom.region_center(OutcomeLabel::single(10)).unwrap();
        assert_eq!(m.part_for(&geom, s10), 5);
    }

    #[test]
    fn json_round_trip() {
        let m = SkillModel::synthetic_pro("pro", 1.1);
        let back = SkillModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.content_hash(), m.content_hash());
        let bad = m.to_json().replace("\"format_version\": 1", "\"format_version\": 7");
        assert!(matches!(SkillModel::from_json(&bad), Err(Error::Version { .. })));
    }
}
