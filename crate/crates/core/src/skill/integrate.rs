//! Region probabilities under a bivariate normal.
//!
//! Each region is an annular sector (or two), so integration runs on a polar
//! mesh aligned with the wires: every panel lies inside exactly one region,
//! and 2x2 Gauss-Legendre points per panel give errors far below those of a
//! Cartesian midpoint rule whose cells straddle wires. Integration is
//! restricted to a disc of `TRUNCATION_SIGMAS` standard deviations around the
//! aim point; the mass outside it (below 1e-17) and the area off the board
//! are assigned to `MISS`.

use std::f64::consts::TAU;

use super::{Covariance, Density};
use crate::board::{BoardGeometry, OutcomeLabel, PolarBox, Target, NUM_LABELS};

/// Truncation radius in units of the largest standard deviation.
pub const TRUNCATION_SIGMAS: f64 = 9.0;

/// Mesh resolution for region integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    /// Largest panel edge in mm. The effective edge is further capped at
    /// a quarter of the smallest standard deviation.
    pub max_panel: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { max_panel: 1.0 }
    }
}

impl Quadrature {
    pub fn new(max_panel: f64) -> Self {
        Quadrature { max_panel }
    }

    pub(crate) fn panel(&self, sigma: &Covariance) -> f64 {
        let (lo, _) = sigma.eigenvalues();
        self.max_panel.min(0.25 * lo.sqrt())
    }
}

/// A polar window around an aim point: `r in [r0, r1]`, and when `full` is
/// false, `theta in [t0, t1]` (unwrapped, width below pi).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Window {
    r0: f64,
    r1: f64,
    full: bool,
    t0: f64,
    t1: f64,
}

impl Window {
    pub(crate) fn around(a: Target, radius: f64) -> Self {
        let rho = a.radius();
        if rho <= radius {
            Window { r0: 0.0, r1: rho + radius, full: true, t0: 0.0, t1: TAU }
        } else {
            let phi = a.y.atan2(a.x);
            let d = (radius / rho).asin();
            Window { r0: rho - radius, r1: rho + radius, full: false, t0: phi - d, t1: phi + d }
        }
    }

    /// Pieces `(r0, r1, t0, t1)` of `b` inside the window.
    pub(crate) fn clip(&self, b: &PolarBox, out: &mut Vec<[f64; 4]>) {
        let r0 = b.r0.max(self.r0);
        let r1 = b.r1.min(self.r1);
        if r0 >= r1 {
            return;
        }
        if self.full {
            out.push([r0, r1, b.t0, b.t1]);
        } else if b.is_full_ring() {
            out.push([r0, r1, self.t0, self.t1]);
        } else {
            for k in -1..=1 {
                let shift = k as f64 * TAU;
                let t0 = b.t0.max(self.t0 + shift);
                let t1 = b.t1.min(self.t1 + shift);
                if t0 < t1 {
                    out.push([r0, r1, t0, t1]);
                }
            }
        }
    }
}

const GL: f64 = 0.577_350_269_189_625_8;

/// Integral of the density centred at `a` over one annular sector piece.
pub(crate) fn integrate_piece(dens: &Density, a: Target, p: [f64; 4], h: f64) -> f64 {
    let [r0, r1, t0, t1] = p;
    let nr = ((r1 - r0) / h).ceil().max(1.0) as usize;
    let dr = (r1 - r0) / nr as f64;
    let mut total = 0.0;
    for i in 0..nr {
        let rm = r0 + (i as f64 + 0.5) * dr;
        let rs = [rm - 0.5 * dr * GL, rm + 0.5 * dr * GL];
        let nt = (rs[1] * (t1 - t0) / h).ceil().max(1.0) as usize;
        let dt = (t1 - t0) / nt as f64;
        let w = 0.25 * dr * dt;
        let mut acc = 0.0;
        for j in 0..nt {
            let tm = t0 + (j as f64 + 0.5) * dt;
            for t in [tm - 0.5 * dt * GL, tm + 0.5 * dt * GL] {
                let (s, c) = t.sin_cos();
                for &r in &rs {
                    acc += r * dens.at(r * c - a.x, r * s - a.y);
                }
            }
        }
        total += w * acc;
    }
    total
}

/// Probability of each outcome label, indexed by `OutcomeLabel::index`,
/// for a throw aimed at `a` with landing covariance `sigma`. Rows sum to one.
pub fn hit_distribution(geom: &BoardGeometry, sigma: &Covariance, a: Target, quad: Quadrature) -> [f64; NUM_LABELS] {
    let dens = sigma.density();
    let (_, hi) = sigma.eigenvalues();
    let window = Window::around(a, TRUNCATION_SIGMAS * hi.sqrt());
    let h = quad.panel(sigma);
    let mut out = [0.0; NUM_LABELS];
    let mut pieces = Vec::with_capacity(4);
    for b in geom.board_boxes() {
        pieces.clear();
        window.clip(&b, &mut pieces);
        let idx = b.label.index();
        for &p in &pieces {
            out[idx] += integrate_piece(&dens, a, p, h);
        }
    }
    let on_board: f64 = out.iter().sum();
    let miss = OutcomeLabel::MISS.index();
    if on_board <= 1.0 {
        out[miss] = 1.0 - on_board;
    } else {
        for v in out.iter_mut() {
            *v /= on_board;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn erf_disc_mass(r: f64, s: f64) -> f64 {
        1.0 - (-(r * r) / (2.0 * s * s)).exp()
    }

    #[test]
    fn isotropic_bull_mass_matches_closed_form() {
        let geom = BoardGeometry::default();
        for s in [2.0, 5.0, 12.0] {
            let c = Covariance::isotropic(s).unwrap();
            let p = hit_distribution(&geom, &c, Target::new(0.0, 0.0), Quadrature::default());
            let db = p[OutcomeLabel::DB.index()];
            let sb = p[OutcomeLabel::SB.index()];
            assert!((db - erf_disc_mass(6.35, s)).abs() < 1e-5, "s={s}: {db}");
            assert!((db + sb - erf_disc_mass(15.9, s)).abs() < 1e-5);
        }
    }

    #[test]
    fn rows_sum_to_one_off_center() {
        let geom = BoardGeometry::default();
        let c = Covariance::new([[20.0, 3.0], [3.0, 14.0]]).unwrap();
        for t in [Target::new(0.0, 103.0), Target::new(120.0, -100.0), Target::new(0.0, 169.0)] {
            let p = hit_distribution(&geom, &c, t, Quadrature::default());
            let s: f64 = p.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn far_from_wires_is_nearly_certain() {
        let geom = BoardGeometry::default();
        let c = Covariance::isotropic(0.05).unwrap();
        let t = geom.region_center(OutcomeLabel::treble(19)).unwrap();
        let p = hit_distribution(&geom, &c, t, Quadrature::default());
        assert!(p[OutcomeLabel::treble(19).index()] > 1.0 - 1e-12);
    }
}
