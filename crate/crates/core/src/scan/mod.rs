//! Grid sweeps over the Stirling domain and the verification suites.

mod suite;

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{DomainKind, Theta};
use crate::stirling::{classify, degeneracy_polynomial, det_closed_unchecked, surface_v_a, CLASSIFY_TOL};

pub use suite::{run_suite, CheckRecord, SuiteReport, SUITES};

/// A box `[a₀,a₁]×[b₀,b₁]×[c₀,c₁]` sampled at `resolution[i]` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    pub resolution: [usize; 3],
}

impl Region {
    pub fn new(lower: [f64; 3], upper: [f64; 3], resolution: [usize; 3]) -> Result<Self> {
        for i in 0..3 {
            let (lo, hi) = (lower[i], upper[i]);
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidRegion(format!("axis {i}: need finite lo < hi, got [{lo}, {hi}]")));
            }
            if lo <= 1.0 {
                return Err(Error::InvalidRegion(format!("axis {i}: lower bound {lo} must exceed 1")));
            }
            if resolution[i] < 2 {
                return Err(Error::InvalidRegion(format!("axis {i}: resolution {} must be at least 2", resolution[i])));
            }
        }
        Ok(Region { lower, upper, resolution })
    }

    /// Same bounds, `n` nodes on every axis.
    pub fn with_resolution(self, n: usize) -> Result<Self> {
        Region::new(self.lower, self.upper, [n; 3])
    }

    pub fn node(&self, idx: [usize; 3]) -> Theta {
        let coord = |i: usize| {
            let n = self.resolution[i] - 1;
            if idx[i] == n {
                self.upper[i]
            } else {
                self.lower[i] + (self.upper[i] - self.lower[i]) * idx[i] as f64 / n as f64
            }
        };
        Theta { a: coord(0), b: coord(1), c: coord(2) }
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.iter().map(|n| n - 1).product()
    }

    fn cell_index(&self, flat: usize) -> [usize; 3] {
        let nb = self.resolution[1] - 1;
        let nc = self.resolution[2] - 1;
        [flat / (nb * nc), (flat / nc) % nb, flat % nc]
    }
}

/// Parses `a0:a1,b0:b1,c0:c1`; the resolution is set separately.
impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let axes: Vec<&str> = s.split(',').collect();
        if axes.len() != 3 {
            return Err(Error::InvalidRegion(format!("expected three comma-separated ranges, got {s:?}")));
        }
        let mut lower = [0.0; 3];
        let mut upper = [0.0; 3];
        for (i, axis) in axes.iter().enumerate() {
            let (lo, hi) = axis
                .split_once(':')
                .ok_or_else(|| Error::InvalidRegion(format!("range {axis:?} is not lo:hi")))?;
            let parse = |v: &str| {
                v.trim().parse::<f64>().map_err(|_| Error::InvalidRegion(format!("{v:?} is not a number")))
            };
            lower[i] = parse(lo)?;
            upper[i] = parse(hi)?;
        }
        Region::new(lower, upper, [2; 3])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlaggedCell {
    pub index: [usize; 3],
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    /// The degeneracy polynomial changes sign across the cell's corners.
    pub sign_change: bool,
    /// Smallest `|det G|` over corners and midpoint.
    pub min_abs_det: f64,
    /// A representative point of the degeneracy locus inside the cell.
    pub point: Theta,
    pub label: DomainKind,
}

fn bisect_edge(p: Theta, q: Theta) -> Theta {
    let (mut lo, mut hi) = (p.to_array(), q.to_array());
    let f_lo = degeneracy_polynomial(p);
    for _ in 0..80 {
        let mid = [0, 1, 2].map(|i| 0.5 * (lo[i] + hi[i]));
        let f_mid = degeneracy_polynomial(Theta::from_array(mid));
        if f_mid == 0.0 {
            return Theta::from_array(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Theta::from_array([0, 1, 2].map(|i| 0.5 * (lo[i] + hi[i])))
}

const EDGES: [(usize, usize); 12] =
    [(0, 1), (2, 3), (4, 5), (6, 7), (0, 2), (1, 3), (4, 6), (5, 7), (0, 4), (1, 5), (2, 6), (3, 7)];

fn inspect_cell(region: &Region, idx: [usize; 3], tol: f64) -> Option<FlaggedCell> {
    let corners: [Theta; 8] = std::array::from_fn(|k| {
        region.node([idx[0] + (k >> 2 & 1), idx[1] + (k >> 1 & 1), idx[2] + (k & 1)])
    });
    let lower = corners[0].to_array();
    let upper = corners[7].to_array();
    let mid = Theta::from_array([0, 1, 2].map(|i| 0.5 * (lower[i] + upper[i])));

    // det has the sign of -poly on the domain, since its denominator is positive
    let poly = corners.map(degeneracy_polynomial);
    let sign_change = poly.iter().any(|&p| p > 0.0) && poly.iter().any(|&p| p < 0.0);
    let mut probes: Vec<Theta> = corners.to_vec();
    probes.push(mid);
    let (near, min_abs_det) = probes
        .iter()
        .map(|&t| (t, det_closed_unchecked(t).abs()))
        .fold((mid, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    if !sign_change && min_abs_det >= tol {
        return None;
    }

    let contains_d = (lower[1]..=upper[1]).contains(&1.5) && (lower[2]..=upper[2]).contains(&1.5);
    let point = if contains_d {
        Theta { a: mid.a, b: 1.5, c: 1.5 }
    } else {
        let root = if sign_change {
            let &(i, j) = EDGES
                .iter()
                .find(|&&(i, j)| (poly[i] > 0.0) != (poly[j] > 0.0) || poly[i] == 0.0 || poly[j] == 0.0)
                .expect("a sign change has a crossing edge");
            if poly[i] == 0.0 {
                corners[i]
            } else if poly[j] == 0.0 {
                corners[j]
            } else {
                bisect_edge(corners[i], corners[j])
            }
        } else {
            near
        };
        match surface_v_a(root.b, root.c) {
            Some(a) if a.is_finite() && a > 1.0 => Theta { a, ..root },
            _ => root,
        }
    };
    let label = classify(point, CLASSIFY_TOL).kind;
    Some(FlaggedCell { index: idx, lower, upper, sign_change, min_abs_det, point, label })
}

/// Cells of `region` where the Stirling metric degenerates: the degeneracy
/// polynomial changes sign across the corners, or `|det G| < tol` at a
/// corner or the midpoint. Ordered lexicographically by cell index.
pub fn scan_degeneracy(region: &Region, tol: f64) -> Result<Vec<FlaggedCell>> {
    let region = Region::new(region.lower, region.upper, region.resolution)?;
    if !(tol >= 0.0) {
        return Err(Error::InvalidRegion(format!("tolerance {tol} must be non-negative")));
    }
    Ok((0..region.cell_count())
        .into_par_iter()
        .filter_map(|flat| inspect_cell(&region, region.cell_index(flat), tol))
        .collect())
}

/// [`scan_degeneracy`] on a dedicated pool of `threads` workers.
pub fn scan_degeneracy_with_threads(region: &Region, tol: f64, threads: usize) -> Result<Vec<FlaggedCell>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("cannot build thread pool: {e}")))?;
    pool.install(|| scan_degeneracy(region, tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(lo: f64, hi: f64, n: usize) -> Region {
        Region::new([lo; 3], [hi; 3], [n; 3]).unwrap()
    }

    #[test]
    fn flags_v_through_333() {
        let cells = scan_degeneracy(&cube(2.9, 3.1, 8), 1e-9).unwrap();
        assert!(!cells.is_empty());
        let target = [3.0; 3];
        let hit = cells.iter().find(|c| (0..3).all(|i| c.lower[i] <= target[i] && target[i] <= c.upper[i]));
        let hit = hit.expect("cell around (3,3,3) flagged");
        assert_eq!(hit.label, DomainKind::OnV);
        assert!(hit.sign_change);
        assert!(cells.iter().all(|c| c.label == DomainKind::OnV));
    }

    #[test]
    fn quiet_patch_flags_nothing() {
        let r = Region::new([2.0, 1.9, 2.9], [4.0, 2.1, 3.1], [8; 3]).unwrap();
        assert!(scan_degeneracy(&r, 1e-9).unwrap().is_empty());
    }

    #[test]
    fn line_d_is_labelled() {
        let r = Region::new([2.0, 1.4, 1.4], [3.0, 1.6, 1.6], [5; 3]).unwrap();
        let cells = scan_degeneracy(&r, 1e-9).unwrap();
        assert!(cells.iter().any(|c| c.label == DomainKind::OnD));
        for c in cells.iter().filter(|c| c.label == DomainKind::OnD) {
            assert!(c.lower[1] <= 1.5 && 1.5 <= c.upper[1]);
            assert!(c.lower[2] <= 1.5 && 1.5 <= c.upper[2]);
        }
    }

    #[test]
    fn ordered_and_thread_independent() {
        let r = Region::new([1.2, 1.2, 1.2], [5.0, 5.0, 5.0], [13, 11, 9]).unwrap();
        let serial = scan_degeneracy_with_threads(&r, 1e-9, 1).unwrap();
        assert!(!serial.is_empty());
        for n in [2, 3, 8] {
            assert_eq!(scan_degeneracy_with_threads(&r, 1e-9, n).unwrap(), serial);
        }
        assert!(serial.windows(2).all(|w| w[0].index < w[1].index));
    }

    #[test]
    fn region_parsing_and_validation() {
        let r: Region = "2.9:3.1,1.9:2.1,2:4".parse().unwrap();
        assert_eq!(r.lower, [2.9, 1.9, 2.0]);
        assert_eq!(r.upper, [3.1, 2.1, 4.0]);
        assert!("2:3,2:3".parse::<Region>().is_err());
        assert!("2:3,2:3,x:4".parse::<Region>().is_err());
        assert!("3:2,2:3,2:3".parse::<Region>().is_err());
        assert!("0.5:2,2:3,2:3".parse::<Region>().is_err());
        assert!(Region::new([2.0; 3], [3.0; 3], [1, 2, 2]).is_err());
        assert_eq!(r.with_resolution(4).unwrap().cell_count(), 27);
        assert_eq!(r.with_resolution(4).unwrap().node([3, 3, 3]).to_array(), [3.1, 2.1, 4.0]);
    }

    #[test]
    fn flagged_points_lie_on_the_locus() {
        let cells = scan_degeneracy(&cube(1.3, 4.0, 10), 1e-9).unwrap();
        for c in cells.iter().filter(|c| c.label == DomainKind::OnV) {
            let p = c.point;
            assert!(degeneracy_polynomial(p).abs() <= 1e-9 * (1.0 + p.a * p.b * p.c), "{p:?}");
        }
    }
}
