//! Detection statistics computed from strengths alone: every probability
//! here is a ratio of `|Gamma|^2` sums, independent of any interpretation.

use crate::error::{Error, Result};
use crate::interp::GlobalInterpretation;
use crate::lattice::{Domain, Site};
use crate::tapestry::CausalTapestry;

/// A detection region: an explicit site set or an axis-aligned site box.
#[derive(Clone, Debug)]
pub enum Region {
    Sites(std::collections::BTreeSet<Site>),
    SiteBox { min: Vec<i64>, max: Vec<i64> },
}

impl Region {
    pub fn from_sites<I: IntoIterator<Item = Site>>(sites: I) -> Self {
        Region::Sites(sites.into_iter().collect())
    }

    pub fn contains(&self, site: &Site) -> bool {
        match self {
            Region::Sites(set) => set.contains(site),
            Region::SiteBox { min, max } => {
                site.d() == min.len()
                    && site
                        .coords()
                        .iter()
                        .enumerate()
                        .all(|(ax, &c)| c >= min[ax] && c <= max[ax])
            }
        }
    }

    /// Regions must lie inside the configured domain.
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        match self {
            Region::Sites(set) => {
                for s in set {
                    if !domain.contains(s) {
                        return Err(Error::Parameter(format!("region site {s} outside domain")));
                    }
                }
            }
            Region::SiteBox { min, max } => {
                if min.len() != domain.d() || max.len() != domain.d() {
                    return Err(Error::DimensionMismatch { expected: domain.d(), got: min.len() });
                }
                for ax in 0..domain.d() {
                    if min[ax] < domain.min(ax) || max[ax] > domain.max(ax) {
                        return Err(Error::Parameter("region box outside domain".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `sum_{site in region} |Gamma|^2 / sum |Gamma|^2`. Additive over disjoint
/// regions, 1 on the whole domain, invariant under a global phase.
pub fn detection_probability(t: &CausalTapestry, region: &Region) -> Result<f64> {
    let total: f64 = t.informons().iter().map(|n| n.strength.norm_sqr()).sum();
    if total <= 0.0 {
        return Err(Error::UndefinedProbability);
    }
    let inside: f64 = t
        .informons()
        .iter()
        .filter(|n| region.contains(&n.point.site))
        .map(|n| n.strength.norm_sqr())
        .sum();
    Ok(inside / total)
}

/// Composite Simpson integration of `f` over `[lo, hi]` with `m` even
/// subintervals per axis, peeling dimensions recursively.
fn simpson_nd(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], m: usize) -> f64 {
    assert!(m >= 2 && m.is_multiple_of(2), "Simpson needs an even subinterval count");
    fn go(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], m: usize, point: &mut Vec<f64>) -> f64 {
        let axis = point.len();
        let h = (hi[axis] - lo[axis]) / m as f64;
        let mut acc = 0.0;
        for i in 0..=m {
            let w = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            point.push(lo[axis] + i as f64 * h);
            let inner = if point.len() == lo.len() {
                f(point)
            } else {
                go(f, lo, hi, m, point)
            };
            point.pop();
            acc += w * inner;
        }
        acc * h / 3.0
    }
    go(f, lo, hi, m, &mut Vec::with_capacity(lo.len()))
}

/// Per-region probabilities from quadrature of `|Phi|^2` over the regions'
/// real-space boxes (each site owns the cell `site*l_p +/- l_p/2`),
/// normalized across the given regions.
pub fn region_quadrature_probabilities(
    interp: &GlobalInterpretation,
    regions: &[Region],
    subdivisions_per_cell: usize,
) -> Result<Vec<f64>> {
    let l_p = interp.l_p;
    let mut masses = Vec::with_capacity(regions.len());
    for region in regions {
        let (min, max) = match region {
            Region::SiteBox { min, max } => (min.clone(), max.clone()),
            Region::Sites(_) => {
                return Err(Error::Parameter(
                    "quadrature needs box regions (contiguous cells)".into(),
                ))
            }
        };
        let lo: Vec<f64> = min.iter().map(|&c| (c as f64 - 0.5) * l_p).collect();
        let hi: Vec<f64> = max.iter().map(|&c| (c as f64 + 0.5) * l_p).collect();
        let cells = max
            .iter()
            .zip(&min)
            .map(|(a, b)| (a - b + 1) as usize)
            .max()
            .unwrap_or(1);
        let mut m = cells * subdivisions_per_cell;
        if m % 2 == 1 {
            m += 1;
        }
        let density = |z: &[f64]| interp.eval(z).map(|v| v.norm_sqr()).unwrap_or(0.0);
        masses.push(simpson_nd(&density, &lo, &hi, m.max(2)));
    }
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return Err(Error::UndefinedProbability);
    }
    Ok(masses.into_iter().map(|m| m / total).collect())
}

/// Consistency report: per-site `|Gamma|^2 l_p^d` against the quadrature of
/// `|Phi|^2` over that site's cell. The deviation is bounded by the sinc
/// tail mass escaping each single cell.
#[derive(Clone, Debug)]
pub struct CellReport {
    pub rows: Vec<(Site, f64, f64)>,
    pub max_rel_deviation: f64,
}

pub fn empirical_vs_interpretation(
    t: &CausalTapestry,
    interp: &GlobalInterpretation,
    subdivisions_per_cell: usize,
) -> Result<CellReport> {
    if t.is_empty() {
        return Err(Error::UndefinedProbability);
    }
    let l_p = interp.l_p;
    let cell_volume = l_p.powi(interp.d as i32);
    let mut rows = Vec::with_capacity(t.len());
    let mut max_rel: f64 = 0.0;
    let mut m = subdivisions_per_cell.max(2);
    if m % 2 == 1 {
        m += 1;
    }
    for n in t.informons() {
        let lo: Vec<f64> = n.point.site.coords().iter().map(|&c| (c as f64 - 0.5) * l_p).collect();
        let hi: Vec<f64> = n.point.site.coords().iter().map(|&c| (c as f64 + 0.5) * l_p).collect();
        let density = |z: &[f64]| interp.eval(z).map(|v| v.norm_sqr()).unwrap_or(0.0);
        let quad = simpson_nd(&density, &lo, &hi, m);
        let emp = n.strength.norm_sqr() * cell_volume;
        let rel = (quad - emp).abs() / emp.abs().max(1e-300);
        max_rel = max_rel.max(rel);
        rows.push((n.point.site, emp, quad));
    }
    Ok(CellReport { rows, max_rel_deviation: max_rel })
}


#[cfg(test)]
mod cell_report_tests {
    use super::*;
    use crate::interp::interpret;
    use crate::lattice::{LatticeParams, ManifoldPoint};
    use crate::tapestry::{no_properties, Informon, InformonId, TapestryBuilder};
    use num_complex::Complex64;

    #[test]
    fn well_separated_informons_stay_within_the_single_cell_bound() {
        let params = LatticeParams::new(1, 1.0, 1.0, 1.0).unwrap();
        let mut b = TapestryBuilder::new(0, "t");
        for (i, site) in [-40i64, 40].iter().enumerate() {
            b.push(Informon::new(
                InformonId(i as u64),
                ManifoldPoint::new(0, Site::new(&[*site])),
                Complex64::new(1.0, 0.0),
                no_properties(),
            ));
        }
        let t = b.seal().unwrap();
        let phi = interpret(&t, &params);
        let report = empirical_vs_interpretation(&t, &phi, 16).unwrap();
        // Same tail bound as a lone kernel: the partners are 80 cells away.
        assert!(report.max_rel_deviation < 0.25, "dev {}", report.max_rel_deviation);
    }

    #[test]
    fn empty_tapestry_report_is_an_error() {
        let params = LatticeParams::new(1, 1.0, 1.0, 1.0).unwrap();
        let t = CausalTapestry::empty(0, "t");
        let phi = interpret(&t, &params);
        assert!(empirical_vs_interpretation(&t, &phi, 8).is_err());
    }
}
