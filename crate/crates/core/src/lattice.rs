//! Integer lattice embedding of the causal manifold.
//!
//! Points carry integer ticks and integer site coordinates; the real
//! embedding `(tick * tau, site * l_p)` is reconstructed on demand so that
//! identity comparisons never touch floating point.

use crate::error::{Error, Result};

/// Spatial site on the integer lattice. Up to three dimensions; unused
/// coordinates stay zero so `Site` can be `Copy`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Site {
    coords: [i64; 3],
    d: u8,
}

impl Site {
    pub fn new(coords: &[i64]) -> Self {
        assert!((1..=3).contains(&coords.len()), "d must be 1, 2 or 3");
        let mut c = [0i64; 3];
        c[..coords.len()].copy_from_slice(coords);
        Site { coords: c, d: coords.len() as u8 }
    }

    pub fn d(&self) -> usize {
        self.d as usize
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.d as usize]
    }

    /// Squared integer Euclidean distance to another site.
    pub fn dist_sq(&self, other: &Site) -> i64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn real(&self, l_p: f64) -> Vec<f64> {
        self.coords().iter().map(|&c| c as f64 * l_p).collect()
    }
}

impl std::fmt::Display for Site {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for c in self.coords() {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
            first = false;
        }
        Ok(())
    }
}

/// Space-time point: integer tick plus lattice site.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ManifoldPoint {
    pub tick: i64,
    pub site: Site,
}

impl ManifoldPoint {
    pub fn new(tick: i64, site: Site) -> Self {
        ManifoldPoint { tick, site }
    }

    /// Real coordinates `(tick * tau, site * l_p)`.
    pub fn real(&self, tau: f64, l_p: f64) -> (f64, Vec<f64>) {
        (self.tick as f64 * tau, self.site.real(l_p))
    }
}

/// Lattice parameterization shared by every point of a run.
/// Natural units throughout (hbar = m = 1); `l_p` is a tunable spacing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeParams {
    pub d: usize,
    pub l_p: f64,
    pub tau: f64,
    pub c_hat: f64,
}

impl LatticeParams {
    pub fn new(d: usize, l_p: f64, tau: f64, c_hat: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::Parameter(format!("d must be 1, 2 or 3, got {d}")));
        }
        if l_p <= 0.0 || tau <= 0.0 || c_hat <= 0.0 {
            return Err(Error::Parameter(
                "l_p, tau and c_hat must all be positive".into(),
            ));
        }
        Ok(LatticeParams { d, l_p, tau, c_hat })
    }

    /// Light-cone ball radius in physical units: one tick of maximal signal travel.
    pub fn cone_radius(&self) -> f64 {
        self.c_hat * self.tau
    }

    /// Cone radius in whole lattice sites. The small epsilon absorbs the
    /// `k * l_p / l_p` float round-trip so exact multiples land inside.
    pub fn cone_radius_sites(&self) -> i64 {
        (self.cone_radius() / self.l_p + 1e-9).floor() as i64
    }

    /// Whether `delta_site_sq` (integer squared site distance) lies within the cone.
    pub fn in_cone(&self, delta_site_sq: i64) -> bool {
        let r = self.cone_radius() / self.l_p;
        (delta_site_sq as f64) <= r * r * (1.0 + 1e-12) + 1e-9
    }
}

/// Squared causal interval between two lattice points:
/// `c_hat^2 (dtick*tau)^2 - |dsite*l_p|^2`.
/// Positive = time-like, zero = null, negative = space-like.
pub fn causal_distance(a: &ManifoldPoint, b: &ManifoldPoint, params: &LatticeParams) -> Result<f64> {
    if a.site.d() != b.site.d() {
        return Err(Error::DimensionMismatch { expected: a.site.d(), got: b.site.d() });
    }
    if a.site.d() != params.d {
        return Err(Error::DimensionMismatch { expected: params.d, got: a.site.d() });
    }
    let dt = (a.tick - b.tick) as f64 * params.tau;
    let dx_sq = a.site.dist_sq(&b.site) as f64 * params.l_p * params.l_p;
    Ok(params.c_hat * params.c_hat * dt * dt - dx_sq)
}

/// Finite axis-aligned site box, centered on the origin. Odd extents are
/// symmetric; even extents span `-n/2 ..= n/2 - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    extent: Vec<usize>,
}

impl Domain {
    pub fn new(extent: Vec<usize>) -> Result<Self> {
        if extent.is_empty() || extent.len() > 3 {
            return Err(Error::Parameter("extent must have 1 to 3 dimensions".into()));
        }
        if extent.contains(&0) {
            return Err(Error::Parameter("extent must be positive".into()));
        }
        Ok(Domain { extent })
    }

    pub fn d(&self) -> usize {
        self.extent.len()
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    pub fn min(&self, axis: usize) -> i64 {
        -((self.extent[axis] / 2) as i64)
    }

    pub fn max(&self, axis: usize) -> i64 {
        self.min(axis) + self.extent[axis] as i64 - 1
    }

    pub fn site_count(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn contains(&self, site: &Site) -> bool {
        site.d() == self.d()
            && site
                .coords()
                .iter()
                .enumerate()
                .all(|(ax, &c)| c >= self.min(ax) && c <= self.max(ax))
    }

    /// All sites in canonical (lexicographic) order. This order is the
    /// deterministic emission order of the exhaustive regime.
    pub fn sites(&self) -> Vec<Site> {
        let mut out = Vec::with_capacity(self.site_count());
        let mut cur: Vec<i64> = (0..self.d()).map(|ax| self.min(ax)).collect();
        loop {
            out.push(Site::new(&cur));
            let mut ax = self.d();
            loop {
                if ax == 0 {
                    return out;
                }
                ax -= 1;
                cur[ax] += 1;
                if cur[ax] <= self.max(ax) {
                    break;
                }
                cur[ax] = self.min(ax);
            }
        }
    }

    /// Index of a site in `sites()` order.
    pub fn site_index(&self, site: &Site) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        let mut idx = 0usize;
        for (ax, &c) in site.coords().iter().enumerate() {
            idx = idx * self.extent[ax] + (c - self.min(ax)) as usize;
        }
        Some(idx)
    }
}
