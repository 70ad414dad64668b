//! Interpolation kernel, discrete Green's functions, light-cone masking and
//! the strength-propagation rule.
//!
//! All operations here are pure functions of immutable inputs; the block
//! propagation over target points is data-parallel behind the `parallel`
//! feature with a sequential twin for comparison.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{Domain, LatticeParams, ManifoldPoint, Site};
use crate::tapestry::{CausalTapestry, Informon};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// sin(pi u) / (pi u), with the limit value 1 at u = 0.
pub fn sinc(u: f64) -> f64 {
    if u == 0.0 {
        1.0
    } else {
        (PI * u).sin() / (PI * u)
    }
}

/// Separable cardinal-sine interpolation kernel on the spatial lattice.
#[derive(Clone, Copy, Debug)]
pub struct InterpolationKernel {
    pub d: usize,
    pub l_p: f64,
}

impl InterpolationKernel {
    pub fn new(d: usize, l_p: f64) -> Self {
        InterpolationKernel { d, l_p }
    }

    /// Product of per-dimension sinc values at a real offset `z`.
    /// 1 at the origin, 0 at every other lattice point.
    pub fn value(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: z.len() });
        }
        Ok(z.iter().map(|&c| sinc(c / self.l_p)).product())
    }
}

/// Discrete Green's function used to propagate strengths one tick forward.
///
/// The free variant samples the continuum free-particle propagator
/// `(2 pi i tau)^(-d/2) exp(i |dx|^2 / (2 tau))` at lattice separations.
/// The tabulated variant reads `(integer offset, re, im)` rows; offsets
/// absent from the table are zero.
#[derive(Clone, Debug)]
pub enum GreensFunction {
    Free,
    Tabulated(KernelTable),
}

#[derive(Clone, Debug, Default)]
pub struct KernelTable {
    entries: HashMap<Vec<i64>, Complex64>,
}

impl KernelTable {
    pub fn get(&self, offset: &[i64]) -> Complex64 {
        self.entries.get(offset).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parses the tabulated-kernel text format: one row per offset,
/// `o1[,o2[,o3]] <ws> re <ws> im`, `#` comments and blank lines ignored.
pub fn parse_kernel_table(text: &str) -> Result<KernelTable> {
    let mut entries = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        let offset_col = cols
            .next()
            .ok_or_else(|| Error::Parameter(format!("kernel table line {}: empty", lineno + 1)))?;
        let offset: Vec<i64> = offset_col
            .split(',')
            .map(|c| {
                c.parse::<i64>().map_err(|_| {
                    Error::Parameter(format!("kernel table line {}: bad offset {c:?}", lineno + 1))
                })
            })
            .collect::<Result<_>>()?;
        let mut num = |name: &str| -> Result<f64> {
            cols.next()
                .ok_or_else(|| {
                    Error::Parameter(format!("kernel table line {}: missing {name}", lineno + 1))
                })?
                .parse::<f64>()
                .map_err(|_| Error::Parameter(format!("kernel table line {}: bad {name}", lineno + 1)))
        };
        let re = num("re")?;
        let im = num("im")?;
        entries.insert(offset, Complex64::new(re, im));
    }
    Ok(KernelTable { entries })
}

/// Free-particle propagator value at real separation `dx` over time step `tau`.
/// Principal branch: `i^(-d/2) = exp(-i pi d / 4)`.
pub fn greens_value(dx: &[f64], tau: f64) -> Result<Complex64> {
    if tau <= 0.0 {
        return Err(Error::Parameter(format!("tau must be positive, got {tau}")));
    }
    let d = dx.len() as i32;
    let modulus = (2.0 * PI * tau).powf(-0.5 * d as f64);
    let r_sq: f64 = dx.iter().map(|&c| c * c).sum();
    let phase = r_sq / (2.0 * tau) - PI * d as f64 / 4.0;
    Ok(Complex64::from_polar(modulus, phase))
}

impl GreensFunction {
    /// Kernel value at an integer site separation under the given lattice.
    pub fn value_at(&self, delta_site: &[i64], params: &LatticeParams) -> Result<Complex64> {
        match self {
            GreensFunction::Free => {
                let dx: Vec<f64> = delta_site.iter().map(|&c| c as f64 * params.l_p).collect();
                greens_value(&dx, params.tau)
            }
            GreensFunction::Tabulated(table) => Ok(table.get(delta_site)),
        }
    }
}

/// All prior informons within the light-cone ball of `target`:
/// spatial distance at most `c_hat * tau`. Ball membership is decided by
/// integer site arithmetic. The result is in prior storage order, which is
/// sorted by id; summation order downstream is therefore reproducible.
pub fn lightcone_sources<'a>(
    target: &ManifoldPoint,
    prior: &'a CausalTapestry,
    params: &LatticeParams,
) -> Vec<&'a Informon> {
    prior
        .informons()
        .iter()
        .filter(|n| params.in_cone(n.point.site.dist_sq(&target.site)))
        .collect()
}

/// Strength-propagation rule: `sum_k l_p^d K(dx_mk) Gamma_k` over the given
/// sources. Empty sources yield zero.
pub fn propagate_strength(
    target: &ManifoldPoint,
    sources: &[&Informon],
    kernel: &GreensFunction,
    params: &LatticeParams,
) -> Result<Complex64> {
    let cell = params.l_p.powi(params.d as i32);
    let mut acc = Complex64::ZERO;
    for src in sources {
        let delta: Vec<i64> = target
            .site
            .coords()
            .iter()
            .zip(src.point.site.coords())
            .map(|(a, b)| a - b)
            .collect();
        acc += cell * kernel.value_at(&delta, params)? * src.strength;
    }
    Ok(acc)
}

/// One target's propagated strength along with the source references used,
/// for content recording.
fn propagate_one(
    target: Site,
    tick: i64,
    prior: &CausalTapestry,
    kernel: &GreensFunction,
    params: &LatticeParams,
) -> Result<Complex64> {
    let point = ManifoldPoint::new(tick, target);
    let sources = lightcone_sources(&point, prior, params);
    propagate_strength(&point, &sources, kernel, params)
}

/// Propagated strengths for a block of target sites, sequential reference path.
pub fn propagate_block_seq(
    targets: &[Site],
    tick: i64,
    prior: &CausalTapestry,
    kernel: &GreensFunction,
    params: &LatticeParams,
) -> Result<Vec<Complex64>> {
    targets
        .iter()
        .map(|&s| propagate_one(s, tick, prior, kernel, params))
        .collect()
}

/// Propagated strengths for a block of target sites. Data-parallel over
/// targets when the `parallel` feature is enabled; results are collected in
/// target order either way, so output is bit-identical across both paths.
pub fn propagate_block(
    targets: &[Site],
    tick: i64,
    prior: &CausalTapestry,
    kernel: &GreensFunction,
    params: &LatticeParams,
) -> Result<Vec<Complex64>> {
    #[cfg(feature = "parallel")]
    {
        targets
            .par_iter()
            .map(|&s| propagate_one(s, tick, prior, kernel, params))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        propagate_block_seq(targets, tick, prior, kernel, params)
    }
}

/// Scales strengths so the lattice norm `sum |Gamma|^2 l_p^d` is 1 and
/// returns the pre-scaling norm as a truncation diagnostic.
pub fn renormalize_tapestry(
    t: &CausalTapestry,
    params: &LatticeParams,
) -> Result<(CausalTapestry, f64)> {
    let norm_sq = t.norm_sq(params);
    if norm_sq <= 0.0 {
        return Err(Error::ZeroNormalization);
    }
    let mut out = t.clone();
    out.scale_strengths(1.0 / norm_sq.sqrt());
    Ok((out, norm_sq))
}

/// Admissible target sites of a domain (engine helper): all sites, in
/// canonical order.
pub fn domain_targets(domain: &Domain) -> Vec<Site> {
    domain.sites()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tapestry::{no_properties, InformonId, TapestryBuilder};
    use approx::assert_abs_diff_eq;

    fn params_1d(l_p: f64, tau: f64, c_hat: f64) -> LatticeParams {
        LatticeParams::new(1, l_p, tau, c_hat).unwrap()
    }

    #[test]
    fn kernel_is_one_at_origin() {
        let g = InterpolationKernel::new(2, 0.3);
        assert_eq!(g.value(&[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn kernel_vanishes_at_nonzero_lattice_points() {
        let g = InterpolationKernel::new(1, 0.25);
        for k in [-7i64, -1, 1, 2, 12] {
            let v = g.value(&[k as f64 * 0.25]).unwrap();
            assert!(v.abs() < 1e-12, "k={k}: {v}");
        }
    }

    #[test]
    fn kernel_half_cell_value_matches_closed_form() {
        // d=2, z=(l_p/2, 0): sin(pi/2)/(pi/2) * 1 = 2/pi.
        let g = InterpolationKernel::new(2, 0.5);
        let v = g.value(&[0.25, 0.0]).unwrap();
        assert_abs_diff_eq!(v, 2.0 / PI, epsilon = 1e-15);
    }

    #[test]
    fn kernel_rejects_wrong_dimension() {
        let g = InterpolationKernel::new(2, 0.5);
        assert!(g.value(&[0.1]).is_err());
    }

    #[test]
    fn greens_modulus_at_unit_tau() {
        // d=1, tau=1: |K| = (2 pi)^(-1/2).
        let v = greens_value(&[0.0], 1.0).unwrap();
        assert_abs_diff_eq!(v.norm(), (2.0 * PI).powf(-0.5), epsilon = 1e-15);
    }

    #[test]
    fn greens_modulus_is_independent_of_offset() {
        let a = greens_value(&[0.0], 0.3).unwrap().norm();
        for dx in [0.1, 1.7, -4.2] {
            assert_abs_diff_eq!(greens_value(&[dx], 0.3).unwrap().norm(), a, epsilon = 1e-14);
        }
    }

    #[test]
    fn greens_is_even_in_offset() {
        let a = greens_value(&[1.3], 0.4).unwrap();
        let b = greens_value(&[-1.3], 0.4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn greens_rejects_nonpositive_tau() {
        assert!(greens_value(&[0.0], 0.0).is_err());
        assert!(greens_value(&[0.0], -1.0).is_err());
    }

    #[test]
    fn greens_phase_convention_d1() {
        // At dx=0 the phase is exactly -pi/4.
        let v = greens_value(&[0.0], 1.0).unwrap();
        assert_abs_diff_eq!(v.arg(), -PI / 4.0, epsilon = 1e-15);
    }

    fn delta_prior(site: i64, strength: Complex64) -> CausalTapestry {
        let mut b = TapestryBuilder::new(0, "delta");
        b.push(Informon::new(
            InformonId(0),
            ManifoldPoint::new(0, Site::new(&[site])),
            strength,
            no_properties(),
        ));
        b.seal().unwrap()
    }

    #[test]
    fn cone_smaller_than_spacing_only_captures_same_site() {
        let params = params_1d(0.1, 0.05, 1.0); // r_c = 0.05 < l_p
        let prior = delta_prior(0, Complex64::new(1.0, 0.0));
        let at = |s: i64| ManifoldPoint::new(1, Site::new(&[s]));
        assert_eq!(lightcone_sources(&at(0), &prior, &params).len(), 1);
        assert_eq!(lightcone_sources(&at(1), &prior, &params).len(), 0);
    }

    #[test]
    fn cone_three_spacings_wide_captures_plus_minus_three() {
        let params = params_1d(0.1, 0.3, 1.0); // r_c = 3 l_p
        let prior = delta_prior(0, Complex64::new(1.0, 0.0));
        for s in -5i64..=5 {
            let got = lightcone_sources(&ManifoldPoint::new(1, Site::new(&[s])), &prior, &params);
            assert_eq!(got.len(), usize::from(s.abs() <= 3), "site {s}");
        }
    }

    #[test]
    fn empty_prior_yields_empty_sources_and_zero_strength() {
        let params = params_1d(0.1, 0.1, 1.0);
        let prior = CausalTapestry::empty(0, "empty");
        let target = ManifoldPoint::new(1, Site::new(&[0]));
        let sources = lightcone_sources(&target, &prior, &params);
        assert!(sources.is_empty());
        let v = propagate_strength(&target, &sources, &GreensFunction::Free, &params).unwrap();
        assert_eq!(v, Complex64::ZERO);
    }

    #[test]
    fn single_unit_source_gives_lp_times_kernel() {
        let params = params_1d(0.1, 0.1, 1.0);
        let prior = delta_prior(0, Complex64::new(1.0, 0.0));
        let target = ManifoldPoint::new(1, Site::new(&[0]));
        let sources = lightcone_sources(&target, &prior, &params);
        let got = propagate_strength(&target, &sources, &GreensFunction::Free, &params).unwrap();
        let expected = 0.1 * greens_value(&[0.0], 0.1).unwrap();
        assert!((got - expected).norm() < 1e-15);
    }

    #[test]
    fn propagation_is_linear_in_source_strengths() {
        let params = params_1d(0.1, 0.3, 1.0);
        let target = ManifoldPoint::new(1, Site::new(&[1]));
        let build = |g0: Complex64, g1: Complex64| {
            let mut b = TapestryBuilder::new(0, "t");
            b.push(Informon::new(
                InformonId(0),
                ManifoldPoint::new(0, Site::new(&[0])),
                g0,
                no_properties(),
            ));
            b.push(Informon::new(
                InformonId(1),
                ManifoldPoint::new(0, Site::new(&[2])),
                g1,
                no_properties(),
            ));
            b.seal().unwrap()
        };
        let f = |t: &CausalTapestry| {
            let sources = lightcone_sources(&target, t, &params);
            propagate_strength(&target, &sources, &GreensFunction::Free, &params).unwrap()
        };
        let a = Complex64::new(0.3, -0.2);
        let b = Complex64::new(-1.1, 0.7);
        let ga = Complex64::new(0.9, 0.1);
        let gb = Complex64::new(0.2, -0.4);
        let lhs = f(&build(a * ga, a * gb)) + f(&build(b * gb, b * ga));
        let rhs = a * f(&build(ga, gb)) + b * f(&build(gb, ga));
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn propagation_is_translation_covariant() {
        let params = params_1d(0.1, 0.3, 1.0);
        let strengths = [Complex64::new(0.4, 0.1), Complex64::new(-0.2, 0.9)];
        let build = |shift: i64| {
            let mut b = TapestryBuilder::new(0, "t");
            for (i, &g) in strengths.iter().enumerate() {
                b.push(Informon::new(
                    InformonId(i as u64),
                    ManifoldPoint::new(0, Site::new(&[i as i64 + shift])),
                    g,
                    no_properties(),
                ));
            }
            b.seal().unwrap()
        };
        let eval = |shift: i64| {
            let t = build(shift);
            let target = ManifoldPoint::new(1, Site::new(&[1 + shift]));
            let sources = lightcone_sources(&target, &t, &params);
            propagate_strength(&target, &sources, &GreensFunction::Free, &params).unwrap()
        };
        assert!((eval(0) - eval(17)).norm() < 1e-12);
    }

    #[test]
    fn doubling_sources_doubles_result() {
        let params = params_1d(0.1, 0.2, 1.0);
        let target = ManifoldPoint::new(1, Site::new(&[0]));
        let single = delta_prior(0, Complex64::new(0.3, 0.4));
        let double = delta_prior(0, Complex64::new(0.6, 0.8));
        let f = |t: &CausalTapestry| {
            let s = lightcone_sources(&target, t, &params);
            propagate_strength(&target, &s, &GreensFunction::Free, &params).unwrap()
        };
        assert!((f(&double) - 2.0 * f(&single)).norm() < 1e-15);
    }

    #[test]
    fn renormalize_uniform_tapestry() {
        let params = params_1d(0.5, 0.5, 1.0);
        let n = 4usize;
        let mut b = TapestryBuilder::new(0, "t");
        for i in 0..n {
            b.push(Informon::new(
                InformonId(i as u64),
                ManifoldPoint::new(0, Site::new(&[i as i64])),
                Complex64::new(1.0, 0.0),
                no_properties(),
            ));
        }
        let t = b.seal().unwrap();
        let (scaled, diag) = renormalize_tapestry(&t, &params).unwrap();
        let expected = (n as f64 * 0.5).powf(-0.5);
        for inf in scaled.informons() {
            assert_abs_diff_eq!(inf.strength.re, expected, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(diag, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(scaled.norm_sq(&params), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn renormalize_already_normalized_is_identity() {
        let params = params_1d(1.0, 1.0, 1.0);
        let t = delta_prior(0, Complex64::new(1.0, 0.0));
        let (scaled, diag) = renormalize_tapestry(&t, &params).unwrap();
        assert_abs_diff_eq!(diag, 1.0, epsilon = 1e-15);
        assert_eq!(scaled.informons()[0].strength, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn renormalize_zero_tapestry_is_an_error() {
        let params = params_1d(0.1, 0.1, 1.0);
        let t = delta_prior(0, Complex64::ZERO);
        assert!(matches!(renormalize_tapestry(&t, &params), Err(Error::ZeroNormalization)));
    }

    #[test]
    fn tabulated_kernel_parses_and_defaults_to_zero() {
        let table = parse_kernel_table("# comment\n0 1.0 0.0\n1 0.25 -0.5\n\n-1 0.25 0.5\n").unwrap();
        assert_eq!(table.len(), 3);
        assert_eq!(table.get(&[1]), Complex64::new(0.25, -0.5));
        assert_eq!(table.get(&[7]), Complex64::ZERO);
        let params = params_1d(1.0, 1.0, 1.0);
        let g = GreensFunction::Tabulated(table);
        assert_eq!(g.value_at(&[-1], &params).unwrap(), Complex64::new(0.25, 0.5));
    }

    #[test]
    fn parallel_and_sequential_blocks_agree_bitwise() {
        let params = params_1d(0.1, 0.5, 1.0);
        let mut b = TapestryBuilder::new(0, "t");
        for i in -20i64..=20 {
            b.push(Informon::new(
                InformonId((i + 20) as u64),
                ManifoldPoint::new(0, Site::new(&[i])),
                Complex64::new((i as f64 * 0.3).cos(), (i as f64 * 0.7).sin()),
                no_properties(),
            ));
        }
        let prior = b.seal().unwrap();
        let targets: Vec<Site> = (-20i64..=20).map(|i| Site::new(&[i])).collect();
        let seq =
            propagate_block_seq(&targets, 1, &prior, &GreensFunction::Free, &params).unwrap();
        let par = propagate_block(&targets, 1, &prior, &GreensFunction::Free, &params).unwrap();
        assert_eq!(seq, par);
    }
}
