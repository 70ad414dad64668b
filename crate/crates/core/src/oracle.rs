//! Analytic oracles and the convergence harness.
//!
//! The closed-form free Gaussian packet is the reference state; an
//! independent discrete-Fourier evolution cross-checks it (the two share no
//! code path with the lattice engine). The convergence study drives the
//! exhaustive engine across a spacing sweep and fits the error order.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;

use crate::algebra::{PrimitiveSpec, ProcessExpr};
use crate::engine::{self, GenerationConfig, Regime};
use crate::error::{Error, Result};
use crate::lattice::{Domain, LatticeParams, Site};

/// Free Gaussian wave packet in natural units (hbar = m = 1).
///
/// Convention: `|psi(x,0)|^2` is Gaussian with standard deviation `sigma`,
/// so the density width obeys `width(t)^2 = sigma^2 + t^2 / (4 sigma^2)`
/// and the centroid moves at group velocity `k0`.
#[derive(Clone, Debug)]
pub struct AnalyticState {
    pub sigma: f64,
    pub x0: Vec<f64>,
    pub k0: Vec<f64>,
}

impl AnalyticState {
    pub fn new(sigma: f64, x0: Vec<f64>, k0: Vec<f64>) -> Result<Self> {
        if sigma <= 0.0 {
            return Err(Error::Parameter("sigma must be positive".into()));
        }
        if x0.len() != k0.len() || x0.is_empty() || x0.len() > 3 {
            return Err(Error::Parameter("x0 and k0 must share dimension 1..=3".into()));
        }
        Ok(AnalyticState { sigma, x0, k0 })
    }

    pub fn d(&self) -> usize {
        self.x0.len()
    }

    /// Density width at time t: `sqrt(sigma^2 + t^2/(4 sigma^2))`.
    pub fn width(&self, t: f64) -> f64 {
        (self.sigma * self.sigma + t * t / (4.0 * self.sigma * self.sigma)).sqrt()
    }

    fn psi_axis(&self, x: f64, x0: f64, k0: f64, t: f64) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        let alpha = Complex64::new(1.0, t / (2.0 * s2));
        let norm = (2.0 * PI * s2).powf(-0.25) / alpha.sqrt();
        let dx = x - x0 - k0 * t;
        let exponent = -Complex64::new(dx * dx, 0.0) / (4.0 * s2 * alpha)
            + Complex64::new(0.0, k0 * (x - x0) - 0.5 * k0 * k0 * t);
        norm * exponent.exp()
    }

    /// Closed-form value at a real point and time; separable across axes.
    pub fn psi(&self, x: &[f64], t: f64) -> Result<Complex64> {
        if x.len() != self.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), got: x.len() });
        }
        let mut v = Complex64::new(1.0, 0.0);
        for ((&xi, &x0), &k0) in x.iter().zip(&self.x0).zip(&self.k0) {
            v *= self.psi_axis(xi, x0, k0, t);
        }
        Ok(v)
    }
}

/// Exact closed-form evaluation on the lattice, in canonical site order.
pub fn analytic_evolve(
    state: &AnalyticState,
    domain: &Domain,
    l_p: f64,
    t: f64,
) -> Result<Vec<Complex64>> {
    if t < 0.0 {
        return Err(Error::Parameter("t must be nonnegative".into()));
    }
    domain
        .sites()
        .iter()
        .map(|s| state.psi(&s.real(l_p), t))
        .collect()
}

/// Independent cross-oracle: evolve samples on a uniform periodic grid by
/// multiplying each discrete Fourier mode with `exp(-i k^2 t / 2)`.
/// Plain O(n^2) transform; grids stay small.
pub fn spectral_evolve_1d(samples: &[Complex64], dx: f64, t: f64) -> Vec<Complex64> {
    let n = samples.len();
    let nf = n as f64;
    let length = nf * dx;
    let mut modes = vec![Complex64::ZERO; n];
    for (k, mode) in modes.iter_mut().enumerate() {
        let mut acc = Complex64::ZERO;
        for (j, &s) in samples.iter().enumerate() {
            let phase = -2.0 * PI * (j as f64) * (k as f64) / nf;
            acc += s * Complex64::from_polar(1.0, phase);
        }
        let signed = if k <= n / 2 { k as i64 } else { k as i64 - n as i64 };
        let k_phys = 2.0 * PI * signed as f64 / length;
        *mode = acc * Complex64::from_polar(1.0, -0.5 * k_phys * k_phys * t);
    }
    let mut out = vec![Complex64::ZERO; n];
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::ZERO;
        for (k, &m) in modes.iter().enumerate() {
            let phase = 2.0 * PI * (j as f64) * (k as f64) / nf;
            acc += m * Complex64::from_polar(1.0, phase);
        }
        *o = acc / nf;
    }
    out
}

/// Lattice L2 distance `(sum |a-b|^2 l_p^d)^(1/2)`.
pub fn l2_error(a: &[Complex64], b: &[Complex64], l_p: f64, d: usize) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("lengths {} vs {}", a.len(), b.len())));
    }
    let cell = l_p.powi(d as i32);
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr() * cell)
        .sum::<f64>()
        .sqrt())
}

/// L2 distance minimized over a global phase on `b`; overall phase is
/// unphysical. The optimal phase maximizes `Re(e^{i theta} <a, b>)`; the
/// difference is then evaluated directly, which stays accurate down to
/// machine scale where the closed-form `sqrt(na + nb - 2|<a,b>|)` cancels.
pub fn l2_error_phase_aligned(a: &[Complex64], b: &[Complex64], l_p: f64, d: usize) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("lengths {} vs {}", a.len(), b.len())));
    }
    let inner: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let rotation = if inner.norm() > 0.0 {
        inner.conj() / inner.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let rotated: Vec<Complex64> = b.iter().map(|&y| rotation * y).collect();
    l2_error(a, &rotated, l_p, d)
}

/// Sweep parameters for the convergence study.
///
/// The time step stays fixed across the sweep while the light-cone radius
/// grows by `cone_growth` per refinement level. The cone-truncation error
/// scales like `1 / (sqrt(tau) * r_c)` independently of the spacing, so a
/// growing cone is what ties the total error to the refinement; shrinking
/// `tau` with `l_p` instead would leave the truncation floor flat.
#[derive(Clone, Debug)]
pub struct StudyConfig {
    /// Lattice spacings, strictly decreasing.
    pub spacings: Vec<f64>,
    /// Final physical time.
    pub t_final: f64,
    /// Time step; must divide `t_final` into whole ticks.
    pub tau: f64,
    /// Cone radius at the coarsest level, in units of sigma.
    pub cone_base_sigmas: f64,
    /// Multiplicative cone growth per refinement level.
    pub cone_growth: f64,
    /// Padding margin in units of width(T); the padding rule demands >= 6.
    pub padding_widths: f64,
    pub renormalize: bool,
}

impl StudyConfig {
    pub fn standard(spacings: Vec<f64>, t_final: f64) -> Self {
        StudyConfig {
            spacings,
            t_final,
            tau: t_final / 2.0,
            cone_base_sigmas: 6.0,
            cone_growth: 2.0,
            padding_widths: 6.0,
            renormalize: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StudyRow {
    pub l_p: f64,
    pub tau: f64,
    pub ticks: usize,
    pub t_final: f64,
    pub cone_radius: f64,
    pub sites: usize,
    pub l2_error: f64,
    /// |1 - product of per-tick pre-normalization norms|.
    pub norm_leak: f64,
    pub runtime_s: f64,
}

#[derive(Clone, Debug)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    /// Least-squares slope of log error against log spacing.
    pub fitted_order: f64,
    /// Errors strictly decrease at every refinement.
    pub monotone: bool,
}

/// Domain half-width covering packet transport, the padding margin and the
/// cone reach.
pub fn padded_half_width(state: &AnalyticState, t_final: f64, padding_widths: f64, r_c: f64) -> f64 {
    let x_reach = state
        .x0
        .iter()
        .zip(&state.k0)
        .map(|(x, k)| x.abs() + k.abs() * t_final)
        .fold(0.0_f64, f64::max);
    x_reach + padding_widths * state.width(t_final) + r_c
}

/// Padding rule: the domain half-width must reach `x0 + k0 T + 6 width(T)`.
pub fn validate_padding(state: &AnalyticState, t_final: f64, half_width: f64) -> Result<()> {
    let required = state
        .x0
        .iter()
        .zip(&state.k0)
        .map(|(x, k)| x.abs() + k.abs() * t_final)
        .fold(0.0_f64, f64::max)
        + 6.0 * state.width(t_final);
    if half_width < required {
        return Err(Error::Parameter(format!(
            "padding rule violated: half-width {half_width} < required {required}"
        )));
    }
    Ok(())
}

/// Runs the exhaustive engine across the spacing sweep and compares each
/// final tapestry against the analytic state at `t_final` in phase-aligned
/// lattice L2 norm.
pub fn convergence_study(state: &AnalyticState, cfg: &StudyConfig) -> Result<StudyReport> {
    if state.d() != 1 {
        return Err(Error::Parameter("convergence study runs in one dimension".into()));
    }
    if cfg.spacings.len() < 2 {
        return Err(Error::Parameter("need at least two spacings".into()));
    }
    if cfg.spacings.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parameter("spacings must be strictly decreasing".into()));
    }
    let ticks_f = cfg.t_final / cfg.tau;
    let ticks = ticks_f.round() as usize;
    if ticks == 0 || (ticks_f - ticks as f64).abs() > 1e-9 {
        return Err(Error::Parameter(format!(
            "tau {} must divide t_final {} into whole ticks",
            cfg.tau, cfg.t_final
        )));
    }

    let mut rows = Vec::with_capacity(cfg.spacings.len());
    for (level, &l_p) in cfg.spacings.iter().enumerate() {
        let started = Instant::now();
        let r_c = cfg.cone_base_sigmas * state.sigma * cfg.cone_growth.powi(level as i32);
        let half = padded_half_width(state, cfg.t_final, cfg.padding_widths, r_c);
        validate_padding(state, cfg.t_final, half)?;
        let half_sites = (half / l_p).ceil() as usize;
        let domain = Domain::new(vec![2 * half_sites + 1])?;
        let params = LatticeParams::new(1, l_p, cfg.tau, r_c / cfg.tau)?;

        let initial = engine::initial_gaussian(state, &domain, &params, 0)?;
        let gen_cfg = GenerationConfig {
            domain: domain.clone(),
            params,
            n_per_round: 1,
            regime: Regime::Exhaustive,
            seed: 0,
            renormalize: cfg.renormalize,
            record_content: false,
            budget_leaves: 0,
            site_strategy: Default::default(),
        };
        let expr = ProcessExpr::Primitive(PrimitiveSpec::free("oracle"));
        let run = engine::run(&expr, &initial, ticks, &gen_cfg)?;

        let mut by_site: std::collections::HashMap<Site, Complex64> = run
            .tapestries
            .last()
            .expect("ticks >= 1")
            .informons()
            .iter()
            .map(|n| (n.point.site, n.strength))
            .collect();
        let engine_samples: Vec<Complex64> = domain
            .sites()
            .iter()
            .map(|s| by_site.remove(s).unwrap_or(Complex64::ZERO))
            .collect();
        let analytic = analytic_evolve(state, &domain, l_p, cfg.t_final)?;
        let err = l2_error_phase_aligned(&engine_samples, &analytic, l_p, 1)?;
        let leak = (1.0
            - run
                .renorm_diagnostics
                .iter()
                .flatten()
                .product::<f64>())
        .abs();
        rows.push(StudyRow {
            l_p,
            tau: cfg.tau,
            ticks,
            t_final: cfg.t_final,
            cone_radius: r_c,
            sites: domain.site_count(),
            l2_error: err,
            norm_leak: leak,
            runtime_s: started.elapsed().as_secs_f64(),
        });
    }

    let monotone = rows.windows(2).all(|w| w[1].l2_error < w[0].l2_error);
    let fitted_order = fit_order(&rows);
    Ok(StudyReport { rows, fitted_order, monotone })
}

/// Least-squares slope of ln(error) against ln(l_p).
fn fit_order(rows: &[StudyRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.l2_error > 0.0)
        .map(|r| (r.l_p.ln(), r.l2_error.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return 0.0;
    }
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}


#[cfg(test)]
mod study_tests {
    use super::*;

    #[test]
    fn insufficient_padding_is_a_configuration_error() {
        // A tight margin and a small cone leave the domain short of the rule.
        let state = AnalyticState::new(1.0, vec![0.0], vec![1.0]).unwrap();
        let cfg = StudyConfig {
            padding_widths: 0.5,
            cone_base_sigmas: 1.0,
            ..StudyConfig::standard(vec![0.4, 0.2], 1.0)
        };
        let err = convergence_study(&state, &cfg).unwrap_err();
        assert_eq!(err.category(), "parameter");
    }

    #[test]
    fn tau_must_divide_the_final_time() {
        let state = AnalyticState::new(1.0, vec![0.0], vec![1.0]).unwrap();
        let cfg = StudyConfig { tau: 0.3, ..StudyConfig::standard(vec![0.4, 0.2], 1.0) };
        assert!(convergence_study(&state, &cfg).is_err());
    }

    #[test]
    fn spacings_must_strictly_decrease() {
        let state = AnalyticState::new(1.0, vec![0.0], vec![1.0]).unwrap();
        let cfg = StudyConfig::standard(vec![0.2, 0.4], 1.0);
        assert!(convergence_study(&state, &cfg).is_err());
    }
}
