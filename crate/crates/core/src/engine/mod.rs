//! Generation engine: executes a process expression against a tapestry for
//! one or more ticks.
//!
//! One tick is one round. Within a round every primitive emits its N
//! informons across interleaved short rounds: concurrent factors of a
//! product emit together each step (a correlated set), while summands of a
//! sum take turns, one per step. Site selection and summand order are the
//! nondeterministic choices; the sampled executor draws them from a seeded
//! generator, the enumerator branches over all of them.

mod enumerate;
mod plan;
mod play;

pub use enumerate::{enumerate_plays, EdgeLabel, SequenceTree, TreeEdge, TreeNode, TreeProvenance};
pub use play::{Play, PlayEvent, Warning};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::algebra::{ProcessExpr, ONE};
use crate::error::{Error, Result};
use crate::kernel::renormalize_tapestry;
use crate::lattice::{Domain, LatticeParams, ManifoldPoint, Site};
use crate::oracle::AnalyticState;
use crate::tapestry::{
    no_properties, CausalTapestry, Informon, InformonId, PropertyMap, TapestryBuilder,
};

use plan::{classify, emit, node_remaining, CollisionOutcome, Plan, PlanKind, RoundCtx, RoundState};

/// How target sites are chosen for each primitive emission.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Regime {
    /// Every site of the domain, in canonical order; fully deterministic.
    Exhaustive,
    /// N distinct sites per primitive per round, drawn from the admissible
    /// sites by the configured [`SiteStrategy`].
    Sampled,
}

/// Site-selection strategy for the sampled regime. Selection never biases
/// strengths: weights act on strengths, not on choice odds. The enum is the
/// seam for future non-uniform strategies.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum SiteStrategy {
    /// Uniform choice over admissible unoccupied sites.
    #[default]
    UniformAdmissible,
}

#[derive(Clone, Debug)]
pub struct GenerationConfig {
    pub domain: Domain,
    pub params: LatticeParams,
    /// Informons per primitive per round in the sampled regime.
    pub n_per_round: usize,
    pub regime: Regime,
    pub seed: u64,
    /// Rescale each sealed tapestry to unit lattice norm. The propagation
    /// kernel is only unitary without light-cone truncation, so this is on
    /// by default; the pre-scaling norm is reported as a diagnostic.
    pub renormalize: bool,
    /// Record causal content sets on every informon. Dense exhaustive runs
    /// may switch this off: content is derivable from the cone.
    pub record_content: bool,
    /// Maximal-tapestry budget for enumeration; 0 means the default.
    pub budget_leaves: usize,
    pub site_strategy: SiteStrategy,
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.domain.d() != self.params.d {
            return Err(Error::DimensionMismatch {
                expected: self.params.d,
                got: self.domain.d(),
            });
        }
        if self.regime == Regime::Sampled && self.n_per_round == 0 {
            return Err(Error::Parameter("n_per_round must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RoundOutput {
    pub tapestry: CausalTapestry,
    pub events: Vec<PlayEvent>,
    /// Pre-normalization lattice norm, when renormalization ran.
    pub renorm_diagnostic: Option<f64>,
    pub warnings: Vec<Warning>,
    next_id: u64,
}

/// One full run: the tapestry after every tick plus the realized play.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub tapestries: Vec<CausalTapestry>,
    pub play: Play,
    pub renorm_diagnostics: Vec<Option<f64>>,
    pub warnings: Vec<Warning>,
}

/// Executes one round (one tick) of `expr` against `current`.
pub fn run_round(
    expr: &ProcessExpr,
    current: &CausalTapestry,
    cfg: &GenerationConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(CausalTapestry, Play)> {
    let next_id = current.informons().iter().map(|n| n.id.0 + 1).max().unwrap_or(0);
    let out = round_once(expr, current, cfg, rng, next_id)?;
    let mut play = Play::new(out.events, out.tapestry.clone());
    play.warnings = out.warnings;
    Ok((out.tapestry, play))
}

fn round_once(
    expr: &ProcessExpr,
    current: &CausalTapestry,
    cfg: &GenerationConfig,
    rng: &mut ChaCha8Rng,
    next_id: u64,
) -> Result<RoundOutput> {
    cfg.validate()?;
    let plan = Plan::build(expr)?;
    let (ctx, mut state) = RoundCtx::prepare(&plan, cfg, current, next_id)?;

    while node_remaining(&plan, &state, plan.root) > 0 {
        step_sampled(&ctx, &mut state, plan.root, ONE, rng)?;
        state.step += 1;
    }

    let provenance = format!("expr={expr};tick={}", ctx.tick);
    let mut builder = TapestryBuilder::new(ctx.tick, provenance);
    let degenerate = !state.emitted.is_empty()
        && state.emitted.iter().all(|e| e.informon.strength == Complex64::ZERO);
    for e in &state.emitted {
        builder.push(e.informon.clone());
    }
    let sealed = builder.seal()?;

    let mut warnings = Vec::new();
    if degenerate {
        warnings.push(Warning::DegeneratePropagation { tick: ctx.tick });
    }

    let mut events = std::mem::take(&mut state.events);
    let (tapestry, diag) = if cfg.renormalize && !sealed.is_empty() {
        let (scaled, norm) = renormalize_tapestry(&sealed, &cfg.params)?;
        events.push(PlayEvent::Renormalize { tick: ctx.tick, scale: 1.0 / norm.sqrt() });
        (scaled, Some(norm))
    } else {
        (sealed, None)
    };

    Ok(RoundOutput { tapestry, events, renorm_diagnostic: diag, warnings, next_id: state.next_id })
}

/// One sampled emission step below `node`.
fn step_sampled(
    ctx: &RoundCtx<'_>,
    state: &mut RoundState,
    node: usize,
    weight: Complex64,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let kind = ctx.plan.nodes[node].kind.clone();
    match kind {
        PlanKind::Zero => Ok(()),
        PlanKind::Primitive { .. } => {
            match ctx.cfg.regime {
                Regime::Exhaustive => {
                    let site = ctx.sites[state.cursor[node]];
                    state.cursor[node] += 1;
                    emit(state, ctx, node, site, weight)?;
                }
                Regime::Sampled => {
                    let SiteStrategy::UniformAdmissible = ctx.cfg.site_strategy;
                    let mut candidates: Vec<Site> = ctx
                        .sites
                        .iter()
                        .filter(|s| !state.used[node].contains(s))
                        .copied()
                        .collect();
                    loop {
                        if candidates.is_empty() {
                            return Err(Error::Capacity(format!(
                                "no admissible site left for primitive {}",
                                ctx.plan.spec_of(node).name
                            )));
                        }
                        let pick = rng.random_range(0..candidates.len());
                        let site = candidates[pick];
                        let strength =
                            weight * ctx.strengths[&node][ctx.site_index(&site)];
                        match classify(state, ctx, node, site, strength) {
                            CollisionOutcome::Excluded => {
                                // Redraw: this site cannot host the emission.
                                candidates.swap_remove(pick);
                            }
                            _ => {
                                emit(state, ctx, node, site, weight)?;
                                break;
                            }
                        }
                    }
                }
            }
            Ok(())
        }
        PlanKind::Sum { terms, .. } => {
            let eligible: Vec<(Complex64, usize)> = terms
                .iter()
                .filter(|(_, c)| node_remaining(ctx.plan, state, *c) > 0)
                .copied()
                .collect();
            if eligible.is_empty() {
                return Ok(());
            }
            let (w, child) = match ctx.cfg.regime {
                // Uniform choice among summands: weights scale strengths,
                // never selection odds.
                Regime::Sampled => eligible[rng.random_range(0..eligible.len())],
                // Deterministic order keeps exhaustive output seed-free.
                Regime::Exhaustive => eligible[0],
            };
            step_sampled(ctx, state, child, weight * w, rng)
        }
        PlanKind::Product { factors, .. } => {
            for f in factors {
                if node_remaining(ctx.plan, state, f) > 0 {
                    step_sampled(ctx, state, f, weight, rng)?;
                }
            }
            Ok(())
        }
    }
}

/// Folds `run_round` over `ticks` generations, chaining tapestries by
/// content references. Deterministic for a fixed seed.
pub fn run(
    expr: &ProcessExpr,
    initial: &CausalTapestry,
    ticks: usize,
    cfg: &GenerationConfig,
) -> Result<RunOutput> {
    if ticks == 0 {
        return Err(Error::Parameter("ticks must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    run_with_rng(expr, initial, ticks, cfg, &mut rng)
}

fn run_with_rng(
    expr: &ProcessExpr,
    initial: &CausalTapestry,
    ticks: usize,
    cfg: &GenerationConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RunOutput> {
    let mut tapestries = Vec::with_capacity(ticks);
    let mut events = Vec::new();
    let mut diagnostics = Vec::with_capacity(ticks);
    let mut warnings = Vec::new();
    let mut current = initial.clone();
    let mut next_id = initial.informons().iter().map(|n| n.id.0 + 1).max().unwrap_or(0);
    for _ in 0..ticks {
        let out = round_once(expr, &current, cfg, rng, next_id)?;
        next_id = out.next_id;
        events.extend(out.events);
        diagnostics.push(out.renorm_diagnostic);
        warnings.extend(out.warnings);
        current = out.tapestry.clone();
        tapestries.push(out.tapestry);
    }
    let mut play = Play::new(events, current);
    play.warnings = warnings.clone();
    Ok(RunOutput { tapestries, play, renorm_diagnostics: diagnostics, warnings })
}

/// Independent seeded plays; play `i` draws from stream `i` of the seed.
/// Reproducible per (seed, index) and embarrassingly parallel.
pub fn sample_plays(
    expr: &ProcessExpr,
    initial: &CausalTapestry,
    ticks: usize,
    cfg: &GenerationConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<Play>> {
    if count == 0 {
        return Err(Error::Parameter("count must be at least 1".into()));
    }
    let one = |idx: usize| -> Result<Play> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx as u64);
        let out = run_with_rng(expr, initial, ticks, cfg, &mut rng)?;
        Ok(out.play)
    };
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(one).collect()
    }
}

/// Initial tapestry holding a single unit-strength informon.
pub fn initial_delta(site: Site, strength: Complex64, properties: PropertyMap) -> CausalTapestry {
    let mut b = TapestryBuilder::new(0, "initial:delta");
    b.push(Informon::new(InformonId(0), ManifoldPoint::new(0, site), strength, properties));
    b.seal().expect("single informon always seals")
}

/// Initial tapestry sampled from a closed-form state and renormalized to
/// unit lattice norm.
pub fn initial_gaussian(
    state: &AnalyticState,
    domain: &Domain,
    params: &LatticeParams,
    tick: i64,
) -> Result<CausalTapestry> {
    if state.d() != params.d || domain.d() != params.d {
        return Err(Error::DimensionMismatch { expected: params.d, got: state.d() });
    }
    let mut b = TapestryBuilder::new(tick, "initial:gaussian");
    for (i, site) in domain.sites().into_iter().enumerate() {
        let value = state.psi(&site.real(params.l_p), 0.0)?;
        b.push(Informon::new(
            InformonId(i as u64),
            ManifoldPoint::new(tick, site),
            value,
            no_properties(),
        ));
    }
    let sealed = b.seal()?;
    let (normalized, _) = renormalize_tapestry(&sealed, params)?;
    Ok(normalized)
}
