//! Compiled view of a process expression for one round of generation,
//! plus the shared emission/collision machinery used by both the sampled
//! executor and the exhaustive enumerator.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::{PrimitiveSpec, ProcessExpr, ProductMode, SumMode};
use crate::error::{Error, Result};
use crate::kernel::{propagate_block, GreensFunction};
use crate::lattice::{ManifoldPoint, Site};
use crate::tapestry::{CausalTapestry, ContentRef, GeneratorTag, Informon, InformonId, STRENGTH_TOL};

use super::play::PlayEvent;
use super::{GenerationConfig, Regime};

#[derive(Clone, Debug)]
pub(crate) enum PlanKind {
    Zero,
    Primitive { spec: Arc<PrimitiveSpec>, slot: Vec<u32> },
    Sum { mode: SumMode, terms: Vec<(Complex64, usize)> },
    Product { mode: ProductMode, factors: Vec<usize> },
}

#[derive(Clone, Debug)]
pub(crate) struct PlanNode {
    pub kind: PlanKind,
    /// Node ids from the root down to and including this node.
    pub ancestors: Vec<usize>,
}

/// What happens when two emissions land on the same (point, properties).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum CollisionRule {
    /// Nearest common combinator is free: strengths add on one informon.
    Merge,
    /// Nearest common combinator is an exclusive sum: distinct informons may
    /// share the location provided their strengths agree.
    CoexistIfEqual,
    /// Nearest common combinator is an exclusive product: the later emission
    /// must move elsewhere.
    Exclude,
}

#[derive(Debug)]
pub(crate) struct Plan {
    pub nodes: Vec<PlanNode>,
    pub root: usize,
    /// Plan ids of all primitive nodes, in emission order.
    pub primitives: Vec<usize>,
    /// Collision rule per (primitive plan id, primitive plan id).
    rules: HashMap<(usize, usize), CollisionRule>,
    /// Root product mode, when the root (after weight wrappers) is a product.
    pub root_product_mode: Option<ProductMode>,
}

impl Plan {
    pub fn build(expr: &ProcessExpr) -> Result<Plan> {
        let mut nodes = Vec::new();
        let root = Self::add(expr, &mut nodes, Vec::new(), Vec::new())?;
        let primitives: Vec<usize> = nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n.kind, PlanKind::Primitive { .. }))
            .map(|(i, _)| i)
            .collect();

        let mut rules = HashMap::new();
        for &a in &primitives {
            for &b in &primitives {
                if a == b {
                    continue;
                }
                let pa = &nodes[a].ancestors;
                let pb = &nodes[b].ancestors;
                let mut common = 0;
                for (x, y) in pa.iter().zip(pb.iter()) {
                    if x == y {
                        common = *x;
                    } else {
                        break;
                    }
                }
                let rule = match &nodes[common].kind {
                    PlanKind::Sum { mode: SumMode::Free, .. } => CollisionRule::Merge,
                    PlanKind::Sum { mode: SumMode::Exclusive, .. } => CollisionRule::CoexistIfEqual,
                    PlanKind::Product { mode: ProductMode::Free, .. } => CollisionRule::Merge,
                    PlanKind::Product { mode: ProductMode::Exclusive, .. } => CollisionRule::Exclude,
                    _ => CollisionRule::CoexistIfEqual,
                };
                rules.insert((a, b), rule);
            }
        }

        let root_product_mode = find_root_product_mode(&nodes, root);
        Ok(Plan { nodes, root, primitives, rules, root_product_mode })
    }

    fn add(
        expr: &ProcessExpr,
        nodes: &mut Vec<PlanNode>,
        path: Vec<usize>,
        slot: Vec<u32>,
    ) -> Result<usize> {
        let id = nodes.len();
        let mut ancestors = path;
        ancestors.push(id);
        // Reserve the node; fill the kind after children are known.
        nodes.push(PlanNode { kind: PlanKind::Zero, ancestors: ancestors.clone() });
        let kind = match expr {
            ProcessExpr::Zero => PlanKind::Zero,
            ProcessExpr::Primitive(spec) => {
                PlanKind::Primitive { spec: spec.clone(), slot: slot.clone() }
            }
            ProcessExpr::Sum(mode, terms) => {
                let mut compiled = Vec::with_capacity(terms.len());
                for (w, sub) in terms {
                    let child = Self::add(sub, nodes, ancestors.clone(), slot.clone())?;
                    compiled.push((*w, child));
                }
                PlanKind::Sum { mode: *mode, terms: compiled }
            }
            ProcessExpr::Product(mode, factors) => {
                let mut compiled = Vec::with_capacity(factors.len());
                for (i, f) in factors.iter().enumerate() {
                    let mut child_slot = slot.clone();
                    child_slot.push(i as u32);
                    let child = Self::add(f, nodes, ancestors.clone(), child_slot)?;
                    compiled.push(child);
                }
                PlanKind::Product { mode: *mode, factors: compiled }
            }
            ProcessExpr::Concat(_) => return Err(Error::UnsupportedGeneration),
        };
        nodes[id].kind = kind;
        Ok(id)
    }

    pub fn rule(&self, a: usize, b: usize) -> CollisionRule {
        if a == b {
            // A primitive never collides with itself: site selection keeps
            // its own targets distinct.
            return CollisionRule::Exclude;
        }
        *self.rules.get(&(a, b)).expect("rule table covers all primitive pairs")
    }

    pub fn slot_of(&self, prim: usize) -> &[u32] {
        match &self.nodes[prim].kind {
            PlanKind::Primitive { slot, .. } => slot,
            _ => unreachable!("not a primitive node"),
        }
    }

    pub fn spec_of(&self, prim: usize) -> &Arc<PrimitiveSpec> {
        match &self.nodes[prim].kind {
            PlanKind::Primitive { spec, .. } => spec,
            _ => unreachable!("not a primitive node"),
        }
    }

    /// Canonical slot keys of the expression, sorted.
    pub fn slot_keys(&self) -> Vec<String> {
        let mut keys: Vec<String> = self
            .primitives
            .iter()
            .map(|&p| slot_key(self.slot_of(p)))
            .collect();
        keys.sort();
        keys.dedup();
        keys
    }
}

pub(crate) fn slot_key(slot: &[u32]) -> String {
    slot.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(".")
}

/// Mode of the outermost product, looking through single-term sum wrappers
/// (scale wrappers). `None` when the expression has no product spine.
fn find_root_product_mode(nodes: &[PlanNode], root: usize) -> Option<ProductMode> {
    match &nodes[root].kind {
        PlanKind::Product { mode, .. } => Some(*mode),
        PlanKind::Sum { terms, .. } if terms.len() == 1 => {
            find_root_product_mode(nodes, terms[0].1)
        }
        _ => None,
    }
}

/// One emitted informon plus the primitive that produced it.
#[derive(Clone, Debug)]
pub(crate) struct Emitted {
    pub informon: Informon,
    pub prim: usize,
}

/// Mutable state of one round. Cloneable so the enumerator can branch.
#[derive(Clone, Debug)]
pub(crate) struct RoundState {
    pub remaining: Vec<usize>,
    pub cursor: Vec<usize>,
    pub used: Vec<std::collections::BTreeSet<Site>>,
    pub emitted: Vec<Emitted>,
    pub by_location: HashMap<(Site, String), Vec<usize>>,
    pub next_id: u64,
    pub step: u32,
    pub events: Vec<PlayEvent>,
}

/// Immutable per-round context: precomputed strength rows and content sets.
pub(crate) struct RoundCtx<'a> {
    pub plan: &'a Plan,
    pub cfg: &'a GenerationConfig,
    pub tick: i64,
    pub sites: Vec<Site>,
    /// Unweighted propagated strength per (primitive plan id -> site index).
    pub strengths: HashMap<usize, Vec<Complex64>>,
    /// Content references per site index, shared across primitives.
    pub contents: Option<Vec<Vec<ContentRef>>>,
}

impl<'a> RoundCtx<'a> {
    pub fn prepare(
        plan: &'a Plan,
        cfg: &'a GenerationConfig,
        prior: &CausalTapestry,
        next_id: u64,
    ) -> Result<(RoundCtx<'a>, RoundState)> {
        let tick = prior.tick() + 1;
        let sites = cfg.domain.sites();

        let mut strengths = HashMap::new();
        for &p in &plan.primitives {
            let spec = plan.spec_of(p);
            let kernel = match &spec.kernel {
                crate::algebra::KernelKind::Free => GreensFunction::Free,
                crate::algebra::KernelKind::Tabulated(t) => GreensFunction::Tabulated(t.clone()),
            };
            let row = propagate_block(&sites, tick, prior, &kernel, &cfg.params)?;
            strengths.insert(p, row);
        }

        let contents = if cfg.record_content {
            Some(
                sites
                    .iter()
                    .map(|s| {
                        let point = ManifoldPoint::new(tick, *s);
                        crate::kernel::lightcone_sources(&point, prior, &cfg.params)
                            .into_iter()
                            .map(|n| ContentRef { id: n.id, point: n.point })
                            .collect()
                    })
                    .collect(),
            )
        } else {
            None
        };

        let n_nodes = plan.nodes.len();
        let mut remaining = vec![0usize; n_nodes];
        for &p in &plan.primitives {
            let n = match cfg.regime {
                Regime::Exhaustive => sites.len(),
                Regime::Sampled => plan.spec_of(p).per_round.unwrap_or(cfg.n_per_round),
            };
            if n > sites.len() {
                return Err(Error::Capacity(format!(
                    "primitive {} wants {} emissions on a {}-site domain",
                    plan.spec_of(p).name,
                    n,
                    sites.len()
                )));
            }
            remaining[p] = n;
        }

        let state = RoundState {
            remaining,
            cursor: vec![0; n_nodes],
            used: vec![Default::default(); n_nodes],
            emitted: Vec::new(),
            by_location: HashMap::new(),
            next_id,
            step: 0,
            events: Vec::new(),
        };
        Ok((
            RoundCtx { plan, cfg, tick, sites, strengths, contents },
            state,
        ))
    }

    pub fn site_index(&self, site: &Site) -> usize {
        self.cfg.domain.site_index(site).expect("site inside domain")
    }
}

/// Steps left below a node.
pub(crate) fn node_remaining(plan: &Plan, state: &RoundState, node: usize) -> usize {
    match &plan.nodes[node].kind {
        PlanKind::Zero => 0,
        PlanKind::Primitive { .. } => state.remaining[node],
        PlanKind::Sum { terms, .. } => {
            terms.iter().map(|(_, c)| node_remaining(plan, state, *c)).sum()
        }
        PlanKind::Product { factors, .. } => factors
            .iter()
            .map(|c| node_remaining(plan, state, *c))
            .max()
            .unwrap_or(0),
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum CollisionOutcome {
    New,
    MergeInto(usize),
    Excluded,
}

/// Classifies what emitting `strength` at `(site, properties of prim)` would
/// do, given everything emitted so far this round.
pub(crate) fn classify(
    state: &RoundState,
    ctx: &RoundCtx<'_>,
    prim: usize,
    site: Site,
    strength: Complex64,
) -> CollisionOutcome {
    let key = (site, ctx.plan.spec_of(prim).prop_key().to_string());
    let Some(existing) = state.by_location.get(&key) else {
        return CollisionOutcome::New;
    };
    let mut merge_target = None;
    for &idx in existing {
        match ctx.plan.rule(prim, state.emitted[idx].prim) {
            CollisionRule::Exclude => return CollisionOutcome::Excluded,
            CollisionRule::Merge => {
                if merge_target.is_none() {
                    merge_target = Some(idx);
                }
            }
            CollisionRule::CoexistIfEqual => {}
        }
    }
    if let Some(idx) = merge_target {
        return CollisionOutcome::MergeInto(idx);
    }
    // All co-existence candidates: require strength agreement, otherwise the
    // tapestry invariant (strength is a function of point and properties)
    // would break at seal time.
    for &idx in existing {
        if (state.emitted[idx].informon.strength - strength).norm() > STRENGTH_TOL {
            return CollisionOutcome::Excluded;
        }
    }
    CollisionOutcome::New
}

/// Applies an emission decided by `classify`. Returns the index into
/// `state.emitted` holding the result.
pub(crate) fn emit(
    state: &mut RoundState,
    ctx: &RoundCtx<'_>,
    prim: usize,
    site: Site,
    weight: Complex64,
) -> Result<usize> {
    let site_idx = ctx.site_index(&site);
    let strength = weight * ctx.strengths[&prim][site_idx];
    let outcome = classify(state, ctx, prim, site, strength);
    let spec = ctx.plan.spec_of(prim);
    let generator = GeneratorTag::new(ctx.plan.slot_of(prim).to_vec(), spec.name.clone());
    match outcome {
        CollisionOutcome::Excluded => Err(Error::Capacity(format!(
            "forced emission of {} at site {} collides exclusively",
            spec.name, site
        ))),
        CollisionOutcome::MergeInto(idx) => {
            state.emitted[idx].informon.strength += strength;
            state.used[prim].insert(site);
            state.remaining[prim] -= 1;
            state.events.push(PlayEvent::Merge {
                step: state.step,
                subprocess: generator.to_string(),
                into: state.emitted[idx].informon.id,
                delta: strength,
            });
            Ok(idx)
        }
        CollisionOutcome::New => {
            let id = InformonId(state.next_id);
            state.next_id += 1;
            let mut informon = Informon::new(
                id,
                ManifoldPoint::new(ctx.tick, site),
                strength,
                spec.properties.clone(),
            )
            .with_generator(generator.clone());
            if let Some(contents) = &ctx.contents {
                informon.content = contents[site_idx].clone();
            }
            let idx = state.emitted.len();
            state.emitted.push(Emitted { informon: informon.clone(), prim });
            state
                .by_location
                .entry((site, spec.prop_key().to_string()))
                .or_default()
                .push(idx);
            state.used[prim].insert(site);
            state.remaining[prim] -= 1;
            state.events.push(PlayEvent::Emit {
                step: state.step,
                subprocess: generator.to_string(),
                informon,
            });
            Ok(idx)
        }
    }
}
