//! Exhaustive enumeration of the process sequence tree.
//!
//! Every nondeterministic choice (site selection, summand order) becomes a
//! branch; leaves carry complete final tapestries. The play space must fit
//! the configured budget, otherwise enumeration refuses explicitly.

use num_complex::Complex64;

use crate::algebra::{ProcessExpr, ProductMode, ONE};
use crate::error::{Error, Result};
use crate::kernel::renormalize_tapestry;
use crate::lattice::Site;
use crate::tapestry::{CausalTapestry, Informon, TapestryBuilder};

use super::plan::{
    classify, emit, node_remaining, CollisionOutcome, Plan, PlanKind, RoundCtx, RoundState,
};
use super::{GenerationConfig, Regime};

pub const DEFAULT_BUDGET_LEAVES: usize = 10_000;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TreeProvenance {
    /// Complete enumeration of the play space.
    Enumerated,
    /// Built from sampled plays; the leaf set is not exhaustive.
    Sampled,
}

#[derive(Clone, Debug)]
pub enum EdgeLabel {
    /// Correlated set emitted in one short round (singleton for primitives
    /// and sums).
    Batch(Vec<Informon>),
    /// Admissible informon absorbed during configuration extension.
    Absorbed(Informon),
}

#[derive(Clone, Debug)]
pub struct TreeEdge {
    pub label: EdgeLabel,
    pub child: TreeNode,
}

#[derive(Clone, Debug, Default)]
pub struct TreeNode {
    pub edges: Vec<TreeEdge>,
    /// Sealed final tapestry at maximal nodes.
    pub leaf: Option<CausalTapestry>,
}

/// The process sequence tree: root is the empty partial tapestry, every
/// root-to-leaf path is a valid play, and maximal leaves carry complete
/// tapestries.
#[derive(Clone, Debug)]
pub struct SequenceTree {
    pub initial: CausalTapestry,
    pub expr_text: String,
    pub provenance: TreeProvenance,
    pub root: TreeNode,
    /// Mode of the outermost product, when the expression is a product.
    pub product_mode: Option<ProductMode>,
    /// Canonical slot keys (flattened factor positions).
    pub slots: Vec<String>,
}

impl SequenceTree {
    pub fn maximal_tapestries(&self) -> Vec<&CausalTapestry> {
        let mut out = Vec::new();
        collect_leaves(&self.root, &mut out);
        out
    }

    pub fn leaf_count(&self) -> usize {
        self.maximal_tapestries().len()
    }

    /// Linear-chain tree from realized plays. Used for sampled provenance
    /// and for synthetic instances in tests.
    pub fn from_plays(
        initial: CausalTapestry,
        expr: &ProcessExpr,
        plays: &[super::Play],
    ) -> Result<SequenceTree> {
        let plan = Plan::build(expr)?;
        let mut root = TreeNode::default();
        for play in plays {
            let mut batches: Vec<Vec<Informon>> = Vec::new();
            let mut last_step = None;
            for event in &play.events {
                if let super::PlayEvent::Emit { step, informon, .. } = event {
                    if last_step != Some(*step) {
                        batches.push(Vec::new());
                        last_step = Some(*step);
                    }
                    batches.last_mut().unwrap().push(informon.clone());
                }
            }
            let mut node = TreeNode { edges: Vec::new(), leaf: Some(play.final_tapestry.clone()) };
            for batch in batches.into_iter().rev() {
                node = TreeNode {
                    edges: vec![TreeEdge { label: EdgeLabel::Batch(batch), child: node }],
                    leaf: None,
                };
            }
            root.edges.extend(node.edges);
            if root.edges.is_empty() {
                // Play with no emissions: the root itself is maximal.
                root.leaf = node.leaf;
            }
        }
        Ok(SequenceTree {
            initial,
            expr_text: expr.to_string(),
            provenance: TreeProvenance::Sampled,
            root,
            product_mode: plan.root_product_mode,
            slots: plan.slot_keys(),
        })
    }
}

fn collect_leaves<'a>(node: &'a TreeNode, out: &mut Vec<&'a CausalTapestry>) {
    if let Some(t) = &node.leaf {
        out.push(t);
    }
    for edge in &node.edges {
        collect_leaves(&edge.child, out);
    }
}

struct Enumerator<'a> {
    cfg: &'a GenerationConfig,
    expr: &'a ProcessExpr,
    budget: usize,
    leaves: usize,
    expansions: usize,
}

/// Exhaustively enumerates all plays of `expr` over `ticks` generations.
pub fn enumerate_plays(
    expr: &ProcessExpr,
    initial: &CausalTapestry,
    ticks: usize,
    cfg: &GenerationConfig,
) -> Result<SequenceTree> {
    cfg.validate()?;
    if ticks == 0 {
        return Err(Error::Parameter("ticks must be at least 1".into()));
    }
    let plan = Plan::build(expr)?;
    let budget = if cfg.budget_leaves == 0 { DEFAULT_BUDGET_LEAVES } else { cfg.budget_leaves };
    let mut driver = Enumerator { cfg, expr, budget, leaves: 0, expansions: 0 };
    let next_id = initial.informons().iter().map(|n| n.id.0 + 1).max().unwrap_or(0);
    let root = driver.enum_tick(initial.clone(), ticks, next_id)?;
    Ok(SequenceTree {
        initial: initial.clone(),
        expr_text: expr.to_string(),
        provenance: TreeProvenance::Enumerated,
        root,
        product_mode: plan.root_product_mode,
        slots: plan.slot_keys(),
    })
}

impl Enumerator<'_> {
    fn enum_tick(&mut self, prior: CausalTapestry, ticks_left: usize, next_id: u64) -> Result<TreeNode> {
        if ticks_left == 0 {
            self.leaves += 1;
            if self.leaves > self.budget {
                return Err(Error::Budget { what: "maximal tapestries".into(), bound: self.budget });
            }
            return Ok(TreeNode { edges: Vec::new(), leaf: Some(prior) });
        }
        let plan = Plan::build(self.expr)?;
        let (ctx, state) = RoundCtx::prepare(&plan, self.cfg, &prior, next_id)?;
        self.enum_steps(&ctx, state, ticks_left)
    }

    fn enum_steps(
        &mut self,
        ctx: &RoundCtx<'_>,
        state: RoundState,
        ticks_left: usize,
    ) -> Result<TreeNode> {
        self.expansions += 1;
        if self.expansions > self.budget.saturating_mul(64) {
            return Err(Error::Budget {
                what: "tree expansions".into(),
                bound: self.budget.saturating_mul(64),
            });
        }
        if node_remaining(ctx.plan, &state, ctx.plan.root) == 0 {
            let provenance = format!("expr={};tick={}", self.expr, ctx.tick);
            let mut builder = TapestryBuilder::new(ctx.tick, provenance);
            for e in &state.emitted {
                builder.push(e.informon.clone());
            }
            let sealed = builder.seal()?;
            let tapestry = if self.cfg.renormalize && !sealed.is_empty() {
                renormalize_tapestry(&sealed, &self.cfg.params)?.0
            } else {
                sealed
            };
            return self.enum_tick(tapestry, ticks_left - 1, state.next_id);
        }
        let choices = self.step_choices(ctx, &state, ctx.plan.root, ONE)?;
        let mut edges = Vec::with_capacity(choices.len());
        for (batch, mut child_state) in choices {
            child_state.step += 1;
            let child = self.enum_steps(ctx, child_state, ticks_left)?;
            if child.edges.is_empty() && child.leaf.is_none() {
                continue; // dead branch: no admissible continuation
            }
            edges.push(TreeEdge { label: EdgeLabel::Batch(batch), child });
        }
        Ok(TreeNode { edges, leaf: None })
    }

    /// All possible outcomes of one short round below `node`.
    fn step_choices(
        &mut self,
        ctx: &RoundCtx<'_>,
        state: &RoundState,
        node: usize,
        weight: Complex64,
    ) -> Result<Vec<(Vec<Informon>, RoundState)>> {
        match ctx.plan.nodes[node].kind.clone() {
            PlanKind::Zero => Ok(Vec::new()),
            PlanKind::Primitive { .. } => {
                let sites: Vec<Site> = match ctx.cfg.regime {
                    Regime::Exhaustive => vec![ctx.sites[state.cursor[node]]],
                    Regime::Sampled => ctx
                        .sites
                        .iter()
                        .filter(|s| !state.used[node].contains(s))
                        .filter(|s| {
                            let strength =
                                weight * ctx.strengths[&node][ctx.site_index(s)];
                            !matches!(
                                classify(state, ctx, node, **s, strength),
                                CollisionOutcome::Excluded
                            )
                        })
                        .copied()
                        .collect(),
                };
                let mut out = Vec::with_capacity(sites.len());
                for site in sites {
                    let mut st = state.clone();
                    if ctx.cfg.regime == Regime::Exhaustive {
                        st.cursor[node] += 1;
                    }
                    let idx = emit(&mut st, ctx, node, site, weight)?;
                    let snapshot = st.emitted[idx].informon.clone();
                    out.push((vec![snapshot], st));
                }
                Ok(out)
            }
            PlanKind::Sum { terms, .. } => {
                let mut out = Vec::new();
                for (w, child) in terms {
                    if node_remaining(ctx.plan, state, child) > 0 {
                        out.extend(self.step_choices(ctx, state, child, weight * w)?);
                    }
                }
                Ok(out)
            }
            PlanKind::Product { factors, .. } => {
                let mut acc: Vec<(Vec<Informon>, RoundState)> = vec![(Vec::new(), state.clone())];
                for f in factors {
                    if node_remaining(ctx.plan, state, f) == 0 {
                        continue;
                    }
                    let mut next = Vec::new();
                    for (batch, st) in &acc {
                        for (sub_batch, st2) in self.step_choices(ctx, st, f, weight)? {
                            let mut merged = batch.clone();
                            merged.extend(sub_batch);
                            next.push((merged, st2));
                        }
                    }
                    acc = next;
                }
                Ok(acc)
            }
        }
    }
}
