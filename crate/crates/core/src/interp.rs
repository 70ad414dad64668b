//! Hilbert-space interpretations of tapestries and the set-valued covering
//! maps over sequence trees.
//!
//! A tapestry's global interpretation is the band-limited function
//! `Phi(z) = sum_n Gamma_n g(z - m_n)` built from the cardinal sinc kernel.
//! The process covering map collects one interpretation per maximal tapestry;
//! the configuration-space variant works on the admissibly extended tree and
//! sums strength products over correlated tuples.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::engine::{EdgeLabel, SequenceTree, TreeEdge, TreeNode, TreeProvenance};
use crate::error::{Error, Result};
use crate::kernel::sinc;
use crate::lattice::{LatticeParams, Site};
use crate::tapestry::{CausalTapestry, Informon, InformonId, STRENGTH_TOL};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Band-limited global interpretation: strengths of co-located informons are
/// summed per site, which determines the function exactly.
#[derive(Clone, Debug)]
pub struct GlobalInterpretation {
    pub d: usize,
    pub l_p: f64,
    pub provenance: String,
    terms: BTreeMap<Site, Complex64>,
}

impl GlobalInterpretation {
    pub fn zero(d: usize, l_p: f64) -> Self {
        GlobalInterpretation { d, l_p, provenance: "zero".into(), terms: BTreeMap::new() }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Site, &Complex64)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn strength_at(&self, site: &Site) -> Complex64 {
        self.terms.get(site).copied().unwrap_or(Complex64::ZERO)
    }

    /// Point evaluation `sum_n Gamma_n prod_axis sinc((z - site*l_p)/l_p)`.
    pub fn eval(&self, z: &[f64]) -> Result<Complex64> {
        if z.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: z.len() });
        }
        let mut acc = Complex64::ZERO;
        for (site, strength) in &self.terms {
            let mut g = 1.0;
            for (axis, &c) in site.coords().iter().enumerate() {
                g *= sinc((z[axis] - c as f64 * self.l_p) / self.l_p);
            }
            acc += strength * g;
        }
        Ok(acc)
    }

    /// Grid evaluation; data-parallel over points under the `parallel`
    /// feature. Output order matches input order on both paths.
    pub fn eval_grid(&self, points: &[Vec<f64>]) -> Result<Vec<Complex64>> {
        #[cfg(feature = "parallel")]
        {
            points.par_iter().map(|p| self.eval(p)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            points.iter().map(|p| self.eval(p)).collect()
        }
    }

    /// Sequential twin of [`Self::eval_grid`], kept for benchmarking.
    pub fn eval_grid_seq(&self, points: &[Vec<f64>]) -> Result<Vec<Complex64>> {
        points.iter().map(|p| self.eval(p)).collect()
    }

    pub fn scaled(&self, w: Complex64) -> Self {
        let terms = self.terms.iter().map(|(s, g)| (*s, w * g)).collect();
        GlobalInterpretation { d: self.d, l_p: self.l_p, provenance: self.provenance.clone(), terms }
    }

    /// Pointwise sum of two interpretations on the same lattice.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.d != other.d || self.l_p != other.l_p {
            return Err(Error::GridMismatch("interpretations on different lattices".into()));
        }
        let mut terms = self.terms.clone();
        for (site, strength) in &other.terms {
            *terms.entry(*site).or_insert(Complex64::ZERO) += strength;
        }
        Ok(GlobalInterpretation {
            d: self.d,
            l_p: self.l_p,
            provenance: format!("{} + {}", self.provenance, other.provenance),
            terms,
        })
    }

    /// Largest strength difference over the union of sites.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        let mut dev = 0.0_f64;
        for (site, strength) in &self.terms {
            let o = other.terms.get(site).copied().unwrap_or(Complex64::ZERO);
            dev = dev.max((strength - o).norm());
        }
        for (site, strength) in &other.terms {
            if !self.terms.contains_key(site) {
                dev = dev.max(strength.norm());
            }
        }
        dev
    }

    fn canonical_key(&self) -> Vec<(Site, u64, u64)> {
        self.terms
            .iter()
            .map(|(s, g)| (*s, g.re.to_bits(), g.im.to_bits()))
            .collect()
    }
}

/// Builds the global interpretation of a sealed tapestry.
pub fn interpret(t: &CausalTapestry, params: &LatticeParams) -> GlobalInterpretation {
    let mut terms: BTreeMap<Site, Complex64> = BTreeMap::new();
    for n in t.informons() {
        *terms.entry(n.point.site).or_insert(Complex64::ZERO) += n.strength;
    }
    GlobalInterpretation {
        d: params.d,
        l_p: params.l_p,
        provenance: t.provenance().to_string(),
        terms,
    }
}

/// The set `H_P`: one interpretation per maximal tapestry, duplicates
/// collapsed under set semantics.
#[derive(Clone, Debug)]
pub struct PcmResult {
    pub elements: Vec<GlobalInterpretation>,
    pub provenance: TreeProvenance,
}

impl PcmResult {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Collapses interpretations that agree within `tol` on every site.
fn dedupe(mut elements: Vec<GlobalInterpretation>, tol: f64) -> Vec<GlobalInterpretation> {
    elements.sort_by_key(|a| a.canonical_key());
    let mut out: Vec<GlobalInterpretation> = Vec::new();
    for e in elements {
        if out.iter().all(|kept| kept.max_deviation(&e) > tol) {
            out.push(e);
        }
    }
    out
}

/// The process covering map: sends a sequence tree to its set of global
/// interpretations, tagged with enumeration or sampling provenance.
pub fn pcm(tree: &SequenceTree, params: &LatticeParams) -> PcmResult {
    let elements: Vec<GlobalInterpretation> = tree
        .maximal_tapestries()
        .into_iter()
        .map(|t| interpret(t, params))
        .collect();
    PcmResult { elements: dedupe(elements, STRENGTH_TOL), provenance: tree.provenance }
}

/// Strength-vector tolerance for PCM set equality.
pub const PCM_SET_TOL: f64 = 1e-10;

/// Decidable set equality: tolerance matching over canonical strength
/// vectors. Returns the verdict and the worst matched deviation (or the
/// first unmatched one).
pub fn pcm_sets_equal(
    a: &[GlobalInterpretation],
    b: &[GlobalInterpretation],
    tol: f64,
) -> (bool, f64) {
    if a.len() != b.len() {
        return (false, f64::INFINITY);
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in a {
        let mut best: Option<(usize, f64)> = None;
        for (j, y) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let dev = x.max_deviation(y);
            if best.map(|(_, d)| dev < d).unwrap_or(true) {
                best = Some((j, dev));
            }
        }
        match best {
            Some((j, dev)) if dev <= tol => {
                used[j] = true;
                worst = worst.max(dev);
            }
            Some((_, dev)) => return (false, dev),
            None => return (false, f64::INFINITY),
        }
    }
    (true, worst)
}

/// Report of the PCM linearity comparison.
#[derive(Clone, Debug)]
pub struct LinearityReport {
    pub lhs: Vec<GlobalInterpretation>,
    pub rhs: Vec<GlobalInterpretation>,
    pub equal: bool,
    pub max_deviation: f64,
    /// On mismatch: index into `lhs` of the first element with no partner
    /// within tolerance, and its best deviation.
    pub witness: Option<(usize, f64)>,
}

/// Compares the PCM of a weighted sum against the Minkowski set-sum of the
/// weighted summand PCMs: `PCM(sum_i w_i P_i) = sum_i w_i PCM(P_i)`, with
/// `A + B = {f + g | f in A, g in B}`.
pub fn pcm_sum_linearity_check(
    mode: crate::algebra::SumMode,
    summands: &[(Complex64, crate::algebra::ProcessExpr)],
    initial: &CausalTapestry,
    ticks: usize,
    cfg: &crate::engine::GenerationConfig,
) -> Result<LinearityReport> {
    use crate::algebra::ProcessExpr;
    use crate::engine::enumerate_plays;

    let sum_expr = ProcessExpr::Sum(mode, summands.to_vec());
    let lhs = pcm(&enumerate_plays(&sum_expr, initial, ticks, cfg)?, &cfg.params).elements;

    let mut rhs = vec![GlobalInterpretation::zero(cfg.params.d, cfg.params.l_p)];
    for (w, sub) in summands {
        let part = pcm(&enumerate_plays(sub, initial, ticks, cfg)?, &cfg.params);
        let mut next = Vec::with_capacity(rhs.len() * part.elements.len());
        for acc in &rhs {
            for el in &part.elements {
                next.push(acc.add(&el.scaled(*w))?);
            }
        }
        rhs = next;
    }
    let rhs = dedupe(rhs, STRENGTH_TOL);

    let (equal, max_deviation) = pcm_sets_equal(&lhs, &rhs, PCM_SET_TOL);
    let witness = if equal {
        None
    } else {
        lhs.iter()
            .enumerate()
            .map(|(i, x)| {
                let best = rhs
                    .iter()
                    .map(|y| x.max_deviation(y))
                    .fold(f64::INFINITY, f64::min);
                (i, best)
            })
            .find(|(_, best)| *best > PCM_SET_TOL)
    };
    Ok(LinearityReport { lhs, rhs, equal, max_deviation, witness })
}

/// Splits a product tapestry into per-factor component interpretations,
/// ordered by slot. The formal co-product stays a list; components are not
/// summed pointwise.
pub fn coproduct_decompose(
    t: &CausalTapestry,
    params: &LatticeParams,
) -> Result<Vec<GlobalInterpretation>> {
    let mut by_slot: BTreeMap<Vec<u32>, Vec<&Informon>> = BTreeMap::new();
    for n in t.informons() {
        let tag = n.generator.as_ref().ok_or_else(|| {
            Error::Integrity(format!("informon {} has no generator attribution", n.id))
        })?;
        by_slot.entry(tag.slot.clone()).or_default().push(n);
    }
    Ok(by_slot
        .into_iter()
        .map(|(slot, informons)| {
            let mut terms: BTreeMap<Site, Complex64> = BTreeMap::new();
            for n in informons {
                *terms.entry(n.point.site).or_insert(Complex64::ZERO) += n.strength;
            }
            GlobalInterpretation {
                d: params.d,
                l_p: params.l_p,
                provenance: format!("{}[slot {slot:?}]", t.provenance()),
                terms,
            }
        })
        .collect())
}

/// Outcome of the admissible closure.
#[derive(Clone, Debug)]
pub struct ExtensionReport {
    pub leaves_before: usize,
    pub leaves_after: usize,
    /// Largest number of absorption steps any leaf needed to reach fixpoint.
    pub max_iterations: usize,
    pub candidate_pool: usize,
}

fn informon_key(n: &Informon) -> (Vec<u32>, Site, String, u64, u64) {
    let slot = n.generator.as_ref().map(|g| g.slot.clone()).unwrap_or_default();
    let props: Vec<String> = n.properties.iter().map(|(k, v)| format!("{k}={v}")).collect();
    (slot, n.point.site, props.join(";"), n.strength.re.to_bits(), n.strength.im.to_bits())
}

/// A candidate may extend component i of a maximal tapestry iff every
/// informon already at the same point with the same properties carries the
/// same strength. The component clause alone would admit cross-component
/// duplicates with diverging strengths (merged free-product informons carry
/// the combined strength under one slot), which no tapestry may hold:
/// strength stays a function of (point, properties).
fn admissible(current: &[Informon], candidate: &Informon) -> bool {
    for n in current {
        if n.point == candidate.point
            && n.properties == candidate.properties
            && (n.strength - candidate.strength).norm() > STRENGTH_TOL
        {
            return false;
        }
    }
    true
}

fn already_present(current: &[Informon], candidate: &Informon) -> bool {
    let c_slot = candidate.generator.as_ref().map(|g| &g.slot);
    current.iter().any(|n| {
        n.generator.as_ref().map(|g| &g.slot) == c_slot
            && n.point == candidate.point
            && n.properties == candidate.properties
            && (n.strength - candidate.strength).norm() <= STRENGTH_TOL
    })
}

/// Repeatedly extends maximal tapestries with admissible informons drawn
/// from the other paths until no further extension is possible (a closure:
/// extensive, idempotent, monotone in the pool). Mutually conflicting
/// candidates at one (slot, point, properties) branch into separate maximal
/// tapestries.
pub fn configuration_extend(tree: &SequenceTree) -> Result<(SequenceTree, ExtensionReport)> {
    let leaves = tree.maximal_tapestries();
    let leaves_before = leaves.len();

    // Candidate pool: every informon on any path, deduplicated by content.
    let mut pool: Vec<Informon> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for leaf in &leaves {
        for n in leaf.informons() {
            if seen.insert(informon_key(n)) {
                pool.push(n.clone());
            }
        }
    }
    pool.sort_by_key(informon_key);
    let candidate_pool = pool.len();

    let mut max_iterations = 0usize;
    let mut root = tree.root.clone();
    extend_node(&mut root, &pool, &mut max_iterations)?;

    let extended = SequenceTree {
        initial: tree.initial.clone(),
        expr_text: tree.expr_text.clone(),
        provenance: tree.provenance,
        root,
        product_mode: tree.product_mode,
        slots: tree.slots.clone(),
    };
    let leaves_after = extended.leaf_count();
    Ok((
        extended,
        ExtensionReport { leaves_before, leaves_after, max_iterations, candidate_pool },
    ))
}

fn extend_node(node: &mut TreeNode, pool: &[Informon], max_iter: &mut usize) -> Result<()> {
    for edge in &mut node.edges {
        extend_node(&mut edge.child, pool, max_iter)?;
    }
    let Some(leaf) = node.leaf.take() else {
        return Ok(());
    };
    let informons: Vec<Informon> = leaf.informons().to_vec();
    let original_len = informons.len();
    let mut fixpoints: Vec<Vec<Informon>> = Vec::new();
    closure(informons, pool, 0, &mut fixpoints, max_iter);

    // Deduplicate fixpoints by content.
    let mut unique: Vec<Vec<Informon>> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for fp in fixpoints {
        let mut key: Vec<_> = fp.iter().map(informon_key).collect();
        key.sort();
        if seen.insert(key) {
            unique.push(fp);
        }
    }

    if unique.len() == 1 && unique[0].len() == original_len {
        node.leaf = Some(leaf);
        return Ok(());
    }
    for fp in unique {
        let mut next_id = fp.iter().map(|n| n.id.0 + 1).max().unwrap_or(0);
        let mut builder =
            crate::tapestry::TapestryBuilder::new(leaf.tick(), format!("{}+ext", leaf.provenance()));
        let mut chain = Vec::new();
        for (i, n) in fp.iter().enumerate() {
            if i < original_len {
                builder.push(n.clone());
            } else {
                // Absorbed informons get fresh ids; their source-play ids may
                // collide with this leaf's.
                let mut fresh = n.clone();
                fresh.id = InformonId(next_id);
                next_id += 1;
                builder.push(fresh.clone());
                chain.push(fresh);
            }
        }
        let extended = builder.seal()?;
        let mut child = TreeNode { edges: Vec::new(), leaf: Some(extended) };
        for informon in chain.into_iter().rev() {
            child = TreeNode {
                edges: vec![TreeEdge { label: EdgeLabel::Absorbed(informon), child }],
                leaf: None,
            };
        }
        if child.leaf.is_some() {
            node.leaf = child.leaf;
        } else {
            node.edges.extend(child.edges);
        }
    }
    Ok(())
}

/// Depth-first closure over the candidate pool. Admissible candidates at one
/// (point, properties) location partition into strength classes: one class
/// coexists wholesale (its members may differ only in slot), different
/// classes exclude each other and branch the tree.
fn closure(
    current: Vec<Informon>,
    pool: &[Informon],
    added: usize,
    out: &mut Vec<Vec<Informon>>,
    max_iter: &mut usize,
) {
    // Termination guard: every level absorbs at least one pool informon.
    assert!(added <= pool.len(), "closure exceeded candidate pool size");
    *max_iter = (*max_iter).max(added);

    let admissible_new: Vec<&Informon> = pool
        .iter()
        .filter(|c| admissible(&current, c) && !already_present(&current, c))
        .collect();
    if admissible_new.is_empty() {
        out.push(current);
        return;
    }
    let head = admissible_new[0];
    let location: Vec<&Informon> = admissible_new
        .iter()
        .filter(|c| c.point == head.point && c.properties == head.properties)
        .copied()
        .collect();
    // Partition this location's candidates by strength class.
    let mut classes: Vec<Vec<&Informon>> = Vec::new();
    for c in location {
        match classes
            .iter_mut()
            .find(|class| (class[0].strength - c.strength).norm() <= STRENGTH_TOL)
        {
            Some(class) => class.push(c),
            None => classes.push(vec![c]),
        }
    }
    for class in classes {
        let mut next = current.clone();
        let count = class.len();
        for c in class {
            next.push(c.clone());
        }
        closure(next, pool, added + count, out, max_iter);
    }
}

/// One correlated tuple's contribution: the strength product and the tuple's
/// per-slot sites.
#[derive(Clone, Debug)]
pub struct ConfigTerm {
    pub coeff: Complex64,
    pub sites: Vec<Site>,
}

/// Symbolic configuration interpretation
/// `Phi^C(z_1..z_n) = sum_tuples Gamma_1...Gamma_n g(z_1 - m_1)...g(z_n - m_n)`,
/// stored as a term list, never as a dense configuration grid.
#[derive(Clone, Debug)]
pub struct ConfigurationInterpretation {
    pub d: usize,
    pub l_p: f64,
    pub slots: usize,
    pub terms: Vec<ConfigTerm>,
}

impl ConfigurationInterpretation {
    /// Evaluates at a configuration point: `z` concatenates the n slot
    /// arguments, each of dimension d.
    pub fn eval(&self, z: &[f64]) -> Result<Complex64> {
        if z.len() != self.slots * self.d {
            return Err(Error::DimensionMismatch { expected: self.slots * self.d, got: z.len() });
        }
        let mut acc = Complex64::ZERO;
        for term in &self.terms {
            let mut g = 1.0;
            for (j, site) in term.sites.iter().enumerate() {
                for (axis, &c) in site.coords().iter().enumerate() {
                    g *= sinc((z[j * self.d + axis] - c as f64 * self.l_p) / self.l_p);
                }
            }
            acc += term.coeff * g;
        }
        Ok(acc)
    }
}

/// Configuration interpretation together with the per-slot candidate pools
/// it was built from; the pools are the marginals of the factorization
/// check.
#[derive(Clone, Debug)]
pub struct ConfigurationInterpretationWithPools {
    pub interpretation: ConfigurationInterpretation,
    pub pools: Vec<Vec<(Site, Complex64)>>,
}

/// Configuration covering map on an admissibly extended tree. For each
/// maximal tapestry the tuple set is the cross product of per-slot pools;
/// exclusive products exclude tuples where two slots coincide in (point,
/// properties). Zero-strength tuples contribute no terms.
pub fn pcm_c(
    tree: &SequenceTree,
    n_factors: usize,
    params: &LatticeParams,
) -> Result<Vec<ConfigurationInterpretationWithPools>> {
    if n_factors == 0 {
        return Err(Error::Parameter("factor count must be at least 1".into()));
    }
    let mut out = Vec::new();
    for leaf in tree.maximal_tapestries() {
        let mut pools: BTreeMap<Vec<u32>, Vec<&Informon>> = BTreeMap::new();
        for n in leaf.informons() {
            let tag = n.generator.as_ref().ok_or_else(|| {
                Error::Integrity(format!("informon {} has no generator attribution", n.id))
            })?;
            pools.entry(tag.slot.clone()).or_default().push(n);
        }
        if pools.len() != n_factors {
            return Err(Error::Integrity(format!(
                "expected {n_factors} correlated slots, tapestry has {}",
                pools.len()
            )));
        }
        let exclusive = matches!(tree.product_mode, Some(crate::algebra::ProductMode::Exclusive));
        let pool_list: Vec<Vec<&Informon>> = pools.into_values().collect();

        let mut slot_pools: Vec<Vec<(Site, Complex64)>> = vec![Vec::new(); n_factors];
        for (j, pool) in pool_list.iter().enumerate() {
            let mut seen = std::collections::BTreeSet::new();
            for n in pool {
                if seen.insert((n.point.site, n.strength.re.to_bits(), n.strength.im.to_bits())) {
                    slot_pools[j].push((n.point.site, n.strength));
                }
            }
        }

        let mut terms: Vec<ConfigTerm> = Vec::new();
        let mut tuple = vec![0usize; n_factors];
        'outer: loop {
            let chosen: Vec<&Informon> =
                tuple.iter().enumerate().map(|(j, &i)| pool_list[j][i]).collect();
            let excluded = exclusive
                && chosen.iter().enumerate().any(|(a, x)| {
                    chosen
                        .iter()
                        .skip(a + 1)
                        .any(|y| x.point == y.point && x.properties == y.properties)
                });
            if !excluded {
                let coeff: Complex64 = chosen.iter().map(|n| n.strength).product();
                if coeff != Complex64::ZERO {
                    terms.push(ConfigTerm {
                        coeff,
                        sites: chosen.iter().map(|n| n.point.site).collect(),
                    });
                }
            }
            for j in (0..n_factors).rev() {
                tuple[j] += 1;
                if tuple[j] < pool_list[j].len() {
                    continue 'outer;
                }
                tuple[j] = 0;
                if j == 0 {
                    break 'outer;
                }
            }
        }
        terms.sort_by(|a, b| a.sites.cmp(&b.sites));
        out.push(ConfigurationInterpretationWithPools {
            interpretation: ConfigurationInterpretation {
                d: params.d,
                l_p: params.l_p,
                slots: n_factors,
                terms,
            },
            pools: slot_pools,
        });
    }
    Ok(out)
}

/// Residual tolerance under which a configuration interpretation counts as
/// factorized.
pub const FACTORIZATION_TOL: f64 = 1e-10;

/// Numerically compares the configuration interpretation against the product
/// of single-slot marginal sums on a probe grid. Returns (factorizes,
/// residual): with no excluded tuples the two agree identically; any missing
/// tuple shows up as a nonzero residual.
pub fn factorization_check(
    ci: &ConfigurationInterpretationWithPools,
    probe: &[Vec<f64>],
) -> Result<(bool, f64)> {
    let interp = &ci.interpretation;
    let mut residual = 0.0_f64;
    for z in probe {
        let lhs = interp.eval(z)?;
        let mut rhs = Complex64::new(1.0, 0.0);
        for (j, pool) in ci.pools.iter().enumerate() {
            let mut marginal = Complex64::ZERO;
            for (site, strength) in pool {
                let mut g = 1.0;
                for (axis, &c) in site.coords().iter().enumerate() {
                    g *= sinc((z[j * interp.d + axis] - c as f64 * interp.l_p) / interp.l_p);
                }
                marginal += strength * g;
            }
            rhs *= marginal;
        }
        residual = residual.max((lhs - rhs).norm());
    }
    Ok((residual < FACTORIZATION_TOL, residual))
}

/// Default probe grid: cross product over configuration axes of each slot's
/// pool coordinates plus half-cell offsets. `per_axis` caps the values kept
/// per axis so the grid stays small.
pub fn default_probe(ci: &ConfigurationInterpretationWithPools, per_axis: usize) -> Vec<Vec<f64>> {
    let interp = &ci.interpretation;
    let mut per_slot_axes: Vec<Vec<f64>> = Vec::new();
    for pool in &ci.pools {
        for axis in 0..interp.d {
            let mut vals: Vec<f64> = pool
                .iter()
                .flat_map(|(s, _)| {
                    let c = s.coords()[axis] as f64 * interp.l_p;
                    [c, c + 0.5 * interp.l_p]
                })
                .collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            vals.truncate(per_axis.max(1));
            per_slot_axes.push(vals);
        }
    }
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis_vals in &per_slot_axes {
        let mut next = Vec::with_capacity(points.len() * axis_vals.len());
        for p in &points {
            for &v in axis_vals {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        points = next;
    }
    points
}
