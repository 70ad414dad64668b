//! Informons and causal tapestries.
//!
//! A tapestry is the model's "now": a finite antichain of informons at one
//! tick. Tapestries are immutable once sealed; construction goes through
//! [`TapestryBuilder`], which enforces the structural invariants.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{causal_distance, LatticeParams, ManifoldPoint};

/// Discrete property tags inherited from the generating process.
/// Shared behind an `Arc` because every informon of a primitive carries
/// the same map.
pub type PropertyMap = Arc<BTreeMap<String, String>>;

pub fn properties<I, K, V>(entries: I) -> PropertyMap
where
    I: IntoIterator<Item = (K, V)>,
    K: Into<String>,
    V: Into<String>,
{
    Arc::new(entries.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
}

pub fn no_properties() -> PropertyMap {
    Arc::new(BTreeMap::new())
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct InformonId(pub u64);

impl std::fmt::Display for InformonId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which subprocess emitted an informon: the flattened product-slot path
/// (empty for a bare primitive) plus the primitive's name.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GeneratorTag {
    pub slot: Vec<u32>,
    pub primitive: String,
}

impl GeneratorTag {
    pub fn new(slot: Vec<u32>, primitive: impl Into<String>) -> Self {
        GeneratorTag { slot, primitive: primitive.into() }
    }

    pub fn slot_key(&self) -> String {
        let parts: Vec<String> = self.slot.iter().map(|s| s.to_string()).collect();
        parts.join(".")
    }
}

impl std::fmt::Display for GeneratorTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.slot.is_empty() {
            write!(f, "{}", self.primitive)
        } else {
            write!(f, "{}:{}", self.slot_key(), self.primitive)
        }
    }
}

/// Reference to a prior informon whose information flowed into this one.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ContentRef {
    pub id: InformonId,
    pub point: ManifoldPoint,
}

/// The primitive generated event: a space-time point, a complex strength,
/// property tags, and the causal content set.
#[derive(Clone, Debug)]
pub struct Informon {
    pub id: InformonId,
    pub point: ManifoldPoint,
    pub strength: Complex64,
    pub properties: PropertyMap,
    pub content: Vec<ContentRef>,
    pub generator: Option<GeneratorTag>,
}

impl Informon {
    pub fn new(
        id: InformonId,
        point: ManifoldPoint,
        strength: Complex64,
        properties: PropertyMap,
    ) -> Self {
        Informon { id, point, strength, properties, content: Vec::new(), generator: None }
    }

    pub fn with_content(mut self, content: Vec<ContentRef>) -> Self {
        self.content = content;
        self
    }

    pub fn with_generator(mut self, generator: GeneratorTag) -> Self {
        self.generator = Some(generator);
        self
    }
}

/// Strength agreement tolerance for co-located informons and admissibility
/// matching. Strengths produced by identical deterministic propagation agree
/// bit-exactly; the tolerance only absorbs summation-order noise.
pub const STRENGTH_TOL: f64 = 1e-12;

/// A finite antichain of informons at a single tick.
#[derive(Clone, Debug)]
pub struct CausalTapestry {
    tick: i64,
    informons: Vec<Informon>,
    provenance: String,
}

impl CausalTapestry {
    pub fn empty(tick: i64, provenance: impl Into<String>) -> Self {
        CausalTapestry { tick, informons: Vec::new(), provenance: provenance.into() }
    }

    pub fn tick(&self) -> i64 {
        self.tick
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn informons(&self) -> &[Informon] {
        &self.informons
    }

    pub fn len(&self) -> usize {
        self.informons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.informons.is_empty()
    }

    pub fn get(&self, id: InformonId) -> Option<&Informon> {
        self.informons.iter().find(|n| n.id == id)
    }

    /// Lattice L2 norm squared: sum |strength|^2 * l_p^d.
    pub fn norm_sq(&self, params: &LatticeParams) -> f64 {
        let cell = params.l_p.powi(params.d as i32);
        self.informons.iter().map(|n| n.strength.norm_sqr() * cell).sum()
    }

    /// Scale every strength in place. Used by renormalization.
    pub(crate) fn scale_strengths(&mut self, factor: f64) {
        for n in &mut self.informons {
            n.strength *= factor;
        }
    }

    /// Content-identity key, ignoring ids: sorted (point, properties,
    /// strength bits, slot). Two tapestries generated along different play
    /// orders collapse to the same key.
    pub fn content_key(&self) -> Vec<(ManifoldPoint, String, u64, u64, String)> {
        let mut key: Vec<_> = self
            .informons
            .iter()
            .map(|n| {
                let props: Vec<String> =
                    n.properties.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let slot = n.generator.as_ref().map(|g| g.slot_key()).unwrap_or_default();
                (
                    n.point,
                    props.join(";"),
                    n.strength.re.to_bits(),
                    n.strength.im.to_bits(),
                    slot,
                )
            })
            .collect();
        key.sort_by(|a, b| {
            (a.0.tick, a.0.site, &a.1, a.2, a.3, &a.4).cmp(&(b.0.tick, b.0.site, &b.1, b.2, b.3, &b.4))
        });
        key
    }
}

/// Incremental construction with invariant checks at seal time.
pub struct TapestryBuilder {
    tick: i64,
    provenance: String,
    informons: Vec<Informon>,
}

impl TapestryBuilder {
    pub fn new(tick: i64, provenance: impl Into<String>) -> Self {
        TapestryBuilder { tick, provenance: provenance.into(), informons: Vec::new() }
    }

    pub fn push(&mut self, informon: Informon) {
        self.informons.push(informon);
    }

    pub fn informons(&self) -> &[Informon] {
        &self.informons
    }

    pub fn informons_mut(&mut self) -> &mut [Informon] {
        &mut self.informons
    }

    /// Validates: uniform tick, unique ids, content ticks strictly earlier,
    /// and no (point, properties) pair carrying two different strengths.
    pub fn seal(self) -> Result<CausalTapestry> {
        let mut ids = std::collections::HashSet::new();
        for n in &self.informons {
            if n.point.tick != self.tick {
                return Err(Error::Integrity(format!(
                    "informon {} has tick {}, tapestry tick is {}",
                    n.id, n.point.tick, self.tick
                )));
            }
            if !ids.insert(n.id) {
                return Err(Error::Integrity(format!("duplicate informon id {}", n.id)));
            }
            for c in &n.content {
                if c.point.tick >= self.tick {
                    return Err(Error::Integrity(format!(
                        "informon {} has content at tick {} not prior to {}",
                        n.id, c.point.tick, self.tick
                    )));
                }
            }
        }
        // Duplicate (point, properties) with conflicting strengths is a
        // construction error: strength must be a function of (point, properties).
        let mut by_location: BTreeMap<(ManifoldPoint, Vec<(String, String)>), Complex64> =
            BTreeMap::new();
        for n in &self.informons {
            let props: Vec<(String, String)> =
                n.properties.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
            let key = (n.point, props);
            if let Some(prev) = by_location.get(&key) {
                if (prev - n.strength).norm() > STRENGTH_TOL {
                    return Err(Error::Integrity(format!(
                        "conflicting strengths at point {:?}: {} vs {}",
                        n.point, prev, n.strength
                    )));
                }
            } else {
                by_location.insert(key, n.strength);
            }
        }
        let mut informons = self.informons;
        informons.sort_by_key(|n| n.id);
        Ok(CausalTapestry { tick: self.tick, informons, provenance: self.provenance })
    }
}

/// True iff all distinct pairs are space-like separated. Pairs at the very
/// same lattice point are exempt: free and exclusive combinators may place
/// several informons on one point, and a point cannot be causally ordered
/// against itself.
pub fn verify_antichain(t: &CausalTapestry, params: &LatticeParams) -> bool {
    let ns = t.informons();
    for (i, a) in ns.iter().enumerate() {
        for b in &ns[i + 1..] {
            if a.point == b.point {
                continue;
            }
            match causal_distance(&a.point, &b.point, params) {
                Ok(rho) if rho < 0.0 => {}
                _ => return false,
            }
        }
    }
    true
}

/// Checks that every content edge is time-like or null and resolves in the
/// prior tapestry. A dangling reference is an integrity error; a space-like
/// edge yields `Ok(false)`.
pub fn verify_content_causality(
    t: &CausalTapestry,
    prior: &CausalTapestry,
    params: &LatticeParams,
) -> Result<bool> {
    if prior.tick() >= t.tick() {
        return Err(Error::Integrity(format!(
            "prior tick {} does not precede tapestry tick {}",
            prior.tick(),
            t.tick()
        )));
    }
    // Float guard for edges exactly on the cone: the null interval may land
    // a few ulps below zero.
    let tol = 1e-9 * (params.c_hat * params.tau).powi(2).max(1.0);
    for n in t.informons() {
        for c in &n.content {
            let source = prior.get(c.id).ok_or_else(|| {
                Error::Integrity(format!("dangling content reference {} in informon {}", c.id, n.id))
            })?;
            if source.point != c.point {
                return Err(Error::Integrity(format!(
                    "content reference {} disagrees with prior point",
                    c.id
                )));
            }
            let rho = causal_distance(&n.point, &c.point, params)?;
            if rho < -tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
