//! Process expressions and the algebraic operations over them.
//!
//! Sums and products are Abelian and normalize to a canonically sorted form;
//! concatenation is ordered and carries no generation semantics here (it
//! models interaction outcomes, which are out of scope). Scalar weights live
//! on sum terms and act on informon strengths at generation time.

pub mod parser;

use std::cmp::Ordering;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::KernelTable;
use crate::tapestry::{no_properties, PropertyMap};

pub use parser::{parse_expr, PrimitiveTable};

/// Sequential composition: one subprocess acts per short round.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum SumMode {
    /// `(+)` - summands generate distinct informons.
    Exclusive,
    /// `(+^)` - summands may co-contribute to a shared informon's strength.
    Free,
}

/// Concurrent composition: every factor acts each short round.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum ProductMode {
    /// `(x)` - factors must generate distinct informons.
    Exclusive,
    /// `(x^)` - factors landing on the same (point, properties) merge additively.
    Free,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Statistics {
    Bosonic,
    Fermionic,
}

/// Which Green's function a primitive propagates with.
#[derive(Clone, Debug)]
pub enum KernelKind {
    Free,
    Tabulated(KernelTable),
}

/// A primitive process: emits one informon per subround (R = 1), N per round.
#[derive(Clone, Debug)]
pub struct PrimitiveSpec {
    pub name: String,
    pub kernel: KernelKind,
    pub properties: PropertyMap,
    /// Per-round emission count override; defaults to the run config's N.
    pub per_round: Option<usize>,
    prop_key: String,
}

/// Informons emitted per subround by a primitive. Structural constant.
pub const PRIMITIVE_R: usize = 1;

impl PrimitiveSpec {
    pub fn new(name: impl Into<String>, kernel: KernelKind, properties: PropertyMap) -> Arc<Self> {
        Self::with_emissions(name, kernel, properties, None)
    }

    /// Primitive with a per-round emission count overriding the run config's N.
    pub fn with_emissions(
        name: impl Into<String>,
        kernel: KernelKind,
        properties: PropertyMap,
        per_round: Option<usize>,
    ) -> Arc<Self> {
        let prop_key: String = properties
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        Arc::new(PrimitiveSpec { name: name.into(), kernel, properties, per_round, prop_key })
    }

    pub fn free(name: impl Into<String>) -> Arc<Self> {
        Self::new(name, KernelKind::Free, no_properties())
    }

    pub fn free_with(name: impl Into<String>, properties: PropertyMap) -> Arc<Self> {
        Self::new(name, KernelKind::Free, properties)
    }

    /// Canonical key for the property map, used for collision detection.
    pub fn prop_key(&self) -> &str {
        &self.prop_key
    }
}

/// Algebraic expression tree over primitive processes.
#[derive(Clone, Debug)]
pub enum ProcessExpr {
    /// The process that does nothing.
    Zero,
    Primitive(Arc<PrimitiveSpec>),
    Sum(SumMode, Vec<(Complex64, ProcessExpr)>),
    Product(ProductMode, Vec<ProcessExpr>),
    /// Ordered composition; represented and normalized but never generated.
    Concat(Vec<ProcessExpr>),
}

pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl PartialEq for ProcessExpr {
    fn eq(&self, other: &Self) -> bool {
        canonical_cmp(self, other) == Ordering::Equal
    }
}

/// Total structural order used for Abelian normalization. Primitives compare
/// by name; weights by their IEEE total order.
pub fn canonical_cmp(a: &ProcessExpr, b: &ProcessExpr) -> Ordering {
    fn rank(e: &ProcessExpr) -> u8 {
        match e {
            ProcessExpr::Zero => 0,
            ProcessExpr::Primitive(_) => 1,
            ProcessExpr::Sum(SumMode::Exclusive, _) => 2,
            ProcessExpr::Sum(SumMode::Free, _) => 3,
            ProcessExpr::Product(ProductMode::Exclusive, _) => 4,
            ProcessExpr::Product(ProductMode::Free, _) => 5,
            ProcessExpr::Concat(_) => 6,
        }
    }
    match rank(a).cmp(&rank(b)) {
        Ordering::Equal => {}
        ord => return ord,
    }
    match (a, b) {
        (ProcessExpr::Zero, ProcessExpr::Zero) => Ordering::Equal,
        (ProcessExpr::Primitive(p), ProcessExpr::Primitive(q)) => p.name.cmp(&q.name),
        (ProcessExpr::Sum(_, ta), ProcessExpr::Sum(_, tb)) => {
            for ((wa, ea), (wb, eb)) in ta.iter().zip(tb.iter()) {
                match canonical_cmp(ea, eb)
                    .then(wa.re.total_cmp(&wb.re))
                    .then(wa.im.total_cmp(&wb.im))
                {
                    Ordering::Equal => {}
                    ord => return ord,
                }
            }
            ta.len().cmp(&tb.len())
        }
        (ProcessExpr::Product(_, fa), ProcessExpr::Product(_, fb))
        | (ProcessExpr::Concat(fa), ProcessExpr::Concat(fb)) => {
            for (ea, eb) in fa.iter().zip(fb.iter()) {
                match canonical_cmp(ea, eb) {
                    Ordering::Equal => {}
                    ord => return ord,
                }
            }
            fa.len().cmp(&fb.len())
        }
        _ => unreachable!("ranks matched"),
    }
}

/// Replaces signed zeros so bitwise canonical comparison cannot distinguish
/// weights that multiply identically.
fn canon_weight(w: Complex64) -> Complex64 {
    let re = if w.re == 0.0 { 0.0 } else { w.re };
    let im = if w.im == 0.0 { 0.0 } else { w.im };
    Complex64::new(re, im)
}

/// Normal form: drops zero summands, flattens nested same-mode sums and
/// products (single-term sum wrappers flatten into either mode), sorts
/// Abelian operand lists, unwraps trivial wrappers. Idempotent.
///
/// A product containing the zero process stays as written; generation treats
/// the zero factor as producing nothing.
pub fn simplify(e: &ProcessExpr) -> ProcessExpr {
    match e {
        ProcessExpr::Zero => ProcessExpr::Zero,
        ProcessExpr::Primitive(p) => ProcessExpr::Primitive(p.clone()),
        ProcessExpr::Sum(mode, terms) => {
            let mut out: Vec<(Complex64, ProcessExpr)> = Vec::new();
            for (w, sub) in terms {
                let sub = simplify(sub);
                match sub {
                    ProcessExpr::Zero => {}
                    ProcessExpr::Sum(m2, inner) if m2 == *mode || inner.len() == 1 => {
                        for (v, inner_e) in inner {
                            out.push((canon_weight(w * v), inner_e));
                        }
                    }
                    other => out.push((canon_weight(*w), other)),
                }
            }
            if out.is_empty() {
                return ProcessExpr::Zero;
            }
            if out.len() == 1 {
                let (w, sub) = out.pop().unwrap();
                if w == ONE {
                    return sub;
                }
                // Single-term sums are mode-neutral: the weight distributes
                // into an inner sum of either mode.
                if let ProcessExpr::Sum(m2, inner) = sub {
                    let scaled: Vec<(Complex64, ProcessExpr)> =
                        inner.into_iter().map(|(v, e)| (canon_weight(w * v), e)).collect();
                    return simplify(&ProcessExpr::Sum(m2, scaled));
                }
                return ProcessExpr::Sum(SumMode::Exclusive, vec![(w, sub)]);
            }
            out.sort_by(|(wa, ea), (wb, eb)| {
                canonical_cmp(ea, eb)
                    .then(wa.re.total_cmp(&wb.re))
                    .then(wa.im.total_cmp(&wb.im))
            });
            ProcessExpr::Sum(*mode, out)
        }
        ProcessExpr::Product(mode, factors) => {
            let mut out: Vec<ProcessExpr> = Vec::new();
            for f in factors {
                let f = simplify(f);
                match f {
                    ProcessExpr::Product(m2, inner) if m2 == *mode => out.extend(inner),
                    other => out.push(other),
                }
            }
            match out.len() {
                0 => ProcessExpr::Zero,
                1 => out.pop().unwrap(),
                _ => {
                    out.sort_by(canonical_cmp);
                    ProcessExpr::Product(*mode, out)
                }
            }
        }
        ProcessExpr::Concat(items) => {
            let mut out: Vec<ProcessExpr> = Vec::new();
            for item in items {
                let item = simplify(item);
                match item {
                    ProcessExpr::Concat(inner) => out.extend(inner),
                    other => out.push(other),
                }
            }
            match out.len() {
                0 => ProcessExpr::Zero,
                1 => out.pop().unwrap(),
                _ => ProcessExpr::Concat(out),
            }
        }
    }
}

/// Formal scalar product `w * e`: informons generated by `e` have their
/// strengths multiplied by `w` at generation time.
pub fn scale(w: Complex64, e: &ProcessExpr) -> ProcessExpr {
    if w == ONE {
        return e.clone();
    }
    match e {
        ProcessExpr::Zero => ProcessExpr::Zero,
        ProcessExpr::Sum(mode, terms) => {
            ProcessExpr::Sum(*mode, terms.iter().map(|(v, sub)| (w * v, sub.clone())).collect())
        }
        other => ProcessExpr::Sum(SumMode::Exclusive, vec![(w, other.clone())]),
    }
}

/// Level-k graded term of the field subalgebra over `states`: the k-fold
/// product (free for bosonic, exclusive for fermionic) of the exclusive sum
/// of the states. `k = 0` returns the zero process by convention; `k = 1`
/// is the plain sum with no product wrapper.
pub fn fock_level(states: &[ProcessExpr], k: usize, statistics: Statistics) -> Result<ProcessExpr> {
    if states.is_empty() {
        return Err(Error::Parameter("fock_level needs a nonempty state list".into()));
    }
    if k == 0 {
        return Ok(ProcessExpr::Zero);
    }
    let sum = if states.len() == 1 {
        states[0].clone()
    } else {
        ProcessExpr::Sum(SumMode::Exclusive, states.iter().map(|s| (ONE, s.clone())).collect())
    };
    if k == 1 {
        return Ok(sum);
    }
    let mode = match statistics {
        Statistics::Bosonic => ProductMode::Free,
        Statistics::Fermionic => ProductMode::Exclusive,
    };
    Ok(ProcessExpr::Product(mode, vec![sum; k]))
}

/// Number of concurrent factors, i.e. informon sets generated per round.
/// Classifies particle-like (small) versus field-like (large) regimes.
/// A sum of unequal-grade terms cannot be graded.
pub fn grade(e: &ProcessExpr) -> Result<usize> {
    match e {
        ProcessExpr::Zero => Ok(0),
        ProcessExpr::Primitive(_) => Ok(1),
        ProcessExpr::Product(_, factors) => {
            let mut total = 0;
            for f in factors {
                total += grade(f)?;
            }
            Ok(total)
        }
        ProcessExpr::Sum(_, terms) => {
            let mut grades = terms.iter().map(|(_, sub)| grade(sub));
            let first = grades.next().ok_or(Error::Ungraded)??;
            for g in grades {
                if g? != first {
                    return Err(Error::Ungraded);
                }
            }
            Ok(first)
        }
        ProcessExpr::Concat(_) => Err(Error::Ungraded),
    }
}

fn fmt_weight(w: Complex64) -> String {
    if w.im == 0.0 {
        format!("{}", w.re)
    } else if w.re == 0.0 {
        format!("{}i", w.im)
    } else if w.im < 0.0 {
        format!("{}-{}i", w.re, -w.im)
    } else {
        format!("{}+{}i", w.re, w.im)
    }
}

// Precedence levels: concat 0, sum 1, product 2, atom 3.
fn precedence(e: &ProcessExpr) -> u8 {
    match e {
        ProcessExpr::Zero | ProcessExpr::Primitive(_) => 3,
        ProcessExpr::Product(..) => 2,
        ProcessExpr::Sum(..) => 1,
        ProcessExpr::Concat(_) => 0,
    }
}

fn render(e: &ProcessExpr, parent: u8, out: &mut String) {
    let prec = precedence(e);
    let need_parens = prec < 3 && prec <= parent;
    if need_parens {
        out.push('(');
    }
    match e {
        ProcessExpr::Zero => out.push('0'),
        ProcessExpr::Primitive(p) => out.push_str(&p.name),
        ProcessExpr::Sum(mode, terms) => {
            let op = match mode {
                SumMode::Exclusive => " (+) ",
                SumMode::Free => " (+^) ",
            };
            for (i, (w, sub)) in terms.iter().enumerate() {
                if i > 0 {
                    out.push_str(op);
                }
                if *w == ONE {
                    render(sub, 1, out);
                } else {
                    out.push_str(&fmt_weight(*w));
                    out.push('*');
                    render(sub, 3, out);
                }
            }
        }
        ProcessExpr::Product(mode, factors) => {
            let op = match mode {
                ProductMode::Exclusive => " (x) ",
                ProductMode::Free => " (x^) ",
            };
            for (i, f) in factors.iter().enumerate() {
                if i > 0 {
                    out.push_str(op);
                }
                render(f, 2, out);
            }
        }
        ProcessExpr::Concat(items) => {
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(" ; ");
                }
                render(item, 0, out);
            }
        }
    }
    if need_parens {
        out.push(')');
    }
}

impl std::fmt::Display for ProcessExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::new();
        match self {
            // The root is never parenthesized; concat children still are.
            ProcessExpr::Concat(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        s.push_str(" ; ");
                    }
                    render(item, 0, &mut s);
                }
            }
            other => render(other, 0, &mut s),
        }
        f.write_str(&s)
    }
}
