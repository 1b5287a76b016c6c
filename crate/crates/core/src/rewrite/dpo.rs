//! Extended boundary complements and double-pushout rule application.

use std::collections::{BTreeMap, BTreeSet};

use crate::cospan::{pushout, ExtendedCospan, PushoutError};
use crate::graph::{Condition, EHomomorphism, EHypergraph, EdgeId, Elem, Nesting, VertexId};

use super::matching::admissible;
use super::Match;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("invalid match: {0}")]
    InvalidMatch(String),
    #[error("no boundary complement: condition {condition} fails ({detail})")]
    NoComplement { condition: u8, detail: String },
    #[error("pushout with the right-hand side failed: {0}")]
    Pushout(#[from] PushoutError),
    #[error("result is not a well-typed MDA cospan: {0}")]
    NotWellTyped(String),
}

fn no(condition: u8, detail: impl Into<String>) -> RewriteError {
    RewriteError::NoComplement {
        condition,
        detail: detail.into(),
    }
}

/// The context `C` left after removing a match, with the two interface maps
/// `c1 : i → C` and `c2 : j → C` and the inclusion of `C` into the host.
///
/// The internal input interface of `C` is the host's surviving input slots
/// followed by `c2`; the output interface is the surviving output slots
/// followed by `c1`.
#[derive(Clone, Debug)]
pub struct Complement {
    pub cospan: ExtendedCospan,
    pub c1: Vec<VertexId>,
    pub c2: Vec<VertexId>,
    pub inclusion: EHomomorphism,
    /// Where the match lies; `None` for the top level.
    pub level: Option<Nesting>,
    /// Number of host input and output slots that survive.
    pub kept_in: usize,
    pub kept_out: usize,
}

impl Complement {
    pub fn nested(&self) -> bool {
        self.level.is_some()
    }
}

/// Computes the boundary complement of a match, or the first of the
/// existence conditions it violates.
pub fn boundary_complement(host: &ExtendedCospan, m: &Match) -> Result<Complement, RewriteError> {
    let l = &m.rule.lhs;
    let g = &host.carrier;
    let hom = &m.hom;
    hom.check(&l.carrier, g).map_err(RewriteError::InvalidMatch)?;
    if !hom.is_injective() {
        return Err(no(2, "match is not injective"));
    }
    let level = admissible(l, host, hom).map_err(|(c, d)| no(c, d))?;

    let li = l.inputs();
    let lj = l.outputs();
    let iface: BTreeSet<VertexId> = li.iter().chain(&lj).copied().collect();
    let del_e: BTreeSet<EdgeId> = hom.emap.values().copied().collect();
    let del_v: BTreeSet<VertexId> = l
        .carrier
        .vertices()
        .filter(|x| !iface.contains(x))
        .map(|x| hom.v(x))
        .collect();

    for e in g.edges().filter(|e| !del_e.contains(e)) {
        if let Some(v) = g.sources(e).iter().chain(g.targets(e)).find(|v| del_v.contains(v)) {
            return Err(no(1, format!("edge {e} would lose its endpoint {v}")));
        }
        if g.parent(Elem::Edge(e)).is_some_and(|p| del_e.contains(&p)) {
            return Err(no(1, format!("edge {e} would lose its parent")));
        }
    }
    for v in g.vertices().filter(|v| !del_v.contains(v)) {
        if g.parent(Elem::Vertex(v)).is_some_and(|p| del_e.contains(&p)) {
            return Err(no(1, format!("vertex {v} would lose its parent")));
        }
    }

    // Deleted interface slots must be exactly the rule's strict slots.
    let l_strict_in: BTreeSet<VertexId> = l.strict_in_slots().into_iter().map(|k| hom.v(l.int_in[k])).collect();
    let l_strict_out: BTreeSet<VertexId> = l.strict_out_slots().into_iter().map(|k| hom.v(l.int_out[k])).collect();
    for (side, slots, ext, strict) in [
        ("input", &host.int_in, &host.ext_in, &l_strict_in),
        ("output", &host.int_out, &host.ext_out, &l_strict_out),
    ] {
        let ext: BTreeSet<usize> = ext.iter().copied().collect();
        let mut found = BTreeSet::new();
        for (k, v) in slots.iter().enumerate() {
            if !del_v.contains(v) {
                continue;
            }
            if ext.contains(&k) {
                return Err(no(5, format!("external {side} {v} of the host would be deleted")));
            }
            if !strict.contains(v) {
                return Err(no(4, format!("host {side} slot {k} is deleted but is not a rule slot")));
            }
            found.insert(*v);
        }
        if found.len() != strict.len() {
            return Err(no(4, format!("a strict {side} slot of the rule is not a host slot")));
        }
    }

    let mut c = g.clone();
    for e in &del_e {
        c.remove_edge(*e);
    }
    for v in &del_v {
        c.remove_vertex(*v);
    }
    // Identity wires of the rule: the original vertex keeps the producer, a
    // fresh copy takes the consumers.
    let mut split: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    let lj_set: BTreeSet<VertexId> = lj.iter().copied().collect();
    for x in li.iter().filter(|x| lj_set.contains(x)) {
        let v = hom.v(*x);
        let w = c.add_vertex(g.vertex_nesting(v));
        let edges: Vec<EdgeId> = c.edges().collect();
        for e in edges {
            for s in c.edge_mut(e).sources.iter_mut() {
                if *s == v {
                    *s = w;
                }
            }
        }
        split.insert(v, w);
    }
    let c1: Vec<VertexId> = li.iter().map(|&x| hom.v(x)).collect();
    let c2: Vec<VertexId> = lj
        .iter()
        .map(|&x| {
            let v = hom.v(x);
            split.get(&v).copied().unwrap_or(v)
        })
        .collect();

    let mut int_in = Vec::new();
    let mut in_map = vec![None; host.int_in.len()];
    for (k, v) in host.int_in.iter().enumerate() {
        if !del_v.contains(v) {
            in_map[k] = Some(int_in.len());
            int_in.push(*v);
        }
    }
    let mut int_out = Vec::new();
    let mut out_map = vec![None; host.int_out.len()];
    for (k, v) in host.int_out.iter().enumerate() {
        if !del_v.contains(v) {
            out_map[k] = Some(int_out.len());
            int_out.push(split.get(v).copied().unwrap_or(*v));
        }
    }
    let (kept_in, kept_out) = (int_in.len(), int_out.len());
    let mut ext_in: Vec<usize> = host.ext_in.iter().map(|&k| in_map[k].unwrap()).collect();
    let mut ext_out: Vec<usize> = host.ext_out.iter().map(|&k| out_map[k].unwrap()).collect();
    int_in.extend(&c2);
    int_out.extend(&c1);
    if level.is_none() {
        ext_in.extend(kept_in..kept_in + c2.len());
        ext_out.extend(kept_out..kept_out + c1.len());
    }
    let cospan = ExtendedCospan {
        carrier: c,
        int_in,
        ext_in,
        int_out,
        ext_out,
    };

    let mut report = cospan.mda_report();
    report.extend(cospan.validate_interfaces());
    if let Some(n) = level {
        // The component holding the hole is ill-typed until it is refilled.
        report
            .violations
            .retain(|x| !(x.condition == Condition::IllTypedBox && x.element == Some(Elem::Edge(n.parent))));
    }
    if !report.is_valid() {
        let cond = if level.is_some() { 7 } else { 6 };
        return Err(no(cond, report.to_string()));
    }

    let mut inclusion = EHomomorphism::default();
    let back: BTreeMap<VertexId, VertexId> = split.iter().map(|(&v, &w)| (w, v)).collect();
    for v in cospan.carrier.vertices() {
        inclusion.vmap.insert(v, back.get(&v).copied().unwrap_or(v));
    }
    for e in cospan.carrier.edges() {
        inclusion.emap.insert(e, e);
    }
    Ok(Complement {
        cospan,
        c1,
        c2,
        inclusion,
        level,
        kept_in,
        kept_out,
    })
}

/// Applies the rule at the match: computes the complement and glues the
/// right-hand side into it.
pub fn apply(host: &ExtendedCospan, m: &Match) -> Result<ExtendedCospan, RewriteError> {
    let comp = boundary_complement(host, m)?;
    glue(host, &comp, &m.rule.rhs)
}

/// Pushout of the complement with `rhs` along `i + j`.
pub fn glue(host: &ExtendedCospan, comp: &Complement, rhs: &ExtendedCospan) -> Result<ExtendedCospan, RewriteError> {
    let ri = rhs.inputs();
    let rj = rhs.outputs();
    if ri.len() != comp.c1.len() || rj.len() != comp.c2.len() {
        return Err(RewriteError::InvalidMatch(format!(
            "right-hand side has type {} -> {}, complement expects {} -> {}",
            ri.len(),
            rj.len(),
            comp.c1.len(),
            comp.c2.len()
        )));
    }
    let (z, zv) = EHypergraph::discrete(ri.len() + rj.len());
    let left = EHomomorphism {
        vmap: zv.iter().copied().zip(comp.c1.iter().chain(&comp.c2).copied()).collect(),
        emap: BTreeMap::new(),
    };
    let right = EHomomorphism {
        vmap: zv.iter().copied().zip(ri.iter().chain(&rj).copied()).collect(),
        emap: BTreeMap::new(),
    };
    let po = pushout(&z, &comp.cospan.carrier, &left, &rhs.carrier, &right)?;
    let (p1, p2) = (&po.inj_left, &po.inj_right);
    let c = &comp.cospan;
    let mut int_in: Vec<VertexId> = c.int_in[..comp.kept_in].iter().map(|&v| p1.v(v)).collect();
    int_in.extend(rhs.strict_in_slots().into_iter().map(|k| p2.v(rhs.int_in[k])));
    let mut int_out: Vec<VertexId> = c.int_out[..comp.kept_out].iter().map(|&v| p1.v(v)).collect();
    int_out.extend(rhs.strict_out_slots().into_iter().map(|k| p2.v(rhs.int_out[k])));
    let out = ExtendedCospan {
        carrier: po.object,
        int_in,
        ext_in: c.ext_in[..host.arity()].to_vec(),
        int_out,
        ext_out: c.ext_out[..host.coarity()].to_vec(),
    };
    let mut report = out.mda_report();
    report.extend(out.validate_interfaces());
    if !report.is_valid() {
        return Err(RewriteError::NotWellTyped(report.to_string()));
    }
    Ok(out)
}
