//! Normalization to a join of box-free, pairwise non-isomorphic components
//! by exhaustive forward structural rewriting.

use std::collections::BTreeSet;

use crate::cospan::{is_iso, ExtendedCospan};
use crate::graph::{EdgeId, Elem, VertexId};
use crate::rewrite::schema::{box_components, tens_dist};
use crate::rewrite::{apply, structural_matches, Match, SchemaKind, SchemaOptions, Side};

/// Which instance of the most urgent schema is applied at each step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MatchOrder {
    #[default]
    First,
    Last,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NormalizeOptions {
    pub max_steps: usize,
    pub order: MatchOrder,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions {
            max_steps: 10_000,
            order: MatchOrder::First,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum NormalizeError {
    #[error("input is not MDA well typed: {0}")]
    NotWellTyped(String),
    #[error("no normal form within {limit} steps")]
    StepLimit { limit: usize, partial: Box<ExtendedCospan> },
    #[error("no schema applies but e-boxes remain")]
    Stuck { partial: Box<ExtendedCospan> },
}

/// [`normalize_with`] under the default options.
pub fn normalize(c: &ExtendedCospan) -> Result<ExtendedCospan, NormalizeError> {
    normalize_with(c, &NormalizeOptions::default())
}

/// Applies forward schemas, most urgent first: singleton absorption,
/// idempotence, flattening, sequential distributivity, tensor
/// distributivity over edges, and last tensor distributivity over wires.
/// Every schema except the last moves an edge into an e-box or removes a box
/// or a component, and a wire absorbed by an e-box becomes two of its ports,
/// so the process terminates; `max_steps` guards it anyway.
pub fn normalize_with(c: &ExtendedCospan, opts: &NormalizeOptions) -> Result<ExtendedCospan, NormalizeError> {
    let report = c.mda_report();
    if !report.is_valid() {
        return Err(NormalizeError::NotWellTyped(report.to_string()));
    }
    let mut host = c.clone();
    for _ in 0..opts.max_steps {
        match step(&host, opts.order) {
            Some(next) => host = next,
            None if is_normal(&host) => return Ok(host),
            None => return Err(NormalizeError::Stuck { partial: Box::new(host) }),
        }
    }
    if is_normal(&host) {
        return Ok(host);
    }
    Err(NormalizeError::StepLimit {
        limit: opts.max_steps,
        partial: Box::new(host),
    })
}

fn rank(kind: SchemaKind) -> u8 {
    match kind {
        SchemaKind::SingletonAbsorb => 0,
        SchemaKind::Idem => 1,
        SchemaKind::Flatten => 2,
        SchemaKind::SeqDistL | SchemaKind::SeqDistR => 3,
        SchemaKind::TensDistL | SchemaKind::TensDistR => 4,
    }
}

/// One normalization step, or `None` when nothing applies.
pub(crate) fn step(host: &ExtendedCospan, order: MatchOrder) -> Option<ExtendedCospan> {
    let mut ranked: Vec<(u8, Match)> = structural_matches(host, &SchemaOptions::default())
        .into_iter()
        .map(|sm| (rank(sm.schema.kind), sm.m))
        .collect();
    ranked.extend(wire_moves(host).into_iter().map(|m| (5, m)));
    for r in 0..=5 {
        let mut tier: Vec<&Match> = ranked.iter().filter(|(k, _)| *k == r).map(|(_, m)| m).collect();
        if order == MatchOrder::Last {
            tier.reverse();
        }
        if let Some(next) = tier.into_iter().find_map(|m| apply(host, m).ok()) {
            return Some(next);
        }
    }
    None
}

/// Tensor distributivity over a wire beside an e-box that other edges also
/// use, such as one output of a copy running past the box.
fn wire_moves(host: &ExtendedCospan) -> Vec<Match> {
    let g = &host.carrier;
    let consumers = g.consumers();
    let producers = g.producers();
    let mut out = Vec::new();
    for bx in g.hierarchical_edges() {
        let level = g.edge_nesting(bx);
        let ports: BTreeSet<VertexId> = g.sources(bx).iter().chain(g.targets(bx)).copied().collect();
        let mut sub = g.down_closure(&[bx].into());
        sub.retain(|x| g.nesting(*x) == level);
        for v in g.vertices().filter(|&v| g.vertex_nesting(v) == level && !ports.contains(&v)) {
            let isolated = consumers[&v].is_empty() && producers[&v].is_empty();
            if isolated {
                continue;
            }
            let mut with = sub.clone();
            with.insert(Elem::Vertex(v));
            if g.is_convex(&with) {
                if let Ok(m) = tens_dist(host, bx, &BTreeSet::<EdgeId>::new(), &[v], Side::Left) {
                    out.push(m);
                }
            }
        }
    }
    out
}

/// True for a box-free cospan, and for a single top-level e-box with
/// box-free, pairwise non-isomorphic components whose ports are exactly the
/// interface in order.
pub fn is_normal(c: &ExtendedCospan) -> bool {
    let g = &c.carrier;
    let boxes = g.hierarchical_edges();
    if boxes.is_empty() {
        return true;
    }
    let [bx] = boxes[..] else { return false };
    if g.edge_nesting(bx).is_some() || g.edges().any(|e| e != bx && g.edge_nesting(e).is_none()) {
        return false;
    }
    if g.sources(bx) != c.inputs() || g.targets(bx) != c.outputs() {
        return false;
    }
    let comps = box_components(c, bx);
    comps.len() >= 2 && (0..comps.len()).all(|i| (0..i).all(|j| !is_iso(&comps[i].1, &comps[j].1)))
}

/// Components of a normal form: the cospan itself when box-free, else the
/// components of its e-box.
pub fn normal_components(c: &ExtendedCospan) -> Vec<ExtendedCospan> {
    let g = &c.carrier;
    match g.hierarchical_edges().first() {
        None => vec![c.clone()],
        Some(&bx) => box_components(c, bx).into_iter().map(|(_, p)| p).collect(),
    }
}
