//! Structural rewrite schemas. Each instance is a rule built on the fly from
//! the host: its left-hand side is a region of the host and its right-hand
//! side is assembled with the cospan algebra.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::cospan::{compose, is_iso, join_raw, tensor, CospanError, ExtendedCospan};
use crate::graph::{EHomomorphism, EdgeId, Elem, Nesting, VertexId};

use super::matching::{find_homs, HomQuery};
use super::region::{interface_order, region_boundary, region_cospan, sub_cospan, Region};
use super::{Match, RewriteRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SchemaKind {
    SeqDistL,
    SeqDistR,
    TensDistL,
    TensDistR,
    Flatten,
    Idem,
    SingletonAbsorb,
}

impl SchemaKind {
    pub const ALL: [SchemaKind; 7] = [
        SchemaKind::SeqDistL,
        SchemaKind::SeqDistR,
        SchemaKind::TensDistL,
        SchemaKind::TensDistR,
        SchemaKind::Flatten,
        SchemaKind::Idem,
        SchemaKind::SingletonAbsorb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemaKind::SeqDistL => "SeqDistL",
            SchemaKind::SeqDistR => "SeqDistR",
            SchemaKind::TensDistL => "TensDistL",
            SchemaKind::TensDistR => "TensDistR",
            SchemaKind::Flatten => "Flatten",
            SchemaKind::Idem => "Idem",
            SchemaKind::SingletonAbsorb => "SingletonAbsorb",
        }
    }
}

impl fmt::Display for SchemaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    /// Towards fewer and shallower e-boxes.
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StructuralSchema {
    pub kind: SchemaKind,
    pub direction: Direction,
}

impl StructuralSchema {
    fn rule_name(self) -> String {
        match self.direction {
            Direction::Forward => self.kind.name().to_string(),
            Direction::Backward => format!("{}~", self.kind.name()),
        }
    }
}

impl fmt::Display for StructuralSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rule_name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemaOptions {
    /// Also enumerate backward instances.
    pub backward: bool,
    /// Upper bound on idempotence expansions offered per call.
    pub idem_cap: usize,
}

impl Default for SchemaOptions {
    fn default() -> Self {
        SchemaOptions {
            backward: false,
            idem_cap: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("{0} is not an e-box")]
    NotABox(EdgeId),
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Cospan(#[from] CospanError),
}

fn pre<T>(msg: impl Into<String>) -> Result<T, SchemaError> {
    Err(SchemaError::Precondition(msg.into()))
}

/// A schema instance in a host, with the e-box it concerns.
#[derive(Clone, Debug)]
pub struct SchemaMatch {
    pub schema: StructuralSchema,
    pub target: EdgeId,
    pub m: Match,
}

fn schema(kind: SchemaKind, direction: Direction) -> StructuralSchema {
    StructuralSchema { kind, direction }
}

fn make(s: StructuralSchema, lhs: ExtendedCospan, incl: EHomomorphism, rhs: ExtendedCospan, level: Option<Nesting>) -> Match {
    Match {
        rule: RewriteRule {
            name: s.rule_name(),
            lhs,
            rhs,
        },
        hom: incl,
        level,
    }
}

/// The same cospan read backwards: edges reversed, interfaces swapped.
pub(crate) fn flip(c: &ExtendedCospan) -> ExtendedCospan {
    let mut g = c.carrier.clone();
    let edges: Vec<EdgeId> = g.edges().collect();
    for e in edges {
        let d = g.edge_mut(e);
        std::mem::swap(&mut d.sources, &mut d.targets);
    }
    ExtendedCospan {
        carrier: g,
        int_in: c.int_out.clone(),
        ext_in: c.ext_out.clone(),
        int_out: c.int_in.clone(),
        ext_out: c.ext_in.clone(),
    }
}

fn flip_match(mut m: Match, s: StructuralSchema) -> Match {
    m.rule.lhs = flip(&m.rule.lhs);
    m.rule.rhs = flip(&m.rule.rhs);
    m.rule.name = s.rule_name();
    m
}

fn box_level(host: &ExtendedCospan, bx: EdgeId) -> Result<Option<Nesting>, SchemaError> {
    let g = &host.carrier;
    if !g.has_edge(bx) || !g.label(bx).is_hierarchical() {
        return Err(SchemaError::NotABox(bx));
    }
    Ok(g.edge_nesting(bx))
}

/// Component cospans of `bx`, in component order.
pub fn box_components(host: &ExtendedCospan, bx: EdgeId) -> Vec<(u32, ExtendedCospan)> {
    host.carrier
        .component_ids(bx)
        .into_iter()
        .map(|c| {
            (
                c,
                host.component_cospan(Nesting {
                    parent: bx,
                    component: c,
                }),
            )
        })
        .collect()
}

/// The e-box alone as a left-hand side, with its own ports as interface.
fn box_lhs(host: &ExtendedCospan, bx: EdgeId, level: Option<Nesting>) -> (ExtendedCospan, EHomomorphism) {
    let g = &host.carrier;
    let members = g.down_closure(&[bx].into());
    sub_cospan(host, &members, level, g.sources(bx), g.targets(bx))
}

fn join_or_single(parts: Vec<ExtendedCospan>) -> Result<ExtendedCospan, SchemaError> {
    if parts.len() == 1 {
        Ok(parts.into_iter().next().unwrap())
    } else {
        Ok(join_raw(&parts)?)
    }
}

/// Sources of `bx` traced back through `prefix`, depth first in port order.
fn traced_inputs(host: &ExtendedCospan, bx: EdgeId, prefix: &BTreeSet<EdgeId>) -> Vec<VertexId> {
    let g = &host.carrier;
    let mut producer: BTreeMap<VertexId, EdgeId> = BTreeMap::new();
    for &e in prefix {
        for &t in g.targets(e) {
            producer.insert(t, e);
        }
    }
    let mut out = Vec::new();
    let mut seen_edges = BTreeSet::new();
    let mut stack: Vec<VertexId> = g.sources(bx).iter().rev().copied().collect();
    while let Some(v) = stack.pop() {
        match producer.get(&v) {
            Some(&e) => {
                if seen_edges.insert(e) {
                    stack.extend(g.sources(e).iter().rev());
                }
            }
            None => {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
    }
    out
}

/// `h ; (C_1 + … + C_k) ⇒ (h ; C_1) + … + (h ; C_k)` where `prefix` is the
/// part `h` of the host feeding the e-box.
pub fn seq_dist_left(host: &ExtendedCospan, bx: EdgeId, prefix: &BTreeSet<EdgeId>) -> Result<Match, SchemaError> {
    let level = box_level(host, bx)?;
    let g = &host.carrier;
    if prefix.contains(&bx) {
        return pre("prefix contains the e-box itself");
    }
    let consumers = g.consumers();
    let bsrc: BTreeSet<VertexId> = g.sources(bx).iter().copied().collect();
    for &e in prefix {
        if !g.has_edge(e) || g.edge_nesting(e) != level {
            return pre(format!("{e} is not beside the e-box"));
        }
        for t in g.targets(e) {
            let inside = !consumers[t].is_empty() && consumers[t].iter().all(|c| prefix.contains(c));
            if !inside && !bsrc.contains(t) {
                return pre(format!("{t} leaves the prefix without entering the e-box"));
            }
        }
    }
    let mut ins = traced_inputs(host, bx, prefix);
    let mut seed = prefix.clone();
    seed.insert(bx);
    let (open, _) = region_boundary(g, &g.down_closure(&seed), level);
    ins.extend(open.into_iter().filter(|v| !ins.contains(v)).collect::<Vec<_>>());
    interface_order(host, &mut ins, false);
    seq_dist_left_with(host, bx, prefix, &ins, level)
}

fn seq_dist_left_with(
    host: &ExtendedCospan,
    bx: EdgeId,
    prefix: &BTreeSet<EdgeId>,
    ins: &[VertexId],
    level: Option<Nesting>,
) -> Result<Match, SchemaError> {
    let g = &host.carrier;
    let mut h_members = g.down_closure(prefix);
    h_members.extend(g.sources(bx).iter().map(|&v| Elem::Vertex(v)));
    h_members.extend(ins.iter().map(|&v| Elem::Vertex(v)));
    let (h, _) = sub_cospan(host, &h_members, level, ins, g.sources(bx));
    let mut seed = prefix.clone();
    seed.insert(bx);
    let members = g.down_closure(&seed);
    let (lhs, incl) = sub_cospan(host, &members, level, ins, g.targets(bx));
    let parts = box_components(host, bx)
        .into_iter()
        .map(|(_, c)| compose(&h, &c))
        .collect::<Result<Vec<_>, _>>()?;
    let rhs = join_raw(&parts)?;
    Ok(make(schema(SchemaKind::SeqDistL, Direction::Forward), lhs, incl, rhs, level))
}

/// Mirror of [`seq_dist_left`] for a part consuming the e-box's targets.
pub fn seq_dist_right(host: &ExtendedCospan, bx: EdgeId, suffix: &BTreeSet<EdgeId>) -> Result<Match, SchemaError> {
    let m = seq_dist_left(&flip(host), bx, suffix)?;
    Ok(flip_match(m, schema(SchemaKind::SeqDistR, Direction::Forward)))
}

/// Reorders the sources of `bx` to `order`, a permutation of its sources,
/// pushing the permutation into every component.
pub fn permute_box_inputs(host: &ExtendedCospan, bx: EdgeId, order: &[VertexId]) -> Result<Match, SchemaError> {
    let level = box_level(host, bx)?;
    let src: BTreeSet<VertexId> = host.carrier.sources(bx).iter().copied().collect();
    let given: BTreeSet<VertexId> = order.iter().copied().collect();
    if given != src || order.len() != src.len() {
        return pre("order is not a permutation of the e-box sources");
    }
    seq_dist_left_with(host, bx, &BTreeSet::new(), order, level)
}

pub fn permute_box_outputs(host: &ExtendedCospan, bx: EdgeId, order: &[VertexId]) -> Result<Match, SchemaError> {
    let m = permute_box_inputs(&flip(host), bx, order)?;
    Ok(flip_match(m, schema(SchemaKind::SeqDistR, Direction::Forward)))
}

/// Which side of the tensor the absorbed part takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Left,
    Right,
}

/// `F ⊗ (C_1 + … + C_k) ⇒ (F ⊗ C_1) + … + (F ⊗ C_k)` for a part `F` beside
/// the e-box made of `edges` and identity `wires`.
pub fn tens_dist(
    host: &ExtendedCospan,
    bx: EdgeId,
    edges: &BTreeSet<EdgeId>,
    wires: &[VertexId],
    side: Side,
) -> Result<Match, SchemaError> {
    let level = box_level(host, bx)?;
    let g = &host.carrier;
    if edges.contains(&bx) {
        return pre("the absorbed part contains the e-box itself");
    }
    let region = Region::from_edges(g, edges, wires).map_err(SchemaError::Precondition)?;
    if region.level != level {
        return pre("the absorbed part is not beside the e-box");
    }
    let ports: BTreeSet<VertexId> = g.sources(bx).iter().chain(g.targets(bx)).copied().collect();
    if region.members.iter().any(|x| matches!(x, Elem::Vertex(v) if ports.contains(v))) {
        return pre("the absorbed part touches the e-box");
    }
    let (mut fi, mut fo) = if edges.len() == 1 && wires.is_empty() {
        let e = *edges.iter().next().unwrap();
        (g.sources(e).to_vec(), g.targets(e).to_vec())
    } else {
        (region.inputs.clone(), region.outputs.clone())
    };
    interface_order(host, &mut fi, false);
    interface_order(host, &mut fo, true);
    let (f, _) = sub_cospan(host, &region.members, level, &fi, &fo);
    let mut members = region.members.clone();
    members.extend(g.down_closure(&[bx].into()));
    let (ins, outs) = match side {
        Side::Left => ([fi.as_slice(), g.sources(bx)].concat(), [fo.as_slice(), g.targets(bx)].concat()),
        Side::Right => ([g.sources(bx), fi.as_slice()].concat(), [g.targets(bx), fo.as_slice()].concat()),
    };
    let (lhs, incl) = sub_cospan(host, &members, level, &ins, &outs);
    let parts: Vec<ExtendedCospan> = box_components(host, bx)
        .into_iter()
        .map(|(_, c)| match side {
            Side::Left => tensor(&f, &c),
            Side::Right => tensor(&c, &f),
        })
        .collect();
    let rhs = join_raw(&parts)?;
    let kind = match side {
        Side::Left => SchemaKind::TensDistL,
        Side::Right => SchemaKind::TensDistR,
    };
    Ok(make(schema(kind, Direction::Forward), lhs, incl, rhs, level))
}

fn permutation_cospan(targets: &[usize]) -> ExtendedCospan {
    ExtendedCospan::permutation(targets)
}

/// Replaces component `comp`, which must be a single e-box `B'` wired
/// straight to the component's ports, by the components of `B'`.
pub fn flatten(host: &ExtendedCospan, bx: EdgeId, comp: u32) -> Result<Match, SchemaError> {
    let level = box_level(host, bx)?;
    let comps = box_components(host, bx);
    let Some(idx) = comps.iter().position(|(c, _)| *c == comp) else {
        return pre(format!("{bx} has no component {comp}"));
    };
    let c = &comps[idx].1;
    let cg = &c.carrier;
    let top_edges: Vec<EdgeId> = cg.edges().filter(|&e| cg.edge_nesting(e).is_none()).collect();
    let [inner] = top_edges[..] else {
        return pre("component is not a single e-box");
    };
    if !cg.label(inner).is_hierarchical() {
        return pre("component is not a single e-box");
    }
    let ins = c.inputs();
    let outs = c.outputs();
    let top_vertices = cg.vertices().filter(|&v| cg.vertex_nesting(v).is_none()).count();
    let src = cg.sources(inner);
    let tgt = cg.targets(inner);
    let same = |a: &[VertexId], b: &[VertexId]| a.len() == b.len() && a.iter().all(|v| b.contains(v));
    if !same(&ins, src) || !same(&outs, tgt) || top_vertices != src.len() + tgt.len() {
        return pre("inner e-box is not wired straight to the component ports");
    }
    let perm_in = permutation_cospan(&ins.iter().map(|v| src.iter().position(|s| s == v).unwrap()).collect::<Vec<_>>());
    let perm_out = permutation_cospan(&tgt.iter().map(|t| outs.iter().position(|o| o == t).unwrap()).collect::<Vec<_>>());
    let mut parts: Vec<ExtendedCospan> = comps.iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, (_, p))| p.clone()).collect();
    for (_, d) in box_components(c, inner) {
        parts.push(compose(&compose(&perm_in, &d)?, &perm_out)?);
    }
    let (lhs, incl) = box_lhs(host, bx, level);
    let rhs = join_raw(&parts)?;
    Ok(make(schema(SchemaKind::Flatten, Direction::Forward), lhs, incl, rhs, level))
}

/// Drops component `drop`, which must be isomorphic to another component.
pub fn idem(host: &ExtendedCospan, bx: EdgeId, drop: u32) -> Result<Match, SchemaError> {
    let level = box_level(host, bx)?;
    let comps = box_components(host, bx);
    let Some(idx) = comps.iter().position(|(c, _)| *c == drop) else {
        return pre(format!("{bx} has no component {drop}"));
    };
    if !comps.iter().enumerate().any(|(i, (_, p))| i != idx && is_iso(p, &comps[idx].1)) {
        return pre("component has no isomorphic twin");
    }
    let rest: Vec<ExtendedCospan> = comps.into_iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, (_, p))| p).collect();
    let (lhs, incl) = box_lhs(host, bx, level);
    let rhs = join_or_single(rest)?;
    Ok(make(schema(SchemaKind::Idem, Direction::Forward), lhs, incl, rhs, level))
}

/// Unboxes an e-box with a single component.
pub fn singleton_absorb(host: &ExtendedCospan, bx: EdgeId) -> Result<Match, SchemaError> {
    let level = box_level(host, bx)?;
    let mut comps = box_components(host, bx);
    if comps.len() != 1 {
        return pre("e-box does not have exactly one component");
    }
    let (lhs, incl) = box_lhs(host, bx, level);
    let rhs = comps.pop().unwrap().1;
    Ok(make(schema(SchemaKind::SingletonAbsorb, Direction::Forward), lhs, incl, rhs, level))
}

/// Replaces an e-box by one of its components. Not an equation of the
/// theory; extraction uses it to commit to a choice.
pub fn choose_component(host: &ExtendedCospan, bx: EdgeId, comp: u32) -> Result<Match, SchemaError> {
    let level = box_level(host, bx)?;
    let Some((_, rhs)) = box_components(host, bx).into_iter().find(|(c, _)| *c == comp) else {
        return pre(format!("{bx} has no component {comp}"));
    };
    let (lhs, incl) = box_lhs(host, bx, level);
    Ok(Match {
        rule: RewriteRule {
            name: "choose".into(),
            lhs,
            rhs,
        },
        hom: incl,
        level,
    })
}

fn wrap(host: &ExtendedCospan, edges: &BTreeSet<EdgeId>, wires: &[VertexId], copies: usize, s: StructuralSchema) -> Result<Match, SchemaError> {
    let mut region = Region::from_edges(&host.carrier, edges, wires).map_err(SchemaError::Precondition)?;
    interface_order(host, &mut region.inputs, false);
    interface_order(host, &mut region.outputs, true);
    let (lhs, incl) = region_cospan(host, &region);
    let rhs = join_raw(&vec![lhs.clone(); copies])?;
    Ok(make(s, lhs, incl, rhs, region.level))
}

/// `X ⇒ X + X` on the region spanned by `edges` and `wires`.
pub fn idem_expand(host: &ExtendedCospan, edges: &BTreeSet<EdgeId>, wires: &[VertexId]) -> Result<Match, SchemaError> {
    wrap(host, edges, wires, 2, schema(SchemaKind::Idem, Direction::Backward))
}

/// Wraps the region in a one-component e-box.
pub fn singleton_back(host: &ExtendedCospan, edges: &BTreeSet<EdgeId>, wires: &[VertexId]) -> Result<Match, SchemaError> {
    wrap(host, edges, wires, 1, schema(SchemaKind::SingletonAbsorb, Direction::Backward))
}

/// The part of `c` after an occurrence of `pat` anchored at its inputs, with
/// the occurrence's outputs as inputs.
fn strip_prefix(c: &ExtendedCospan, pat: &ExtendedCospan) -> Option<ExtendedCospan> {
    if pat.arity() != c.arity() {
        return None;
    }
    let mut q = HomQuery::new(&pat.carrier, &c.carrier);
    q.level = Some(None);
    q.pinned = pat.inputs().into_iter().zip(c.inputs()).collect();
    let g = &c.carrier;
    let couts: BTreeSet<VertexId> = c.outputs().into_iter().collect();
    'homs: for hom in find_homs(&q) {
        let new_in: Vec<VertexId> = pat.outputs().iter().map(|&v| hom.v(v)).collect();
        let keep: BTreeSet<VertexId> = new_in.iter().copied().collect();
        let del_e: BTreeSet<EdgeId> = hom.emap.values().copied().collect();
        let del_v: BTreeSet<VertexId> = hom.vmap.values().copied().filter(|v| !keep.contains(v)).collect();
        if del_v.iter().any(|v| couts.contains(v)) {
            continue;
        }
        let mut members = BTreeSet::new();
        for x in g.elems() {
            let gone = match x {
                Elem::Vertex(v) => del_v.contains(&v),
                Elem::Edge(e) => del_e.contains(&e),
            };
            if !gone && g.parent(x).is_some_and(|p| del_e.contains(&p)) {
                continue 'homs;
            }
            if !gone {
                members.insert(x);
            }
        }
        for e in g.edges().filter(|e| !del_e.contains(e)) {
            if g.sources(e).iter().chain(g.targets(e)).any(|v| del_v.contains(v)) {
                continue 'homs;
            }
        }
        let (rest, _) = sub_cospan(c, &members, None, &new_in, &c.outputs());
        let mut report = rest.mda_report();
        report.extend(rest.validate_interfaces());
        if report.is_valid() {
            return Some(rest);
        }
    }
    None
}

/// `(h ; C_1) + … + (h ; C_k) ⇒ h ; (C_1 + … + C_k)` for a common prefix
/// `pat` of every component.
pub fn seq_dist_left_back(host: &ExtendedCospan, bx: EdgeId, pat: &ExtendedCospan) -> Result<Match, SchemaError> {
    let level = box_level(host, bx)?;
    if pat.coarity() == 0 && host.carrier.targets(bx).is_empty() {
        return pre("the remaining e-box would have no ports");
    }
    let mut rest = Vec::new();
    for (c, p) in box_components(host, bx) {
        match strip_prefix(&p, pat) {
            Some(r) => rest.push(r),
            None => return pre(format!("component {c} does not start with the pattern")),
        }
    }
    let (lhs, incl) = box_lhs(host, bx, level);
    let rhs = compose(pat, &join_raw(&rest)?)?;
    Ok(make(schema(SchemaKind::SeqDistL, Direction::Backward), lhs, incl, rhs, level))
}

/// Mirror of [`seq_dist_left_back`] for a common suffix.
pub fn seq_dist_right_back(host: &ExtendedCospan, bx: EdgeId, pat: &ExtendedCospan) -> Result<Match, SchemaError> {
    let m = seq_dist_left_back(&flip(host), bx, &flip(pat))?;
    Ok(flip_match(m, schema(SchemaKind::SeqDistR, Direction::Backward)))
}

/// Splits the piece of each component reached from the given port positions.
fn split_piece(c: &ExtendedCospan, in_pos: &[usize], out_pos: &[usize]) -> Option<(ExtendedCospan, ExtendedCospan)> {
    let g = &c.carrier;
    let (ins, outs) = (c.inputs(), c.outputs());
    let pieces = g.level_pieces(None);
    let seeds: BTreeSet<Elem> = in_pos.iter().map(|&k| ins.get(k).copied()).chain(out_pos.iter().map(|&k| outs.get(k).copied())).collect::<Option<Vec<_>>>()?.into_iter().map(Elem::Vertex).collect();
    let mut members = BTreeSet::new();
    for p in &pieces {
        if p.iter().any(|x| seeds.contains(x)) {
            members.extend(p.iter().copied());
        }
    }
    let in_set: BTreeSet<usize> = in_pos.iter().copied().collect();
    let out_set: BTreeSet<usize> = out_pos.iter().copied().collect();
    for (k, v) in ins.iter().enumerate() {
        if members.contains(&Elem::Vertex(*v)) != in_set.contains(&k) {
            return None;
        }
    }
    for (k, v) in outs.iter().enumerate() {
        if members.contains(&Elem::Vertex(*v)) != out_set.contains(&k) {
            return None;
        }
    }
    let edges: BTreeSet<EdgeId> = members.iter().filter_map(|x| if let Elem::Edge(e) = x { Some(*e) } else { None }).collect();
    let mut full = g.down_closure(&edges);
    full.extend(members.iter().copied());
    let rest_members: BTreeSet<Elem> = g.elems().filter(|x| !full.contains(x)).collect();
    let pick = |v: &[VertexId], pos: &[usize]| pos.iter().map(|&k| v[k]).collect::<Vec<_>>();
    let other = |n: usize, s: &BTreeSet<usize>| (0..n).filter(|k| !s.contains(k)).collect::<Vec<_>>();
    let piece = sub_cospan(c, &full, None, &pick(&ins, in_pos), &pick(&outs, out_pos)).0;
    let rest = sub_cospan(
        c,
        &rest_members,
        None,
        &pick(&ins, &other(ins.len(), &in_set)),
        &pick(&outs, &other(outs.len(), &out_set)),
    )
    .0;
    Some((piece, rest))
}

/// `(F ⊗ C_1) + … + (F ⊗ C_k) ⇒ F ⊗ (C_1 + … + C_k)` up to the port
/// permutation given by `in_pos` and `out_pos`, the positions `F` occupies.
pub fn tens_dist_back(host: &ExtendedCospan, bx: EdgeId, in_pos: &[usize], out_pos: &[usize]) -> Result<Match, SchemaError> {
    let level = box_level(host, bx)?;
    let g = &host.carrier;
    let (n, m) = (g.sources(bx).len(), g.targets(bx).len());
    let distinct = |p: &[usize], bound: usize| p.iter().all(|&k| k < bound) && p.iter().collect::<BTreeSet<_>>().len() == p.len();
    if !distinct(in_pos, n) || !distinct(out_pos, m) {
        return pre("port positions are out of range or repeated");
    }
    if in_pos.len() + out_pos.len() == 0 {
        return pre("the factored part has no ports");
    }
    if in_pos.len() == n && out_pos.len() == m {
        return pre("nothing would remain inside the e-box");
    }
    let mut piece: Option<ExtendedCospan> = None;
    let mut rest = Vec::new();
    for (c, p) in box_components(host, bx) {
        let Some((f, r)) = split_piece(&p, in_pos, out_pos) else {
            return pre(format!("component {c} does not split at the given ports"));
        };
        if let Some(f0) = &piece {
            if !is_iso(f0, &f) {
                return pre(format!("component {c} has a different factor"));
            }
        } else {
            piece = Some(f);
        }
        rest.push(r);
    }
    let piece = piece.ok_or_else(|| SchemaError::Precondition("e-box has no components".into()))?;
    let order = |pos: &[usize], len: usize| {
        let s: BTreeSet<usize> = pos.iter().copied().collect();
        pos.iter().copied().chain((0..len).filter(|k| !s.contains(k))).collect::<Vec<usize>>()
    };
    let oin = order(in_pos, n);
    let oout = order(out_pos, m);
    // Input k goes to its place in `oin`; place p of `oout` goes to output oout[p].
    let mut tin = vec![0; n];
    for (p, &k) in oin.iter().enumerate() {
        tin[k] = p;
    }
    let body = tensor(&piece, &join_raw(&rest)?);
    let rhs = compose(&compose(&permutation_cospan(&tin), &body)?, &permutation_cospan(&oout))?;
    let (lhs, incl) = box_lhs(host, bx, level);
    Ok(make(schema(SchemaKind::TensDistL, Direction::Backward), lhs, incl, rhs, level))
}

/// Wraps the components in `group` into one component holding a nested e-box.
pub fn flatten_back(host: &ExtendedCospan, bx: EdgeId, group: &[u32]) -> Result<Match, SchemaError> {
    let level = box_level(host, bx)?;
    let comps = box_components(host, bx);
    let set: BTreeSet<u32> = group.iter().copied().collect();
    if set.len() != group.len() || set.len() < 2 || set.len() >= comps.len() || set.iter().any(|c| !comps.iter().any(|(d, _)| d == c)) {
        return pre("group must name at least two but not all components");
    }
    let (inner, mut outer): (Vec<_>, Vec<_>) = comps.into_iter().partition(|(c, _)| set.contains(c));
    let inner: Vec<ExtendedCospan> = inner.into_iter().map(|(_, p)| p).collect();
    let mut parts: Vec<ExtendedCospan> = outer.drain(..).map(|(_, p)| p).collect();
    parts.push(join_raw(&inner)?);
    let (lhs, incl) = box_lhs(host, bx, level);
    let rhs = join_raw(&parts)?;
    Ok(make(schema(SchemaKind::Flatten, Direction::Backward), lhs, incl, rhs, level))
}

/// Single-edge prefix of a component, with the other inputs passed through.
fn edge_prefix(c: &ExtendedCospan, e: EdgeId) -> Option<ExtendedCospan> {
    let g = &c.carrier;
    let ins = c.inputs();
    let src = g.sources(e);
    if g.edge_nesting(e).is_some() || src.is_empty() || !src.iter().all(|v| ins.contains(v)) {
        return None;
    }
    let mut outs = Vec::new();
    let mut emitted = false;
    for v in &ins {
        if src.contains(v) {
            if !emitted {
                outs.extend(g.targets(e));
                emitted = true;
            }
        } else {
            outs.push(*v);
        }
    }
    let mut members = g.down_closure(&[e].into());
    members.extend(ins.iter().map(|&v| Elem::Vertex(v)));
    Some(sub_cospan(c, &members, None, &ins, &outs).0)
}

fn subsets(k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    if k > 16 {
        return out;
    }
    for mask in 0u32..(1 << k) {
        let n = mask.count_ones() as usize;
        if n >= 2 && n < k {
            out.push((0..k as u32).filter(|i| mask & (1 << i) != 0).collect());
        }
    }
    out
}

/// Every structural schema instance in `host`, grouped by e-box in id order.
pub fn structural_matches(host: &ExtendedCospan, opts: &SchemaOptions) -> Vec<SchemaMatch> {
    let g = &host.carrier;
    let mut out = Vec::new();
    let mut push = |target: EdgeId, r: Result<Match, SchemaError>| {
        if let Ok(m) = r {
            let kind = schema_of(&m.rule.name);
            out.push(SchemaMatch { schema: kind, target, m });
        }
    };
    let consumers = g.consumers();
    let producers = g.producers();
    for bx in g.hierarchical_edges() {
        let level = g.edge_nesting(bx);
        let comps = box_components(host, bx);
        if comps.len() == 1 {
            push(bx, singleton_absorb(host, bx));
        }
        for (i, (c, p)) in comps.iter().enumerate() {
            if comps[..i].iter().any(|(_, q)| is_iso(q, p)) {
                push(bx, idem(host, bx, *c));
            }
        }
        for (c, _) in &comps {
            push(bx, flatten(host, bx, *c));
        }
        let bsrc: BTreeSet<VertexId> = g.sources(bx).iter().copied().collect();
        let btgt: BTreeSet<VertexId> = g.targets(bx).iter().copied().collect();
        let beside: Vec<EdgeId> = g.edges().filter(|&e| e != bx && g.edge_nesting(e) == level).collect();
        for &e in &beside {
            let t = g.targets(e);
            if !t.is_empty() && t.iter().all(|v| bsrc.contains(v)) {
                push(bx, seq_dist_left(host, bx, &[e].into()));
            }
        }
        for &e in &beside {
            let s = g.sources(e);
            if !s.is_empty() && s.iter().all(|v| btgt.contains(v)) {
                push(bx, seq_dist_right(host, bx, &[e].into()));
            }
        }
        for &e in &beside {
            let touches = g.sources(e).iter().chain(g.targets(e)).any(|v| bsrc.contains(v) || btgt.contains(v));
            if !touches {
                let mut sub = g.down_closure(&[e, bx].into());
                sub.retain(|x| g.nesting(*x) == level);
                if g.is_convex(&sub) {
                    push(bx, tens_dist(host, bx, &[e].into(), &[], Side::Left));
                    push(bx, tens_dist(host, bx, &[e].into(), &[], Side::Right));
                }
            }
        }
        for v in g.vertices().filter(|&v| g.vertex_nesting(v) == level) {
            if consumers[&v].is_empty() && producers[&v].is_empty() {
                push(bx, tens_dist(host, bx, &BTreeSet::new(), &[v], Side::Left));
                push(bx, tens_dist(host, bx, &BTreeSet::new(), &[v], Side::Right));
            }
        }
        if level.is_none() {
            if let Some(order) = canonical_order(&host.inputs(), g.sources(bx)) {
                push(bx, permute_box_inputs(host, bx, &order));
            }
            if let Some(order) = canonical_order(&host.outputs(), g.targets(bx)) {
                push(bx, permute_box_outputs(host, bx, &order));
            }
        }
        if opts.backward && !comps.is_empty() {
            let first = &comps[0].1;
            let fg = &first.carrier;
            for e in fg.edges() {
                if let Some(pat) = edge_prefix(first, e) {
                    push(bx, seq_dist_left_back(host, bx, &pat));
                }
                let flipped = flip(first);
                if let Some(pat) = edge_prefix(&flipped, e) {
                    push(bx, seq_dist_right_back(host, bx, &flip(&pat)));
                }
            }
            let (ins, outs) = (first.inputs(), first.outputs());
            for piece in fg.level_pieces(None) {
                let in_pos: Vec<usize> = (0..ins.len()).filter(|&k| piece.contains(&Elem::Vertex(ins[k]))).collect();
                let out_pos: Vec<usize> = (0..outs.len()).filter(|&k| piece.contains(&Elem::Vertex(outs[k]))).collect();
                push(bx, tens_dist_back(host, bx, &in_pos, &out_pos));
            }
            if comps.len() >= 3 {
                for group in subsets(comps.len()) {
                    let ids: Vec<u32> = group.iter().map(|&i| comps[i as usize].0).collect();
                    push(bx, flatten_back(host, bx, &ids));
                }
            }
        }
    }
    if opts.backward {
        for e in g.edges().take(opts.idem_cap) {
            if let Ok(m) = idem_expand(host, &[e].into(), &[]) {
                let target = e;
                out.push(SchemaMatch {
                    schema: schema(SchemaKind::Idem, Direction::Backward),
                    target,
                    m,
                });
            }
        }
    }
    out
}

/// Ports of a top-level e-box reordered by host interface position, if they
/// are all host interface vertices and not already in that order.
fn canonical_order(iface: &[VertexId], ports: &[VertexId]) -> Option<Vec<VertexId>> {
    let pos: Vec<usize> = ports.iter().map(|v| iface.iter().position(|w| w == v)).collect::<Option<_>>()?;
    if pos.windows(2).all(|w| w[0] < w[1]) {
        return None;
    }
    let mut order: Vec<VertexId> = ports.to_vec();
    order.sort_by_key(|v| iface.iter().position(|w| w == v));
    Some(order)
}

fn schema_of(name: &str) -> StructuralSchema {
    let (base, direction) = match name.strip_suffix('~') {
        Some(b) => (b, Direction::Backward),
        None => (name, Direction::Forward),
    };
    let kind = SchemaKind::ALL.into_iter().find(|k| k.name() == base).unwrap_or(SchemaKind::Idem);
    schema(kind, direction)
}
