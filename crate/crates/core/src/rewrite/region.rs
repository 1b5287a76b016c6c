//! Regions of a host cospan and their extraction as standalone cospans.

use std::collections::{BTreeMap, BTreeSet};

use crate::cospan::{induced, ExtendedCospan};
use crate::graph::{EHomomorphism, EHypergraph, EdgeId, Elem, Nesting, VertexId};

/// Elements of a host at one level together with everything nested below
/// them, and an ordered boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub level: Option<Nesting>,
    pub members: BTreeSet<Elem>,
    pub inputs: Vec<VertexId>,
    pub outputs: Vec<VertexId>,
}

impl Region {
    /// Down-closure of `edges` plus the isolated `wires`, all at one level,
    /// with the boundary of [`region_boundary`].
    pub fn from_edges(g: &EHypergraph, edges: &BTreeSet<EdgeId>, wires: &[VertexId]) -> Result<Region, String> {
        let level = match (edges.iter().next(), wires.first()) {
            (Some(&e), _) => g.edge_nesting(e),
            (None, Some(&v)) => g.vertex_nesting(v),
            (None, None) => return Err("empty region".into()),
        };
        if edges.iter().any(|&e| !g.has_edge(e) || g.edge_nesting(e) != level)
            || wires.iter().any(|&v| !g.has_vertex(v) || g.vertex_nesting(v) != level)
        {
            return Err("region elements lie at different levels".into());
        }
        let mut members = g.down_closure(edges);
        members.extend(wires.iter().map(|&v| Elem::Vertex(v)));
        let (inputs, outputs) = region_boundary(g, &members, level);
        Ok(Region {
            level,
            members,
            inputs,
            outputs,
        })
    }
}

/// Vertices of `members` at `level` that no member edge produces (inputs)
/// or consumes (outputs), in reading order.
pub fn region_boundary(g: &EHypergraph, members: &BTreeSet<Elem>, level: Option<Nesting>) -> (Vec<VertexId>, Vec<VertexId>) {
    let mut produced = BTreeSet::new();
    let mut consumed = BTreeSet::new();
    for x in members {
        if let Elem::Edge(e) = x {
            if g.edge_nesting(*e) == level {
                produced.extend(g.targets(*e).iter().copied());
                consumed.extend(g.sources(*e).iter().copied());
            }
        }
    }
    let level_vertices: Vec<VertexId> = members
        .iter()
        .filter_map(|x| match x {
            Elem::Vertex(v) if g.vertex_nesting(*v) == level => Some(*v),
            _ => None,
        })
        .collect();
    let mut inputs: Vec<VertexId> = level_vertices.iter().copied().filter(|v| !produced.contains(v)).collect();
    let mut outputs: Vec<VertexId> = level_vertices.iter().copied().filter(|v| !consumed.contains(v)).collect();
    // Reading order: by the first member edge touching the vertex, in
    // topological order, then by port.
    let order = g.topological_edges().unwrap_or_else(|| g.edges().collect());
    let mut first_use: BTreeMap<VertexId, (usize, usize)> = BTreeMap::new();
    let mut first_def: BTreeMap<VertexId, (usize, usize)> = BTreeMap::new();
    for (i, e) in order.iter().enumerate().filter(|(_, e)| members.contains(&Elem::Edge(**e)) && g.edge_nesting(**e) == level) {
        for (k, v) in g.sources(*e).iter().enumerate() {
            first_use.entry(*v).or_insert((i, k));
        }
        for (k, v) in g.targets(*e).iter().enumerate() {
            first_def.entry(*v).or_insert((i, k));
        }
    }
    inputs.sort_by_key(|v| first_use.get(v).copied().unwrap_or((usize::MAX, 0)));
    outputs.sort_by_key(|v| first_def.get(v).copied().unwrap_or((usize::MAX, 0)));
    (inputs, outputs)
}

/// The cospan carried by `members`, with `level` lifted to top level, the
/// given external boundary, and the host's strict internal slots that fall
/// inside the region. Returned with its inclusion into the host carrier.
pub fn sub_cospan(
    host: &ExtendedCospan,
    members: &BTreeSet<Elem>,
    level: Option<Nesting>,
    inputs: &[VertexId],
    outputs: &[VertexId],
) -> (ExtendedCospan, EHomomorphism) {
    let g = &host.carrier;
    let (sub, h) = induced(g, members, level);
    let mut c = ExtendedCospan::from_boundary(
        sub,
        inputs.iter().map(|v| h.vmap[v]).collect(),
        outputs.iter().map(|v| h.vmap[v]).collect(),
    );
    let deeper = |v: &VertexId| members.contains(&Elem::Vertex(*v)) && g.vertex_nesting(*v).is_some() && g.vertex_nesting(*v) != level;
    for k in host.strict_in_slots() {
        let v = host.int_in[k];
        if deeper(&v) {
            c.int_in.push(h.vmap[&v]);
        }
    }
    for k in host.strict_out_slots() {
        let v = host.int_out[k];
        if deeper(&v) {
            c.int_out.push(h.vmap[&v]);
        }
    }
    let inclusion = EHomomorphism {
        vmap: h.vmap.iter().map(|(&a, &b)| (b, a)).collect(),
        emap: h.emap.iter().map(|(&a, &b)| (b, a)).collect(),
    };
    (c, inclusion)
}

/// [`sub_cospan`] of a region with its own boundary.
pub(crate) fn region_cospan(host: &ExtendedCospan, r: &Region) -> (ExtendedCospan, EHomomorphism) {
    sub_cospan(host, &r.members, r.level, &r.inputs, &r.outputs)
}

/// Stable reorder of `vs` following the host interface on one side: first
/// the external boundary, then the internal interface, then the rest.
pub(crate) fn interface_order(host: &ExtendedCospan, vs: &mut [VertexId], outputs: bool) {
    let (ext, int) = if outputs { (host.outputs(), &host.int_out) } else { (host.inputs(), &host.int_in) };
    vs.sort_by_key(|v| match ext.iter().position(|x| x == v) {
        Some(p) => (0, p),
        None => int.iter().position(|x| x == v).map_or((2, 0), |p| (1, p)),
    });
}
