//! Translation of a canonical, acyclic, connected e-graph into an extended
//! cospan over a Cartesian signature.

use std::collections::BTreeMap;

use crate::cospan::ExtendedCospan;
use crate::graph::{EHypergraph, Label, Nesting, VertexId};
use crate::signature::{Signature, DEL, DUP};

use super::{EGraph, EGraphError, Id};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranslateError {
    #[error(transparent)]
    NotCanonical(#[from] EGraphError),
    #[error("e-graph is cyclic")]
    Cyclic,
    #[error("e-graph is not connected")]
    Disconnected,
    #[error("e-graph is empty")]
    Empty,
    #[error("signature is not Cartesian")]
    NotCartesian,
    #[error("node head {head} with {arity} children is not a generator {arity} -> 1 of the signature")]
    UnknownHead { head: String, arity: usize },
    #[error("translation is not a well-typed MDA cospan: {0}")]
    Internal(String),
}

/// Each class with several nodes becomes an e-box whose sources list the
/// children of its nodes in node order; component `i` applies node `i` to
/// its own slice and deletes every other slice. Singleton classes become
/// plain edges. A class used `k > 1` times feeds its users through a chain of
/// `k - 1` copies, each continuing on its left output. Roots, in ascending
/// id order, form the output interface.
pub fn translate(eg: &EGraph, sig: &Signature) -> Result<ExtendedCospan, TranslateError> {
    eg.check_invariants()?;
    if !sig.is_cartesian() {
        return Err(TranslateError::NotCartesian);
    }
    if eg.class_count() == 0 {
        return Err(TranslateError::Empty);
    }
    if !eg.is_acyclic() {
        return Err(TranslateError::Cyclic);
    }
    if !eg.is_connected() {
        return Err(TranslateError::Disconnected);
    }
    let ids = eg.class_ids();
    for &id in &ids {
        for n in eg.nodes(id) {
            match sig.get(&n.head) {
                Some(gen) if gen.arity == n.children.len() && gen.coarity == 1 => {}
                _ => {
                    return Err(TranslateError::UnknownHead {
                        head: n.head.clone(),
                        arity: n.children.len(),
                    })
                }
            }
        }
    }

    let mut g = EHypergraph::new();
    let out: BTreeMap<Id, VertexId> = ids.iter().map(|&id| (id, g.add_vertex(None))).collect();
    let mut uses: BTreeMap<Id, usize> = BTreeMap::new();
    for &id in &ids {
        for n in eg.nodes(id) {
            for c in &n.children {
                *uses.entry(eg.find(*c)).or_default() += 1;
            }
        }
    }
    // Use sites of each class, handed out in traversal order.
    let mut feeds: BTreeMap<Id, Vec<VertexId>> = BTreeMap::new();
    for &id in &ids {
        let k = uses.get(&id).copied().unwrap_or(0);
        let mut wires = Vec::new();
        if k == 1 {
            wires.push(out[&id]);
        } else if k > 1 {
            let mut cur = out[&id];
            let mut rights = Vec::new();
            for _ in 0..k - 1 {
                let l = g.add_vertex(None);
                let r = g.add_vertex(None);
                g.add_edge(Label::gen(DUP), vec![cur], vec![l, r], None);
                rights.push(r);
                cur = l;
            }
            wires.push(cur);
            wires.extend(rights.into_iter().rev());
        }
        wires.reverse();
        feeds.insert(id, wires);
    }
    let take = |c: Id, feeds: &mut BTreeMap<Id, Vec<VertexId>>| feeds.get_mut(&eg.find(c)).and_then(Vec::pop).unwrap();

    let mut int_in: Vec<VertexId> = Vec::new();
    let mut int_out: Vec<VertexId> = ids.iter().filter(|id| !uses.contains_key(id)).map(|id| out[id]).collect();
    let roots = int_out.len();
    for &id in &ids {
        let nodes = eg.nodes(id);
        if let [n] = &nodes[..] {
            let srcs = n.children.iter().map(|&c| take(c, &mut feeds)).collect();
            g.add_edge(Label::gen(&n.head), srcs, vec![out[&id]], None);
            continue;
        }
        let srcs: Vec<VertexId> = nodes.iter().flat_map(|n| n.children.clone()).map(|c| take(c, &mut feeds)).collect();
        let bx = g.add_edge(Label::Hierarchical, srcs, vec![out[&id]], None);
        for (i, n) in nodes.iter().enumerate() {
            let nest = Some(Nesting {
                parent: bx,
                component: i as u32,
            });
            let mut slices: Vec<Vec<VertexId>> = Vec::new();
            for m in &nodes {
                let slice: Vec<VertexId> = m.children.iter().map(|_| g.add_vertex(nest)).collect();
                int_in.extend(&slice);
                slices.push(slice);
            }
            let o = g.add_vertex(nest);
            int_out.push(o);
            for (j, slice) in slices.into_iter().enumerate() {
                if j == i {
                    g.add_edge(Label::gen(&n.head), slice, vec![o], nest);
                } else {
                    for v in slice {
                        g.add_edge(Label::gen(DEL), vec![v], vec![], nest);
                    }
                }
            }
        }
    }
    let c = ExtendedCospan {
        carrier: g,
        int_in,
        ext_in: Vec::new(),
        int_out,
        ext_out: (0..roots).collect(),
    };
    let mut report = c.validate(sig);
    report.extend(c.mda_report());
    if !report.is_valid() {
        return Err(TranslateError::Internal(report.to_string()));
    }
    Ok(c)
}
