//! Pushouts of spans `X ← Z → Y` with `Z` discrete.
//!
//! Vertices are glued along `Z`; edges are never identified. Nesting is
//! inherited by glued vertices, and then propagated to every top-level element
//! connected to a nested glued vertex, merging components where needed.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{EHomomorphism, EHypergraph, Elem, Nesting, UnionFind, VertexId};

#[derive(Clone, Debug)]
pub struct Pushout {
    pub object: EHypergraph,
    pub inj_left: EHomomorphism,
    pub inj_right: EHomomorphism,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PushoutError {
    #[error("apex of the span is not discrete")]
    NotDiscrete,
    #[error("leg does not map every vertex of the apex")]
    PartialLeg,
    #[error("assumption {number} violated: {detail}")]
    Assumption { number: u8, detail: String },
    #[error("glued region reaches two different parents")]
    ConflictingParents,
}

fn check_leg(z: &EHypergraph, g: &EHypergraph, f: &EHomomorphism, side: &str) -> Result<(), PushoutError> {
    let mut seen: Option<Option<Nesting>> = None;
    for v in z.vertices() {
        let w = *f.vmap.get(&v).ok_or(PushoutError::PartialLeg)?;
        if !g.has_vertex(w) {
            return Err(PushoutError::PartialLeg);
        }
        let n = g.vertex_nesting(w);
        match seen {
            None => seen = Some(n),
            Some(m) => {
                if m.map(|x| x.parent) != n.map(|x| x.parent) {
                    return Err(PushoutError::Assumption {
                        number: 2,
                        detail: format!("images under the {side} leg have different parents"),
                    });
                }
                if m != n {
                    return Err(PushoutError::Assumption {
                        number: 4,
                        detail: format!("images under the {side} leg lie in different components"),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Pushout of `x ←f– z –g→ y`. The left leg keeps its ids; the unglued part
/// of `y` receives fresh ids.
pub fn pushout(
    z: &EHypergraph,
    x: &EHypergraph,
    f: &EHomomorphism,
    y: &EHypergraph,
    g: &EHomomorphism,
) -> Result<Pushout, PushoutError> {
    if !z.is_discrete() {
        return Err(PushoutError::NotDiscrete);
    }
    check_leg(z, x, f, "left")?;
    check_leg(z, y, g, "right")?;
    for v in z.vertices() {
        if x.vertex_nesting(f.vmap[&v]).is_some() && y.vertex_nesting(g.vmap[&v]).is_some() {
            return Err(PushoutError::Assumption {
                number: 3,
                detail: format!("{v} gains parents through both legs"),
            });
        }
    }

    // Union-find over X's vertices followed by Y's.
    let xv: Vec<VertexId> = x.vertices().collect();
    let yv: Vec<VertexId> = y.vertices().collect();
    let xi: BTreeMap<VertexId, usize> = xv.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let yi: BTreeMap<VertexId, usize> = yv.iter().enumerate().map(|(i, &v)| (v, xv.len() + i)).collect();
    let mut uf = UnionFind::new(xv.len() + yv.len());
    for v in z.vertices() {
        uf.union(xi[&f.vmap[&v]], yi[&g.vmap[&v]]);
    }

    let mut q = x.clone();
    let mut inj_left = EHomomorphism::default();
    let mut inj_right = EHomomorphism::default();
    let mut rep_vertex: BTreeMap<usize, VertexId> = BTreeMap::new();
    for (i, &v) in xv.iter().enumerate() {
        let r = uf.find(i);
        // The union-find root of a class with an X member is its least X index.
        if r == i {
            rep_vertex.insert(r, v);
        } else {
            q.remove_vertex(v);
        }
    }
    for (i, &v) in xv.iter().enumerate() {
        inj_left.vmap.insert(v, rep_vertex[&uf.find(i)]);
    }
    for e in x.edges() {
        inj_left.emap.insert(e, e);
        let d = q.edge_mut(e);
        for s in d.sources.iter_mut().chain(d.targets.iter_mut()) {
            *s = inj_left.vmap[s];
        }
    }
    for (j, &v) in yv.iter().enumerate() {
        let r = uf.find(xv.len() + j);
        let w = *rep_vertex.entry(r).or_insert_with(|| q.add_vertex(None));
        inj_right.vmap.insert(v, w);
    }
    for e in y.edges() {
        let d = y.edge(e);
        let id = q.add_edge(
            d.label.clone(),
            d.sources.iter().map(|v| inj_right.vmap[v]).collect(),
            d.targets.iter().map(|v| inj_right.vmap[v]).collect(),
            None,
        );
        inj_right.emap.insert(e, id);
    }
    let lift = |n: Nesting| Nesting {
        parent: inj_right.emap[&n.parent],
        component: n.component,
    };
    for e in y.edges() {
        if let Some(n) = y.edge_nesting(e) {
            q.set_nesting(Elem::Edge(inj_right.emap[&e]), Some(lift(n)));
        }
    }
    for v in y.vertices() {
        if let Some(n) = y.vertex_nesting(v) {
            q.set_nesting(Elem::Vertex(inj_right.vmap[&v]), Some(lift(n)));
        }
    }

    // Propagate nesting across connected pieces containing a nested vertex.
    let elems: Vec<Elem> = q.elems().collect();
    let index: BTreeMap<Elem, usize> = elems.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let mut conn = UnionFind::new(elems.len());
    for e in q.edges() {
        let d = q.edge(e);
        for v in d.sources.iter().chain(d.targets.iter()) {
            conn.union(index[&Elem::Edge(e)], index[&Elem::Vertex(*v)]);
        }
    }
    let mut pieces: BTreeMap<usize, Vec<Elem>> = BTreeMap::new();
    for (i, &x) in elems.iter().enumerate() {
        pieces.entry(conn.find(i)).or_default().push(x);
    }
    let mut renames: Vec<(Nesting, Nesting)> = Vec::new();
    let mut assign: Vec<(Elem, Nesting)> = Vec::new();
    for piece in pieces.values() {
        let nests: BTreeSet<Nesting> = piece.iter().filter_map(|&x| q.nesting(x)).collect();
        let Some(&first) = nests.iter().next() else { continue };
        if nests.iter().any(|n| n.parent != first.parent) {
            return Err(PushoutError::ConflictingParents);
        }
        for &n in nests.iter().skip(1) {
            renames.push((n, first));
        }
        for &x in piece {
            if q.nesting(x).is_none() {
                assign.push((x, first));
            }
        }
    }
    for (x, n) in assign {
        q.set_nesting(x, Some(n));
    }
    if !renames.is_empty() {
        // Resolve chains so every merged component lands on one index.
        let mut target: BTreeMap<Nesting, Nesting> = BTreeMap::new();
        for (from, to) in renames {
            let mut t = to;
            while let Some(&n) = target.get(&t) {
                t = n;
            }
            if t != from {
                target.insert(from, t);
            }
        }
        let all: Vec<Elem> = q.elems().collect();
        for x in all {
            if let Some(mut n) = q.nesting(x) {
                while let Some(&m) = target.get(&n) {
                    n = m;
                }
                q.set_nesting(x, Some(n));
            }
        }
    }
    Ok(Pushout {
        object: q,
        inj_left,
        inj_right,
    })
}
