//! JSON documents for e-hypergraphs and extended cospans.
//!
//! Vertices are written `v<n>` and edges `e<n>`. An edge without a label is
//! hierarchical. Writing renumbers ids densely in id order, so writing what
//! was read reproduces the same bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cospan::ExtendedCospan;
use crate::graph::{EHypergraph, EdgeData, EdgeId, Elem, Label, Nesting, VertexId};
use crate::signature::{Signature, DEL, DUP};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IoError {
    #[error("malformed document: {0}")]
    Json(String),
    #[error("bad id `{0}`")]
    BadId(String),
    #[error("duplicate id `{0}`")]
    Duplicate(String),
    #[error("dangling-reference: unknown {kind} `{id}`")]
    Unknown { kind: &'static str, id: String },
    #[error("generator {name} is used with types {a} -> {b} and {c} -> {d}")]
    Inconsistent { name: String, a: usize, b: usize, c: usize, d: usize },
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    sources: Vec<String>,
    targets: Vec<String>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
struct ParentDoc {
    child: String,
    parent: String,
    component: u32,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
struct GraphDoc {
    vertices: Vec<String>,
    edges: Vec<EdgeDoc>,
    #[serde(default)]
    parents: Vec<ParentDoc>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
struct CospanDoc {
    #[serde(flatten)]
    graph: GraphDoc,
    int_in: Vec<String>,
    ext_in: Vec<usize>,
    int_out: Vec<String>,
    ext_out: Vec<usize>,
}

fn parse_id(s: &str, prefix: char) -> Result<u32, IoError> {
    s.strip_prefix(prefix)
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| IoError::BadId(s.to_string()))
}

fn graph_doc(g: &EHypergraph) -> GraphDoc {
    let mut parents = Vec::new();
    for x in g.elems() {
        if let Some(n) = g.nesting(x) {
            parents.push(ParentDoc {
                child: x.to_string(),
                parent: n.parent.to_string(),
                component: n.component,
            });
        }
    }
    GraphDoc {
        vertices: g.vertices().map(|v| v.to_string()).collect(),
        edges: g
            .edges()
            .map(|e| EdgeDoc {
                id: e.to_string(),
                label: g.label(e).name().map(str::to_string),
                sources: g.sources(e).iter().map(|v| v.to_string()).collect(),
                targets: g.targets(e).iter().map(|v| v.to_string()).collect(),
            })
            .collect(),
        parents,
    }
}

fn read_graph(doc: &GraphDoc) -> Result<EHypergraph, IoError> {
    let mut g = EHypergraph::new();
    for v in &doc.vertices {
        let id = VertexId(parse_id(v, 'v')?);
        if g.has_vertex(id) {
            return Err(IoError::Duplicate(v.clone()));
        }
        g.insert_vertex_with_id(id, None);
    }
    let vertex = |g: &EHypergraph, s: &String| -> Result<VertexId, IoError> {
        let id = VertexId(parse_id(s, 'v')?);
        if g.has_vertex(id) {
            Ok(id)
        } else {
            Err(IoError::Unknown { kind: "vertex", id: s.clone() })
        }
    };
    for e in &doc.edges {
        let id = EdgeId(parse_id(&e.id, 'e')?);
        if g.has_edge(id) {
            return Err(IoError::Duplicate(e.id.clone()));
        }
        let sources = e.sources.iter().map(|s| vertex(&g, s)).collect::<Result<_, _>>()?;
        let targets = e.targets.iter().map(|s| vertex(&g, s)).collect::<Result<_, _>>()?;
        let label = match &e.label {
            Some(name) => Label::gen(name),
            None => Label::Hierarchical,
        };
        g.insert_edge_with_id(
            id,
            EdgeData {
                label,
                sources,
                targets,
                nesting: None,
            },
        );
    }
    for p in &doc.parents {
        let child = if p.child.starts_with('v') {
            Elem::Vertex(vertex(&g, &p.child)?)
        } else {
            let id = EdgeId(parse_id(&p.child, 'e')?);
            if !g.has_edge(id) {
                return Err(IoError::Unknown { kind: "edge", id: p.child.clone() });
            }
            Elem::Edge(id)
        };
        // Unknown parents are kept so validation can report them.
        let parent = EdgeId(parse_id(&p.parent, 'e')?);
        g.set_nesting(
            child,
            Some(Nesting {
                parent,
                component: p.component,
            }),
        );
    }
    Ok(g)
}

/// The cospan with ids renumbered densely in id order.
pub fn canonical(c: &ExtendedCospan) -> ExtendedCospan {
    let (g, h) = c.carrier.compacted();
    ExtendedCospan {
        carrier: g,
        int_in: c.int_in.iter().map(|v| h.v(*v)).collect(),
        ext_in: c.ext_in.clone(),
        int_out: c.int_out.iter().map(|v| h.v(*v)).collect(),
        ext_out: c.ext_out.clone(),
    }
}

pub fn graph_to_json(g: &EHypergraph) -> String {
    let (g, _) = g.compacted();
    serde_json::to_string_pretty(&graph_doc(&g)).expect("graph documents serialize")
}

pub fn graph_from_json(text: &str) -> Result<EHypergraph, IoError> {
    let doc: GraphDoc = serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
    read_graph(&doc)
}

pub fn cospan_to_json(c: &ExtendedCospan) -> String {
    let c = canonical(c);
    let doc = CospanDoc {
        graph: graph_doc(&c.carrier),
        int_in: c.int_in.iter().map(|v| v.to_string()).collect(),
        ext_in: c.ext_in.clone(),
        int_out: c.int_out.iter().map(|v| v.to_string()).collect(),
        ext_out: c.ext_out.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("cospan documents serialize")
}

/// Reads a cospan. Slot lists may point at unknown vertices; validation
/// reports those.
pub fn cospan_from_json(text: &str) -> Result<ExtendedCospan, IoError> {
    let doc: CospanDoc = serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
    let carrier = read_graph(&doc.graph)?;
    let slots = |xs: &[String]| xs.iter().map(|s| parse_id(s, 'v').map(VertexId)).collect::<Result<Vec<_>, _>>();
    Ok(ExtendedCospan {
        carrier,
        int_in: slots(&doc.int_in)?,
        ext_in: doc.ext_in,
        int_out: slots(&doc.int_out)?,
        ext_out: doc.ext_out,
    })
}

/// The smallest signature typing every labelled edge, Cartesian if copy or
/// delete occurs.
pub fn infer_signature(g: &EHypergraph) -> Result<Signature, IoError> {
    let mut types: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut cartesian = false;
    for e in g.edges() {
        let Some(name) = g.label(e).name() else { continue };
        if name == DUP || name == DEL {
            cartesian = true;
            continue;
        }
        let t = (g.sources(e).len(), g.targets(e).len());
        if let Some(&old) = types.get(name) {
            if old != t {
                return Err(IoError::Inconsistent {
                    name: name.to_string(),
                    a: old.0,
                    b: old.1,
                    c: t.0,
                    d: t.1,
                });
            }
        }
        types.insert(name.to_string(), t);
    }
    let mut sig = Signature::new();
    for (name, (a, b)) in types {
        // Nullary generators are left out so validation flags them.
        let _ = sig.add(&name, a, b);
    }
    if cartesian {
        sig.make_cartesian();
    }
    Ok(sig)
}
