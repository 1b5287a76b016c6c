//! Extended cospans `n → n' → G ← m' ← m` over e-hypergraphs.
//!
//! The external interfaces (`n`, `m`) are the ordinary boundary of a diagram.
//! The internal interfaces (`n'`, `m'`) extend them with the wires that enter
//! and leave the components of e-boxes.

mod iso;
mod ops;
mod pushout;

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{Condition, EHypergraph, Elem, Nesting, ValidationReport, VertexId};
use crate::signature::Signature;

pub use iso::{check_iso, fingerprint, iso, is_iso, IsoSet, IsoWitness};
pub use ops::{compose, join, join_raw, tensor, tensor_all, CospanError};
pub use pushout::{pushout, Pushout, PushoutError};

/// An extended cospan. `int_in[j]` is `f_int(j)` and `ext_in[k]` is
/// `f_ext(k)`, an index into `int_in`; likewise on the output side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtendedCospan {
    pub carrier: EHypergraph,
    pub int_in: Vec<VertexId>,
    pub ext_in: Vec<usize>,
    pub int_out: Vec<VertexId>,
    pub ext_out: Vec<usize>,
}

/// One block of an internal interface: slots whose vertices are pairwise
/// consistent, in interface order. Top-level slots form singleton blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub nesting: Option<Nesting>,
    pub slots: Vec<usize>,
}

impl ExtendedCospan {
    /// A cospan whose interfaces are all external.
    pub fn from_boundary(carrier: EHypergraph, inputs: Vec<VertexId>, outputs: Vec<VertexId>) -> Self {
        ExtendedCospan {
            ext_in: (0..inputs.len()).collect(),
            ext_out: (0..outputs.len()).collect(),
            int_in: inputs,
            int_out: outputs,
            carrier,
        }
    }

    pub fn empty() -> Self {
        Self::identity(0)
    }

    pub fn identity(n: usize) -> Self {
        let (g, vs) = EHypergraph::discrete(n);
        Self::from_boundary(g, vs.clone(), vs)
    }

    /// `sym(n, m) : n + m → m + n`.
    pub fn symmetry(n: usize, m: usize) -> Self {
        let (g, vs) = EHypergraph::discrete(n + m);
        let outs = vs[n..].iter().chain(vs[..n].iter()).copied().collect();
        Self::from_boundary(g, vs, outs)
    }

    /// Discrete cospan sending input wire `i` to output position `targets[i]`.
    pub fn permutation(targets: &[usize]) -> Self {
        let n = targets.len();
        let (g, vs) = EHypergraph::discrete(n);
        let mut outs = vec![VertexId(0); n];
        for (i, &t) in targets.iter().enumerate() {
            outs[t] = vs[i];
        }
        Self::from_boundary(g, vs, outs)
    }

    /// The single-edge cospan of a generator.
    pub fn generator(name: &str, arity: usize, coarity: usize) -> Self {
        let mut g = EHypergraph::new();
        let ins: Vec<_> = (0..arity).map(|_| g.add_vertex(None)).collect();
        let outs: Vec<_> = (0..coarity).map(|_| g.add_vertex(None)).collect();
        g.add_edge(crate::graph::Label::gen(name), ins.clone(), outs.clone(), None);
        Self::from_boundary(g, ins, outs)
    }

    pub fn arity(&self) -> usize {
        self.ext_in.len()
    }

    pub fn coarity(&self) -> usize {
        self.ext_out.len()
    }

    /// Vertices of the external input interface, in order.
    pub fn inputs(&self) -> Vec<VertexId> {
        self.ext_in.iter().map(|&k| self.int_in[k]).collect()
    }

    pub fn outputs(&self) -> Vec<VertexId> {
        self.ext_out.iter().map(|&k| self.int_out[k]).collect()
    }

    /// Indices of `int_in` outside the image of `ext_in`, ascending.
    pub fn strict_in_slots(&self) -> Vec<usize> {
        let ext: BTreeSet<usize> = self.ext_in.iter().copied().collect();
        (0..self.int_in.len()).filter(|k| !ext.contains(k)).collect()
    }

    pub fn strict_out_slots(&self) -> Vec<usize> {
        let ext: BTreeSet<usize> = self.ext_out.iter().copied().collect();
        (0..self.int_out.len()).filter(|k| !ext.contains(k)).collect()
    }

    fn blocks(&self, slots: &[VertexId]) -> Vec<Block> {
        let mut out: Vec<Block> = Vec::new();
        let mut index: BTreeMap<Nesting, usize> = BTreeMap::new();
        for (k, &v) in slots.iter().enumerate() {
            match self.carrier.vertex_nesting(v) {
                None => out.push(Block {
                    nesting: None,
                    slots: vec![k],
                }),
                Some(n) => match index.get(&n) {
                    Some(&b) => out[b].slots.push(k),
                    None => {
                        index.insert(n, out.len());
                        out.push(Block {
                            nesting: Some(n),
                            slots: vec![k],
                        });
                    }
                },
            }
        }
        out
    }

    /// Partition of `int_in` into consistency blocks.
    pub fn in_blocks(&self) -> Vec<Block> {
        self.blocks(&self.int_in)
    }

    pub fn out_blocks(&self) -> Vec<Block> {
        self.blocks(&self.int_out)
    }

    /// Inner input vertices of component `(e, c)`, in interface order.
    pub fn component_inputs(&self, n: Nesting) -> Vec<VertexId> {
        self.strict_in_slots()
            .into_iter()
            .map(|k| self.int_in[k])
            .filter(|&v| self.carrier.vertex_nesting(v) == Some(n))
            .collect()
    }

    pub fn component_outputs(&self, n: Nesting) -> Vec<VertexId> {
        self.strict_out_slots()
            .into_iter()
            .map(|k| self.int_out[k])
            .filter(|&v| self.carrier.vertex_nesting(v) == Some(n))
            .collect()
    }

    /// Carrier validity plus the two interface conditions.
    pub fn validate(&self, sig: &Signature) -> ValidationReport {
        let mut report = self.carrier.validate(sig);
        report.extend(self.validate_interfaces());
        report
    }

    /// Interface conditions only.
    pub fn validate_interfaces(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (name, ext, int) in [("input", &self.ext_in, &self.int_in), ("output", &self.ext_out, &self.int_out)] {
            let mut seen = BTreeSet::new();
            for &k in ext {
                if k >= int.len() {
                    report.push(Condition::UnknownSlot, None, format!("external {name} slot points past the internal interface"));
                } else if !seen.insert(k) {
                    report.push(Condition::SlotMapNotInjective, None, format!("external {name} map is not injective"));
                }
            }
            for (k, &v) in int.iter().enumerate() {
                if !self.carrier.has_vertex(v) {
                    report.push(Condition::UnknownSlot, None, format!("{name} slot {k} points to unknown vertex {v}"));
                    continue;
                }
                let top = self.carrier.vertex_nesting(v).is_none();
                if seen.contains(&k) && !top {
                    report.push(
                        Condition::ExternalSlotNotTopLevel,
                        Some(Elem::Vertex(v)),
                        format!("external {name} slot {k} maps to nested vertex {v}"),
                    );
                }
                if !seen.contains(&k) && top {
                    report.push(
                        Condition::InternalSlotTopLevel,
                        Some(Elem::Vertex(v)),
                        format!("strictly internal {name} slot {k} maps to top-level vertex {v}"),
                    );
                }
            }
        }
        report
    }

    /// Monogamy, acyclicity and well-typedness of every e-box.
    pub fn mda_report(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let g = &self.carrier;
        if !g.is_acyclic() {
            report.push(Condition::Cyclic, None, "carrier is cyclic".into());
        }
        for (name, int) in [("input", &self.int_in), ("output", &self.int_out)] {
            let set: BTreeSet<_> = int.iter().collect();
            if set.len() != int.len() {
                report.push(Condition::SlotMapNotInjective, None, format!("internal {name} map is not injective"));
            }
        }
        let ins: BTreeSet<VertexId> = self.int_in.iter().copied().collect();
        let outs: BTreeSet<VertexId> = self.int_out.iter().copied().collect();
        for (v, (din, dout)) in g.all_degrees() {
            if din > 1 || dout > 1 {
                report.push(Condition::DegreeTooHigh, Some(Elem::Vertex(v)), format!("{v} has degrees ({din}, {dout})"));
            }
            if (din == 0) != ins.contains(&v) {
                report.push(
                    Condition::InputsMismatch,
                    Some(Elem::Vertex(v)),
                    format!("{v} has in-degree {din} but is{} an input", if ins.contains(&v) { "" } else { " not" }),
                );
            }
            if (dout == 0) != outs.contains(&v) {
                report.push(
                    Condition::OutputsMismatch,
                    Some(Elem::Vertex(v)),
                    format!("{v} has out-degree {dout} but is{} an output", if outs.contains(&v) { "" } else { " not" }),
                );
            }
        }
        report.extend(self.box_typing_report());
        report
    }

    /// Every component of every e-box has as many inner inputs (outputs) as
    /// the box has sources (targets).
    pub fn box_typing_report(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let g = &self.carrier;
        let mut in_count: BTreeMap<Nesting, usize> = BTreeMap::new();
        let mut out_count: BTreeMap<Nesting, usize> = BTreeMap::new();
        for k in self.strict_in_slots() {
            if let Some(n) = g.vertex_nesting(self.int_in[k]) {
                *in_count.entry(n).or_default() += 1;
            }
        }
        for k in self.strict_out_slots() {
            if let Some(n) = g.vertex_nesting(self.int_out[k]) {
                *out_count.entry(n).or_default() += 1;
            }
        }
        for e in g.hierarchical_edges() {
            let (ns, nt) = (g.sources(e).len(), g.targets(e).len());
            for c in g.component_ids(e) {
                let n = Nesting { parent: e, component: c };
                let i = in_count.get(&n).copied().unwrap_or(0);
                let o = out_count.get(&n).copied().unwrap_or(0);
                if i != ns || o != nt {
                    report.push(
                        Condition::IllTypedBox,
                        Some(Elem::Edge(e)),
                        format!("component {c} of {e} has type {i} -> {o}, box has {ns} -> {nt}"),
                    );
                }
            }
        }
        report
    }

    pub fn is_mda_well_typed(&self) -> bool {
        self.mda_report().is_valid()
    }

    /// Full check used on engine inputs: validity and MDA well-typedness.
    pub fn check(&self, sig: &Signature) -> ValidationReport {
        let mut r = self.validate(sig);
        if r.is_valid() {
            r.extend(self.mda_report());
        }
        r
    }

    /// Interface vertices of component `(e, c)` viewed as a cospan of its own:
    /// the component's contents lifted to top level, with its inner
    /// input/output blocks as the external interface.
    pub fn component_cospan(&self, n: Nesting) -> ExtendedCospan {
        let g = &self.carrier;
        let mut members: BTreeSet<Elem> = BTreeSet::new();
        for x in g.elems() {
            if g.nesting(x) == Some(n) {
                members.insert(x);
                if let Elem::Edge(e) = x {
                    members.extend(g.down_closure(&[e].into()));
                }
            }
        }
        let (sub, h) = induced(g, &members, Some(n));
        let ins = self.component_inputs(n).iter().map(|v| h.vmap[v]).collect();
        let outs = self.component_outputs(n).iter().map(|v| h.vmap[v]).collect();
        let mut c = ExtendedCospan::from_boundary(sub, ins, outs);
        // Deeper inner interfaces become this cospan's strict slots.
        for k in self.strict_in_slots() {
            let v = self.int_in[k];
            if let Some(&w) = h.vmap.get(&v) {
                if c.carrier.vertex_nesting(w).is_some() {
                    c.int_in.push(w);
                }
            }
        }
        for k in self.strict_out_slots() {
            let v = self.int_out[k];
            if let Some(&w) = h.vmap.get(&v) {
                if c.carrier.vertex_nesting(w).is_some() {
                    c.int_out.push(w);
                }
            }
        }
        c
    }
}

/// Copies the elements of `members` into a fresh graph, lifting those at
/// `level` to top level. Returns the copy and the map from old to new ids.
pub(crate) fn induced(
    g: &EHypergraph,
    members: &BTreeSet<Elem>,
    level: Option<Nesting>,
) -> (EHypergraph, crate::graph::EHomomorphism) {
    let mut out = EHypergraph::new();
    let mut h = crate::graph::EHomomorphism::default();
    for x in members {
        if let Elem::Vertex(v) = x {
            h.vmap.insert(*v, out.add_vertex(None));
        }
    }
    for x in members {
        if let Elem::Edge(e) = x {
            let d = g.edge(*e);
            let id = out.add_edge(
                d.label.clone(),
                d.sources.iter().map(|v| h.vmap[v]).collect(),
                d.targets.iter().map(|v| h.vmap[v]).collect(),
                None,
            );
            h.emap.insert(*e, id);
        }
    }
    for &x in members {
        let n = g.nesting(x);
        let lifted = match n {
            Some(m) if Some(m) == level => None,
            Some(m) => Some(Nesting {
                parent: h.emap[&m.parent],
                component: m.component,
            }),
            None => None,
        };
        out.set_nesting(h.map_elem(x).unwrap(), lifted);
    }
    (out, h)
}
