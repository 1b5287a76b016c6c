//! E-hypergraphs: hypergraphs whose elements are nested inside hierarchical
//! edges, with each hierarchical edge's children split into consistency
//! components.
//!
//! The nesting relation is stored as an immediate parent per element together
//! with a component index, so `x ⌣ y` holds exactly when both elements have the
//! same parent and the same component index.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::signature::Signature;

/// Identifier of a vertex inside one [`EHypergraph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

/// Identifier of an edge inside one [`EHypergraph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// A vertex or an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Elem {
    Vertex(VertexId),
    Edge(EdgeId),
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Elem::Vertex(v) => v.fmt(f),
            Elem::Edge(e) => e.fmt(f),
        }
    }
}

/// Edge label: a generator symbol, or the hierarchical label of an e-box.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Gen(Arc<str>),
    Hierarchical,
}

impl Label {
    pub fn gen(name: &str) -> Self {
        Label::Gen(Arc::from(name))
    }

    pub fn is_hierarchical(&self) -> bool {
        matches!(self, Label::Hierarchical)
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Label::Gen(s) => Some(s),
            Label::Hierarchical => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Gen(s) => f.write_str(s),
            Label::Hierarchical => f.write_str("⊥"),
        }
    }
}

/// Immediate parent of an element and the consistency component it belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Nesting {
    pub parent: EdgeId,
    pub component: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeData {
    pub label: Label,
    pub sources: Vec<VertexId>,
    pub targets: Vec<VertexId>,
    pub nesting: Option<Nesting>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexData {
    pub nesting: Option<Nesting>,
}

/// An e-hypergraph. Ids are allocated monotonically and never reused, and all
/// iteration happens in id order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EHypergraph {
    vertices: BTreeMap<VertexId, VertexData>,
    edges: BTreeMap<EdgeId, EdgeData>,
    next_vertex: u32,
    next_edge: u32,
}

impl EHypergraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// A graph with `n` top-level vertices and no edges.
    pub fn discrete(n: usize) -> (Self, Vec<VertexId>) {
        let mut g = Self::new();
        let vs = (0..n).map(|_| g.add_vertex(None)).collect();
        (g, vs)
    }

    pub fn add_vertex(&mut self, nesting: Option<Nesting>) -> VertexId {
        let id = VertexId(self.next_vertex);
        self.next_vertex += 1;
        self.vertices.insert(id, VertexData { nesting });
        id
    }

    pub fn add_edge(
        &mut self,
        label: Label,
        sources: Vec<VertexId>,
        targets: Vec<VertexId>,
        nesting: Option<Nesting>,
    ) -> EdgeId {
        let id = EdgeId(self.next_edge);
        self.next_edge += 1;
        self.edges.insert(
            id,
            EdgeData {
                label,
                sources,
                targets,
                nesting,
            },
        );
        id
    }

    /// Inserts a vertex under a caller-chosen id. Used by deserialization and
    /// by the pushout, which keeps the ids of its left leg.
    pub fn insert_vertex_with_id(&mut self, id: VertexId, nesting: Option<Nesting>) {
        self.next_vertex = self.next_vertex.max(id.0 + 1);
        self.vertices.insert(id, VertexData { nesting });
    }

    pub fn insert_edge_with_id(&mut self, id: EdgeId, data: EdgeData) {
        self.next_edge = self.next_edge.max(id.0 + 1);
        self.edges.insert(id, data);
    }

    /// Removes a vertex. Edges still mentioning it are left dangling; callers
    /// remove or rewire them.
    pub fn remove_vertex(&mut self, v: VertexId) -> Option<VertexData> {
        self.vertices.remove(&v)
    }

    pub fn remove_edge(&mut self, e: EdgeId) -> Option<EdgeData> {
        self.edges.remove(&e)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn size(&self) -> usize {
        self.vertices.len() + self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.keys().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.keys().copied()
    }

    pub fn elems(&self) -> impl Iterator<Item = Elem> + '_ {
        self.vertices()
            .map(Elem::Vertex)
            .chain(self.edges().map(Elem::Edge))
    }

    pub fn has_vertex(&self, v: VertexId) -> bool {
        self.vertices.contains_key(&v)
    }

    pub fn has_edge(&self, e: EdgeId) -> bool {
        self.edges.contains_key(&e)
    }

    pub fn has_elem(&self, x: Elem) -> bool {
        match x {
            Elem::Vertex(v) => self.has_vertex(v),
            Elem::Edge(e) => self.has_edge(e),
        }
    }

    /// Edge data. Panics on an unknown id.
    pub fn edge(&self, e: EdgeId) -> &EdgeData {
        &self.edges[&e]
    }

    pub fn edge_mut(&mut self, e: EdgeId) -> &mut EdgeData {
        self.edges.get_mut(&e).expect("unknown edge")
    }

    pub fn get_edge(&self, e: EdgeId) -> Option<&EdgeData> {
        self.edges.get(&e)
    }

    pub fn label(&self, e: EdgeId) -> &Label {
        &self.edges[&e].label
    }

    pub fn sources(&self, e: EdgeId) -> &[VertexId] {
        &self.edges[&e].sources
    }

    pub fn targets(&self, e: EdgeId) -> &[VertexId] {
        &self.edges[&e].targets
    }

    pub fn nesting(&self, x: Elem) -> Option<Nesting> {
        match x {
            Elem::Vertex(v) => self.vertices[&v].nesting,
            Elem::Edge(e) => self.edges[&e].nesting,
        }
    }

    pub fn vertex_nesting(&self, v: VertexId) -> Option<Nesting> {
        self.vertices[&v].nesting
    }

    pub fn edge_nesting(&self, e: EdgeId) -> Option<Nesting> {
        self.edges[&e].nesting
    }

    pub fn parent(&self, x: Elem) -> Option<EdgeId> {
        self.nesting(x).map(|n| n.parent)
    }

    pub fn set_nesting(&mut self, x: Elem, nesting: Option<Nesting>) {
        match x {
            Elem::Vertex(v) => self.vertices.get_mut(&v).expect("unknown vertex").nesting = nesting,
            Elem::Edge(e) => self.edges.get_mut(&e).expect("unknown edge").nesting = nesting,
        }
    }

    pub fn is_top_level(&self, x: Elem) -> bool {
        self.nesting(x).is_none()
    }

    /// `x ⌣ y`: same parent and same component.
    pub fn consistent(&self, x: Elem, y: Elem) -> bool {
        match (self.nesting(x), self.nesting(y)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.edges.is_empty()
    }

    /// Number of ancestors of `x`.
    pub fn depth(&self, x: Elem) -> usize {
        let mut d = 0;
        let mut cur = self.parent(x);
        while let Some(p) = cur {
            d += 1;
            if d > self.edges.len() {
                break;
            }
            cur = self.edges.get(&p).and_then(|e| e.nesting).map(|n| n.parent);
        }
        d
    }

    /// All elements whose immediate parent is `e`, in id order.
    pub fn children(&self, e: EdgeId) -> Vec<Elem> {
        self.elems()
            .filter(|&x| self.parent(x) == Some(e))
            .collect()
    }

    /// Children of `e` grouped by component index.
    pub fn components(&self, e: EdgeId) -> BTreeMap<u32, Vec<Elem>> {
        let mut out: BTreeMap<u32, Vec<Elem>> = BTreeMap::new();
        for x in self.elems() {
            if let Some(n) = self.nesting(x) {
                if n.parent == e {
                    out.entry(n.component).or_default().push(x);
                }
            }
        }
        out
    }

    /// Component indices used under `e`, ascending.
    pub fn component_ids(&self, e: EdgeId) -> Vec<u32> {
        self.components(e).into_keys().collect()
    }

    /// Is `anc` a strict ancestor of `x`?
    pub fn is_ancestor(&self, anc: EdgeId, x: Elem) -> bool {
        let mut cur = self.parent(x);
        let mut steps = 0;
        while let Some(p) = cur {
            if p == anc {
                return true;
            }
            steps += 1;
            if steps > self.edges.len() {
                return false;
            }
            cur = self.edges.get(&p).and_then(|e| e.nesting).map(|n| n.parent);
        }
        false
    }

    pub fn hierarchical_edges(&self) -> Vec<EdgeId> {
        self.edges()
            .filter(|&e| self.label(e).is_hierarchical())
            .collect()
    }

    /// `(in, out)`: occurrences of `v` in edge targets and sources.
    pub fn degrees(&self, v: VertexId) -> Result<(usize, usize), GraphError> {
        if !self.has_vertex(v) {
            return Err(GraphError::UnknownVertex(v));
        }
        let mut din = 0;
        let mut dout = 0;
        for d in self.edges.values() {
            din += d.targets.iter().filter(|&&x| x == v).count();
            dout += d.sources.iter().filter(|&&x| x == v).count();
        }
        Ok((din, dout))
    }

    /// Degrees of every vertex at once.
    pub fn all_degrees(&self) -> BTreeMap<VertexId, (usize, usize)> {
        let mut out: BTreeMap<VertexId, (usize, usize)> =
            self.vertices().map(|v| (v, (0, 0))).collect();
        for d in self.edges.values() {
            for t in &d.targets {
                if let Some(x) = out.get_mut(t) {
                    x.0 += 1;
                }
            }
            for s in &d.sources {
                if let Some(x) = out.get_mut(s) {
                    x.1 += 1;
                }
            }
        }
        out
    }

    /// For each vertex, the edges having it as a source (with multiplicity).
    pub fn consumers(&self) -> BTreeMap<VertexId, Vec<EdgeId>> {
        let mut out: BTreeMap<VertexId, Vec<EdgeId>> =
            self.vertices().map(|v| (v, Vec::new())).collect();
        for (&e, d) in &self.edges {
            for s in &d.sources {
                out.entry(*s).or_default().push(e);
            }
        }
        out
    }

    /// For each vertex, the edges having it as a target (with multiplicity).
    pub fn producers(&self) -> BTreeMap<VertexId, Vec<EdgeId>> {
        let mut out: BTreeMap<VertexId, Vec<EdgeId>> =
            self.vertices().map(|v| (v, Vec::new())).collect();
        for (&e, d) in &self.edges {
            for t in &d.targets {
                out.entry(*t).or_default().push(e);
            }
        }
        out
    }

    /// True iff the underlying hypergraph has no directed edge path of
    /// positive length from an edge back to itself.
    pub fn is_acyclic(&self) -> bool {
        let consumers = self.consumers();
        // Kahn's algorithm over edges: e -> e' when t(e) meets s(e').
        let mut indeg: BTreeMap<EdgeId, usize> = self.edges().map(|e| (e, 0)).collect();
        let mut succ: BTreeMap<EdgeId, Vec<EdgeId>> = BTreeMap::new();
        for (&e, d) in &self.edges {
            let mut next = Vec::new();
            for t in &d.targets {
                if let Some(cs) = consumers.get(t) {
                    next.extend(cs.iter().copied());
                }
            }
            for &n in &next {
                *indeg.get_mut(&n).unwrap() += 1;
            }
            succ.insert(e, next);
        }
        let mut queue: VecDeque<EdgeId> = indeg
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&e, _)| e)
            .collect();
        let mut seen = 0;
        while let Some(e) = queue.pop_front() {
            seen += 1;
            for &n in &succ[&e] {
                let d = indeg.get_mut(&n).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push_back(n);
                }
            }
        }
        seen == self.edges.len()
    }

    /// Edges in a topological order of the underlying hypergraph, ties broken
    /// by id. `None` if the graph is cyclic.
    pub fn topological_edges(&self) -> Option<Vec<EdgeId>> {
        let producers = self.producers();
        let mut pending: BTreeMap<EdgeId, BTreeSet<EdgeId>> = BTreeMap::new();
        for (&e, d) in &self.edges {
            let mut deps = BTreeSet::new();
            for s in &d.sources {
                if let Some(ps) = producers.get(s) {
                    deps.extend(ps.iter().copied());
                }
            }
            pending.insert(e, deps);
        }
        let mut order = Vec::with_capacity(self.edges.len());
        let mut done = BTreeSet::new();
        while order.len() < self.edges.len() {
            let next = pending
                .iter()
                .find(|(e, deps)| !done.contains(*e) && deps.iter().all(|d| done.contains(d)))
                .map(|(&e, _)| e)?;
            done.insert(next);
            order.push(next);
        }
        Some(order)
    }

    /// Smallest set containing `seed` that is closed under children and
    /// under endpoints of included edges.
    pub fn down_closure(&self, seed: &BTreeSet<EdgeId>) -> BTreeSet<Elem> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<EdgeId> = seed.iter().copied().collect();
        while let Some(e) = stack.pop() {
            if !out.insert(Elem::Edge(e)) {
                continue;
            }
            let d = &self.edges[&e];
            for v in d.sources.iter().chain(d.targets.iter()) {
                out.insert(Elem::Vertex(*v));
            }
            for x in self.children(e) {
                match x {
                    Elem::Edge(c) => stack.push(c),
                    Elem::Vertex(_) => {
                        out.insert(x);
                    }
                }
            }
        }
        out
    }

    /// True iff every directed path between two vertices of `sub` stays
    /// inside `sub`.
    pub fn is_convex(&self, sub: &BTreeSet<Elem>) -> bool {
        let consumers = self.consumers();
        // Start from edges leaving `sub` and search forward outside it; the
        // set is convex iff no such walk re-enters a vertex of `sub`.
        let mut visited_edges = BTreeSet::new();
        let mut visited_vertices = BTreeSet::new();
        let mut stack: Vec<EdgeId> = Vec::new();
        for x in sub {
            if let Elem::Vertex(v) = x {
                for &e in consumers.get(v).into_iter().flatten() {
                    if !sub.contains(&Elem::Edge(e)) && visited_edges.insert(e) {
                        stack.push(e);
                    }
                }
            }
        }
        while let Some(e) = stack.pop() {
            for &t in &self.edges[&e].targets {
                if sub.contains(&Elem::Vertex(t)) {
                    return false;
                }
                if visited_vertices.insert(t) {
                    for &n in consumers.get(&t).into_iter().flatten() {
                        if visited_edges.insert(n) {
                            stack.push(n);
                        }
                    }
                }
            }
        }
        true
    }

    /// Connected pieces of the children of `(parent, component)` or of the top
    /// level, linking an edge with its endpoints.
    pub fn level_pieces(&self, level: Option<Nesting>) -> Vec<BTreeSet<Elem>> {
        let members: Vec<Elem> = self.elems().filter(|&x| self.nesting(x) == level).collect();
        let index: BTreeMap<Elem, usize> = members.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let mut uf = UnionFind::new(members.len());
        for &x in &members {
            if let Elem::Edge(e) = x {
                let d = &self.edges[&e];
                for v in d.sources.iter().chain(d.targets.iter()) {
                    if let Some(&j) = index.get(&Elem::Vertex(*v)) {
                        uf.union(index[&x], j);
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, BTreeSet<Elem>> = BTreeMap::new();
        for (i, &x) in members.iter().enumerate() {
            groups.entry(uf.find(i)).or_default().insert(x);
        }
        let mut out: Vec<_> = groups.into_values().collect();
        out.sort();
        out
    }

    /// Copies `src` into `self` under fresh ids. Top-level elements of `src`
    /// receive `top`; nested ones keep their nesting with remapped parents.
    pub fn embed(&mut self, src: &EHypergraph, top: Option<Nesting>) -> EHomomorphism {
        let mut h = EHomomorphism::default();
        for v in src.vertices() {
            h.vmap.insert(v, self.add_vertex(None));
        }
        for e in src.edges() {
            let d = src.edge(e);
            let id = self.add_edge(
                d.label.clone(),
                d.sources.iter().map(|v| h.vmap[v]).collect(),
                d.targets.iter().map(|v| h.vmap[v]).collect(),
                None,
            );
            h.emap.insert(e, id);
        }
        for x in src.elems() {
            let n = match src.nesting(x) {
                None => top,
                Some(n) => Some(Nesting {
                    parent: h.emap[&n.parent],
                    component: n.component,
                }),
            };
            self.set_nesting(h.map_elem(x).unwrap(), n);
        }
        h
    }

    /// Renumbers ids densely in id order, keeping relative order.
    pub fn compacted(&self) -> (EHypergraph, EHomomorphism) {
        let mut g = EHypergraph::new();
        let h = g.embed(self, None);
        (g, h)
    }

    /// Checks every well-formedness condition and returns all violations.
    pub fn validate(&self, sig: &Signature) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut has_children: BTreeSet<EdgeId> = BTreeSet::new();

        for x in self.elems() {
            if let Some(n) = self.nesting(x) {
                match self.edges.get(&n.parent) {
                    None => report.push(
                        Condition::DanglingReference,
                        Some(x),
                        format!("{x} has unknown parent {}", n.parent),
                    ),
                    Some(p) => {
                        has_children.insert(n.parent);
                        if !p.label.is_hierarchical() {
                            report.push(
                                Condition::ParentNotHierarchical,
                                Some(x),
                                format!("parent {} of {x} is labelled {}", n.parent, p.label),
                            );
                        }
                    }
                }
            }
        }

        for (&e, d) in &self.edges {
            let x = Elem::Edge(e);
            for v in d.sources.iter().chain(d.targets.iter()) {
                if !self.has_vertex(*v) {
                    report.push(
                        Condition::DanglingReference,
                        Some(x),
                        format!("{e} mentions unknown vertex {v}"),
                    );
                    continue;
                }
                let nv = self.vertices[v].nesting;
                if nv.map(|n| n.parent) != d.nesting.map(|n| n.parent) {
                    report.push(
                        Condition::NestingMismatch,
                        Some(x),
                        format!("{e} and its endpoint {v} have different parents"),
                    );
                } else if nv != d.nesting {
                    report.push(
                        Condition::ComponentNotClosed,
                        Some(x),
                        format!("{e} and its endpoint {v} lie in different components"),
                    );
                }
            }
            match &d.label {
                Label::Hierarchical => {
                    if !has_children.contains(&e) {
                        report.push(
                            Condition::ChildlessHierarchical,
                            Some(x),
                            format!("hierarchical edge {e} has no children"),
                        );
                    } else if self.component_ids(e).len() < 2 {
                        report.push(
                            Condition::SingleComponentBox,
                            Some(x),
                            format!("single-component e-box {e}"),
                        );
                    }
                }
                Label::Gen(name) => match sig.get(name) {
                    None => report.push(
                        Condition::UnknownGenerator,
                        Some(x),
                        format!("{e} has unknown label {name}"),
                    ),
                    Some(g) => {
                        if g.arity != d.sources.len() || g.coarity != d.targets.len() {
                            report.push(
                                Condition::TypingMismatch,
                                Some(x),
                                format!(
                                    "{e} labelled {name} has type {} -> {}, expected {} -> {}",
                                    d.sources.len(),
                                    d.targets.len(),
                                    g.arity,
                                    g.coarity
                                ),
                            );
                        }
                    }
                },
            }
        }

        // Acyclicity of the parent forest.
        for &e in self.edges.keys() {
            let mut cur = self.edges[&e].nesting.map(|n| n.parent);
            let mut steps = 0;
            while let Some(p) = cur {
                if p == e || steps > self.edges.len() {
                    report.push(
                        Condition::ParentCycle,
                        Some(Elem::Edge(e)),
                        format!("{e} is its own ancestor"),
                    );
                    break;
                }
                steps += 1;
                cur = self.edges.get(&p).and_then(|d| d.nesting).map(|n| n.parent);
            }
        }
        report
    }
}

/// One violated well-formedness condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    ParentNotHierarchical,
    ChildlessHierarchical,
    NestingMismatch,
    ParentCycle,
    ComponentNotClosed,
    SingleComponentBox,
    TypingMismatch,
    UnknownGenerator,
    DanglingReference,
    ExternalSlotNotTopLevel,
    InternalSlotTopLevel,
    SlotMapNotInjective,
    UnknownSlot,
    Cyclic,
    DegreeTooHigh,
    InputsMismatch,
    OutputsMismatch,
    IllTypedBox,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::ParentNotHierarchical => "parent-not-hierarchical",
            Condition::ChildlessHierarchical => "childless-hierarchical-edge",
            Condition::NestingMismatch => "edge-endpoint-parent-mismatch",
            Condition::ParentCycle => "parent-cycle",
            Condition::ComponentNotClosed => "component-not-closed-under-connectivity",
            Condition::SingleComponentBox => "single-component-e-box",
            Condition::TypingMismatch => "typing-mismatch",
            Condition::UnknownGenerator => "unknown-generator",
            Condition::DanglingReference => "dangling-reference",
            Condition::ExternalSlotNotTopLevel => "external-slot-not-top-level",
            Condition::InternalSlotTopLevel => "internal-slot-top-level",
            Condition::SlotMapNotInjective => "slot-map-not-injective",
            Condition::UnknownSlot => "unknown-slot",
            Condition::Cyclic => "cyclic",
            Condition::DegreeTooHigh => "degree-above-one",
            Condition::InputsMismatch => "inputs-not-in-degree-zero",
            Condition::OutputsMismatch => "outputs-not-out-degree-zero",
            Condition::IllTypedBox => "ill-typed-e-box",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub condition: Condition,
    pub element: Option<Elem>,
    pub message: String,
}

/// List of violations; empty means valid.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, condition: Condition, element: Option<Elem>, message: String) {
        self.violations.push(Violation {
            condition,
            element,
            message,
        });
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    pub fn has(&self, c: Condition) -> bool {
        self.violations.iter().any(|v| v.condition == c)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}: {}", v.condition, v.message)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
}

/// Homomorphism between two e-hypergraphs, stored as plain id maps. The
/// domain and codomain are passed alongside when checking it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EHomomorphism {
    pub vmap: BTreeMap<VertexId, VertexId>,
    pub emap: BTreeMap<EdgeId, EdgeId>,
}

impl EHomomorphism {
    pub fn map_elem(&self, x: Elem) -> Option<Elem> {
        match x {
            Elem::Vertex(v) => self.vmap.get(&v).map(|&w| Elem::Vertex(w)),
            Elem::Edge(e) => self.emap.get(&e).map(|&f| Elem::Edge(f)),
        }
    }

    pub fn v(&self, v: VertexId) -> VertexId {
        self.vmap[&v]
    }

    pub fn e(&self, e: EdgeId) -> EdgeId {
        self.emap[&e]
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &EHomomorphism) -> EHomomorphism {
        EHomomorphism {
            vmap: self.vmap.iter().map(|(&k, v)| (k, other.vmap[v])).collect(),
            emap: self.emap.iter().map(|(&k, e)| (k, other.emap[e])).collect(),
        }
    }

    pub fn is_injective(&self) -> bool {
        let vs: BTreeSet<_> = self.vmap.values().collect();
        let es: BTreeSet<_> = self.emap.values().collect();
        vs.len() == self.vmap.len() && es.len() == self.emap.len()
    }

    pub fn image(&self) -> BTreeSet<Elem> {
        self.vmap
            .values()
            .map(|&v| Elem::Vertex(v))
            .chain(self.emap.values().map(|&e| Elem::Edge(e)))
            .collect()
    }

    /// Checks totality, preservation of sources, targets, labels, immediate
    /// parents and consistency.
    pub fn check(&self, dom: &EHypergraph, cod: &EHypergraph) -> Result<(), String> {
        for v in dom.vertices() {
            match self.vmap.get(&v) {
                Some(w) if cod.has_vertex(*w) => {}
                _ => return Err(format!("vertex {v} is not mapped into the codomain")),
            }
        }
        for e in dom.edges() {
            let f = match self.emap.get(&e) {
                Some(f) if cod.has_edge(*f) => *f,
                _ => return Err(format!("edge {e} is not mapped into the codomain")),
            };
            let d = dom.edge(e);
            let c = cod.edge(f);
            let ms: Vec<_> = d.sources.iter().map(|v| self.vmap[v]).collect();
            let mt: Vec<_> = d.targets.iter().map(|v| self.vmap[v]).collect();
            if ms != c.sources || mt != c.targets {
                return Err(format!("edge {e} endpoints are not preserved"));
            }
            if !d.label.is_hierarchical() && d.label != c.label {
                return Err(format!("edge {e} label is not preserved"));
            }
            if d.label.is_hierarchical() != c.label.is_hierarchical() {
                return Err(format!("edge {e} hierarchy is not preserved"));
            }
        }
        let elems: Vec<Elem> = dom.elems().collect();
        for &x in &elems {
            if let Some(n) = dom.nesting(x) {
                let img = self.map_elem(x).unwrap();
                let pn = cod.nesting(img);
                if pn.map(|m| m.parent) != Some(self.emap[&n.parent]) {
                    return Err(format!("parent of {x} is not preserved"));
                }
            }
        }
        // Consistency: elements sharing a component keep sharing one.
        let mut comp_image: BTreeMap<Nesting, Nesting> = BTreeMap::new();
        for &x in &elems {
            if let Some(n) = dom.nesting(x) {
                let m = cod.nesting(self.map_elem(x).unwrap()).unwrap();
                if let Some(prev) = comp_image.insert(n, m) {
                    if prev != m {
                        return Err(format!("consistency of {x} is not preserved"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Small union-find over dense indices.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Unions and returns the new root, preferring the smaller index.
    pub fn union(&mut self, a: usize, b: usize) -> usize {
        let ra = self.find(a);
        let rb = self.find(b);
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        lo
    }
}
