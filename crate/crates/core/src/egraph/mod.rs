//! Classical e-graphs (union-find, e-class map, hashcons), their translation
//! into extended cospans over a Cartesian signature, and replay of e-graph
//! rewrites as EDPOI step sequences.

mod replay;
mod translate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use replay::{replay, ReplayError, ReplayStep};
pub use translate::{translate, TranslateError};

/// E-class id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Id(pub u32);

impl fmt::Display for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

/// A function symbol applied to e-class ids.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ENode {
    pub head: String,
    #[serde(default)]
    pub children: Vec<Id>,
}

impl ENode {
    pub fn new(head: &str, children: Vec<Id>) -> Self {
        ENode {
            head: head.to_string(),
            children,
        }
    }

    pub fn leaf(head: &str) -> Self {
        Self::new(head, Vec::new())
    }
}

impl fmt::Display for ENode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.head)?;
        if !self.children.is_empty() {
            f.write_str("(")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// An e-graph. Merging restores congruence immediately by upward merging.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EGraph {
    parent: Vec<Id>,
    classes: BTreeMap<Id, BTreeSet<ENode>>,
    hashcons: BTreeMap<ENode, Id>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EGraphError {
    #[error("malformed e-graph file: {0}")]
    Parse(String),
    #[error("class {0} is declared twice")]
    DuplicateClass(Id),
    #[error("node {node} refers to unknown class {child}")]
    UnknownChild { node: String, child: Id },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

#[derive(Serialize, Deserialize)]
struct FileClass {
    id: Id,
    nodes: Vec<ENode>,
}

#[derive(Serialize, Deserialize)]
struct File {
    classes: Vec<FileClass>,
}

impl EGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn find(&self, mut a: Id) -> Id {
        while self.parent[a.0 as usize] != a {
            a = self.parent[a.0 as usize];
        }
        a
    }

    pub fn canonicalize(&self, n: &ENode) -> ENode {
        ENode {
            head: n.head.clone(),
            children: n.children.iter().map(|&c| self.find(c)).collect(),
        }
    }

    /// Returns the class of `n`, creating a singleton class if needed.
    pub fn add(&mut self, n: ENode) -> Id {
        let n = self.canonicalize(&n);
        if let Some(&id) = self.hashcons.get(&n) {
            return self.find(id);
        }
        let id = Id(self.parent.len() as u32);
        self.parent.push(id);
        self.classes.insert(id, BTreeSet::from([n.clone()]));
        self.hashcons.insert(n, id);
        id
    }

    /// Adds a term given as nested nodes, bottom-up.
    pub fn add_term(&mut self, head: &str, children: &[Id]) -> Id {
        self.add(ENode::new(head, children.to_vec()))
    }

    /// Unions the classes of `a` and `b`, the class of `b` becoming the
    /// representative, then restores congruence.
    pub fn merge(&mut self, a: Id, b: Id) -> Id {
        let root = self.union(a, b);
        self.rebuild();
        self.find(root)
    }

    fn union(&mut self, a: Id, b: Id) -> Id {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return a;
        }
        self.parent[a.0 as usize] = b;
        let moved = self.classes.remove(&a).unwrap_or_default();
        self.classes.entry(b).or_default().extend(moved);
        b
    }

    /// Upward merging: recanonicalizes every node and merges classes holding
    /// congruent nodes until nothing changes.
    fn rebuild(&mut self) {
        loop {
            let mut seen: BTreeMap<ENode, Id> = BTreeMap::new();
            let mut pending = Vec::new();
            let ids: Vec<Id> = self.classes.keys().copied().collect();
            for id in ids {
                let nodes: BTreeSet<ENode> = self.classes[&id].iter().map(|n| self.canonicalize(n)).collect();
                for n in &nodes {
                    match seen.get(n) {
                        Some(&other) if other != id => pending.push((id, other)),
                        Some(_) => {}
                        None => {
                            seen.insert(n.clone(), id);
                        }
                    }
                }
                self.classes.insert(id, nodes);
            }
            if pending.is_empty() {
                self.hashcons = seen;
                return;
            }
            for (a, b) in pending {
                self.union(a, b);
            }
        }
    }

    /// Canonical class ids, ascending.
    pub fn class_ids(&self) -> Vec<Id> {
        self.classes.keys().copied().collect()
    }

    pub fn nodes(&self, id: Id) -> Vec<ENode> {
        self.classes.get(&self.find(id)).map(|s| s.iter().cloned().collect()).unwrap_or_default()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn lookup(&self, n: &ENode) -> Option<Id> {
        self.hashcons.get(&self.canonicalize(n)).map(|&id| self.find(id))
    }

    /// Full rescan of the congruence and hashcons invariants.
    pub fn check_invariants(&self) -> Result<(), EGraphError> {
        let mut owner: BTreeMap<ENode, Id> = BTreeMap::new();
        for (&id, nodes) in &self.classes {
            if self.find(id) != id {
                return Err(EGraphError::Invariant(format!("class {id} is not canonical")));
            }
            for n in nodes {
                let c = self.canonicalize(n);
                if &c != n {
                    return Err(EGraphError::Invariant(format!("node {n} in {id} is not canonical")));
                }
                if let Some(other) = owner.insert(c.clone(), id) {
                    return Err(EGraphError::Invariant(format!("congruent node {c} in {other} and {id}")));
                }
                match self.hashcons.get(&c) {
                    Some(&h) if self.find(h) == id => {}
                    _ => return Err(EGraphError::Invariant(format!("hashcons misses {c}"))),
                }
            }
        }
        for (n, &h) in &self.hashcons {
            if !self.classes.get(&self.find(h)).is_some_and(|s| s.contains(n)) {
                return Err(EGraphError::Invariant(format!("hashcons entry {n} has no node")));
            }
        }
        Ok(())
    }

    /// Canonical child classes of each class.
    pub fn dependencies(&self) -> BTreeMap<Id, BTreeSet<Id>> {
        self.classes
            .iter()
            .map(|(&id, nodes)| (id, nodes.iter().flat_map(|n| n.children.iter().map(|&c| self.find(c))).collect()))
            .collect()
    }

    /// True iff no class reaches itself through node children.
    pub fn is_acyclic(&self) -> bool {
        let deps = self.dependencies();
        let mut state: BTreeMap<Id, u8> = BTreeMap::new();
        fn visit(id: Id, deps: &BTreeMap<Id, BTreeSet<Id>>, state: &mut BTreeMap<Id, u8>) -> bool {
            match state.get(&id) {
                Some(1) => return false,
                Some(2) => return true,
                _ => {}
            }
            state.insert(id, 1);
            for &c in deps.get(&id).into_iter().flatten() {
                if !visit(c, deps, state) {
                    return false;
                }
            }
            state.insert(id, 2);
            true
        }
        deps.keys().all(|&id| visit(id, &deps, &mut state))
    }

    /// True iff the classes form one piece when child links are undirected.
    pub fn is_connected(&self) -> bool {
        let ids = self.class_ids();
        let Some(&start) = ids.first() else { return true };
        let mut adj: BTreeMap<Id, BTreeSet<Id>> = BTreeMap::new();
        for (id, cs) in self.dependencies() {
            for c in cs {
                adj.entry(id).or_default().insert(c);
                adj.entry(c).or_default().insert(id);
            }
        }
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for &y in adj.get(&x).into_iter().flatten() {
                if seen.insert(y) {
                    stack.push(y);
                }
            }
        }
        seen.len() == ids.len()
    }

    /// Classes no node refers to, ascending.
    pub fn roots(&self) -> Vec<Id> {
        let used: BTreeSet<Id> = self.dependencies().into_values().flatten().collect();
        self.class_ids().into_iter().filter(|id| !used.contains(id)).collect()
    }

    /// Reads `{"classes": [{"id", "nodes": [{"head", "children"}]}]}`.
    pub fn from_json(text: &str) -> Result<EGraph, EGraphError> {
        let file: File = serde_json::from_str(text).map_err(|e| EGraphError::Parse(e.to_string()))?;
        let mut index: BTreeMap<Id, Id> = BTreeMap::new();
        for (k, c) in file.classes.iter().enumerate() {
            if index.insert(c.id, Id(k as u32)).is_some() {
                return Err(EGraphError::DuplicateClass(c.id));
            }
        }
        let mut eg = EGraph::new();
        for (k, c) in file.classes.iter().enumerate() {
            let id = Id(k as u32);
            eg.parent.push(id);
            let mut nodes = BTreeSet::new();
            for n in &c.nodes {
                let children = n
                    .children
                    .iter()
                    .map(|ch| {
                        index.get(ch).copied().ok_or_else(|| EGraphError::UnknownChild {
                            node: n.to_string(),
                            child: *ch,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let node = ENode::new(&n.head, children);
                eg.hashcons.insert(node.clone(), id);
                nodes.insert(node);
            }
            eg.classes.insert(id, nodes);
        }
        eg.check_invariants()?;
        Ok(eg)
    }

    /// Canonical classes in ascending order, in the import format.
    pub fn to_json(&self) -> String {
        let file = File {
            classes: self
                .classes
                .iter()
                .map(|(&id, nodes)| FileClass {
                    id,
                    nodes: nodes.iter().cloned().collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("e-graph serializes")
    }
}
