//! Backtracking search for e-hypergraph monomorphisms and convex matches.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::cospan::ExtendedCospan;
use crate::graph::{EHomomorphism, EHypergraph, EdgeId, Elem, Label, Nesting, VertexId};

use super::{Match, RewriteRule};

/// A monomorphism query from `pattern` into `host`.
#[derive(Clone, Debug)]
pub struct HomQuery<'a> {
    pub pattern: &'a EHypergraph,
    pub host: &'a EHypergraph,
    /// Required nesting of the pattern's top-level elements. `None` leaves it
    /// free but uniform across the pattern.
    pub level: Option<Option<Nesting>>,
    /// Pattern vertices whose image is fixed in advance.
    pub pinned: BTreeMap<VertexId, VertexId>,
    pub limit: Option<usize>,
}

impl<'a> HomQuery<'a> {
    pub fn new(pattern: &'a EHypergraph, host: &'a EHypergraph) -> Self {
        HomQuery {
            pattern,
            host,
            level: None,
            pinned: BTreeMap::new(),
            limit: None,
        }
    }
}

#[derive(Clone, Default)]
struct State {
    vmap: BTreeMap<VertexId, VertexId>,
    emap: BTreeMap<EdgeId, EdgeId>,
    used_v: BTreeSet<VertexId>,
    used_e: BTreeSet<EdgeId>,
    comp: BTreeMap<Nesting, Nesting>,
    used_comp: BTreeSet<Nesting>,
    level: Option<Option<Nesting>>,
}

struct Searcher<'a> {
    pat: &'a EHypergraph,
    host: &'a EHypergraph,
    order: Vec<EdgeId>,
    isolated: Vec<VertexId>,
    by_label: BTreeMap<Label, Vec<EdgeId>>,
    consumers: BTreeMap<VertexId, Vec<EdgeId>>,
    producers: BTreeMap<VertexId, Vec<EdgeId>>,
    limit: usize,
    out: Vec<EHomomorphism>,
}

/// Pattern edges with parents before children and, within a depth,
/// neighbours close together.
fn edge_order(pat: &EHypergraph) -> Vec<EdgeId> {
    let mut incident: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
    for e in pat.edges() {
        for v in pat.sources(e).iter().chain(pat.targets(e)) {
            incident.entry(*v).or_default().push(e);
        }
    }
    let mut seen = BTreeSet::new();
    let mut order = Vec::new();
    for start in pat.edges() {
        if !seen.insert(start) {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        while let Some(e) = queue.pop_front() {
            order.push(e);
            for v in pat.sources(e).iter().chain(pat.targets(e)) {
                for &n in &incident[v] {
                    if seen.insert(n) {
                        queue.push_back(n);
                    }
                }
            }
        }
    }
    order.sort_by_key(|&e| pat.depth(Elem::Edge(e)));
    order
}

impl<'a> Searcher<'a> {
    fn nest_ok(&self, st: &mut State, nl: Option<Nesting>, ng: Option<Nesting>) -> bool {
        match nl {
            None => match st.level {
                Some(l) => l == ng,
                None => {
                    st.level = Some(ng);
                    true
                }
            },
            Some(n) => {
                let Some(g) = ng else { return false };
                match st.emap.get(&n.parent) {
                    Some(&p) if p == g.parent => {}
                    _ => return false,
                }
                match st.comp.get(&n) {
                    Some(&c) => c == g,
                    None => {
                        if !st.used_comp.insert(g) {
                            return false;
                        }
                        st.comp.insert(n, g);
                        true
                    }
                }
            }
        }
    }

    fn try_vertex(&self, st: &mut State, x: VertexId, w: VertexId) -> bool {
        if let Some(&y) = st.vmap.get(&x) {
            return y == w;
        }
        if st.used_v.contains(&w) {
            return false;
        }
        if !self.nest_ok(st, self.pat.vertex_nesting(x), self.host.vertex_nesting(w)) {
            return false;
        }
        st.vmap.insert(x, w);
        st.used_v.insert(w);
        true
    }

    fn try_edge(&self, st: &State, pe: EdgeId, he: EdgeId) -> Option<State> {
        let (p, h) = (self.pat.edge(pe), self.host.edge(he));
        if p.label != h.label || p.sources.len() != h.sources.len() || p.targets.len() != h.targets.len() {
            return None;
        }
        if st.used_e.contains(&he) {
            return None;
        }
        let mut s = st.clone();
        if !self.nest_ok(&mut s, p.nesting, h.nesting) {
            return None;
        }
        for (x, w) in p.sources.iter().zip(&h.sources).chain(p.targets.iter().zip(&h.targets)) {
            if !self.try_vertex(&mut s, *x, *w) {
                return None;
            }
        }
        s.emap.insert(pe, he);
        s.used_e.insert(he);
        Some(s)
    }

    fn candidates(&self, st: &State, pe: EdgeId) -> Vec<EdgeId> {
        for x in self.pat.sources(pe) {
            if let Some(w) = st.vmap.get(x) {
                return self.consumers.get(w).cloned().unwrap_or_default();
            }
        }
        for x in self.pat.targets(pe) {
            if let Some(w) = st.vmap.get(x) {
                return self.producers.get(w).cloned().unwrap_or_default();
            }
        }
        self.by_label.get(self.pat.label(pe)).cloned().unwrap_or_default()
    }

    fn go(&mut self, st: State, k: usize) {
        if self.out.len() >= self.limit {
            return;
        }
        if k < self.order.len() {
            let pe = self.order[k];
            for he in self.candidates(&st, pe) {
                if let Some(s) = self.try_edge(&st, pe, he) {
                    self.go(s, k + 1);
                }
            }
            return;
        }
        let j = k - self.order.len();
        if j < self.isolated.len() {
            let x = self.isolated[j];
            if st.vmap.contains_key(&x) {
                self.go(st, k + 1);
                return;
            }
            let host = self.host;
            for w in host.vertices() {
                let mut s = st.clone();
                if self.try_vertex(&mut s, x, w) {
                    self.go(s, k + 1);
                }
            }
            return;
        }
        self.out.push(EHomomorphism {
            vmap: st.vmap,
            emap: st.emap,
        });
    }
}

/// All monomorphisms answering the query, in search order.
pub fn find_homs(q: &HomQuery<'_>) -> Vec<EHomomorphism> {
    let pat = q.pattern;
    let host = q.host;
    let covered: BTreeSet<VertexId> = pat
        .edges()
        .flat_map(|e| pat.sources(e).iter().chain(pat.targets(e)).copied().collect::<Vec<_>>())
        .collect();
    let mut isolated: Vec<VertexId> = pat.vertices().filter(|v| !covered.contains(v)).collect();
    isolated.sort_by_key(|&v| pat.depth(Elem::Vertex(v)));
    let mut by_label: BTreeMap<Label, Vec<EdgeId>> = BTreeMap::new();
    for e in host.edges() {
        by_label.entry(host.label(e).clone()).or_default().push(e);
    }
    let mut s = Searcher {
        pat,
        host,
        order: edge_order(pat),
        isolated,
        by_label,
        consumers: host.consumers(),
        producers: host.producers(),
        limit: q.limit.unwrap_or(usize::MAX),
        out: Vec::new(),
    };
    let mut st = State {
        level: q.level,
        ..Default::default()
    };
    for (&x, &w) in &q.pinned {
        if !pat.has_vertex(x) || !host.has_vertex(w) || !s.try_vertex(&mut st, x, w) {
            return Vec::new();
        }
    }
    s.go(st, 0);
    s.out
}

/// Checks the conditions a match must meet before a complement is sought:
/// the image is down-closed and convex (condition 1), and the external
/// interface lands uniformly on top-level vertices or on pairwise consistent
/// ones (condition 3). Returns the level of the image, or the failed
/// condition with a reason.
pub(crate) fn admissible(
    lhs: &ExtendedCospan,
    host: &ExtendedCospan,
    hom: &EHomomorphism,
) -> Result<Option<Nesting>, (u8, String)> {
    let g = &host.carrier;
    let image = hom.image();
    for x in &image {
        if let Elem::Edge(e) = x {
            if let Some(c) = g.children(*e).into_iter().find(|c| !image.contains(c)) {
                return Err((1, format!("image is not down-closed: {c} is missing")));
            }
        }
    }
    if !g.is_convex(&image) {
        return Err((1, "image is not convex".into()));
    }
    let ends: Vec<VertexId> = lhs.inputs().into_iter().chain(lhs.outputs()).map(|v| hom.v(v)).collect();
    let level = match ends.first() {
        Some(&v) => g.vertex_nesting(v),
        None => lhs
            .carrier
            .elems()
            .find(|&x| lhs.carrier.is_top_level(x))
            .and_then(|x| g.nesting(hom.map_elem(x).unwrap())),
    };
    if ends.iter().any(|&v| g.vertex_nesting(v) != level) {
        return Err((3, "interface images do not share parents and consistency".into()));
    }
    Ok(level)
}

/// All admissible matches of the rule's left-hand side in `host`, ordered by
/// their sorted image ids.
pub fn find_matches(rule: &RewriteRule, host: &ExtendedCospan) -> Vec<Match> {
    let q = HomQuery::new(&rule.lhs.carrier, &host.carrier);
    let mut out: Vec<Match> = find_homs(&q)
        .into_iter()
        .filter_map(|hom| {
            let level = admissible(&rule.lhs, host, &hom).ok()?;
            Some(Match {
                rule: rule.clone(),
                hom,
                level,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        a.key()
            .cmp(&b.key())
            .then_with(|| a.hom.vmap.values().cmp(b.hom.vmap.values()))
            .then_with(|| a.hom.emap.values().cmp(b.hom.emap.values()))
    });
    out
}
