//! Isomorphism of extended cospans.
//!
//! Colour refinement over vertices and edges narrows candidate pairs, then a
//! backtracking search with unit propagation builds the carrier bijection.
//! Every witness is re-checked by [`check_iso`] before it is returned.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::{Hash, Hasher};

use crate::graph::{EHomomorphism, EdgeId, Elem, Nesting, VertexId};

use super::ExtendedCospan;

/// Carrier isomorphism `alpha` with the induced slot bijections `beta`
/// (`int_in` of the left cospan to `int_in` of the right one) and `gamma`
/// (likewise for `int_out`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsoWitness {
    pub alpha: EHomomorphism,
    pub beta: Vec<usize>,
    pub gamma: Vec<usize>,
}

fn hash_of<T: Hash>(x: &T) -> u64 {
    let mut h = DefaultHasher::new();
    x.hash(&mut h);
    h.finish()
}

struct Prepared<'a> {
    c: &'a ExtendedCospan,
    vcolor: HashMap<VertexId, u64>,
    ecolor: HashMap<EdgeId, u64>,
    consumers: HashMap<VertexId, Vec<(EdgeId, usize)>>,
    producers: HashMap<VertexId, Vec<(EdgeId, usize)>>,
}

impl<'a> Prepared<'a> {
    fn new(c: &'a ExtendedCospan) -> Self {
        let g = &c.carrier;
        let mut consumers: HashMap<VertexId, Vec<(EdgeId, usize)>> = HashMap::new();
        let mut producers: HashMap<VertexId, Vec<(EdgeId, usize)>> = HashMap::new();
        for e in g.edges() {
            for (k, v) in g.sources(e).iter().enumerate() {
                consumers.entry(*v).or_default().push((e, k));
            }
            for (k, v) in g.targets(e).iter().enumerate() {
                producers.entry(*v).or_default().push((e, k));
            }
        }
        let mut roles: HashMap<VertexId, Vec<(u8, usize, usize)>> = HashMap::new();
        for (k, &s) in c.ext_in.iter().enumerate() {
            if let Some(&v) = c.int_in.get(s) {
                roles.entry(v).or_default().push((0, k, 0));
            }
        }
        for (k, &s) in c.ext_out.iter().enumerate() {
            if let Some(&v) = c.int_out.get(s) {
                roles.entry(v).or_default().push((1, k, 0));
            }
        }
        let ext_in: BTreeSet<usize> = c.ext_in.iter().copied().collect();
        let ext_out: BTreeSet<usize> = c.ext_out.iter().copied().collect();
        for (tag, blocks, slots, ext) in [
            (2u8, c.in_blocks(), &c.int_in, &ext_in),
            (3u8, c.out_blocks(), &c.int_out, &ext_out),
        ] {
            for b in blocks {
                let strict: Vec<usize> = b.slots.iter().copied().filter(|k| !ext.contains(k)).collect();
                for (pos, &k) in strict.iter().enumerate() {
                    roles.entry(slots[k]).or_default().push((tag, pos, strict.len()));
                }
            }
        }
        let mut vcolor = HashMap::new();
        for v in g.vertices() {
            let mut r = roles.remove(&v).unwrap_or_default();
            r.sort();
            let din = producers.get(&v).map_or(0, |x| x.len());
            let dout = consumers.get(&v).map_or(0, |x| x.len());
            vcolor.insert(v, hash_of(&("v", g.depth(Elem::Vertex(v)), r, din, dout)));
        }
        let mut ecolor = HashMap::new();
        for e in g.edges() {
            let d = g.edge(e);
            let ncomp = if d.label.is_hierarchical() { g.component_ids(e).len() } else { 0 };
            ecolor.insert(
                e,
                hash_of(&("e", &d.label, d.sources.len(), d.targets.len(), g.depth(Elem::Edge(e)), ncomp)),
            );
        }
        let mut p = Prepared {
            c,
            vcolor,
            ecolor,
            consumers,
            producers,
        };
        p.refine();
        p
    }

    fn distinct(&self) -> usize {
        let mut s: BTreeSet<u64> = self.vcolor.values().copied().collect();
        s.extend(self.ecolor.values().copied());
        s.len()
    }

    fn refine(&mut self) {
        let g = &self.c.carrier;
        let bound = g.size() + 1;
        let mut count = self.distinct();
        for _ in 0..bound {
            let color = |x: Elem, vc: &HashMap<VertexId, u64>, ec: &HashMap<EdgeId, u64>| match x {
                Elem::Vertex(v) => vc[&v],
                Elem::Edge(e) => ec[&e],
            };
            let mut comp: HashMap<Nesting, Vec<u64>> = HashMap::new();
            for x in g.elems() {
                if let Some(n) = g.nesting(x) {
                    comp.entry(n).or_default().push(color(x, &self.vcolor, &self.ecolor));
                }
            }
            let comp: HashMap<Nesting, u64> = comp
                .into_iter()
                .map(|(n, mut cs)| {
                    cs.sort_unstable();
                    (n, hash_of(&cs))
                })
                .collect();
            let mut children: HashMap<EdgeId, Vec<u64>> = HashMap::new();
            for (n, h) in &comp {
                children.entry(n.parent).or_default().push(*h);
            }
            let ctx = |x: Elem| match g.nesting(x) {
                None => (0u64, 0u64),
                Some(n) => (self.ecolor[&n.parent], comp[&n]),
            };
            let mut vnew = HashMap::new();
            for v in g.vertices() {
                let mut inc: Vec<(u8, usize, u64)> = Vec::new();
                for &(e, k) in self.consumers.get(&v).into_iter().flatten() {
                    inc.push((0, k, self.ecolor[&e]));
                }
                for &(e, k) in self.producers.get(&v).into_iter().flatten() {
                    inc.push((1, k, self.ecolor[&e]));
                }
                inc.sort_unstable();
                vnew.insert(v, hash_of(&(self.vcolor[&v], inc, ctx(Elem::Vertex(v)))));
            }
            let mut enew = HashMap::new();
            for e in g.edges() {
                let d = g.edge(e);
                let s: Vec<u64> = d.sources.iter().map(|v| self.vcolor[v]).collect();
                let t: Vec<u64> = d.targets.iter().map(|v| self.vcolor[v]).collect();
                let mut ch = children.get(&e).cloned().unwrap_or_default();
                ch.sort_unstable();
                enew.insert(e, hash_of(&(self.ecolor[&e], s, t, ctx(Elem::Edge(e)), ch)));
            }
            self.vcolor = vnew;
            self.ecolor = enew;
            let next = self.distinct();
            if next <= count {
                break;
            }
            count = next;
        }
    }

    fn color(&self, x: Elem) -> u64 {
        match x {
            Elem::Vertex(v) => self.vcolor[&v],
            Elem::Edge(e) => self.ecolor[&e],
        }
    }

    fn histogram(&self) -> Vec<u64> {
        let mut h: Vec<u64> = self.vcolor.values().chain(self.ecolor.values()).copied().collect();
        h.sort_unstable();
        h
    }
}

/// An iso-invariant hash: isomorphic cospans always agree on it.
pub fn fingerprint(c: &ExtendedCospan) -> u64 {
    let p = Prepared::new(c);
    hash_of(&(c.arity(), c.coarity(), c.int_in.len(), c.int_out.len(), p.histogram()))
}

#[derive(Clone, Copy)]
enum Undo {
    V(VertexId, VertexId),
    E(EdgeId, EdgeId),
    C(Nesting, Nesting),
}

struct Search<'a, 'b> {
    a: &'b Prepared<'a>,
    b: &'b Prepared<'a>,
    vmap: HashMap<VertexId, VertexId>,
    vinv: HashMap<VertexId, VertexId>,
    emap: HashMap<EdgeId, EdgeId>,
    einv: HashMap<EdgeId, EdgeId>,
    cmap: HashMap<Nesting, Nesting>,
    cinv: HashMap<Nesting, Nesting>,
    trail: Vec<Undo>,
    a_elems: Vec<Elem>,
    b_elems: Vec<Elem>,
    budget: u64,
}

impl<'a, 'b> Search<'a, 'b> {
    fn mapped(&self, x: Elem) -> bool {
        match x {
            Elem::Vertex(v) => self.vmap.contains_key(&v),
            Elem::Edge(e) => self.emap.contains_key(&e),
        }
    }

    fn used(&self, y: Elem) -> bool {
        match y {
            Elem::Vertex(v) => self.vinv.contains_key(&v),
            Elem::Edge(e) => self.einv.contains_key(&e),
        }
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            match self.trail.pop().unwrap() {
                Undo::V(x, y) => {
                    self.vmap.remove(&x);
                    self.vinv.remove(&y);
                }
                Undo::E(x, y) => {
                    self.emap.remove(&x);
                    self.einv.remove(&y);
                }
                Undo::C(x, y) => {
                    self.cmap.remove(&x);
                    self.cinv.remove(&y);
                }
            }
        }
    }

    fn nest_pair(&mut self, na: Option<Nesting>, nb: Option<Nesting>, queue: &mut Vec<(Elem, Elem)>) -> bool {
        match (na, nb) {
            (None, None) => true,
            (Some(x), Some(y)) => {
                if let Some(&z) = self.cmap.get(&x) {
                    return z == y;
                }
                if self.cinv.contains_key(&y) {
                    return false;
                }
                self.cmap.insert(x, y);
                self.cinv.insert(y, x);
                self.trail.push(Undo::C(x, y));
                queue.push((Elem::Edge(x.parent), Elem::Edge(y.parent)));
                true
            }
            _ => false,
        }
    }

    fn assign(&mut self, x: Elem, y: Elem, queue: &mut Vec<(Elem, Elem)>) -> bool {
        match (x, y) {
            (Elem::Vertex(u), Elem::Vertex(w)) => {
                if let Some(&z) = self.vmap.get(&u) {
                    return z == w;
                }
                if self.vinv.contains_key(&w) || self.a.vcolor[&u] != self.b.vcolor[&w] {
                    return false;
                }
                let (ga, gb) = (&self.a.c.carrier, &self.b.c.carrier);
                if !self.nest_pair(ga.vertex_nesting(u), gb.vertex_nesting(w), queue) {
                    return false;
                }
                self.vmap.insert(u, w);
                self.vinv.insert(w, u);
                self.trail.push(Undo::V(u, w));
                for (inc_a, inc_b) in [
                    (&self.a.consumers, &self.b.consumers),
                    (&self.a.producers, &self.b.producers),
                ] {
                    for &(e, k) in inc_a.get(&u).into_iter().flatten() {
                        let ce = self.a.ecolor[&e];
                        let mut found = None;
                        let mut many = false;
                        for &(f, j) in inc_b.get(&w).into_iter().flatten() {
                            if j == k && self.b.ecolor[&f] == ce {
                                if found.is_some() {
                                    many = true;
                                }
                                found = Some(f);
                            }
                        }
                        match found {
                            None => return false,
                            Some(f) if !many => queue.push((Elem::Edge(e), Elem::Edge(f))),
                            _ => {}
                        }
                    }
                }
                true
            }
            (Elem::Edge(e), Elem::Edge(f)) => {
                if let Some(&z) = self.emap.get(&e) {
                    return z == f;
                }
                if self.einv.contains_key(&f) || self.a.ecolor[&e] != self.b.ecolor[&f] {
                    return false;
                }
                let (ga, gb) = (&self.a.c.carrier, &self.b.c.carrier);
                if !self.nest_pair(ga.edge_nesting(e), gb.edge_nesting(f), queue) {
                    return false;
                }
                self.emap.insert(e, f);
                self.einv.insert(f, e);
                self.trail.push(Undo::E(e, f));
                let (da, db) = (ga.edge(e), gb.edge(f));
                if da.sources.len() != db.sources.len() || da.targets.len() != db.targets.len() {
                    return false;
                }
                for (s, t) in da.sources.iter().zip(&db.sources).chain(da.targets.iter().zip(&db.targets)) {
                    queue.push((Elem::Vertex(*s), Elem::Vertex(*t)));
                }
                true
            }
            _ => false,
        }
    }

    fn propagate(&mut self, mut queue: Vec<(Elem, Elem)>) -> bool {
        while let Some((x, y)) = queue.pop() {
            if !self.assign(x, y, &mut queue) {
                return false;
            }
        }
        true
    }

    fn solve(&mut self) -> Option<IsoWitness> {
        if self.budget == 0 {
            return None;
        }
        self.budget -= 1;
        let mut groups: HashMap<u64, Vec<Elem>> = HashMap::new();
        for &y in &self.b_elems {
            if !self.used(y) {
                groups.entry(self.b.color(y)).or_default().push(y);
            }
        }
        let mut best: Option<(usize, Elem)> = None;
        for &x in &self.a_elems {
            if self.mapped(x) {
                continue;
            }
            let n = groups.get(&self.a.color(x)).map_or(0, |g| g.len());
            if n == 0 {
                return None;
            }
            if best.map_or(true, |(m, _)| n < m) {
                best = Some((n, x));
                if n == 1 {
                    break;
                }
            }
        }
        let Some((_, x)) = best else {
            return self.finish();
        };
        let cands = groups[&self.a.color(x)].clone();
        for y in cands {
            let mark = self.trail.len();
            if self.propagate(vec![(x, y)]) {
                if let Some(w) = self.solve() {
                    return Some(w);
                }
            }
            self.undo_to(mark);
        }
        None
    }

    fn finish(&self) -> Option<IsoWitness> {
        let alpha = EHomomorphism {
            vmap: self.vmap.iter().map(|(&k, &v)| (k, v)).collect(),
            emap: self.emap.iter().map(|(&k, &v)| (k, v)).collect(),
        };
        let (a, b) = (self.a.c, self.b.c);
        let beta = slot_bijection(&a.int_in, &a.ext_in, &b.int_in, &b.ext_in, &alpha)?;
        let gamma = slot_bijection(&a.int_out, &a.ext_out, &b.int_out, &b.ext_out, &alpha)?;
        let w = IsoWitness { alpha, beta, gamma };
        check_iso(a, b, &w).ok().map(|_| w)
    }
}

fn slot_bijection(
    a_int: &[VertexId],
    a_ext: &[usize],
    b_int: &[VertexId],
    b_ext: &[usize],
    alpha: &EHomomorphism,
) -> Option<Vec<usize>> {
    if a_int.len() != b_int.len() || a_ext.len() != b_ext.len() {
        return None;
    }
    let mut out = vec![usize::MAX; a_int.len()];
    let mut used = vec![false; b_int.len()];
    for (k, &s) in a_ext.iter().enumerate() {
        out[s] = b_ext[k];
        used[b_ext[k]] = true;
    }
    for (k, v) in a_int.iter().enumerate() {
        if out[k] != usize::MAX {
            continue;
        }
        let target = alpha.vmap.get(v)?;
        let j = (0..b_int.len()).find(|&j| !used[j] && b_int[j] == *target)?;
        used[j] = true;
        out[k] = j;
    }
    Some(out)
}

/// Checks that `w` witnesses an isomorphism from `a` to `b`.
pub fn check_iso(a: &ExtendedCospan, b: &ExtendedCospan, w: &IsoWitness) -> Result<(), String> {
    let (ga, gb) = (&a.carrier, &b.carrier);
    if ga.vertex_count() != gb.vertex_count() || ga.edge_count() != gb.edge_count() {
        return Err("carrier sizes differ".into());
    }
    if !w.alpha.is_injective() {
        return Err("carrier map is not injective".into());
    }
    w.alpha.check(ga, gb)?;
    let inv = EHomomorphism {
        vmap: w.alpha.vmap.iter().map(|(&k, &v)| (v, k)).collect(),
        emap: w.alpha.emap.iter().map(|(&k, &v)| (v, k)).collect(),
    };
    inv.check(gb, ga)?;
    for e in ga.edges() {
        if ga.label(e) != gb.label(w.alpha.emap[&e]) {
            return Err(format!("label of {e} differs"));
        }
    }
    let sides = [
        (&a.int_in, &a.ext_in, &b.int_in, &b.ext_in, &w.beta, a.in_blocks(), b.in_blocks(), "input"),
        (&a.int_out, &a.ext_out, &b.int_out, &b.ext_out, &w.gamma, a.out_blocks(), b.out_blocks(), "output"),
    ];
    for (ai, ae, bi, be, map, ablocks, bblocks, name) in sides {
        if ai.len() != bi.len() || map.len() != ai.len() || ae.len() != be.len() {
            return Err(format!("{name} interfaces differ in size"));
        }
        let set: BTreeSet<usize> = map.iter().copied().collect();
        if set.len() != map.len() || map.iter().any(|&j| j >= bi.len()) {
            return Err(format!("{name} slot map is not a bijection"));
        }
        for (k, v) in ai.iter().enumerate() {
            if w.alpha.vmap[v] != bi[map[k]] {
                return Err(format!("{name} slot {k} does not commute"));
            }
        }
        for (k, &s) in ae.iter().enumerate() {
            if map[s] != be[k] {
                return Err(format!("external {name} {k} does not commute"));
            }
        }
        let owner: BTreeMap<usize, usize> = bblocks
            .iter()
            .enumerate()
            .flat_map(|(i, bl)| bl.slots.iter().map(move |&s| (s, i)))
            .collect();
        for bl in &ablocks {
            let images: Vec<usize> = bl.slots.iter().map(|&s| map[s]).collect();
            let target = owner[&images[0]];
            if bblocks[target].slots != images {
                return Err(format!("{name} block order is not preserved"));
            }
        }
    }
    Ok(())
}

/// Searches for an isomorphism from `a` to `b`.
pub fn iso(a: &ExtendedCospan, b: &ExtendedCospan) -> Option<IsoWitness> {
    if a.arity() != b.arity()
        || a.coarity() != b.coarity()
        || a.int_in.len() != b.int_in.len()
        || a.int_out.len() != b.int_out.len()
        || a.carrier.vertex_count() != b.carrier.vertex_count()
        || a.carrier.edge_count() != b.carrier.edge_count()
    {
        return None;
    }
    let pa = Prepared::new(a);
    let pb = Prepared::new(b);
    if pa.histogram() != pb.histogram() {
        return None;
    }
    let mut s = Search {
        a: &pa,
        b: &pb,
        vmap: HashMap::new(),
        vinv: HashMap::new(),
        emap: HashMap::new(),
        einv: HashMap::new(),
        cmap: HashMap::new(),
        cinv: HashMap::new(),
        trail: Vec::new(),
        a_elems: a.carrier.elems().collect(),
        b_elems: b.carrier.elems().collect(),
        budget: 1_000_000,
    };
    s.solve()
}

pub fn is_iso(a: &ExtendedCospan, b: &ExtendedCospan) -> bool {
    iso(a, b).is_some()
}

/// A set of cospans up to isomorphism, bucketed by [`fingerprint`].
#[derive(Clone, Debug, Default)]
pub struct IsoSet {
    buckets: HashMap<u64, Vec<ExtendedCospan>>,
    len: usize,
}

impl IsoSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, c: &ExtendedCospan) -> bool {
        self.buckets
            .get(&fingerprint(c))
            .map_or(false, |b| b.iter().any(|d| is_iso(c, d)))
    }

    /// Inserts `c` unless an isomorphic copy is present; returns whether it
    /// was new.
    pub fn insert(&mut self, c: ExtendedCospan) -> bool {
        let bucket = self.buckets.entry(fingerprint(&c)).or_default();
        if bucket.iter().any(|d| is_iso(&c, d)) {
            return false;
        }
        bucket.push(c);
        self.len += 1;
        true
    }
}
