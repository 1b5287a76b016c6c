//! Seeded random terms shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use ehyp::cospan::{is_iso, ExtendedCospan};
use ehyp::graph::{EdgeId, VertexId};
use ehyp::signature::Signature;
use ehyp::term::Term;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

/// `f g h : 1 → 1`, `m : 2 → 1`, `s : 1 → 2`, `c : 0 → 1`.
pub const SIG: &str = "f : 1 -> 1\ng : 1 -> 1\nh : 1 -> 1\nm : 2 -> 1\ns : 1 -> 2\nc : 0 -> 1\n";

pub fn sig() -> Signature {
    Signature::parse(SIG).unwrap()
}

pub fn cs(t: &Term) -> ExtendedCospan {
    t.interpret(&sig()).unwrap()
}

pub fn raw(t: &Term) -> ExtendedCospan {
    t.interpret_raw(&sig()).unwrap()
}

pub fn parse(s: &str) -> Term {
    Term::parse(s).unwrap()
}

/// `a ⊗ b` with empty identities dropped.
pub fn par(parts: Vec<Term>) -> Term {
    let parts: Vec<Term> = parts.into_iter().filter(|t| *t != Term::Id(0)).collect();
    if parts.is_empty() {
        Term::Id(0)
    } else {
        Term::par(parts)
    }
}

pub struct Gen {
    pub rng: StdRng,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: StdRng::seed_from_u64(seed),
        }
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.gen_range(lo..=hi)
    }

    pub fn coin(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    pub fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        xs.choose(&mut self.rng).unwrap()
    }

    /// One layer applying `name` at a random position of a `w`-wide bundle.
    fn layer(&mut self, w: usize, name: &str, arity: usize) -> Term {
        let p = self.range(0, w - arity);
        par(vec![Term::Id(p), Term::gen(name), Term::Id(w - arity - p)])
    }

    /// A box-free term `dom → cod` with roughly `n` generators, built in
    /// layers. Widths stay at most 3. `dom` and `cod` must not both be 0.
    pub fn term(&mut self, dom: usize, cod: usize, n: usize) -> Term {
        assert!(dom + cod > 0);
        let mut w = dom;
        let mut layers: Vec<Term> = Vec::new();
        for _ in 0..n {
            let mut options: Vec<(&str, usize, usize)> = vec![];
            if w >= 1 {
                options.extend([("f", 1, 1), ("g", 1, 1), ("h", 1, 1), ("f", 1, 1)]);
            }
            if w >= 2 {
                options.push(("m", 2, 1));
            }
            if (1..3).contains(&w) {
                options.push(("s", 1, 2));
            }
            if w < 3 {
                options.push(("c", 0, 1));
            }
            let &(name, a, b) = self.pick(&options);
            layers.push(self.layer(w, name, a));
            w = w - a + b;
            if w >= 2 && self.coin(0.2) {
                let p = self.range(0, w - 2);
                layers.push(par(vec![Term::Id(p), Term::Sym(1, 1), Term::Id(w - 2 - p)]));
            }
        }
        while w > cod {
            if w >= 2 {
                layers.push(self.layer(w, "m", 2));
                w -= 1;
            } else {
                // Only 1 → 0 remains, which no generator provides; restart.
                return self.term(dom, cod, n);
            }
        }
        while w < cod {
            if w == 0 {
                layers.push(Term::gen("c"));
            } else {
                layers.push(self.layer(w, "s", 1));
            }
            w += 1;
        }
        if layers.is_empty() {
            Term::Id(dom)
        } else {
            Term::seq(layers)
        }
    }

    /// A term with at most `boxes` joins, possibly nested.
    pub fn nested(&mut self, dom: usize, cod: usize, n: usize, boxes: &mut usize) -> Term {
        if *boxes == 0 || self.coin(0.25) {
            let size = self.range(1, n.max(1));
            return self.term(dom, cod, size);
        }
        *boxes -= 1;
        let k = if dom == 0 { 1 } else { self.range(1, dom.clamp(1, 2)) };
        let l = self.range(1, 2);
        let parts = self.range(2, 3);
        let mut join = Vec::new();
        for _ in 0..parts {
            join.push(self.nested(k, l, 2, boxes));
        }
        let pre = if k == dom && self.coin(0.5) { Term::Id(dom) } else { self.term(dom, k, 1) };
        let post = if l == cod && self.coin(0.5) { Term::Id(cod) } else { self.term(l, cod, 1) };
        Term::seq(vec![pre, Term::Join(join), post])
    }
}

/// Box-free terms whose interpretations are the components of a term's
/// normal form, obtained by expanding every join syntactically.
pub fn expand(t: &Term) -> Vec<Term> {
    match t {
        Term::Gen(_) | Term::Id(_) | Term::Sym(..) => vec![t.clone()],
        Term::Comp(a, b) => {
            let (xs, ys) = (expand(a), expand(b));
            xs.iter().flat_map(|x| ys.iter().map(move |y| Term::comp(x.clone(), y.clone()))).collect()
        }
        Term::Tensor(a, b) => {
            let (xs, ys) = (expand(a), expand(b));
            xs.iter().flat_map(|x| ys.iter().map(move |y| Term::tensor(x.clone(), y.clone()))).collect()
        }
        Term::Join(ts) => ts.iter().flat_map(expand).collect(),
    }
}

/// Representatives of the iso classes in `cs`, in first-seen order.
pub fn iso_classes(cs: &[ExtendedCospan]) -> Vec<ExtendedCospan> {
    let mut out: Vec<ExtendedCospan> = Vec::new();
    for c in cs {
        if !out.iter().any(|d| is_iso(c, d)) {
            out.push(c.clone());
        }
    }
    out
}

/// True if the two lists have the same iso classes, each class once.
pub fn same_classes(a: &[ExtendedCospan], b: &[ExtendedCospan]) -> bool {
    a.len() == b.len() && a.iter().all(|x| b.iter().any(|y| is_iso(x, y)))
}

pub fn top_boxes(c: &ExtendedCospan) -> Vec<EdgeId> {
    let g = &c.carrier;
    g.hierarchical_edges().into_iter().filter(|&e| g.edge_nesting(e).is_none()).collect()
}

pub fn top_edges(c: &ExtendedCospan) -> BTreeSet<EdgeId> {
    let g = &c.carrier;
    g.edges().filter(|&e| g.edge_nesting(e).is_none() && !g.label(e).is_hierarchical()).collect()
}

/// Top-level vertices touched by no edge.
pub fn loose_wires(c: &ExtendedCospan) -> Vec<VertexId> {
    let g = &c.carrier;
    let touched: BTreeSet<VertexId> = g.edges().flat_map(|e| g.sources(e).iter().chain(g.targets(e)).copied().collect::<Vec<_>>()).collect();
    g.vertices().filter(|v| g.vertex_nesting(*v).is_none() && !touched.contains(v)).collect()
}
