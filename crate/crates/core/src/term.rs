//! Σ⁺-terms: generators, identities, symmetries, sequential and parallel
//! composition, and n-ary join.
//!
//! Concrete syntax, loosest binding first:
//!
//! ```text
//! term   := seq ('+' seq)*          n-ary join
//! seq    := tensor (';' tensor)*    left-associative composition
//! tensor := atom ('*' atom)*        left-associative monoidal product
//! atom   := name | 'id:' n | 'sym:' n ',' m | '(' term ')'
//! ```

use std::fmt;

use crate::cospan::{compose, join, join_raw, tensor, CospanError, ExtendedCospan};
use crate::graph::{EdgeId, Nesting, VertexId};
use crate::signature::Signature;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Gen(String),
    Id(usize),
    Sym(usize, usize),
    Comp(Box<Term>, Box<Term>),
    Tensor(Box<Term>, Box<Term>),
    Join(Vec<Term>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TermType {
    pub dom: usize,
    pub cod: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("unknown generator {0}")]
    UnknownGenerator(String),
    #[error("cannot compose {left} -> {mid_left} with {mid_right} -> {right} in `{term}`")]
    Composition {
        term: String,
        left: usize,
        mid_left: usize,
        mid_right: usize,
        right: usize,
    },
    #[error("join parts have different types in `{0}`")]
    JoinArity(String),
    #[error("empty join")]
    EmptyJoin,
    #[error("subterm `{0}` has type 0 -> 0")]
    Nullary(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at column {column}: {message}")]
pub struct ParseError {
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InterpretError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Cospan(#[from] CospanError),
}

impl Term {
    pub fn gen(name: &str) -> Term {
        Term::Gen(name.to_string())
    }

    pub fn comp(a: Term, b: Term) -> Term {
        Term::Comp(Box::new(a), Box::new(b))
    }

    pub fn tensor(a: Term, b: Term) -> Term {
        Term::Tensor(Box::new(a), Box::new(b))
    }

    /// Composition of a non-empty list, left-associated.
    pub fn seq(parts: Vec<Term>) -> Term {
        let mut it = parts.into_iter();
        let first = it.next().expect("empty sequence");
        it.fold(first, Term::comp)
    }

    /// Tensor of a non-empty list, left-associated.
    pub fn par(parts: Vec<Term>) -> Term {
        let mut it = parts.into_iter();
        let first = it.next().expect("empty tensor");
        it.fold(first, Term::tensor)
    }

    /// Number of generator occurrences.
    pub fn size(&self) -> usize {
        match self {
            Term::Gen(_) => 1,
            Term::Id(_) | Term::Sym(..) => 0,
            Term::Comp(a, b) | Term::Tensor(a, b) => a.size() + b.size(),
            Term::Join(ts) => ts.iter().map(Term::size).sum(),
        }
    }

    pub fn parse(text: &str) -> Result<Term, ParseError> {
        let mut p = Parser {
            chars: text.chars().collect(),
            pos: 0,
        };
        let t = p.join()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.error("unexpected input"));
        }
        Ok(t)
    }

    pub fn typecheck(&self, sig: &Signature) -> Result<TermType, TypeError> {
        let ty = match self {
            Term::Gen(name) => {
                let g = sig.get(name).ok_or_else(|| TypeError::UnknownGenerator(name.clone()))?;
                TermType {
                    dom: g.arity,
                    cod: g.coarity,
                }
            }
            Term::Id(n) => TermType { dom: *n, cod: *n },
            Term::Sym(n, m) => TermType {
                dom: n + m,
                cod: n + m,
            },
            Term::Comp(a, b) => {
                let ta = a.typecheck(sig)?;
                let tb = b.typecheck(sig)?;
                if ta.cod != tb.dom {
                    return Err(TypeError::Composition {
                        term: self.to_string(),
                        left: ta.dom,
                        mid_left: ta.cod,
                        mid_right: tb.dom,
                        right: tb.cod,
                    });
                }
                TermType {
                    dom: ta.dom,
                    cod: tb.cod,
                }
            }
            Term::Tensor(a, b) => {
                let ta = a.typecheck(sig)?;
                let tb = b.typecheck(sig)?;
                TermType {
                    dom: ta.dom + tb.dom,
                    cod: ta.cod + tb.cod,
                }
            }
            Term::Join(ts) => {
                let first = ts.first().ok_or(TypeError::EmptyJoin)?.typecheck(sig)?;
                for t in &ts[1..] {
                    if t.typecheck(sig)? != first {
                        return Err(TypeError::JoinArity(self.to_string()));
                    }
                }
                first
            }
        };
        if ty.dom == 0 && ty.cod == 0 {
            return Err(TypeError::Nullary(self.to_string()));
        }
        Ok(ty)
    }

    /// Interpretation as an extended cospan; joins remove duplicate parts.
    pub fn interpret(&self, sig: &Signature) -> Result<ExtendedCospan, InterpretError> {
        self.typecheck(sig)?;
        self.build(sig, false)
    }

    /// Interpretation keeping every join part, so `f + f` yields a box with
    /// two components and a one-part join yields a one-component box.
    pub fn interpret_raw(&self, sig: &Signature) -> Result<ExtendedCospan, InterpretError> {
        self.typecheck(sig)?;
        self.build(sig, true)
    }

    fn build(&self, sig: &Signature, raw: bool) -> Result<ExtendedCospan, InterpretError> {
        Ok(match self {
            Term::Gen(name) => {
                let g = sig.get(name).ok_or_else(|| TypeError::UnknownGenerator(name.clone()))?;
                ExtendedCospan::generator(name, g.arity, g.coarity)
            }
            Term::Id(n) => ExtendedCospan::identity(*n),
            Term::Sym(n, m) => ExtendedCospan::symmetry(*n, *m),
            Term::Comp(a, b) => compose(&a.build(sig, raw)?, &b.build(sig, raw)?)?,
            Term::Tensor(a, b) => tensor(&a.build(sig, raw)?, &b.build(sig, raw)?),
            Term::Join(ts) => {
                let parts = ts.iter().map(|t| t.build(sig, raw)).collect::<Result<Vec<_>, _>>()?;
                if raw {
                    join_raw(&parts)?
                } else {
                    join(&parts)?
                }
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Term::Join(_) => 0,
            Term::Comp(..) => 1,
            Term::Tensor(..) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReadbackError {
    #[error("carrier is cyclic")]
    Cyclic,
    #[error("{0} is not consumed exactly once")]
    NotMonogamous(VertexId),
    #[error("a 0 -> 0 cospan has no term")]
    Nullary,
}

/// A term whose interpretation is isomorphic to `c`, which must be MDA well
/// typed. Edges are read back one per layer in a topological order, each
/// layer preceded by the symmetries bringing its sources to the front. An
/// e-box reads back as the join of its components.
pub fn readback(c: &ExtendedCospan) -> Result<Term, ReadbackError> {
    let g = &c.carrier;
    let order = g.topological_edges().ok_or(ReadbackError::Cyclic)?;
    let mut pending: Vec<EdgeId> = order.into_iter().filter(|&e| g.edge_nesting(e).is_none()).collect();
    let mut wires: Vec<VertexId> = c.inputs();
    let mut layers: Vec<Term> = Vec::new();
    while !pending.is_empty() {
        let ready: Vec<usize> = (0..pending.len())
            .filter(|&i| g.sources(pending[i]).iter().all(|v| wires.contains(v)))
            .collect();
        let Some(&first) = ready.first() else {
            let stuck = g.sources(pending[0]).iter().find(|v| !wires.contains(v)).copied();
            return Err(ReadbackError::NotMonogamous(stuck.unwrap_or(VertexId(0))));
        };
        // Prefer an edge that leaves some wire, so no prefix has type 0 -> 0.
        let pick = ready
            .iter()
            .copied()
            .find(|&i| {
                let e = pending[i];
                wires.len() - g.sources(e).len() + g.targets(e).len() > 0 || pending.len() == 1
            })
            .unwrap_or(first);
        let e = pending.remove(pick);
        let srcs = g.sources(e);
        let rest: Vec<VertexId> = wires.iter().copied().filter(|v| !srcs.contains(v)).collect();
        if rest.len() + srcs.len() != wires.len() {
            return Err(ReadbackError::NotMonogamous(srcs[0]));
        }
        let front: Vec<VertexId> = srcs.iter().chain(&rest).copied().collect();
        if let Some(p) = permutation_term(&wires, &front) {
            layers.push(p);
        }
        let edge = match g.label(e).name() {
            Some(name) => Term::gen(name),
            None => {
                let parts = g
                    .component_ids(e)
                    .into_iter()
                    .map(|k| readback(&c.component_cospan(Nesting { parent: e, component: k })))
                    .collect::<Result<Vec<_>, _>>()?;
                Term::Join(parts)
            }
        };
        layers.push(if rest.is_empty() { edge } else { Term::tensor(edge, Term::Id(rest.len())) });
        wires = g.targets(e).iter().chain(&rest).copied().collect();
    }
    let outs = c.outputs();
    if wires.len() != outs.len() {
        let extra = wires.iter().find(|v| !outs.contains(v)).copied();
        return Err(ReadbackError::NotMonogamous(extra.unwrap_or(VertexId(0))));
    }
    if let Some(p) = permutation_term(&wires, &outs) {
        layers.push(p);
    }
    if layers.is_empty() {
        return match wires.len() {
            0 => Err(ReadbackError::Nullary),
            n => Ok(Term::Id(n)),
        };
    }
    Ok(Term::seq(layers))
}

/// Adjacent transpositions taking the wire order `from` to `to`, or `None`
/// when they agree.
fn permutation_term(from: &[VertexId], to: &[VertexId]) -> Option<Term> {
    if from == to {
        return None;
    }
    let n = from.len();
    let mut cur = from.to_vec();
    let mut swaps: Vec<Term> = Vec::new();
    for i in 0..n {
        let j = cur.iter().position(|v| *v == to[i]).expect("same wires");
        for k in (i..j).rev() {
            cur.swap(k, k + 1);
            let mut parts = Vec::new();
            if k > 0 {
                parts.push(Term::Id(k));
            }
            parts.push(Term::Sym(1, 1));
            if n - k - 2 > 0 {
                parts.push(Term::Id(n - k - 2));
            }
            swaps.push(Term::par(parts));
        }
    }
    Some(Term::seq(swaps))
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, t: &Term, min: u8) -> fmt::Result {
            if t.precedence() < min {
                write!(f, "({t})")
            } else {
                write!(f, "{t}")
            }
        }
        match self {
            Term::Gen(name) => f.write_str(name),
            Term::Id(n) => write!(f, "id:{n}"),
            Term::Sym(n, m) => write!(f, "sym:{n},{m}"),
            Term::Comp(a, b) => {
                child(f, a, 1)?;
                f.write_str(" ; ")?;
                child(f, b, 2)
            }
            Term::Tensor(a, b) => {
                child(f, a, 2)?;
                f.write_str(" * ")?;
                child(f, b, 3)
            }
            Term::Join(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    child(f, t, 1)?;
                }
                Ok(())
            }
        }
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, message: &str) -> ParseError {
        ParseError {
            column: self.pos + 1,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.chars.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn join(&mut self) -> Result<Term, ParseError> {
        let mut parts = vec![self.seq()?];
        while self.eat('+') {
            parts.push(self.seq()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Term::Join(parts)
        })
    }

    fn seq(&mut self) -> Result<Term, ParseError> {
        let mut t = self.tensor()?;
        while self.eat(';') {
            t = Term::comp(t, self.tensor()?);
        }
        Ok(t)
    }

    fn tensor(&mut self) -> Result<Term, ParseError> {
        let mut t = self.atom()?;
        while self.eat('*') {
            t = Term::tensor(t, self.atom()?);
        }
        Ok(t)
    }

    fn number(&mut self) -> Result<usize, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a number"));
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().map_err(|_| ParseError {
            column: start + 1,
            message: "number out of range".into(),
        })
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.chars.get(self.pos) {
            None => Err(self.error("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let unclosed = ParseError {
                    column: start + 1,
                    message: "unclosed parenthesis".into(),
                };
                let t = match self.join() {
                    Ok(t) => t,
                    Err(_) if self.pos >= self.chars.len() => return Err(unclosed),
                    Err(e) => return Err(e),
                };
                if !self.eat(')') {
                    return Err(if self.pos >= self.chars.len() {
                        unclosed
                    } else {
                        self.error("expected `)`")
                    });
                }
                Ok(t)
            }
            Some(c) if c.is_alphabetic() || *c == '_' => {
                while self.pos < self.chars.len()
                    && (self.chars[self.pos].is_alphanumeric() || self.chars[self.pos] == '_')
                {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                if (name == "id" || name == "sym") && self.eat(':') {
                    let n = self.number()?;
                    if name == "id" {
                        return Ok(Term::Id(n));
                    }
                    if !self.eat(',') {
                        return Err(self.error("expected `,`"));
                    }
                    let m = self.number()?;
                    return Ok(Term::Sym(n, m));
                }
                Ok(Term::Gen(name))
            }
            Some(_) => Err(self.error("expected a term")),
        }
    }
}
