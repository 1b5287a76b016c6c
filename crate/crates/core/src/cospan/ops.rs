use crate::graph::{EHomomorphism, EHypergraph, Label, Nesting};

use super::{is_iso, pushout, ExtendedCospan, PushoutError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CospanError {
    #[error("interface mismatch: {left} outputs against {right} inputs")]
    InterfaceMismatch { left: usize, right: usize },
    #[error("join parts disagree on arity: {0}")]
    JoinArity(String),
    #[error("join of an empty list")]
    EmptyJoin,
    #[error("internal pushout failure: {0}")]
    Pushout(#[from] PushoutError),
}

/// Sequential composition `f ; g`.
pub fn compose(f: &ExtendedCospan, g: &ExtendedCospan) -> Result<ExtendedCospan, CospanError> {
    if f.coarity() != g.arity() {
        return Err(CospanError::InterfaceMismatch {
            left: f.coarity(),
            right: g.arity(),
        });
    }
    let (z, zv) = EHypergraph::discrete(f.coarity());
    let fo = f.outputs();
    let gi = g.inputs();
    let l = EHomomorphism {
        vmap: zv.iter().zip(&fo).map(|(&a, &b)| (a, b)).collect(),
        ..Default::default()
    };
    let r = EHomomorphism {
        vmap: zv.iter().zip(&gi).map(|(&a, &b)| (a, b)).collect(),
        ..Default::default()
    };
    let p = pushout(&z, &f.carrier, &l, &g.carrier, &r)?;
    let p1 = &p.inj_left.vmap;
    let p2 = &p.inj_right.vmap;
    let mut int_in: Vec<_> = f.int_in.iter().map(|v| p1[v]).collect();
    int_in.extend(g.strict_in_slots().into_iter().map(|k| p2[&g.int_in[k]]));
    let mut int_out: Vec<_> = g.int_out.iter().map(|v| p2[v]).collect();
    int_out.extend(f.strict_out_slots().into_iter().map(|k| p1[&f.int_out[k]]));
    Ok(ExtendedCospan {
        carrier: p.object,
        int_in,
        ext_in: f.ext_in.clone(),
        int_out,
        ext_out: g.ext_out.clone(),
    })
}

/// Monoidal product: disjoint union with `f`'s slots first.
pub fn tensor(f: &ExtendedCospan, g: &ExtendedCospan) -> ExtendedCospan {
    let mut carrier = f.carrier.clone();
    let h = carrier.embed(&g.carrier, None);
    let mut int_in = f.int_in.clone();
    int_in.extend(g.int_in.iter().map(|v| h.vmap[v]));
    let mut int_out = f.int_out.clone();
    int_out.extend(g.int_out.iter().map(|v| h.vmap[v]));
    let mut ext_in = f.ext_in.clone();
    ext_in.extend(g.ext_in.iter().map(|k| k + f.int_in.len()));
    let mut ext_out = f.ext_out.clone();
    ext_out.extend(g.ext_out.iter().map(|k| k + f.int_out.len()));
    ExtendedCospan {
        carrier,
        int_in,
        ext_in,
        int_out,
        ext_out,
    }
}

/// Tensor of a list, left to right; the empty list gives the empty cospan.
pub fn tensor_all(parts: &[ExtendedCospan]) -> ExtendedCospan {
    let mut it = parts.iter();
    match it.next() {
        None => ExtendedCospan::empty(),
        Some(first) => it.fold(first.clone(), |acc, p| tensor(&acc, p)),
    }
}

/// Joins the parts under a fresh e-box without removing duplicates. Each part
/// becomes one component; a single part yields a one-component box.
pub fn join_raw(parts: &[ExtendedCospan]) -> Result<ExtendedCospan, CospanError> {
    let first = parts.first().ok_or(CospanError::EmptyJoin)?;
    let (n, k) = (first.arity(), first.coarity());
    if let Some(p) = parts.iter().find(|p| p.arity() != n || p.coarity() != k) {
        return Err(CospanError::JoinArity(format!(
            "{n} -> {k} against {} -> {}",
            p.arity(),
            p.coarity()
        )));
    }
    let mut g = EHypergraph::new();
    let ins: Vec<_> = (0..n).map(|_| g.add_vertex(None)).collect();
    let outs: Vec<_> = (0..k).map(|_| g.add_vertex(None)).collect();
    let bx = g.add_edge(Label::Hierarchical, ins.clone(), outs.clone(), None);
    let mut int_in = ins.clone();
    let mut int_out = outs.clone();
    for (c, p) in parts.iter().enumerate() {
        let h = g.embed(
            &p.carrier,
            Some(Nesting {
                parent: bx,
                component: c as u32,
            }),
        );
        int_in.extend(p.int_in.iter().map(|v| h.vmap[v]));
        int_out.extend(p.int_out.iter().map(|v| h.vmap[v]));
    }
    Ok(ExtendedCospan {
        carrier: g,
        int_in,
        ext_in: (0..n).collect(),
        int_out,
        ext_out: (0..k).collect(),
    })
}

/// Join after removing parts isomorphic to an earlier one. A single surviving
/// part is returned unchanged.
pub fn join(parts: &[ExtendedCospan]) -> Result<ExtendedCospan, CospanError> {
    let mut kept: Vec<ExtendedCospan> = Vec::new();
    for p in parts {
        if !kept.iter().any(|q| is_iso(q, p)) {
            kept.push(p.clone());
        }
    }
    match kept.len() {
        0 => Err(CospanError::EmptyJoin),
        1 => Ok(kept.pop().unwrap()),
        _ => join_raw(&kept),
    }
}
