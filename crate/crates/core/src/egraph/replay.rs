//! Replay of a single e-graph rewrite `before ⇝ after` as a sequence of EDPOI
//! steps between the translated cospans.

use std::collections::{BTreeSet, VecDeque};

use crate::cospan::{is_iso, ExtendedCospan, IsoSet};
use crate::graph::{EdgeId, Elem, Nesting};
use crate::rewrite::cartesian::{counit_rules, share_constants, share_unary};
use crate::rewrite::schema::{idem, seq_dist_left, singleton_absorb};
use crate::rewrite::{apply, find_matches, idem_expand, structural_matches, Match, RewriteRule, SchemaOptions};
use crate::signature::{Signature, DUP};

use super::{translate, EGraph, TranslateError};

/// Step budget of the greedy phase.
const GREEDY_LIMIT: usize = 256;
/// Depth and state budget of the fallback search.
const SEARCH_DEPTH: usize = 4;
const SEARCH_STATES: usize = 2000;

/// One applied rule instance and the cospan it produced.
#[derive(Clone, Debug)]
pub struct ReplayStep {
    pub description: String,
    pub result: ExtendedCospan,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error("replay incomplete after {} steps: {reason}", .steps.len())]
    ReplayIncomplete { steps: Vec<String>, reason: String },
}

/// Finds EDPOI steps from `translate(before)` to a cospan isomorphic to
/// `translate(after)`, where `after` is `before` with `rule` applied in both
/// directions followed by merging.
///
/// Every occurrence of either side is first duplicated with an idempotence
/// expansion and rewritten in the second copy. The result is then cleaned up
/// greedily by idempotence, singleton absorption, the counit laws, sharing
/// of isomorphic copied parts and absorption of copies into e-boxes. A short
/// breadth-first search over the same moves and the forward structural
/// schemas covers what the greedy phase misses.
pub fn replay(before: &EGraph, rule: &RewriteRule, after: &EGraph, sig: &Signature) -> Result<Vec<ReplayStep>, ReplayError> {
    let start = translate(before, sig)?;
    let target = translate(after, sig)?;
    let mut steps: Vec<ReplayStep> = Vec::new();
    let mut host = start;
    let mut fresh: BTreeSet<EdgeId> = BTreeSet::new();

    for r in [rule.clone(), rule.reversed()] {
        while let Some(m) = next_occurrence(&r, &host, &fresh) {
            let (edges, wires) = top_region(&m, &host);
            let expanded = apply_step(&host, &idem_expand(&host, &edges, &wires).ok(), &mut fresh);
            let Some(expanded) = expanded else {
                return Err(incomplete(&steps, format!("cannot expand occurrence {m}")));
            };
            steps.push(ReplayStep {
                description: format!("idem-expand {m}"),
                result: expanded.clone(),
            });
            let bx = new_box(&host, &expanded, m.level);
            let inner = bx.and_then(|bx| {
                find_matches(&r, &expanded).into_iter().find(|c| {
                    c.level
                        == Some(Nesting {
                            parent: bx,
                            component: 1,
                        })
                })
            });
            let Some(inner) = inner else {
                return Err(incomplete(&steps, format!("no copy of {m} in the expanded e-box")));
            };
            let Some(next) = apply_step(&expanded, &Some(inner.clone()), &mut fresh) else {
                return Err(incomplete(&steps, format!("{inner} does not apply")));
            };
            steps.push(ReplayStep {
                description: inner.to_string(),
                result: next.clone(),
            });
            host = next;
        }
    }

    for _ in 0..GREEDY_LIMIT {
        if is_iso(&host, &target) {
            return Ok(steps);
        }
        let Some((desc, next)) = greedy_moves(&host).into_iter().find_map(|(d, m)| apply(&host, &m).ok().map(|c| (d, c)))
        else {
            break;
        };
        steps.push(ReplayStep {
            description: desc,
            result: next.clone(),
        });
        host = next;
    }
    if is_iso(&host, &target) {
        return Ok(steps);
    }
    match search(&host, &target) {
        Some(tail) => {
            steps.extend(tail);
            Ok(steps)
        }
        None => Err(incomplete(&steps, "no cleanup sequence reaches the translated result".into())),
    }
}

fn incomplete(steps: &[ReplayStep], reason: String) -> ReplayError {
    ReplayError::ReplayIncomplete {
        steps: steps.iter().map(|s| s.description.clone()).collect(),
        reason,
    }
}

fn apply_step(host: &ExtendedCospan, m: &Option<Match>, fresh: &mut BTreeSet<EdgeId>) -> Option<ExtendedCospan> {
    let out = apply(host, m.as_ref()?).ok()?;
    fresh.extend(out.carrier.edges().filter(|&e| !host.carrier.has_edge(e)));
    Some(out)
}

/// First match of `r` that touches nothing created earlier in the replay.
fn next_occurrence(r: &RewriteRule, host: &ExtendedCospan, fresh: &BTreeSet<EdgeId>) -> Option<Match> {
    let g = &host.carrier;
    find_matches(r, host).into_iter().find(|m| {
        let img = m.hom.image();
        let touches = img.iter().any(|x| matches!(x, Elem::Edge(e) if fresh.contains(e)));
        let inside = m.level.is_some_and(|n| fresh.contains(&n.parent) || fresh.iter().any(|&b| g.is_ancestor(b, Elem::Edge(n.parent))));
        !touches && !inside
    })
}

/// Edges and isolated wires of a match at its own level.
fn top_region(m: &Match, host: &ExtendedCospan) -> (BTreeSet<EdgeId>, Vec<crate::graph::VertexId>) {
    let g = &host.carrier;
    let img = m.hom.image();
    let edges: BTreeSet<EdgeId> = img
        .iter()
        .filter_map(|x| match x {
            Elem::Edge(e) if g.edge_nesting(*e) == m.level => Some(*e),
            _ => None,
        })
        .collect();
    let touched: BTreeSet<_> = edges.iter().flat_map(|&e| g.sources(e).iter().chain(g.targets(e)).copied()).collect();
    let wires = img
        .iter()
        .filter_map(|x| match x {
            Elem::Vertex(v) if g.vertex_nesting(*v) == m.level && !touched.contains(v) => Some(*v),
            _ => None,
        })
        .collect();
    (edges, wires)
}

fn new_box(old: &ExtendedCospan, new: &ExtendedCospan, level: Option<Nesting>) -> Option<EdgeId> {
    let g = &new.carrier;
    g.hierarchical_edges()
        .into_iter()
        .find(|&e| !old.carrier.has_edge(e) && g.edge_nesting(e) == level)
}

/// Cleanup moves in priority order.
fn greedy_moves(host: &ExtendedCospan) -> Vec<(String, Match)> {
    let g = &host.carrier;
    let mut out: Vec<(String, Match)> = Vec::new();
    for bx in g.hierarchical_edges() {
        let comps = g.component_ids(bx);
        if comps.len() == 1 {
            if let Ok(m) = singleton_absorb(host, bx) {
                out.push((format!("singleton {bx}"), m));
            }
        }
        for &c in comps.iter().skip(1) {
            if let Ok(m) = idem(host, bx, c) {
                out.push((format!("idem {bx} drop {c}"), m));
            }
        }
    }
    for r in counit_rules() {
        out.extend(find_matches(&r, host).into_iter().map(|m| (m.to_string(), m)));
    }
    let consts: Vec<EdgeId> = g.edges().filter(|&e| g.sources(e).is_empty() && g.targets(e).len() == 1).collect();
    for (i, &a) in consts.iter().enumerate() {
        for &b in &consts[i + 1..] {
            if let Ok(m) = share_constants(host, a, b) {
                out.push((format!("share {a} {b}"), m));
            }
        }
    }
    let consumers = g.consumers();
    for d in g.edges().filter(|&e| g.label(e).name() == Some(DUP)) {
        let t = g.targets(d);
        let (Some([e1]), Some([e2])) = (consumers.get(&t[0]).map(Vec::as_slice), consumers.get(&t[1]).map(Vec::as_slice)) else {
            continue;
        };
        if let Ok(m) = share_unary(host, d, *e1, *e2) {
            out.push((format!("share {e1} {e2} after {d}"), m));
        }
    }
    for d in g.edges().filter(|&e| g.label(e).name() == Some(DUP)) {
        let users: BTreeSet<EdgeId> = g.targets(d).iter().flat_map(|v| consumers.get(v).into_iter().flatten().copied()).collect();
        let [bx] = users.iter().copied().collect::<Vec<_>>()[..] else { continue };
        if !g.label(bx).is_hierarchical() {
            continue;
        }
        if let Ok(m) = seq_dist_left(host, bx, &BTreeSet::from([d])) {
            out.push((format!("absorb {d} into {bx}"), m));
        }
    }
    out
}

fn search(from: &ExtendedCospan, target: &ExtendedCospan) -> Option<Vec<ReplayStep>> {
    let mut seen = IsoSet::new();
    seen.insert(from.clone());
    let mut queue: VecDeque<(ExtendedCospan, Vec<ReplayStep>)> = VecDeque::from([(from.clone(), Vec::new())]);
    while let Some((c, path)) = queue.pop_front() {
        if path.len() >= SEARCH_DEPTH {
            continue;
        }
        let mut moves = greedy_moves(&c);
        moves.extend(structural_matches(&c, &SchemaOptions::default()).into_iter().map(|sm| (sm.m.to_string(), sm.m)));
        for (desc, m) in moves {
            let Ok(next) = apply(&c, &m) else { continue };
            if !seen.insert(next.clone()) {
                continue;
            }
            let mut p = path.clone();
            p.push(ReplayStep {
                description: desc,
                result: next.clone(),
            });
            if is_iso(&next, target) {
                return Some(p);
            }
            if seen.len() >= SEARCH_STATES {
                return None;
            }
            queue.push_back((next, p));
        }
    }
    None
}
