//! Copy/delete equations of Cartesian signatures as rewrite rules, and
//! naturality of copying as rule instances built on the fly.

use std::collections::BTreeSet;

use crate::cospan::{compose, is_iso, ExtendedCospan};
use crate::graph::EdgeId;
use crate::signature::{Signature, DUP};
use crate::term::Term;

use super::region::{region_cospan, sub_cospan, Region};
use super::schema::SchemaError;
use super::{Match, RewriteRule};

fn cart() -> Signature {
    Signature::new().cartesian()
}

fn rule(name: &str, l: &str, r: &str) -> RewriteRule {
    let parse = |s: &str| Term::parse(s).expect("built-in rule parses");
    RewriteRule::from_terms(name, &parse(l), &parse(r), &cart()).expect("built-in rule is well formed")
}

/// Counit, cocommutativity and coassociativity of copying, each read left
/// to right.
pub fn cartesian_rules() -> Vec<RewriteRule> {
    vec![
        rule("counit-l", "dup ; (del * id:1)", "id:1"),
        rule("counit-r", "dup ; (id:1 * del)", "id:1"),
        rule("cocomm", "dup ; sym:1,1", "dup"),
        rule("coassoc", "dup ; (dup * id:1)", "dup ; (id:1 * dup)"),
    ]
}

/// The two counit laws, which only ever shrink a diagram.
pub fn counit_rules() -> Vec<RewriteRule> {
    cartesian_rules().into_iter().take(2).collect()
}

fn single_output_piece(host: &ExtendedCospan, e: EdgeId) -> Result<(ExtendedCospan, Region), SchemaError> {
    let g = &host.carrier;
    if g.targets(e).len() != 1 {
        return Err(SchemaError::Precondition(format!("{e} does not have exactly one output")));
    }
    let r = Region::from_edges(g, &[e].into(), &[]).map_err(SchemaError::Precondition)?;
    let (c, _) = region_cospan(host, &r);
    Ok((c, r))
}

/// `c ⊗ c ⇒ c ; dup` for two isomorphic constants `c : 0 → 1`, which may be
/// e-boxes.
pub fn share_constants(host: &ExtendedCospan, e1: EdgeId, e2: EdgeId) -> Result<Match, SchemaError> {
    let g = &host.carrier;
    if e1 == e2 || !g.has_edge(e1) || !g.has_edge(e2) {
        return Err(SchemaError::Precondition("need two distinct edges".into()));
    }
    if !g.sources(e1).is_empty() || !g.sources(e2).is_empty() {
        return Err(SchemaError::Precondition("edges are not constants".into()));
    }
    let level = g.edge_nesting(e1);
    if g.edge_nesting(e2) != level {
        return Err(SchemaError::Precondition("edges lie at different levels".into()));
    }
    let (p1, _) = single_output_piece(host, e1)?;
    let (p2, _) = single_output_piece(host, e2)?;
    if !is_iso(&p1, &p2) {
        return Err(SchemaError::Precondition("constants differ".into()));
    }
    let members = g.down_closure(&BTreeSet::from([e1, e2]));
    let outs = [g.targets(e1)[0], g.targets(e2)[0]];
    let (lhs, incl) = sub_cospan(host, &members, level, &[], &outs);
    let rhs = compose(&p1, &ExtendedCospan::generator(DUP, 1, 2))?;
    Ok(Match {
        rule: RewriteRule {
            name: "share".into(),
            lhs,
            rhs,
        },
        hom: incl,
        level,
    })
}

/// `dup ; (f ⊗ f) ⇒ f ; dup` for two isomorphic one-input, one-output
/// parts fed by the two outputs of the copy `d`.
pub fn share_unary(host: &ExtendedCospan, d: EdgeId, e1: EdgeId, e2: EdgeId) -> Result<Match, SchemaError> {
    let g = &host.carrier;
    if !g.has_edge(d) || g.label(d).name() != Some(DUP) {
        return Err(SchemaError::Precondition(format!("{d} is not a copy")));
    }
    let t = g.targets(d).to_vec();
    if g.sources(e1) != [t[0]] || g.sources(e2) != [t[1]] {
        return Err(SchemaError::Precondition("edges are not fed by the copy".into()));
    }
    let level = g.edge_nesting(d);
    let (p1, _) = single_output_piece(host, e1)?;
    let (p2, _) = single_output_piece(host, e2)?;
    if !is_iso(&p1, &p2) {
        return Err(SchemaError::Precondition("copied parts differ".into()));
    }
    let members = g.down_closure(&BTreeSet::from([d, e1, e2]));
    let outs = [g.targets(e1)[0], g.targets(e2)[0]];
    let (lhs, incl) = sub_cospan(host, &members, level, g.sources(d), &outs);
    let rhs = compose(&p1, &ExtendedCospan::generator(DUP, 1, 2))?;
    Ok(Match {
        rule: RewriteRule {
            name: "share".into(),
            lhs,
            rhs,
        },
        hom: incl,
        level,
    })
}
