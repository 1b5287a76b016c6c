//! Rewrite rules as spans of extended cospans, convex matching, extended
//! boundary complements and EDPOI rule application.

pub mod cartesian;
mod dpo;
mod matching;
mod region;
pub mod schema;

use std::fmt;

use crate::cospan::{join_raw, CospanError, ExtendedCospan};
use crate::graph::{EHomomorphism, Elem, Nesting};
use crate::signature::Signature;
use crate::term::{InterpretError, Term, TermType, TypeError};

pub use dpo::{apply, boundary_complement, glue, Complement, RewriteError};
pub use matching::{find_homs, find_matches, HomQuery};
pub use region::{region_boundary, sub_cospan, Region};
pub use schema::{idem_expand, structural_matches, Direction, SchemaError, SchemaKind, SchemaMatch, SchemaOptions, Side, StructuralSchema};

/// A rule `i → i' → L ← j' ← j` to `i → i'' → R ← j'' ← j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteRule {
    pub name: String,
    pub lhs: ExtendedCospan,
    pub rhs: ExtendedCospan,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("rule {name}: {source}")]
    Type { name: String, source: TypeError },
    #[error("rule {name}: {source}")]
    Interpret { name: String, source: InterpretError },
    #[error("rule {name}: sides have types {left:?} and {right:?}")]
    TypeMismatch { name: String, left: TermType, right: TermType },
    #[error("rule {name}: external interfaces differ ({detail})")]
    InterfaceMismatch { name: String, detail: String },
    #[error("rule {name}: {side} side has a top-level piece with no interface")]
    Nullary { name: String, side: &'static str },
    #[error("rule {name}: {side} side is not a well-typed MDA cospan: {detail}")]
    NotMda { name: String, side: &'static str, detail: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

impl RewriteRule {
    /// Checks that both sides are MDA well-typed with equal external
    /// interfaces and no top-level piece of type `0 → 0`.
    pub fn new(name: &str, lhs: ExtendedCospan, rhs: ExtendedCospan) -> Result<Self, RuleError> {
        if lhs.arity() != rhs.arity() || lhs.coarity() != rhs.coarity() {
            return Err(RuleError::InterfaceMismatch {
                name: name.to_string(),
                detail: format!("{} -> {} against {} -> {}", lhs.arity(), lhs.coarity(), rhs.arity(), rhs.coarity()),
            });
        }
        for (side, c) in [("left", &lhs), ("right", &rhs)] {
            let report = c.mda_report();
            if !report.is_valid() {
                return Err(RuleError::NotMda {
                    name: name.to_string(),
                    side,
                    detail: report.to_string(),
                });
            }
            if has_closed_piece(c) {
                return Err(RuleError::Nullary {
                    name: name.to_string(),
                    side,
                });
            }
        }
        Ok(RewriteRule {
            name: name.to_string(),
            lhs,
            rhs,
        })
    }

    pub fn from_terms(name: &str, l: &Term, r: &Term, sig: &Signature) -> Result<Self, RuleError> {
        let err = |source| RuleError::Type {
            name: name.to_string(),
            source,
        };
        let tl = l.typecheck(sig).map_err(err)?;
        let tr = r.typecheck(sig).map_err(err)?;
        if tl != tr {
            return Err(RuleError::TypeMismatch {
                name: name.to_string(),
                left: tl,
                right: tr,
            });
        }
        let interp = |t: &Term| {
            t.interpret(sig).map_err(|source| RuleError::Interpret {
                name: name.to_string(),
                source,
            })
        };
        RewriteRule::new(name, interp(l)?, interp(r)?)
    }

    /// The same rule read right to left.
    pub fn reversed(&self) -> RewriteRule {
        RewriteRule {
            name: reversed_name(&self.name),
            lhs: self.rhs.clone(),
            rhs: self.lhs.clone(),
        }
    }
}

fn reversed_name(name: &str) -> String {
    match name.strip_suffix('~') {
        Some(base) => base.to_string(),
        None => format!("{name}~"),
    }
}

/// True if some top-level piece touches no external interface vertex.
fn has_closed_piece(c: &ExtendedCospan) -> bool {
    let boundary: Vec<Elem> = c.inputs().into_iter().chain(c.outputs()).map(Elem::Vertex).collect();
    c.carrier
        .level_pieces(None)
        .iter()
        .any(|piece| !boundary.iter().any(|v| piece.contains(v)))
}

/// Both directions of the equation `l = r`: `name` and `name~`.
pub fn rule_from_terms(name: &str, l: &Term, r: &Term, sig: &Signature) -> Result<[RewriteRule; 2], RuleError> {
    let fwd = RewriteRule::from_terms(name, l, r, sig)?;
    let bwd = fwd.reversed();
    Ok([fwd, bwd])
}

/// Parses lines `name : term => term`, skipping blanks and `#` comments.
/// Each line yields the rule and its reverse.
pub fn parse_rules(text: &str, sig: &Signature) -> Result<Vec<RewriteRule>, RuleError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |message: String| RuleError::Syntax { line: i + 1, message };
        let (name, body) = line.split_once(':').ok_or_else(|| syntax("expected `name : lhs => rhs`".into()))?;
        let (l, r) = body.split_once("=>").ok_or_else(|| syntax("expected `=>`".into()))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(syntax("empty rule name".into()));
        }
        let l = Term::parse(l.trim()).map_err(|e| syntax(e.to_string()))?;
        let r = Term::parse(r.trim()).map_err(|e| syntax(e.to_string()))?;
        out.extend(rule_from_terms(name, &l, &r, sig)?);
    }
    Ok(out)
}

/// An occurrence of a rule's left-hand side in a host cospan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Match {
    pub rule: RewriteRule,
    /// Mono from the carrier of `rule.lhs` into the host carrier.
    pub hom: EHomomorphism,
    /// Where the top level of the left-hand side lands.
    pub level: Option<Nesting>,
}

impl Match {
    /// The same occurrence rewritten to the join of both sides, keeping the
    /// left-hand side beside the result.
    pub fn beside(&self) -> Result<Match, CospanError> {
        let rhs = join_raw(&[self.rule.lhs.clone(), self.rule.rhs.clone()])?;
        Ok(Match {
            rule: RewriteRule {
                name: format!("{}+", self.rule.name),
                lhs: self.rule.lhs.clone(),
                rhs,
            },
            hom: self.hom.clone(),
            level: self.level,
        })
    }

    /// Sorted image elements, the key used to order matches.
    pub fn key(&self) -> Vec<Elem> {
        self.hom.image().into_iter().collect()
    }
}

impl fmt::Display for Match {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at [", self.rule.name)?;
        for (k, x) in self.key().iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str("]")?;
        if let Some(n) = self.level {
            write!(f, " inside {}.{}", n.parent, n.component)?;
        }
        Ok(())
    }
}
