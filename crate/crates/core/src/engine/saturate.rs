//! Non-destructive saturation: each accepted rewrite keeps its left-hand
//! side and joins the right-hand side beside it.

use crate::cospan::{is_iso, ExtendedCospan, IsoSet};
use crate::rewrite::{apply, find_matches, structural_matches, RewriteRule, SchemaKind, SchemaOptions};

use super::normalize::{normal_components, normalize};

/// Which rule directions saturation uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DirectionPolicy {
    #[default]
    ForwardOnly,
    Bidirectional,
}

#[derive(Clone, Debug)]
pub struct Strategy {
    pub max_steps: usize,
    pub rules: Vec<RewriteRule>,
    /// Forward structural schemas used to expose rule occurrences.
    pub schemas: Vec<SchemaKind>,
    pub direction: DirectionPolicy,
    /// Rotates the order in which rules are tried.
    pub seed: u64,
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy {
            max_steps: 100,
            rules: Vec::new(),
            schemas: SchemaKind::ALL.to_vec(),
            direction: DirectionPolicy::ForwardOnly,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SaturationStatus {
    Fixpoint,
    StepLimit,
}

#[derive(Clone, Debug)]
pub struct Saturation {
    pub result: ExtendedCospan,
    /// Applied rule instances in order.
    pub steps: Vec<String>,
    pub status: SaturationStatus,
}

/// Components of the normal form, or the cospan itself if it has none.
fn components(c: &ExtendedCospan) -> Vec<ExtendedCospan> {
    match normalize(c) {
        Ok(n) => normal_components(&n),
        Err(_) => vec![c.clone()],
    }
}

fn component_set(c: &ExtendedCospan) -> IsoSet {
    let mut set = IsoSet::new();
    for p in components(c) {
        set.insert(p);
    }
    set
}

fn adds_component(known: &IsoSet, candidate: &ExtendedCospan) -> bool {
    components(candidate).iter().any(|p| !known.contains(p))
}

/// Repeats until nothing changes or `max_steps` steps were taken. A step is
/// the first rule occurrence, in rule order rotated by the seed, whose
/// right-hand side adds a normal-form component; it is applied as
/// `L ⇒ L + R`, which is idempotence expansion followed by the rule in the
/// second copy. Without such an occurrence, the first enabled forward
/// schema instance after which some rule would add a component is applied.
pub fn saturate(c: &ExtendedCospan, s: &Strategy) -> Saturation {
    let mut rules: Vec<RewriteRule> = s.rules.clone();
    if s.direction == DirectionPolicy::Bidirectional {
        rules.extend(s.rules.iter().map(RewriteRule::reversed));
    }
    if !rules.is_empty() {
        let k = (s.seed % rules.len() as u64) as usize;
        rules.rotate_left(k);
    }
    let mut host = c.clone();
    let mut steps = Vec::new();
    while steps.len() < s.max_steps {
        let known = component_set(&host);
        if let Some((desc, next)) = rule_step(&host, &rules, &known) {
            steps.push(desc);
            host = next;
            continue;
        }
        let exposing = structural_matches(&host, &SchemaOptions::default())
            .into_iter()
            .filter(|sm| s.schemas.contains(&sm.schema.kind))
            .find_map(|sm| {
                let next = apply(&host, &sm.m).ok()?;
                rule_step(&next, &rules, &known).map(|_| (sm.m.to_string(), next))
            });
        match exposing {
            Some((desc, next)) => {
                steps.push(desc);
                host = next;
            }
            None => {
                return Saturation {
                    result: host,
                    steps,
                    status: SaturationStatus::Fixpoint,
                }
            }
        }
    }
    Saturation {
        result: host,
        steps,
        status: SaturationStatus::StepLimit,
    }
}

fn rule_step(host: &ExtendedCospan, rules: &[RewriteRule], known: &IsoSet) -> Option<(String, ExtendedCospan)> {
    for r in rules {
        if is_iso(&r.lhs, &r.rhs) {
            continue;
        }
        for m in find_matches(r, host) {
            let Ok(b) = m.beside() else { continue };
            let Ok(next) = apply(host, &b) else { continue };
            if adds_component(known, &next) {
                return Some((m.to_string(), next));
            }
        }
    }
    None
}
