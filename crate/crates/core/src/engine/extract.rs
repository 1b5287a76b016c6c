//! Extraction of a cheapest term by greedy bottom-up choice of one
//! component per e-box.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use num_traits::{One, Zero};

use crate::cospan::ExtendedCospan;
use crate::graph::{EdgeId, Elem, Nesting};
use crate::rewrite::apply;
use crate::rewrite::schema::choose_component;
use crate::term::{readback, ReadbackError, Term};

/// Per-generator costs; unlisted generators cost `default`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostModel<T> {
    pub costs: BTreeMap<String, T>,
    pub default: T,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CostError {
    #[error("line {line}: expected `name = cost`")]
    Syntax { line: usize },
    #[error("line {line}: cost `{text}` is not a finite non-negative number")]
    BadCost { line: usize, text: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("cannot commit to component {comp} of {bx}: {detail}")]
    Choice { bx: EdgeId, comp: u32, detail: String },
    #[error(transparent)]
    Readback(#[from] ReadbackError),
}

impl<T: Zero + One> Default for CostModel<T> {
    fn default() -> Self {
        Self::unit()
    }
}

impl<T: Zero + One> CostModel<T> {
    /// Cost 1 per edge.
    pub fn unit() -> Self {
        CostModel {
            costs: BTreeMap::new(),
            default: T::one(),
        }
    }
}

impl<T> CostModel<T>
where
    T: Clone + Zero + One + Sub<Output = T> + PartialOrd + FromStr,
{
    /// Reads lines `name = cost` on top of unit costs. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CostError> {
        let mut m = Self::unit();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, cost) = line.split_once('=').ok_or(CostError::Syntax { line: i + 1 })?;
            let (name, cost) = (name.trim(), cost.trim());
            if name.is_empty() {
                return Err(CostError::Syntax { line: i + 1 });
            }
            let bad = || CostError::BadCost {
                line: i + 1,
                text: cost.to_string(),
            };
            let v: T = cost.parse().map_err(|_| bad())?;
            // NaN and infinities fail `v - v == 0`.
            if v < T::zero() || !(v.clone() - v.clone()).is_zero() {
                return Err(bad());
            }
            m.costs.insert(name.to_string(), v);
        }
        Ok(m)
    }
}

impl<T: Clone> CostModel<T> {
    pub fn cost(&self, name: &str) -> T {
        self.costs.get(name).cloned().unwrap_or_else(|| self.default.clone())
    }
}

impl<T: fmt::Display> fmt::Display for CostModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, c) in &self.costs {
            writeln!(f, "{name} = {c}")?;
        }
        Ok(())
    }
}

/// Total cost of the edges of a box-free carrier region.
fn region_cost<T>(c: &ExtendedCospan, n: Option<Nesting>, m: &CostModel<T>) -> T
where
    T: Clone + Zero + Add<Output = T>,
{
    let g = &c.carrier;
    g.edges()
        .filter(|&e| g.edge_nesting(e) == n)
        .fold(T::zero(), |acc, e| acc + m.cost(g.label(e).name().unwrap_or_default()))
}

/// The box-free cospan left after committing every e-box, innermost first,
/// to its cheapest component. Ties go to the lowest component index.
pub fn extract_cospan<T>(c: &ExtendedCospan, m: &CostModel<T>) -> Result<ExtendedCospan, ExtractError>
where
    T: Clone + Zero + Add<Output = T> + PartialOrd,
{
    let mut host = c.clone();
    loop {
        let g = &host.carrier;
        let leaf = g
            .hierarchical_edges()
            .into_iter()
            .find(|&b| g.hierarchical_edges().iter().all(|&o| o == b || !g.is_ancestor(b, Elem::Edge(o))));
        let Some(bx) = leaf else { return Ok(host) };
        let mut best: Option<(u32, T)> = None;
        for k in g.component_ids(bx) {
            let cost = region_cost(&host, Some(Nesting { parent: bx, component: k }), m);
            if best.as_ref().map_or(true, |(_, b)| cost < *b) {
                best = Some((k, cost));
            }
        }
        let (comp, _) = best.expect("e-boxes have components");
        let err = |detail: String| ExtractError::Choice { bx, comp, detail };
        let choice = choose_component(&host, bx, comp).map_err(|e| err(e.to_string()))?;
        host = apply(&host, &choice).map_err(|e| err(e.to_string()))?;
    }
}

/// [`extract_cospan`] read back as a term.
pub fn extract<T>(c: &ExtendedCospan, m: &CostModel<T>) -> Result<Term, ExtractError>
where
    T: Clone + Zero + Add<Output = T> + PartialOrd,
{
    Ok(readback(&extract_cospan(c, m)?)?)
}

/// Cost of the top-level edges of a cospan.
pub fn cost_of<T>(c: &ExtendedCospan, m: &CostModel<T>) -> T
where
    T: Clone + Zero + Add<Output = T>,
{
    region_cost(c, None, m)
}
