//! Transition kernels and subgraph restriction.
//!
//! A kernel is a pure function from a vertex to its finitely many outgoing
//! edges. Restriction to a subgraph `U` zeroes the rows outside of `U`
//! (entries leading out of `U` are dropped, so row sums shrink); conditioning
//! a substochastic kernel on staying renormalizes each row by its sum.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::vertex::VertexId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Stochastic,
    Substochastic,
}

/// One-step transition kernel on a lazily generated graph.
///
/// Implementations must return a finite neighbor list in a fixed order with
/// strictly positive probabilities summing to at most 1 (exactly 1, up to
/// rounding, when the kernel is stochastic).
pub trait TransitionKernel: Sync {
    fn neighbors(&self, v: &VertexId) -> Result<Vec<(VertexId, f64)>>;
    fn kind(&self) -> KernelKind;
}

impl<K: TransitionKernel + ?Sized> TransitionKernel for &K {
    fn neighbors(&self, v: &VertexId) -> Result<Vec<(VertexId, f64)>> {
        (**self).neighbors(v)
    }
    fn kind(&self) -> KernelKind {
        (**self).kind()
    }
}

/// Membership oracle for a subgraph, together with a base vertex inside it.
///
/// Edges are inherited from the ambient graph, so whenever two members are
/// adjacent in `G` they are adjacent in `U`.
pub trait Subgraph: Sync {
    fn contains(&self, v: &VertexId) -> bool;
    fn base(&self) -> VertexId;
}

impl<S: Subgraph + ?Sized> Subgraph for &S {
    fn contains(&self, v: &VertexId) -> bool {
        (**self).contains(v)
    }
    fn base(&self) -> VertexId {
        (**self).base()
    }
}

/// The whole graph as a subgraph (membership always true).
#[derive(Debug, Clone)]
pub struct FullGraph {
    pub base: VertexId,
}

impl FullGraph {
    pub fn new(base: VertexId) -> Self {
        FullGraph { base }
    }
}

impl Subgraph for FullGraph {
    fn contains(&self, _v: &VertexId) -> bool {
        true
    }
    fn base(&self) -> VertexId {
        self.base.clone()
    }
}

/// `P_U`: the kernel with rows filtered to members of `U`.
pub struct Restricted<'a> {
    kernel: &'a dyn TransitionKernel,
    sub: &'a dyn Subgraph,
}

/// Restricts a kernel to a subgraph. Fails if the base vertex is not a member.
pub fn restrict<'a>(
    kernel: &'a dyn TransitionKernel,
    sub: &'a dyn Subgraph,
) -> Result<Restricted<'a>> {
    let base = sub.base();
    if !sub.contains(&base) {
        return Err(Error::Spec(format!("base vertex {base} is not a member")));
    }
    Ok(Restricted { kernel, sub })
}

impl TransitionKernel for Restricted<'_> {
    fn neighbors(&self, v: &VertexId) -> Result<Vec<(VertexId, f64)>> {
        let row = self.kernel.neighbors(v)?;
        Ok(row
            .into_iter()
            .filter(|(w, _)| self.sub.contains(w))
            .collect())
    }
    fn kind(&self) -> KernelKind {
        KernelKind::Substochastic
    }
}

/// `Q_U`: the substochastic kernel conditioned on staying, row by row.
///
/// Rows already summing to 1 are returned unchanged; deficient rows are
/// divided by their sum. A reachable row with zero sum is reported lazily,
/// when it is first queried.
pub struct Normalized<'a> {
    kernel: &'a dyn TransitionKernel,
}

pub fn normalize(kernel: &dyn TransitionKernel) -> Normalized<'_> {
    Normalized { kernel }
}

impl TransitionKernel for Normalized<'_> {
    fn neighbors(&self, v: &VertexId) -> Result<Vec<(VertexId, f64)>> {
        let row = self.kernel.neighbors(v)?;
        let sum: f64 = row.iter().map(|(_, p)| p).sum();
        if sum <= 0.0 {
            return Err(Error::Normalization {
                vertex: v.to_string(),
            });
        }
        if (sum - 1.0).abs() <= 1e-12 {
            return Ok(row);
        }
        Ok(row.into_iter().map(|(w, p)| (w, p / sum)).collect())
    }
    fn kind(&self) -> KernelKind {
        KernelKind::Stochastic
    }
}

/// Sum of one row; 0 for an empty row.
pub fn row_sum(kernel: &dyn TransitionKernel, v: &VertexId) -> Result<f64> {
    Ok(kernel.neighbors(v)?.iter().map(|(_, p)| p).sum())
}

/// Explores the ball of given radius around `center` and returns the cached
/// row of every vertex in it.
pub fn explore_ball(
    kernel: &dyn TransitionKernel,
    center: &VertexId,
    radius: usize,
) -> Result<BTreeMap<VertexId, Vec<(VertexId, f64)>>> {
    let mut rows = BTreeMap::new();
    let mut frontier = VecDeque::new();
    frontier.push_back((center.clone(), 0usize));
    while let Some((v, d)) = frontier.pop_front() {
        if rows.contains_key(&v) {
            continue;
        }
        let row = kernel.neighbors(&v)?;
        if d < radius {
            for (w, _) in &row {
                if !rows.contains_key(w) {
                    frontier.push_back((w.clone(), d + 1));
                }
            }
        }
        rows.insert(v, row);
    }
    Ok(rows)
}

/// Checks irreducibility on a truncation: every vertex of the ball of the
/// given radius must reach the center again without leaving the ball of
/// twice the radius. Suited to the nearest-neighbor families used here.
pub fn check_irreducible_ball(
    kernel: &dyn TransitionKernel,
    center: &VertexId,
    radius: usize,
) -> Result<bool> {
    let rows = explore_ball(kernel, center, radius)?;
    for v in rows.keys() {
        if !reaches(kernel, v, center, 2 * radius + 2)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn reaches(
    kernel: &dyn TransitionKernel,
    from: &VertexId,
    to: &VertexId,
    max_steps: usize,
) -> Result<bool> {
    let mut seen = BTreeMap::new();
    let mut frontier = VecDeque::new();
    frontier.push_back((from.clone(), 0usize));
    seen.insert(from.clone(), ());
    while let Some((v, d)) = frontier.pop_front() {
        if v == *to {
            return Ok(true);
        }
        if d == max_steps {
            continue;
        }
        for (w, _) in kernel.neighbors(&v)? {
            if !seen.contains_key(&w) {
                seen.insert(w.clone(), ());
                frontier.push_back((w, d + 1));
            }
        }
    }
    Ok(false)
}
