//! Rooted trees: kernels, boundary measure, percolation clusters, pruned
//! trees, the edge-breeding extinction recursion and boundary certificates.
//!
//! Boundary sets are handled through depth-D certificates: the set of depth-D
//! vertices whose subtree meets the set. That is the computable shadow of the
//! boundary of a subset of an infinite tree.


use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernel::{KernelKind, Subgraph, TransitionKernel};
use crate::vertex::{TreeWord, VertexId};

/// Forward-branching profile of a rooted tree: `forward_degree(i)` children
/// for every vertex at depth `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeSpec {
    branching: Branching,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Branching {
    /// The regular tree of graph degree `d`: the root has `d` children,
    /// deeper vertices have `d - 1`.
    Regular { degree: u32 },
    /// Explicit forward degrees per depth; depths past the list use `tail`.
    PerLevel { forward: Vec<u32>, tail: u32 },
}

impl TreeSpec {
    /// The homogeneous tree in which every vertex has graph degree `d`.
    pub fn regular(degree: u32) -> Result<Self> {
        if degree < 2 {
            return Err(Error::Parameter(format!(
                "regular tree needs degree >= 2, got {degree}"
            )));
        }
        Ok(TreeSpec {
            branching: Branching::Regular { degree },
        })
    }

    /// Tree with explicit forward degrees `n_i`; all must be >= 1.
    pub fn per_level(forward: Vec<u32>, tail: u32) -> Result<Self> {
        if forward.contains(&0) || tail == 0 {
            return Err(Error::Parameter("forward degrees must be >= 1".into()));
        }
        Ok(TreeSpec {
            branching: Branching::PerLevel { forward, tail },
        })
    }

    /// Number of children of a vertex at the given depth.
    pub fn forward_degree(&self, depth: usize) -> u32 {
        match &self.branching {
            Branching::Regular { degree } => {
                if depth == 0 {
                    *degree
                } else {
                    *degree - 1
                }
            }
            Branching::PerLevel { forward, tail } => {
                forward.get(depth).copied().unwrap_or(*tail)
            }
        }
    }

    /// Graph degree of a vertex at the given depth (children plus parent).
    pub fn degree(&self, depth: usize) -> u32 {
        self.forward_degree(depth) + u32::from(depth > 0)
    }

    /// `|S_i|`, the number of vertices at depth `i`, as a float.
    pub fn level_size(&self, depth: usize) -> f64 {
        (0..depth).map(|j| self.forward_degree(j) as f64).product()
    }

    /// `|S_i|` as an exact integer; errors when it does not fit u128.
    pub fn level_size_exact(&self, depth: usize) -> Result<u128> {
        let mut size: u128 = 1;
        for j in 0..depth {
            size = size
                .checked_mul(self.forward_degree(j) as u128)
                .ok_or_else(|| Error::Parameter(format!("level size at depth {depth} overflows")))?;
        }
        Ok(size)
    }

    pub fn validate_word(&self, w: &TreeWord) -> Result<()> {
        for (depth, &letter) in w.0.iter().enumerate() {
            if letter >= self.forward_degree(depth) {
                return Err(Error::Encoding(format!(
                    "letter {letter} at depth {depth} exceeds forward degree {}",
                    self.forward_degree(depth)
                )));
            }
        }
        Ok(())
    }

    /// Simple random walk kernel: uniform over the graph neighbors.
    pub fn srw_kernel(&self) -> TreeKernel {
        TreeKernel { spec: self.clone() }
    }

    /// Distance-from-root quotient of the simple random walk, realized as a
    /// kernel on the leftmost ray. Its diagonal probabilities and row sums
    /// coincide with the full tree kernel's (the quotient rows of the walk
    /// depend on the depth only), which makes deep estimates affordable.
    pub fn radial_kernel(&self) -> RadialTreeKernel {
        RadialTreeKernel { spec: self.clone() }
    }

    /// All vertices at the given depth, in lexicographic order.
    pub fn level_words(&self, depth: usize) -> Result<Vec<TreeWord>> {
        let size = self.level_size_exact(depth)?;
        if size > 2_000_000 {
            return Err(Error::Parameter(format!(
                "level {depth} has {size} vertices; too many to enumerate"
            )));
        }
        let mut words = vec![TreeWord::root()];
        for d in 0..depth {
            let mut next = Vec::with_capacity(words.len() * self.forward_degree(d) as usize);
            for w in &words {
                for c in 0..self.forward_degree(d) {
                    next.push(w.child(c));
                }
            }
            words = next;
        }
        Ok(words)
    }
}

/// Simple random walk on a `TreeSpec` tree.
pub struct TreeKernel {
    spec: TreeSpec,
}

impl TransitionKernel for TreeKernel {
    fn neighbors(&self, v: &VertexId) -> Result<Vec<(VertexId, f64)>> {
        let w = v.as_tree()?;
        self.spec.validate_word(w)?;
        let depth = w.depth();
        let deg = self.spec.degree(depth) as f64;
        let p = 1.0 / deg;
        let mut row = Vec::with_capacity(self.spec.degree(depth) as usize);
        if let Some(parent) = w.parent() {
            row.push((VertexId::Tree(parent), p));
        }
        for c in 0..self.spec.forward_degree(depth) {
            row.push((VertexId::Tree(w.child(c)), p));
        }
        Ok(row)
    }

    fn kind(&self) -> KernelKind {
        KernelKind::Stochastic
    }
}

/// Distance quotient of the tree walk; states are the ray vertices `0^k`.
pub struct RadialTreeKernel {
    spec: TreeSpec,
}

impl TransitionKernel for RadialTreeKernel {
    fn neighbors(&self, v: &VertexId) -> Result<Vec<(VertexId, f64)>> {
        let depth = v.as_tree()?.depth();
        let ray = |k: usize| VertexId::Tree(TreeWord(vec![0; k]));
        if depth == 0 {
            return Ok(vec![(ray(1), 1.0)]);
        }
        let deg = self.spec.degree(depth) as f64;
        Ok(vec![
            (ray(depth - 1), 1.0 / deg),
            (ray(depth + 1), self.spec.forward_degree(depth) as f64 / deg),
        ])
    }

    fn kind(&self) -> KernelKind {
        KernelKind::Stochastic
    }
}

/// Harmonic measure of the boundary of the subtree branching from `x`:
/// `gamma_o(bd T_x) = 1 / |S_depth(x)|`.
pub fn boundary_measure(spec: &TreeSpec, x: &TreeWord) -> Result<f64> {
    spec.validate_word(x)?;
    Ok(1.0 / spec.level_size(x.depth()))
}

// ---------------------------------------------------------------------------
// Tree subsets and boundary certificates
// ---------------------------------------------------------------------------

/// A subset of a tree with a computable membership and subtree-meet oracle.
#[derive(Debug, Clone)]
pub enum TreeSet {
    /// The whole tree.
    Full,
    /// The subtree branching from a vertex.
    Subtree { root: TreeWord },
    /// A single geodesic ray: the path through `head`, then leftmost children.
    Ray { head: TreeWord },
    /// An explicit finite set of vertices.
    Finite { members: Vec<TreeWord> },
    /// A deterministic pruned tree.
    Pruned(PrunedTree),
    /// The root cluster of a Bernoulli edge percolation, truncated in depth.
    Cluster(Arc<GwRealization>),
    /// A sparse boundary-dense set of isolated deep vertices.
    Sparse(SparseDeepSet),
    /// Union of two sets.
    Union(Box<TreeSet>, Box<TreeSet>),
    /// Connected hull of another set: vertices whose subtree meets it.
    Hull { inner: Box<TreeSet> },
}

impl TreeSet {
    pub fn contains(&self, w: &TreeWord) -> bool {
        match self {
            TreeSet::Full => true,
            TreeSet::Subtree { root } => root.is_prefix_of(w),
            TreeSet::Ray { head } => on_ray(head, w),
            TreeSet::Finite { members } => members.binary_search(w).is_ok(),
            TreeSet::Pruned(p) => p.contains(w),
            TreeSet::Cluster(c) => c.contains(w),
            TreeSet::Sparse(s) => s.contains(w),
            TreeSet::Union(a, b) => a.contains(w) || b.contains(w),
            TreeSet::Hull { inner } => inner.meets(w),
        }
    }

    /// Does the subtree branching from `w` intersect the set? Truncated sets
    /// (clusters, finite sets) answer within their materialized extent.
    pub fn meets(&self, w: &TreeWord) -> bool {
        match self {
            TreeSet::Full => true,
            TreeSet::Subtree { root } => root.is_prefix_of(w) || w.is_prefix_of(root),
            TreeSet::Ray { head } => on_ray(head, w) || w.is_prefix_of(head),
            TreeSet::Finite { members } => members.iter().any(|m| w.is_prefix_of(m)),
            TreeSet::Pruned(p) => p.contains(w),
            TreeSet::Cluster(c) => c.meets(w),
            TreeSet::Sparse(_) => true,
            TreeSet::Union(a, b) => a.meets(w) || b.meets(w),
            TreeSet::Hull { inner } => inner.meets(w),
        }
    }

    pub fn finite(mut members: Vec<TreeWord>) -> TreeSet {
        members.sort();
        members.dedup();
        TreeSet::Finite { members }
    }
}

fn on_ray(head: &TreeWord, w: &TreeWord) -> bool {
    if w.depth() <= head.depth() {
        w.is_prefix_of(head)
    } else {
        head.is_prefix_of(w) && w.0[head.depth()..].iter().all(|&c| c == 0)
    }
}

/// The connected hull of a tree subset: the union of all root rays whose
/// every prefix has a descendant in the set. Membership reduces to the
/// subtree-meet test, which makes the hull prefix-closed, hence connected.
pub fn connected_hull(set: TreeSet) -> TreeSet {
    TreeSet::Hull {
        inner: Box::new(set),
    }
}

/// Depth-D boundary certificate: the depth-D vertices whose subtree meets
/// the set, in lexicographic order.
pub fn boundary_certificate(
    spec: &TreeSpec,
    set: &TreeSet,
    depth: usize,
) -> Result<Vec<TreeWord>> {
    Ok(spec
        .level_words(depth)?
        .into_iter()
        .filter(|w| set.meets(w))
        .collect())
}

/// A tree subset packaged as a `Subgraph` over tree-encoded vertices.
#[derive(Clone)]
pub struct TreeSubgraph {
    pub set: Arc<TreeSet>,
    pub base: TreeWord,
}

impl TreeSubgraph {
    pub fn new(set: TreeSet, base: TreeWord) -> Self {
        TreeSubgraph {
            set: Arc::new(set),
            base,
        }
    }
}

impl Subgraph for TreeSubgraph {
    fn contains(&self, v: &VertexId) -> bool {
        match v {
            VertexId::Tree(w) => self.set.contains(w),
            _ => false,
        }
    }
    fn base(&self) -> VertexId {
        VertexId::Tree(self.base.clone())
    }
}

// ---------------------------------------------------------------------------
// Bernoulli percolation clusters
// ---------------------------------------------------------------------------

/// Root cluster of an independent edge percolation on a tree, truncated at a
/// working depth. Level `i -> i+1` edges are kept with probability `p_i`.
#[derive(Debug)]
pub struct GwRealization {
    pub spec: TreeSpec,
    pub probabilities: Vec<f64>,
    pub depth: usize,
    /// Retained vertices per level, lexicographically sorted.
    levels: Vec<Vec<TreeWord>>,
}

impl GwRealization {
    pub fn contains(&self, w: &TreeWord) -> bool {
        self.levels
            .get(w.depth())
            .is_some_and(|lvl| lvl.binary_search(w).is_ok())
    }

    /// Subtree-meet oracle at the certificate depth: some retained vertex of
    /// the deepest level extends `w`. Nothing is materialized beyond the
    /// truncation depth.
    pub fn meets(&self, w: &TreeWord) -> bool {
        use std::cmp::Ordering;
        match w.depth().cmp(&self.depth) {
            Ordering::Greater => false,
            Ordering::Equal => self.contains(w),
            Ordering::Less => {
                let deepest = &self.levels[self.depth];
                let lo = deepest.partition_point(|m| m.0[..] < w.0[..]);
                deepest.get(lo).is_some_and(|m| w.is_prefix_of(m))
            }
        }
    }

    pub fn retained(&self, level: usize) -> usize {
        self.levels.get(level).map_or(0, Vec::len)
    }

    /// Empirical boundary certificate mass at a level: the fraction of the
    /// level retained, weighted by the uniform boundary measure.
    pub fn gamma_certificate(&self, level: usize) -> f64 {
        self.retained(level) as f64 / self.spec.level_size(level)
    }

    fn retention_prob(&self, level: usize) -> f64 {
        (0..level).map(|i| self.edge_prob(i)).product()
    }

    fn edge_prob(&self, level: usize) -> f64 {
        self.probabilities
            .get(level)
            .or(self.probabilities.last())
            .copied()
            .unwrap_or(1.0)
    }
}

/// Samples the root cluster of the Bernoulli percolation down to `depth`.
pub fn gw_percolate(
    spec: &TreeSpec,
    probabilities: &[f64],
    depth: usize,
    rng: &mut ChaCha8Rng,
) -> Result<GwRealization> {
    if probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Parameter("percolation probabilities must lie in [0,1]".into()));
    }
    if probabilities.is_empty() {
        return Err(Error::Parameter("need at least one percolation probability".into()));
    }
    let mut levels = vec![vec![TreeWord::root()]];
    for lvl in 0..depth {
        let p = probabilities
            .get(lvl)
            .or(probabilities.last())
            .copied()
            .unwrap();
        let mut next = Vec::new();
        for w in &levels[lvl] {
            for c in 0..spec.forward_degree(lvl) {
                if rng.random::<f64>() < p {
                    next.push(w.child(c));
                }
            }
        }
        levels.push(next);
    }
    Ok(GwRealization {
        spec: spec.clone(),
        probabilities: probabilities.to_vec(),
        depth,
        levels,
    })
}

impl GwRealization {
    /// Expected retention probability of a depth-`level` vertex.
    pub fn expected_retention(&self, level: usize) -> f64 {
        self.retention_prob(level)
    }
}

// ---------------------------------------------------------------------------
// Deterministic pruned trees
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PruneLevels {
    /// A strictly increasing finite list of depths.
    List(Vec<u64>),
    /// Prune at every depth (turns the degree-d tree into the degree-(d-1) one).
    Every,
}

/// The pruned tree: at every listed depth, the last child edge of each vertex
/// is removed together with its subtree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrunedTree {
    pub spec: TreeSpec,
    pub levels: PruneLevels,
}

impl PrunedTree {
    fn pruned_at(&self, depth: usize) -> bool {
        match &self.levels {
            PruneLevels::Every => true,
            PruneLevels::List(levels) => levels.binary_search(&(depth as u64)).is_ok(),
        }
    }

    pub fn contains(&self, w: &TreeWord) -> bool {
        w.0.iter().enumerate().all(|(depth, &letter)| {
            !self.pruned_at(depth) || letter != self.spec.forward_degree(depth) - 1
        })
    }

    /// Exact boundary certificate mass at the given depth.
    pub fn gamma_certificate(&self, depth: usize) -> f64 {
        (0..depth)
            .map(|d| {
                let fwd = self.spec.forward_degree(d) as f64;
                if self.pruned_at(d) {
                    (fwd - 1.0) / fwd
                } else {
                    1.0
                }
            })
            .product()
    }
}

/// Builds the pruned tree of the degree-`d` regular tree.
pub fn prune_tree(degree: u32, levels: PruneLevels) -> Result<PrunedTree> {
    let spec = TreeSpec::regular(degree)?;
    if let PruneLevels::List(list) = &levels {
        if list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter("prune levels must be strictly increasing".into()));
        }
        for &lvl in list {
            if spec.forward_degree(lvl as usize) < 2 {
                return Err(Error::Parameter(format!(
                    "cannot prune at depth {lvl}: only one forward edge"
                )));
            }
        }
    }
    Ok(PrunedTree { spec, levels })
}

// ---------------------------------------------------------------------------
// Breadth-first enumeration of the regular tree
// ---------------------------------------------------------------------------

/// BFS index (1-based over non-root vertices) -> word, on the regular tree.
pub fn bfs_word(degree: u32, index: u128) -> Result<TreeWord> {
    if index == 0 {
        return Ok(TreeWord::root());
    }
    let d = degree as u128;
    let branch = d - 1;
    let mut level = 1usize;
    let mut level_size = d;
    let mut offset: u128 = 0;
    while index > offset + level_size {
        offset += level_size;
        level_size = level_size
            .checked_mul(branch)
            .ok_or_else(|| Error::Parameter("bfs index out of range".into()))?;
        level += 1;
        if level > 200 {
            return Err(Error::Parameter("bfs index too deep".into()));
        }
    }
    let mut rank = index - offset - 1;
    let mut letters = vec![0u32; level];
    let mut unit = level_size / d; // (d-1)^(level-1)
    letters[0] = (rank / unit) as u32;
    rank %= unit;
    for slot in letters.iter_mut().skip(1) {
        unit /= branch;
        *slot = (rank / unit) as u32;
        rank %= unit;
    }
    Ok(TreeWord(letters))
}

/// Word -> BFS index on the regular tree (root is 0).
pub fn bfs_index(degree: u32, w: &TreeWord) -> Result<u128> {
    if w.is_root() {
        return Ok(0);
    }
    let d = degree as u128;
    let branch = d - 1;
    let level = w.depth();
    let mut offset: u128 = 0;
    let mut level_size = d;
    for _ in 1..level {
        offset += level_size;
        level_size = level_size
            .checked_mul(branch)
            .ok_or_else(|| Error::Parameter("word too deep to index".into()))?;
    }
    let mut rank: u128 = w.0[0] as u128;
    for &letter in &w.0[1..] {
        rank = rank * branch + letter as u128;
    }
    Ok(offset + rank + 1)
}

// ---------------------------------------------------------------------------
// Edge-breeding offspring law and its regime on regular trees
// ---------------------------------------------------------------------------

/// Survival regime of the edge-breeding walk on the degree-`d` regular tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreedingRegime {
    /// `lambda <= 1/d`: mean offspring at most 1, almost sure extinction.
    Subcritical,
    /// `1/d < lambda <= 1/(2 sqrt(d-1))`: global survival, local extinction.
    GlobalNotLocal,
    /// `lambda > 1/(2 sqrt(d-1))`: local survival becomes possible.
    LocalPossible,
}

pub fn edge_breeding_regime(lambda: f64, degree: u32) -> Result<BreedingRegime> {
    if lambda <= 0.0 {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    if degree < 2 {
        return Err(Error::Parameter("degree must be >= 2".into()));
    }
    let d = degree as f64;
    if lambda <= 1.0 / d {
        Ok(BreedingRegime::Subcritical)
    } else if lambda <= 1.0 / (2.0 * (d - 1.0).sqrt()) {
        Ok(BreedingRegime::GlobalNotLocal)
    } else {
        Ok(BreedingRegime::LocalPossible)
    }
}

// ---------------------------------------------------------------------------
// Extinction recursion for the edge-breeding walk
// ---------------------------------------------------------------------------

/// Solved hitting-probability sequence `a_n = P(some particle ever occupies a
/// fixed vertex at distance n)` for the edge-breeding walk on the regular tree.
#[derive(Debug, Clone)]
pub struct RecursionSolution {
    /// `a_0 = 1, a_1, ..` down to the working tail.
    pub a: Vec<f64>,
    pub a1: f64,
    /// Tail ratio `a_{n+1}/a_n`; geometric decay rate of the sequence.
    pub decay_ratio: f64,
    /// `1 - decay_ratio`.
    pub epsilon: f64,
    /// Largest residual of the three-term relation over interior indices.
    pub max_residual: f64,
    /// Characteristic roots (slow, fast) of the linearized recursion at 0.
    pub roots: (f64, f64),
}

fn recursion_roots(lambda: f64, d: f64) -> Result<(f64, f64)> {
    let disc = 1.0 / (lambda * lambda) - 4.0 * (d - 1.0);
    if disc < 0.0 {
        return Err(Error::Parameter(
            "lambda above 1/(2 sqrt(d-1)); the linearized recursion has no real roots".into(),
        ));
    }
    let s = disc.sqrt();
    let x_minus = (1.0 / lambda - s) / (2.0 * (d - 1.0));
    let x_plus = (1.0 / lambda + s) / (2.0 * (d - 1.0));
    Ok((x_minus, x_plus))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    TooSmall,
    TooBig,
    Pass,
}

/// Forward orbit of `a_{n+1} = a_n / (lambda (d-1)(1-a_n)) - a_{n-1}/(d-1)`.
/// Classifies the trial value of `a_1` by how the orbit degenerates: crossing
/// zero means the trial was too small; breaking monotonicity, leaving (0,1),
/// or settling on the fast characteristic ratio means it was too big.
fn shoot(lambda: f64, d: f64, a1: f64, n_steps: usize, ratio_threshold: f64) -> (Shot, Vec<f64>) {
    let mut seq = Vec::with_capacity(n_steps + 1);
    seq.push(1.0);
    seq.push(a1);
    let mut slow_streak = 0u32;
    for n in 1..n_steps {
        let prev = seq[n - 1];
        let cur = seq[n];
        if cur >= 1.0 {
            return (Shot::TooBig, seq);
        }
        let next = cur / (lambda * (d - 1.0) * (1.0 - cur)) - prev / (d - 1.0);
        if next <= 0.0 {
            return (Shot::TooSmall, seq);
        }
        if next >= cur {
            return (Shot::TooBig, seq);
        }
        if cur < 0.01 {
            if next / cur > ratio_threshold {
                slow_streak += 1;
                if slow_streak >= 4 {
                    return (Shot::TooBig, seq);
                }
            } else {
                slow_streak = 0;
            }
        }
        seq.push(next);
    }
    (Shot::Pass, seq)
}

/// Solves the extinction recursion by bisection on `a_1`.
///
/// Both characteristic roots of the linearized recursion lie in (0,1) in the
/// admissible lambda window, so plain blow-up bracketing under-determines
/// `a_1`; the orbit is additionally required to decay at the slow root's
/// rate, which pins the fast-mode amplitude to zero.
pub fn solve_extinction_recursion(
    lambda: f64,
    degree: u32,
    n_steps: usize,
    tol: f64,
) -> Result<RecursionSolution> {
    let d = degree as f64;
    if degree < 3 {
        return Err(Error::Parameter("recursion needs degree >= 3".into()));
    }
    if n_steps < 10 {
        return Err(Error::Parameter("need at least 10 recursion steps".into()));
    }
    if lambda <= 1.0 / d || lambda > 1.0 / (2.0 * (d - 1.0).sqrt()) {
        return Err(Error::Parameter(format!(
            "lambda must lie in (1/{degree}, 1/(2 sqrt({}))]",
            degree - 1
        )));
    }
    let (x_minus, x_plus) = recursion_roots(lambda, d)?;
    let separated = (x_plus - x_minus) > 1e-6;
    let ratio_threshold = if separated {
        0.5 * (x_minus + x_plus)
    } else {
        // Double-root boundary: fall back to a slack multiplicative margin.
        x_minus * (1.0 + 1e-6)
    };

    let mut lo = 1e-12;
    let mut hi = 1.0 - 1e-12;
    let (shot_lo, _) = shoot(lambda, d, lo, n_steps, ratio_threshold);
    let (shot_hi, _) = shoot(lambda, d, hi, n_steps, ratio_threshold);
    if shot_lo != Shot::TooSmall || shot_hi != Shot::TooBig {
        return Err(Error::Solver(format!(
            "bisection bracket failed: f({lo}) = {shot_lo:?}, f({hi}) = {shot_hi:?}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(lambda, d, mid, n_steps, ratio_threshold).0 {
            Shot::TooSmall => lo = mid,
            _ => hi = mid,
        }
    }
    let a1 = 0.5 * (lo + hi);
    let (_, seq) = shoot(lambda, d, a1, n_steps, ratio_threshold);

    // Keep the orbit only while it is strictly decreasing, positive and below
    // the tail-ratio threshold; round-off reintroduces the fast mode at the
    // very end.
    let mut good = seq.len();
    for n in 1..seq.len() {
        let bad = seq[n] <= 0.0
            || seq[n] >= seq[n - 1]
            || (seq[n - 1] < 0.01 && seq[n] / seq[n - 1] > ratio_threshold);
        if bad {
            good = n;
            break;
        }
    }
    let seq = &seq[..good];
    if seq.len() < 8 {
        return Err(Error::Solver("orbit degenerated too early".into()));
    }
    let tail = *seq.last().unwrap();
    if tail > tol {
        return Err(Error::Solver(format!(
            "orbit tail {tail:.3e} did not decay below tol {tol:.3e} within {} usable steps; \
             increase n_steps or loosen tol",
            seq.len()
        )));
    }

    let mut max_residual = 0.0_f64;
    for n in 1..seq.len() - 1 {
        let s = lambda * (seq[n - 1] + (d - 1.0) * seq[n + 1]);
        let residual = (seq[n] - s / (1.0 + s)).abs();
        max_residual = max_residual.max(residual);
    }
    // Tail ratio read off the central plateau; the last few entries carry the
    // reintroduced fast mode at round-off scale.
    let decay_ratio = {
        let lo = seq.len() / 4;
        let hi = (3 * seq.len() / 4).max(lo + 2).min(seq.len());
        let mut ratios: Vec<f64> = (lo..hi - 1).map(|n| seq[n + 1] / seq[n]).collect();
        ratios.sort_by(f64::total_cmp);
        ratios[ratios.len() / 2]
    };

    Ok(RecursionSolution {
        a: seq.to_vec(),
        a1,
        decay_ratio,
        epsilon: 1.0 - decay_ratio,
        max_residual,
        roots: (x_minus, x_plus),
    })
}

impl RecursionSolution {
    /// Certified geometric bound `a_n <= c * ratio^n` over the solved range.
    pub fn geometric_bound(&self) -> (f64, f64) {
        let ratio = self.decay_ratio.max(self.roots.0);
        let mut c = 0.0_f64;
        let mut power = 1.0;
        for &a in &self.a {
            c = c.max(a / power);
            power *= ratio;
        }
        (c, ratio)
    }
}

// ---------------------------------------------------------------------------
// Boundary-dense sets without survival
// ---------------------------------------------------------------------------

/// A boundary-dense set of isolated vertices: below the i-th vertex of the
/// BFS enumeration, one representative at depth `r_0 + i * step` (its
/// leftmost descendant). Every subtree contains a representative, so the
/// boundary certificate is full at every depth, while the certified sum of
/// hitting probabilities stays below the requested bound.
#[derive(Debug, Clone)]
pub struct SparseDeepSet {
    pub degree: u32,
    pub r0: u64,
    pub step: u64,
    /// Certified bound on `sum_i P(hit representative i)`.
    pub visit_bound: f64,
    pub bound_c: f64,
    pub bound_ratio: f64,
}

impl SparseDeepSet {
    pub fn contains(&self, w: &TreeWord) -> bool {
        let depth = w.depth() as u64;
        if depth < self.r0 + self.step {
            return false;
        }
        let over = depth - self.r0;
        if !over.is_multiple_of(self.step) {
            return false;
        }
        let i = (over / self.step) as u128;
        let Ok(anchor) = bfs_word(self.degree, i) else {
            return false;
        };
        if anchor.depth() as u64 > depth {
            return false;
        }
        anchor.is_prefix_of(w) && w.0[anchor.depth()..].iter().all(|&c| c == 0)
    }

    /// The i-th representative (i >= 1).
    pub fn representative(&self, i: u128) -> Result<TreeWord> {
        let anchor = bfs_word(self.degree, i)?;
        let depth = self.r0 + self.step * i as u64;
        if (anchor.depth() as u64) > depth {
            return Err(Error::Parameter(format!(
                "representative {i} would sit above its anchor"
            )));
        }
        let mut letters = anchor.0;
        letters.resize(depth as usize, 0);
        Ok(TreeWord(letters))
    }
}

/// Builds the boundary-dense null-survival set from a certified geometric
/// decay of single-vertex hitting probabilities. The representative depths
/// are chosen so the certified hitting-probability sum stays below `epsilon`.
pub fn construct_a_empty(
    degree: u32,
    recursion: &RecursionSolution,
    epsilon: f64,
) -> Result<SparseDeepSet> {
    if epsilon <= 0.0 || epsilon.is_nan() {
        return Err(Error::Parameter("epsilon must be positive".into()));
    }
    let (c, ratio) = recursion.geometric_bound();
    if ratio >= 1.0 || ratio.is_nan() || c <= 0.0 || c.is_nan() {
        return Err(Error::Solver(format!(
            "no usable geometric bound (c = {c}, ratio = {ratio})"
        )));
    }
    let step = 1u64;
    // sum_{i>=1} c * ratio^(r0 + i) = c * ratio^(r0+1) / (1 - ratio) <= epsilon
    let target = epsilon * (1.0 - ratio) / c;
    let mut r0 = ((target.ln() / ratio.ln()).ceil().max(1.0)) as u64;
    // Anchors must not sit deeper than their representatives; anchor depth
    // grows logarithmically, so a small floor on r0 suffices.
    r0 = r0.max(4);
    let mut tail = c * ratio.powi(r0 as i32 + 1) / (1.0 - ratio);
    while tail > epsilon {
        r0 += 1;
        tail *= ratio;
    }
    Ok(SparseDeepSet {
        degree,
        r0,
        step,
        visit_bound: tail,
        bound_c: c,
        bound_ratio: ratio,
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;

    #[test]
    fn forward_degrees_regular() {
        let t3 = TreeSpec::regular(3).unwrap();
        assert_eq!(t3.forward_degree(0), 3);
        assert_eq!(t3.forward_degree(5), 2);
        assert_eq!(t3.degree(0), 3);
        assert_eq!(t3.degree(5), 3);
        assert_eq!(t3.level_size(3), 12.0); // 3 * 2 * 2
    }

    #[test]
    fn srw_row_at_root_of_t3() {
        let t3 = TreeSpec::regular(3).unwrap();
        let kernel = t3.srw_kernel();
        let row = kernel.neighbors(&VertexId::tree_root()).unwrap();
        assert_eq!(row.len(), 3);
        for (_, p) in &row {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_letter_is_an_encoding_error() {
        let t3 = TreeSpec::regular(3).unwrap();
        let kernel = t3.srw_kernel();
        let bad = VertexId::tree(vec![0, 2]); // forward degree is 2 below the root
        assert!(kernel.neighbors(&bad).is_err());
    }

    #[test]
    fn boundary_measure_values() {
        let t3 = TreeSpec::regular(3).unwrap();
        assert_eq!(boundary_measure(&t3, &TreeWord::root()).unwrap(), 1.0);
        // Forward-binary tree: depth 3 has 8 vertices.
        let bin = TreeSpec::per_level(vec![], 2).unwrap();
        let w = TreeWord(vec![0, 1, 0]);
        assert!((boundary_measure(&bin, &w).unwrap() - 1.0 / 8.0).abs() < 1e-15);
        // The (d-1)-ary subtree of the degree-d tree: measure (d-1)^(-i).
        let sub = TreeSpec::per_level(vec![], 3).unwrap();
        let w = TreeWord(vec![0, 1, 2, 0]);
        assert!((boundary_measure(&sub, &w).unwrap() - 1.0 / 81.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_additivity_over_children() {
        let spec = TreeSpec::per_level(vec![3, 2, 4], 2).unwrap();
        for w in [TreeWord::root(), TreeWord(vec![1]), TreeWord(vec![2, 1])] {
            let own = boundary_measure(&spec, &w).unwrap();
            let children: f64 = (0..spec.forward_degree(w.depth()))
                .map(|c| boundary_measure(&spec, &w.child(c)).unwrap())
                .sum();
            assert!((own - children).abs() < 1e-14);
        }
    }

    #[test]
    fn percolation_extremes() {
        let t3 = TreeSpec::regular(3).unwrap();
        let mut rng = trial_rng(1, 0);
        let full = gw_percolate(&t3, &[1.0], 4, &mut rng).unwrap();
        for lvl in 0..=4 {
            assert_eq!(full.retained(lvl) as f64, t3.level_size(lvl));
        }
        let empty = gw_percolate(&t3, &[0.0], 4, &mut rng).unwrap();
        assert_eq!(empty.retained(0), 1);
        for lvl in 1..=4 {
            assert_eq!(empty.retained(lvl), 0);
        }
    }

    #[test]
    fn percolation_retention_law() {
        // Retention frequency of a fixed depth-i vertex is prod_{j<i} p_j.
        let spec = TreeSpec::per_level(vec![], 3).unwrap(); // d=4 minus one branch
        let p = 0.8;
        let depth = 5;
        let trials = 4000u64;
        let target = TreeWord(vec![0, 1, 2, 0, 1]);
        let mut hits = 0u64;
        for t in 0..trials {
            let mut rng = trial_rng(99, t);
            let real = gw_percolate(&spec, &[p], depth, &mut rng).unwrap();
            if real.contains(&target) {
                hits += 1;
            }
        }
        let expect = p.powi(depth as i32);
        let freq = hits as f64 / trials as f64;
        let sd = (expect * (1.0 - expect) / trials as f64).sqrt();
        assert!(
            (freq - expect).abs() < 3.0 * sd + 1e-9,
            "freq {freq} vs {expect} (sd {sd})"
        );
    }

    #[test]
    fn pruned_tree_certificate_and_membership() {
        // No levels: full tree, certificate 1.
        let none = prune_tree(4, PruneLevels::List(vec![])).unwrap();
        assert_eq!(none.gamma_certificate(10), 1.0);
        assert!(none.contains(&TreeWord(vec![3, 2, 2])));

        let pruned = prune_tree(4, PruneLevels::List(vec![0, 2])).unwrap();
        // Last child (index fwd-1) removed at listed levels.
        assert!(!pruned.contains(&TreeWord(vec![3])));
        assert!(pruned.contains(&TreeWord(vec![2])));
        assert!(!pruned.contains(&TreeWord(vec![0, 0, 2])));
        assert!(pruned.contains(&TreeWord(vec![0, 2, 1])));
        // Certificate: (3/4) * (2/3) = 1/2 after both levels.
        assert!((pruned.gamma_certificate(3) - 0.5).abs() < 1e-15);

        // Pruning every level of T_d gives T_{d-1}: certificate tends to 0 and
        // is bounded by ((d-1)/d)^i.
        let every = prune_tree(4, PruneLevels::Every).unwrap();
        for depth in 1..=10 {
            let cert = every.gamma_certificate(depth);
            assert!(cert <= (3.0_f64 / 4.0).powi(depth as i32) + 1e-15);
        }
    }

    #[test]
    fn bfs_enumeration_roundtrip() {
        for d in [3u32, 4, 5] {
            for i in 0..200u128 {
                let w = bfs_word(d, i).unwrap();
                assert_eq!(bfs_index(d, &w).unwrap(), i, "d={d} i={i}");
            }
        }
        // First few of T_3: root, then 0,1,2, then 0.0, 0.1, 1.0, 1.1, 2.0, 2.1
        assert_eq!(bfs_word(3, 1).unwrap().0, vec![0]);
        assert_eq!(bfs_word(3, 3).unwrap().0, vec![2]);
        assert_eq!(bfs_word(3, 4).unwrap().0, vec![0, 0]);
        assert_eq!(bfs_word(3, 9).unwrap().0, vec![2, 1]);
    }

    #[test]
    fn regime_thresholds() {
        assert_eq!(
            edge_breeding_regime(0.3, 3).unwrap(),
            BreedingRegime::Subcritical
        );
        assert_eq!(
            edge_breeding_regime(0.34, 3).unwrap(),
            BreedingRegime::GlobalNotLocal
        );
        assert_eq!(
            edge_breeding_regime(0.36, 3).unwrap(),
            BreedingRegime::LocalPossible
        );
        assert_eq!(
            edge_breeding_regime(0.28, 4).unwrap(),
            BreedingRegime::GlobalNotLocal
        );
    }

    /// Independent oracle: monotone fixed-point iteration for the same
    /// hitting-probability system on a truncated grid; converges upward to
    /// the minimal solution.
    fn fixed_point_oracle(lambda: f64, d: f64, grid: usize, sweeps: usize) -> Vec<f64> {
        let mut a = vec![0.0; grid + 1];
        a[0] = 1.0;
        for _ in 0..sweeps {
            let mut next = a.clone();
            for n in 1..grid {
                let s = lambda * (a[n - 1] + (d - 1.0) * a[n + 1]);
                next[n] = s / (1.0 + s);
            }
            a = next;
        }
        a
    }

    #[test]
    fn recursion_solution_matches_fixed_point_oracle() {
        let sol = solve_extinction_recursion(0.34, 3, 80, 1e-10).unwrap();
        assert_eq!(sol.a[0], 1.0);
        // Strictly decreasing, in (0,1) beyond the head.
        for n in 1..sol.a.len() {
            assert!(sol.a[n] < sol.a[n - 1]);
            assert!(sol.a[n] > 0.0 && sol.a[n] < 1.0);
        }
        assert!(sol.max_residual < 1e-10, "residual {}", sol.max_residual);
        // Tail decays at the slow characteristic root.
        assert!((sol.decay_ratio - sol.roots.0).abs() < 0.02);

        let oracle = fixed_point_oracle(0.34, 3.0, 400, 4000);
        for (n, (shot, fixed)) in sol.a.iter().zip(&oracle).enumerate().take(11).skip(1) {
            assert!(
                (shot - fixed).abs() < 1e-8,
                "n={n}: shooting {shot} vs fixed point {fixed}"
            );
        }
    }

    #[test]
    fn recursion_rejects_bad_lambda() {
        assert!(solve_extinction_recursion(0.30, 3, 60, 1e-8).is_err());
        assert!(solve_extinction_recursion(0.40, 3, 60, 1e-8).is_err());
    }

    #[test]
    fn sparse_set_membership_and_density() {
        let sol = solve_extinction_recursion(0.34, 3, 80, 1e-10).unwrap();
        let aset = construct_a_empty(3, &sol, 0.05).unwrap();
        assert!(aset.visit_bound <= 0.05);
        // Representatives are members; everything else nearby is not.
        for i in 1..40u128 {
            let rep = aset.representative(i).unwrap();
            assert!(aset.contains(&rep), "rep {i} = {rep}");
            let mut off = rep.clone();
            *off.0.last_mut().unwrap() = 1;
            assert!(!aset.contains(&off));
        }
        // Boundary certificate is full at every tested depth.
        let spec = TreeSpec::regular(3).unwrap();
        let set = TreeSet::Sparse(aset);
        for depth in [3usize, 6, 9] {
            let cert = boundary_certificate(&spec, &set, depth).unwrap();
            assert_eq!(cert.len() as f64, spec.level_size(depth));
        }
    }

    #[test]
    fn hull_is_idempotent_and_boundary_preserving() {
        let spec = TreeSpec::regular(3).unwrap();
        let ray = TreeSet::Ray {
            head: TreeWord(vec![1, 0, 1]),
        };
        let finite = TreeSet::finite(vec![
            TreeWord(vec![0]),
            TreeWord(vec![2, 1]),
            TreeWord(vec![2, 1, 0]),
        ]);
        let sub = TreeSet::Subtree {
            root: TreeWord(vec![1]),
        };
        for set in [ray, finite, sub] {
            let hull = connected_hull(set.clone());
            let hull2 = connected_hull(hull.clone());
            for depth in [2usize, 5, 8] {
                let c0 = boundary_certificate(&spec, &set, depth).unwrap();
                let c1 = boundary_certificate(&spec, &hull, depth).unwrap();
                let c2 = boundary_certificate(&spec, &hull2, depth).unwrap();
                assert_eq!(c0, c1);
                assert_eq!(c1, c2);
            }
            // Hull is prefix-closed (connected through the root).
            for depth in [2usize, 5] {
                for w in spec.level_words(depth).unwrap() {
                    if hull.contains(&w) {
                        assert!(hull.contains(&w.parent().unwrap()));
                    }
                }
            }
        }
    }

    #[test]
    fn hull_of_a_ray_is_the_ray() {
        let head = TreeWord(vec![1, 0, 1]);
        let ray = TreeSet::Ray { head: head.clone() };
        let hull = connected_hull(ray.clone());
        let spec = TreeSpec::regular(3).unwrap();
        for depth in 0..=6 {
            for w in spec.level_words(depth).unwrap() {
                assert_eq!(ray.contains(&w), hull.contains(&w), "{w}");
            }
        }
    }

    #[test]
    fn hull_of_finite_set_is_finite_prefix_tree() {
        let finite = TreeSet::finite(vec![TreeWord(vec![2, 1]), TreeWord(vec![0])]);
        let hull = connected_hull(finite);
        assert!(hull.contains(&TreeWord::root()));
        assert!(hull.contains(&TreeWord(vec![2])));
        assert!(hull.contains(&TreeWord(vec![2, 1])));
        assert!(!hull.contains(&TreeWord(vec![2, 0])));
        assert!(!hull.contains(&TreeWord(vec![2, 1, 0])));
        // Empty boundary certificate, same as the set's.
        let spec = TreeSpec::regular(3).unwrap();
        assert!(boundary_certificate(&spec, &hull, 4).unwrap().is_empty());
    }
}
