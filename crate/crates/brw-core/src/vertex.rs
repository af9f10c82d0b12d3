//! Canonical vertex encodings for the lazily generated graph families.
//!
//! Vertices are never materialized globally; a `VertexId` is a self-contained
//! canonical address. Two ids are equal iff they denote the same vertex.

use std::fmt;

use crate::error::{Error, Result};

/// A vertex of one of the supported infinite graph families.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexId {
    /// Rooted tree vertex: the sequence of child indices from the root.
    Tree(TreeWord),
    /// Cartesian product vertex: one coordinate per factor.
    Product(Box<VertexId>, Box<VertexId>),
    /// Free product vertex: reduced alternating word over the two factors.
    Group(GroupWord),
}

impl VertexId {
    pub fn tree_root() -> Self {
        VertexId::Tree(TreeWord(Vec::new()))
    }

    pub fn tree(letters: Vec<u32>) -> Self {
        VertexId::Tree(TreeWord(letters))
    }

    pub fn product(a: VertexId, b: VertexId) -> Self {
        VertexId::Product(Box::new(a), Box::new(b))
    }

    pub fn group_identity() -> Self {
        VertexId::Group(GroupWord(Vec::new()))
    }

    pub fn as_tree(&self) -> Result<&TreeWord> {
        match self {
            VertexId::Tree(w) => Ok(w),
            other => Err(Error::Encoding(format!("expected tree word, got {other}"))),
        }
    }

    pub fn as_product(&self) -> Result<(&VertexId, &VertexId)> {
        match self {
            VertexId::Product(a, b) => Ok((a, b)),
            other => Err(Error::Encoding(format!(
                "expected product pair, got {other}"
            ))),
        }
    }

    pub fn as_group(&self) -> Result<&GroupWord> {
        match self {
            VertexId::Group(w) => Ok(w),
            other => Err(Error::Encoding(format!("expected group word, got {other}"))),
        }
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexId::Tree(w) => write!(f, "{w}"),
            VertexId::Product(a, b) => write!(f, "({a}|{b})"),
            VertexId::Group(w) => write!(f, "{w}"),
        }
    }
}

/// Path from the root of a tree, one child index per level.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TreeWord(pub Vec<u32>);

impl TreeWord {
    pub fn root() -> Self {
        TreeWord(Vec::new())
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parent(&self) -> Option<TreeWord> {
        if self.0.is_empty() {
            None
        } else {
            Some(TreeWord(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn child(&self, index: u32) -> TreeWord {
        let mut letters = Vec::with_capacity(self.0.len() + 1);
        letters.extend_from_slice(&self.0);
        letters.push(index);
        TreeWord(letters)
    }

    /// True when `self` lies on the path from the root through `other`
    /// (equivalently: `other` is in the subtree branching from `self`).
    pub fn is_prefix_of(&self, other: &TreeWord) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// Parses "o" (the root) or a dotted child path such as "0.2.1".
    pub fn parse(s: &str) -> Result<TreeWord> {
        let s = s.trim();
        if s.is_empty() || s == "o" || s == "root" {
            return Ok(TreeWord::root());
        }
        let letters = s
            .split('.')
            .map(|part| {
                part.parse::<u32>()
                    .map_err(|_| Error::Encoding(format!("bad tree word component {part:?}")))
            })
            .collect::<Result<Vec<u32>>>()?;
        Ok(TreeWord(letters))
    }
}

impl fmt::Display for TreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "o");
        }
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

/// Which factor of a two-factor product a move or letter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FactorIndex {
    One,
    Two,
}

impl FactorIndex {
    pub fn other(self) -> FactorIndex {
        match self {
            FactorIndex::One => FactorIndex::Two,
            FactorIndex::Two => FactorIndex::One,
        }
    }

    pub fn as_usize(self) -> usize {
        match self {
            FactorIndex::One => 0,
            FactorIndex::Two => 1,
        }
    }
}

impl fmt::Display for FactorIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorIndex::One => write!(f, "1"),
            FactorIndex::Two => write!(f, "2"),
        }
    }
}

/// A non-identity element of one factor group.
///
/// Cyclic elements are exponents `1..k` of the distinguished generator.
/// Free-group elements are reduced words over signed generator indices
/// (`+j` for the j-th generator, `-j` for its inverse, 1-based).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FactorElem {
    Cyclic(u32),
    Free(Vec<i32>),
}

/// One syllable of a reduced free-product word.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Syllable {
    pub factor: FactorIndex,
    pub elem: FactorElem,
}

/// Reduced word of a free product: syllables alternate factors and none is
/// a factor identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupWord(pub Vec<Syllable>);

impl GroupWord {
    pub fn identity() -> Self {
        GroupWord(Vec::new())
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn syllable_count(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        let mut parts = Vec::with_capacity(self.0.len());
        for syl in &self.0 {
            match &syl.elem {
                FactorElem::Cyclic(exp) => parts.push(format!("g{}^{}", syl.factor, exp)),
                FactorElem::Free(word) => {
                    let letters: Vec<String> = word
                        .iter()
                        .map(|&l| {
                            if l > 0 {
                                format!("x{}.{}", syl.factor, l)
                            } else {
                                format!("x{}.{}'", syl.factor, -l)
                            }
                        })
                        .collect();
                    parts.push(letters.join(""));
                }
            }
        }
        write!(f, "{}", parts.join("*"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_word_roundtrip() {
        assert_eq!(TreeWord::parse("o").unwrap(), TreeWord::root());
        let w = TreeWord::parse("0.2.1").unwrap();
        assert_eq!(w.0, vec![0, 2, 1]);
        assert_eq!(TreeWord::parse(&w.to_string()).unwrap(), w);
    }

    #[test]
    fn prefix_relation() {
        let root = TreeWord::root();
        let w = TreeWord(vec![1, 0]);
        assert!(root.is_prefix_of(&w));
        assert!(w.is_prefix_of(&w));
        assert!(!w.is_prefix_of(&root));
        assert!(!TreeWord(vec![2]).is_prefix_of(&w));
    }

    #[test]
    fn canonical_equality() {
        let a = VertexId::product(VertexId::tree_root(), VertexId::tree(vec![1]));
        let b = VertexId::product(VertexId::tree_root(), VertexId::tree(vec![1]));
        assert_eq!(a, b);
        assert_ne!(a, VertexId::product(VertexId::tree(vec![1]), VertexId::tree_root()));
    }
}
