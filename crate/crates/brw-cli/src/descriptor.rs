//! Inline descriptor strings for graph families, subgraphs and offspring
//! laws. These are the canonical textual schema; the same strings appear in
//! experiment config files and round-trip through `Display`/`FromStr`.
//!
//! Families:
//!   tree:d=3
//!   tree:levels=3,2,2;tail=2
//!   product:d1=3,d2=100            (weights from the product SRW)
//!   product:d1=3,d2=100,alpha1=0.25
//!   freeprod:f1=cyclic4,f2=free2,alpha=0.3
//!
//! Subgraphs:
//!   full | fiber:1 | fiber:2 | factor:1 | factor:2 | subtree:0.1
//!   pruned:every | pruned:levels=1,3,7 | gw:p=0.8,depth=10,seed=7
//!
//! Laws:
//!   mean:2.0 | point:2 | edge:lambda=0.34,d=3 | pmf:0=0.2,2=0.8

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use brw_core::kernel::{FullGraph, Subgraph, TransitionKernel};
use brw_core::law::OffspringLaw;
use brw_core::product::{FactorGroup, FreeProductSpec, ProductSpec};
use brw_core::tree::{gw_percolate, prune_tree, PruneLevels, TreeSet, TreeSpec, TreeSubgraph};
use brw_core::vertex::{FactorIndex, TreeWord, VertexId};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyDescriptor {
    Tree { spec: TreeSpec, text: String },
    Product { spec: ProductSpec, text: String },
    FreeProduct { spec: FreeProductSpec, text: String },
}

impl FamilyDescriptor {
    pub fn base(&self) -> VertexId {
        match self {
            FamilyDescriptor::Tree { .. } => VertexId::tree_root(),
            FamilyDescriptor::Product { spec, .. } => spec.base(),
            FamilyDescriptor::FreeProduct { spec, .. } => spec.identity(),
        }
    }

    pub fn kernel(&self) -> Box<dyn TransitionKernel> {
        match self {
            FamilyDescriptor::Tree { spec, .. } => Box::new(spec.srw_kernel()),
            FamilyDescriptor::Product { spec, .. } => Box::new(spec.kernel()),
            FamilyDescriptor::FreeProduct { spec, .. } => Box::new(spec.kernel()),
        }
    }
}

impl fmt::Display for FamilyDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyDescriptor::Tree { text, .. }
            | FamilyDescriptor::Product { text, .. }
            | FamilyDescriptor::FreeProduct { text, .. } => write!(f, "{text}"),
        }
    }
}

fn parse_pairs(body: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    let mut last_key: Option<String> = None;
    for part in body.split([',', ';']) {
        if part.is_empty() {
            continue;
        }
        match part.split_once('=') {
            Some((key, value)) => {
                let key = key.trim().to_string();
                map.insert(key.clone(), value.trim().to_string());
                last_key = Some(key);
            }
            // A fragment without '=' continues the previous key's list value
            // (e.g. levels=3,2,2).
            None => match &last_key {
                Some(key) => {
                    let entry = map.get_mut(key).expect("last_key tracks map");
                    entry.push(',');
                    entry.push_str(part.trim());
                }
                None => {
                    return Err(CliError::config(format!(
                        "expected key=value, got {part:?}"
                    )))
                }
            },
        }
    }
    Ok(map)
}

fn get_f64(map: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>, CliError> {
    map.get(key)
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| CliError::config(format!("bad number for {key}: {v:?}")))
        })
        .transpose()
}

fn get_u32(map: &BTreeMap<String, String>, key: &str) -> Result<Option<u32>, CliError> {
    map.get(key)
        .map(|v| {
            v.parse::<u32>()
                .map_err(|_| CliError::config(format!("bad integer for {key}: {v:?}")))
        })
        .transpose()
}

fn parse_factor_group(text: &str) -> Result<FactorGroup, CliError> {
    if let Some(rest) = text.strip_prefix("cyclic") {
        let k: u32 = rest
            .parse()
            .map_err(|_| CliError::config(format!("bad cyclic order in {text:?}")))?;
        return Ok(FactorGroup::Cyclic(k));
    }
    if let Some(rest) = text.strip_prefix("free") {
        let r: u32 = rest
            .parse()
            .map_err(|_| CliError::config(format!("bad free rank in {text:?}")))?;
        return Ok(FactorGroup::Free(r));
    }
    Err(CliError::config(format!(
        "unknown factor group {text:?} (cyclicK or freeR)"
    )))
}

pub fn factor_group_text(group: FactorGroup) -> String {
    match group {
        FactorGroup::Cyclic(k) => format!("cyclic{k}"),
        FactorGroup::Free(r) => format!("free{r}"),
    }
}

impl FromStr for FamilyDescriptor {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (kind, body) = s.split_once(':').unwrap_or((s, ""));
        let map = parse_pairs(body)?;
        match kind {
            "tree" => {
                let spec = if let Some(levels) = map.get("levels") {
                    let forward: Vec<u32> = levels
                        .split(',')
                        .map(|x| {
                            x.trim()
                                .parse()
                                .map_err(|_| CliError::config(format!("bad level {x:?}")))
                        })
                        .collect::<Result<_, _>>()?;
                    let tail = get_u32(&map, "tail")?
                        .or(forward.last().copied())
                        .ok_or_else(|| CliError::config("tree:levels needs entries".into()))?;
                    TreeSpec::per_level(forward, tail)?
                } else {
                    let d = get_u32(&map, "d")?
                        .ok_or_else(|| CliError::config("tree family needs d=<degree>".into()))?;
                    TreeSpec::regular(d)?
                };
                Ok(FamilyDescriptor::Tree {
                    spec,
                    text: s.to_string(),
                })
            }
            "product" => {
                let d1 = get_u32(&map, "d1")?
                    .ok_or_else(|| CliError::config("product family needs d1".into()))?;
                let d2 = get_u32(&map, "d2")?
                    .ok_or_else(|| CliError::config("product family needs d2".into()))?;
                let spec = match get_f64(&map, "alpha1")? {
                    Some(alpha1) => ProductSpec::new(d1, d2, alpha1)?,
                    None => ProductSpec::srw(d1, d2)?,
                };
                Ok(FamilyDescriptor::Product {
                    spec,
                    text: s.to_string(),
                })
            }
            "freeprod" => {
                let f1 = parse_factor_group(
                    map.get("f1")
                        .ok_or_else(|| CliError::config("freeprod needs f1".into()))?,
                )?;
                let f2 = parse_factor_group(
                    map.get("f2")
                        .ok_or_else(|| CliError::config("freeprod needs f2".into()))?,
                )?;
                let alpha = get_f64(&map, "alpha")?
                    .ok_or_else(|| CliError::config("freeprod needs alpha".into()))?;
                Ok(FamilyDescriptor::FreeProduct {
                    spec: FreeProductSpec::new(f1, f2, alpha)?,
                    text: s.to_string(),
                })
            }
            other => Err(CliError::config(format!(
                "unknown family {other:?} (tree | product | freeprod)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubgraphDescriptor {
    Full,
    Fiber(FactorIndex),
    FactorCopy(FactorIndex),
    Subtree(TreeWord),
    Pruned(PruneLevels),
    Gw { p: f64, depth: usize, seed: u64 },
}

impl fmt::Display for SubgraphDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubgraphDescriptor::Full => write!(f, "full"),
            SubgraphDescriptor::Fiber(i) => write!(f, "fiber:{i}"),
            SubgraphDescriptor::FactorCopy(i) => write!(f, "factor:{i}"),
            SubgraphDescriptor::Subtree(w) => write!(f, "subtree:{w}"),
            SubgraphDescriptor::Pruned(PruneLevels::Every) => write!(f, "pruned:every"),
            SubgraphDescriptor::Pruned(PruneLevels::List(levels)) => {
                let parts: Vec<String> = levels.iter().map(|l| l.to_string()).collect();
                write!(f, "pruned:levels={}", parts.join(","))
            }
            SubgraphDescriptor::Gw { p, depth, seed } => {
                write!(f, "gw:p={p},depth={depth},seed={seed}")
            }
        }
    }
}

fn parse_factor_index(text: &str) -> Result<FactorIndex, CliError> {
    match text {
        "1" => Ok(FactorIndex::One),
        "2" => Ok(FactorIndex::Two),
        other => Err(CliError::config(format!("factor index must be 1 or 2, got {other:?}"))),
    }
}

impl FromStr for SubgraphDescriptor {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (kind, body) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "full" => Ok(SubgraphDescriptor::Full),
            "fiber" => Ok(SubgraphDescriptor::Fiber(parse_factor_index(body)?)),
            "factor" => Ok(SubgraphDescriptor::FactorCopy(parse_factor_index(body)?)),
            "subtree" => Ok(SubgraphDescriptor::Subtree(TreeWord::parse(body)?)),
            "pruned" => {
                if body == "every" {
                    return Ok(SubgraphDescriptor::Pruned(PruneLevels::Every));
                }
                let map = parse_pairs(body)?;
                let levels = map
                    .get("levels")
                    .ok_or_else(|| CliError::config("pruned needs levels=..|every".into()))?;
                let list: Vec<u64> = levels
                    .split(',')
                    .map(|x| {
                        x.trim()
                            .parse()
                            .map_err(|_| CliError::config(format!("bad level {x:?}")))
                    })
                    .collect::<Result<_, _>>()?;
                Ok(SubgraphDescriptor::Pruned(PruneLevels::List(list)))
            }
            "gw" => {
                let map = parse_pairs(body)?;
                let p = get_f64(&map, "p")?
                    .ok_or_else(|| CliError::config("gw subgraph needs p".into()))?;
                let depth = get_u32(&map, "depth")?
                    .ok_or_else(|| CliError::config("gw subgraph needs depth".into()))?
                    as usize;
                let seed = map
                    .get("seed")
                    .map(|v| {
                        v.parse::<u64>()
                            .map_err(|_| CliError::config(format!("bad seed {v:?}")))
                    })
                    .transpose()?
                    .unwrap_or(0);
                Ok(SubgraphDescriptor::Gw { p, depth, seed })
            }
            other => Err(CliError::config(format!("unknown subgraph {other:?}"))),
        }
    }
}

impl SubgraphDescriptor {
    /// Materializes the subgraph for a family. Errors on mismatched kinds.
    pub fn build(&self, family: &FamilyDescriptor) -> Result<Box<dyn Subgraph>, CliError> {
        match (self, family) {
            (SubgraphDescriptor::Full, _) => Ok(Box::new(FullGraph::new(family.base()))),
            (SubgraphDescriptor::Fiber(i), FamilyDescriptor::Product { spec, .. }) => {
                Ok(Box::new(spec.fiber(*i)))
            }
            (SubgraphDescriptor::FactorCopy(i), FamilyDescriptor::FreeProduct { spec, .. }) => {
                Ok(Box::new(spec.factor_copy(*i)))
            }
            (SubgraphDescriptor::Subtree(root), FamilyDescriptor::Tree { spec, .. }) => {
                spec.validate_word(root)?;
                Ok(Box::new(TreeSubgraph::new(
                    TreeSet::Subtree { root: root.clone() },
                    root.clone(),
                )))
            }
            (SubgraphDescriptor::Pruned(levels), FamilyDescriptor::Tree { spec, .. }) => {
                let degree = spec.degree(1);
                let pruned = prune_tree(degree, levels.clone())?;
                Ok(Box::new(TreeSubgraph::new(
                    TreeSet::Pruned(pruned),
                    TreeWord::root(),
                )))
            }
            (SubgraphDescriptor::Gw { p, depth, seed }, FamilyDescriptor::Tree { spec, .. }) => {
                let mut rng = brw_core::rng::trial_rng(*seed, 0);
                let cluster = gw_percolate(spec, &[*p], *depth, &mut rng)?;
                Ok(Box::new(TreeSubgraph::new(
                    TreeSet::Cluster(Arc::new(cluster)),
                    TreeWord::root(),
                )))
            }
            (sub, fam) => Err(CliError::config(format!(
                "subgraph {sub} does not apply to family {fam}"
            ))),
        }
    }

    /// The substochastic distance quotient of the restricted kernel, when the
    /// (family, subgraph) pair has one.
    pub fn quotient_kernel(
        &self,
        family: &FamilyDescriptor,
    ) -> Option<Box<dyn TransitionKernel>> {
        match (self, family) {
            (SubgraphDescriptor::Full, FamilyDescriptor::Tree { spec, .. }) => {
                Some(Box::new(spec.radial_kernel()))
            }
            (SubgraphDescriptor::Fiber(i), FamilyDescriptor::Product { spec, .. }) => {
                Some(Box::new(spec.fiber_radial_restricted(*i)))
            }
            _ => None,
        }
    }

    /// Start vertex for quotient-kernel runs (quotients live on tree words).
    pub fn quotient_base(&self) -> VertexId {
        VertexId::tree_root()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LawDescriptor {
    Mean(f64),
    Point(u64),
    EdgeBreeding { lambda: f64, degree: u32 },
    Pmf(Vec<(u64, f64)>),
}

impl fmt::Display for LawDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawDescriptor::Mean(m) => write!(f, "mean:{m}"),
            LawDescriptor::Point(k) => write!(f, "point:{k}"),
            LawDescriptor::EdgeBreeding { lambda, degree } => {
                write!(f, "edge:lambda={lambda},d={degree}")
            }
            LawDescriptor::Pmf(pmf) => {
                let parts: Vec<String> = pmf.iter().map(|(k, p)| format!("{k}={p}")).collect();
                write!(f, "pmf:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for LawDescriptor {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| CliError::config(format!("law descriptor {s:?} needs kind:args")))?;
        match kind {
            "mean" => Ok(LawDescriptor::Mean(body.parse().map_err(|_| {
                CliError::config(format!("bad mean {body:?}"))
            })?)),
            "point" => Ok(LawDescriptor::Point(body.parse().map_err(|_| {
                CliError::config(format!("bad point mass {body:?}"))
            })?)),
            "edge" => {
                let map = parse_pairs(body)?;
                let lambda = get_f64(&map, "lambda")?
                    .ok_or_else(|| CliError::config("edge law needs lambda".into()))?;
                let degree = get_u32(&map, "d")?
                    .ok_or_else(|| CliError::config("edge law needs d".into()))?;
                Ok(LawDescriptor::EdgeBreeding { lambda, degree })
            }
            "pmf" => {
                let map = parse_pairs(body)?;
                let mut pmf = Vec::new();
                for (k, v) in map {
                    let count: u64 = k
                        .parse()
                        .map_err(|_| CliError::config(format!("bad pmf count {k:?}")))?;
                    let prob: f64 = v
                        .parse()
                        .map_err(|_| CliError::config(format!("bad pmf prob {v:?}")))?;
                    pmf.push((count, prob));
                }
                Ok(LawDescriptor::Pmf(pmf))
            }
            other => Err(CliError::config(format!("unknown law kind {other:?}"))),
        }
    }
}

impl LawDescriptor {
    pub fn build(&self) -> Result<OffspringLaw, CliError> {
        Ok(match self {
            LawDescriptor::Mean(m) => OffspringLaw::from_mean(*m)?,
            LawDescriptor::Point(k) => OffspringLaw::point_mass(*k),
            LawDescriptor::EdgeBreeding { lambda, degree } => {
                OffspringLaw::edge_breeding(*lambda, *degree)?
            }
            LawDescriptor::Pmf(pmf) => OffspringLaw::explicit(pmf.clone())?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_roundtrip() {
        for text in [
            "tree:d=3",
            "tree:levels=3,2,2;tail=2",
            "product:d1=3,d2=100",
            "product:alpha1=0.25,d1=3,d2=100",
            "freeprod:alpha=0.3,f1=cyclic4,f2=free2",
        ] {
            let parsed: FamilyDescriptor = text.parse().unwrap();
            assert_eq!(parsed.to_string(), text);
            let reparsed: FamilyDescriptor = parsed.to_string().parse().unwrap();
            assert_eq!(parsed, reparsed);
        }
        assert!("ring:d=4".parse::<FamilyDescriptor>().is_err());
    }

    #[test]
    fn subgraph_roundtrip() {
        for text in [
            "full",
            "fiber:2",
            "factor:1",
            "subtree:0.1",
            "pruned:every",
            "pruned:levels=1,3,7",
            "gw:p=0.8,depth=10,seed=7",
        ] {
            let parsed: SubgraphDescriptor = text.parse().unwrap();
            assert_eq!(parsed.to_string(), text, "{text}");
        }
    }

    #[test]
    fn law_roundtrip() {
        for text in ["mean:2", "point:2", "edge:lambda=0.34,d=3", "pmf:0=0.2,2=0.8"] {
            let parsed: LawDescriptor = text.parse().unwrap();
            let reparsed: LawDescriptor = parsed.to_string().parse().unwrap();
            assert_eq!(parsed, reparsed, "{text}");
            parsed.build().unwrap();
        }
    }

    #[test]
    fn mismatched_subgraph_is_a_config_error() {
        let family: FamilyDescriptor = "tree:d=3".parse().unwrap();
        let sub: SubgraphDescriptor = "fiber:2".parse().unwrap();
        assert!(sub.build(&family).is_err());
    }
}
