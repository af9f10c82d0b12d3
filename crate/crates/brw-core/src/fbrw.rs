//! Finite-type projection checking for induced walks.
//!
//! A projection map `g` sends vertices to finitely many type labels; the
//! induced walk projects onto a finite-type branching process exactly when
//! the quotient row sums `sum_{w: g(w)=y} p_U(x, w)` depend on `x` only
//! through `g(x)`. That condition is decidable on a ball, so results are
//! always qualified by the radius they were checked to.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{explore_ball, TransitionKernel};
use crate::spectral::{zeta_estimate_kernel, SpectralSummary, ZetaEstimate};
use crate::vertex::VertexId;

/// A vertex-to-type labeling.
#[derive(Debug, Clone)]
pub enum Projection {
    /// Everything gets one label.
    Single,
    /// Tree/product vertices labeled by depth mod `k` (graph distance for
    /// tree words, sum of coordinate depths for products).
    DepthMod(u32),
    /// Explicit label table over an explored ball.
    Table {
        labels: BTreeMap<VertexId, u32>,
        type_count: u32,
    },
}

impl Projection {
    pub fn type_count(&self) -> u32 {
        match self {
            Projection::Single => 1,
            Projection::DepthMod(k) => *k,
            Projection::Table { type_count, .. } => *type_count,
        }
    }

    pub fn label(&self, v: &VertexId) -> Option<u32> {
        match self {
            Projection::Single => Some(0),
            Projection::DepthMod(k) => Some((graph_depth(v) % *k as u64) as u32),
            Projection::Table { labels, .. } => labels.get(v).copied(),
        }
    }
}

fn graph_depth(v: &VertexId) -> u64 {
    match v {
        VertexId::Tree(w) => w.depth() as u64,
        VertexId::Product(a, b) => graph_depth(a) + graph_depth(b),
        VertexId::Group(w) => w.0.len() as u64,
    }
}

/// Substochastic quotient matrix on type labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientMatrix {
    pub type_count: u32,
    /// `rows[t][s]` = mass sent from type `t` to type `s`.
    pub rows: Vec<Vec<f64>>,
}

impl QuotientMatrix {
    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().sum()).collect()
    }
}

/// A pair of same-type vertices with different quotient rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectionWitness {
    pub vertex_a: String,
    pub vertex_b: String,
    pub label: u32,
    pub target_type: u32,
    pub mass_a: f64,
    pub mass_b: f64,
}

/// Outcome of a projection check on a ball.
#[derive(Debug, Clone)]
pub enum ProjectionCheck {
    /// Quotient rows constant per type over the ball.
    Passed {
        quotient: QuotientMatrix,
        radius: usize,
    },
    /// A same-type pair disagrees.
    Failed { witness: ProjectionWitness },
    /// Some declared label never appeared in the ball; not decidable here.
    Inconclusive {
        missing_types: Vec<u32>,
        radius: usize,
    },
}

const ROW_TOLERANCE: f64 = 1e-12;

/// Checks projection condition on the ball of the given radius around the
/// base vertex of the restricted kernel.
pub fn check_projection(
    kernel_u: &dyn TransitionKernel,
    projection: &Projection,
    base: &VertexId,
    radius: usize,
) -> Result<ProjectionCheck> {
    let rows = explore_ball(kernel_u, base, radius)?;
    let types = projection.type_count() as usize;
    // representative quotient row per label: label -> (vertex, row over types)
    let mut reps: BTreeMap<u32, (VertexId, Vec<f64>)> = BTreeMap::new();
    for (v, row) in &rows {
        let Some(label) = projection.label(v) else {
            continue; // outside the labeled table: skip quietly
        };
        let mut quotient = vec![0.0; types];
        let mut labeled_fully = true;
        for (w, p) in row {
            match projection.label(w) {
                Some(target) => quotient[target as usize] += p,
                None => {
                    labeled_fully = false;
                    break;
                }
            }
        }
        if !labeled_fully {
            continue;
        }
        match reps.get(&label) {
            None => {
                reps.insert(label, (v.clone(), quotient));
            }
            Some((rep_v, rep_row)) => {
                for (t, (&a, &b)) in rep_row.iter().zip(&quotient).enumerate() {
                    if (a - b).abs() > ROW_TOLERANCE {
                        return Ok(ProjectionCheck::Failed {
                            witness: ProjectionWitness {
                                vertex_a: rep_v.to_string(),
                                vertex_b: v.to_string(),
                                label,
                                target_type: t as u32,
                                mass_a: a,
                                mass_b: b,
                            },
                        });
                    }
                }
            }
        }
    }
    let missing: Vec<u32> = (0..projection.type_count())
        .filter(|t| !reps.contains_key(t))
        .collect();
    if !missing.is_empty() {
        return Ok(ProjectionCheck::Inconclusive {
            missing_types: missing,
            radius,
        });
    }
    let rows_out: Vec<Vec<f64>> = reps.into_values().map(|(_, row)| row).collect();
    Ok(ProjectionCheck::Passed {
        quotient: QuotientMatrix {
            type_count: projection.type_count(),
            rows: rows_out,
        },
        radius,
    })
}

/// The quotient kernel on types; errors unless the projection check passes.
pub fn quotient_kernel(
    kernel_u: &dyn TransitionKernel,
    projection: &Projection,
    base: &VertexId,
    radius: usize,
) -> Result<QuotientMatrix> {
    match check_projection(kernel_u, projection, base, radius)? {
        ProjectionCheck::Passed { quotient, .. } => Ok(quotient),
        ProjectionCheck::Failed { witness } => Err(Error::Projection(format!(
            "rows differ at {} vs {} (label {}, type {}): {} vs {}",
            witness.vertex_a,
            witness.vertex_b,
            witness.label,
            witness.target_type,
            witness.mass_a,
            witness.mass_b
        ))),
        ProjectionCheck::Inconclusive { missing_types, .. } => Err(Error::Projection(format!(
            "labels {missing_types:?} not seen within the ball"
        ))),
    }
}

/// Label table stable under quotient-row signatures, found by iterated
/// splitting on the ball. Classes only ever split, never merge. Vertices
/// whose row leaves the explored ball are frozen: they keep their row-sum
/// label and never cause a split, so edge truncation does not cascade
/// inward. The table can still be finer than the minimal projection when
/// types would only merge beyond the radius.
pub fn refine_projection(
    kernel_u: &dyn TransitionKernel,
    base: &VertexId,
    radius: usize,
    max_types: u32,
) -> Result<Projection> {
    let rows = explore_ball(kernel_u, base, radius)?;
    // Initial partition: quantized row sums.
    let mut labels: BTreeMap<VertexId, u32> = BTreeMap::new();
    {
        let mut by_sum: BTreeMap<i64, u32> = BTreeMap::new();
        for (v, row) in &rows {
            let sum: f64 = row.iter().map(|(_, p)| p).sum();
            let next = by_sum.len() as u32;
            let label = *by_sum.entry(quantize(sum)).or_insert(next);
            labels.insert(v.clone(), label);
        }
    }
    let mut next_label = labels.values().max().map_or(0, |&l| l + 1);
    loop {
        let mut split_happened = false;
        // Signatures of interior vertices (whole row labeled), per class.
        let mut groups: BTreeMap<u32, BTreeMap<Vec<i64>, Vec<VertexId>>> = BTreeMap::new();
        for (v, row) in &rows {
            let mut mass: BTreeMap<u32, f64> = BTreeMap::new();
            let mut interior = true;
            for (w, p) in row {
                match labels.get(w) {
                    Some(&l) => *mass.entry(l).or_insert(0.0) += p,
                    None => {
                        interior = false;
                        break;
                    }
                }
            }
            if !interior {
                continue; // frozen at its current label
            }
            let mut sig: Vec<i64> = Vec::with_capacity(2 * mass.len());
            for (label, m) in mass {
                sig.push(label as i64);
                sig.push(quantize(m));
            }
            groups
                .entry(labels[v])
                .or_default()
                .entry(sig)
                .or_default()
                .push(v.clone());
        }
        for (_, sigs) in groups {
            if sigs.len() <= 1 {
                continue;
            }
            // The group holding the smallest vertex keeps the label.
            let keep_sig = sigs
                .iter()
                .min_by_key(|(_, members)| members.first().cloned())
                .map(|(sig, _)| sig.clone())
                .expect("nonempty");
            for (sig, members) in sigs {
                if sig == keep_sig {
                    continue;
                }
                split_happened = true;
                for v in members {
                    labels.insert(v, next_label);
                }
                next_label += 1;
                if next_label > max_types {
                    return Err(Error::Projection(format!(
                        "refinement exceeded {max_types} types"
                    )));
                }
            }
        }
        if !split_happened {
            break;
        }
    }
    // Canonicalize to 0..k in order of first appearance over sorted vertices.
    let mut canon: BTreeMap<u32, u32> = BTreeMap::new();
    for l in labels.values() {
        let next = canon.len() as u32;
        canon.entry(*l).or_insert(next);
    }
    let type_count = canon.len() as u32;
    let labels = labels.into_iter().map(|(v, l)| (v, canon[&l])).collect();
    Ok(Projection::Table { labels, type_count })
}

fn quantize(x: f64) -> i64 {
    (x / ROW_TOLERANCE).round() as i64
}

/// Persistence threshold from the stay-probability root:
/// `m_1 = 1 / lim (sum_y p_U^(n)(x,y))^(1/n)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub m1: f64,
    pub stay_root: ZetaEstimate,
}

pub fn m1_threshold(
    kernel_u: &dyn TransitionKernel,
    x: &VertexId,
    n_max: usize,
) -> Result<ThresholdEstimate> {
    let stay_root = zeta_estimate_kernel(kernel_u, x, n_max)?;
    Ok(ThresholdEstimate {
        m1: 1.0 / stay_root.value,
        stay_root,
    })
}

/// The three persistence regimes in the offspring mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `m <= phi_U/rho_U`: the induced walk dies out globally
    /// (exact threshold for one-type projections, lower bound in general).
    GlobalExtinction,
    /// `phi_U/rho_U < m <= 1/rho_U`: global persistence possible, local not.
    GlobalNotLocal,
    /// `m > 1/rho_U`: local persistence becomes possible.
    LocalPossible,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub regime: Regime,
    pub m: f64,
    /// `phi_U / rho_U`.
    pub m1: f64,
    /// `1 / rho_U`.
    pub inv_rho_u: f64,
}

/// Classifies the offspring mean against the two spectral thresholds.
pub fn classify_regime(m: f64, summary: &SpectralSummary) -> Result<RegimeLabel> {
    if m <= 1.0 {
        return Err(Error::SubcriticalMean { m });
    }
    summary.validate()?;
    let m1 = summary.m1;
    let inv_rho = 1.0 / summary.rho_u;
    let regime = if m <= m1 {
        Regime::GlobalExtinction
    } else if m <= inv_rho {
        Regime::GlobalNotLocal
    } else {
        Regime::LocalPossible
    };
    Ok(RegimeLabel {
        regime,
        m,
        m1,
        inv_rho_u: inv_rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{restrict, FullGraph};
    use crate::product::ProductSpec;
    use crate::tree::TreeSpec;
    use crate::vertex::FactorIndex;

    #[test]
    fn fiber_is_single_type_with_alpha_row() {
        let spec = ProductSpec::srw(3, 100).unwrap();
        let kernel = spec.kernel();
        let fiber = spec.fiber(FactorIndex::Two);
        let pu = restrict(&kernel, &fiber).unwrap();
        let check = check_projection(&pu, &Projection::Single, &spec.base(), 2).unwrap();
        match check {
            ProjectionCheck::Passed { quotient, .. } => {
                assert_eq!(quotient.type_count, 1);
                assert!((quotient.rows[0][0] - 100.0 / 103.0).abs() < 1e-12);
            }
            other => panic!("expected pass, got {other:?}"),
        }
    }

    #[test]
    fn whole_graph_quotient_is_one() {
        let spec = TreeSpec::regular(3).unwrap();
        let kernel = spec.srw_kernel();
        let full = FullGraph::new(VertexId::tree_root());
        let pu = restrict(&kernel, &full).unwrap();
        let q = quotient_kernel(&pu, &Projection::Single, &VertexId::tree_root(), 2).unwrap();
        assert!((q.rows[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn percolation_cluster_fails_single_type_with_witness() {
        use crate::rng::trial_rng;
        use crate::tree::{gw_percolate, TreeSet, TreeSubgraph};
        use crate::vertex::TreeWord;
        use std::sync::Arc;
        let spec = TreeSpec::regular(3).unwrap();
        let mut rng = trial_rng(2024, 3);
        let cluster = gw_percolate(&spec, &[0.7], 6, &mut rng).unwrap();
        assert!(cluster.retained(6) > 0, "cluster died; pick another seed");
        let sub = TreeSubgraph {
            set: Arc::new(TreeSet::Cluster(Arc::new(cluster))),
            base: TreeWord::root(),
        };
        let kernel = spec.srw_kernel();
        let pu = restrict(&kernel, &sub).unwrap();
        let check = check_projection(&pu, &Projection::Single, &VertexId::tree_root(), 4).unwrap();
        match check {
            ProjectionCheck::Failed { witness } => {
                assert_ne!(witness.mass_a, witness.mass_b);
            }
            other => panic!("expected failure with witness, got {other:?}"),
        }
    }

    #[test]
    fn refinement_finds_single_type_on_transitive_fiber() {
        let spec = ProductSpec::srw(3, 4).unwrap();
        let kernel = spec.kernel();
        let fiber = spec.fiber(FactorIndex::Two);
        let pu = restrict(&kernel, &fiber).unwrap();
        let proj = refine_projection(&pu, &spec.base(), 3, 16).unwrap();
        assert_eq!(proj.type_count(), 1);
    }

    #[test]
    fn refinement_splits_subtree_boundary_type() {
        use crate::tree::{TreeSet, TreeSubgraph};
        use crate::vertex::TreeWord;
        // SRW on T_3 restricted to a subtree: the subtree root keeps 2 of 3
        // moves, interior vertices keep all 3. Two row-sum classes at least.
        let spec = TreeSpec::regular(3).unwrap();
        let kernel = spec.srw_kernel();
        let sub = TreeSubgraph::new(
            TreeSet::Subtree {
                root: TreeWord(vec![0]),
            },
            TreeWord(vec![0]),
        );
        let pu = restrict(&kernel, &sub).unwrap();
        let proj = refine_projection(&pu, &VertexId::tree(vec![0]), 4, 16).unwrap();
        assert!(proj.type_count() >= 2);
        // And the inferred projection passes its own check on the inner ball.
        let check = check_projection(&pu, &proj, &VertexId::tree(vec![0]), 3).unwrap();
        assert!(matches!(check, ProjectionCheck::Passed { .. } | ProjectionCheck::Inconclusive { .. }));
    }

    #[test]
    fn depth_mod_projection_on_tree() {
        // Depth parity on the full T_3 walk: quotient rows alternate types.
        let spec = TreeSpec::regular(3).unwrap();
        let kernel = spec.srw_kernel();
        let full = FullGraph::new(VertexId::tree_root());
        let pu = restrict(&kernel, &full).unwrap();
        let q = quotient_kernel(&pu, &Projection::DepthMod(2), &VertexId::tree_root(), 3).unwrap();
        assert_eq!(q.type_count, 2);
        assert!((q.rows[0][1] - 1.0).abs() < 1e-12);
        assert!((q.rows[1][0] + q.rows[1][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regime_classification_on_the_fiber() {
        let spec = ProductSpec::srw(3, 100).unwrap();
        let summary = crate::product::product_spectral_summary(&spec).unwrap().fiber2;
        assert!(matches!(
            classify_regime(1.02, &summary).unwrap().regime,
            Regime::GlobalExtinction
        ));
        assert!(matches!(
            classify_regime(2.0, &summary).unwrap().regime,
            Regime::GlobalNotLocal
        ));
        assert!(matches!(
            classify_regime(6.0, &summary).unwrap().regime,
            Regime::LocalPossible
        ));
        assert!(classify_regime(0.9, &summary).is_err());
        // Monotone in m: labels never move backward.
        let mut last = Regime::GlobalExtinction;
        for m in [1.01, 1.02, 1.03, 1.2, 2.0, 5.0, 5.2, 6.0, 50.0] {
            let regime = classify_regime(m, &summary).unwrap().regime;
            assert!(regime >= last, "regime moved backward at m={m}");
            last = regime;
        }
    }

    #[test]
    fn m1_threshold_fiber_values() {
        let spec = ProductSpec::srw(3, 100).unwrap();
        let radial2 = spec.fiber_radial_restricted(FactorIndex::Two);
        let o = VertexId::tree_root();
        let th2 = m1_threshold(&radial2, &o, 400).unwrap();
        assert!((th2.m1 - 1.03).abs() < 1e-9, "{}", th2.m1);
        let radial1 = spec.fiber_radial_restricted(FactorIndex::One);
        let th1 = m1_threshold(&radial1, &o, 400).unwrap();
        assert!((th1.m1 - 103.0 / 3.0).abs() < 1e-6, "{}", th1.m1);
    }
}
