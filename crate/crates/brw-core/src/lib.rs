//! Branching random walks restricted to subgraphs: transition-kernel algebra
//! on lazily generated infinite graphs, spectral-radius and stay-probability
//! estimators, persistence simulation, finite-type projection checking, and
//! the tree/product constructions the theory is exercised on.
//!
//! The heavy Monte Carlo paths run data-parallel over trials when the
//! `parallel` feature (default) is enabled; results are bit-identical to the
//! sequential fallback because every trial owns a seed-derived stream.

pub mod brw;
pub mod dp;
pub mod error;
pub mod fbrw;
pub mod kernel;
pub mod law;
pub mod product;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod tree;
pub mod vertex;

pub use brw::{
    ks_martingale_check, mean_growth_check, persistence_probability, simulate_induced,
    step_induced, survival_without_visiting, MartingaleReport, ParticleGeneration,
    PersistenceReport, SurvivalReport, TrialOutcome, TrialStatus,
};
pub use error::{Error, Result};
pub use fbrw::{
    check_projection, classify_regime, m1_threshold, quotient_kernel, refine_projection,
    Projection, ProjectionCheck, QuotientMatrix, Regime, RegimeLabel,
};
pub use kernel::{
    check_irreducible_ball, normalize, restrict, FullGraph, KernelKind, Subgraph,
    TransitionKernel,
};
pub use law::{L2LogLReport, L2LogLVerdict, OffspringLaw, TailKind};
pub use product::{
    free_product_thresholds, product_rho_g_estimate, product_spectral_summary, transient_window,
    FactorGroup, FreeProductSpec, ProductSpec, ProductSummary,
};
pub use spectral::{
    green_partial, kernel_identity_check, spectral_radius_estimate, stay_prob, zeta_estimate,
    EstimationMethod, RadiusEstimate, SpectralSummary, ZetaEstimate,
};
pub use stats::MCEstimate;
pub use tree::{
    boundary_certificate, boundary_measure, connected_hull, construct_a_empty,
    edge_breeding_regime, gw_percolate, prune_tree, solve_extinction_recursion, BreedingRegime,
    GwRealization, PruneLevels, PrunedTree, RecursionSolution, SparseDeepSet, TreeSet, TreeSpec,
    TreeSubgraph,
};
pub use vertex::{FactorIndex, TreeWord, VertexId};

/// The edge-breeding offspring law on a degree-`d` vertex (geometric with
/// mean `lambda * d`, children placed uniformly on the neighbors by the
/// walk's kernel).
pub fn edge_breeding_law(lambda: f64, degree: u32) -> Result<OffspringLaw> {
    OffspringLaw::edge_breeding(lambda, degree)
}
